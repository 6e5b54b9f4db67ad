use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BRAIN_RECORD: &str = r#"{"id":"brain","f_ref":"quand notre cerveau chauffe","f_hyp":"comme notre cerveau chauffe","e_hyp_mt":"when our brains chauffe","e_hyp_slt":"as our brains chauffe","e_ref":"when our brain heats up","stem":{"e_hyp_mt":"when our brain chauffe","e_hyp_slt":"as our brain chauffe","e_ref":"when our brain heat up"},"align_src_tgt":"0-0 1-1 2-2 3-3"}"#;

fn wce(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wce"))
        .args(args)
        .current_dir(dir)
        .env_remove("WCE_LOG")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = wce(dir, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wce.toml")
}

fn error_line(o: &Output) -> Value {
    let err = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(err.lines().next().expect("an error line")).expect("first stderr line is JSON")
}

#[test]
fn labels_the_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.jsonl"), format!("{BRAIN_RECORD}\n")).unwrap();
    let run = |task: &str| {
        let out = ok(dir.path(), &["label", "--corpus", "c.jsonl", "--task", task]);
        let v: Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(v["id"], "brain");
        v["labels"]
            .as_array()
            .unwrap()
            .iter()
            .map(|l| l.as_str().unwrap().to_owned())
            .collect::<Vec<_>>()
            .join(" ")
    };
    assert_eq!(run("asr"), "B G G G");
    assert_eq!(run("mt"), "G G G B");
    assert_eq!(run("slt"), "B G G B");
}

#[test]
fn evaluating_gold_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("g.jsonl"),
        "{\"id\":\"a\",\"labels\":[\"G\",\"B\",\"G\"]}\n{\"id\":\"b\",\"labels\":[\"B\",\"G\"]}\n",
    )
    .unwrap();
    let v: Value =
        serde_json::from_str(&ok(dir.path(), &["evaluate", "--pred", "g.jsonl", "--gold", "g.jsonl"])).unwrap();
    assert_eq!(v["mean_f"], 1.0);
    assert_eq!(v["n_tokens"], 5);
}

#[test]
fn pipeline_on_the_bundled_corpus_beats_the_majority_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = bundled_config();
    let c = cfg.to_str().unwrap();
    ok(
        d,
        &[
            "--config",
            c,
            "extract",
            "--task",
            "slt",
            "--range",
            "0..150",
            "--with-labels",
            "-o",
            "train.tsv",
        ],
    );
    ok(
        d,
        &[
            "--config", c, "extract", "--task", "slt", "--range", "150..", "-o", "test.tsv",
        ],
    );
    ok(
        d,
        &[
            "--config",
            c,
            "label",
            "--task",
            "slt",
            "--range",
            "150..",
            "-o",
            "gold.jsonl",
        ],
    );
    ok(
        d,
        &["--config", c, "train", "--features", "train.tsv", "-o", "model.crf"],
    );
    ok(
        d,
        &[
            "predict",
            "--model",
            "model.crf",
            "--features",
            "test.tsv",
            "--ids",
            "gold.jsonl",
            "-o",
            "pred.jsonl",
        ],
    );
    let v: Value = serde_json::from_str(&ok(d, &["evaluate", "--pred", "pred.jsonl", "--gold", "gold.jsonl"])).unwrap();
    let (f, base) = (v["mean_f"].as_f64().unwrap(), v["majority_mean_f"].as_f64().unwrap());
    assert!(f >= base + 0.10, "mean F {f} vs majority {base}");

    let csv = ok(
        d,
        &["sweep", "--pred", "pred.jsonl", "--gold", "gold.jsonl", "--steps", "4"],
    );
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("threshold,f_good,f_bad,mean_f"));

    // training twice gives the same model bytes
    ok(
        d,
        &["--config", c, "train", "--features", "train.tsv", "-o", "model2.crf"],
    );
    assert_eq!(
        fs::read(d.join("model.crf")).unwrap(),
        fs::read(d.join("model2.crf")).unwrap()
    );
}

#[test]
fn fusion_uses_the_corpus_alignment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.jsonl"), format!("{BRAIN_RECORD}\n")).unwrap();
    fs::write(
        d.join("a.jsonl"),
        "{\"id\":\"brain\",\"labels\":[\"G\",\"G\",\"G\",\"G\"],\"p_good\":[0.9,0.8,0.8,0.6]}\n",
    )
    .unwrap();
    fs::write(
        d.join("m.jsonl"),
        "{\"id\":\"brain\",\"labels\":[\"B\",\"G\",\"G\",\"G\"],\"p_good\":[0.4,0.8,0.8,0.6]}\n",
    )
    .unwrap();
    let run = |alpha: &str| -> Value {
        serde_json::from_str(
            ok(
                d,
                &[
                    "fuse", "--corpus", "c.jsonl", "--asr", "a.jsonl", "--mt", "m.jsonl", "--alpha", alpha,
                ],
            )
            .trim(),
        )
        .unwrap()
    };
    assert_eq!(run("1")["p_good"], serde_json::json!([0.9, 0.8, 0.8, 0.6]));
    assert_eq!(run("0")["p_good"], serde_json::json!([0.4, 0.8, 0.8, 0.6]));
    let p0 = run("0.5")["p_good"][0].as_f64().unwrap();
    let expect = (0.9f64 * 0.4).sqrt() / ((0.9f64 * 0.4).sqrt() + (0.1f64 * 0.6).sqrt());
    assert!((p0 - expect).abs() < 1e-12);
}

#[test]
fn outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(d, &["synth", "--dir", "s", "--utterances", "20", "--seed", "7"]);
        let c = d.join("s/wce.toml");
        let c = c.to_str().unwrap();
        ok(d, &["--config", c, "label", "--task", "mt", "-o", "labels.jsonl"]);
        ok(
            d,
            &[
                "--config",
                c,
                "extract",
                "--task",
                "asr",
                "--with-labels",
                "-o",
                "asr.tsv",
            ],
        );
    }
    for f in [
        "s/corpus.jsonl",
        "s/source.arpa",
        "s/target.arpa",
        "s/synonyms.tsv",
        "s/wce.toml",
        "labels.jsonl",
        "asr.tsv",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn stats_reports_two_decimals_in_text() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("g.jsonl"),
        "{\"id\":\"a\",\"labels\":[\"G\",\"B\",\"G\"]}\n",
    )
    .unwrap();
    let text = ok(dir.path(), &["stats", "--labels", "g.jsonl", "--text"]);
    assert_eq!(text, "G\t2\t66.67%\nB\t1\t33.33%\n");
    let v: Value = serde_json::from_str(&ok(dir.path(), &["stats", "--labels", "g.jsonl"])).unwrap();
    assert!((v["pct_bad"].as_f64().unwrap() - 100.0 / 3.0).abs() < 1e-9);
}

#[test]
fn rescoring_with_zero_weights_keeps_the_one_best() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("l.txt"), "NODES 3\n0 1 the 1\n1 2 cat 1\n1 2 hat 1.5\n").unwrap();
    fs::write(d.join("c.tsv"), "cat\tB\n").unwrap();
    let run = |r: &str, p: &str| -> Value {
        serde_json::from_str(&ok(
            d,
            &[
                "rescore",
                "--lattice",
                "l.txt",
                "--confidence",
                "c.tsv",
                "--reward",
                r,
                "--penalty",
                p,
            ],
        ))
        .unwrap()
    };
    let v = run("0", "0");
    assert_eq!(v["changed"], false);
    assert_eq!(v["best"]["words"], serde_json::json!(["the", "cat"]));
    let v = run("0", "1");
    assert_eq!(v["best"]["words"], serde_json::json!(["the", "hat"]));
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |o: &Output| o.status.code().unwrap();

    let o = wce(d, &["no-such-command"]);
    assert_eq!(code(&o), 1);
    assert_eq!(error_line(&o)["error"]["kind"], "usage");

    fs::write(d.join("bad.toml"), "treshold = 0.5\n").unwrap();
    let o = wce(d, &["--config", "bad.toml", "stats", "--labels", "x"]);
    assert_eq!(code(&o), 1);
    assert_eq!(error_line(&o)["error"]["kind"], "config");

    let o = wce(d, &["evaluate", "--pred", "missing.jsonl", "--gold", "missing.jsonl"]);
    assert_eq!(code(&o), 2);
    assert_eq!(error_line(&o)["error"]["kind"], "io");

    fs::write(d.join("cyc.txt"), "NODES 2\n0 1 a 1\n1 0 b 1\n").unwrap();
    let o = wce(
        d,
        &["rescore", "--lattice", "cyc.txt", "--reward", "1", "--penalty", "1"],
    );
    assert_eq!(code(&o), 2);
    assert_eq!(error_line(&o)["error"]["kind"], "validation");

    fs::write(d.join("g.jsonl"), "{\"id\":\"a\",\"labels\":[\"G\",\"X\"]}\n").unwrap();
    let o = wce(d, &["evaluate", "--pred", "g.jsonl", "--gold", "g.jsonl"]);
    assert_eq!(code(&o), 2);
    assert_eq!(error_line(&o)["error"]["kind"], "parse");

    let o = wce(d, &["rescore", "--lattice", "cyc.txt"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("reward"));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = wce(dir.path(), &["--help"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("rescore"));
}

//! Sequential backward selection over named feature columns.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Size of the subset after the removal.
    pub k: usize,
    pub removed: String,
    pub mean_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SbsResult {
    pub removal_order: Vec<String>,
    /// Rank 1 is the feature removed last.
    pub ranks: BTreeMap<String, usize>,
    pub best_subset: Vec<String>,
    pub best_mean_f: f64,
    pub curve: Vec<CurvePoint>,
    pub evaluations: usize,
}

/// Repeatedly drops the feature whose removal gives the highest objective,
/// until no feature is left. Ties go to the lexicographically smallest name.
/// Candidate subsets of one round may be evaluated in parallel; the choice is
/// made sequentially in name order.
pub fn sbs<F>(features: &[String], objective: F, parallel: bool) -> Result<SbsResult>
where
    F: Fn(&[String]) -> Result<f64> + Sync,
{
    if features.is_empty() {
        return Err(Error::validation("feature selection needs at least one feature"));
    }
    let mut current: Vec<String> = features.to_vec();
    current.sort();
    if current.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::validation("feature names must be unique"));
    }
    let n = current.len();
    let eval = |subset: Vec<String>| -> Result<(Vec<String>, f64)> {
        match objective(&subset) {
            Ok(v) if v.is_finite() => Ok((subset, v)),
            Ok(v) => Err(Error::Objective {
                subset,
                message: format!("objective returned {v}"),
            }),
            Err(e @ Error::Objective { .. }) => Err(e),
            Err(e) => Err(Error::Objective {
                subset,
                message: e.to_string(),
            }),
        }
    };
    let mut removal_order = Vec::with_capacity(n);
    let mut curve = Vec::with_capacity(n);
    let mut best: Option<(Vec<String>, f64)> = None;
    let mut evaluations = 0;
    while !current.is_empty() {
        let candidates: Vec<Vec<String>> = (0..current.len())
            .map(|i| {
                let mut s = current.clone();
                s.remove(i);
                s
            })
            .collect();
        let results: Vec<(Vec<String>, f64)> = if parallel {
            candidates.into_par_iter().map(eval).collect::<Result<_>>()?
        } else {
            candidates.into_iter().map(eval).collect::<Result<_>>()?
        };
        evaluations += results.len();
        let mut pick = 0;
        for (i, r) in results.iter().enumerate() {
            if r.1 > results[pick].1 {
                pick = i;
            }
            if best.as_ref().is_none_or(|b| r.1 > b.1) {
                best = Some(r.clone());
            }
        }
        let removed = current.remove(pick);
        log::debug!("sbs: removed `{removed}`, mean F {:.4}", results[pick].1);
        curve.push(CurvePoint {
            k: current.len(),
            removed: removed.clone(),
            mean_f: results[pick].1,
        });
        removal_order.push(removed);
    }
    let ranks = removal_order
        .iter()
        .enumerate()
        .map(|(i, f)| (f.clone(), n - i))
        .collect();
    let (best_subset, best_mean_f) = best.expect("at least one evaluation");
    Ok(SbsResult {
        removal_order,
        ranks,
        best_subset,
        best_mean_f,
        curve,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn call_count_and_order() {
        // objective: weights per feature, subset score is the sum
        let w = |f: &str| match f {
            "a" => 0.1,
            "b" => 0.5,
            "c" => 0.3,
            _ => 0.0,
        };
        let calls = AtomicUsize::new(0);
        let r = sbs(
            &names(&["c", "a", "b"]),
            |s| {
                calls.fetch_add(1, Ordering::SeqCst);
                Ok(s.iter().map(|f| w(f)).sum())
            },
            false,
        )
        .unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 6);
        assert_eq!(r.evaluations, 6);
        assert_eq!(r.removal_order, names(&["a", "c", "b"]));
        assert_eq!(r.ranks["b"], 1);
        assert_eq!(r.ranks["a"], 3);
        assert_eq!(r.curve.len(), 3);
        assert_eq!(r.curve.iter().map(|p| p.k).collect::<Vec<_>>(), [2, 1, 0]);
        assert_eq!(r.best_subset, names(&["b", "c"]));
    }

    #[test]
    fn ties_and_all_zero_remove_smallest_name() {
        let r = sbs(&names(&["z", "m", "b"]), |_| Ok(0.0), true).unwrap();
        assert_eq!(r.removal_order, names(&["b", "m", "z"]));
    }

    #[test]
    fn single_feature() {
        let r = sbs(&names(&["only"]), |s| Ok(if s.is_empty() { 0.25 } else { 1.0 }), false).unwrap();
        assert_eq!(r.removal_order, names(&["only"]));
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.curve[0].mean_f, 0.25);
    }

    #[test]
    fn objective_errors_carry_the_subset() {
        let err = sbs(
            &names(&["a", "b"]),
            |s| {
                if s == ["a"] {
                    Err(Error::Numeric("boom".into()))
                } else {
                    Ok(0.5)
                }
            },
            false,
        )
        .unwrap_err();
        match err {
            Error::Objective { subset, .. } => assert_eq!(subset, names(&["a"])),
            e => panic!("unexpected {e}"),
        }
        assert!(sbs(&names(&["a", "a"]), |_| Ok(0.0), false).is_err());
    }
}

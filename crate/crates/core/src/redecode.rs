//! Confidence-driven rescoring of translation lattices.
//!
//! Lattice text format:
//!
//! ```text
//! NODES 4
//! START 0
//! END 3
//! 0 1 the 1.5
//! 1 3 cat 0.7
//! ```
//!
//! `START`/`END` default to the first and last node; `#` starts a comment.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub word: String,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    n_nodes: usize,
    edges: Vec<Edge>,
    start: usize,
    end: usize,
    topo: Vec<usize>,
}

impl Lattice {
    /// Checks that the graph is acyclic, costs are finite and every node lies
    /// on some start-to-end path.
    pub fn new(n_nodes: usize, edges: Vec<Edge>, start: usize, end: usize) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::validation("lattice has no nodes"));
        }
        if start >= n_nodes || end >= n_nodes {
            return Err(Error::validation("start/end node out of range"));
        }
        for (k, e) in edges.iter().enumerate() {
            if e.from >= n_nodes || e.to >= n_nodes {
                return Err(Error::validation(format!("edge {k} references a node out of range")));
            }
            if !e.cost.is_finite() {
                return Err(Error::validation(format!("edge {k} has a non-finite cost")));
            }
        }
        let topo = topological_order(n_nodes, &edges)?;
        let fwd = reach(n_nodes, &edges, start, false);
        if !fwd[end] {
            return Err(Error::validation(format!(
                "end node {end} is unreachable from start node {start}"
            )));
        }
        let bwd = reach(n_nodes, &edges, end, true);
        if let Some(v) = (0..n_nodes).find(|&v| !(fwd[v] && bwd[v])) {
            return Err(Error::validation(format!("node {v} is not on any start-to-end path")));
        }
        Ok(Lattice {
            n_nodes,
            edges,
            start,
            end,
            topo,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("NODES {}\nSTART {}\nEND {}\n", self.n_nodes, self.start, self.end);
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {} {}", e.from, e.to, e.word, e.cost);
        }
        s
    }
}

fn topological_order(n: usize, edges: &[Edge]) -> Result<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![vec![]; n];
    for e in edges {
        indeg[e.to] += 1;
        out[e.from].push(e.to);
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &w in &out[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert(w);
            }
        }
    }
    if order.len() != n {
        return Err(Error::validation("lattice contains a cycle"));
    }
    Ok(order)
}

fn reach(n: usize, edges: &[Edge], from: usize, reverse: bool) -> Vec<bool> {
    let mut adj: Vec<Vec<usize>> = vec![vec![]; n];
    for e in edges {
        if reverse {
            adj[e.to].push(e.from);
        } else {
            adj[e.from].push(e.to);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

pub fn parse_lattice(text: &str) -> Result<Lattice> {
    let mut n_nodes = None;
    let (mut start, mut end) = (None, None);
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let int = |s: &str, field: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(k + 1, field, format!("`{s}` is not a node id")))
        };
        match f[0] {
            "NODES" if f.len() == 2 => n_nodes = Some(int(f[1], "NODES")?),
            "START" if f.len() == 2 => start = Some(int(f[1], "START")?),
            "END" if f.len() == 2 => end = Some(int(f[1], "END")?),
            _ if f.len() == 4 => {
                if n_nodes.is_none() {
                    return Err(Error::parse(k + 1, "NODES", "the `NODES n` header must come first"));
                }
                edges.push(Edge {
                    from: int(f[0], "from")?,
                    to: int(f[1], "to")?,
                    word: f[2].to_owned(),
                    cost: f[3]
                        .parse()
                        .map_err(|_| Error::parse(k + 1, "cost", format!("`{}` is not a number", f[3])))?,
                });
            }
            _ => return Err(Error::parse(k + 1, "edge", "expected `from to word cost`")),
        }
    }
    let n = n_nodes.ok_or_else(|| Error::parse(1, "NODES", "missing `NODES n` header"))?;
    Lattice::new(n, edges, start.unwrap_or(0), end.unwrap_or(n.saturating_sub(1)))
}

pub fn read_lattice(path: impl AsRef<Path>) -> Result<Lattice> {
    parse_lattice(&crate::data::open_text(path.as_ref())?)
}

/// Per-word confidence used to adjust edge costs. Words not listed get no
/// adjustment.
#[derive(Clone, Debug, PartialEq)]
pub enum Confidence {
    Labels(HashMap<String, Label>),
    /// p_good per word.
    Probabilities(HashMap<String, f64>),
}

impl Confidence {
    pub fn none() -> Self {
        Confidence::Labels(HashMap::new())
    }

    /// Cost change for `word`: G earns `-reward`, B pays `+penalty`. With
    /// probabilities, `-reward * (2p - 1)` above 0.5 and `+penalty * (1 - 2p)`
    /// below.
    pub fn adjustment(&self, word: &str, reward: f64, penalty: f64) -> f64 {
        match self {
            Confidence::Labels(m) => match m.get(word) {
                Some(Label::G) => -reward,
                Some(Label::B) => penalty,
                None => 0.0,
            },
            Confidence::Probabilities(m) => match m.get(word) {
                Some(&p) if p >= 0.5 => -reward * (2.0 * p - 1.0),
                Some(&p) => penalty * (1.0 - 2.0 * p),
                None => 0.0,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestPath {
    pub edges: Vec<usize>,
    pub words: Vec<String>,
    pub cost: f64,
}

pub fn rescore(lat: &Lattice, conf: &Confidence, reward: f64, penalty: f64) -> Result<BestPath> {
    if !(reward.is_finite() && reward >= 0.0 && penalty.is_finite() && penalty >= 0.0) {
        return Err(Error::config("reward and penalty must be finite and >= 0"));
    }
    let cost: Vec<f64> = lat
        .edges
        .iter()
        .map(|e| e.cost + conf.adjustment(&e.word, reward, penalty))
        .collect();
    let mut out: Vec<Vec<usize>> = vec![vec![]; lat.n_nodes];
    for (k, e) in lat.edges.iter().enumerate() {
        out[e.from].push(k);
    }
    let mut dist = vec![f64::INFINITY; lat.n_nodes];
    let mut via: Vec<Option<usize>> = vec![None; lat.n_nodes];
    dist[lat.start] = 0.0;
    for &v in &lat.topo {
        if dist[v].is_infinite() {
            continue;
        }
        for &k in &out[v] {
            let w = lat.edges[k].to;
            let d = dist[v] + cost[k];
            if d < dist[w] {
                dist[w] = d;
                via[w] = Some(k);
            }
        }
    }
    let mut edges = Vec::new();
    let mut v = lat.end;
    while v != lat.start {
        let k = via[v].ok_or_else(|| Error::validation("end node is unreachable"))?;
        edges.push(k);
        v = lat.edges[k].from;
    }
    edges.reverse();
    Ok(BestPath {
        words: edges.iter().map(|&k| lat.edges[k].word.clone()).collect(),
        cost: dist[lat.end],
        edges,
    })
}

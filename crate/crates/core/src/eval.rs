//! Held-out evaluation (distinct nodes influenced) and the ranking baselines.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::corpus::{CascadeCorpus, EdgeList, NodeId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationResult {
    /// Number of distinct seeds evaluated.
    pub seed_set_size: usize,
    pub dni: usize,
    /// New nodes each seed adds, in seed order. Repeated seeds add zero.
    pub per_seed: Vec<(NodeId, usize)>,
    /// DNI of each seed prefix.
    pub cumulative: Vec<usize>,
}

/// Distinct participants across all test cascades started by the seeds.
/// Initiators are not counted as influenced unless they participate in
/// another seed's cascade.
pub fn dni(seeds: &[NodeId], test: &CascadeCorpus) -> EvaluationResult {
    let mut by_initiator: HashMap<&NodeId, Vec<usize>> = HashMap::new();
    for (c, cascade) in test.cascades().iter().enumerate() {
        by_initiator.entry(cascade.initiator()).or_default().push(c);
    }
    let mut reached: HashSet<&NodeId> = HashSet::new();
    let mut used: HashSet<&NodeId> = HashSet::new();
    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut cumulative = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let before = reached.len();
        if used.insert(seed) {
            for &c in by_initiator.get(seed).into_iter().flatten() {
                reached.extend(test.cascades()[c].events().iter().map(|e| &e.node));
            }
        }
        per_seed.push((seed.clone(), reached.len() - before));
        cumulative.push(reached.len());
    }
    EvaluationResult {
        seed_set_size: used.len(),
        dni: reached.len(),
        per_seed,
        cumulative,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    KCore,
    AvgCascadeSize,
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineMethod::KCore => "kcore",
            BaselineMethod::AvgCascadeSize => "avgsize",
        })
    }
}

/// Nodes with scores, highest first, ties by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedBaseline {
    pub method: BaselineMethod,
    pub ranking: Vec<(NodeId, f64)>,
}

impl RankedBaseline {
    fn new(method: BaselineMethod, mut ranking: Vec<(NodeId, f64)>) -> Self {
        ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        RankedBaseline { method, ranking }
    }

    pub fn top(&self, size: usize) -> Vec<NodeId> {
        self.ranking.iter().take(size).map(|(id, _)| id.clone()).collect()
    }
}

/// Core number of every node of the undirected simple graph underlying
/// `edges`, by bucket-queue peeling.
pub fn core_numbers(edges: &EdgeList) -> Vec<(NodeId, usize)> {
    let mut index: HashMap<&NodeId, usize> = HashMap::new();
    let mut ids: Vec<&NodeId> = Vec::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for (s, d) in edges.edges() {
        let mut get = |id| {
            *index.entry(id).or_insert_with(|| {
                ids.push(id);
                adj.push(Vec::new());
                ids.len() - 1
            })
        };
        let (a, b) = (get(s), get(d));
        let key = (a.min(b), a.max(b));
        if a != b && seen.insert(key) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }

    let n = adj.len();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let max_degree = degree.iter().copied().max().unwrap_or(0);
    // bin[d] = start of degree-d block in `vert`
    let mut bin = vec![0usize; max_degree + 1];
    for &d in &degree {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[degree[v]];
        vert[pos[v]] = v;
        bin[degree[v]] += 1;
    }
    for d in (1..=max_degree).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = vert[i];
        for k in 0..adj[v].len() {
            let u = adj[v][k];
            if degree[u] > degree[v] {
                let du = degree[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    vert.swap(pu, pw);
                    pos[u] = pw;
                    pos[w] = pu;
                }
                bin[du] += 1;
                degree[u] -= 1;
            }
        }
    }
    ids.into_iter().cloned().zip(degree).collect()
}

/// Nodes ranked by core number.
pub fn kcore_ranking(edges: &EdgeList) -> RankedBaseline {
    RankedBaseline::new(
        BaselineMethod::KCore,
        core_numbers(edges)
            .into_iter()
            .map(|(id, k)| (id, k as f64))
            .collect(),
    )
}

/// Initiators ranked by the mean participant count of their train cascades.
pub fn avg_size_ranking(train: &CascadeCorpus) -> RankedBaseline {
    let mut totals: HashMap<&NodeId, (usize, usize)> = HashMap::new();
    for c in train.cascades() {
        let t = totals.entry(c.initiator()).or_default();
        t.0 += c.len();
        t.1 += 1;
    }
    RankedBaseline::new(
        BaselineMethod::AvgCascadeSize,
        totals
            .into_iter()
            .map(|(id, (size, count))| (id.clone(), size as f64 / count as f64))
            .collect(),
    )
}

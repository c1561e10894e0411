//! Cascade logs: parsing, validation, dense indexing, persistence and the
//! temporal train/test split.
//!
//! The on-disk format is one cascade per line:
//!
//! ```text
//! <initiator>:<start_time>\t<node>:<time> <node>:<time> ...
//! ```
//!
//! Event times are absolute. Lines beginning with `#` and blank lines are
//! skipped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Opaque node identifier. Never empty, never contains whitespace or `:`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidArgument("empty node id".into()));
        }
        if id.chars().any(|c| c.is_whitespace() || c == ':') {
            return Err(Error::InvalidArgument(format!(
                "node id {id:?} contains whitespace or ':'"
            )));
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeId::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeEvent {
    pub node: NodeId,
    pub time: u64,
}

/// One initiator and the time-ordered participants who copied it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cascade {
    initiator: NodeId,
    start_time: u64,
    events: Vec<CascadeEvent>,
}

impl Cascade {
    /// Validates and normalizes a cascade: events are stably sorted by time,
    /// only the earliest occurrence of a participant is kept, and events by
    /// the initiator itself are dropped.
    pub fn new(initiator: NodeId, start_time: u64, events: Vec<CascadeEvent>) -> Result<Self> {
        Self::validated(initiator, start_time, events, 0)
    }

    fn validated(
        initiator: NodeId,
        start_time: u64,
        mut events: Vec<CascadeEvent>,
        line: usize,
    ) -> Result<Self> {
        if let Some(bad) = events.iter().find(|e| e.time < start_time) {
            return Err(Error::TimeOrderViolation {
                line,
                node: bad.node.to_string(),
                time: bad.time,
                start: start_time,
            });
        }
        events.sort_by_key(|e| e.time);
        let mut seen = HashSet::with_capacity(events.len());
        events.retain(|e| e.node != initiator && seen.insert(e.node.clone()));
        if events.is_empty() {
            return Err(Error::EmptyCascade { line });
        }
        Ok(Cascade {
            initiator,
            start_time,
            events,
        })
    }

    pub fn initiator(&self) -> &NodeId {
        &self.initiator
    }

    pub fn start_time(&self) -> u64 {
        self.start_time
    }

    pub fn events(&self) -> &[CascadeEvent] {
        &self.events
    }

    /// Number of participants (the initiator is not counted).
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Copying delays `t_v - t_u`, in event order.
    pub fn delays(&self) -> impl Iterator<Item = u64> + '_ {
        self.events.iter().map(move |e| e.time - self.start_time)
    }
}

/// A cascade re-expressed with dense indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedCascade {
    /// Dense influencer index of the initiator.
    pub influencer: usize,
    /// Dense node index of each participant, in event order.
    pub nodes: Vec<usize>,
    /// Copying delay of each participant, aligned with `nodes`.
    pub delays: Vec<u64>,
}

/// An immutable set of cascades with dense node and influencer indices.
///
/// Node indices cover every node that appears anywhere (as initiator or
/// participant) in first-appearance order; influencer indices cover the
/// initiators, also in first-appearance order.
#[derive(Debug, Clone)]
pub struct CascadeCorpus {
    cascades: Vec<Cascade>,
    indexed: Vec<IndexedCascade>,
    nodes: Vec<NodeId>,
    node_lookup: HashMap<NodeId, usize>,
    influencers: Vec<usize>,
    influencer_lookup: HashMap<usize, usize>,
}

impl CascadeCorpus {
    pub fn from_cascades(cascades: Vec<Cascade>) -> Self {
        let mut nodes = Vec::new();
        let mut node_lookup = HashMap::new();
        let mut influencers = Vec::new();
        let mut influencer_lookup = HashMap::new();
        let mut intern = |id: &NodeId, nodes: &mut Vec<NodeId>| -> usize {
            *node_lookup.entry(id.clone()).or_insert_with(|| {
                nodes.push(id.clone());
                nodes.len() - 1
            })
        };

        let mut indexed = Vec::with_capacity(cascades.len());
        for cascade in &cascades {
            let init = intern(&cascade.initiator, &mut nodes);
            let influencer = *influencer_lookup.entry(init).or_insert_with(|| {
                influencers.push(init);
                influencers.len() - 1
            });
            let event_nodes = cascade
                .events
                .iter()
                .map(|e| intern(&e.node, &mut nodes))
                .collect();
            indexed.push(IndexedCascade {
                influencer,
                nodes: event_nodes,
                delays: cascade.delays().collect(),
            });
        }

        CascadeCorpus {
            cascades,
            indexed,
            nodes,
            node_lookup,
            influencers,
            influencer_lookup,
        }
    }

    pub fn cascades(&self) -> &[Cascade] {
        &self.cascades
    }

    pub fn indexed(&self) -> &[IndexedCascade] {
        &self.indexed
    }

    pub fn len(&self) -> usize {
        self.cascades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cascades.is_empty()
    }

    /// N: number of distinct nodes.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// I: number of distinct initiators.
    pub fn num_influencers(&self) -> usize {
        self.influencers.len()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &NodeId {
        &self.nodes[index]
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.node_lookup.get(id).copied()
    }

    /// Node id of influencer `index`.
    pub fn influencer(&self, index: usize) -> &NodeId {
        &self.nodes[self.influencers[index]]
    }

    pub fn influencer_ids(&self) -> Vec<NodeId> {
        self.influencers.iter().map(|&n| self.nodes[n].clone()).collect()
    }

    pub fn influencer_index(&self, id: &NodeId) -> Option<usize> {
        self.node_index(id)
            .and_then(|n| self.influencer_lookup.get(&n).copied())
    }
}

impl PartialEq for CascadeCorpus {
    fn eq(&self, other: &Self) -> bool {
        self.cascades == other.cascades
    }
}

fn parse_token(token: &str, line: usize) -> Result<(NodeId, u64)> {
    let (id, time) = token
        .split_once(':')
        .ok_or_else(|| Error::malformed(line, format!("token {token:?} lacks ':'")))?;
    let id = NodeId::new(id).map_err(|_| Error::malformed(line, format!("bad node id in {token:?}")))?;
    if time.is_empty() || !time.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::malformed(line, format!("non-integer time in {token:?}")));
    }
    let time = time
        .parse()
        .map_err(|_| Error::malformed(line, format!("time out of range in {token:?}")))?;
    Ok((id, time))
}

/// Parses one non-comment line into a cascade. `line` is 1-based and only
/// used for error reporting.
pub fn parse_cascade_line(text: &str, line: usize) -> Result<Cascade> {
    let (head, tail) = match text.split_once('\t') {
        Some((h, t)) => (h, t),
        None => (text, ""),
    };
    let (initiator, start) = parse_token(head.trim_end(), line)?;
    let events = tail
        .split_whitespace()
        .map(|tok| parse_token(tok, line).map(|(node, time)| CascadeEvent { node, time }))
        .collect::<Result<Vec<_>>>()?;
    Cascade::validated(initiator, start, events, line)
}

/// Parses a cascade file. Errors carry the 1-based line number.
pub fn parse_cascades<R: BufRead>(reader: R) -> Result<CascadeCorpus> {
    let mut cascades = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim_end_matches(['\r', '\n']);
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        cascades.push(parse_cascade_line(text, i + 1)?);
    }
    Ok(CascadeCorpus::from_cascades(cascades))
}

pub fn parse_cascades_str(text: &str) -> Result<CascadeCorpus> {
    parse_cascades(text.as_bytes())
}

pub fn write_cascades<W: Write>(corpus: &CascadeCorpus, mut out: W) -> Result<()> {
    for c in corpus.cascades() {
        write!(out, "{}:{}\t", c.initiator, c.start_time)?;
        for (k, e) in c.events.iter().enumerate() {
            if k > 0 {
                out.write_all(b" ")?;
            }
            write!(out, "{}:{}", e.node, e.time)?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Sorts cascades by start time (stable, so ties keep input order) and sends
/// the earliest `ceil(train_fraction * len)` to the train side.
pub fn temporal_split(
    corpus: &CascadeCorpus,
    train_fraction: f64,
) -> Result<(CascadeCorpus, CascadeCorpus)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    let total = corpus.len();
    let n_train = ((train_fraction * total as f64) - 1e-9).ceil().max(0.0) as usize;
    let n_train = n_train.min(total);
    if n_train == 0 || n_train == total {
        return Err(Error::DegenerateSplit {
            train: n_train,
            test: total - n_train,
        });
    }
    let mut ordered: Vec<Cascade> = corpus.cascades().to_vec();
    ordered.sort_by_key(|c| c.start_time);
    let test = ordered.split_off(n_train);
    Ok((
        CascadeCorpus::from_cascades(ordered),
        CascadeCorpus::from_cascades(test),
    ))
}

/// Per-initiator exploratory counts: training-set initiation versus
/// participation, and the test-set success measures.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeStats {
    pub cascades_started: usize,
    pub cascades_participated: usize,
    pub test_count: usize,
    pub test_total_size: usize,
    pub test_dni: usize,
}

/// One row per node that initiates a cascade in either corpus, ordered by
/// node id. Initiation and participation are counted disjointly (cascades
/// never list their initiator as a participant).
pub fn initiator_stats(
    train: &CascadeCorpus,
    test: &CascadeCorpus,
) -> BTreeMap<NodeId, NodeStats> {
    let mut rows: BTreeMap<NodeId, NodeStats> = BTreeMap::new();
    for c in train.cascades().iter().chain(test.cascades()) {
        rows.entry(c.initiator.clone()).or_default();
    }
    for c in train.cascades() {
        if let Some(r) = rows.get_mut(&c.initiator) {
            r.cascades_started += 1;
        }
        for e in &c.events {
            if let Some(r) = rows.get_mut(&e.node) {
                r.cascades_participated += 1;
            }
        }
    }
    let mut reached: HashMap<&NodeId, HashSet<&NodeId>> = HashMap::new();
    for c in test.cascades() {
        let r = rows.get_mut(&c.initiator).expect("row created above");
        r.test_count += 1;
        r.test_total_size += c.len();
        reached
            .entry(&c.initiator)
            .or_default()
            .extend(c.events.iter().map(|e| &e.node));
    }
    for (id, set) in reached {
        rows.get_mut(id).expect("row created above").test_dni = set.len();
    }
    rows
}

pub fn write_stats<W: Write>(stats: &BTreeMap<NodeId, NodeStats>, mut out: W) -> Result<()> {
    writeln!(
        out,
        "node\tcascades_started\tcascades_participated\ttest_count\ttest_total_size\ttest_dni"
    )?;
    for (id, s) in stats {
        writeln!(
            out,
            "{id}\t{}\t{}\t{}\t{}\t{}",
            s.cascades_started,
            s.cascades_participated,
            s.test_count,
            s.test_total_size,
            s.test_dni
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Directed edges, self-loops removed and duplicates collapsed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    edges: Vec<(NodeId, NodeId)>,
}

impl EdgeList {
    pub fn new(edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let mut seen = HashSet::new();
        let edges = edges
            .into_iter()
            .filter(|(s, d)| s != d)
            .filter(|e| seen.insert(e.clone()))
            .collect();
        EdgeList { edges }
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

pub fn parse_edges<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut parts = text.split_whitespace();
        let (Some(src), Some(dst), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::malformed(i + 1, "expected `src<TAB>dst`"));
        };
        let src = NodeId::new(src).map_err(|e| Error::malformed(i + 1, e.to_string()))?;
        let dst = NodeId::new(dst).map_err(|e| Error::malformed(i + 1, e.to_string()))?;
        edges.push((src, dst));
    }
    Ok(EdgeList::new(edges))
}

pub fn write_edges<W: Write>(edges: &EdgeList, mut out: W) -> Result<()> {
    for (s, d) in edges.edges() {
        writeln!(out, "{s}\t{d}")?;
    }
    out.flush()?;
    Ok(())
}

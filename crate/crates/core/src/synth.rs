//! Seeded synthetic cascade corpora with planted influencers.
//!
//! Planted influencers start a large share of all cascades, long and fast
//! ones, drawn from a disjoint community of their own. Ordinary initiators
//! start short, slow cascades, mostly among the periphery outside every
//! community, with heavy-tailed activity: the k-th busiest posts with weight
//! 1/k^activity.
//!
//! A follower graph consistent with the communities is emitted alongside,
//! for structural baselines.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Cascade, CascadeCorpus, CascadeEvent, EdgeList, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub nodes: usize,
    pub cascades: usize,
    pub planted: usize,
    /// Fraction of cascades started by a planted influencer.
    pub planted_share: f64,
    /// Community size of each planted influencer.
    pub audience: usize,
    /// Number of ordinary nodes that may initiate.
    pub ordinary_initiators: usize,
    /// Largest ordinary cascade.
    pub ordinary_max_size: usize,
    /// Chance an ordinary participant comes from outside every community.
    pub periphery_bias: f64,
    /// Zipf exponent of ordinary activity; 0 is uniform.
    pub activity: f64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            nodes: 300,
            cascades: 500,
            planted: 5,
            planted_share: 0.3,
            audience: 40,
            ordinary_initiators: 290,
            ordinary_max_size: 3,
            periphery_bias: 0.8,
            activity: 0.7,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: CascadeCorpus,
    pub planted: Vec<NodeId>,
    pub edges: EdgeList,
}

fn node_name(i: usize) -> NodeId {
    NodeId::new(format!("n{i:04}")).expect("generated ids are valid")
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    let c = config;
    if c.planted == 0 || c.cascades == 0 || c.audience == 0 {
        return Err(Error::InvalidArgument(
            "synthetic corpus needs cascades and planted influencers with an audience".into(),
        ));
    }
    if c.planted * (c.audience + 1) >= c.nodes {
        return Err(Error::InvalidArgument(format!(
            "{} nodes cannot hold {} planted communities of {}",
            c.nodes, c.planted, c.audience
        )));
    }
    if !(0.0..=1.0).contains(&c.planted_share) {
        return Err(Error::InvalidArgument("planted share must lie in [0, 1]".into()));
    }
    if !(0.0..=1.0).contains(&c.periphery_bias) {
        return Err(Error::InvalidArgument("periphery bias must lie in [0, 1]".into()));
    }
    if !(c.activity >= 0.0 && c.activity.is_finite()) {
        return Err(Error::InvalidArgument("activity exponent must be finite and >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.rng_seed);

    let mut order: Vec<usize> = (0..c.nodes).collect();
    order.shuffle(&mut rng);
    let (sources, rest) = order.split_at(c.planted);
    let (community, periphery) = rest.split_at(c.planted * c.audience);
    let audiences: Vec<&[usize]> = community.chunks(c.audience).collect();
    let mut ordinary: Vec<usize> = rest.to_vec();
    ordinary.shuffle(&mut rng);
    ordinary.truncate(c.ordinary_initiators.max(1));
    let weights = (1..=ordinary.len()).map(|k| (k as f64).powf(-c.activity));
    let activity = WeightedIndex::new(weights).expect("weights are positive");

    let mut out = Vec::with_capacity(c.cascades);
    for k in 0..c.cascades {
        let start = k as u64 * 60 + rng.gen_range(0..30);
        let (initiator, members) = if rng.gen_bool(c.planted_share) {
            let p = rng.gen_range(0..c.planted);
            let size = rng.gen_range(c.audience * 3 / 8..=c.audience * 7 / 8).max(1);
            let members: Vec<(usize, u64)> = (0..size)
                .map(|_| {
                    let v = if rng.gen_bool(0.9) {
                        audiences[p][rng.gen_range(0..c.audience)]
                    } else {
                        rng.gen_range(0..c.nodes)
                    };
                    (v, start + rng.gen_range(1..21))
                })
                .collect();
            (sources[p], members)
        } else {
            let init = ordinary[activity.sample(&mut rng)];
            let size = rng.gen_range(1..=c.ordinary_max_size.max(1));
            let members = (0..size)
                .map(|_| {
                    let v = if rng.gen_bool(c.periphery_bias) {
                        periphery[rng.gen_range(0..periphery.len())]
                    } else {
                        rng.gen_range(0..c.nodes)
                    };
                    (v, start + rng.gen_range(30..3030))
                })
                .collect();
            (init, members)
        };
        let mut events: Vec<CascadeEvent> = members
            .into_iter()
            .filter(|&(v, _)| v != initiator)
            .map(|(v, time)| CascadeEvent { node: node_name(v), time })
            .collect();
        if events.is_empty() {
            events.push(CascadeEvent {
                node: node_name((initiator + 1) % c.nodes),
                time: start + 1,
            });
        }
        out.push(Cascade::new(node_name(initiator), start, events)?);
    }

    let mut edges = Vec::new();
    for (&s, members) in sources.iter().zip(&audiences) {
        edges.extend(members.iter().map(|&v| (node_name(s), node_name(v))));
    }
    for v in 0..c.nodes {
        for _ in 0..3 {
            edges.push((node_name(v), node_name(rng.gen_range(0..c.nodes))));
        }
    }

    Ok(SynthCorpus {
        corpus: CascadeCorpus::from_cascades(out),
        planted: sources.iter().copied().map(node_name).collect(),
        edges: EdgeList::new(edges),
    })
}

//! Training-stream construction.
//!
//! Each cascade contributes influencer/context pairs, drawn with replacement
//! with probability inversely proportional to each participant's copying
//! delay, followed by a single influencer/size pair carrying the min-max
//! normalized cascade length.

use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Cascade, CascadeCorpus};
use crate::error::{Error, Result};

pub const DEFAULT_OVERSAMPLE: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextPair {
    pub influencer: usize,
    pub context: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizePair {
    pub influencer: usize,
    pub size_target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainingPair {
    Context(ContextPair),
    Size(SizePair),
}

impl TrainingPair {
    pub fn influencer(&self) -> usize {
        match self {
            TrainingPair::Context(p) => p.influencer,
            TrainingPair::Size(p) => p.influencer,
        }
    }
}

fn inverse_delay_weights(delays: impl Iterator<Item = u64>) -> Vec<f64> {
    delays.map(|d| 1.0 / d.max(1) as f64).collect()
}

/// Probability of drawing each participant of `cascade` (in event order) as
/// a context node. Delays below one tick count as one.
pub fn sampling_distribution(cascade: &Cascade) -> Result<Vec<f64>> {
    if cascade.is_empty() {
        return Err(Error::EmptyCascade { line: 0 });
    }
    let weights = inverse_delay_weights(cascade.delays());
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Number of context draws for a cascade with `len` participants.
pub fn context_draws(len: usize, oversample: f64) -> usize {
    ((oversample * len as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Min-max normalized length of every cascade in corpus order. When all
/// lengths coincide the target is 0.5 for every cascade.
pub fn size_targets(corpus: &CascadeCorpus) -> Vec<f64> {
    let lens: Vec<usize> = corpus.cascades().iter().map(Cascade::len).collect();
    let (Some(&min), Some(&max)) = (lens.iter().min(), lens.iter().max()) else {
        return Vec::new();
    };
    if min == max {
        return vec![0.5; lens.len()];
    }
    let span = (max - min) as f64;
    lens.iter().map(|&m| (m - min) as f64 / span).collect()
}

/// Builds the interleaved stream for one pass over `train`. The same
/// `(rng_seed, epoch)` always yields the same stream; epochs draw from
/// generator seed `rng_seed + epoch`.
pub fn build_epoch_stream(
    train: &CascadeCorpus,
    oversample: f64,
    rng_seed: u64,
    epoch: u64,
) -> Result<Vec<TrainingPair>> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training corpus".into()));
    }
    if !(oversample.is_finite() && oversample > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "oversample {oversample} must be positive"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed.wrapping_add(epoch));
    let targets = size_targets(train);
    let capacity = train
        .indexed()
        .iter()
        .map(|c| context_draws(c.nodes.len(), oversample) + 1)
        .sum();
    let mut stream = Vec::with_capacity(capacity);

    for (cascade, &size_target) in train.indexed().iter().zip(&targets) {
        let sampler = WeightedIndex::new(inverse_delay_weights(cascade.delays.iter().copied()))
            .expect("validated cascades are non-empty with positive weights");
        for _ in 0..context_draws(cascade.nodes.len(), oversample) {
            stream.push(TrainingPair::Context(ContextPair {
                influencer: cascade.influencer,
                context: cascade.nodes[sampler.sample(&mut rng)],
            }));
        }
        stream.push(TrainingPair::Size(SizePair {
            influencer: cascade.influencer,
            size_target,
        }));
    }
    Ok(stream)
}

/// The first-epoch stream.
pub fn build_training_stream(
    train: &CascadeCorpus,
    oversample: f64,
    rng_seed: u64,
) -> Result<Vec<TrainingPair>> {
    build_epoch_stream(train, oversample, rng_seed, 0)
}

/// Writes `influencer TAB target TAB kind TAB value`. Context rows carry the
/// context node id and value 1; size rows carry the raw cascade length as the
/// target and the normalized length as the value.
pub fn write_pairs<W: Write>(
    corpus: &CascadeCorpus,
    stream: &[TrainingPair],
    mut out: W,
) -> Result<()> {
    let mut cascade = 0;
    for pair in stream {
        match pair {
            TrainingPair::Context(p) => writeln!(
                out,
                "{}\t{}\tC\t1",
                corpus.influencer(p.influencer),
                corpus.node(p.context)
            )?,
            TrainingPair::Size(p) => {
                writeln!(
                    out,
                    "{}\t{}\tS\t{}",
                    corpus.influencer(p.influencer),
                    corpus.cascades()[cascade].len(),
                    p.size_target
                )?;
                cascade += 1;
            }
        }
    }
    out.flush()?;
    Ok(())
}

//! Influence maximization from diffusion cascades.
//!
//! The pipeline learns an influencer embedding per cascade initiator with a
//! two-headed shallow network (which nodes appear in its cascades, and how
//! long they get), turns the embeddings into a candidate-by-node
//! diffusion-probability matrix, and picks seeds with a lazy greedy over the
//! remaining uninfected nodes. Seeds are scored on held-out cascades by the
//! number of distinct nodes they reach.
//!
//! Modules, in pipeline order:
//!
//! - [`corpus`]: cascade file parsing, indexing and temporal split
//! - [`context`]: the interleaved context/size training stream
//! - [`model`]: the embedding network, its gradients and SGD training
//! - [`diffusion`]: candidate pruning, the probability matrix and spread budgets
//! - [`seeder`]: lazy-greedy (and full greedy) seed selection
//! - [`eval`]: distinct-nodes-influenced scoring and ranking baselines
//! - [`synth`]: seeded synthetic corpora for end-to-end checks

pub mod context;
pub mod corpus;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod model;
pub mod seeder;
pub mod synth;

pub use context::{ContextPair, SizePair, TrainingPair};
pub use corpus::{Cascade, CascadeCorpus, CascadeEvent, EdgeList, NodeId};
pub use diffusion::{DiffusionMatrix, SpreadBudget};
pub use error::{Error, Result};
pub use eval::{EvaluationResult, RankedBaseline};
pub use model::{InfectorModel, ModelConfig, TrainReport};
pub use seeder::{SeedSelection, Uninfected};

/// Trains a freshly initialized model on `train`, resampling the context
/// stream every epoch.
pub fn fit(
    train: &CascadeCorpus,
    config: &ModelConfig,
    oversample: f64,
) -> Result<(InfectorModel, TrainReport)> {
    let model = InfectorModel::init(config, train.num_influencers(), train.num_nodes())?
        .with_labels(model::ModelLabels {
            influencers: train.influencer_ids(),
            nodes: train.node_ids().to_vec(),
        })?;
    model::train(model, config, |epoch| {
        context::build_epoch_stream(train, oversample, config.rng_seed, epoch as u64)
    })
}

//! The two-headed shallow network that learns influencer embeddings.
//!
//! A shared source embedding `O_u` feeds two heads:
//!
//! ```text
//! classify:  z_t = O_u T + b_t      phi_t = softmax(z_t)   L_t = -log phi_t[y]
//! regress:   z_c = O_u C + b_c      phi_c = sigmoid(z_c)   L_c = (y_c - phi_c)^2
//! ```
//!
//! `C` is a constant all-ones vector, so a regression step moves every
//! coordinate of `O_u` by the same amount. Training alternates between the
//! heads in stream order; exactly one head updates `O_u` per step.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::context::{ContextPair, SizePair, TrainingPair};
use crate::corpus::NodeId;
use crate::error::{Error, Result, StepLocation};

pub const MODEL_MAGIC: &[u8; 5] = b"INFV1";
const LABELS_MAGIC: &[u8; 4] = b"IDS1";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub rng_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 50,
            learning_rate: 0.1,
            epochs: 5,
            rng_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 {
            return Err(Error::InvalidArgument("embedding size must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Node ids attached to a model's rows and columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelLabels {
    pub influencers: Vec<NodeId>,
    pub nodes: Vec<NodeId>,
}

/// All trainable state, stored row-major in 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct InfectorModel {
    embed_dim: usize,
    num_influencers: usize,
    num_nodes: usize,
    /// I x E
    source: Vec<f64>,
    /// E x N
    target: Vec<f64>,
    /// N
    target_bias: Vec<f64>,
    size_bias: f64,
    /// E, all ones, never trained
    constant: Vec<f64>,
    labels: Option<ModelLabels>,
}

/// Dense partial derivatives of one loss with respect to every parameter.
/// Rows of `source` other than the input influencer are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub target_bias: Vec<f64>,
    pub size_bias: f64,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl InfectorModel {
    /// Uniform init in `[-0.5/E, 0.5/E]` for `O` then `T`, zero biases.
    pub fn init(config: &ModelConfig, num_influencers: usize, num_nodes: usize) -> Result<Self> {
        config.validate()?;
        if num_influencers == 0 || num_nodes == 0 {
            return Err(Error::InvalidArgument(
                "model needs at least one influencer and one node".into(),
            ));
        }
        let e = config.embed_dim;
        let half = 0.5 / e as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-half..=half)).collect() };
        let source = draw(num_influencers * e);
        let target = draw(e * num_nodes);
        Ok(InfectorModel {
            embed_dim: e,
            num_influencers,
            num_nodes,
            source,
            target,
            target_bias: vec![0.0; num_nodes],
            size_bias: 0.0,
            constant: vec![1.0; e],
            labels: None,
        })
    }

    /// Assembles a model from raw parameters (row-major `O` and `T`).
    pub fn from_parts(
        embed_dim: usize,
        num_influencers: usize,
        num_nodes: usize,
        source: Vec<f64>,
        target: Vec<f64>,
        target_bias: Vec<f64>,
        size_bias: f64,
    ) -> Result<Self> {
        if embed_dim == 0 || num_influencers == 0 || num_nodes == 0 {
            return Err(Error::InvalidArgument("model dimensions must be >= 1".into()));
        }
        if source.len() != num_influencers * embed_dim
            || target.len() != embed_dim * num_nodes
            || target_bias.len() != num_nodes
        {
            return Err(Error::InvalidArgument("parameter shapes do not match dimensions".into()));
        }
        Ok(InfectorModel {
            embed_dim,
            num_influencers,
            num_nodes,
            source,
            target,
            target_bias,
            size_bias,
            constant: vec![1.0; embed_dim],
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: ModelLabels) -> Result<Self> {
        if labels.influencers.len() != self.num_influencers || labels.nodes.len() != self.num_nodes {
            return Err(Error::InvalidArgument("label counts do not match model dimensions".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&ModelLabels> {
        self.labels.as_ref()
    }

    /// Label of influencer `u`, or its decimal index when unlabeled.
    pub fn influencer_label(&self, u: usize) -> String {
        match &self.labels {
            Some(l) => l.influencers[u].to_string(),
            None => u.to_string(),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn num_influencers(&self) -> usize {
        self.num_influencers
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn source_row(&self, u: usize) -> &[f64] {
        &self.source[u * self.embed_dim..(u + 1) * self.embed_dim]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn target_bias(&self) -> &[f64] {
        &self.target_bias
    }

    pub fn size_bias(&self) -> f64 {
        self.size_bias
    }

    pub fn constant(&self) -> &[f64] {
        &self.constant
    }

    /// Mutable access to every trainable parameter, flattened in the order
    /// `O`, `T`, `b_t`, `b_c`. Used by finite-difference checks.
    pub fn parameter_mut(&mut self, index: usize) -> &mut f64 {
        let (o, t, b) = (self.source.len(), self.target.len(), self.target_bias.len());
        match index {
            i if i < o => &mut self.source[i],
            i if i < o + t => &mut self.target[i - o],
            i if i < o + t + b => &mut self.target_bias[i - o - t],
            i if i == o + t + b => &mut self.size_bias,
            _ => panic!("parameter index {index} out of range"),
        }
    }

    pub fn num_parameters(&self) -> usize {
        self.source.len() + self.target.len() + self.target_bias.len() + 1
    }

    pub fn source_norm(&self, u: usize) -> f64 {
        self.source_row(u).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `O_u T + b_t`.
    pub fn classify_logits(&self, u: usize) -> Vec<f64> {
        let n = self.num_nodes;
        let mut z = self.target_bias.clone();
        for (k, &o) in self.source_row(u).iter().enumerate() {
            let row = &self.target[k * n..(k + 1) * n];
            for (zj, &t) in z.iter_mut().zip(row) {
                *zj += o * t;
            }
        }
        z
    }

    /// Softmax over all N nodes of the classification logits.
    pub fn forward_classify(&self, u: usize) -> Vec<f64> {
        let mut z = self.classify_logits(u);
        softmax_in_place(&mut z);
        z
    }

    pub fn regress_logit(&self, u: usize) -> f64 {
        let dot: f64 = self
            .source_row(u)
            .iter()
            .zip(&self.constant)
            .map(|(o, c)| o * c)
            .sum();
        dot + self.size_bias
    }

    pub fn forward_regress(&self, u: usize) -> f64 {
        sigmoid(self.regress_logit(u))
    }

    /// `-log softmax(z)[y]`, computed through log-sum-exp.
    pub fn classify_loss(&self, pair: ContextPair) -> f64 {
        let z = self.classify_logits(pair.influencer);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        lse - z[pair.context]
    }

    pub fn regress_loss(&self, pair: SizePair) -> f64 {
        let r = pair.size_target - self.forward_regress(pair.influencer);
        r * r
    }

    /// Dense gradient of `L_t`. Allocates `E x N`; meant for checking, not
    /// for training.
    pub fn classify_gradients(&self, pair: ContextPair) -> Gradients {
        let (e, n) = (self.embed_dim, self.num_nodes);
        let u = pair.influencer;
        let delta = self.output_delta(pair);
        let o = self.source_row(u);
        let mut source = vec![0.0; self.source.len()];
        let mut target = vec![0.0; self.target.len()];
        for k in 0..e {
            let row = &self.target[k * n..(k + 1) * n];
            source[u * e + k] = row.iter().zip(&delta).map(|(t, d)| t * d).sum();
            for j in 0..n {
                target[k * n + j] = o[k] * delta[j];
            }
        }
        Gradients {
            loss: self.classify_loss(pair),
            source,
            target,
            target_bias: delta,
            size_bias: 0.0,
        }
    }

    /// Dense gradient of `L_c`. Only `O_u` and `b_c` are non-zero.
    pub fn regress_gradients(&self, pair: SizePair) -> Gradients {
        let e = self.embed_dim;
        let u = pair.influencer;
        let g = self.regress_scalar(pair);
        let mut source = vec![0.0; self.source.len()];
        for (k, c) in self.constant.iter().enumerate() {
            source[u * e + k] = g * c;
        }
        Gradients {
            loss: self.regress_loss(pair),
            source,
            target: vec![0.0; self.target.len()],
            target_bias: vec![0.0; self.num_nodes],
            size_bias: g,
        }
    }

    /// `dL_t/dz_t = phi_t - y_t`.
    pub fn output_delta(&self, pair: ContextPair) -> Vec<f64> {
        let mut delta = self.forward_classify(pair.influencer);
        delta[pair.context] -= 1.0;
        delta
    }

    /// `dL_c/dz_c = -2 (y_c - phi_c) phi_c (1 - phi_c)`.
    pub fn regress_scalar(&self, pair: SizePair) -> f64 {
        let phi = self.forward_regress(pair.influencer);
        -2.0 * (pair.size_target - phi) * phi * (1.0 - phi)
    }

    /// One SGD step on the classification head. Returns the pre-update loss.
    /// Updates `O_u`, `T` and `b_t` from the same pre-update values.
    pub fn step_classify(&mut self, pair: ContextPair, lr: f64) -> Result<f64> {
        self.check_pair(pair.influencer, Some(pair.context))?;
        let loss = self.classify_loss(pair);
        let delta = self.output_delta(pair);
        let (e, n, u) = (self.embed_dim, self.num_nodes, pair.influencer);
        let o_old: Vec<f64> = self.source_row(u).to_vec();
        let mut finite = true;

        for k in 0..e {
            let row = &mut self.target[k * n..(k + 1) * n];
            let grad_o: f64 = row.iter().zip(&delta).map(|(t, d)| t * d).sum();
            let scale = lr * o_old[k];
            for (t, d) in row.iter_mut().zip(&delta) {
                *t -= scale * d;
                finite &= t.is_finite();
            }
            let o = &mut self.source[u * e + k];
            *o -= lr * grad_o;
            finite &= o.is_finite();
        }
        for (b, d) in self.target_bias.iter_mut().zip(&delta) {
            *b -= lr * d;
            finite &= b.is_finite();
        }
        if !finite || !loss.is_finite() {
            return Err(Error::NonFiniteUpdate { at: None });
        }
        Ok(loss)
    }

    /// One SGD step on the regression head. Returns the pre-update loss.
    pub fn step_regress(&mut self, pair: SizePair, lr: f64) -> Result<f64> {
        self.check_pair(pair.influencer, None)?;
        if !(0.0..=1.0).contains(&pair.size_target) {
            return Err(Error::InvalidArgument(format!(
                "size target {} outside [0, 1]",
                pair.size_target
            )));
        }
        let loss = self.regress_loss(pair);
        let g = self.regress_scalar(pair);
        let e = self.embed_dim;
        let u = pair.influencer;
        let mut finite = true;
        for (o, c) in self.source[u * e..(u + 1) * e].iter_mut().zip(&self.constant) {
            *o -= lr * g * c;
            finite &= o.is_finite();
        }
        self.size_bias -= lr * g;
        if !finite || !self.size_bias.is_finite() {
            return Err(Error::NonFiniteUpdate { at: None });
        }
        Ok(loss)
    }

    fn check_pair(&self, u: usize, context: Option<usize>) -> Result<()> {
        if u >= self.num_influencers {
            return Err(Error::InvalidArgument(format!(
                "influencer {u} out of range (I = {})",
                self.num_influencers
            )));
        }
        if let Some(v) = context {
            if v >= self.num_nodes {
                return Err(Error::InvalidArgument(format!(
                    "context node {v} out of range (N = {})",
                    self.num_nodes
                )));
            }
        }
        Ok(())
    }

    pub fn step(&mut self, pair: &TrainingPair, lr: f64) -> Result<f64> {
        match *pair {
            TrainingPair::Context(p) => self.step_classify(p, lr),
            TrainingPair::Size(p) => self.step_regress(p, lr),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// `INFV1`, E, I, N as u64 LE, then `O`, `T`, `b_t`, `b_c` as f64 LE.
    /// A labeled model appends `IDS1` followed by I influencer ids and N node
    /// ids, each a u64 LE byte length then UTF-8 bytes.
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(MODEL_MAGIC)?;
        for d in [self.embed_dim, self.num_influencers, self.num_nodes] {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in self
            .source
            .iter()
            .chain(&self.target)
            .chain(&self.target_bias)
            .chain(std::iter::once(&self.size_bias))
        {
            out.write_all(&v.to_le_bytes())?;
        }
        if let Some(labels) = &self.labels {
            out.write_all(LABELS_MAGIC)?;
            for id in labels.influencers.iter().chain(&labels.nodes) {
                write_str(out, id.as_str())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(MODEL_MAGIC.len()).map_err(|_| Error::CorruptFile("file shorter than header".into()))?;
        if magic != MODEL_MAGIC {
            return Err(Error::FormatVersionMismatch { expected: "INFV1" });
        }
        let e = r.u64()? as usize;
        let i = r.u64()? as usize;
        let n = r.u64()? as usize;
        if e == 0 || i == 0 || n == 0 {
            return Err(Error::CorruptFile("zero model dimension".into()));
        }
        let o_len = i.checked_mul(e);
        let t_len = e.checked_mul(n);
        let (Some(o_len), Some(t_len)) = (o_len, t_len) else {
            return Err(Error::CorruptFile("dimensions overflow".into()));
        };
        let source = r.f64s(o_len)?;
        let target = r.f64s(t_len)?;
        let target_bias = r.f64s(n)?;
        let size_bias = r.f64()?;
        let mut model = InfectorModel::from_parts(e, i, n, source, target, target_bias, size_bias)?;
        if !r.is_empty() {
            if r.take(LABELS_MAGIC.len())? != LABELS_MAGIC {
                return Err(Error::CorruptFile("unexpected trailing bytes".into()));
            }
            let influencers = (0..i).map(|_| r.node_id()).collect::<Result<Vec<_>>>()?;
            let nodes = (0..n).map(|_| r.node_id()).collect::<Result<Vec<_>>>()?;
            if !r.is_empty() {
                return Err(Error::CorruptFile("unexpected trailing bytes".into()));
            }
            model.labels = Some(ModelLabels { influencers, nodes });
        }
        Ok(model)
    }
}

pub(crate) fn write_str<W: Write>(out: &mut W, s: &str) -> std::io::Result<()> {
    out.write_all(&(s.len() as u64).to_le_bytes())?;
    out.write_all(s.as_bytes())
}

/// Bounds-checked little-endian cursor over an in-memory file.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pos == self.bytes.len()
    }

    pub(crate) fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::CorruptFile(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            count
                .checked_mul(8)
                .ok_or_else(|| Error::CorruptFile("length overflow".into()))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub(crate) fn node_id(&mut self) -> Result<NodeId> {
        let len = self.u64()? as usize;
        let raw = self.take(len)?;
        let s = std::str::from_utf8(raw).map_err(|_| Error::CorruptFile("non-UTF-8 node id".into()))?;
        NodeId::new(s).map_err(|e| Error::CorruptFile(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_classify_loss: f64,
    pub mean_regress_loss: f64,
    pub classify_steps: usize,
    pub regress_steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
}

impl TrainReport {
    pub fn classify_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_classify_loss).collect()
    }

    pub fn regress_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_regress_loss).collect()
    }
}

/// Sequential SGD over `config.epochs` passes. `stream_for_epoch` produces
/// the (freshly sampled) stream of each epoch.
pub fn train<F>(
    mut model: InfectorModel,
    config: &ModelConfig,
    mut stream_for_epoch: F,
) -> Result<(InfectorModel, TrainReport)>
where
    F: FnMut(usize) -> Result<Vec<TrainingPair>>,
{
    config.validate()?;
    let lr = config.learning_rate;
    let mut report = TrainReport::default();
    for epoch in 0..config.epochs {
        let started = Instant::now();
        let stream = stream_for_epoch(epoch)?;
        if stream.is_empty() {
            return Err(Error::InvalidArgument("empty training stream".into()));
        }
        let (mut lt, mut lc, mut nt, mut nc) = (0.0, 0.0, 0usize, 0usize);
        for (step, pair) in stream.iter().enumerate() {
            let loss = model.step(pair, lr).map_err(|err| match err {
                Error::NonFiniteUpdate { .. } => Error::NonFiniteUpdate {
                    at: Some(StepLocation { epoch, step }),
                },
                other => other,
            })?;
            match pair {
                TrainingPair::Context(_) => {
                    lt += loss;
                    nt += 1;
                }
                TrainingPair::Size(_) => {
                    lc += loss;
                    nc += 1;
                }
            }
        }
        report.epochs.push(EpochReport {
            epoch,
            mean_classify_loss: if nt > 0 { lt / nt as f64 } else { 0.0 },
            mean_regress_loss: if nc > 0 { lc / nc as f64 } else { 0.0 },
            classify_steps: nt,
            regress_steps: nc,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((model, report))
}

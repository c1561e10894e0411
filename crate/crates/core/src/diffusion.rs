//! Candidate pruning, the diffusion-probability matrix and spread budgets.

use std::io::Write;
use std::path::Path;

use crate::corpus::NodeId;
use crate::error::{Error, Result};
use crate::model::{write_str, ByteReader, InfectorModel};

pub const MATRIX_MAGIC: &[u8; 4] = b"DPM1";

/// Dense `candidates x N` matrix of diffusion probabilities. Candidates are
/// ordered by descending embedding norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    /// Influencer index of each candidate in the source model.
    candidates: Vec<usize>,
    labels: Vec<String>,
    norms: Vec<f64>,
    num_nodes: usize,
    probs: Vec<f64>,
}

/// Per-candidate number of nodes it is expected to influence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadBudget {
    pub lambda: Vec<usize>,
}

/// Number of candidates kept at `prune_percent` of `num_influencers`.
pub fn retained_count(num_influencers: usize, prune_percent: f64) -> usize {
    let raw = (prune_percent * num_influencers as f64 / 100.0 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(num_influencers)
}

/// Influencer indices ranked by descending `‖O_u‖₂`, ties by index.
pub fn rank_by_norm(model: &InfectorModel) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = (0..model.num_influencers())
        .map(|u| (u, model.source_norm(u)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

impl DiffusionMatrix {
    /// Keeps the top `prune_percent`% influencers by norm and materializes
    /// each kept row as the classification softmax.
    pub fn build(model: &InfectorModel, prune_percent: f64) -> Result<Self> {
        if !(prune_percent > 0.0 && prune_percent <= 100.0) {
            return Err(Error::InvalidArgument(format!(
                "prune percent {prune_percent} not in (0, 100]"
            )));
        }
        let keep = retained_count(model.num_influencers(), prune_percent);
        let ranked = rank_by_norm(model);
        let n = model.num_nodes();
        let mut probs = Vec::with_capacity(keep * n);
        let mut candidates = Vec::with_capacity(keep);
        let mut labels = Vec::with_capacity(keep);
        let mut norms = Vec::with_capacity(keep);
        for &(u, norm) in &ranked[..keep] {
            probs.extend(model.forward_classify(u));
            candidates.push(u);
            labels.push(model.influencer_label(u));
            norms.push(norm);
        }
        Ok(DiffusionMatrix {
            candidates,
            labels,
            norms,
            num_nodes: n,
            probs,
        })
    }

    /// A matrix from explicit rows, in the given candidate order. Rows must
    /// be equally long, finite and non-negative; they need not sum to one.
    pub fn from_rows(labels: Vec<String>, norms: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyMatrix);
        }
        if labels.len() != rows.len() || norms.len() != rows.len() {
            return Err(Error::InvalidArgument("labels, norms and rows differ in length".into()));
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        if rows.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be finite and >= 0".into()));
        }
        if norms.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("norms must be finite and >= 0".into()));
        }
        Ok(DiffusionMatrix {
            candidates: (0..rows.len()).collect(),
            labels,
            norms,
            num_nodes: n,
            probs: rows.into_iter().flatten().collect(),
        })
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn label(&self, candidate: usize) -> &str {
        &self.labels[candidate]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn row(&self, candidate: usize) -> &[f64] {
        &self.probs[candidate * self.num_nodes..(candidate + 1) * self.num_nodes]
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty() || self.num_nodes == 0
    }

    /// `λ_u = ⌈N ‖O_u‖₂ / Σ ‖O_u'‖₂⌉` over the retained candidates, clamped
    /// to `[1, N]`.
    pub fn budgets(&self) -> Result<SpreadBudget> {
        budgets_from_norms(&self.norms, self.num_nodes)
    }

    pub fn save(&self, budgets: &SpreadBudget, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(budgets, &mut file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, SpreadBudget)> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// `DPM1`, candidate count and N as u64 LE, candidate labels (u64 length
    /// + UTF-8), norms (f64), λ (u64), then rows (f64), all little-endian.
    pub fn write_to<W: Write>(&self, budgets: &SpreadBudget, out: &mut W) -> Result<()> {
        if budgets.lambda.len() != self.num_candidates() {
            return Err(Error::InvalidArgument("budget count differs from candidate count".into()));
        }
        out.write_all(MATRIX_MAGIC)?;
        out.write_all(&(self.num_candidates() as u64).to_le_bytes())?;
        out.write_all(&(self.num_nodes as u64).to_le_bytes())?;
        for l in &self.labels {
            write_str(out, l)?;
        }
        for v in &self.norms {
            out.write_all(&v.to_le_bytes())?;
        }
        for &l in &budgets.lambda {
            out.write_all(&(l as u64).to_le_bytes())?;
        }
        for v in &self.probs {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, SpreadBudget)> {
        let mut r = ByteReader::new(bytes);
        let magic = r
            .take(MATRIX_MAGIC.len())
            .map_err(|_| Error::CorruptFile("file shorter than header".into()))?;
        if magic != MATRIX_MAGIC {
            return Err(Error::FormatVersionMismatch { expected: "DPM1" });
        }
        let c = r.u64()? as usize;
        let n = r.u64()? as usize;
        if c == 0 || n == 0 {
            return Err(Error::EmptyMatrix);
        }
        // each candidate needs at least a label length, norm and λ
        if c.checked_mul(24).map_or(true, |need| need > bytes.len()) {
            return Err(Error::CorruptFile("candidate count exceeds file size".into()));
        }
        let labels = (0..c)
            .map(|_| r.node_id().map(|id| id.to_string()))
            .collect::<Result<Vec<_>>>()?;
        let norms = r.f64s(c)?;
        let lambda = (0..c).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let len = c
            .checked_mul(n)
            .ok_or_else(|| Error::CorruptFile("dimensions overflow".into()))?;
        let probs = r.f64s(len)?;
        if !r.is_empty() {
            return Err(Error::CorruptFile("unexpected trailing bytes".into()));
        }
        if lambda.iter().any(|&l| l == 0 || l > n) {
            return Err(Error::CorruptFile("spread budget outside [1, N]".into()));
        }
        Ok((
            DiffusionMatrix {
                candidates: (0..c).collect(),
                labels,
                norms,
                num_nodes: n,
                probs,
            },
            SpreadBudget { lambda },
        ))
    }
}

/// Spread budgets for candidates with the given norms over `num_nodes` nodes.
pub fn budgets_from_norms(norms: &[f64], num_nodes: usize) -> Result<SpreadBudget> {
    let total: f64 = norms.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllZeroNorms);
    }
    let n = num_nodes as f64;
    let lambda = norms
        .iter()
        .map(|&norm| {
            let x = n * norm / total;
            let l = (x - 1e-9 * x.max(1.0)).ceil();
            (l.max(1.0) as usize).min(num_nodes.max(1))
        })
        .collect();
    Ok(SpreadBudget { lambda })
}

/// Labels of a matrix as node ids, when they parse as such.
pub fn candidate_ids(matrix: &DiffusionMatrix) -> Result<Vec<NodeId>> {
    matrix.labels().iter().map(|l| NodeId::new(l.as_str())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn retained_counts() {
        assert_eq!(retained_count(10, 10.0), 1);
        assert_eq!(retained_count(537, 40.0), 215);
        assert_eq!(retained_count(7, 100.0), 7);
        assert_eq!(retained_count(3, 0.01), 1);
        assert_eq!(retained_count(20, 50.0), 10);
    }

    #[test]
    fn budget_arithmetic() {
        assert_eq!(budgets_from_norms(&[1.0, 3.0], 5).unwrap().lambda, vec![2, 4]);
        assert_eq!(budgets_from_norms(&[0.7], 9).unwrap().lambda, vec![9]);
        assert_eq!(budgets_from_norms(&[1.0, 1.0, 1.0], 3).unwrap().lambda, vec![1, 1, 1]);
        assert_eq!(budgets_from_norms(&[0.0, 2.0], 4).unwrap().lambda, vec![1, 4]);
        assert!(matches!(budgets_from_norms(&[0.0, 0.0], 4), Err(Error::AllZeroNorms)));
    }

    fn model_with_rows(rows: &[&[f64]]) -> InfectorModel {
        let e = rows[0].len();
        let source = rows.iter().flat_map(|r| r.iter().copied()).collect();
        InfectorModel::from_parts(e, rows.len(), 3, source, vec![0.1; e * 3], vec![0.0; 3], 0.0).unwrap()
    }

    #[test]
    fn pruning_orders_by_norm_then_index() {
        let m = model_with_rows(&[&[1.0, 0.0], &[0.0, 3.0], &[0.0, -1.0], &[2.0, 0.0]]);
        let d = DiffusionMatrix::build(&m, 100.0).unwrap();
        assert_eq!(d.candidates(), &[1, 3, 0, 2]);
        let d = DiffusionMatrix::build(&m, 50.0).unwrap();
        assert_eq!(d.candidates(), &[1, 3]);
        assert_eq!(d.norms(), &[3.0, 2.0]);
    }

    #[test]
    fn rows_equal_forward_classify() {
        let cfg = ModelConfig { embed_dim: 4, rng_seed: 3, ..ModelConfig::default() };
        let m = InfectorModel::init(&cfg, 6, 9).unwrap();
        let d = DiffusionMatrix::build(&m, 100.0).unwrap();
        for (c, &u) in d.candidates().iter().enumerate() {
            assert_eq!(d.row(c), m.forward_classify(u).as_slice());
            assert!((d.row(c).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(DiffusionMatrix::build(&m, 0.0).is_err());
        assert!(DiffusionMatrix::build(&m, 100.5).is_err());
    }

    #[test]
    fn file_round_trip_and_errors() {
        let d = DiffusionMatrix::from_rows(
            vec!["s1".into(), "s2".into()],
            vec![1.0, 3.0],
            vec![vec![0.1, 0.9, 0.0], vec![0.5, 0.25, 0.25]],
        )
        .unwrap();
        let b = d.budgets().unwrap();
        let mut bytes = Vec::new();
        d.write_to(&b, &mut bytes).unwrap();
        let (d2, b2) = DiffusionMatrix::from_bytes(&bytes).unwrap();
        assert_eq!((d2, b2), (d, b));
        assert!(matches!(
            DiffusionMatrix::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::CorruptFile(_))
        ));
        assert!(matches!(
            DiffusionMatrix::from_bytes(b"INFV1xxxxxxxx"),
            Err(Error::FormatVersionMismatch { .. })
        ));
    }
}

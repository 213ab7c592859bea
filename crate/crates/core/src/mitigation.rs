//! Confusion-matrix read-out mitigation, optionally with the ansatz circuit at zero parameters.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::measure::{sample_distribution, stream_rng, NoiseModel};

pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfusionKind {
    Readout,
    AnsatzBased,
}

/// Column `i` holds the measured-bitstring distribution when preparing bitstring `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    n_qubits: usize,
    kind: ConfusionKind,
    m: DMatrix<f64>,
    inverse: DMatrix<f64>,
    condition: f64,
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

impl ConfusionMatrix {
    pub fn from_matrix(kind: ConfusionKind, m: DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        let n = dim.trailing_zeros() as usize;
        if m.ncols() != dim || dim != 1 << n {
            return Err(Error::Dimension(format!("confusion matrix must be 2^n square, got {}x{}", m.nrows(), m.ncols())));
        }
        let condition = condition_number(&m);
        if !(condition < MAX_CONDITION) {
            return Err(Error::Singular(condition));
        }
        let inverse = m.clone().lu().try_inverse().ok_or(Error::Singular(condition))?;
        Ok(Self { n_qubits: n, kind, m, inverse, condition })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kind(&self) -> ConfusionKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `M^{-1} p_raw`, unclipped quasi-probabilities.
    pub fn mitigate(&self, p_raw: &[f64]) -> Result<Vec<f64>> {
        if p_raw.len() != self.m.nrows() {
            return Err(Error::SizeMismatch(self.m.nrows(), p_raw.len()));
        }
        Ok((&self.inverse * DVector::from_column_slice(p_raw)).iter().copied().collect())
    }

    /// Mitigated mean of the diagonal observable with eigenvalues `w` (one per outcome) and
    /// its predicted standard deviation for `shots` raw samples drawn from `p_raw`.
    pub fn mitigated_mean_std(&self, p_raw: &[f64], w: &[f64], shots: u64) -> Result<(f64, f64)> {
        if p_raw.len() != self.m.nrows() || w.len() != self.m.nrows() {
            return Err(Error::SizeMismatch(self.m.nrows(), p_raw.len()));
        }
        // mean = w^T M^{-1} p = u^T p with u = M^{-T} w
        let u = self.inverse.transpose() * DVector::from_column_slice(w);
        let mean: f64 = u.iter().zip(p_raw).map(|(a, b)| a * b).sum();
        let second: f64 = u.iter().zip(p_raw).map(|(a, b)| a * a * b).sum();
        let var = ((second - mean * mean) / shots as f64).max(0.0);
        Ok((mean, var.sqrt()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).flexible(true).from_writer(w);
        out.write_record(["kind", match self.kind {
            ConfusionKind::Readout => "readout",
            ConfusionKind::AnsatzBased => "ansatz_based",
        }])
        .map_err(csv_err)?;
        for r in 0..self.m.nrows() {
            let row: Vec<String> = (0..self.m.ncols()).map(|c| format!("{:e}", self.m[(r, c)])).collect();
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
        let mut records = rdr.records();
        let head = records
            .next()
            .ok_or(Error::Parse { line: 1, msg: "empty confusion matrix file".into() })?
            .map_err(csv_err)?;
        let kind = match (head.get(0), head.get(1)) {
            (Some("kind"), Some("readout")) => ConfusionKind::Readout,
            (Some("kind"), Some("ansatz_based")) => ConfusionKind::AnsatzBased,
            _ => return Err(Error::Parse { line: 1, msg: "expected 'kind,<readout|ansatz_based>'".into() }),
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in records.enumerate() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() })?;
            rows.push(row);
        }
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("confusion matrix rows have unequal length".into()));
        }
        Self::from_matrix(kind, DMatrix::from_fn(dim, dim, |r, c| rows[r][c]))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), msg: e.to_string() }
}

/// Pauli-rotation count entering the gate channel for each kind.
fn layers_for(kind: ConfusionKind, ansatz_layers: Option<usize>) -> Result<usize> {
    match kind {
        ConfusionKind::Readout => Ok(0),
        ConfusionKind::AnsatzBased => ansatz_layers
            .ok_or_else(|| Error::Dimension("ansatz-based confusion matrix needs an ansatz".into())),
    }
}

/// Exact confusion matrix of the channel: preparing `b_i` (then `U(0)`, which acts as the
/// identity but still passes through the gate channel) and measuring.
pub fn analytic_confusion(
    n_qubits: usize,
    kind: ConfusionKind,
    ansatz_layers: Option<usize>,
    noise: &NoiseModel,
) -> Result<ConfusionMatrix> {
    let layers = layers_for(kind, ansatz_layers)?;
    let dim = 1usize << n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let mut ideal = vec![0.0; dim];
        ideal[i] = 1.0;
        for (j, p) in noise.noisy_distribution(&ideal, layers).into_iter().enumerate() {
            m[(j, i)] = p;
        }
    }
    ConfusionMatrix::from_matrix(kind, m)
}

/// Sampled confusion matrix, one column per prepared bitstring. Column `i` uses the
/// RNG stream `(seed, i)` so columns can be built in parallel.
pub fn build_confusion(
    n_qubits: usize,
    kind: ConfusionKind,
    ansatz_layers: Option<usize>,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<ConfusionMatrix> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    noise.validate()?;
    let layers = layers_for(kind, ansatz_layers)?;
    let dim = 1usize << n_qubits;
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut ideal = vec![0.0; dim];
            ideal[i] = 1.0;
            let p = noise.noisy_distribution(&ideal, layers);
            let mut rng = stream_rng(seed, u64::MAX, i as u64);
            sample_column(&p, shots, &mut rng)
        })
        .collect();
    let m = DMatrix::from_fn(dim, dim, |r, c| columns[c][r]);
    ConfusionMatrix::from_matrix(kind, m)
}

fn sample_column(p: &[f64], shots: u64, rng: &mut impl Rng) -> Vec<f64> {
    sample_distribution(p, shots, rng).into_iter().map(|c| c as f64 / shots as f64).collect()
}

/// Free-function form of [`ConfusionMatrix::mitigate`].
pub fn mitigate(m: &ConfusionMatrix, p_raw: &[f64]) -> Result<Vec<f64>> {
    m.mitigate(p_raw)
}

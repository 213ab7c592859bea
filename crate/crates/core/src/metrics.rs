//! Shot-noise metrics of the response matrices: per-string and per-operator standard
//! deviations, matrix std, coefficients of variation and condition numbers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::qlr::solve::{condition_number, response_matrices};
use crate::qlr::{MatrixKind, QlrProblem, QlrSolution};
use crate::sim::Statevector;

/// Element means below this magnitude are left out of the CV average.
pub const CV_MEAN_THRESHOLD: f64 = 1e-12;
/// CV and condition numbers above this are reported as `large`.
pub const LARGE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliStd {
    pub std: f64,
    /// `Re{c²}` was negative and the contribution was set to zero.
    pub clamped: bool,
}

/// `σ = sqrt(4 Re{c²} (p1 - p1²))` for one string measured with outcome probability `p1`.
pub fn pauli_std(c: Complex64, p1: f64) -> Result<PauliStd> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::Probability(p1));
    }
    let re = (c * c).re;
    if re < 0.0 {
        return Ok(PauliStd { std: 0.0, clamped: true });
    }
    Ok(PauliStd { std: (4.0 * re * (p1 - p1 * p1)).max(0.0).sqrt(), clamped: false })
}

/// Root-sum-square of the per-string stds of `op` in `state`, with `p1 = (1 - <P>)/2`.
pub fn operator_std(op: &PauliSum, state: &Statevector) -> Result<f64> {
    let mut var = 0.0;
    for (t, c) in op.measurable_terms() {
        let m = state.pauli_expectation(t)?.re;
        let p1 = ((1.0 - m) / 2.0).clamp(0.0, 1.0);
        var += pauli_std(*c, p1)?.std.powi(2);
    }
    Ok(var.sqrt())
}

/// A metric that may be reported as a token instead of a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Finite(f64),
    Large,
    Inf,
}

impl Metric {
    fn classify(x: f64) -> Self {
        if !x.is_finite() {
            Metric::Inf
        } else if x > LARGE_THRESHOLD {
            Metric::Large
        } else {
            Metric::Finite(x)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Finite(x) => Some(x),
            _ => None,
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Finite(x) => write!(f, "{x:.4}"),
            Metric::Large => f.write_str("large"),
            Metric::Inf => f.write_str("inf"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Metric::Finite(x) => s.serialize_f64(*x),
            Metric::Large => s.serialize_str("large"),
            Metric::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Token(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Metric::Finite(x)),
            Raw::Token(t) if t == "large" => Ok(Metric::Large),
            Raw::Token(t) if t == "inf" => Ok(Metric::Inf),
            Raw::Token(t) => Err(serde::de::Error::custom(format!("unknown metric token {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMetrics {
    pub kind: MatrixKind,
    /// Mean per-shot element std.
    pub std: f64,
    /// The same with unit Pauli coefficients.
    pub std_nc: f64,
    pub cv: Metric,
    /// Elements left out of the CV average for a near-zero mean.
    pub cv_excluded: usize,
    pub cond: Metric,
    /// Mean std over each row.
    pub row_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub a: MatrixMetrics,
    pub b: MatrixMetrics,
    pub sigma: MatrixMetrics,
    pub cond_e2: Metric,
    pub cond_s2_inv_e2: Metric,
}

impl MetricsReport {
    pub fn matrix(&self, kind: MatrixKind) -> Option<&MatrixMetrics> {
        match kind {
            MatrixKind::A => Some(&self.a),
            MatrixKind::B => Some(&self.b),
            MatrixKind::Sigma => Some(&self.sigma),
            MatrixKind::Delta => None,
        }
    }
}

fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.abs() < CV_MEAN_THRESHOLD)
}

fn cond_metric(m: &DMatrix<f64>) -> Metric {
    if is_zero(m) {
        Metric::Inf
    } else {
        Metric::classify(condition_number(m))
    }
}

fn matrix_metrics_of(kind: MatrixKind, p: &QlrProblem) -> MatrixMetrics {
    let m = p.matrix(kind);
    let n = m.value.nrows();
    let count = (n * n).max(1) as f64;
    let mut ratios = Vec::new();
    let mut excluded = 0;
    for (v, s) in m.value.iter().zip(m.std.iter()) {
        if v.abs() < CV_MEAN_THRESHOLD {
            excluded += 1;
        } else {
            ratios.push(s / v.abs());
        }
    }
    let cv = if ratios.is_empty() {
        Metric::Inf
    } else {
        Metric::classify(ratios.iter().sum::<f64>() / ratios.len() as f64)
    };
    MatrixMetrics {
        kind,
        std: m.std.sum() / count,
        std_nc: m.std_nc.sum() / count,
        cv,
        cv_excluded: excluded,
        cond: cond_metric(&m.value),
        row_std: (0..n).map(|i| m.std.row(i).sum() / n as f64).collect(),
    }
}

/// Matrix std, coefficient-free std, CV and condition numbers for A, B and Σ, plus
/// the condition numbers of `E^[2]` and `(S^[2])⁻¹ E^[2]`.
pub fn matrix_metrics(problem: &QlrProblem) -> MetricsReport {
    let (e, s) = response_matrices(problem);
    let cond_s2_inv_e2 = match s.clone().lu().try_inverse() {
        Some(inv) => cond_metric(&(inv * &e)),
        None => Metric::Inf,
    };
    MetricsReport {
        a: matrix_metrics_of(MatrixKind::A, problem),
        b: matrix_metrics_of(MatrixKind::B, problem),
        sigma: matrix_metrics_of(MatrixKind::Sigma, problem),
        cond_e2: cond_metric(&e),
        cond_s2_inv_e2,
    }
}

/// `σ̄_{M,k} = Σ_l σ̄_M(X_l) |β_{k,l}|²` with `|β_{k,l}|² = Z_kl² + Y_kl²` for vectors
/// normalized by `βᵀ S^[2] β = 1`.
pub fn state_specific_std(report: &MetricsReport, solution: &QlrSolution, kind: MatrixKind) -> Result<Vec<f64>> {
    let m = report
        .matrix(kind)
        .ok_or_else(|| Error::Dimension("state-specific std is defined for A, B and Σ".into()))?;
    let n = m.row_std.len();
    if solution.z.len() != solution.omega.len() {
        return Err(Error::Dimension("solution carries no excitation vectors".into()));
    }
    solution
        .z
        .iter()
        .zip(&solution.y)
        .map(|(z, y)| {
            if z.len() != n || y.len() != n {
                return Err(Error::SizeMismatch(n, z.len()));
            }
            Ok(z.iter().zip(y).zip(&m.row_std).map(|((a, b), s)| (a * a + b * b) * s).sum())
        })
        .collect()
}

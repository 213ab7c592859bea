//! Repeated shot-sampled qLR runs on one ground state, aggregated into per-state spreads.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mitigation::ConfusionMatrix;
use crate::qlr::{build_matrices, solve, Evaluator, QlrPlan, QlrSolution};
use crate::sim::{MeasurementCache, NoiseModel, PreparedState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub runs: usize,
    pub shots: u64,
    pub pauli_saving: bool,
    pub noise: NoiseModel,
    pub master_seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self { runs: 250, shots: 10_000, pauli_saving: true, noise: NoiseModel::none(), master_seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Valid,
    NegativeHessian,
    SingularMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: u64,
    pub outcome: RunOutcome,
    pub solution: Option<QlrSolution>,
    pub cliques_measured: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub runs: usize,
    pub shots_per_pauli: u64,
    pub pauli_saving: bool,
    pub valid_runs: usize,
    /// Share of runs discarded for a negative Hessian eigenvalue or a singular metric.
    pub failure_fraction: f64,
    /// Sample std of `ω_k` (Hartree) over valid runs, states matched by rank;
    /// `None` without valid runs.
    pub sigma_k: Option<Vec<f64>>,
    pub mean_omega: Option<Vec<f64>>,
    pub per_run: Vec<RunResult>,
}

fn one_run(
    plan: &QlrPlan,
    state: &PreparedState,
    config: &CampaignConfig,
    mitigation: Option<&Arc<ConfusionMatrix>>,
    run_id: u64,
) -> Result<RunResult> {
    let mut cache = MeasurementCache::new(
        state.fingerprint,
        config.shots,
        config.pauli_saving,
        config.noise.clone(),
        config.master_seed,
        run_id,
    )?;
    if let Some(m) = mitigation {
        cache = cache.with_mitigation(Arc::clone(m));
    }
    let problem = build_matrices(plan, Evaluator::Sampled { state, cache: &mut cache })?;
    let (outcome, solution) = match solve(&problem) {
        Ok(s) if s.valid => (RunOutcome::Valid, Some(s)),
        Ok(s) => (RunOutcome::NegativeHessian, Some(s)),
        Err(Error::Singular(_)) => (RunOutcome::SingularMetric, None),
        Err(e) => return Err(e),
    };
    Ok(RunResult { run_id, outcome, solution, cliques_measured: cache.cliques_measured() })
}

/// Runs `config.runs` independent sampled qLR calculations. Run `r` draws from the RNG
/// streams `(master_seed, r, ·)`, so the result does not depend on the thread count.
pub fn run_campaign(
    plan: &QlrPlan,
    state: &PreparedState,
    config: &CampaignConfig,
    mitigation: Option<Arc<ConfusionMatrix>>,
) -> Result<CampaignResult> {
    if config.runs == 0 {
        return Err(Error::Dimension("campaign needs at least one run".into()));
    }
    if config.shots == 0 {
        return Err(Error::ZeroShots);
    }
    config.noise.validate()?;
    let per_run = (0..config.runs as u64)
        .into_par_iter()
        .map(|r| one_run(plan, state, config, mitigation.as_ref(), r))
        .collect::<Result<Vec<_>>>()?;
    let valid: Vec<&QlrSolution> = per_run
        .iter()
        .filter(|r| r.outcome == RunOutcome::Valid)
        .filter_map(|r| r.solution.as_ref())
        .collect();
    let (sigma_k, mean_omega) = match rank_statistics(&valid) {
        Some((s, m)) => (Some(s), Some(m)),
        None => (None, None),
    };
    Ok(CampaignResult {
        runs: config.runs,
        shots_per_pauli: config.shots,
        pauli_saving: config.pauli_saving,
        valid_runs: valid.len(),
        failure_fraction: (config.runs - valid.len()) as f64 / config.runs as f64,
        sigma_k,
        mean_omega,
        per_run,
    })
}

/// Sample std and mean of the `k`-th lowest root across solutions, over the number of
/// roots every solution has.
pub fn rank_statistics(solutions: &[&QlrSolution]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n_states = solutions.iter().map(|s| s.omega.len()).min()?;
    let n = solutions.len() as f64;
    let mut sigma = Vec::with_capacity(n_states);
    let mut mean = Vec::with_capacity(n_states);
    for k in 0..n_states {
        let m = solutions.iter().map(|s| s.omega[k]).sum::<f64>() / n;
        let ss: f64 = solutions.iter().map(|s| (s.omega[k] - m).powi(2)).sum();
        sigma.push(if solutions.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 });
        mean.push(m);
    }
    Some((sigma, mean))
}

impl CampaignResult {
    /// `state,omega_mean,sigma` rows for plotting.
    pub fn write_sigma_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        out.write_record(["state", "omega_mean", "sigma"]).map_err(io)?;
        if let (Some(s), Some(m)) = (&self.sigma_k, &self.mean_omega) {
            for (k, (s, m)) in s.iter().zip(m).enumerate() {
                out.write_record([k.to_string(), m.to_string(), s.to_string()]).map_err(io)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

//! The workflow behind each subcommand.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;

use qlrlab::campaign::{run_campaign, CampaignConfig, CampaignResult, RunOutcome};
use qlrlab::chem::{rotate_integrals, ActiveSpace, KappaMatrix, MolecularSystem};
use qlrlab::mapping::{Encoding, QubitMapper, SpinLayout};
use qlrlab::metrics::{matrix_metrics, state_specific_std, MetricsReport};
use qlrlab::mitigation::{build_confusion, ConfusionKind, ConfusionMatrix};
use qlrlab::qlr::{
    build_matrices, energy_grid, solve, spectrum, Evaluator, MatrixKind, Parametrization, PauliCounts, PlanOptions,
    QlrPlan, QlrProblem, QlrSolution,
};
use qlrlab::sim::{oo_vqe, GroundState, MeasurementCache, NoiseModel, PreparedState, TUCCSDAnsatz, VqeOptions};
use serde::{Deserialize, Serialize};

use crate::artifact::{self, Written};
use crate::config::{parse_active, Mitigation, Mode, RunConfig};
use crate::error::CliError;

struct Setup {
    sys: MolecularSystem,
    space: ActiveSpace,
    mapper: QubitMapper,
    ansatz: TUCCSDAnsatz,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let sys = MolecularSystem::load(cfg.fcidump()?, cfg.system.dipole_prefix.as_deref())?;
    let space = parse_active(cfg.system.active.as_deref(), sys.n_orb, sys.n_elec)?;
    let na = space.active.len();
    let mapper = QubitMapper::for_spin_orbitals(Encoding::Parity, na, SpinLayout::Interleaved);
    let ansatz = TUCCSDAnsatz::new(2 * na, space.n_active_elec, &mapper)?;
    Ok(Setup { sys, space, mapper, ansatz })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateRecord {
    pub active_space: String,
    pub n_qubits: usize,
    pub fingerprint: String,
    #[serde(flatten)]
    pub ground_state: GroundState,
}

pub fn ground_state(cfg: RunConfig) -> Result<Written, CliError> {
    let s = setup(&cfg)?;
    let opts = VqeOptions {
        max_iterations: cfg.vqe.max_iterations,
        gradient_tolerance: cfg.vqe.gradient_tolerance,
        optimize_orbitals: cfg.vqe.optimize_orbitals,
        ..VqeOptions::default()
    };
    let theta0 = vec![0.0; s.ansatz.n_params()];
    let kappa0 = vec![0.0; s.space.rotation_pairs().len()];
    let gs = oo_vqe(&s.sys, &s.space, &s.ansatz, &s.mapper, &theta0, &kappa0, &opts)?;
    let record = GroundStateRecord {
        active_space: s.space.label(),
        n_qubits: s.ansatz.n_qubits(),
        fingerprint: format!("{:016x}", qlrlab::sim::measure::fingerprint(&s.ansatz, &gs.theta, &gs.kappa)),
        ground_state: gs,
    };
    println!("E_gs = {:.12} Eh after {} iterations", record.ground_state.energy, record.ground_state.iterations);
    artifact::write(&cfg, "ground-state", record)
}

struct Prepared {
    setup: Setup,
    gs: GroundState,
    state: PreparedState,
    plan: QlrPlan,
}

/// Loads the ground-state artifact named by the config (or the latest one), records its
/// path in the config and builds the qLR plan around it.
fn prepare(cfg: &mut RunConfig) -> Result<Prepared, CliError> {
    let path = match &cfg.inputs.ground_state {
        Some(p) => p.clone(),
        None => artifact::latest(&cfg.output.dir, "ground-state")?,
    };
    let gs_art: artifact::Artifact<GroundStateRecord> = artifact::read(&path, "ground-state")?;
    let (a, b) = (&gs_art.config.system, &cfg.system);
    if a.fcidump != b.fcidump || a.active != b.active {
        return Err(CliError::Validation(format!(
            "{} was computed for a different system or active space",
            path.display()
        )));
    }
    cfg.inputs.ground_state = Some(path);
    let s = setup(cfg)?;
    let gs = gs_art.result.ground_state;
    let state = PreparedState::new(&s.ansatz, &gs.theta, &gs.kappa)?;
    let rotated = rotate_integrals(&s.sys, &KappaMatrix::from_params(&s.space, &gs.kappa)?)?;
    let opts = PlanOptions { mirror_lower_triangle: cfg.qlr.mirror_lower_triangle };
    let plan = QlrPlan::build(&rotated, &s.space, cfg.qlr.parametrization, &s.mapper, opts)?;
    Ok(Prepared { setup: s, gs, state, plan })
}

fn noise_model(cfg: &RunConfig, n_qubits: usize) -> Result<NoiseModel, CliError> {
    if cfg.noise.readout == 0.0 && cfg.noise.depolarizing == 0.0 {
        return Ok(NoiseModel::none());
    }
    Ok(NoiseModel::uniform(n_qubits, cfg.noise.readout, cfg.noise.depolarizing)?)
}

fn confusion_kind(m: Mitigation) -> Option<ConfusionKind> {
    match m {
        Mitigation::None => None,
        Mitigation::Readout => Some(ConfusionKind::Readout),
        Mitigation::Ansatz => Some(ConfusionKind::AnsatzBased),
    }
}

fn confusion(cfg: &RunConfig, ansatz: &TUCCSDAnsatz, noise: &NoiseModel) -> Result<Option<ConfusionMatrix>, CliError> {
    let Some(kind) = confusion_kind(cfg.noise.mitigation) else {
        return Ok(None);
    };
    let m = match &cfg.noise.confusion_csv {
        Some(p) => {
            let m = ConfusionMatrix::read_csv(File::open(p)?)?;
            if m.kind() != kind || m.n_qubits() != ansatz.n_qubits() {
                return Err(CliError::Validation(format!(
                    "{} holds a {:?} matrix on {} qubits",
                    p.display(),
                    m.kind(),
                    m.n_qubits()
                )));
            }
            m
        }
        None => build_confusion(
            ansatz.n_qubits(),
            kind,
            Some(ansatz.n_pauli_layers()),
            noise,
            cfg.noise.mitigation_shots,
            cfg.sampling.seed,
        )?,
    };
    Ok(Some(m))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QlrRecord {
    pub parametrization: Parametrization,
    pub mode: Mode,
    pub ground_state_energy: f64,
    pub pauli_counts: PauliCounts,
    /// Clique measurements actually performed (sampled mode).
    pub cliques_measured: Option<u64>,
    pub solution: QlrSolution,
    pub problem: QlrProblem,
}

pub fn qlr(mut cfg: RunConfig) -> Result<Written, CliError> {
    let p = prepare(&mut cfg)?;
    let mut cliques_measured = None;
    let problem = match cfg.qlr.mode {
        Mode::Exact => build_matrices(&p.plan, Evaluator::Exact(&p.state.state))?,
        Mode::Sampled => {
            let noise = noise_model(&cfg, p.setup.ansatz.n_qubits())?;
            let m = confusion(&cfg, &p.setup.ansatz, &noise)?;
            let s = &cfg.sampling;
            let mut cache = MeasurementCache::new(p.state.fingerprint, s.shots, s.pauli_saving, noise, s.seed, 0)?;
            if let Some(m) = m {
                cache = cache.with_mitigation(Arc::new(m));
            }
            let problem = build_matrices(&p.plan, Evaluator::Sampled { state: &p.state, cache: &mut cache })?;
            cliques_measured = Some(cache.cliques_measured());
            problem
        }
    };
    let solution = solve(&problem)?;
    let record = QlrRecord {
        parametrization: cfg.qlr.parametrization,
        mode: cfg.qlr.mode,
        ground_state_energy: p.gs.energy,
        pauli_counts: p.plan.pauli_counts()?,
        cliques_measured,
        solution,
        problem,
    };
    for (k, (w, f)) in record.solution.omega_ev.iter().zip(&record.solution.oscillator_strengths).enumerate() {
        match f {
            Some(f) => println!("state {k}: {w:.6} eV  f = {f:.6}"),
            None => println!("state {k}: {w:.6} eV"),
        }
    }
    let valid = record.solution.valid;
    let spectrum_points = if valid { Some(broadened(&cfg, &record.solution)?) } else { None };
    let written = artifact::write(&cfg, "qlr", record)?;
    if let Some(points) = spectrum_points {
        write_spectrum_csv(&written.sibling("spectrum.csv"), &points)?;
    }
    if !valid {
        return Err(CliError::NonPhysical(format!(
            "E[2] has a negative eigenvalue; artifact {} marked invalid",
            written.path.display()
        )));
    }
    Ok(written)
}

fn broadened(cfg: &RunConfig, solution: &QlrSolution) -> Result<Vec<(f64, f64)>, CliError> {
    let s = &cfg.spectrum;
    Ok(spectrum(solution, s.fwhm_ev, &energy_grid(s.min_ev, s.max_ev, s.points))?)
}

fn write_spectrum_csv(path: &PathBuf, points: &[(f64, f64)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(["energy_ev", "intensity"]).map_err(err)?;
    for (x, y) in points {
        w.write_record([x.to_string(), y.to_string()]).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: u64,
    pub outcome: RunOutcome,
    pub omega: Option<Vec<f64>>,
    pub cliques_measured: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub pauli_saving: bool,
    pub runs: usize,
    pub shots_per_pauli: u64,
    pub valid_runs: usize,
    pub failure_fraction: f64,
    pub sigma_k: Option<Vec<f64>>,
    pub mean_omega: Option<Vec<f64>>,
    /// Fewer than two valid runs, so every σ_k is zero or missing.
    pub low_statistics: bool,
    pub per_run: Vec<RunSummary>,
}

impl From<&CampaignResult> for CampaignSummary {
    fn from(r: &CampaignResult) -> Self {
        Self {
            pauli_saving: r.pauli_saving,
            runs: r.runs,
            shots_per_pauli: r.shots_per_pauli,
            valid_runs: r.valid_runs,
            failure_fraction: r.failure_fraction,
            sigma_k: r.sigma_k.clone(),
            mean_omega: r.mean_omega.clone(),
            low_statistics: r.valid_runs < 2,
            per_run: r
                .per_run
                .iter()
                .map(|x| RunSummary {
                    run_id: x.run_id,
                    outcome: x.outcome,
                    omega: x.solution.as_ref().map(|s| s.omega.clone()),
                    cliques_measured: x.cliques_measured,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub parametrization: Parametrization,
    pub pauli_counts: PauliCounts,
    pub campaigns: Vec<CampaignSummary>,
}

/// Worker count: the flag (default all cores), capped by `QLRLAB_THREADS`.
pub fn worker_threads(flag: Option<usize>) -> Result<usize, CliError> {
    let mut n = flag.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Ok(cap) = std::env::var("QLRLAB_THREADS") {
        let cap: usize = cap
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("QLRLAB_THREADS must be a positive integer, got {cap:?}")))?;
        n = n.min(cap);
    }
    if n == 0 {
        return Err(CliError::Validation("thread count must be positive".into()));
    }
    Ok(n)
}

pub fn campaign(mut cfg: RunConfig, threads: Option<usize>) -> Result<Written, CliError> {
    let p = prepare(&mut cfg)?;
    let noise = noise_model(&cfg, p.setup.ansatz.n_qubits())?;
    let mitigation = confusion(&cfg, &p.setup.ansatz, &noise)?.map(Arc::new);
    let savings = if cfg.sampling.paired { vec![true, false] } else { vec![cfg.sampling.pauli_saving] };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads(threads)?)
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    let mut results = Vec::new();
    for saving in savings {
        let cc = CampaignConfig {
            runs: cfg.sampling.runs,
            shots: cfg.sampling.shots,
            pauli_saving: saving,
            noise: noise.clone(),
            master_seed: cfg.sampling.seed,
        };
        let r = pool.install(|| run_campaign(&p.plan, &p.state, &cc, mitigation.clone()))?;
        println!(
            "pauli saving {}: {} / {} valid runs, failure fraction {:.3}",
            if saving { "on" } else { "off" },
            r.valid_runs,
            r.runs,
            r.failure_fraction
        );
        results.push(r);
    }
    let record = CampaignRecord {
        parametrization: cfg.qlr.parametrization,
        pauli_counts: p.plan.pauli_counts()?,
        campaigns: results.iter().map(CampaignSummary::from).collect(),
    };
    let written = artifact::write(&cfg, "campaign", record)?;
    for r in &results {
        let tag = if r.pauli_saving { "sigma-ps-on.csv" } else { "sigma-ps-off.csv" };
        r.write_sigma_csv(BufWriter::new(File::create(written.sibling(tag))?))?;
    }
    if results.iter().any(|r| r.valid_runs == 0) {
        return Err(CliError::NoValidRuns(written.path.display().to_string()));
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpecificStd {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub parametrization: Parametrization,
    pub mode: Mode,
    pub report: MetricsReport,
    /// Absent when the solution has no response vectors.
    pub state_specific_std: Option<StateSpecificStd>,
}

fn load_qlr(cfg: &mut RunConfig) -> Result<QlrRecord, CliError> {
    let path = match &cfg.inputs.qlr {
        Some(p) => p.clone(),
        None => artifact::latest(&cfg.output.dir, "qlr")?,
    };
    let a: artifact::Artifact<QlrRecord> = artifact::read(&path, "qlr")?;
    cfg.inputs.qlr = Some(path);
    Ok(a.result)
}

pub fn metrics(mut cfg: RunConfig) -> Result<Written, CliError> {
    let q = load_qlr(&mut cfg)?;
    let report = matrix_metrics(&q.problem);
    let state_specific_std = if q.solution.valid && !q.solution.z.is_empty() {
        Some(StateSpecificStd {
            a: state_specific_std(&report, &q.solution, MatrixKind::A)?,
            b: state_specific_std(&report, &q.solution, MatrixKind::B)?,
            sigma: state_specific_std(&report, &q.solution, MatrixKind::Sigma)?,
        })
    } else {
        None
    };
    let table = metrics_table(&report);
    print!("{table}");
    let record = MetricsRecord { parametrization: q.parametrization, mode: q.mode, report, state_specific_std };
    let written = artifact::write(&cfg, "metrics", record)?;
    std::fs::write(written.sibling("txt"), table)?;
    Ok(written)
}

/// Aligned text table: one row per matrix, then the conditioning of the eigenproblem.
pub fn metrics_table(r: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<12}{:>14}{:>14}{:>14}{:>14}", "matrix", "cond", "std", "std_nc", "CV");
    for (name, m) in [("A", &r.a), ("B", &r.b), ("Sigma", &r.sigma)] {
        let _ = writeln!(
            s,
            "{:<12}{:>14}{:>14}{:>14}{:>14}",
            name,
            m.cond.to_string(),
            format!("{:.6}", m.std),
            format!("{:.6}", m.std_nc),
            m.cv.to_string()
        );
    }
    let _ = writeln!(s, "{:<12}{:>14}", "E2", r.cond_e2.to_string());
    let _ = writeln!(s, "{:<12}{:>14}", "S2^-1 E2", r.cond_s2_inv_e2.to_string());
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub fwhm_ev: f64,
    pub peaks_ev: Vec<f64>,
    pub oscillator_strengths: Vec<Option<f64>>,
    pub points: Vec<(f64, f64)>,
}

pub fn spectrum_cmd(mut cfg: RunConfig) -> Result<Written, CliError> {
    let q = load_qlr(&mut cfg)?;
    let points = broadened(&cfg, &q.solution)?;
    let record = SpectrumRecord {
        fwhm_ev: cfg.spectrum.fwhm_ev,
        peaks_ev: q.solution.omega_ev.clone(),
        oscillator_strengths: q.solution.oscillator_strengths.clone(),
        points,
    };
    let written = artifact::write(&cfg, "spectrum", &record)?;
    write_spectrum_csv(&written.sibling("csv"), &record.points)?;
    Ok(written)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionRecord {
    pub kind: ConfusionKind,
    pub n_qubits: usize,
    pub ansatz_pauli_layers: usize,
    pub shots_per_column: u64,
    pub condition: f64,
    /// Row-major; column `i` is the outcome distribution for prepared bitstring `i`.
    pub matrix: Vec<Vec<f64>>,
}

pub fn mitigate_build(cfg: RunConfig) -> Result<Written, CliError> {
    let kind = confusion_kind(cfg.noise.mitigation)
        .ok_or_else(|| CliError::Validation("mitigate-build needs --mitigation readout or ansatz".into()))?;
    if cfg.noise.confusion_csv.is_some() {
        return Err(CliError::Validation("mitigate-build builds a new matrix; drop confusion_csv".into()));
    }
    let s = setup(&cfg)?;
    let noise = noise_model(&cfg, s.ansatz.n_qubits())?;
    let m = confusion(&cfg, &s.ansatz, &noise)?.expect("mitigation kind checked above");
    let record = ConfusionRecord {
        kind,
        n_qubits: m.n_qubits(),
        ansatz_pauli_layers: s.ansatz.n_pauli_layers(),
        shots_per_column: cfg.noise.mitigation_shots,
        condition: m.condition(),
        matrix: m.matrix().row_iter().map(|r| r.iter().copied().collect()).collect(),
    };
    println!("{:?} confusion matrix on {} qubits, condition {:.4}", kind, m.n_qubits(), m.condition());
    let written = artifact::write(&cfg, "mitigate-build", record)?;
    m.write_csv(BufWriter::new(File::create(written.sibling("csv"))?))?;
    Ok(written)
}

//! Run configuration: TOML file, embedded artifact config and command-line overrides.

use std::path::{Path, PathBuf};

use qlrlab::chem::ActiveSpace;
use qlrlab::qlr::Parametrization;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mitigation {
    None,
    Readout,
    Ansatz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub fcidump: Option<PathBuf>,
    /// Dipole integrals are read from `<prefix>.dx`, `.dy` and `.dz`.
    pub dipole_prefix: Option<PathBuf>,
    /// `"n_elec:orb,orb,..."`; the full orbital space when absent.
    pub active: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VqeConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub optimize_orbitals: bool,
}

impl Default for VqeConfig {
    fn default() -> Self {
        let d = qlrlab::sim::VqeOptions::default();
        Self { max_iterations: d.max_iterations, gradient_tolerance: d.gradient_tolerance, optimize_orbitals: d.optimize_orbitals }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QlrConfig {
    pub parametrization: Parametrization,
    pub mode: Mode,
    pub mirror_lower_triangle: bool,
}

impl Default for QlrConfig {
    fn default() -> Self {
        Self { parametrization: Parametrization::Naive, mode: Mode::Exact, mirror_lower_triangle: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub shots: u64,
    pub runs: usize,
    pub pauli_saving: bool,
    /// Run the campaign with saving on and off under one artifact.
    pub paired: bool,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { shots: 10_000, runs: 250, pauli_saving: true, paired: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub readout: f64,
    pub depolarizing: f64,
    pub mitigation: Mitigation,
    /// Shots per confusion-matrix column.
    pub mitigation_shots: u64,
    /// Reuse a confusion matrix exported by `mitigate-build`.
    pub confusion_csv: Option<PathBuf>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { readout: 0.0, depolarizing: 0.0, mitigation: Mitigation::None, mitigation_shots: 100_000, confusion_csv: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub fwhm_ev: f64,
    pub min_ev: f64,
    pub max_ev: f64,
    pub points: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { fwhm_ev: 0.5, min_ev: 0.0, max_ev: 30.0, points: 601 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Ground-state artifact; the latest one in the output directory when absent.
    pub ground_state: Option<PathBuf>,
    /// qLR artifact for `metrics` and `spectrum`.
    pub qlr: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("qlrlab-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub vqe: VqeConfig,
    pub qlr: QlrConfig,
    pub sampling: SamplingConfig,
    pub noise: NoiseConfig,
    pub spectrum: SpectrumConfig,
    pub inputs: InputConfig,
    pub output: OutputConfig,
}

/// Flags shared by every subcommand; each one overrides the matching config key.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML config file, or a JSON artifact whose embedded config is reused.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub fcidump: Option<PathBuf>,
    #[arg(long)]
    pub dipole_prefix: Option<PathBuf>,
    /// Active space as "n_elec:orb,orb,...".
    #[arg(long)]
    pub active: Option<String>,
    #[arg(long)]
    pub parametrization: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, value_enum)]
    pub pauli_saving: Option<OnOff>,
    /// Campaign only: run with saving on and off.
    #[arg(long)]
    pub paired: bool,
    #[arg(long)]
    pub noise_readout: Option<f64>,
    #[arg(long)]
    pub noise_depol: Option<f64>,
    #[arg(long, value_enum)]
    pub mitigation: Option<Mitigation>,
    #[arg(long)]
    pub confusion_csv: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub fwhm: Option<f64>,
    #[arg(long)]
    pub ground_state: Option<PathBuf>,
    #[arg(long)]
    pub qlr: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for campaigns (capped by QLRLAB_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let cfg = v
            .get("config")
            .ok_or_else(|| CliError::Validation(format!("{} has no embedded config", path.display())))?;
        serde_json::from_value(cfg.clone()).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(p) => read_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &o.fcidump {
            c.system.fcidump = Some(v.clone());
        }
        if let Some(v) = &o.dipole_prefix {
            c.system.dipole_prefix = Some(v.clone());
        }
        if let Some(v) = &o.active {
            c.system.active = Some(v.clone());
        }
        if let Some(v) = &o.parametrization {
            c.qlr.parametrization = v.parse().map_err(|e: qlrlab::Error| CliError::Validation(e.to_string()))?;
        }
        if let Some(v) = o.mode {
            c.qlr.mode = v;
        }
        if let Some(v) = o.shots {
            c.sampling.shots = v;
        }
        if let Some(v) = o.runs {
            c.sampling.runs = v;
        }
        if let Some(v) = o.pauli_saving {
            c.sampling.pauli_saving = v == OnOff::On;
        }
        if o.paired {
            c.sampling.paired = true;
        }
        if let Some(v) = o.noise_readout {
            c.noise.readout = v;
        }
        if let Some(v) = o.noise_depol {
            c.noise.depolarizing = v;
        }
        if let Some(v) = o.mitigation {
            c.noise.mitigation = v;
        }
        if let Some(v) = &o.confusion_csv {
            c.noise.confusion_csv = Some(v.clone());
        }
        if let Some(v) = o.seed {
            c.sampling.seed = v;
        }
        if let Some(v) = o.fwhm {
            c.spectrum.fwhm_ev = v;
        }
        if let Some(v) = &o.ground_state {
            c.inputs.ground_state = Some(v.clone());
        }
        if let Some(v) = &o.qlr {
            c.inputs.qlr = Some(v.clone());
        }
        if let Some(v) = &o.out {
            c.output.dir = v.clone();
        }
        Ok(c)
    }

    /// Checks that do not need the molecular integrals.
    pub fn validate(&self) -> Result<(), CliError> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(CliError::Validation(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        prob("noise.readout", self.noise.readout)?;
        prob("noise.depolarizing", self.noise.depolarizing)?;
        if self.sampling.shots == 0 {
            return Err(CliError::Validation("sampling.shots must be positive".into()));
        }
        if self.noise.mitigation != Mitigation::None && self.noise.mitigation_shots == 0 {
            return Err(CliError::Validation("noise.mitigation_shots must be positive".into()));
        }
        if !(self.spectrum.fwhm_ev > 0.0) || !(self.spectrum.max_ev > self.spectrum.min_ev) || self.spectrum.points < 2 {
            return Err(CliError::Validation("spectrum needs fwhm_ev > 0, max_ev > min_ev and points >= 2".into()));
        }
        for p in [&self.system.fcidump, &self.noise.confusion_csv, &self.inputs.ground_state, &self.inputs.qlr]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(CliError::Validation(format!("file not found: {}", p.display())));
            }
        }
        if let Some(prefix) = &self.system.dipole_prefix {
            for s in ["dx", "dy", "dz"] {
                let p = dipole_path(prefix, s);
                if !p.is_file() {
                    return Err(CliError::Validation(format!("file not found: {}", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn fcidump(&self) -> Result<&Path, CliError> {
        self.system.fcidump.as_deref().ok_or_else(|| CliError::Validation("no FCIDUMP given (--fcidump)".into()))
    }
}

pub fn dipole_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Parses `"n_elec:orb,orb,..."` against a system with `n_orb` orbitals and `n_elec` electrons.
pub fn parse_active(spec: Option<&str>, n_orb: usize, n_elec: usize) -> Result<ActiveSpace, CliError> {
    let bad = |msg: String| CliError::Validation(format!("--active: {msg}"));
    let Some(spec) = spec else {
        return ActiveSpace::full(n_orb, n_elec).map_err(|e| bad(e.to_string()));
    };
    let (ne, orbs) = spec.split_once(':').ok_or_else(|| bad(format!("expected n_elec:orb,orb,..., got {spec:?}")))?;
    let n_active_elec: usize = ne.trim().parse().map_err(|_| bad(format!("bad electron count {ne:?}")))?;
    let active = orbs
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| bad(format!("bad orbital index {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    ActiveSpace::new(n_orb, n_elec, n_active_elec, active).map_err(|e| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn active_spec_parses() {
        let s = parse_active(Some("2:1,2"), 6, 4).unwrap();
        assert_eq!(s.active, vec![1, 2]);
        assert_eq!(s.inactive, vec![0]);
        assert!(parse_active(Some("2-1,2"), 6, 4).is_err());
        assert!(parse_active(Some("2:1,x"), 6, 4).is_err());
        assert_eq!(parse_active(None, 2, 2).unwrap().active, vec![0, 1]);
    }

    #[test]
    fn toml_sections_fill_defaults() {
        let c: RunConfig = toml::from_str("[sampling]\nshots = 500\n[qlr]\nparametrization = \"allproj\"\n").unwrap();
        assert_eq!(c.sampling.shots, 500);
        assert_eq!(c.sampling.runs, 250);
        assert_eq!(c.qlr.parametrization, Parametrization::Allproj);
        assert!(toml::from_str::<RunConfig>("[sampling]\nshot = 1\n").is_err());
    }

    #[test]
    fn flags_override_the_file() {
        let o = Overrides { shots: Some(7), pauli_saving: Some(OnOff::Off), ..Default::default() };
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!(c.sampling.shots, 7);
        assert!(!c.sampling.pauli_saving);
        let bad = Overrides { parametrization: Some("half".into()), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&bad), Err(CliError::Validation(_))));
    }
}

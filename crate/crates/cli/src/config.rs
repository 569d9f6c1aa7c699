//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use nmpemba::bath::{BathSpec, SpectralDensity};
use nmpemba::gaussian::SystemSpec;
use nmpemba::pipeline::{ModelSpec, Quench, QuenchProfile};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub baths: Vec<BathConfig>,
    #[serde(default)]
    pub run: RunConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// One on-site energy per dot.
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub hopping: f64,
    #[serde(default)]
    pub interaction: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub gamma: f64,
    pub beta: f64,
    pub mu: f64,
    #[serde(default = "one")]
    pub bandwidth: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Map extraction window.
    pub tau_max: f64,
    pub dt: f64,
    /// Chain sites per bath.
    pub n_modes: usize,
    pub quadrature_points: usize,
    pub epsilon_memory: f64,
    pub amplitude_tolerance: f64,
    pub relaxation_tau_max: f64,
    pub relaxation_dt: f64,
    pub quench: QuenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tau_max: 150.0,
            dt: 0.05,
            n_modes: 200,
            quadrature_points: 2000,
            epsilon_memory: 1e-3,
            amplitude_tolerance: 1e-6,
            relaxation_tau_max: 400.0,
            relaxation_dt: 0.25,
            quench: QuenchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuenchConfig {
    pub tau_q: f64,
    pub profile: QuenchProfile,
}

impl Default for QuenchConfig {
    fn default() -> Self {
        Self { tau_q: 0.0, profile: QuenchProfile::Sudden }
    }
}

/// Axes of a cartesian parameter grid. Absent axes keep the values in `[[baths]]`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    /// Sets every bath's chemical potential.
    pub mu: Option<Vec<f64>>,
    /// Mean and half difference of `μ_L`, `μ_R` (two baths only).
    pub mu_bar: Option<Vec<f64>>,
    pub delta_mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("output"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl OutputConfig {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }
}

/// A parsed configuration with the digest of its source text.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub sha256: String,
}

pub fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        Failure::Config(m) => Failure::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<Loaded, Failure> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
    config.check()?;
    let sha256 = format!("{:x}", Sha256::digest(text.as_bytes()));
    Ok(Loaded { config, sha256 })
}

fn positive(key: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Config(format!("{key} must be positive and finite (got {v})")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), Failure> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Config(format!("{key} must be non-negative and finite (got {v})")))
    }
}

impl ExperimentConfig {
    fn check(&self) -> Result<(), Failure> {
        self.system_spec().validate().map_err(|e| Failure::Config(format!("system: {e}")))?;
        if self.baths.is_empty() || self.baths.len() > 2 {
            return Err(Failure::Config(format!("baths: expected 1 or 2 entries, found {}", self.baths.len())));
        }
        for (k, b) in self.baths.iter().enumerate() {
            non_negative(&format!("baths[{k}].gamma"), b.gamma)?;
            non_negative(&format!("baths[{k}].beta"), b.beta)?;
            positive(&format!("baths[{k}].bandwidth"), b.bandwidth)?;
            if !b.mu.is_finite() {
                return Err(Failure::Config(format!("baths[{k}].mu must be finite")));
            }
        }
        let r = &self.run;
        positive("run.tau_max", r.tau_max)?;
        positive("run.dt", r.dt)?;
        positive("run.epsilon_memory", r.epsilon_memory)?;
        positive("run.amplitude_tolerance", r.amplitude_tolerance)?;
        positive("run.relaxation_tau_max", r.relaxation_tau_max)?;
        positive("run.relaxation_dt", r.relaxation_dt)?;
        non_negative("run.quench.tau_q", r.quench.tau_q)?;
        if r.tau_max < 4.0 * r.dt {
            return Err(Failure::Config("run.tau_max must span at least four steps of run.dt".into()));
        }
        let steps = r.quench.tau_q / r.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Failure::Config("run.quench.tau_q must be a multiple of run.dt".into()));
        }
        if r.n_modes == 0 {
            return Err(Failure::Config("run.n_modes must be at least 1".into()));
        }
        if r.quadrature_points < 2 * r.n_modes + 2 {
            return Err(Failure::Config("run.quadrature_points must exceed twice run.n_modes".into()));
        }
        if let Some(s) = &self.sweep {
            s.check(self.baths.len())?;
        }
        if self.output.formats.is_empty() {
            return Err(Failure::Config("output.formats is empty".into()));
        }
        Ok(())
    }

    pub fn system_spec(&self) -> SystemSpec {
        SystemSpec {
            epsilon: self.system.epsilon.clone(),
            hopping: self.system.hopping,
            interaction: self.system.interaction,
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec, Failure> {
        self.model_spec_with(&self.baths, self.run.n_modes)
    }

    pub fn model_spec_with(&self, baths: &[BathConfig], n_modes: usize) -> Result<ModelSpec, Failure> {
        let baths = baths
            .iter()
            .map(|b| {
                let sd = SpectralDensity::new(b.gamma, b.bandwidth)?;
                BathSpec::new(sd, b.beta, b.mu, n_modes)
            })
            .collect::<nmpemba::Result<Vec<_>>>()
            .map_err(|e| Failure::Config(format!("baths: {e}")))?;
        Ok(ModelSpec { system: self.system_spec(), baths, quadrature_points: self.run.quadrature_points })
    }

    pub fn quench(&self) -> Quench {
        Quench { tau_q: self.run.quench.tau_q, profile: self.run.quench.profile }
    }

    /// Require `modes` dots and `baths` reservoirs for a subcommand.
    pub fn expect_shape(&self, what: &str, modes: usize, baths: usize) -> Result<(), Failure> {
        if self.system.epsilon.len() != modes || self.baths.len() != baths {
            return Err(Failure::Config(format!(
                "{what} needs {modes} dot(s) and {baths} bath(s); config has {} and {}",
                self.system.epsilon.len(),
                self.baths.len()
            )));
        }
        Ok(())
    }
}

fn check_axis(key: &str, axis: &Option<Vec<f64>>, min: f64) -> Result<(), Failure> {
    if let Some(v) = axis {
        if v.is_empty() {
            return Err(Failure::Config(format!("sweep.{key} is empty")));
        }
        if v.iter().any(|x| !x.is_finite() || *x < min) {
            return Err(Failure::Config(format!("sweep.{key} has a value below {min} or non-finite")));
        }
    }
    Ok(())
}

impl SweepConfig {
    fn check(&self, n_baths: usize) -> Result<(), Failure> {
        check_axis("gamma", &self.gamma, 0.0)?;
        check_axis("beta", &self.beta, 0.0)?;
        check_axis("mu", &self.mu, f64::NEG_INFINITY)?;
        check_axis("mu_bar", &self.mu_bar, f64::NEG_INFINITY)?;
        check_axis("delta_mu", &self.delta_mu, f64::NEG_INFINITY)?;
        let bias = self.mu_bar.is_some() || self.delta_mu.is_some();
        if bias && n_baths != 2 {
            return Err(Failure::Config("sweep.mu_bar and sweep.delta_mu need two baths".into()));
        }
        if bias && self.mu.is_some() {
            return Err(Failure::Config("sweep.mu cannot be combined with sweep.mu_bar or sweep.delta_mu".into()));
        }
        Ok(())
    }

    /// Grid points in row-major order over (gamma, beta, mu | mu_bar, delta_mu).
    pub fn points(&self, baths: &[BathConfig]) -> Vec<Vec<BathConfig>> {
        let axis = |a: &Option<Vec<f64>>| a.clone().map_or(vec![None], |v| v.into_iter().map(Some).collect());
        let mut out = Vec::new();
        for g in axis(&self.gamma) {
            for b in axis(&self.beta) {
                for m in axis(&self.mu) {
                    for mb in axis(&self.mu_bar) {
                        for dm in axis(&self.delta_mu) {
                            let mut point: Vec<BathConfig> = baths.to_vec();
                            for bath in point.iter_mut() {
                                if let Some(g) = g {
                                    bath.gamma = g;
                                }
                                if let Some(b) = b {
                                    bath.beta = b;
                                }
                                if let Some(m) = m {
                                    bath.mu = m;
                                }
                            }
                            if mb.is_some() || dm.is_some() {
                                let bar = mb.unwrap_or(0.5 * (baths[0].mu + baths[1].mu));
                                let half = dm.unwrap_or(0.5 * (baths[0].mu - baths[1].mu));
                                point[0].mu = bar + half;
                                point[1].mu = bar - half;
                            }
                            out.push(point);
                        }
                    }
                }
            }
        }
        out
    }
}

//! Experiment configuration: one TOML file per run, tagged by `kind`, fully
//! determining every output byte together with the seed.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use srlab::approx::Method;
use srlab::dict::RateSpec;

fn default_calibration_draws() -> u64 {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    ApproxSweep(ApproxSweep),
    BoundsTable(BoundsTable),
    RefineStaircase(RefineStaircase),
    QuantCheck(QuantCheck),
    CoveringProbe(CoveringProbe),
}

/// Worst-case and average distortion of sparse representation over a grid of
/// dictionary shapes, sparsities, and methods.
#[derive(Debug, Clone, Deserialize)]
pub struct ApproxSweep {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub svg: bool,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub sizes: Vec<u64>,
    #[serde(default)]
    pub rates: Vec<f64>,
    pub ks: Vec<usize>,
    pub trials: u64,
    pub methods: Vec<String>,
}

/// Distortion bound values over a parameter grid; no sampling involved.
#[derive(Debug, Clone, Deserialize)]
pub struct BoundsTable {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub sizes: Vec<u64>,
    #[serde(default)]
    pub rates: Vec<f64>,
    pub ks: Vec<usize>,
}

/// Successive refinement staircases, one output table per dictionary shape.
#[derive(Debug, Clone, Deserialize)]
pub struct RefineStaircase {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub svg: bool,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub sizes: Vec<u64>,
    #[serde(default)]
    pub rates: Vec<f64>,
    pub stages: usize,
    pub trials: u64,
    pub mode: String,
    #[serde(default)]
    pub d_design: Option<f64>,
    #[serde(default = "default_calibration_draws")]
    pub calibration_draws: u64,
}

/// Coefficient quantization error statistics against the grid bound.
#[derive(Debug, Clone, Deserialize)]
pub struct QuantCheck {
    #[serde(default)]
    pub seed: u64,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub sizes: Vec<u64>,
    #[serde(default)]
    pub rates: Vec<f64>,
    pub ks: Vec<usize>,
    pub ls: Vec<u32>,
    pub trials: u64,
}

/// Random codebook covering quality in coefficient space.
#[derive(Debug, Clone, Deserialize)]
pub struct CoveringProbe {
    #[serde(default)]
    pub seed: u64,
    pub subspace_dims: Vec<usize>,
    pub bits: Vec<u32>,
    pub trials: u64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentConfig::ApproxSweep(_) => "approx-sweep",
            ExperimentConfig::BoundsTable(_) => "bounds-table",
            ExperimentConfig::RefineStaircase(_) => "refine-staircase",
            ExperimentConfig::QuantCheck(_) => "quant-check",
            ExperimentConfig::CoveringProbe(_) => "covering-probe",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::ApproxSweep(c) => c.seed,
            ExperimentConfig::BoundsTable(_) => 0,
            ExperimentConfig::RefineStaircase(c) => c.seed,
            ExperimentConfig::QuantCheck(c) => c.seed,
            ExperimentConfig::CoveringProbe(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::ApproxSweep(c) => c.seed = seed,
            ExperimentConfig::BoundsTable(_) => {}
            ExperimentConfig::RefineStaircase(c) => c.seed = seed,
            ExperimentConfig::QuantCheck(c) => c.seed = seed,
            ExperimentConfig::CoveringProbe(c) => c.seed = seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::ApproxSweep(c) => {
                check_grid(&c.dims, &c.sizes, &c.rates)?;
                check_ks(&c.ks, &c.dims)?;
                check_trials(c.trials)?;
                if c.methods.is_empty() {
                    bail!("methods must not be empty");
                }
                for name in &c.methods {
                    name.parse::<Method>().map_err(anyhow::Error::from)?;
                }
            }
            ExperimentConfig::BoundsTable(c) => {
                check_grid(&c.dims, &c.sizes, &c.rates)?;
                check_ks(&c.ks, &c.dims)?;
            }
            ExperimentConfig::RefineStaircase(c) => {
                check_grid(&c.dims, &c.sizes, &c.rates)?;
                check_trials(c.trials)?;
                if c.stages == 0 {
                    bail!("stages must be at least 1");
                }
                match c.mode.as_str() {
                    "adaptive" => {
                        if c.d_design.is_some() {
                            bail!("d_design applies to fixed mode only");
                        }
                    }
                    "fixed" => {
                        if let Some(d) = c.d_design {
                            if !(d.is_finite() && d > 0.0) {
                                bail!("d_design must be positive and finite, got {d}");
                            }
                        } else if c.calibration_draws == 0 {
                            bail!("calibration_draws must be at least 1");
                        }
                    }
                    other => bail!("unknown mode {other:?}, expected fixed or adaptive"),
                }
            }
            ExperimentConfig::QuantCheck(c) => {
                check_grid(&c.dims, &c.sizes, &c.rates)?;
                check_ks(&c.ks, &c.dims)?;
                check_trials(c.trials)?;
                if c.ls.is_empty() || c.ls.contains(&0) {
                    bail!("grid levels ls must be nonempty and positive");
                }
            }
            ExperimentConfig::CoveringProbe(c) => {
                check_trials(c.trials)?;
                if c.subspace_dims.is_empty() || c.subspace_dims.contains(&0) {
                    bail!("subspace_dims must be nonempty and positive");
                }
                if c.bits.is_empty() {
                    bail!("bits must not be empty");
                }
                for &b in &c.bits {
                    if b == 0 || b > 26 {
                        bail!("bits entries must be in 1..=26, got {b}");
                    }
                }
            }
        }
        Ok(())
    }
}

/// The atom counts for one signal dimension, taken from explicit sizes or
/// derived from rates.
pub fn resolve_sizes(dim: usize, sizes: &[u64], rates: &[f64]) -> Result<Vec<u64>> {
    if sizes.is_empty() {
        rates
            .iter()
            .map(|&r| Ok(RateSpec::new(dim, r)?.size()?))
            .collect()
    } else {
        Ok(sizes.to_vec())
    }
}

fn check_grid(dims: &[usize], sizes: &[u64], rates: &[f64]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        bail!("dims must be nonempty and positive");
    }
    match (sizes.is_empty(), rates.is_empty()) {
        (true, true) => bail!("give sizes or rates"),
        (false, false) => bail!("give sizes or rates, not both"),
        _ => {}
    }
    if sizes.contains(&0) {
        bail!("sizes must be positive");
    }
    for &r in rates {
        if !(r.is_finite() && r > 0.0) {
            bail!("rates must be positive and finite, got {r}");
        }
    }
    Ok(())
}

fn check_ks(ks: &[usize], dims: &[usize]) -> Result<()> {
    if ks.is_empty() || ks.contains(&0) {
        bail!("ks must be nonempty and positive");
    }
    let max_k = *ks.iter().max().expect("nonempty");
    let min_n = *dims.iter().min().expect("nonempty");
    if max_k >= min_n {
        bail!("sparsity {max_k} must stay below the smallest dimension {min_n}");
    }
    Ok(())
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < 2 {
        bail!("trials must be at least 2, got {trials}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    #[test]
    fn approx_sweep_parses_and_validates() {
        let config = parse(
            "kind = \"approx-sweep\"\nseed = 7\ndims = [16]\nsizes = [128]\nks = [1, 2]\ntrials = 100\nmethods = [\"omp\", \"greedy\"]\n",
        )
        .unwrap();
        assert_eq!(config.kind_name(), "approx-sweep");
        assert_eq!(config.seed(), 7);
    }

    #[test]
    fn zero_trials_are_rejected() {
        let err = parse(
            "kind = \"approx-sweep\"\ndims = [16]\nsizes = [128]\nks = [1]\ntrials = 0\nmethods = [\"omp\"]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("trials"));
    }

    #[test]
    fn sizes_and_rates_are_mutually_exclusive() {
        assert!(parse(
            "kind = \"bounds-table\"\ndims = [64]\nsizes = [256]\nrates = [0.25]\nks = [1]\n"
        )
        .is_err());
        assert!(parse("kind = \"bounds-table\"\ndims = [64]\nks = [1]\n").is_err());
    }

    #[test]
    fn rates_resolve_to_rounded_sizes() {
        assert_eq!(resolve_sizes(64, &[], &[0.125]).unwrap(), vec![256]);
        assert_eq!(resolve_sizes(16, &[32], &[]).unwrap(), vec![32]);
    }

    #[test]
    fn refine_modes_are_checked() {
        let base = "kind = \"refine-staircase\"\ndims = [32]\nsizes = [64]\nstages = 3\ntrials = 10\n";
        assert!(parse(&format!("{base}mode = \"adaptive\"\n")).is_ok());
        assert!(parse(&format!("{base}mode = \"fixed\"\n")).is_ok());
        assert!(parse(&format!("{base}mode = \"fixed\"\nd_design = -1.0\n")).is_err());
        assert!(parse(&format!("{base}mode = \"adaptive\"\nd_design = 0.5\n")).is_err());
        assert!(parse(&format!("{base}mode = \"median\"\n")).is_err());
    }

    #[test]
    fn unknown_kinds_fail_to_parse() {
        assert!(parse("kind = \"magic\"\n").is_err());
    }
}

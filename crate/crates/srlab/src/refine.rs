//! Successive refinement coding for white Gaussian sources. Every stage
//! reuses the same dictionary, transmits one atom index, and applies either a
//! deterministic scaling schedule or a transmitted least-squares coefficient;
//! decoding any prefix of the stages yields a progressively better
//! reconstruction.

use rayon::prelude::*;

use crate::bounds::gaussian_dr;
use crate::dict::Dictionary;
use crate::error::{Error, Result};
use crate::rng::{derive, sample_gaussian, Seed};
use crate::signal::{axpy, dot, norm_sq, norm_sq_slice, sub, Signal};
use crate::stats::{mean_stderr, pairwise_sum};

/// Per-stage coefficient rule used by the encoder.
///
/// `Fixed` applies the deterministic schedule x_j = d_design^((j-1)/2), so
/// the decoder regenerates every scaling from the design constant alone.
/// `Adaptive` transmits the least-squares coefficient of the selected atom as
/// side information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingMode {
    Fixed { d_design: f64 },
    Adaptive,
}

impl ScalingMode {
    pub fn name(&self) -> &'static str {
        match self {
            ScalingMode::Fixed { .. } => "fixed",
            ScalingMode::Adaptive => "adaptive",
        }
    }
}

impl std::fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Bits needed to name one of `size` equally likely candidates.
pub fn index_bits(size: usize) -> u32 {
    size.max(1).next_power_of_two().trailing_zeros()
}

/// A refinement description: one dictionary index per stage plus the scaling
/// applied to that atom. The reconstruction from the first j stages is the
/// sum of scalings[i] * sqrt(n) * atom(indices[i]) over i < j; the sqrt(n)
/// factor moves unit atoms to the radius the source lives at.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementCode {
    pub indices: Vec<usize>,
    pub scalings: Vec<f64>,
    pub stage_bits: Vec<u32>,
    pub mode: ScalingMode,
    dim: usize,
}

impl RefinementCode {
    pub fn stages(&self) -> usize {
        self.indices.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index bits transmitted through stage j.
    pub fn bits_through(&self, j: usize) -> u64 {
        self.stage_bits[..j].iter().map(|&b| u64::from(b)).sum()
    }

    /// Coefficient side information through stage j: adaptive scalings travel
    /// as one 64-bit word each, fixed scalings are public constants.
    pub fn side_info_bits(&self, j: usize) -> u64 {
        match self.mode {
            ScalingMode::Fixed { .. } => 0,
            ScalingMode::Adaptive => 64 * j as u64,
        }
    }
}

/// One row of a rate-distortion staircase sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: usize,
    pub bits: u64,
    pub rate_per_dim: f64,
    pub mean_dist: f64,
    pub stderr: f64,
    pub ideal_dist: f64,
}

/// Tail behavior of the normalized source norm ||U|| / sqrt(n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormTail {
    /// Probability that the normalized norm exceeds 1 + eps.
    pub tail_prob: f64,
    /// Mean of the normalized norm restricted to the tail event, equal to the
    /// conditional mean times the tail probability.
    pub tail_contribution: f64,
}

fn run_encoder(
    u: &Signal,
    dict: &Dictionary,
    widths: &[usize],
    mode: ScalingMode,
) -> Result<(RefinementCode, Vec<f64>)> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    if u.dim() != dict.dim() {
        return Err(Error::DimensionMismatch { expected: dict.dim(), got: u.dim() });
    }
    if !dict.unit_atoms() {
        return Err(Error::InvalidParam("refinement requires unit-norm atoms".into()));
    }
    if let ScalingMode::Fixed { d_design } = mode {
        if !(d_design.is_finite() && d_design > 0.0) {
            return Err(Error::InvalidParam(format!(
                "design distortion must be positive and finite, got {d_design}"
            )));
        }
    }
    for &width in widths {
        if width == 0 || width > dict.len() {
            return Err(Error::InvalidParam(format!(
                "stage width {width} outside 1..={}",
                dict.len()
            )));
        }
    }
    let n = dict.dim();
    let root_n = (n as f64).sqrt();
    let mut recon = vec![0.0; n];
    let mut residual = u.values().to_vec();
    let mut energies = Vec::with_capacity(widths.len() + 1);
    energies.push(norm_sq_slice(&residual));
    let mut indices = Vec::with_capacity(widths.len());
    let mut scalings = Vec::with_capacity(widths.len());
    let mut stage_bits = Vec::with_capacity(widths.len());
    for (stage, &width) in widths.iter().enumerate() {
        let (index, x) = match mode {
            ScalingMode::Fixed { d_design } => {
                let mut best_index = 0;
                let mut best_ip = f64::NEG_INFINITY;
                for m in 0..width {
                    let ip = dot(&residual, dict.atom(m));
                    if ip > best_ip {
                        best_index = m;
                        best_ip = ip;
                    }
                }
                (best_index, d_design.sqrt().powi(stage as i32))
            }
            ScalingMode::Adaptive => {
                let mut best_index = 0;
                let mut best_ip = 0.0;
                for m in 0..width {
                    let ip = dot(&residual, dict.atom(m));
                    if ip * ip > best_ip * best_ip {
                        best_index = m;
                        best_ip = ip;
                    }
                }
                (best_index, best_ip / root_n)
            }
        };
        indices.push(index);
        scalings.push(x);
        stage_bits.push(index_bits(width));
        axpy(&mut recon, x * root_n, dict.atom(index));
        residual = sub(u.values(), &recon);
        energies.push(norm_sq_slice(&residual));
    }
    let code = RefinementCode { indices, scalings, stage_bits, mode, dim: n };
    Ok((code, energies))
}

/// Encode `u` with `stages` refinement stages over the full dictionary.
pub fn encode(
    u: &Signal,
    dict: &Dictionary,
    stages: usize,
    mode: ScalingMode,
) -> Result<RefinementCode> {
    let widths = vec![dict.len(); stages];
    Ok(run_encoder(u, dict, &widths, mode)?.0)
}

/// As [`encode`], also returning the residual energy around every stage:
/// stages + 1 values starting at the source energy.
pub fn encode_traced(
    u: &Signal,
    dict: &Dictionary,
    stages: usize,
    mode: ScalingMode,
) -> Result<(RefinementCode, Vec<f64>)> {
    let widths = vec![dict.len(); stages];
    run_encoder(u, dict, &widths, mode)
}

/// Encode with per-stage search widths: stage j considers only the first
/// `widths[j]` atoms and spends ceil(log2 widths[j]) bits on its index.
pub fn encode_staged(
    u: &Signal,
    dict: &Dictionary,
    widths: &[usize],
    mode: ScalingMode,
) -> Result<RefinementCode> {
    Ok(run_encoder(u, dict, widths, mode)?.0)
}

/// Reconstruct from the first `j` stages of a code.
pub fn decode(code: &RefinementCode, dict: &Dictionary, j: usize) -> Result<Signal> {
    if dict.dim() != code.dim {
        return Err(Error::DimensionMismatch { expected: code.dim, got: dict.dim() });
    }
    if j > code.stages() {
        return Err(Error::IndexOutOfRange { index: j, bound: code.stages() });
    }
    let root_n = (code.dim as f64).sqrt();
    let mut out = vec![0.0; code.dim];
    for i in 0..j {
        let m = code.indices[i];
        if m >= dict.len() {
            return Err(Error::IndexOutOfRange { index: m, bound: dict.len() });
        }
        axpy(&mut out, code.scalings[i] * root_n, dict.atom(m));
    }
    Signal::new(out)
}

/// Default design distortion for the fixed schedule: the one-stage energy
/// contraction of the fixed encoder over `draws` Gaussian sources, measured
/// as total residual energy divided by total source energy.
pub fn calibrate_d_design(dict: &Dictionary, draws: usize, seed: Seed) -> Result<f64> {
    if draws == 0 {
        return Err(Error::InvalidParam("calibration needs at least one draw".into()));
    }
    let widths = [dict.len()];
    let mut pairs = vec![(0.0, 0.0); draws];
    pairs
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(t, slot)| -> Result<()> {
            let u = sample_gaussian(dict.dim(), derive(seed, t as u64))?;
            let (_, trace) = run_encoder(&u, dict, &widths, ScalingMode::Fixed { d_design: 1.0 })?;
            *slot = (trace[1], trace[0]);
            Ok(())
        })?;
    let after: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let before: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(pairwise_sum(&after) / pairwise_sum(&before))
}

/// Monte Carlo estimate of the normalized-norm tail at `1 + eps`.
pub fn norm_concentration(n: usize, eps: f64, trials: usize, seed: Seed) -> Result<NormTail> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParam(format!("eps must be positive, got {eps}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be at least 1".into()));
    }
    let mut pairs = vec![(0.0, 0.0); trials];
    pairs
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(t, slot)| -> Result<()> {
            let u = sample_gaussian(n, derive(seed, t as u64))?;
            let ratio = (norm_sq(&u) / n as f64).sqrt();
            if ratio > 1.0 + eps {
                *slot = (1.0, ratio);
            }
            Ok(())
        })?;
    let flags: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let exceed: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(NormTail {
        tail_prob: pairwise_sum(&flags) / trials as f64,
        tail_contribution: pairwise_sum(&exceed) / trials as f64,
    })
}

/// Empirical rate-distortion staircase: encode `trials` Gaussian draws
/// through `stages` stages and report cumulative index rate against mean
/// distortion per dimension, next to the Gaussian distortion-rate function at
/// the same rate. The first row is the rate-free stage with distortion near
/// one; adaptive coefficient side information is accounted on the code
/// itself, not in these rows.
pub fn rd_staircase(
    dict: &Dictionary,
    stages: usize,
    trials: usize,
    seed: Seed,
    mode: ScalingMode,
) -> Result<Vec<StageReport>> {
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be at least 1".into()));
    }
    let n = dict.dim();
    let cols = stages + 1;
    let widths = vec![dict.len(); stages];
    let mut energies = vec![0.0; trials * cols];
    energies
        .par_chunks_mut(cols)
        .enumerate()
        .try_for_each(|(t, row)| -> Result<()> {
            let u = sample_gaussian(n, derive(seed, t as u64))?;
            let (_, trace) = run_encoder(&u, dict, &widths, mode)?;
            row.copy_from_slice(&trace);
            Ok(())
        })?;
    let per_stage = u64::from(index_bits(dict.len()));
    let mut reports = Vec::with_capacity(cols);
    let mut column = vec![0.0; trials];
    for j in 0..cols {
        for t in 0..trials {
            column[t] = energies[t * cols + j] / n as f64;
        }
        let (mean, se) = mean_stderr(&column);
        let bits = per_stage * j as u64;
        let rate = bits as f64 / n as f64;
        reports.push(StageReport {
            stage: j,
            bits,
            rate_per_dim: rate,
            mean_dist: mean,
            stderr: se,
            ideal_dist: gaussian_dr(rate)?,
        });
    }
    Ok(reports)
}

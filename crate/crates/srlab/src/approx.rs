//! Sparse representation algorithms and the distortion functionals built on
//! them: per-signal d_k, Monte Carlo worst-case and average-case estimates.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dict::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::{min_norm_ls, GrowingQr};
use crate::rng::{derive, sample_ball, sample_sphere_surface, Seed};
use crate::signal::{axpy, dot, norm_sq, norm_sq_slice, sub, Signal};
use crate::stats::mean_stderr;

/// Default cap on the number of supports the exhaustive search may examine.
pub const DEFAULT_WORK_BUDGET: u64 = 100_000_000;

/// Relative tolerance below which a column counts as dependent on the
/// current span.
pub const RANK_TOL: f64 = 1e-10;

/// Residual energy below which remaining stages are padded with zero
/// coefficients instead of normalizing a vanishing residual.
pub const ZERO_RESIDUAL: f64 = 1e-24;

/// Selection algorithm used to build a k-term representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Successive scalar representation of the running residual; atoms may
    /// repeat.
    Greedy,
    /// Greedy selection with a least-squares refit of all selected
    /// coefficients after every stage.
    Omp,
    /// Globally optimal support by enumeration of all size-k subsets.
    Exhaustive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Omp => "omp",
            Method::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Method::Greedy),
            "omp" => Ok(Method::Omp),
            "exhaustive" => Ok(Method::Exhaustive),
            other => Err(Error::InvalidParam(format!(
                "unknown method '{other}', expected greedy, omp, or exhaustive"
            ))),
        }
    }
}

/// A k-term linear representation of one signal: selected atom indices,
/// their coefficients, the induced reconstruction, and the squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRep {
    pub indices: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub recon: Signal,
    pub residual_sq: f64,
}

impl SparseRep {
    /// Number of terms k (repeated indices included).
    pub fn sparsity(&self) -> usize {
        self.indices.len()
    }
}

/// Residual energies recorded stage by stage, starting at the input energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTrace {
    pub energies: Vec<f64>,
}

impl ResidualTrace {
    /// Final residual energy after the last recorded stage.
    pub fn last(&self) -> f64 {
        *self.energies.last().expect("trace holds at least the input energy")
    }
}

/// A representation rewritten as the dense system y = Phi x + z, where the
/// columns of Phi are the dictionary atoms.
#[derive(Debug, Clone)]
pub struct LinearSystemView<'a> {
    dict: &'a Dictionary,
    x: Vec<f64>,
    z: Signal,
}

impl<'a> LinearSystemView<'a> {
    /// The matrix Phi, i.e. the dictionary whose atoms form its columns.
    pub fn phi(&self) -> &'a Dictionary {
        self.dict
    }

    /// Dense coefficient vector of length M.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// The error term z = y - Phi x.
    pub fn z(&self) -> &Signal {
        &self.z
    }

    /// Dense product Phi x.
    pub fn phi_times_x(&self) -> Signal {
        let mut out = vec![0.0; self.dict.dim()];
        for (m, &xm) in self.x.iter().enumerate() {
            if xm != 0.0 {
                axpy(&mut out, xm, self.dict.atom(m));
            }
        }
        Signal::from_raw(out)
    }

    /// Number of nonzero coefficients.
    pub fn nonzero_count(&self) -> usize {
        self.x.iter().filter(|v| **v != 0.0).count()
    }
}

fn check_compat(y: &Signal, dict: &Dictionary) -> Result<()> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    if y.dim() != dict.dim() {
        return Err(Error::DimensionMismatch { expected: dict.dim(), got: y.dim() });
    }
    Ok(())
}

fn check_sparsity(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParam("sparsity must be at least 1".into()));
    }
    Ok(())
}

/// Best scaled single atom for `z`: returns (index, coefficient, energy gain),
/// breaking ties toward the smallest index.
fn scan_best(z: &[f64], dict: &Dictionary) -> (usize, f64, f64) {
    let unit = dict.unit_atoms();
    let mut best_index = 0;
    let mut best_coeff = 0.0;
    let mut best_gain = -1.0;
    for m in 0..dict.len() {
        let atom = dict.atom(m);
        let ip = dot(atom, z);
        let ns = if unit { 1.0 } else { norm_sq_slice(atom) };
        let gain = ip * ip / ns;
        if gain > best_gain {
            best_index = m;
            best_coeff = ip / ns;
            best_gain = gain;
        }
    }
    (best_index, best_coeff, best_gain)
}

/// As [`scan_best`] over the atoms not marked in `excluded`; `None` when all
/// atoms are excluded.
fn scan_best_masked(z: &[f64], dict: &Dictionary, excluded: &[bool]) -> Option<usize> {
    let unit = dict.unit_atoms();
    let mut best: Option<usize> = None;
    let mut best_gain = -1.0;
    for m in 0..dict.len() {
        if excluded[m] {
            continue;
        }
        let atom = dict.atom(m);
        let ip = dot(atom, z);
        let ns = if unit { 1.0 } else { norm_sq_slice(atom) };
        let gain = ip * ip / ns;
        if gain > best_gain {
            best = Some(m);
            best_gain = gain;
        }
    }
    best
}

/// Optimal one-term representation: the atom and scale minimizing
/// the squared error against `y`, ties broken toward the smallest index.
pub fn best_singleton(y: &Signal, dict: &Dictionary) -> Result<SparseRep> {
    check_compat(y, dict)?;
    let (index, coeff, _gain) = scan_best(y.values(), dict);
    let mut z = y.values().to_vec();
    axpy(&mut z, -coeff, dict.atom(index));
    let recon = sub(y.values(), &z);
    let residual_sq = norm_sq_slice(&z);
    Ok(SparseRep {
        indices: vec![index],
        coeffs: vec![coeff],
        recon: Signal::from_raw(recon),
        residual_sq,
    })
}

/// Greedy k-stage representation: each stage applies the optimal single
/// scaled atom to the current residual. Atoms may be selected repeatedly.
pub fn successive_represent(
    y: &Signal,
    dict: &Dictionary,
    k: usize,
) -> Result<(SparseRep, ResidualTrace)> {
    check_compat(y, dict)?;
    check_sparsity(k)?;
    let mut z = y.values().to_vec();
    let mut energies = Vec::with_capacity(k + 1);
    energies.push(norm_sq_slice(&z));
    let mut indices = Vec::with_capacity(k);
    let mut coeffs = Vec::with_capacity(k);
    for _ in 0..k {
        let current = *energies.last().expect("nonempty");
        if current <= ZERO_RESIDUAL {
            indices.push(indices.first().copied().unwrap_or(0));
            coeffs.push(0.0);
            energies.push(current);
            continue;
        }
        let (index, coeff, _gain) = scan_best(&z, dict);
        axpy(&mut z, -coeff, dict.atom(index));
        indices.push(index);
        coeffs.push(coeff);
        energies.push(norm_sq_slice(&z));
    }
    let recon = sub(y.values(), &z);
    let residual_sq = *energies.last().expect("nonempty");
    let rep = SparseRep {
        indices,
        coeffs,
        recon: Signal::from_raw(recon),
        residual_sq,
    };
    Ok((rep, ResidualTrace { energies }))
}

/// Greedy selection with an orthogonal refit: after each new atom, all
/// selected coefficients are re-solved by least squares, so the residual is
/// orthogonal to the selected span. Atoms whose columns are numerically
/// dependent on the span are skipped.
pub fn omp_represent(
    y: &Signal,
    dict: &Dictionary,
    k: usize,
) -> Result<(SparseRep, ResidualTrace)> {
    check_compat(y, dict)?;
    check_sparsity(k)?;
    let dim = y.dim();
    let mut qr = GrowingQr::new(dim, k.min(dim));
    let mut excluded = vec![false; dict.len()];
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut solved: Vec<f64> = Vec::new();
    let mut z = y.values().to_vec();
    let mut energies = Vec::with_capacity(k + 1);
    energies.push(norm_sq_slice(&z));
    while energies.len() <= k {
        let current = *energies.last().expect("nonempty");
        if current <= ZERO_RESIDUAL {
            energies.push(current);
            continue;
        }
        let mut accepted = None;
        while let Some(m) = scan_best_masked(&z, dict, &excluded) {
            excluded[m] = true;
            if qr.try_push(dict.atom(m), y.values(), RANK_TOL) {
                accepted = Some(m);
                break;
            }
        }
        let Some(m) = accepted else {
            energies.push(current);
            continue;
        };
        selected.push(m);
        solved.resize(qr.cols(), 0.0);
        qr.solve(&mut solved);
        z.copy_from_slice(y.values());
        for (i, &mi) in selected.iter().enumerate() {
            axpy(&mut z, -solved[i], dict.atom(mi));
        }
        energies.push(norm_sq_slice(&z));
    }
    let pad = selected.first().copied().unwrap_or(0);
    let mut indices = selected;
    let mut coeffs = solved;
    while indices.len() < k {
        indices.push(pad);
        coeffs.push(0.0);
    }
    let recon = sub(y.values(), &z);
    let residual_sq = *energies.last().expect("nonempty");
    let rep = SparseRep {
        indices,
        coeffs,
        recon: Signal::from_raw(recon),
        residual_sq,
    };
    Ok((rep, ResidualTrace { energies }))
}

fn binomial_saturating(m: u64, k: u64) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((m - i) as u128) / (i as u128 + 1);
        if acc > u128::MAX / (m as u128 + 1) {
            return u128::MAX;
        }
    }
    acc
}

/// Advances `support` to the next size-k subset of 0..m in lexicographic
/// order; returns false after the last subset.
fn next_combination(support: &mut [usize], m: usize) -> bool {
    let k = support.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if support[i] < m - (k - i) {
            support[i] += 1;
            for j in (i + 1)..k {
                support[j] = support[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Globally optimal k-term representation over all distinct size-k supports,
/// with ties broken toward the lexicographically smallest index set.
pub fn exhaustive_best_k(y: &Signal, dict: &Dictionary, k: usize) -> Result<SparseRep> {
    exhaustive_best_k_with_budget(y, dict, k, DEFAULT_WORK_BUDGET)
}

/// As [`exhaustive_best_k`] with an explicit budget on the number of
/// supports examined.
pub fn exhaustive_best_k_with_budget(
    y: &Signal,
    dict: &Dictionary,
    k: usize,
    budget: u64,
) -> Result<SparseRep> {
    check_compat(y, dict)?;
    check_sparsity(k)?;
    let m = dict.len();
    if k > m {
        return Err(Error::InvalidParam(format!(
            "sparsity {k} exceeds dictionary size {m}"
        )));
    }
    let need = binomial_saturating(m as u64, k as u64);
    if need > budget as u128 {
        return Err(Error::BudgetExceeded { need, budget });
    }
    let dim = y.dim();
    let mut qr = GrowingQr::new(dim, k);
    let mut support: Vec<usize> = (0..k).collect();
    let mut best_support = support.clone();
    let mut best_gain = -1.0;
    let mut best_full_rank = true;
    loop {
        qr.clear();
        let mut full_rank = true;
        for &mi in &support {
            if !qr.try_push(dict.atom(mi), y.values(), RANK_TOL) {
                full_rank = false;
            }
        }
        let gain = qr.projection_gain();
        if gain > best_gain {
            best_gain = gain;
            best_support.copy_from_slice(&support);
            best_full_rank = full_rank;
        }
        if !next_combination(&mut support, m) {
            break;
        }
    }
    let coeffs = if best_full_rank {
        qr.clear();
        for &mi in &best_support {
            qr.try_push(dict.atom(mi), y.values(), RANK_TOL);
        }
        let mut out = vec![0.0; k];
        qr.solve(&mut out);
        out
    } else {
        let mut columns = Vec::with_capacity(dim * k);
        for &mi in &best_support {
            columns.extend_from_slice(dict.atom(mi));
        }
        min_norm_ls(&columns, dim, k, y.values(), RANK_TOL)
    };
    let mut z = y.values().to_vec();
    for (i, &mi) in best_support.iter().enumerate() {
        axpy(&mut z, -coeffs[i], dict.atom(mi));
    }
    let recon = sub(y.values(), &z);
    let residual_sq = norm_sq_slice(&z);
    Ok(SparseRep {
        indices: best_support,
        coeffs,
        recon: Signal::from_raw(recon),
        residual_sq,
    })
}

/// Squared error of the best k-term representation of `y` under the chosen
/// method; k = 0 returns the input energy.
pub fn d_k(y: &Signal, dict: &Dictionary, k: usize, method: Method) -> Result<f64> {
    if k == 0 {
        check_compat(y, dict)?;
        return Ok(norm_sq(y));
    }
    Ok(match method {
        Method::Greedy => successive_represent(y, dict, k)?.0.residual_sq,
        Method::Omp => omp_represent(y, dict, k)?.0.residual_sq,
        Method::Exhaustive => exhaustive_best_k(y, dict, k)?.residual_sq,
    })
}

fn collect_distortions(
    dict: &Dictionary,
    k: usize,
    trials: u64,
    method: Method,
    seed: Seed,
    sampler: fn(usize, Seed) -> Result<Signal>,
) -> Result<Vec<f64>> {
    let mut values = vec![0.0; trials as usize];
    values
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(i, slot)| -> Result<()> {
            let y = sampler(dict.dim(), derive(seed, i as u64))?;
            *slot = d_k(&y, dict, k, method)?;
            Ok(())
        })?;
    Ok(values)
}

/// Monte Carlo lower estimate of the worst-case distortion: the maximum of
/// d_k over `trials` draws from the unit sphere surface. Sampling the
/// surface suffices because d_k scales as t^2 under y -> t y, so the
/// supremum over the closed ball is attained on the boundary.
pub fn estimate_worst_case(
    dict: &Dictionary,
    k: usize,
    trials: u64,
    method: Method,
    seed: Seed,
) -> Result<f64> {
    if trials < 1 {
        return Err(Error::InvalidParam("worst-case estimate needs at least one trial".into()));
    }
    let values = collect_distortions(dict, k, trials, method, seed, sample_sphere_surface)?;
    Ok(values.iter().copied().fold(0.0, f64::max))
}

/// Monte Carlo mean and standard error of d_k over uniform draws from the
/// closed unit ball.
pub fn estimate_average(
    dict: &Dictionary,
    k: usize,
    trials: u64,
    method: Method,
    seed: Seed,
) -> Result<(f64, f64)> {
    if trials < 2 {
        return Err(Error::InvalidParam("average estimate needs at least two trials".into()));
    }
    let values = collect_distortions(dict, k, trials, method, seed, sample_ball)?;
    Ok(mean_stderr(&values))
}

/// Rewrites a representation as the dense system y = Phi x + z, summing
/// coefficients that share an atom index.
pub fn export_linear_system<'a>(
    y: &Signal,
    dict: &'a Dictionary,
    rep: &SparseRep,
) -> Result<LinearSystemView<'a>> {
    check_compat(y, dict)?;
    let mut x = vec![0.0; dict.len()];
    for (&index, &coeff) in rep.indices.iter().zip(&rep.coeffs) {
        if index >= dict.len() {
            return Err(Error::IndexOutOfRange { index, bound: dict.len() });
        }
        x[index] += coeff;
    }
    let mut z = y.values().to_vec();
    for (m, &xm) in x.iter().enumerate() {
        if xm != 0.0 {
            axpy(&mut z, -xm, dict.atom(m));
        }
    }
    Ok(LinearSystemView { dict, x, z: Signal::from_raw(z) })
}

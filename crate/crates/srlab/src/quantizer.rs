//! Coefficient quantization for sparse representations: Gram-Schmidt
//! coordinates, scalar grids over [-1, 1], error orthogonality, and a random
//! subspace codebook for the coefficient vector.

use crate::approx::{SparseRep, DEFAULT_WORK_BUDGET, RANK_TOL};
use crate::bounds::log2_binom;
use crate::dict::Dictionary;
use crate::error::{Error, Result};
use crate::rng::{derive, sample_ball, Seed};
use crate::signal::{axpy, dot, norm_sq, norm_sq_slice, sub, Signal};

/// Orthonormal coordinates of a projection: basis vectors psi_1..psi_k for
/// the span of the selected atoms and the coefficients lambda_i = <y, psi_i>.
///
/// Built from a unit-ball signal, so every lambda lies in [-1, 1] and the
/// coefficient energy never exceeds one.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoRep {
    basis: Vec<Signal>,
    lambdas: Vec<f64>,
}

impl OrthoRep {
    /// Number of basis vectors k.
    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Signal] {
        &self.basis
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// The projection itself: sum of lambda_i psi_i.
    pub fn recon(&self) -> Signal {
        combine(&self.basis, &self.lambdas)
    }

    /// Coefficient energy, equal to the squared norm of the projection.
    pub fn energy(&self) -> f64 {
        norm_sq_slice(&self.lambdas)
    }
}

/// A quantized coefficient vector and its reconstruction. `step` is the grid
/// spacing 1/l for the scalar path and absent for the codebook path.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedRep {
    pub lambdas_q: Vec<f64>,
    pub step: Option<f64>,
    pub recon_q: Signal,
    pub err_sq: f64,
}

fn combine(basis: &[Signal], coeffs: &[f64]) -> Signal {
    let dim = basis.first().map_or(0, Signal::dim);
    let mut out = vec![0.0; dim];
    for (psi, &c) in basis.iter().zip(coeffs) {
        axpy(&mut out, c, psi.values());
    }
    Signal::from_raw(out)
}

/// Orthonormalizes `atoms` in input order; fails with the offending index
/// when an atom is numerically dependent on its predecessors.
pub fn gram_schmidt(atoms: &[Signal]) -> Result<Vec<Signal>> {
    let Some(first) = atoms.first() else {
        return Ok(Vec::new());
    };
    let dim = first.dim();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(atoms.len());
    for (index, atom) in atoms.iter().enumerate() {
        if atom.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: atom.dim() });
        }
        let mut w = atom.values().to_vec();
        for q in &basis {
            let c = dot(q, &w);
            axpy(&mut w, -c, q);
        }
        let rem = norm_sq_slice(&w).sqrt();
        if rem <= RANK_TOL * norm_sq_slice(atom.values()).sqrt() {
            return Err(Error::RankDeficient { index });
        }
        let inv = 1.0 / rem;
        for v in &mut w {
            *v *= inv;
        }
        basis.push(w);
    }
    Ok(basis.into_iter().map(Signal::from_raw).collect())
}

/// Projects a unit-ball signal onto the span of a representation's selected
/// atoms (duplicates collapsed, first occurrence kept) and returns the
/// orthonormal coordinates of that projection.
pub fn ortho_decompose(y: &Signal, rep: &SparseRep, dict: &Dictionary) -> Result<OrthoRep> {
    if y.dim() != dict.dim() {
        return Err(Error::DimensionMismatch { expected: dict.dim(), got: y.dim() });
    }
    if norm_sq(y) > 1.0 + 1e-9 {
        return Err(Error::InvalidParam(
            "orthogonal coordinates require a unit-ball signal".into(),
        ));
    }
    let mut support: Vec<usize> = Vec::with_capacity(rep.indices.len());
    for &m in &rep.indices {
        if m >= dict.len() {
            return Err(Error::IndexOutOfRange { index: m, bound: dict.len() });
        }
        if !support.contains(&m) {
            support.push(m);
        }
    }
    if support.is_empty() {
        return Err(Error::InvalidParam("representation selects no atoms".into()));
    }
    let atoms: Vec<Signal> = support
        .iter()
        .map(|&m| Signal::from_raw(dict.atom(m).to_vec()))
        .collect();
    let basis = gram_schmidt(&atoms)?;
    let lambdas = basis
        .iter()
        .map(|psi| dot(psi.values(), y.values()).clamp(-1.0, 1.0))
        .collect();
    Ok(OrthoRep { basis, lambdas })
}

/// Rounds to the nearest integer, breaking halfway ties toward zero.
fn round_ties_toward_zero(t: f64) -> f64 {
    let a = t.abs();
    let base = a.trunc();
    let r = if a - base > 0.5 { base + 1.0 } else { base };
    r.copysign(t)
}

/// Quantizes each coefficient to the nearest multiple of 1/l on the
/// 2l+1 point grid spanning [-1, 1], ties toward zero.
pub fn scalar_quantize(o: &OrthoRep, l: u32) -> QuantizedRep {
    assert!(l >= 1, "grid parameter must be at least 1");
    let lf = l as f64;
    let step = 1.0 / lf;
    let mut lambdas_q = Vec::with_capacity(o.k());
    for &lam in &o.lambdas {
        let idx = round_ties_toward_zero(lam * lf).clamp(-lf, lf);
        let mut q = idx * step;
        if q == 0.0 {
            // strip the sign off negative zero so formatted output is stable
            q = 0.0;
        }
        lambdas_q.push(q);
    }
    let err_sq = o
        .lambdas
        .iter()
        .zip(&lambdas_q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let recon_q = combine(&o.basis, &lambdas_q);
    QuantizedRep { lambdas_q, step: Some(step), recon_q, err_sq }
}

/// Absolute inner product between the projection error y - yhat and the
/// quantization error yhat - yhat'. The first lives in the orthogonal
/// complement of the span and the second inside it, so this vanishes up to
/// roundoff.
pub fn check_orthogonality(y: &Signal, o: &OrthoRep, q: &QuantizedRep) -> f64 {
    let yhat = o.recon();
    let outer = sub(y.values(), yhat.values());
    let in_span = sub(yhat.values(), q.recon_q.values());
    dot(&outer, &in_span).abs()
}

/// Quantizes the whole coefficient vector against a random codebook of 2^bits
/// unit-ball points in R^k, each scaled optimally; codebooks are nested in
/// the bit budget under a fixed seed.
pub fn subspace_covering_quantize(o: &OrthoRep, bits: u32, seed: Seed) -> Result<QuantizedRep> {
    if bits == 0 {
        return Err(Error::InvalidParam("codebook needs at least one bit".into()));
    }
    if bits >= 63 {
        return Err(Error::SizeOverflow { need: u128::MAX, budget: DEFAULT_WORK_BUDGET });
    }
    let count = 1u64 << bits;
    if count > DEFAULT_WORK_BUDGET {
        return Err(Error::SizeOverflow { need: count as u128, budget: DEFAULT_WORK_BUDGET });
    }
    let k = o.k();
    let mut best_gain = -1.0;
    let mut best: Vec<f64> = vec![0.0; k];
    for j in 0..count {
        let c = sample_ball(k, derive(seed, j))?;
        let ns = norm_sq(&c);
        if ns == 0.0 {
            continue;
        }
        let ip = dot(c.values(), &o.lambdas);
        let gain = ip * ip / ns;
        if gain > best_gain {
            best_gain = gain;
            let x = ip / ns;
            best.clear();
            best.extend(c.values().iter().map(|v| x * v));
        }
    }
    let err_sq = o
        .lambdas
        .iter()
        .zip(&best)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let recon_q = combine(&o.basis, &best);
    Ok(QuantizedRep { lambdas_q: best, step: None, recon_q, err_sq })
}

/// Number of distinct (support, quantized coefficients) descriptions:
/// C(M, k) * (2l+1)^k.
pub fn description_count(m: u64, k: u32, l: u32) -> Result<u128> {
    if u64::from(k) > m {
        return Err(Error::InvalidParam(format!(
            "support size {k} exceeds dictionary size {m}"
        )));
    }
    let supports = binom_u128(m, u64::from(k))
        .ok_or_else(|| Error::InvalidParam("description count overflows".into()))?;
    let levels = (2 * u128::from(l) + 1)
        .checked_pow(k)
        .ok_or_else(|| Error::InvalidParam("description count overflows".into()))?;
    supports
        .checked_mul(levels)
        .ok_or_else(|| Error::InvalidParam("description count overflows".into()))
}

/// Description length in bits: log2 C(M,k) + k log2(2l+1).
pub fn description_bits(m: u64, k: u32, l: u32) -> Result<f64> {
    Ok(log2_binom(m, u64::from(k))? + f64::from(k) * (2.0 * f64::from(l) + 1.0).log2())
}

fn binom_u128(m: u64, k: u64) -> Option<u128> {
    if k > m {
        return Some(0);
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((m - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Grid parameter from the asymptotic schedule l = ceil(sqrt(n / d_bar)),
/// i.e. f_n * d_bar^(-1/2) with f_n = sqrt(n).
pub fn schedule_l(n: usize, d_bar: f64) -> Result<u32> {
    if n == 0 {
        return Err(Error::InvalidParam("dimension must be positive".into()));
    }
    if !(d_bar.is_finite() && d_bar > 0.0) {
        return Err(Error::Domain(format!(
            "average distortion must be positive and finite, got {d_bar}"
        )));
    }
    let l = (n as f64 / d_bar).sqrt().ceil();
    if l > u32::MAX as f64 {
        return Err(Error::InvalidParam("grid parameter overflows".into()));
    }
    Ok((l.max(1.0)) as u32)
}

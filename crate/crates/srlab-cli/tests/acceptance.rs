//! Acceptance gate: ten end-to-end checks covering oracle equivalence,
//! dominance and monotonicity, contraction trends against the rate limit,
//! lower-bound consistency, quantizer error bounds, norm concentration,
//! refinement staircase slopes, and byte-level reproducibility across
//! thread counts. Every test prints one line with its measured values and
//! a PASS or FAIL verdict; run with `-- --nocapture` to see them all.

use std::sync::OnceLock;
use std::time::Instant;

use srlab::approx::{
    d_k, estimate_average, exhaustive_best_k, omp_represent, successive_represent, Method,
};
use srlab::bounds::{c_n, theorem2_lower, theorem2_lower_log2, BoundParams};
use srlab::dict::{random_dictionary, Dictionary};
use srlab::quantizer::{check_orthogonality, description_count, ortho_decompose, scalar_quantize};
use srlab::refine::{calibrate_d_design, encode_traced, norm_concentration, rd_staircase, ScalingMode};
use srlab::rng::{derive, sample_ball, sample_gaussian, sample_sphere_surface};
use srlab::Seed;

fn verdict(pass: bool) -> &'static str {
    if pass { "PASS" } else { "FAIL" }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn nsq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Ordinary least squares y = slope*x + intercept, plus the coefficient of
/// determination.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    (slope, intercept, 1.0 - ss_res / ss_tot)
}

fn binom_f(m: u64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i as u64) as f64 / (i + 1) as f64)
}

/// The largest dictionary in the suite, shared across tests.
fn big_dict() -> &'static Dictionary {
    static DICT: OnceLock<Dictionary> = OnceLock::new();
    DICT.get_or_init(|| random_dictionary(128, 65536, Seed(901)).expect("dictionary"))
}

/// Independent best-k oracle for k in {1, 2}: enumerates supports in
/// lexicographic order, solves the normal equations directly (Cramer's rule
/// for pairs), and keeps only strict improvements, so the first support
/// attaining the optimum wins ties.
fn oracle_best(y: &[f64], dict: &Dictionary, k: usize) -> (Vec<usize>, f64) {
    let m = dict.len();
    let total = nsq(y);
    let mut best_support = Vec::new();
    let mut best_res = total;
    match k {
        1 => {
            for i in 0..m {
                let b = dot(y, dict.atom(i));
                let res = total - b * b;
                if res < best_res {
                    best_res = res;
                    best_support = vec![i];
                }
            }
        }
        2 => {
            for i in 0..m {
                for j in (i + 1)..m {
                    let g = dot(dict.atom(i), dict.atom(j));
                    let det = 1.0 - g * g;
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let bi = dot(y, dict.atom(i));
                    let bj = dot(y, dict.atom(j));
                    let xi = (bi - g * bj) / det;
                    let xj = (bj - g * bi) / det;
                    let res = total - (xi * bi + xj * bj);
                    if res < best_res {
                        best_res = res;
                        best_support = vec![i, j];
                    }
                }
            }
        }
        _ => unreachable!("oracle covers k <= 2"),
    }
    (best_support, best_res.max(0.0))
}

#[test]
fn criterion_01_exhaustive_matches_enumeration_oracle() {
    let started = Instant::now();
    let base = Seed(101);
    let mut max_dev: f64 = 0.0;
    let mut support_mismatches = 0usize;
    let instances = 200usize;
    for i in 0..instances {
        let inst = derive(base, i as u64);
        let n = 3 + i % 6;
        let m = 4 + (i % 29) as u64;
        let k = 1 + i % 2;
        let dict = random_dictionary(n, m, derive(inst, 0)).unwrap();
        let y = sample_ball(n, derive(inst, 1)).unwrap();
        let rep = exhaustive_best_k(&y, &dict, k.min(m as usize)).unwrap();
        let (support, res) = oracle_best(y.values(), &dict, k.min(m as usize));
        let scale = res.max(rep.residual_sq).max(1e-300);
        max_dev = max_dev.max((rep.residual_sq - res).abs() / scale);
        if rep.indices != support {
            support_mismatches += 1;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = max_dev <= 1e-9 && support_mismatches == 0 && elapsed < 10.0;
    println!(
        "criterion 01 oracle equivalence: {instances} instances, max value deviation {max_dev:.3e}, \
         support mismatches {support_mismatches}, elapsed {elapsed:.2}s -> {}",
        verdict(pass)
    );
    assert!(pass, "exhaustive search disagrees with the enumeration oracle");
}

#[test]
fn criterion_02_dominance_and_monotonicity() {
    let base = Seed(202);
    let instances = 10_000usize;
    let mut trace_violations = 0usize;
    let mut dominance_violations = 0usize;
    let mut orthogonality_violations = 0usize;
    let mut homogeneity_violations = 0usize;
    let mut dict = random_dictionary(16, 128, derive(base, 0)).unwrap();
    for i in 0..instances {
        if i % 100 == 0 {
            dict = random_dictionary(16, 128, derive(base, (i / 100) as u64)).unwrap();
        }
        let y = sample_ball(16, derive(derive(base, u64::MAX), i as u64)).unwrap();
        let k = 1 + i % 4;
        let total = nsq(y.values());

        let (greedy, gtrace) = successive_represent(&y, &dict, k).unwrap();
        let (omp, otrace) = omp_represent(&y, &dict, k).unwrap();
        for trace in [&gtrace, &otrace] {
            for pair in trace.energies.windows(2) {
                if pair[1] > pair[0] * (1.0 + 1e-12) + 1e-18 {
                    trace_violations += 1;
                }
            }
        }

        let z = sub(y.values(), omp.recon.values());
        let norm_y = total.sqrt();
        for &idx in &omp.indices {
            if dot(&z, dict.atom(idx)).abs() > 1e-9 * norm_y {
                orthogonality_violations += 1;
            }
        }

        let scaled = y.scaled(2.5).unwrap();
        for method in [Method::Greedy, Method::Omp] {
            let d = d_k(&y, &dict, k, method).unwrap();
            let ds = d_k(&scaled, &dict, k, method).unwrap();
            if (ds - 6.25 * d).abs() > 1e-9 * (6.25 * d).max(1e-300) {
                homogeneity_violations += 1;
            }
        }

        if k <= 2 {
            let d_exh = d_k(&y, &dict, k, Method::Exhaustive).unwrap();
            let slack = 1e-12 * total + 1e-18;
            if d_exh > greedy.residual_sq + slack || d_exh > omp.residual_sq + slack {
                dominance_violations += 1;
            }
            let ds = d_k(&scaled, &dict, k, Method::Exhaustive).unwrap();
            if (ds - 6.25 * d_exh).abs() > 1e-9 * (6.25 * d_exh).max(1e-300) {
                homogeneity_violations += 1;
            }
        }
    }
    let pass = trace_violations == 0
        && dominance_violations == 0
        && orthogonality_violations == 0
        && homogeneity_violations == 0;
    println!(
        "criterion 02 dominance and monotonicity: {instances} instances, violations: \
         traces {trace_violations}, dominance {dominance_violations}, orthogonality \
         {orthogonality_violations}, homogeneity {homogeneity_violations} -> {}",
        verdict(pass)
    );
    assert!(pass, "dominance/monotonicity suite found violations");
}

fn mean_one_step_contraction(dict: &Dictionary, trials: u64, seed: Seed) -> f64 {
    let mut ratios = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let y = sample_sphere_surface(dict.dim(), derive(seed, t)).unwrap();
        ratios.push(d_k(&y, dict, 1, Method::Greedy).unwrap());
    }
    mean(&ratios)
}

#[test]
fn criterion_03_contraction_ratio_tightens_with_dimension() {
    let started = Instant::now();
    let base = Seed(303);
    let limit = 2f64.powf(-0.25);
    let small = random_dictionary(32, 16, derive(base, 0)).unwrap();
    let medium = random_dictionary(64, 256, derive(base, 1)).unwrap();
    let m32 = mean_one_step_contraction(&small, 2000, derive(base, 10));
    let m64 = mean_one_step_contraction(&medium, 2000, derive(base, 11));
    let m128 = mean_one_step_contraction(big_dict(), 2000, derive(base, 12));
    let elapsed = started.elapsed().as_secs_f64();
    let pass = m32 > m64
        && m64 > m128
        && m128 > limit
        && (m128 - limit) < (m32 - limit)
        && elapsed < 600.0;
    println!(
        "criterion 03 contraction vs dimension: mean ratios n=32 {m32:.4}, n=64 {m64:.4}, \
         n=128 {m128:.4}, limit {limit:.4}, elapsed {elapsed:.1}s -> {}",
        verdict(pass)
    );
    assert!(pass, "contraction ratios do not tighten toward the rate limit");
}

#[test]
fn criterion_04_log_linear_residual_decay() {
    let base = Seed(404);
    let dict = random_dictionary(64, 256, derive(base, 0)).unwrap();
    let trials = 2000u64;
    let stages = 6usize;
    let mut energy_sums = vec![0.0; stages];
    let mut log_sums = vec![0.0; stages];
    for t in 0..trials {
        let y = sample_sphere_surface(64, derive(base, 1 + t)).unwrap();
        let (_, trace) = omp_represent(&y, &dict, stages).unwrap();
        for j in 1..=stages {
            energy_sums[j - 1] += trace.energies[j];
            log_sums[j - 1] += trace.energies[j].log2();
        }
    }
    let xs: Vec<f64> = (1..=stages).map(|j| j as f64).collect();
    let ys: Vec<f64> = energy_sums.iter().map(|s| (s / trials as f64).log2()).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys);
    let ys_log: Vec<f64> = log_sums.iter().map(|s| s / trials as f64).collect();
    let (_, _, r2_logs) = linear_fit(&xs, &ys_log);
    let pass = r2 >= 0.999;
    println!(
        "criterion 04 log-linear decay: {trials} omp traces, stages 1..={stages}, \
         slope {slope:.4} bits/stage, r^2 {r2:.6} (per-draw log mean r^2 {r2_logs:.6}) -> {}",
        verdict(pass)
    );
    assert!(pass, "mean residual energy does not decay geometrically in the stage index");
}

#[test]
fn criterion_05_average_distortion_respects_lower_bound() {
    let base = Seed(505);
    let trials = 10_000u64;
    let budget = 1e8;
    let configs: [(usize, u64, usize); 5] =
        [(32, 16, 1), (64, 256, 1), (128, 65536, 1), (64, 256, 2), (64, 256, 3)];
    let mut lines = Vec::new();
    let mut hard_failures = 0usize;
    let mut flags = 0usize;
    for (row, &(n, m, k)) in configs.iter().enumerate() {
        let local;
        let dict = if n == 128 {
            big_dict()
        } else {
            local = random_dictionary(n, m, derive(base, 2 * row as u64)).unwrap();
            &local
        };
        let method = if trials as f64 * binom_f(m, k) <= budget {
            Method::Exhaustive
        } else {
            Method::Omp
        };
        let (avg, _se) =
            estimate_average(dict, k, trials, method, derive(base, 2 * row as u64 + 1)).unwrap();
        let lower = theorem2_lower(&BoundParams::with_size(n, m, k).unwrap()).unwrap();
        let ratio = avg / lower;
        if ratio < 1.0 - 1e-12 {
            hard_failures += 1;
        }
        if ratio < 0.95 {
            flags += 1;
            lines.push(format!("n={n} m={m} k={k} {method} ratio {ratio:.4} FLAGGED"));
        } else {
            lines.push(format!("n={n} m={m} k={k} {method} ratio {ratio:.4}"));
        }
    }
    let pass = hard_failures == 0;
    println!(
        "criterion 05 lower-bound consistency: {} ({} flagged) -> {}",
        lines.join("; "),
        flags,
        verdict(pass)
    );
    assert!(pass, "average distortion fell below the converse bound");
}

#[test]
fn criterion_06_bound_gap_closes_with_dimension() {
    let mut gaps = Vec::new();
    for n in [64usize, 128, 256, 512] {
        let p = BoundParams::with_rate(n, 0.25, 1).unwrap();
        let gap = theorem2_lower_log2(&p).unwrap() + 2.0 * p.log2_m() / (n as f64 - 1.0);
        gaps.push(gap);
    }
    let negative = gaps.iter().all(|&g| g < 0.0);
    let increasing = gaps.windows(2).all(|w| w[1] > w[0]);
    let tight = gaps[3].abs() < 0.1;
    let mut max_cn: f64 = 0.0;
    for k in 1..=4usize {
        let p = BoundParams::with_size(1_000_000, 1_000_000, k).unwrap();
        max_cn = max_cn.max(c_n(&p));
    }
    let pass = negative && increasing && tight && max_cn < 1e-3;
    println!(
        "criterion 06 bound gap: gaps n=64..512 [{:.4}, {:.4}, {:.4}, {:.4}] bits, \
         max c_n at n=1e6 {max_cn:.3e} -> {}",
        gaps[0],
        gaps[1],
        gaps[2],
        gaps[3],
        verdict(pass)
    );
    assert!(pass, "log-domain bound gap does not close with dimension");
}

#[test]
fn criterion_07_quantizer_error_bounds() {
    let base = Seed(707);
    let instances = 1000usize;
    let mut bound_violations = 0usize;
    let mut cross_violations = 0usize;
    let mut pythagoras_violations = 0usize;
    let mut dict = random_dictionary(16, 64, derive(base, 0)).unwrap();
    for i in 0..instances {
        if i % 100 == 0 {
            dict = random_dictionary(16, 64, derive(base, (i / 100) as u64)).unwrap();
        }
        let y = sample_ball(16, derive(derive(base, u64::MAX), i as u64)).unwrap();
        let k = 1 + i % 4;
        let (rep, _) = omp_represent(&y, &dict, k).unwrap();
        let o = ortho_decompose(&y, &rep, &dict).unwrap();
        let yhat = o.recon();
        let proj_err = nsq(&sub(y.values(), yhat.values()));
        let norm_y = nsq(y.values()).sqrt();
        for l in [4u32, 16, 64] {
            let q = scalar_quantize(&o, l);
            if q.err_sq > k as f64 / (4.0 * f64::from(l) * f64::from(l)) + 1e-15 {
                bound_violations += 1;
            }
            if check_orthogonality(&y, &o, &q) > 1e-9 * norm_y {
                cross_violations += 1;
            }
            let lhs = nsq(&sub(y.values(), q.recon_q.values()));
            let rhs = proj_err + nsq(&sub(yhat.values(), q.recon_q.values()));
            if (lhs - rhs).abs() > 1e-9 * lhs.max(1e-300) {
                pythagoras_violations += 1;
            }
        }
    }
    let mut slots = 0u128;
    let levels = (-2i64..=2).count() as u128;
    for i in 0..8u64 {
        for _j in (i + 1)..8 {
            slots += levels * levels;
        }
    }
    let counted = description_count(8, 2, 2).unwrap();
    let pass = bound_violations == 0
        && cross_violations == 0
        && pythagoras_violations == 0
        && slots == 700
        && counted == 700;
    println!(
        "criterion 07 quantizer bounds: {instances} instances x 3 grids, violations: \
         bound {bound_violations}, cross {cross_violations}, pythagoras \
         {pythagoras_violations}; description slots enumerated {slots}, counted {counted} -> {}",
        verdict(pass)
    );
    assert!(pass, "quantizer error bounds violated");
}

#[test]
fn criterion_08_norm_concentration_tail() {
    let trials = 100_000usize;
    let tail = norm_concentration(100, 0.1, trials, Seed(808)).unwrap();
    let oracle = statrs::function::gamma::gamma_ur(50.0, 60.5);
    let se = (oracle * (1.0 - oracle) / trials as f64).sqrt();
    let dev = (tail.tail_prob - oracle).abs();
    let far_tail = norm_concentration(1000, 0.1, trials, Seed(809)).unwrap();
    let pass = dev <= 3.0 * se && far_tail.tail_prob < 1e-3;
    println!(
        "criterion 08 norm concentration: n=100 tail {:.5} vs oracle {oracle:.5} \
         (|dev| {dev:.2e} <= 3se {:.2e}), n=1000 tail {:.2e} -> {}",
        tail.tail_prob,
        3.0 * se,
        far_tail.tail_prob,
        verdict(pass)
    );
    assert!(pass, "norm tail probabilities disagree with the chi-square oracle");
}

#[test]
fn criterion_09_refinement_staircase_slope() {
    let started = Instant::now();
    let base = Seed(909);
    let dict = big_dict();
    let trials = 500usize;

    let rows = rd_staircase(dict, 5, trials, derive(base, 0), ScalingMode::Adaptive).unwrap();
    let nonincreasing = rows.windows(2).all(|w| w[1].mean_dist <= w[0].mean_dist);
    let xs: Vec<f64> = rows.iter().map(|r| r.rate_per_dim).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_dist.log2()).collect();
    let (slope, _, _) = linear_fit(&xs, &ys);

    let d_design = calibrate_d_design(dict, 100, derive(base, 1)).unwrap();
    let stages = 4usize;
    let mut sums = vec![0.0; stages + 1];
    for t in 0..trials {
        let u = sample_gaussian(128, derive(derive(base, 2), t as u64)).unwrap();
        let (_, energies) =
            encode_traced(&u, dict, stages, ScalingMode::Fixed { d_design }).unwrap();
        for (s, e) in sums.iter_mut().zip(&energies) {
            *s += *e;
        }
    }
    let mut worst_tracking: f64 = 0.0;
    for j in 1..=stages {
        let ratio = (sums[j] / sums[0]) / d_design.powi(j as i32);
        worst_tracking = worst_tracking.max((ratio - 1.0).abs());
    }

    let elapsed = started.elapsed().as_secs_f64();
    let pass = nonincreasing
        && (-2.0..=-1.5).contains(&slope)
        && worst_tracking <= 0.25
        && elapsed < 900.0;
    println!(
        "criterion 09 refinement staircase: adaptive nonincreasing {nonincreasing}, \
         slope {slope:.3} bits per unit rate, fixed d_design {d_design:.4} tracked within \
         {worst_tracking:.3}, elapsed {elapsed:.1}s -> {}",
        verdict(pass)
    );
    assert!(pass, "refinement staircase slope or tracking out of range");
}

fn run_sweep(config: &std::path::Path, out: &std::path::Path, threads: u32) {
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_srlab"))
        .args(["sweep", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--threads", &threads.to_string()])
        .status()
        .expect("spawning the srlab binary");
    assert!(status.success(), "srlab sweep exited with {status}");
}

#[test]
fn criterion_10_csv_bytes_identical_across_thread_counts() {
    let specs = [
        (
            "approx.toml",
            "approx-sweep.csv",
            "kind = \"approx-sweep\"\nseed = 42\ndims = [16]\nsizes = [64]\nks = [1, 2]\n\
             trials = 500\nmethods = [\"greedy\", \"omp\"]\n",
        ),
        (
            "refine.toml",
            "staircase_n32_m256.csv",
            "kind = \"refine-staircase\"\nseed = 42\ndims = [32]\nsizes = [256]\nstages = 4\n\
             trials = 300\nmode = \"adaptive\"\n",
        ),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut sizes = Vec::new();
    for (i, (config_name, csv_name, body)) in specs.iter().enumerate() {
        let config = dir.path().join(config_name);
        std::fs::write(&config, body).unwrap();
        let serial = dir.path().join(format!("serial{i}"));
        let threaded = dir.path().join(format!("threaded{i}"));
        run_sweep(&config, &serial, 1);
        run_sweep(&config, &threaded, 4);
        let a = std::fs::read(serial.join(csv_name)).unwrap();
        let b = std::fs::read(threaded.join(csv_name)).unwrap();
        assert_eq!(a, b, "{csv_name} differs between 1 and 4 worker threads");
        sizes.push(format!("{csv_name} {} bytes", a.len()));
    }
    println!(
        "criterion 10 reproducibility: 1 vs 4 threads byte-identical ({}) -> PASS",
        sizes.join(", ")
    );
}


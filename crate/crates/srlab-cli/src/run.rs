//! Experiment execution: drives the library over config grids and writes
//! tables, charts, and a metadata record in deterministic grid order.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use srlab::approx::{estimate_average, estimate_worst_case, omp_represent, Method, SparseRep};
use srlab::bounds::{evaluate, theorem2_lower_log2, BoundParams};
use srlab::dict::{orthonormal_dictionary, random_dictionary_with_budget, Dictionary, DEFAULT_MEMORY_BUDGET};
use srlab::quantizer::{check_orthogonality, ortho_decompose, scalar_quantize, subspace_covering_quantize};
use srlab::refine::{calibrate_d_design, rd_staircase, ScalingMode};
use srlab::rng::{derive, sample_ball};
use srlab::signal::norm_sq;
use srlab::stats::mean_stderr;
use srlab::{Seed, Signal};

use crate::config::{
    resolve_sizes, ApproxSweep, BoundsTable, CoveringProbe, ExperimentConfig, QuantCheck,
    RefineStaircase,
};
use crate::svg::{line_chart, Series};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct RunOptions {
    pub out: PathBuf,
    pub format: Format,
    pub threads: usize,
}

struct RunOutputs {
    tables: Vec<(String, Table)>,
    charts: Vec<(String, String)>,
    extras: serde_json::Value,
}

/// Dictionary memory budget in bytes, tunable through SRLAB_BUDGET_BYTES.
pub fn memory_budget() -> Result<u64> {
    match std::env::var("SRLAB_BUDGET_BYTES") {
        Ok(text) => text
            .parse::<u64>()
            .with_context(|| format!("SRLAB_BUDGET_BYTES must be an integer, got {text:?}")),
        Err(_) => Ok(DEFAULT_MEMORY_BUDGET),
    }
}

fn build_dictionary(dim: usize, len: u64, seed: Seed) -> Result<Dictionary> {
    Ok(random_dictionary_with_budget(dim, len, seed, memory_budget()?)?)
}

/// Validates and runs a config, writing all outputs under `opts.out`.
pub fn run(mut config: ExperimentConfig, opts: &RunOptions, seed_override: Option<u64>) -> Result<()> {
    if let Some(seed) = seed_override {
        config.set_seed(seed);
    }
    config.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .context("building worker pool")?;
    let outputs = pool.install(|| dispatch(&config))?;
    std::fs::create_dir_all(&opts.out)
        .with_context(|| format!("creating {}", opts.out.display()))?;
    let mut files = Vec::new();
    for (stem, table) in &outputs.tables {
        let (ext, body) = match opts.format {
            Format::Csv => ("csv", table.to_csv()),
            Format::Json => ("json", table.to_json()),
        };
        let path = opts.out.join(format!("{stem}.{ext}"));
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        files.push(format!("{stem}.{ext}"));
    }
    for (stem, chart) in &outputs.charts {
        let path = opts.out.join(format!("{stem}.svg"));
        std::fs::write(&path, chart).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        files.push(format!("{stem}.svg"));
    }
    let metadata = serde_json::json!({
        "kind": config.kind_name(),
        "seed": config.seed(),
        "threads": opts.threads,
        "format": match opts.format { Format::Csv => "csv", Format::Json => "json" },
        "files": files,
        "details": outputs.extras,
        "version": env!("CARGO_PKG_VERSION"),
        "git": git_describe(),
        "wall_ms": started.elapsed().as_millis() as u64,
    });
    let path = opts.out.join("metadata.json");
    std::fs::write(&path, format!("{:#}\n", metadata))
        .with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|out| out.status.success())
        .map(|out| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

fn dispatch(config: &ExperimentConfig) -> Result<RunOutputs> {
    match config {
        ExperimentConfig::ApproxSweep(c) => approx_sweep(c),
        ExperimentConfig::BoundsTable(c) => bounds_table(c),
        ExperimentConfig::RefineStaircase(c) => refine_staircase(c),
        ExperimentConfig::QuantCheck(c) => quant_check(c),
        ExperimentConfig::CoveringProbe(c) => covering_probe(c),
    }
}

fn approx_sweep(cfg: &ApproxSweep) -> Result<RunOutputs> {
    let base = Seed(cfg.seed);
    let mut table = Table::new(&[
        "n", "m", "k", "method", "trials", "mean_dist", "stderr", "worst_case",
    ]);
    let mut curves: BTreeMap<(usize, u64, String), Vec<(f64, f64)>> = BTreeMap::new();
    let mut pair = 0u64;
    let mut row = 0u64;
    for &n in &cfg.dims {
        for m in resolve_sizes(n, &cfg.sizes, &cfg.rates)? {
            let dict = build_dictionary(n, m, derive(base, 2 * pair))?;
            pair += 1;
            for &k in &cfg.ks {
                for name in &cfg.methods {
                    let method: Method = name.parse()?;
                    let est = derive(base, 2 * row + 1);
                    row += 1;
                    let worst = estimate_worst_case(&dict, k, cfg.trials, method, derive(est, 0))?;
                    let (mean, se) = estimate_average(&dict, k, cfg.trials, method, derive(est, 1))?;
                    table.push(vec![
                        n.into(),
                        m.into(),
                        k.into(),
                        name.as_str().into(),
                        cfg.trials.into(),
                        mean.into(),
                        se.into(),
                        worst.into(),
                    ]);
                    if cfg.svg && mean > 0.0 {
                        curves
                            .entry((n, m, name.clone()))
                            .or_default()
                            .push((k as f64, mean.log2()));
                    }
                }
            }
        }
    }
    let mut charts = Vec::new();
    if cfg.svg {
        let series: Vec<Series> = curves
            .into_iter()
            .map(|((n, m, method), points)| Series {
                label: format!("n={n} m={m} {method}"),
                points,
            })
            .collect();
        charts.push((
            "approx-sweep".to_string(),
            line_chart("average distortion", "k", "log2 mean distortion", &series),
        ));
    }
    Ok(RunOutputs {
        tables: vec![("approx-sweep".to_string(), table)],
        charts,
        extras: serde_json::json!({}),
    })
}

fn bounds_table(cfg: &BoundsTable) -> Result<RunOutputs> {
    let mut table = Table::new(&[
        "n", "k", "log2_m", "thm1_rhs", "thm2_lower", "thm2_lower_log2", "c_n", "log2_binom",
    ]);
    for &n in &cfg.dims {
        let params: Vec<BoundParams> = if cfg.sizes.is_empty() {
            cfg.rates
                .iter()
                .flat_map(|&r| cfg.ks.iter().map(move |&k| BoundParams::with_rate(n, r, k)))
                .collect::<srlab::Result<_>>()?
        } else {
            cfg.sizes
                .iter()
                .flat_map(|&m| cfg.ks.iter().map(move |&k| BoundParams::with_size(n, m, k)))
                .collect::<srlab::Result<_>>()?
        };
        for p in params {
            let report = evaluate(&p)?;
            table.push(vec![
                p.n().into(),
                p.k().into(),
                p.log2_m().into(),
                report.thm1_rhs.into(),
                report.thm2_lower.into(),
                theorem2_lower_log2(&p)?.into(),
                report.c_n.into(),
                report.log2_binom.into(),
            ]);
        }
    }
    Ok(RunOutputs {
        tables: vec![("bounds-table".to_string(), table)],
        charts: Vec::new(),
        extras: serde_json::json!({}),
    })
}

fn refine_staircase(cfg: &RefineStaircase) -> Result<RunOutputs> {
    let base = Seed(cfg.seed);
    let mut tables = Vec::new();
    let mut charts = Vec::new();
    let mut details = Vec::new();
    let mut pair = 0u64;
    for &n in &cfg.dims {
        for m in resolve_sizes(n, &cfg.sizes, &cfg.rates)? {
            let dict = build_dictionary(n, m, derive(base, 3 * pair))?;
            let mode = match cfg.mode.as_str() {
                "adaptive" => ScalingMode::Adaptive,
                "fixed" => {
                    let d_design = match cfg.d_design {
                        Some(d) => d,
                        None => calibrate_d_design(
                            &dict,
                            cfg.calibration_draws as usize,
                            derive(base, 3 * pair + 1),
                        )?,
                    };
                    ScalingMode::Fixed { d_design }
                }
                other => bail!("unknown mode {other:?}"),
            };
            let rows = rd_staircase(&dict, cfg.stages, cfg.trials as usize, derive(base, 3 * pair + 2), mode)?;
            pair += 1;
            let mut table = Table::new(&[
                "stage", "bits", "rate_per_dim", "mean_dist", "ideal_dist", "stderr", "trials",
            ]);
            let mut empirical = Vec::new();
            let mut ideal = Vec::new();
            for r in &rows {
                table.push(vec![
                    r.stage.into(),
                    r.bits.into(),
                    r.rate_per_dim.into(),
                    r.mean_dist.into(),
                    r.ideal_dist.into(),
                    r.stderr.into(),
                    cfg.trials.into(),
                ]);
                if r.mean_dist > 0.0 {
                    empirical.push((r.rate_per_dim, r.mean_dist.log2()));
                }
                ideal.push((r.rate_per_dim, r.ideal_dist.log2()));
            }
            let stem = format!("staircase_n{n}_m{m}");
            details.push(serde_json::json!({
                "file": stem,
                "n": n,
                "m": m,
                "mode": mode.name(),
                "d_design": match mode { ScalingMode::Fixed { d_design } => Some(d_design), ScalingMode::Adaptive => None },
                "side_info_bits_per_stage": match mode { ScalingMode::Adaptive => 64, ScalingMode::Fixed { .. } => 0 },
            }));
            if cfg.svg {
                let series = [
                    Series { label: "measured".into(), points: empirical },
                    Series { label: "gaussian d(r)".into(), points: ideal },
                ];
                charts.push((
                    stem.clone(),
                    line_chart("refinement staircase", "rate per dimension", "log2 distortion", &series),
                ));
            }
            tables.push((stem, table));
        }
    }
    Ok(RunOutputs { tables, charts, extras: serde_json::json!(details) })
}

fn quant_check(cfg: &QuantCheck) -> Result<RunOutputs> {
    let base = Seed(cfg.seed);
    let mut table = Table::new(&[
        "n", "m", "k", "l", "trials", "mean_err_sq", "stderr", "max_err_sq", "bound", "max_cross",
        "violations",
    ]);
    let mut pair = 0u64;
    let mut row = 0u64;
    for &n in &cfg.dims {
        for m in resolve_sizes(n, &cfg.sizes, &cfg.rates)? {
            let dict = build_dictionary(n, m, derive(base, 2 * pair))?;
            pair += 1;
            for &k in &cfg.ks {
                for &l in &cfg.ls {
                    let row_seed = derive(base, 2 * row + 1);
                    row += 1;
                    let bound = k as f64 / (4.0 * f64::from(l) * f64::from(l));
                    let mut errs = Vec::with_capacity(cfg.trials as usize);
                    let mut max_err: f64 = 0.0;
                    let mut max_cross: f64 = 0.0;
                    let mut violations = 0u64;
                    for t in 0..cfg.trials {
                        let y = sample_ball(n, derive(row_seed, t))?;
                        let (rep, _) = omp_represent(&y, &dict, k)?;
                        let o = ortho_decompose(&y, &rep, &dict)?;
                        let q = scalar_quantize(&o, l);
                        if q.err_sq > bound + 1e-15 {
                            violations += 1;
                        }
                        max_err = max_err.max(q.err_sq);
                        max_cross = max_cross.max(check_orthogonality(&y, &o, &q));
                        errs.push(q.err_sq);
                    }
                    let (mean, se) = mean_stderr(&errs);
                    table.push(vec![
                        n.into(),
                        m.into(),
                        k.into(),
                        l.into(),
                        cfg.trials.into(),
                        mean.into(),
                        se.into(),
                        max_err.into(),
                        bound.into(),
                        max_cross.into(),
                        violations.into(),
                    ]);
                }
            }
        }
    }
    Ok(RunOutputs {
        tables: vec![("quant-check".to_string(), table)],
        charts: Vec::new(),
        extras: serde_json::json!({}),
    })
}

fn covering_probe(cfg: &CoveringProbe) -> Result<RunOutputs> {
    let base = Seed(cfg.seed);
    let mut table = Table::new(&["k", "bits", "trials", "mean_err_sq", "stderr", "max_err_sq"]);
    let mut row = 0u64;
    for &k in &cfg.subspace_dims {
        let dict = orthonormal_dictionary(k);
        let rep = SparseRep {
            indices: (0..k).collect(),
            coeffs: vec![0.0; k],
            recon: Signal::zeros(k)?,
            residual_sq: 0.0,
        };
        for &bits in &cfg.bits {
            let row_seed = derive(base, row);
            row += 1;
            let codebook = derive(row_seed, 0);
            let mut errs = Vec::with_capacity(cfg.trials as usize);
            let mut max_err: f64 = 0.0;
            for t in 0..cfg.trials {
                let y = sample_ball(k, derive(row_seed, 1 + t))?;
                let o = ortho_decompose(&y, &rep, &dict)?;
                let q = subspace_covering_quantize(&o, bits, codebook)?;
                debug_assert!(q.err_sq <= norm_sq(&y) + 1e-12);
                max_err = max_err.max(q.err_sq);
                errs.push(q.err_sq);
            }
            let (mean, se) = mean_stderr(&errs);
            table.push(vec![
                k.into(),
                bits.into(),
                cfg.trials.into(),
                mean.into(),
                se.into(),
                max_err.into(),
            ]);
        }
    }
    Ok(RunOutputs {
        tables: vec![("covering-probe".to_string(), table)],
        charts: Vec::new(),
        extras: serde_json::json!({}),
    })
}

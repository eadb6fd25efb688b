//! `epslab`: build block plans, run orbits, and machine-check the finite
//! certificates behind threshold behavior of block-weighted shifts.
//!
//! Exit codes: 0 all checks passed, 1 at least one check failed (failing
//! rows are listed on stderr), 2 configuration or input errors.
//! `EPSLAB_THREADS` bounds the worker pool used to fan out independent
//! checks; report ordering is canonical regardless of scheduling.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use epslab_core::norm::registry;
use epslab_core::operator::OperatorT;
use epslab_core::plan::{plan_blocks, BlockPlan};
use epslab_core::report::{json_report, render_csv, CheckRow, ReportMeta};
use epslab_core::sample::random_target_batch;
use epslab_core::space::{parse_vector_json, DirectSumVector};
use epslab_core::verify::{
    assemble_criterion_report, build_witness, l1_interval_report, lower_bound_check,
    CriterionReport,
};
use epslab_core::{solve_omega, GeoSolution};

const TOOL: &str = concat!("epslab-", env!("CARGO_PKG_VERSION"));

#[derive(Parser)]
#[command(name = "epslab", version, about = "block-weighted shift construction and certificate checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArgs {
    /// Write the JSON report here (defaults to stdout).
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Also write a CSV summary (one row per check).
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate omega for a norm: min_y ||(y-1)e0 + y*omega*e1|| = eps.
    Omega {
        #[arg(long)]
        eps: f64,
        /// Norm selector, e.g. `lp:2` or `sup`.
        #[arg(long)]
        norm: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Build a block plan and write it as JSON.
    Plan {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        norm: String,
        /// Number of blocks.
        #[arg(long)]
        blocks: usize,
        /// Force per-block stretch minimums, e.g. `3:50,5:1000`.
        #[arg(long)]
        r_min: Option<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply powers of the shift to a vector and report each image.
    Orbit {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        vector: PathBuf,
        /// Comma-separated list of powers.
        #[arg(long)]
        powers: String,
        /// Profile norm selector for the direct sum (defaults to the plan's).
        #[arg(long)]
        norm_y: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build witnesses for targets and check both approximation bounds.
    VerifyWitness {
        #[arg(long)]
        plan: PathBuf,
        /// JSON file with targets; omit to generate random ones.
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Number of random targets when no file is given.
        #[arg(long, default_value_t = 20)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        norm_y: Option<String>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sweep powers and check the lower-bound slack at each one.
    VerifyLower {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        vector: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        horizon: u64,
        #[arg(long)]
        norm_y: Option<String>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Interval coverage certificate on X = Y = lp:1.
    L1Intervals {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        vector: PathBuf,
        #[arg(long)]
        horizon: u64,
        /// Length of the probed ray segment.
        #[arg(long)]
        probe: f64,
        /// Grid points for the containment cross-check (0 disables).
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Emit plot-ready CSV tables.
    Report {
        #[command(subcommand)]
        table: ReportTable,
    },
}

#[derive(Subcommand)]
enum ReportTable {
    /// omega and minimizer as eps sweeps an interval.
    OmegaCurve {
        #[arg(long)]
        norm: String,
        #[arg(long, default_value_t = 0.05)]
        eps_from: f64,
        #[arg(long, default_value_t = 0.95)]
        eps_to: f64,
        #[arg(long, default_value_t = 19)]
        steps: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// min-ratio of the lower-bound sweep as delta varies.
    DeltaCurve {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        vector: PathBuf,
        /// Sweep `from:to:steps`, e.g. `0.05:0.45:9`.
        #[arg(long)]
        deltas: String,
        #[arg(long)]
        horizon: u64,
        #[arg(long)]
        norm_y: Option<String>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn init_thread_pool() {
    if let Ok(text) = std::env::var("EPSLAB_THREADS") {
        if let Ok(n) = text.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn load_plan(path: &Path) -> Result<BlockPlan> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    BlockPlan::from_json_str(&text).with_context(|| format!("loading plan {}", path.display()))
}

fn load_vector(path: &Path) -> Result<DirectSumVector> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_vector_json(&text).with_context(|| format!("loading vector {}", path.display()))
}

fn make_operator(plan: BlockPlan, norm_y: &Option<String>) -> Result<OperatorT> {
    let spec_y = match norm_y {
        Some(text) => registry().parse(text)?.spec(),
        None => plan.spec_x,
    };
    Ok(OperatorT::new(plan, spec_y)?)
}

fn write_or_print(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, contents).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{contents}"),
    }
    Ok(())
}

/// Emit JSON + optional CSV, list failing rows, and report overall status.
fn emit(meta: &ReportMeta, payload: serde_json::Value, rows: Vec<CheckRow>, out: &OutArgs) -> Result<bool> {
    let json = serde_json::to_string_pretty(&json_report(meta, &payload))?;
    write_or_print(&out.out_json, &json)?;
    if let Some(csv_path) = &out.out_csv {
        fs::write(csv_path, render_csv(meta, &rows))
            .with_context(|| format!("writing {}", csv_path.display()))?;
    }
    let failing: Vec<&CheckRow> = rows.iter().filter(|r| !r.pass).collect();
    for row in &failing {
        eprintln!(
            "FAIL {} [{}]: value {} bound {} slack {}",
            row.check_id, row.k_or_n, row.value, row.bound, row.slack
        );
    }
    Ok(failing.is_empty())
}

fn parse_r_min(text: &Option<String>) -> Result<Vec<(u32, u64)>> {
    let mut out = Vec::new();
    if let Some(text) = text {
        for part in text.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once(':')
                .ok_or_else(|| anyhow!("bad r-min entry '{part}', expected k:value"))?;
            out.push((k.trim().parse()?, v.trim().parse()?));
        }
    }
    Ok(out)
}

fn parse_powers(text: &str) -> Result<Vec<u64>> {
    let mut powers = text
        .split(',')
        .filter(|p| !p.is_empty())
        .map(|p| p.trim().parse::<u64>().map_err(|e| anyhow!("bad power '{p}': {e}")))
        .collect::<Result<Vec<u64>>>()?;
    powers.sort_unstable();
    powers.dedup();
    if powers.is_empty() {
        bail!("no powers given");
    }
    Ok(powers)
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Omega { eps, norm, tol } => {
            let norm = registry().parse(&norm)?;
            let solution: GeoSolution = match solve_omega(eps, norm.as_ref(), tol) {
                Ok(s) => s,
                Err(epslab_core::Error::ToleranceNotMet { residual, tol }) => {
                    // a valid configuration whose check failed, not a usage error
                    eprintln!("FAIL omega residual {residual} exceeds tolerance {tol}");
                    return Ok(false);
                }
                Err(e) => return Err(e.into()),
            };
            let meta = ReportMeta::new(TOOL);
            let payload = serde_json::json!({
                "eps": eps,
                "norm": norm.spec(),
                "omega": solution.omega,
                "y_star": solution.y_star,
                "min_value": solution.min_value,
                "residual": solution.residual,
            });
            println!("{}", serde_json::to_string_pretty(&json_report(&meta, &payload))?);
            Ok(true)
        }

        Command::Plan { eps, norm, blocks, r_min, tol, out } => {
            let spec = registry().parse(&norm)?.spec();
            let plan = plan_blocks(eps, spec, blocks, &parse_r_min(&r_min)?, tol)?;
            fs::write(&out, plan.to_json_string()).with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "plan: {} blocks, weights 1..={}, sha256 {}",
                plan.block_count(),
                plan.end_index(),
                plan.sha256()
            );
            Ok(true)
        }

        Command::Orbit { plan, vector, powers, norm_y, out } => {
            let plan = load_plan(&plan)?;
            let sha = plan.sha256();
            let op = make_operator(plan, &norm_y)?;
            let u = load_vector(&vector)?;
            let powers = parse_powers(&powers)?;
            let mut entries = Vec::with_capacity(powers.len());
            for n in powers {
                let image = op.apply_pow(&u, n)?;
                let norm = op.norm_z(&image);
                entries.push(serde_json::json!({
                    "n": n,
                    "norm": norm.to_f64(),
                    "norm_log2": norm.log2_abs(),
                    "vector": image,
                }));
            }
            let meta = ReportMeta::new(TOOL).with_plan(sha);
            let payload = serde_json::json!({ "powers": entries });
            fs::write(&out, serde_json::to_string_pretty(&json_report(&meta, &payload))?)
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(true)
        }

        Command::VerifyWitness { plan, targets, random, seed, norm_y, tol, out } => {
            let plan = load_plan(&plan)?;
            let sha = plan.sha256();
            let block_count = plan.block_count() as u32;
            let op = make_operator(plan, &norm_y)?;
            let targets: Vec<(u32, DirectSumVector)> = match targets {
                Some(path) => parse_targets(&path)?,
                None => random_target_batch(seed, random, block_count, 1.5),
            };
            // fan out the independent witness constructions, then assemble
            // in the canonical order
            let results: Vec<_> = targets
                .par_iter()
                .map(|(k, target)| build_witness(&op, target, *k, tol))
                .collect::<Result<Vec<_>, _>>()?;
            let report: CriterionReport = assemble_criterion_report(&op, &targets, results, tol)?;
            let mut rows = Vec::new();
            for (idx, res) in report.results.iter().enumerate() {
                let eps = op.eps();
                rows.push(CheckRow::new(
                    format!("witness_approx/t{idx:03}"),
                    res.k as i64,
                    res.approx_error,
                    eps * res.target_norm + tol,
                    eps * res.target_norm + tol - res.approx_error,
                    res.approx_error <= eps * res.target_norm + tol,
                ));
                rows.push(CheckRow::new(
                    format!("witness_vnorm/t{idx:03}"),
                    res.k as i64,
                    res.v_norm,
                    1.0 / res.k as f64 + tol,
                    1.0 / res.k as f64 + tol - res.v_norm,
                    res.v_norm <= 1.0 / res.k as f64 + tol,
                ));
            }
            for check in &report.annihilation {
                rows.push(CheckRow::new(
                    format!("witness_annihilation/t{:03}", check.sample),
                    check.power as i64,
                    if check.exact_zero { 0.0 } else { 1.0 },
                    0.0,
                    0.0,
                    check.exact_zero,
                ));
            }
            let meta = ReportMeta::new(TOOL).with_plan(sha).with_seed(seed);
            let payload = serde_json::to_value(&report)?;
            emit(&meta, payload, rows, &out)
        }

        Command::VerifyLower { plan, vector, delta, horizon, norm_y, tol, out } => {
            let plan = load_plan(&plan)?;
            let sha = plan.sha256();
            let op = make_operator(plan, &norm_y)?;
            let u = load_vector(&vector)?;
            let result = lower_bound_check(&op, &u, delta, horizon, tol)?;
            let mut rows: Vec<CheckRow> = result
                .rows
                .iter()
                .map(|r| {
                    CheckRow::new(
                        format!("lower_slack/n{:06}", r.n),
                        r.n as i64,
                        r.distance,
                        r.lower,
                        r.slack,
                        r.pass,
                    )
                })
                .collect();
            rows.push(CheckRow::new(
                "lower_min_ratio",
                result.horizon as i64,
                result.min_ratio,
                delta,
                result.min_ratio - delta,
                result.min_ratio > delta,
            ));
            let meta = ReportMeta::new(TOOL).with_plan(sha);
            let payload = serde_json::to_value(&result)?;
            emit(&meta, payload, rows, &out)
        }

        Command::L1Intervals { plan, vector, horizon, probe, grid, tol, out } => {
            let plan = load_plan(&plan)?;
            let sha = plan.sha256();
            let op = make_operator(plan, &None)?;
            let u = load_vector(&vector)?;
            let report = l1_interval_report(&op, &u, horizon, probe, grid, tol)?;
            let mut rows = Vec::new();
            let c = 2.0 * report.eps / (1.0 - report.eps * report.eps);
            for row in &report.intervals {
                if let epslab_core::verify::IntervalStatus::Interval { length, .. } = row.status {
                    let want = c * row.re_head;
                    rows.push(CheckRow::new(
                        format!("interval_length/n{:06}", row.n),
                        row.n as i64,
                        length,
                        want,
                        tol - (length - want).abs(),
                        (length - want).abs() <= tol,
                    ));
                }
            }
            rows.push(CheckRow::new(
                "interval_total_length",
                report.horizon as i64,
                report.total_length,
                report.bound,
                report.bound + tol - report.total_length,
                report.total_length <= report.bound + tol,
            ));
            rows.push(CheckRow::new(
                "interval_uncovered_point",
                report.horizon as i64,
                report.uncovered_point.unwrap_or(f64::NAN),
                report.ray_start,
                if report.uncovered_verified { 1.0 } else { 0.0 },
                report.uncovered_point.is_none() || report.uncovered_verified,
            ));
            if report.superset_grid > 0 {
                rows.push(CheckRow::new(
                    "interval_containment",
                    report.superset_violations as i64,
                    report.superset_violations as f64,
                    0.0,
                    -(report.superset_violations as f64),
                    report.superset_violations == 0,
                ));
            }
            let meta = ReportMeta::new(TOOL).with_plan(sha);
            let payload = serde_json::to_value(&report)?;
            emit(&meta, payload, rows, &out)
        }

        Command::Report { table } => run_report(table),
    }
}

fn parse_targets(path: &Path) -> Result<Vec<(u32, DirectSumVector)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let list = value
        .get("targets")
        .and_then(|t| t.as_array())
        .ok_or_else(|| anyhow!("targets file needs a 'targets' array"))?;
    let mut out = Vec::with_capacity(list.len());
    for (idx, entry) in list.iter().enumerate() {
        let vector_value = entry.get("vector").unwrap_or(entry);
        let vector: DirectSumVector = serde_json::from_value(vector_value.clone())
            .with_context(|| format!("target {idx}"))?;
        let k = match entry.get("k").and_then(|k| k.as_u64()) {
            Some(k) => k as u32,
            None => infer_step(&vector),
        };
        out.push((k, vector));
    }
    Ok(out)
}

/// Smallest step whose span admits the vector.
fn infer_step(vector: &DirectSumVector) -> u32 {
    let mut k = 1u64;
    if let Some(max_block) = vector.max_block() {
        k = k.max(max_block + 1);
    }
    for (_, v) in vector.iter() {
        if let Some(max_index) = v.max_index() {
            k = k.max(max_index + 1);
        }
    }
    k as u32
}

fn run_report(table: ReportTable) -> Result<bool> {
    match table {
        ReportTable::OmegaCurve { norm, eps_from, eps_to, steps, tol, out } => {
            if steps < 1 || !(0.0 < eps_from && eps_from <= eps_to && eps_to < 1.0) {
                bail!("omega-curve needs 0 < eps-from <= eps-to < 1 and steps >= 1");
            }
            let norm = registry().parse(&norm)?;
            let mut csv = String::from("# ");
            csv.push_str(TOOL);
            csv.push_str("\neps,omega,y_star,min_value,residual\n");
            for i in 0..steps {
                let eps = if steps == 1 {
                    eps_from
                } else {
                    eps_from + (eps_to - eps_from) * i as f64 / (steps - 1) as f64
                };
                let sol = solve_omega(eps, norm.as_ref(), tol)?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    eps, sol.omega, sol.y_star, sol.min_value, sol.residual
                ));
            }
            fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
            Ok(true)
        }
        ReportTable::DeltaCurve { plan, vector, deltas, horizon, norm_y, tol, out } => {
            let plan = load_plan(&plan)?;
            let sha = plan.sha256();
            let op = make_operator(plan, &norm_y)?;
            let u = load_vector(&vector)?;
            let (from, to, steps) = parse_sweep(&deltas)?;
            let mut csv = format!("# {TOOL} plan_sha256={sha}\ndelta,k_scalar,min_ratio,pass\n");
            let mut all = true;
            for i in 0..steps {
                let delta = if steps == 1 {
                    from
                } else {
                    from + (to - from) * i as f64 / (steps - 1) as f64
                };
                let res = lower_bound_check(&op, &u, delta, horizon, tol)?;
                all &= res.pass;
                csv.push_str(&format!("{},{},{},{}\n", delta, res.k_scalar, res.min_ratio, res.pass));
            }
            fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
            Ok(all)
        }
    }
}

fn parse_sweep(text: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("sweep must be from:to:steps, got '{text}'");
    }
    Ok((parts[0].parse()?, parts[1].parse()?, parts[2].parse()?))
}

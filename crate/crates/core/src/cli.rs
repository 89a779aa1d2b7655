//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{FitDocument, RunConfig, RunManifest};
use crate::error::{validation, Error, Result};
use crate::harness::{compare_systems, from_records, run_bdbf_experiment, ExperimentResult, TrialRecord};
use crate::phasefit::{empht_fit, DurationSamples, EmOptions};
use crate::planner::{plan_from_profile, PlanReport};
use crate::queue::{offered_load, supportable_count, AdequacyProfile, ConcurrencyModel, DEFAULT_QUAD_TOL};

#[derive(Debug, Parser)]
#[command(name = "cscs", version, about = "Antenna planning and robust beamforming for sojourner sub-cells")]
pub struct Cli {
    /// Overrides every seed taken from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a phase-type law to stay durations, one per line.
    FitPh(FitPhArgs),
    /// Offered load and mean adequacy curve of the concurrency queue.
    QueueAnalyze(QueueArgs),
    /// Select SAP and IAP antenna counts.
    Plan(PlanArgs),
    /// Monte-Carlo comparison of the two precoding systems.
    Simulate(SimulateArgs),
    /// Paired comparison from a trials.csv written by `simulate`.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct FitPhArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short = 'm', default_value_t = 4)]
    pub phases: usize,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub ll_tol: Option<f64>,
    /// Output JSON document.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueueArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Grid points for the offered-load table.
    #[arg(long, default_value_t = 289)]
    pub points: usize,
    /// Largest supportable-sojourner count in the adequacy table.
    #[arg(long, default_value_t = 40)]
    pub n_max: u64,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub table_len: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Compare every system-a cell against system b at this radius.
    #[arg(long)]
    pub baseline_eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub baseline_eps: Option<f64>,
}

/// Parses `args`, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| validation(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::FitPh(a) => cmd_fit_ph(a, cli.seed),
        Command::QueueAnalyze(a) => cmd_queue_analyze(a, cli.seed),
        Command::Plan(a) => cmd_plan(a, cli.seed),
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Compare(a) => cmd_compare(a),
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

pub fn cmd_fit_ph(args: &FitPhArgs, seed: Option<u64>) -> Result<()> {
    let samples = DurationSamples::read(&args.input)?;
    let d = EmOptions::default();
    let opts = EmOptions {
        phases: args.phases,
        max_iters: args.max_iters.unwrap_or(d.max_iters),
        ll_tol: args.ll_tol.unwrap_or(d.ll_tol),
        seed: seed.unwrap_or(d.seed),
    };
    let fit = empht_fit(&samples, &opts)?;
    for w in &fit.warnings {
        eprintln!("warning: {w:?}");
    }
    let doc = FitDocument::from(&fit);
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(parent)?;
    }
    fs::write(&args.out, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct LoadRow {
    t_min: f64,
    arrival_rate_per_min: f64,
    offered_load: f64,
}

#[derive(Serialize)]
struct AdequacyRow {
    n_u: u64,
    count_threshold: u64,
    mean_adequacy: f64,
}

/// Service law and arrival profile from the config.
fn load_model(cfg: &RunConfig, seed: u64) -> Result<(ConcurrencyModel, Option<FitDocument>)> {
    let (service, fit, dataset_profile) = cfg.service(seed)?;
    let profile = cfg.arrivals(dataset_profile)?;
    Ok((ConcurrencyModel::new(profile, service), fit.as_ref().map(FitDocument::from)))
}

pub fn cmd_queue_analyze(args: &QueueArgs, seed: Option<u64>) -> Result<()> {
    let start = Instant::now();
    let cfg = RunConfig::load(&args.config)?;
    let master = cfg.master_seed(seed);
    let (model, _) = load_model(&cfg, master)?;
    if args.points < 2 {
        return Err(validation("--points must be at least 2"));
    }
    out_dir(&args.out)?;
    let horizon = model.horizon();
    let mut load = Vec::with_capacity(args.points);
    for k in 0..args.points {
        let t = horizon * k as f64 / (args.points - 1) as f64;
        load.push(LoadRow {
            t_min: t,
            arrival_rate_per_min: model.profile.rate_per_min(t),
            offered_load: offered_load(&model, t, DEFAULT_QUAD_TOL)?,
        });
    }
    let load_path = args.out.join("offered_load.csv");
    write_csv(&load_path, load)?;

    let planner = cfg.planner.clone().unwrap_or_default();
    let profile = AdequacyProfile::new(&model, DEFAULT_QUAD_TOL)?;
    let curve = profile.curve(args.n_max, planner.q, planner.count_bound)?;
    let rows = curve
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let n = i as u64 + 1;
            Ok(AdequacyRow { n_u: n, count_threshold: supportable_count(n, planner.q)?, mean_adequacy: p })
        })
        .collect::<Result<Vec<_>>>()?;
    let adequacy_path = args.out.join("adequacy.csv");
    write_csv(&adequacy_path, rows)?;

    let mut manifest = RunManifest::new("queue-analyze", master).with_config(&cfg)?;
    manifest.outputs = vec![path_string(&load_path), path_string(&adequacy_path)];
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    manifest.write(args.out.join("manifest.json"))
}

#[derive(Serialize)]
struct PlanDocument<'a> {
    report: &'a PlanReport,
    peak_offered_load: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitDocument>,
}

pub fn cmd_plan(args: &PlanArgs, seed: Option<u64>) -> Result<()> {
    let start = Instant::now();
    let cfg = RunConfig::load(&args.config)?;
    let master = cfg.master_seed(seed);
    let planner = cfg.planner.clone().ok_or_else(|| Error::Config {
        path: "planner".into(),
        message: "section is required".into(),
    })?;
    let (model, fit) = load_model(&cfg, master)?;
    let profile = AdequacyProfile::new(&model, DEFAULT_QUAD_TOL)?;
    let report = plan_from_profile(&profile, &planner, args.table_len)?;
    if let Some(f) = &fit {
        for w in &f.warnings {
            eprintln!("warning: {w:?}");
        }
    }
    out_dir(&args.out)?;
    let plan_path = args.out.join("plan.json");
    let doc = PlanDocument { report: &report, peak_offered_load: profile.peak_offered_load(), fit };
    fs::write(&plan_path, serde_json::to_string_pretty(&doc)? + "\n")?;
    let table_path = args.out.join("adequacy.csv");
    write_csv(
        &table_path,
        report.table.iter().map(|&(n_u, count_threshold, mean_adequacy)| AdequacyRow { n_u, count_threshold, mean_adequacy }),
    )?;
    let mut manifest = RunManifest::new("plan", master).with_config(&cfg)?;
    manifest.outputs = vec![path_string(&plan_path), path_string(&table_path)];
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    manifest.write(args.out.join("manifest.json"))
}

/// Writes the cell summary, per-trial records and the comparison table.
pub fn write_experiment(result: &ExperimentResult, dir: &Path, baseline_eps: Option<f64>) -> Result<Vec<PathBuf>> {
    out_dir(dir)?;
    let results = dir.join("results.csv");
    write_csv(&results, &result.cells)?;
    let trials = dir.join("trials.csv");
    write_csv(&trials, &result.trials)?;
    let comparison = dir.join("comparison.csv");
    write_csv(&comparison, compare_systems(result, baseline_eps)?)?;
    Ok(vec![results, trials, comparison])
}

pub fn cmd_simulate(args: &SimulateArgs, seed: Option<u64>) -> Result<()> {
    let start = Instant::now();
    let cfg = RunConfig::load(&args.config)?;
    let mut scenario = cfg.scenario.clone().ok_or_else(|| Error::Config {
        path: "scenario".into(),
        message: "section is required".into(),
    })?;
    if let Some(s) = seed.or(cfg.seed) {
        scenario.master_seed = s;
    }
    if let Some(n) = args.trials {
        scenario.n_trials = n;
    }
    let result = run_bdbf_experiment(&scenario)?;
    let outputs = write_experiment(&result, &args.out, args.baseline_eps)?;
    let mut manifest = RunManifest::new("simulate", scenario.master_seed).with_config(&cfg)?;
    manifest.outputs = outputs.iter().map(|p| path_string(p)).collect();
    manifest.failure_warning = result.failure_warning;
    if result.failure_warning {
        let failed = result.trials.iter().filter(|r| !r.ok()).count();
        let msg = format!("{failed} of {} solver runs failed", result.trials.len());
        eprintln!("warning: {msg}");
        manifest.warnings.push(msg);
    }
    if args.trials.is_some() {
        manifest.warnings.push(format!("n_trials overridden to {}", scenario.n_trials));
    }
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    manifest.write(args.out.join("manifest.json"))
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        out.push(rec.map_err(|e: csv::Error| Error::Parse { line: i + 2, message: e.to_string() })?);
    }
    if out.is_empty() {
        return Err(Error::Parse { line: 0, message: "no trial records".into() });
    }
    Ok(out)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let result = from_records(read_trials(&args.input)?);
    let rows = compare_systems(&result, args.baseline_eps)?;
    for r in rows.iter().filter(|r| r.flagged) {
        eprintln!(
            "flagged: eps_sq_a={} eps_sq_b={} zeta={} mean_diff={:.4} (se {:.4})",
            r.eps_sq_a, r.eps_sq_b, r.zeta_watts, r.mean_diff_bps, r.se_diff
        );
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(parent)?;
    }
    write_csv(&args.out, rows)
}

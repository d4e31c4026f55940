//! The `ggmsl` command line: `generate`, `run`, `report` and `plot`.
//!
//! Exit status is 0 on success, 1 on runtime failures (I/O, numerics) and 2
//! on usage or validation errors.

pub mod generate;
pub mod plan;
pub mod plot;
pub mod report;
pub mod results;

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::samplers::SamplerKind;
use crate::simbench::{run_jobs, ExperimentPlan, RunStatus};
use plot::PlotKind;
use results::{ResultRow, ResultsWriter, SnapshotWriter};

/// Plans with at least this many variables need `--long-run`.
pub const LONG_RUN_P: usize = 500;

#[derive(Parser, Debug)]
#[command(name = "ggmsl", version, about = "Structure learning samplers for Gaussian graphical models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Override the master seed of every run in the plan.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for `run`.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Output path: a directory for `generate`, a file otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Append to an existing results file, skipping run ids already in it.
    #[arg(long, global = true)]
    pub resume: bool,

    /// Logarithmic y axis for `plot`.
    #[arg(long = "log-y", global = true)]
    pub log_y: bool,

    /// Comma-separated subset of the plan's algorithms.
    #[arg(long, global = true, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,

    /// Allow plans with p >= 500.
    #[arg(long = "long-run", global = true)]
    pub long_run: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write true graphs, precision matrices and data for every replication.
    Generate { plan: PathBuf },
    /// Run the plan and write one results row per run.
    Run {
        plan: PathBuf,
        /// Also write the running AUC at each snapshot to this file.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Summarise a results file (text on stdout, JSON to --out).
    Report { results: PathBuf },
    /// Draw an SVG chart from a results file or snapshot log.
    Plot {
        input: PathBuf,
        /// auc-by-p | mamse-by-p | auc-over-time | cost-by-p | auc-by-n | by-graph-type
        #[arg(long)]
        kind: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

fn classify(context: &Path, e: Error) -> CliError {
    let msg = format!("{}: {e}", context.display());
    match e {
        Error::Io(_) | Error::Numerical(_) | Error::NotPositiveDefinite(_) => CliError::Runtime(msg),
        _ => CliError::Usage(msg),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn require_out(cli: &Cli, what: &str) -> Result<PathBuf, CliError> {
    cli.out.clone().ok_or_else(|| CliError::Usage(format!("--out <{what}> is required")))
}

/// Reads a plan and applies `--seed`, `--algorithms` and `--long-run`.
pub fn load_plans(cli: &Cli, path: &Path) -> Result<Vec<ExperimentPlan>, CliError> {
    let mut plans = plan::parse_plan(&read(path)?).map_err(|e| classify(path, e))?;
    let filter = match &cli.algorithms {
        Some(names) => Some(
            names
                .iter()
                .map(|n| SamplerKind::from_name(n).ok_or_else(|| CliError::Usage(format!("unknown algorithm `{n}`"))))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    for plan in &mut plans {
        if let Some(seed) = cli.seed {
            plan.master_seed = seed;
        }
        if let Some(keep) = &filter {
            plan.algorithms.retain(|a| keep.contains(a));
        }
        if plan.p >= LONG_RUN_P && !cli.long_run {
            return Err(CliError::Usage(format!(
                "{}: plans with p >= {LONG_RUN_P} need --long-run (found p = {})",
                path.display(),
                plan.p
            )));
        }
    }
    plans.retain(|p| !p.algorithms.is_empty());
    if plans.is_empty() {
        return Err(CliError::Usage("no algorithms left after --algorithms".into()));
    }
    Ok(plans)
}

fn cmd_generate(cli: &Cli, plan: &Path) -> Result<(), CliError> {
    let dir = require_out(cli, "dir")?;
    let plans = load_plans(cli, plan)?;
    let entries = generate::write_instances(&plans, &dir).map_err(|e| classify(&dir, e))?;
    eprintln!("wrote {} instances to {}", entries.len(), dir.display());
    Ok(())
}

fn cmd_run(cli: &Cli, plan: &Path, snapshots: Option<&Path>) -> Result<(), CliError> {
    let out = require_out(cli, "csv")?;
    let plans = load_plans(cli, plan)?;
    let done: HashSet<String> = if cli.resume && out.exists() {
        results::repair_tail(&out).map_err(|e| classify(&out, e))?;
        results::parse_results(&read(&out)?).map_err(|e| classify(&out, e))?.into_iter().map(|r| r.run_id).collect()
    } else {
        HashSet::new()
    };
    let mut writer =
        if cli.resume { ResultsWriter::append(&out) } else { ResultsWriter::create(&out) }.map_err(|e| classify(&out, e))?;
    let mut snap_writer = match snapshots {
        Some(p) => Some(SnapshotWriter::open(p, cli.resume).map_err(|e| classify(p, e))?),
        None => None,
    };
    let total: usize = plans.iter().map(|p| p.jobs().len()).sum();
    let (mut finished, mut skipped, mut failed) = (0, 0, 0);
    let threads = cli.threads.max(1);
    for plan in &plans {
        let jobs: Vec<_> = plan.jobs().into_iter().filter(|j| !done.contains(&plan.run_id(j))).collect();
        skipped += plan.jobs().len() - jobs.len();
        // Batches of `threads` jobs keep the row order fixed and lose at most
        // one batch on interruption.
        for batch in jobs.chunks(threads) {
            let records = run_jobs(plan, batch, threads).map_err(|e| CliError::Runtime(e.to_string()))?;
            for rec in &records {
                writer.write(&ResultRow::from(rec)).map_err(|e| classify(&out, e))?;
                if let (Some(w), Some(path)) = (snap_writer.as_mut(), snapshots) {
                    w.write(&results::snapshot_rows(rec)).map_err(|e| classify(path, e))?;
                }
                finished += 1;
                match rec.status {
                    RunStatus::Ok => eprintln!(
                        "[{}/{}] {} ok auc={} cost={}s wall={}s",
                        finished + skipped,
                        total,
                        rec.run_id,
                        results::fmt_sig(rec.auc),
                        results::fmt_ms(rec.cost_seconds),
                        results::fmt_ms(rec.wall_seconds)
                    ),
                    RunStatus::Failed => {
                        failed += 1;
                        eprintln!(
                            "[{}/{}] {} FAILED: {}",
                            finished + skipped,
                            total,
                            rec.run_id,
                            rec.message.as_deref().unwrap_or("unknown error")
                        )
                    }
                }
            }
        }
    }
    eprintln!("{finished} runs written to {} ({skipped} skipped, {failed} failed)", out.display());
    Ok(())
}

fn cmd_report(cli: &Cli, path: &Path) -> Result<(), CliError> {
    let rows = results::parse_results(&read(path)?).map_err(|e| classify(path, e))?;
    let summary = report::summarize(&rows).map_err(|e| classify(path, e))?;
    print!("{}", report::to_text(&summary));
    if let Some(out) = &cli.out {
        std::fs::write(out, report::to_json(&summary)).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}

fn cmd_plot(cli: &Cli, input: &Path, kind: &str) -> Result<(), CliError> {
    let out = require_out(cli, "svg")?;
    let kind = PlotKind::from_name(kind).ok_or_else(|| {
        let names: Vec<&str> = PlotKind::ALL.iter().map(|k| k.name()).collect();
        CliError::Usage(format!("unknown plot kind `{kind}`; expected one of {}", names.join(", ")))
    })?;
    let text = read(input)?;
    let chart = if text.starts_with(results::SNAPSHOTS_HEADER) {
        if kind != PlotKind::AucOverTime {
            return Err(CliError::Usage(format!("{}: a snapshot log only supports auc-over-time", input.display())));
        }
        plot::chart_from_snapshots(&results::parse_snapshots(&text).map_err(|e| classify(input, e))?, cli.log_y)
    } else {
        plot::chart_from_results(&results::parse_results(&text).map_err(|e| classify(input, e))?, kind, cli.log_y)
    }
    .map_err(|e| classify(input, e))?;
    let svg = plot::render_svg(&chart).map_err(|e| classify(input, e))?;
    std::fs::write(&out, svg).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate { plan } => cmd_generate(cli, plan),
        Command::Run { plan, snapshots } => cmd_run(cli, plan, snapshots.as_deref()),
        Command::Report { results } => cmd_report(cli, results),
        Command::Plot { input, kind } => cmd_plot(cli, input, kind),
    }
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! Subcommands of the `idmdgp` binary. Each `cmd_*` returns the process exit
//! code: 0 on success, 2 when a solve ends without meeting a tolerance, 1 on
//! error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use idmdgp::io::{self, GeneratorParams};
use idmdgp::report::{self, ReportStatus, RunReport};
use idmdgp::{multistart_solve, SolveStatus, SolverParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSOLVED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "idmdgp", version, about = "Interval distance geometry solver for protein backbones")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance with the multistart method
    Solve(SolveArgs),
    /// Build an instance from reference coordinates
    Generate(GenerateArgs),
    /// Write an ideal-geometry synthetic backbone reference
    Synth(SynthArgs),
    /// Solve every instance in a directory and tabulate the results
    Bench(BenchArgs),
    /// Performance profiles from one or more results tables
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Instance file
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock budget in seconds (unlimited if omitted)
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_mde: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub eps_lde: f64,
    /// RMSD (Å) at or below which two conformations count as the same
    #[arg(long, default_value_t = 5.0)]
    pub eps_similar: f64,
    #[arg(long, default_value_t = 500)]
    pub n_trial: usize,
    #[arg(long, default_value_t = 50)]
    pub n_conf: usize,
    #[arg(long, default_value_t = 20)]
    pub n_tors: usize,
    #[arg(long, default_value_t = 3)]
    pub n_impr: usize,
    /// Conformation output file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report output file (stdout if omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Reference coordinates, one `index name residue x y z` line per atom
    #[arg(long)]
    pub reference: PathBuf,
    /// Total torsion window width in degrees
    #[arg(long, default_value_t = 50.0)]
    pub angle_width: f64,
    /// Hydrogen pairs within this distance (Å) get an interval edge
    #[arg(long, default_value_t = 5.0)]
    pub hh_cutoff: f64,
    /// Interval width (Å) for hydrogens in the same or adjacent residues
    #[arg(long, default_value_t = 1.0)]
    pub hh_width_adjacent: f64,
    /// Interval width (Å) for other hydrogen pairs
    #[arg(long, default_value_t = 2.0)]
    pub hh_width_other: f64,
    /// Emit no hydrogen-pair edges
    #[arg(long)]
    pub no_hydrogens: bool,
    /// Instance output file (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 17)]
    pub residues: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reference output file (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Directory of `.inst` files, run in sorted name order
    #[arg(long)]
    pub instances: PathBuf,
    /// Per-instance wall-clock budget in seconds
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Results table output file (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    /// Results tables, one per algorithm
    #[arg(long, num_args = 1.., required = true)]
    pub results: Vec<PathBuf>,
    /// Algorithm labels in the order of --results (file stems if omitted)
    #[arg(long, num_args = 1..)]
    pub labels: Vec<String>,
    /// Profile table output file (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Generate(a) => cmd_generate(&a).map(|_| EXIT_OK),
        Command::Synth(a) => cmd_synth(&a).map(|_| EXIT_OK),
        Command::Bench(a) => cmd_bench(&a).map(|_| EXIT_OK),
        Command::Profile(a) => cmd_profile(&a).map(|_| EXIT_OK),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_ERROR
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn time_limit(secs: Option<f64>) -> Result<Option<Duration>> {
    secs.map(|s| Duration::try_from_secs_f64(s).with_context(|| format!("invalid time limit {s}")))
        .transpose()
}

fn instance_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

impl SolveArgs {
    pub fn params(&self) -> Result<SolverParams> {
        Ok(SolverParams {
            n_trial: self.n_trial,
            n_conf: self.n_conf,
            n_tors: self.n_tors,
            n_impr: self.n_impr,
            eps_mde: self.eps_mde,
            eps_lde: self.eps_lde,
            eps_similar: self.eps_similar,
            rng_seed: self.seed,
            time_limit: time_limit(self.time_limit)?,
            ..SolverParams::default()
        })
    }
}

/// Parses, solves, and writes the conformation (when `out` is set) and the
/// report. Returns the report and the exit code it implies.
pub fn solve_one(args: &SolveArgs, out: Option<&Path>) -> Result<(RunReport, i32)> {
    let params = args.params()?;
    let inst = io::parse_instance(&args.instance)?;
    let outcome = multistart_solve(&inst, &params)?;
    log::info!(
        "{}: {:?} after {} trials in {:.3?}",
        args.instance.display(),
        outcome.status,
        outcome.trials,
        outcome.elapsed
    );
    if let Some(p) = out {
        io::write_conformation(&outcome.conformation.coords, &inst, p)?;
    }
    let report = RunReport::from_outcome(&instance_id(&args.instance), &inst, &outcome, args.seed);
    let code = match outcome.status {
        SolveStatus::Solved => EXIT_OK,
        SolveStatus::BestEffort | SolveStatus::TimeLimit => EXIT_UNSOLVED,
    };
    Ok((report, code))
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let started = Instant::now();
    match solve_one(args, args.out.as_deref()) {
        Ok((report, code)) => {
            emit(args.report.as_deref(), &report.to_text())?;
            Ok(code)
        }
        Err(e) => {
            if let Some(p) = &args.report {
                let failed = RunReport::failed(&instance_id(&args.instance), args.seed, started.elapsed());
                let _ = std::fs::write(p, failed.to_text());
            }
            Err(e)
        }
    }
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let reference = io::parse_reference(&args.reference)?;
    let params = GeneratorParams {
        angle_width_deg: args.angle_width,
        hh_cutoff: args.hh_cutoff,
        hh_width_adjacent: args.hh_width_adjacent,
        hh_width_other: args.hh_width_other,
        include_hydrogens: !args.no_hydrogens,
    };
    let inst = io::generate_instance(&reference, &params)?;
    log::info!("generated {} atoms, {} edges", inst.n_atoms(), inst.n_edges());
    emit(args.out.as_deref(), &io::format_instance(&inst))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let r = io::synthetic_backbone(args.residues, args.seed)?;
    emit(args.out.as_deref(), &io::format_reference(&r))
}

/// `.inst` files of `dir` in sorted order.
pub fn instance_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "inst"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let files = instance_files(&args.instances)?;
    if files.is_empty() {
        bail!("no instances in {}", args.instances.display());
    }
    let mut rows = Vec::with_capacity(files.len());
    for path in files {
        let solve = SolveArgs {
            instance: path.clone(),
            seed: args.seed,
            time_limit: args.time_limit,
            ..default_solve_args()
        };
        let started = Instant::now();
        let row = match solve_one(&solve, None) {
            Ok((r, _)) => r,
            Err(e) => {
                log::warn!("{}: {e:#}", path.display());
                RunReport::failed(&instance_id(&path), args.seed, started.elapsed())
            }
        };
        rows.push(row);
    }
    emit(args.out.as_deref(), &report::format_results(&rows))
}

/// Solve arguments with every default and a placeholder instance path.
pub fn default_solve_args() -> SolveArgs {
    let cli = Cli::try_parse_from(["idmdgp", "solve", "--instance", "-"]).expect("defaults parse");
    match cli.command {
        Command::Solve(a) => a,
        _ => unreachable!(),
    }
}

pub fn cmd_profile(args: &ProfileArgs) -> Result<()> {
    if !args.labels.is_empty() && args.labels.len() != args.results.len() {
        bail!("{} labels for {} results tables", args.labels.len(), args.results.len());
    }
    let mut algos = Vec::with_capacity(args.results.len());
    for (k, path) in args.results.iter().enumerate() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let rows = report::parse_results_str(&text, path)?;
        let label = args.labels.get(k).cloned().unwrap_or_else(|| instance_id(path));
        algos.push(report::results_to_runs(&label, &rows)?);
    }
    let curves = io::performance_profile(&algos)?;
    emit(args.out.as_deref(), &io::format_profile(&curves))
}

/// Status an exit code stands for, as documented for `solve`.
pub fn status_exit_code(s: ReportStatus) -> i32 {
    match s {
        ReportStatus::Solved => EXIT_OK,
        ReportStatus::BestEffort | ReportStatus::TimeLimit => EXIT_UNSOLVED,
        ReportStatus::Error => EXIT_ERROR,
    }
}

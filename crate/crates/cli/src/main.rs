//! Command-line front end for the k-NN SAT solver portfolio.
//!
//! Machine-oriented output goes to stdout, diagnostics and progress go to
//! stderr. Exit codes are a stable contract for scripting: 0 for success or
//! an unknown answer, 10 for SAT, 20 for UNSAT, 1 for runtime failures, 2
//! for usage or input errors.

use clap::{Parser, Subcommand, ValueEnum};
use knnportfolio_core::dimacs::{parse_dimacs_file, ParsedCnf};
use knnportfolio_core::evaluator;
use knnportfolio_core::features::extract_features;
use knnportfolio_core::knowledge_base::{build_kb, load_kb, save_kb, KbBuild, KbError};
use knnportfolio_core::metrics::{DistanceKind, RuntimeOutcome};
use knnportfolio_core::runner::{
    portfolio_solve, Answer, RunnerError, SolveOptions, SolverManifest,
};
use knnportfolio_core::selector::select_solver;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "knnportfolio",
    version,
    about = "SAT solver portfolio: selects a solver per instance from its nearest training neighbors"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DistanceArg {
    Argosmart,
    Euclidean,
}

impl From<DistanceArg> for DistanceKind {
    fn from(arg: DistanceArg) -> Self {
        match arg {
            DistanceArg::Argosmart => DistanceKind::ArgoSmart,
            DistanceArg::Euclidean => DistanceKind::ScaledEuclidean,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the 29 syntactic features of a CNF instance
    Features {
        /// DIMACS CNF file
        cnf: PathBuf,
        /// Also report feature-extraction wall-clock seconds
        #[arg(long)]
        time: bool,
        /// Emit one CSV row (knowledge-base f01..f29 column order)
        #[arg(long)]
        machine: bool,
    },
    /// Build a knowledge base from a runtime table
    Train {
        /// Runtime table CSV: instance[,category][,f01..f29],<solver columns>
        #[arg(long)]
        table: PathBuf,
        /// Directory with CNF files, required when the table has no feature columns
        #[arg(long)]
        cnf_dir: Option<PathBuf>,
        /// Cutoff time in seconds used when the outcomes were recorded
        #[arg(long)]
        cutoff: f64,
        /// Output knowledge-base path
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick a solver for an instance (no solver is executed)
    Select {
        /// DIMACS CNF file
        cnf: PathBuf,
        /// Knowledge-base path
        #[arg(long)]
        kb: PathBuf,
        /// Number of neighbors
        #[arg(short, long, default_value_t = 9)]
        k: usize,
        /// Distance measure
        #[arg(long, value_enum, default_value = "argosmart")]
        distance: DistanceArg,
    },
    /// Select and run a solver on an instance
    Solve {
        /// DIMACS CNF file
        cnf: PathBuf,
        /// Knowledge-base path
        #[arg(long)]
        kb: PathBuf,
        /// Solver manifest (solver-id<TAB>argv template); defaults to <kb>.solvers
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Number of neighbors
        #[arg(short, long, default_value_t = 9)]
        k: usize,
        /// Distance measure
        #[arg(long, value_enum, default_value = "argosmart")]
        distance: DistanceArg,
        /// Try the next-ranked solver if an attempt fails (crashes)
        #[arg(long)]
        fallback: bool,
        /// Override the knowledge-base cutoff, in seconds
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Leave-one-out evaluation of selection policies over a knowledge base
    Evaluate {
        /// Knowledge-base path
        #[arg(long)]
        kb: PathBuf,
        /// Neighbor count evaluated when --k-range is not given
        #[arg(short, long, default_value_t = 9)]
        k: usize,
        /// Range of k values, e.g. `1..30`, `1-30`, or `1,5,9`
        #[arg(long)]
        k_range: Option<String>,
        /// Comma-separated distances, e.g. `argosmart,euclidean`
        #[arg(long)]
        distances: Option<String>,
        /// Write machine-readable policy rows to this CSV file
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the sweep table (distance,k,solved) to this CSV file
        #[arg(long)]
        sweep_csv: Option<PathBuf>,
        /// Parallelism degree for leave-one-out selections
        #[arg(long)]
        jobs: Option<usize>,
    },
}

enum Failure {
    /// Usage or input problems: exit code 2.
    Input(String),
    /// Runtime failures: exit code 1.
    Runtime(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        match self {
            Failure::Input(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            Failure::Runtime(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
        }
    }
}

impl From<KbError> for Failure {
    fn from(e: KbError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<knnportfolio_core::dimacs::DimacsError> for Failure {
    fn from(e: knnportfolio_core::dimacs::DimacsError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<RunnerError> for Failure {
    fn from(e: RunnerError) -> Self {
        match e {
            RunnerError::ExecutableNotFound { .. }
            | RunnerError::SpawnFailure { .. }
            | RunnerError::Supervision(_)
            | RunnerError::AllSolversFailed { .. }
            | RunnerError::Io(_) => Failure::Runtime(e.to_string()),
            RunnerError::Kb(inner) => Failure::Input(inner.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(failure) => failure.report(),
    }
}

fn run(command: Cmd) -> Result<ExitCode, Failure> {
    match command {
        Cmd::Features { cnf, time, machine } => cmd_features(&cnf, time, machine),
        Cmd::Train {
            table,
            cnf_dir,
            cutoff,
            out,
        } => cmd_train(&table, cnf_dir.as_deref(), cutoff, &out),
        Cmd::Select {
            cnf,
            kb,
            k,
            distance,
        } => cmd_select(&cnf, &kb, k, distance.into()),
        Cmd::Solve {
            cnf,
            kb,
            manifest,
            k,
            distance,
            fallback,
            cutoff,
        } => cmd_solve(&cnf, &kb, manifest.as_deref(), k, distance.into(), fallback, cutoff),
        Cmd::Evaluate {
            kb,
            k,
            k_range,
            distances,
            csv,
            sweep_csv,
            jobs,
        } => cmd_evaluate(
            &kb,
            k,
            k_range.as_deref(),
            distances.as_deref(),
            csv.as_deref(),
            sweep_csv.as_deref(),
            jobs,
        ),
    }
}

fn parse_cnf(path: &Path) -> Result<ParsedCnf, Failure> {
    let parsed = parse_dimacs_file(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    for warning in &parsed.warnings {
        eprintln!("warning: {}: {warning}", path.display());
    }
    Ok(parsed)
}

fn load_kb_reported(path: &Path) -> Result<KbBuild, Failure> {
    let build = load_kb(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    for warning in &build.warnings {
        eprintln!("warning: {}: {warning}", path.display());
    }
    Ok(build)
}

fn cmd_features(cnf: &Path, time: bool, machine: bool) -> Result<ExitCode, Failure> {
    let parsed = parse_cnf(cnf)?;
    let clock = Instant::now();
    let features = extract_features(&parsed.instance);
    let seconds = clock.elapsed().as_secs_f64();
    if machine {
        println!("{}", features.to_csv_row());
        if time {
            eprintln!("extraction_seconds\t{seconds}");
        }
    } else {
        print!("{}", features.to_listing());
        if time {
            println!("time\textraction_seconds\t{seconds}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(
    table: &Path,
    cnf_dir: Option<&Path>,
    cutoff: f64,
    out: &Path,
) -> Result<ExitCode, Failure> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Err(Failure::Input(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    let file = fs::File::open(table)
        .map_err(|e| Failure::Input(format!("{}: {e}", table.display())))?;
    let build = build_kb(file, cnf_dir, cutoff)?;
    let mut dropped = 0;
    for warning in &build.warnings {
        eprintln!("warning: {warning}");
        if matches!(
            warning,
            knnportfolio_core::knowledge_base::BuildWarning::DuplicateInstanceDropped { .. }
                | knnportfolio_core::knowledge_base::BuildWarning::UnsolvedInstanceDropped { .. }
        ) {
            dropped += 1;
        }
    }
    save_kb(&build.kb, out)?;
    eprintln!(
        "wrote {}: {} records, {} solvers, cutoff {}s ({} rows dropped)",
        out.display(),
        build.kb.records().len(),
        build.kb.solvers().len(),
        build.kb.cutoff_seconds(),
        dropped
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_select(cnf: &Path, kb: &Path, k: usize, kind: DistanceKind) -> Result<ExitCode, Failure> {
    let kb = load_kb_reported(kb)?.kb;
    let parsed = parse_cnf(cnf)?;
    let features = extract_features(&parsed.instance);
    let dist = kb.distance(kind)?;
    let result = select_solver(&kb, &features, k, &dist)?;

    eprintln!("neighbors (k={k}, distance={kind}):");
    for neighbor in &result.neighborhood {
        eprintln!("  {}\tdistance={}", neighbor.instance_id, neighbor.distance);
    }
    eprintln!("neighborhood PAR10:");
    for (solver, penalty) in &result.neighborhood_penalties {
        eprintln!("  {solver}\t{penalty}");
    }
    eprintln!(
        "tied on neighborhood: {}",
        result.tied_on_neighborhood.join(", ")
    );
    eprintln!(
        "global tiebreak used: {}",
        if result.global_tiebreak_used { "yes" } else { "no" }
    );
    eprintln!("final candidates: {}", result.final_candidates.join(", "));

    println!("{}", result.chosen_solver);
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(
    cnf: &Path,
    kb_path: &Path,
    manifest: Option<&Path>,
    k: usize,
    kind: DistanceKind,
    fallback: bool,
    cutoff: Option<f64>,
) -> Result<ExitCode, Failure> {
    let kb = load_kb_reported(kb_path)?.kb;
    let manifest_path = manifest
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{}.solvers", kb_path.display())));
    let manifest = SolverManifest::load(&manifest_path)
        .map_err(|e| Failure::Input(format!("{}: {e}", manifest_path.display())))?;
    let dist = kb.distance(kind)?;
    let opts = SolveOptions {
        k,
        fallback,
        cutoff_seconds: cutoff,
    };
    let report = portfolio_solve(&kb, &manifest, cnf, &dist, &opts)?;

    println!("instance: {}", report.instance);
    println!(
        "chosen solver: {} (k={k}, distance={kind})",
        report.selection.chosen_solver
    );
    println!("feature time: {:.4}s", report.feature_time_seconds);
    for (i, attempt) in report.attempts.iter().enumerate() {
        println!(
            "attempt {}: {} -> {} ({})",
            i + 1,
            attempt.solver,
            attempt.outcome,
            attempt.answer
        );
    }
    println!("answer: {}", report.answer());
    println!("total time: {:.4}s", report.total_time_seconds);

    let code = match report.answer() {
        Answer::Sat => ExitCode::from(10),
        Answer::Unsat => ExitCode::from(20),
        Answer::Unknown => {
            if report.outcome() == RuntimeOutcome::Failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
    };
    Ok(code)
}

fn parse_k_range(spec: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Input(format!("cannot parse k range `{spec}`"));
    let parse_num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let range = if let Some((lo, hi)) = spec.split_once("..") {
        (parse_num(lo)?..=parse_num(hi)?).collect()
    } else if let Some((lo, hi)) = spec.split_once('-') {
        (parse_num(lo)?..=parse_num(hi)?).collect()
    } else if spec.contains(',') {
        spec.split(',').map(parse_num).collect::<Result<Vec<_>, _>>()?
    } else {
        vec![parse_num(spec)?]
    };
    let ks: Vec<usize> = range;
    if ks.is_empty() || ks.contains(&0) {
        return Err(bad());
    }
    Ok(ks)
}

fn parse_distances(spec: &str) -> Result<Vec<DistanceKind>, Failure> {
    spec.split(',')
        .map(|name| {
            DistanceKind::parse(name.trim()).ok_or_else(|| {
                Failure::Input(format!(
                    "unknown distance `{name}` (expected argosmart or euclidean)"
                ))
            })
        })
        .collect()
}

fn cmd_evaluate(
    kb: &Path,
    k: usize,
    k_range: Option<&str>,
    distances: Option<&str>,
    csv: Option<&Path>,
    sweep_csv: Option<&Path>,
    jobs: Option<usize>,
) -> Result<ExitCode, Failure> {
    let kb = load_kb_reported(kb)?.kb;
    let ks = match k_range {
        Some(spec) => parse_k_range(spec)?,
        None => vec![k],
    };
    let kinds = match distances {
        Some(spec) => parse_distances(spec)?,
        None => vec![DistanceKind::ArgoSmart],
    };

    let report = match jobs {
        Some(jobs) if jobs > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            pool.install(|| evaluator::report(&kb, &ks, &kinds))?
        }
        _ => evaluator::report(&kb, &ks, &kinds)?,
    };

    print!("{}", report.render_text());
    if let Some(path) = csv {
        fs::write(path, report.to_csv())
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(path) = sweep_csv {
        fs::write(path, evaluator::sweep_csv(&report.sweep))
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

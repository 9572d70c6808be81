//! External solver invocation: spawn a solver on a CNF file, enforce the
//! cutoff, measure wall-clock time, and interpret the result.
//!
//! Children are started in their own process group. On timeout the whole
//! group receives SIGTERM, then SIGKILL after a short grace period, so no
//! descendant survives the cutoff. The supervisor blocks on the child (no
//! busy-waiting): a monitor thread drains stdout, reaps the child, and
//! reports through a channel the main thread waits on with a deadline.
//!
//! Result interpretation follows the SAT-competition convention: exit code
//! 10 means satisfiable, 20 unsatisfiable, and exit code 0 is accepted when
//! the output contains an `s SATISFIABLE` / `s UNSATISFIABLE` line. Anything
//! else counts as a failure.

use crate::dimacs::{parse_dimacs_file, DimacsError};
use crate::features::extract_features;
use crate::knowledge_base::{KbError, KnowledgeBase};
use crate::metrics::{Distance, RuntimeOutcome};
use crate::selector::{rank_solvers, select_solver, SelectionResult};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Grace period between SIGTERM and SIGKILL when enforcing the cutoff.
const KILL_GRACE: Duration = Duration::from_millis(500);
/// How long to wait for the monitor thread after SIGKILL.
const REAP_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("executable `{program}` not found")]
    ExecutableNotFound { program: String },
    #[error("failed to spawn `{program}`: {source}")]
    SpawnFailure {
        program: String,
        #[source]
        source: io::Error,
    },
    #[error("solver supervision failed: {0}")]
    Supervision(io::Error),
    #[error("empty solver command template")]
    EmptyCommand,
    #[error("manifest line {line}: expected `<solver-id><TAB><argv template>`")]
    MalformedManifestLine { line: usize },
    #[error("no command configured for solver `{solver}`")]
    NoCommand { solver: String },
    #[error("cutoff must be positive and finite, got {cutoff}")]
    InvalidCutoff { cutoff: f64 },
    #[error("all {attempted} solvers failed on `{instance}`")]
    AllSolversFailed { instance: String, attempted: usize },
    #[error(transparent)]
    Dimacs(#[from] DimacsError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// Answer reported by a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Sat,
    Unsat,
    Unknown,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Sat => "SAT",
            Answer::Unsat => "UNSAT",
            Answer::Unknown => "UNKNOWN",
        })
    }
}

/// An argv template for one solver. Each argument may contain the `{cnf}`
/// placeholder, replaced by the instance path at invocation time; if no
/// argument mentions it, the path is appended as the final argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverCommand {
    argv: Vec<String>,
}

impl SolverCommand {
    pub fn parse(template: &str) -> Result<Self, RunnerError> {
        let argv: Vec<String> = template.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() {
            return Err(RunnerError::EmptyCommand);
        }
        Ok(SolverCommand { argv })
    }

    pub fn program(&self) -> &str {
        &self.argv[0]
    }

    pub fn materialize(&self, cnf_path: &Path) -> Vec<String> {
        let cnf = cnf_path.display().to_string();
        let mut argv: Vec<String> = self
            .argv
            .iter()
            .map(|arg| arg.replace("{cnf}", &cnf))
            .collect();
        if !self.argv.iter().any(|arg| arg.contains("{cnf}")) {
            argv.push(cnf);
        }
        argv
    }
}

/// Solver-id to command mapping, stored as a sidecar of the knowledge base:
/// one `solver-id<TAB>argv template` line per solver, `#` comments allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolverManifest {
    commands: BTreeMap<String, SolverCommand>,
}

impl SolverManifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, RunnerError> {
        let mut commands = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (id, template) = line
                .split_once('\t')
                .ok_or(RunnerError::MalformedManifestLine { line: idx + 1 })?;
            if id.is_empty() {
                return Err(RunnerError::MalformedManifestLine { line: idx + 1 });
            }
            commands.insert(id.to_string(), SolverCommand::parse(template)?);
        }
        Ok(SolverManifest { commands })
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn get(&self, solver: &str) -> Option<&SolverCommand> {
        self.commands.get(solver)
    }

    pub fn insert(&mut self, solver: impl Into<String>, command: SolverCommand) {
        self.commands.insert(solver.into(), command);
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }
}

#[cfg(unix)]
fn signal_group(pid: u32, signal: i32) {
    // The child was made its own process-group leader, so signalling the
    // negative pid reaches every descendant.
    unsafe {
        libc::kill(-(pid as i32), signal);
    }
}

#[cfg(not(unix))]
fn signal_group(_pid: u32, _signal: i32) {}

#[cfg(unix)]
const SIGTERM: i32 = libc::SIGTERM;
#[cfg(unix)]
const SIGKILL: i32 = libc::SIGKILL;
#[cfg(not(unix))]
const SIGTERM: i32 = 15;
#[cfg(not(unix))]
const SIGKILL: i32 = 9;

type ChildReport = (io::Result<std::process::ExitStatus>, Answer, Duration);

/// Runs one solver on one CNF file under the cutoff.
///
/// Returns the runtime outcome (solved with wall-clock seconds, timeout, or
/// failed) and the reported answer. A child that outlives the cutoff is
/// terminated along with its process group.
pub fn run_solver(
    command: &SolverCommand,
    cnf_path: &Path,
    cutoff_seconds: f64,
) -> Result<(RuntimeOutcome, Answer), RunnerError> {
    if !cutoff_seconds.is_finite() || cutoff_seconds <= 0.0 {
        return Err(RunnerError::InvalidCutoff {
            cutoff: cutoff_seconds,
        });
    }
    let argv = command.materialize(cnf_path);
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }

    let started = Instant::now();
    let mut child = cmd.spawn().map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            RunnerError::ExecutableNotFound {
                program: argv[0].clone(),
            }
        } else {
            RunnerError::SpawnFailure {
                program: argv[0].clone(),
                source,
            }
        }
    })?;
    let pid = child.id();
    let stdout = child.stdout.take();

    let (tx, rx) = mpsc::channel::<ChildReport>();
    thread::spawn(move || {
        let mut answer = Answer::Unknown;
        if let Some(out) = stdout {
            // Drain stdout so the child never blocks on a full pipe, and
            // scan for the competition `s ...` answer line.
            let mut reader = BufReader::new(out);
            let mut buf = Vec::new();
            loop {
                buf.clear();
                match reader.read_until(b'\n', &mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(_) => {
                        let line = String::from_utf8_lossy(&buf);
                        match line.trim_end() {
                            "s SATISFIABLE" => answer = Answer::Sat,
                            "s UNSATISFIABLE" => answer = Answer::Unsat,
                            _ => {}
                        }
                    }
                }
            }
        }
        let status = child.wait();
        let elapsed = started.elapsed();
        let _ = tx.send((status, answer, elapsed));
    });

    let report = match rx.recv_timeout(Duration::from_secs_f64(cutoff_seconds)) {
        Ok(report) => report,
        Err(mpsc::RecvTimeoutError::Disconnected) => {
            return Err(RunnerError::Supervision(io::Error::other(
                "monitor thread terminated without reporting",
            )))
        }
        Err(mpsc::RecvTimeoutError::Timeout) => {
            signal_group(pid, SIGTERM);
            let report = match rx.recv_timeout(KILL_GRACE) {
                Ok(report) => Some(report),
                Err(_) => {
                    signal_group(pid, SIGKILL);
                    rx.recv_timeout(REAP_TIMEOUT).ok()
                }
            };
            let Some(report) = report else {
                // Could not collect the child in time; it has been SIGKILLed
                // and the monitor thread will reap it.
                return Ok((RuntimeOutcome::Timeout, Answer::Unknown));
            };
            report
        }
    };
    let (status, answer, elapsed) = report;
    let status = status.map_err(RunnerError::Supervision)?;
    let seconds = elapsed.as_secs_f64();
    if seconds > cutoff_seconds {
        return Ok((RuntimeOutcome::Timeout, Answer::Unknown));
    }
    let outcome = match status.code() {
        Some(10) => (RuntimeOutcome::Solved(seconds), Answer::Sat),
        Some(20) => (RuntimeOutcome::Solved(seconds), Answer::Unsat),
        Some(0) if answer != Answer::Unknown => (RuntimeOutcome::Solved(seconds), answer),
        _ => (RuntimeOutcome::Failed, Answer::Unknown),
    };
    Ok(outcome)
}

/// One solver invocation inside a portfolio run.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub solver: String,
    pub outcome: RuntimeOutcome,
    pub answer: Answer,
    pub wall_seconds: f64,
}

/// Outcome of an end-to-end portfolio run on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub instance: String,
    pub selection: SelectionResult,
    pub feature_time_seconds: f64,
    /// Invocations in execution order; the last one is the final result,
    /// everything before it is the fallback chain of failed attempts.
    pub attempts: Vec<Attempt>,
    /// Feature time plus the wall time of every attempt.
    pub total_time_seconds: f64,
}

impl SolveReport {
    pub fn final_attempt(&self) -> &Attempt {
        self.attempts.last().expect("at least one attempt")
    }

    pub fn outcome(&self) -> RuntimeOutcome {
        self.final_attempt().outcome
    }

    pub fn answer(&self) -> Answer {
        self.final_attempt().answer
    }

    pub fn fallback_chain(&self) -> &[Attempt] {
        &self.attempts[..self.attempts.len() - 1]
    }
}

/// Options for `portfolio_solve`.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub k: usize,
    /// Try the next-ranked solver when an attempt fails (crash, bad exit).
    /// A timeout never triggers fallback: the cutoff budget is spent.
    pub fallback: bool,
    /// Overrides the knowledge base cutoff when set.
    pub cutoff_seconds: Option<f64>,
}

/// End-to-end pipeline: parse, extract features (timed), select a solver,
/// and run it with the full cutoff. With fallback enabled, failed attempts
/// move on to the next solver in rank order, each with the full cutoff.
pub fn portfolio_solve(
    kb: &KnowledgeBase,
    manifest: &SolverManifest,
    cnf_path: &Path,
    dist: &Distance,
    opts: &SolveOptions,
) -> Result<SolveReport, RunnerError> {
    let cutoff = opts.cutoff_seconds.unwrap_or_else(|| kb.cutoff_seconds());
    let parsed = parse_dimacs_file(cnf_path)?;

    let feature_clock = Instant::now();
    let features = extract_features(&parsed.instance);
    let feature_time_seconds = feature_clock.elapsed().as_secs_f64();

    let selection = select_solver(kb, &features, opts.k, dist)?;
    let ranked = rank_solvers(kb, &features, opts.k, dist)?;
    debug_assert_eq!(ranked[0].0, selection.chosen_solver);

    let order: Vec<&str> = if opts.fallback {
        ranked.iter().map(|(id, _)| id.as_str()).collect()
    } else {
        vec![selection.chosen_solver.as_str()]
    };
    for solver in &order {
        if manifest.get(solver).is_none() {
            return Err(RunnerError::NoCommand {
                solver: solver.to_string(),
            });
        }
    }

    let mut attempts = Vec::new();
    for solver in &order {
        let command = manifest.get(solver).expect("checked above");
        let attempt_clock = Instant::now();
        let (outcome, answer) = match run_solver(command, cnf_path, cutoff) {
            Ok(pair) => pair,
            // A solver that cannot even start is treated like a crash so
            // that fallback can proceed.
            Err(RunnerError::ExecutableNotFound { .. }) | Err(RunnerError::SpawnFailure { .. }) => {
                (RuntimeOutcome::Failed, Answer::Unknown)
            }
            Err(other) => return Err(other),
        };
        attempts.push(Attempt {
            solver: solver.to_string(),
            outcome,
            answer,
            wall_seconds: attempt_clock.elapsed().as_secs_f64(),
        });
        if !matches!(outcome, RuntimeOutcome::Failed) {
            break;
        }
    }

    let everything_failed = attempts
        .iter()
        .all(|a| matches!(a.outcome, RuntimeOutcome::Failed));
    if opts.fallback && everything_failed && attempts.len() == order.len() {
        return Err(RunnerError::AllSolversFailed {
            instance: parsed.instance.source_path().to_string(),
            attempted: attempts.len(),
        });
    }

    let total_time_seconds =
        feature_time_seconds + attempts.iter().map(|a| a.wall_seconds).sum::<f64>();
    Ok(SolveReport {
        instance: parsed.instance.source_path().to_string(),
        selection,
        feature_time_seconds,
        attempts,
        total_time_seconds,
    })
}

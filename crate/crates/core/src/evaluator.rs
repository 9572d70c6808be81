//! Leave-one-out evaluation of selection policies over a knowledge base.
//!
//! No solver process is ever launched here: selections are simulated
//! against the recorded outcomes. For each record, the selector runs on the
//! knowledge base minus that record using the record's stored features, and
//! the simulated outcome is the record's stored outcome for the chosen
//! solver. Per-record evaluations are independent and run in parallel; the
//! reduction is deterministic regardless of scheduling.

use crate::knowledge_base::{KbError, KnowledgeBase};
use crate::metrics::{Distance, DistanceKind, RuntimeOutcome};
use crate::selector::select_excluding;
use rayon::prelude::*;
use std::fmt::Write as _;

/// One simulated selection from the leave-one-out procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct LooSelection {
    pub instance_id: String,
    pub chosen_solver: String,
    /// The held-out record's stored outcome for the chosen solver.
    pub outcome: RuntimeOutcome,
}

/// Runs the leave-one-out procedure: every record is selected-for using the
/// rest of the training set. Requires at least k+1 records.
pub fn leave_one_out(
    kb: &KnowledgeBase,
    k: usize,
    dist: &Distance,
) -> Result<Vec<LooSelection>, KbError> {
    let n = kb.records().len();
    if n == 0 {
        return Err(KbError::EmptyKnowledgeBase);
    }
    if k == 0 || k + 1 > n {
        return Err(KbError::KTooLarge {
            k,
            available: n.saturating_sub(1),
        });
    }
    (0..n)
        .into_par_iter()
        .map(|held_out| {
            let record = &kb.records()[held_out];
            let selection = select_excluding(kb, record.features(), k, dist, Some(held_out))?;
            let solver_idx = kb
                .solver_index(&selection.chosen_solver)
                .expect("selector only returns knowledge-base solvers");
            Ok(LooSelection {
                instance_id: record.instance_id().to_string(),
                chosen_solver: selection.chosen_solver,
                outcome: record.outcome(solver_idx),
            })
        })
        .collect()
}

/// One cell of a k/distance sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub distance: DistanceKind,
    pub k: usize,
    pub solved: usize,
}

/// Leave-one-out solved counts for every (distance, k) combination.
pub fn sweep(
    kb: &KnowledgeBase,
    ks: &[usize],
    kinds: &[DistanceKind],
) -> Result<Vec<SweepPoint>, KbError> {
    let mut points = Vec::with_capacity(ks.len() * kinds.len());
    for &kind in kinds {
        let dist = kb.distance(kind)?;
        for &k in ks {
            let solved = leave_one_out(kb, k, &dist)?
                .iter()
                .filter(|s| s.outcome.is_solved())
                .count();
            points.push(SweepPoint {
                distance: kind,
                k,
                solved,
            });
        }
    }
    Ok(points)
}

/// CSV rendering of a sweep, columns `distance,k,solved`.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("distance,k,solved\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.distance, p.k, p.solved);
    }
    out
}

/// Per-instance pick of the virtual best solver.
#[derive(Debug, Clone, PartialEq)]
pub struct VbsEntry {
    pub instance_id: String,
    pub solver: String,
    pub seconds: f64,
}

/// The virtual best solver: for each instance, the fastest recorded solved
/// outcome. Every retained record has one by construction.
pub fn vbs(kb: &KnowledgeBase) -> Result<Vec<VbsEntry>, KbError> {
    if kb.is_empty() {
        return Err(KbError::EmptyKnowledgeBase);
    }
    Ok(kb
        .records()
        .iter()
        .map(|record| {
            let (solver_idx, seconds) = record
                .outcomes()
                .iter()
                .enumerate()
                .filter_map(|(i, o)| o.solved_seconds().map(|s| (i, s)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| {
                    kb.solvers()[a.0].cmp(&kb.solvers()[b.0])
                }))
                .expect("knowledge-base invariant: every record is solved by some solver");
            VbsEntry {
                instance_id: record.instance_id().to_string(),
                solver: kb.solvers()[solver_idx].clone(),
                seconds,
            }
        })
        .collect())
}

/// Median solving time of a policy. Unsolved instances rank above the
/// cutoff, so when the median position lands on one the value is reported
/// as "beyond the cutoff" rather than a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MedianTime {
    Seconds(f64),
    ExceedsCutoff,
}

impl MedianTime {
    pub fn render(&self, cutoff: f64) -> String {
        match self {
            MedianTime::Seconds(s) => format!("{s:.1}s"),
            MedianTime::ExceedsCutoff => format!(">{cutoff}s"),
        }
    }

    pub fn render_csv(&self, cutoff: f64) -> String {
        match self {
            MedianTime::Seconds(s) => format!("{s}"),
            MedianTime::ExceedsCutoff => format!(">{cutoff}"),
        }
    }
}

fn median_time(times: &[Option<f64>]) -> MedianTime {
    let mut sorted: Vec<Option<f64>> = times.to_vec();
    // Solved times ascending, unsolved (+infinity for ordering) last.
    sorted.sort_by(|a, b| match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let n = sorted.len();
    if n % 2 == 1 {
        match sorted[n / 2] {
            Some(s) => MedianTime::Seconds(s),
            None => MedianTime::ExceedsCutoff,
        }
    } else {
        match (sorted[n / 2 - 1], sorted[n / 2]) {
            (Some(a), Some(b)) => MedianTime::Seconds((a + b) / 2.0),
            _ => MedianTime::ExceedsCutoff,
        }
    }
}

/// Aggregate line of the evaluation report for one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRow {
    pub name: String,
    pub solved_total: usize,
    /// Indexed by `Category::index()`.
    pub solved_by_category: [usize; 4],
    pub median: MedianTime,
    pub par10_total: f64,
}

fn policy_row(kb: &KnowledgeBase, name: String, times: &[Option<f64>]) -> PolicyRow {
    debug_assert_eq!(times.len(), kb.records().len());
    let mut solved_by_category = [0usize; 4];
    let mut par10_total = 0.0;
    let mut solved_total = 0;
    for (record, time) in kb.records().iter().zip(times.iter()) {
        match time {
            Some(s) => {
                solved_total += 1;
                solved_by_category[record.category().index()] += 1;
                par10_total += s;
            }
            None => {
                par10_total += 10.0 * kb.cutoff_seconds();
            }
        }
    }
    PolicyRow {
        name,
        solved_total,
        solved_by_category,
        median: median_time(times),
        par10_total,
    }
}

/// The full evaluation report: one row per policy (each requested
/// (distance, k) pair and each single solver), the virtual best solver row,
/// and the sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub cutoff_seconds: f64,
    pub rows: Vec<PolicyRow>,
    pub vbs: PolicyRow,
    pub sweep: Vec<SweepPoint>,
}

/// Evaluates k-NN policies (for every requested distance and k), every
/// single solver, and the virtual best solver.
pub fn report(
    kb: &KnowledgeBase,
    ks: &[usize],
    kinds: &[DistanceKind],
) -> Result<EvalReport, KbError> {
    if kb.is_empty() {
        return Err(KbError::EmptyKnowledgeBase);
    }
    let mut rows = Vec::new();
    let mut sweep_points = Vec::new();
    for &kind in kinds {
        let dist = kb.distance(kind)?;
        for &k in ks {
            let loo = leave_one_out(kb, k, &dist)?;
            let times: Vec<Option<f64>> = loo.iter().map(|s| s.outcome.solved_seconds()).collect();
            sweep_points.push(SweepPoint {
                distance: kind,
                k,
                solved: times.iter().filter(|t| t.is_some()).count(),
            });
            rows.push(policy_row(kb, format!("knn-{kind}-k{k}"), &times));
        }
    }
    for (solver_idx, solver) in kb.solvers().iter().enumerate() {
        let times: Vec<Option<f64>> = kb
            .records()
            .iter()
            .map(|r| r.outcome(solver_idx).solved_seconds())
            .collect();
        rows.push(policy_row(kb, solver.clone(), &times));
    }
    let vbs_times: Vec<Option<f64>> = vbs(kb)?.iter().map(|e| Some(e.seconds)).collect();
    let vbs_row = policy_row(kb, "vbs".to_string(), &vbs_times);

    Ok(EvalReport {
        cutoff_seconds: kb.cutoff_seconds(),
        rows,
        vbs: vbs_row,
        sweep: sweep_points,
    })
}

impl EvalReport {
    /// Plain-text table, one row per policy plus the virtual best solver.
    pub fn render_text(&self) -> String {
        let name_width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain([3])
            .max()
            .unwrap()
            .max(6);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>6}  {:>6}  {:>7}  {:>10}  {:>7}  {:>10}  {:>12}",
            "policy", "solved", "random", "crafted", "industrial", "unknown", "median", "par10"
        );
        for row in self.rows.iter().chain([&self.vbs]) {
            let _ = writeln!(
                out,
                "{:<name_width$}  {:>6}  {:>6}  {:>7}  {:>10}  {:>7}  {:>10}  {:>12.1}",
                row.name,
                row.solved_total,
                row.solved_by_category[0],
                row.solved_by_category[1],
                row.solved_by_category[2],
                row.solved_by_category[3],
                row.median.render(self.cutoff_seconds),
                row.par10_total,
            );
        }
        out
    }

    /// Machine-readable rows, one line per policy, virtual best solver last.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "policy,solved_total,solved_random,solved_crafted,solved_industrial,solved_unknown,median_seconds,par10_total\n",
        );
        for row in self.rows.iter().chain([&self.vbs]) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.name,
                row.solved_total,
                row.solved_by_category[0],
                row.solved_by_category[1],
                row.solved_by_category[2],
                row.solved_by_category[3],
                row.median.render_csv(self.cutoff_seconds),
                row.par10_total,
            );
        }
        out
    }
}

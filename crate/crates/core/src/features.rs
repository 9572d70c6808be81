//! Syntactic feature extraction for CNF instances.
//!
//! The 29 features describe problem size, variable-clause graph degrees,
//! polarity balance, and proximity to a Horn formula. All of them are
//! computable in a small number of linear passes over the clause list, which
//! keeps extraction cheap even on large competition instances.
//!
//! Indexing follows a fixed 1-based layout:
//!
//! * 1-3: clause count, variable count, variables-per-clause ratio
//! * 4-8: variable node degree statistics (mean, variation coefficient,
//!   min, max, entropy)
//! * 9-13: clause node degree statistics (same five)
//! * 14-16: per-clause positive-literal ratio (mean, variation coefficient,
//!   entropy)
//! * 17-21: per-variable positive-occurrence ratio (all five)
//! * 22-23: fraction of binary and of ternary clauses
//! * 24: fraction of Horn clauses
//! * 25-29: per-variable occurrence count within Horn clauses (all five)
//!
//! Degrees count literal occurrences, so a variable appearing twice in one
//! clause contributes two. Entropy is Shannon entropy in nats: over the
//! distinct values for integer-valued samples (degrees, Horn occurrence
//! counts), and over 100 equal-width bins on [0,1] for ratio-valued samples.
//! The variation coefficient divides the population standard deviation by
//! the mean, with 0/0 defined as 0.

use crate::dimacs::CnfInstance;
use std::fmt::Write as _;
use thiserror::Error;

pub const NUM_FEATURES: usize = 29;

/// Bin count used for entropy of ratio-valued samples on [0,1].
pub const RATIO_ENTROPY_BINS: usize = 100;

/// Short machine-friendly names, index-aligned with `FeatureVector`.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "num_clauses",
    "num_vars",
    "vars_per_clause",
    "var_degree_mean",
    "var_degree_vc",
    "var_degree_min",
    "var_degree_max",
    "var_degree_entropy",
    "clause_degree_mean",
    "clause_degree_vc",
    "clause_degree_min",
    "clause_degree_max",
    "clause_degree_entropy",
    "clause_pos_ratio_mean",
    "clause_pos_ratio_vc",
    "clause_pos_ratio_entropy",
    "var_pos_ratio_mean",
    "var_pos_ratio_vc",
    "var_pos_ratio_min",
    "var_pos_ratio_max",
    "var_pos_ratio_entropy",
    "binary_clause_fraction",
    "ternary_clause_fraction",
    "horn_clause_fraction",
    "horn_var_occ_mean",
    "horn_var_occ_vc",
    "horn_var_occ_min",
    "horn_var_occ_max",
    "horn_var_occ_entropy",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("cannot summarize an empty sample set")]
    EmptySampleSet,
    #[error("feature {index} is not finite")]
    NonFinite { index: usize },
    #[error("feature {index} is negative ({value})")]
    Negative { index: usize, value: f64 },
    #[error("feature {index} out of expected range: {reason}")]
    RangeViolation { index: usize, reason: String },
}

/// A 29-value feature vector. All values are finite and non-negative.
///
/// Validation also checks the structural relations between features
/// (fractions within [0,1], min <= mean <= max for each statistics block)
/// with a small slack of 1e-9 so that well-formed vectors perturbed by
/// floating-point rounding are not rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    values: [f64; NUM_FEATURES],
}

const RANGE_SLACK: f64 = 1e-9;

impl FeatureVector {
    pub fn new(values: [f64; NUM_FEATURES]) -> Result<Self, FeatureError> {
        for (i, &v) in values.iter().enumerate() {
            let index = i + 1;
            if !v.is_finite() {
                return Err(FeatureError::NonFinite { index });
            }
            if v < 0.0 {
                return Err(FeatureError::Negative { index, value: v });
            }
        }
        for index in [14, 17, 22, 23, 24] {
            let v = values[index - 1];
            if v > 1.0 + RANGE_SLACK {
                return Err(FeatureError::RangeViolation {
                    index,
                    reason: format!("{v} exceeds 1"),
                });
            }
        }
        // (min, mean, max) index triples of the checked statistics blocks.
        for (min_i, mean_i, max_i) in [(6, 4, 7), (11, 9, 12), (27, 25, 28)] {
            let (lo, mid, hi) = (values[min_i - 1], values[mean_i - 1], values[max_i - 1]);
            if mid < lo - RANGE_SLACK || mid > hi + RANGE_SLACK || lo > hi + RANGE_SLACK {
                return Err(FeatureError::RangeViolation {
                    index: mean_i,
                    reason: format!("min/mean/max ordering violated: {lo}/{mid}/{hi}"),
                });
            }
        }
        Ok(FeatureVector { values })
    }

    pub fn values(&self) -> &[f64; NUM_FEATURES] {
        &self.values
    }

    /// Value by 1-based feature index.
    pub fn value(&self, index: usize) -> f64 {
        assert!((1..=NUM_FEATURES).contains(&index), "feature index {index}");
        self.values[index - 1]
    }

    /// One `index<TAB>name<TAB>value` line per feature, values printed as
    /// shortest round-trip decimals.
    pub fn to_listing(&self) -> String {
        let mut out = String::new();
        for (i, (name, v)) in FEATURE_NAMES.iter().zip(self.values.iter()).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}", i + 1, name, v);
        }
        out
    }

    /// Comma-separated values in knowledge-base column order (f01..f29).
    pub fn to_csv_row(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out
    }
}

/// Five-number summary used by the statistics feature blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSummary {
    pub mean: f64,
    /// Population standard deviation divided by the mean; 0 when the mean
    /// is 0.
    pub variation_coefficient: f64,
    pub min: f64,
    pub max: f64,
    /// Shannon entropy in nats; see `Entropy` for the grouping rule.
    pub entropy: f64,
}

/// How `summarize` groups samples for the entropy term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entropy {
    /// Empirical distribution over distinct sample values; suitable for
    /// integer-valued samples such as degrees and occurrence counts.
    Distinct,
    /// Equal-width bins over [0,1]; suitable for ratio-valued samples.
    Binned { bins: usize },
}

/// Summarizes a nonempty sample set.
///
/// Samples are sorted internally before accumulation, so the result depends
/// only on the multiset of values, never on their order.
pub fn summarize(samples: &[f64], entropy: Entropy) -> Result<StatSummary, FeatureError> {
    if samples.is_empty() {
        return Err(FeatureError::EmptySampleSet);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(summarize_sorted(&sorted, entropy))
}

fn summarize_sorted(sorted: &[f64], entropy: Entropy) -> StatSummary {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let variance = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let stddev = variance.sqrt();
    let variation_coefficient = if mean == 0.0 { 0.0 } else { stddev / mean };
    let entropy = match entropy {
        Entropy::Distinct => entropy_distinct(sorted),
        Entropy::Binned { bins } => entropy_binned(sorted, bins),
    };
    StatSummary {
        mean,
        variation_coefficient,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        entropy,
    }
}

fn entropy_from_counts(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    let n = total as f64;
    let mut h = 0.0;
    for count in counts {
        if count > 0 {
            let p = count as f64 / n;
            h -= p * p.ln();
        }
    }
    if h == 0.0 {
        0.0
    } else {
        h
    }
}

fn entropy_distinct(sorted: &[f64]) -> f64 {
    let mut counts = Vec::new();
    let mut run = 1usize;
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            run += 1;
        } else {
            counts.push(run);
            run = 1;
        }
    }
    counts.push(run);
    entropy_from_counts(counts.into_iter(), sorted.len())
}

fn entropy_binned(sorted: &[f64], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for &x in sorted {
        let idx = ((x * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    entropy_from_counts(counts.into_iter(), sorted.len())
}

/// Computes the 29-value feature vector of a CNF instance.
///
/// Pure function; runs in time linear in the total literal count plus the
/// sorts inside `summarize`.
pub fn extract_features(instance: &CnfInstance) -> FeatureVector {
    let num_vars = instance.num_vars();
    let clauses = instance.clauses();
    let num_clauses = clauses.len();

    let mut pos_occ = vec![0u64; num_vars + 1];
    let mut neg_occ = vec![0u64; num_vars + 1];
    let mut horn_occ = vec![0u64; num_vars + 1];
    let mut clause_lens = Vec::with_capacity(num_clauses);
    let mut clause_pos_ratio = Vec::with_capacity(num_clauses);
    let mut binary = 0usize;
    let mut ternary = 0usize;
    let mut horn = 0usize;

    for clause in clauses {
        let len = clause.len();
        let mut pos_in_clause = 0u64;
        for &lit in clause {
            let var = lit.unsigned_abs() as usize;
            if lit > 0 {
                pos_in_clause += 1;
                pos_occ[var] += 1;
            } else {
                neg_occ[var] += 1;
            }
        }
        clause_lens.push(len as f64);
        clause_pos_ratio.push(pos_in_clause as f64 / len as f64);
        match len {
            2 => binary += 1,
            3 => ternary += 1,
            _ => {}
        }
        if pos_in_clause <= 1 {
            horn += 1;
            for &lit in clause {
                horn_occ[lit.unsigned_abs() as usize] += 1;
            }
        }
    }

    let mut var_degrees = Vec::with_capacity(num_vars);
    let mut var_pos_ratio = Vec::with_capacity(num_vars);
    let mut horn_counts = Vec::with_capacity(num_vars);
    for var in 1..=num_vars {
        let occ = pos_occ[var] + neg_occ[var];
        var_degrees.push(occ as f64);
        // Unused declared variables contribute a 0/0 ratio, defined as 0.
        var_pos_ratio.push(if occ == 0 {
            0.0
        } else {
            pos_occ[var] as f64 / occ as f64
        });
        horn_counts.push(horn_occ[var] as f64);
    }

    let binned = Entropy::Binned {
        bins: RATIO_ENTROPY_BINS,
    };
    let var_deg = summarize(&var_degrees, Entropy::Distinct).expect("num_vars >= 1");
    let clause_deg = summarize(&clause_lens, Entropy::Distinct).expect("clause count >= 1");
    let clause_ratio = summarize(&clause_pos_ratio, binned).expect("clause count >= 1");
    let var_ratio = summarize(&var_pos_ratio, binned).expect("num_vars >= 1");
    let horn_var = summarize(&horn_counts, Entropy::Distinct).expect("num_vars >= 1");

    let c = num_clauses as f64;
    let values = [
        c,
        num_vars as f64,
        num_vars as f64 / c,
        var_deg.mean,
        var_deg.variation_coefficient,
        var_deg.min,
        var_deg.max,
        var_deg.entropy,
        clause_deg.mean,
        clause_deg.variation_coefficient,
        clause_deg.min,
        clause_deg.max,
        clause_deg.entropy,
        clause_ratio.mean,
        clause_ratio.variation_coefficient,
        clause_ratio.entropy,
        var_ratio.mean,
        var_ratio.variation_coefficient,
        var_ratio.min,
        var_ratio.max,
        var_ratio.entropy,
        binary as f64 / c,
        ternary as f64 / c,
        horn as f64 / c,
        horn_var.mean,
        horn_var.variation_coefficient,
        horn_var.min,
        horn_var.max,
        horn_var.entropy,
    ];
    FeatureVector::new(values).expect("extracted features satisfy the vector invariants")
}

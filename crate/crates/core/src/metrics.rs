//! Runtime outcomes, PAR10 penalties, and feature-space distances.

use crate::features::{FeatureVector, NUM_FEATURES};
use std::fmt;
use thiserror::Error;

/// Result of running one solver on one instance, relative to a cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuntimeOutcome {
    /// Solved within the cutoff; carries the wall-clock seconds.
    Solved(f64),
    /// Still running at the cutoff.
    Timeout,
    /// Crashed, ran out of memory, or otherwise produced no answer.
    Failed,
}

impl RuntimeOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, RuntimeOutcome::Solved(_))
    }

    pub fn solved_seconds(&self) -> Option<f64> {
        match self {
            RuntimeOutcome::Solved(s) => Some(*s),
            _ => None,
        }
    }
}

impl fmt::Display for RuntimeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeOutcome::Solved(s) => write!(f, "solved in {s}s"),
            RuntimeOutcome::Timeout => write!(f, "timeout"),
            RuntimeOutcome::Failed => write!(f, "failed"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("solved time {seconds}s exceeds cutoff {cutoff}s")]
    SolvedTimeExceedsCutoff { seconds: f64, cutoff: f64 },
    #[error("solved time {seconds}s is negative")]
    NegativeTime { seconds: f64 },
    #[error("cutoff must be positive, got {cutoff}")]
    InvalidCutoff { cutoff: f64 },
    #[error("cannot derive scaling bounds from an empty training set")]
    EmptyTrainingSet,
}

/// PAR10 penalty of a single outcome: the solving time when solved, ten
/// times the cutoff otherwise. A crash is penalized like a timeout.
pub fn par10(outcome: RuntimeOutcome, cutoff: f64) -> Result<f64, MetricsError> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Err(MetricsError::InvalidCutoff { cutoff });
    }
    match outcome {
        RuntimeOutcome::Solved(seconds) => {
            if seconds < 0.0 {
                Err(MetricsError::NegativeTime { seconds })
            } else if seconds > cutoff {
                Err(MetricsError::SolvedTimeExceedsCutoff { seconds, cutoff })
            } else {
                Ok(seconds)
            }
        }
        RuntimeOutcome::Timeout | RuntimeOutcome::Failed => Ok(10.0 * cutoff),
    }
}

/// Sum of PAR10 penalties over a set of outcomes; the empty set sums to 0.
pub fn par10_set<'a, I>(outcomes: I, cutoff: f64) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = &'a RuntimeOutcome>,
{
    let mut total = 0.0;
    for &outcome in outcomes {
        total += par10(outcome, cutoff)?;
    }
    Ok(total)
}

/// Which distance to use; `Distance` is the materialized form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    ArgoSmart,
    ScaledEuclidean,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 2] = [DistanceKind::ArgoSmart, DistanceKind::ScaledEuclidean];

    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::ArgoSmart => "argosmart",
            DistanceKind::ScaledEuclidean => "euclidean",
        }
    }

    pub fn parse(s: &str) -> Option<DistanceKind> {
        match s {
            "argosmart" => Some(DistanceKind::ArgoSmart),
            "euclidean" => Some(DistanceKind::ScaledEuclidean),
            _ => None,
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-feature (min, max) ranges taken from a training set, used to map
/// features onto [0,1] for the scaled Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingBounds {
    bounds: [(f64, f64); NUM_FEATURES],
}

impl ScalingBounds {
    pub fn from_vectors<'a, I>(vectors: I) -> Result<Self, MetricsError>
    where
        I: IntoIterator<Item = &'a FeatureVector>,
    {
        let mut iter = vectors.into_iter();
        let first = iter.next().ok_or(MetricsError::EmptyTrainingSet)?;
        let mut bounds = first.values().map(|v| (v, v));
        for fv in iter {
            for (slot, &v) in bounds.iter_mut().zip(fv.values().iter()) {
                slot.0 = slot.0.min(v);
                slot.1 = slot.1.max(v);
            }
        }
        Ok(ScalingBounds { bounds })
    }

    pub fn bounds(&self) -> &[(f64, f64); NUM_FEATURES] {
        &self.bounds
    }

    /// Maps a vector coordinate-wise onto [0,1]. Values outside the training
    /// range clamp to the interval edge; constant features map to 0.
    pub fn scale(&self, fv: &FeatureVector) -> [f64; NUM_FEATURES] {
        let mut out = [0.0; NUM_FEATURES];
        for (o, (&v, &(lo, hi))) in out
            .iter_mut()
            .zip(fv.values().iter().zip(self.bounds.iter()))
        {
            *o = if hi > lo {
                ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
        out
    }
}

/// A materialized distance measure between feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Distance {
    /// Sum over coordinates of |x-y| / (sqrt(x*y) + 1). Not a metric (no
    /// triangle inequality is claimed), but symmetric, non-negative, and
    /// zero exactly on equal vectors. Needs no scaling.
    ArgoSmart,
    /// Euclidean distance after mapping each feature onto [0,1] using
    /// training-set bounds.
    ScaledEuclidean(Box<ScalingBounds>),
}

impl Distance {
    pub fn kind(&self) -> DistanceKind {
        match self {
            Distance::ArgoSmart => DistanceKind::ArgoSmart,
            Distance::ScaledEuclidean(_) => DistanceKind::ScaledEuclidean,
        }
    }

    pub fn between(&self, x: &FeatureVector, y: &FeatureVector) -> f64 {
        match self {
            Distance::ArgoSmart => argosmart_distance(x, y),
            Distance::ScaledEuclidean(bounds) => scaled_euclidean_distance(x, y, bounds),
        }
    }
}

/// The occurrence-weighted distance: sum of |x_i - y_i| / (sqrt(x_i y_i) + 1).
///
/// Non-negative coordinates are guaranteed by the `FeatureVector` invariant,
/// so the square root is always defined.
pub fn argosmart_distance(x: &FeatureVector, y: &FeatureVector) -> f64 {
    x.values()
        .iter()
        .zip(y.values().iter())
        .map(|(&a, &b)| (a - b).abs() / ((a * b).sqrt() + 1.0))
        .sum()
}

/// Euclidean distance of the two vectors after coordinate scaling.
pub fn scaled_euclidean_distance(
    x: &FeatureVector,
    y: &FeatureVector,
    bounds: &ScalingBounds,
) -> f64 {
    let sx = bounds.scale(x);
    let sy = bounds.scale(y);
    sx.iter()
        .zip(sy.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

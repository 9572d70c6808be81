//! The knowledge base: feature vectors, per-solver runtime outcomes, and
//! category tags for a training set, persisted as a versioned CSV file.
//!
//! # File format (v1)
//!
//! ```text
//! #knnportfolio-kb v1 cutoff=1500
//! instance,category,f01,...,f29,<solver-1>,...,<solver-N>
//! <id>,<random|crafted|industrial|unknown>,<29 floats>,<outcome per solver>
//! ...
//! #sha256=<hex digest of all preceding bytes>
//! ```
//!
//! Outcomes are decimal seconds for a solved run, `T` for a timeout, and `F`
//! for a failure. Floats are written as shortest round-trip decimals, so
//! save followed by load is lossless and bit-exact, and identical knowledge
//! bases serialize to identical bytes. The trailing checksum line is
//! verified when present; hand-written files may omit it.
//!
//! Two rules from the training methodology are applied whenever records are
//! ingested: instances solved by no solver are dropped, and a repeated
//! instance id keeps only its first occurrence. Both produce warnings
//! rather than errors. Records are kept sorted by instance id.

use crate::dimacs::{parse_dimacs_file, DimacsError};
use crate::features::{extract_features, FeatureError, FeatureVector, NUM_FEATURES};
use crate::metrics::{par10, Distance, DistanceKind, MetricsError, RuntimeOutcome, ScalingBounds};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::Path;
use thiserror::Error;

const KB_MAGIC: &str = "#knnportfolio-kb";
const KB_VERSION: &str = "v1";
const CHECKSUM_PREFIX: &str = "#sha256=";

#[derive(Debug, Error)]
pub enum KbError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a v1 knowledge base (first line: `{found}`)")]
    FormatVersionMismatch { found: String },
    #[error("checksum mismatch: file content does not match its #sha256 line")]
    ChecksumMismatch,
    #[error("schema error at line {line}: {reason}")]
    SchemaError { line: usize, reason: String },
    #[error("malformed row at table line {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("table line {row}: instance `{instance}` has neither feature columns nor a CNF file")]
    MissingCnfAndFeatures { row: usize, instance: String },
    #[error("failed to parse CNF for instance `{instance}`: {source}")]
    Dimacs {
        instance: String,
        #[source]
        source: DimacsError,
    },
    #[error("cutoff must be positive and finite, got {cutoff}")]
    InvalidCutoff { cutoff: f64 },
    #[error("invalid solver id `{id}`: {reason}")]
    InvalidSolverId { id: String, reason: String },
    #[error("duplicate solver id `{id}`")]
    DuplicateSolverId { id: String },
    #[error("invalid instance id `{id}`: {reason}")]
    InvalidInstanceId { id: String, reason: String },
    #[error("record `{instance}` has {actual} outcomes for {expected} solvers")]
    MisalignedRecord {
        instance: String,
        expected: usize,
        actual: usize,
    },
    #[error("record `{instance}`, solver `{solver}`: solved time {seconds}s exceeds cutoff {cutoff}s")]
    SolvedTimeExceedsCutoff {
        instance: String,
        solver: String,
        seconds: f64,
        cutoff: f64,
    },
    #[error("k must be between 1 and {available}, got {k}")]
    KTooLarge { k: usize, available: usize },
    #[error("knowledge base has no records")]
    EmptyKnowledgeBase,
    #[error("no outcome recorded for solver `{solver}`")]
    MissingOutcome { solver: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Non-fatal issues encountered while assembling a knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub enum BuildWarning {
    DuplicateInstanceDropped { instance_id: String },
    UnsolvedInstanceDropped { instance_id: String },
    /// A solved time above the cutoff was recorded as a timeout.
    SolvedTimeTreatedAsTimeout {
        instance_id: String,
        solver: String,
        seconds: f64,
    },
}

impl fmt::Display for BuildWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildWarning::DuplicateInstanceDropped { instance_id } => {
                write!(f, "dropped `{instance_id}`: duplicate instance id")
            }
            BuildWarning::UnsolvedInstanceDropped { instance_id } => {
                write!(f, "dropped `{instance_id}`: not solved by any solver")
            }
            BuildWarning::SolvedTimeTreatedAsTimeout {
                instance_id,
                solver,
                seconds,
            } => write!(
                f,
                "`{instance_id}`/{solver}: time {seconds}s exceeds the cutoff, recorded as timeout"
            ),
        }
    }
}

/// Instance category tag, following the usual competition split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Random,
    Crafted,
    Industrial,
    Unknown,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Random,
        Category::Crafted,
        Category::Industrial,
        Category::Unknown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Random => "random",
            Category::Crafted => "crafted",
            Category::Industrial => "industrial",
            Category::Unknown => "unknown",
        }
    }

    /// Position within `Category::ALL`, handy for per-category counters.
    pub fn index(&self) -> usize {
        match self {
            Category::Random => 0,
            Category::Crafted => 1,
            Category::Industrial => 2,
            Category::Unknown => 3,
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Some(Category::Random),
            "crafted" => Some(Category::Crafted),
            "industrial" => Some(Category::Industrial),
            "unknown" => Some(Category::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One training instance: its features and one outcome per solver, aligned
/// with the owning knowledge base's solver order.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    instance_id: String,
    category: Category,
    features: FeatureVector,
    outcomes: Vec<RuntimeOutcome>,
}

impl InstanceRecord {
    pub fn new(
        instance_id: impl Into<String>,
        category: Category,
        features: FeatureVector,
        outcomes: Vec<RuntimeOutcome>,
    ) -> Self {
        InstanceRecord {
            instance_id: instance_id.into(),
            category,
            features,
            outcomes,
        }
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn features(&self) -> &FeatureVector {
        &self.features
    }

    pub fn outcomes(&self) -> &[RuntimeOutcome] {
        &self.outcomes
    }

    pub fn outcome(&self, solver_idx: usize) -> RuntimeOutcome {
        self.outcomes[solver_idx]
    }

    pub fn is_solved_by_any(&self) -> bool {
        self.outcomes.iter().any(RuntimeOutcome::is_solved)
    }
}

/// A neighbor reference produced by `nearest_neighbors`: record index plus
/// its distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// The training set. Immutable after construction; concurrent readers need
/// no synchronization.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    cutoff_seconds: f64,
    solvers: Vec<String>,
    records: Vec<InstanceRecord>,
}

/// A knowledge base plus the warnings produced while assembling it.
#[derive(Debug)]
pub struct KbBuild {
    pub kb: KnowledgeBase,
    pub warnings: Vec<BuildWarning>,
}

fn validate_solver_id(id: &str) -> Result<(), KbError> {
    let invalid = |reason: &str| KbError::InvalidSolverId {
        id: id.to_string(),
        reason: reason.to_string(),
    };
    if id.is_empty() {
        return Err(invalid("empty"));
    }
    if id.starts_with('#') {
        return Err(invalid("may not start with `#`"));
    }
    if id.contains([',', '\t', '\n', '\r']) {
        return Err(invalid("may not contain commas, tabs, or line breaks"));
    }
    Ok(())
}

fn validate_instance_id(id: &str) -> Result<(), KbError> {
    let invalid = |reason: &str| KbError::InvalidInstanceId {
        id: id.to_string(),
        reason: reason.to_string(),
    };
    if id.is_empty() {
        return Err(invalid("empty"));
    }
    if id.starts_with('#') {
        return Err(invalid("may not start with `#`"));
    }
    if id.contains([',', '\n', '\r']) {
        return Err(invalid("may not contain commas or line breaks"));
    }
    Ok(())
}

impl KnowledgeBase {
    /// Assembles a knowledge base from records, dropping duplicates and
    /// instances no solver can solve (with warnings), and sorting records by
    /// instance id. Fails on structural problems: bad ids, misaligned
    /// outcome lists, or solved times above the cutoff.
    pub fn from_records(
        cutoff_seconds: f64,
        solvers: Vec<String>,
        records: Vec<InstanceRecord>,
    ) -> Result<KbBuild, KbError> {
        if !cutoff_seconds.is_finite() || cutoff_seconds <= 0.0 {
            return Err(KbError::InvalidCutoff {
                cutoff: cutoff_seconds,
            });
        }
        if solvers.is_empty() {
            return Err(KbError::SchemaError {
                line: 0,
                reason: "a knowledge base needs at least one solver".into(),
            });
        }
        let mut seen_solvers = HashSet::new();
        for id in &solvers {
            validate_solver_id(id)?;
            if !seen_solvers.insert(id.clone()) {
                return Err(KbError::DuplicateSolverId { id: id.clone() });
            }
        }

        let mut warnings = Vec::new();
        let mut seen = HashSet::new();
        let mut retained = Vec::with_capacity(records.len());
        for record in records {
            validate_instance_id(&record.instance_id)?;
            if record.outcomes.len() != solvers.len() {
                return Err(KbError::MisalignedRecord {
                    instance: record.instance_id,
                    expected: solvers.len(),
                    actual: record.outcomes.len(),
                });
            }
            for (solver, outcome) in solvers.iter().zip(record.outcomes.iter()) {
                if let RuntimeOutcome::Solved(seconds) = outcome {
                    if !seconds.is_finite() || *seconds < 0.0 || *seconds > cutoff_seconds {
                        return Err(KbError::SolvedTimeExceedsCutoff {
                            instance: record.instance_id.clone(),
                            solver: solver.clone(),
                            seconds: *seconds,
                            cutoff: cutoff_seconds,
                        });
                    }
                }
            }
            if !seen.insert(record.instance_id.clone()) {
                warnings.push(BuildWarning::DuplicateInstanceDropped {
                    instance_id: record.instance_id,
                });
                continue;
            }
            if !record.is_solved_by_any() {
                warnings.push(BuildWarning::UnsolvedInstanceDropped {
                    instance_id: record.instance_id,
                });
                continue;
            }
            retained.push(record);
        }
        retained.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));

        Ok(KbBuild {
            kb: KnowledgeBase {
                cutoff_seconds,
                solvers,
                records: retained,
            },
            warnings,
        })
    }

    pub fn cutoff_seconds(&self) -> f64 {
        self.cutoff_seconds
    }

    pub fn solvers(&self) -> &[String] {
        &self.solvers
    }

    pub fn records(&self) -> &[InstanceRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn solver_index(&self, solver: &str) -> Option<usize> {
        self.solvers.iter().position(|s| s == solver)
    }

    /// Materializes a distance choice against this training set.
    pub fn distance(&self, kind: DistanceKind) -> Result<Distance, KbError> {
        match kind {
            DistanceKind::ArgoSmart => Ok(Distance::ArgoSmart),
            DistanceKind::ScaledEuclidean => {
                let bounds = ScalingBounds::from_vectors(self.records.iter().map(|r| &r.features))?;
                Ok(Distance::ScaledEuclidean(Box::new(bounds)))
            }
        }
    }

    /// The k records nearest to the query, ascending by distance; distance
    /// ties are broken by instance id so results are fully deterministic.
    pub fn nearest_neighbors(
        &self,
        query: &FeatureVector,
        k: usize,
        dist: &Distance,
    ) -> Result<Vec<Neighbor>, KbError> {
        self.nearest_excluding(query, k, dist, None)
    }

    pub(crate) fn nearest_excluding(
        &self,
        query: &FeatureVector,
        k: usize,
        dist: &Distance,
        exclude: Option<usize>,
    ) -> Result<Vec<Neighbor>, KbError> {
        let available = self.records.len() - usize::from(exclude.is_some());
        if k == 0 || k > available {
            return Err(KbError::KTooLarge { k, available });
        }
        // Plain scan and sort: training sets are small enough that a spatial
        // index would not pay for itself.
        let mut scored: Vec<Neighbor> = self
            .records
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(index, record)| Neighbor {
                index,
                distance: dist.between(query, &record.features),
            })
            .collect();
        scored.sort_by(|a, b| {
            a.distance.total_cmp(&b.distance).then_with(|| {
                self.records[a.index]
                    .instance_id
                    .cmp(&self.records[b.index].instance_id)
            })
        });
        scored.truncate(k);
        Ok(scored)
    }

    /// PAR10 penalty of a solver summed over the records at `indices`.
    pub fn par10_set(&self, solver: &str, indices: &[usize]) -> Result<f64, KbError> {
        let solver_idx = self
            .solver_index(solver)
            .ok_or_else(|| KbError::MissingOutcome {
                solver: solver.to_string(),
            })?;
        Ok(self.penalty_over_idx(solver_idx, indices.iter().copied()))
    }

    pub(crate) fn penalty_over_idx(
        &self,
        solver_idx: usize,
        indices: impl IntoIterator<Item = usize>,
    ) -> f64 {
        indices
            .into_iter()
            .map(|i| {
                par10(self.records[i].outcomes[solver_idx], self.cutoff_seconds)
                    .expect("knowledge base invariant: solved times are within the cutoff")
            })
            .sum()
    }

    pub(crate) fn full_penalty_idx(&self, solver_idx: usize) -> f64 {
        self.penalty_over_idx(solver_idx, 0..self.records.len())
    }

    /// Serializes to the v1 CSV format, checksum line included.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{KB_MAGIC} {KB_VERSION} cutoff={}", self.cutoff_seconds);
        out.push_str("instance,category");
        for i in 1..=NUM_FEATURES {
            let _ = write!(out, ",f{i:02}");
        }
        for solver in &self.solvers {
            let _ = write!(out, ",{solver}");
        }
        out.push('\n');
        for record in &self.records {
            let _ = write!(out, "{},{}", record.instance_id, record.category);
            for value in record.features.values() {
                let _ = write!(out, ",{value}");
            }
            for outcome in &record.outcomes {
                match outcome {
                    RuntimeOutcome::Solved(s) => {
                        let _ = write!(out, ",{s}");
                    }
                    RuntimeOutcome::Timeout => out.push_str(",T"),
                    RuntimeOutcome::Failed => out.push_str(",F"),
                }
            }
            out.push('\n');
        }
        let digest = Sha256::digest(out.as_bytes());
        let _ = write!(out, "{CHECKSUM_PREFIX}");
        for byte in digest {
            let _ = write!(out, "{byte:02x}");
        }
        out.push('\n');
        out
    }

    /// Parses the v1 CSV format. Returns the same warnings `from_records`
    /// can produce, plus one per solved time above the cutoff (recorded as a
    /// timeout).
    pub fn from_csv_str(text: &str) -> Result<KbBuild, KbError> {
        // Verify the trailing checksum when present.
        let body = match text.trim_end_matches('\n').rfind('\n') {
            Some(pos) if text[pos + 1..].starts_with(CHECKSUM_PREFIX) => {
                let line = text[pos + 1..].trim_end();
                let expected = &line[CHECKSUM_PREFIX.len()..];
                let digest = Sha256::digest(&text.as_bytes()[..pos + 1]);
                let mut actual = String::with_capacity(64);
                for byte in digest {
                    let _ = write!(actual, "{byte:02x}");
                }
                if actual != expected {
                    return Err(KbError::ChecksumMismatch);
                }
                &text[..pos + 1]
            }
            _ => text,
        };

        let mut lines = body.lines().enumerate();
        let (_, first) = lines.next().ok_or(KbError::FormatVersionMismatch {
            found: String::new(),
        })?;
        let cutoff_seconds = parse_magic_line(first)?;

        let (_, header) = lines.next().ok_or(KbError::SchemaError {
            line: 2,
            reason: "missing header line".into(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 2 + NUM_FEATURES + 1 || cols[0] != "instance" || cols[1] != "category" {
            return Err(KbError::SchemaError {
                line: 2,
                reason: "header must be `instance,category,f01..f29,<solvers>`".into(),
            });
        }
        for (i, col) in cols[2..2 + NUM_FEATURES].iter().enumerate() {
            let expected = format!("f{:02}", i + 1);
            if *col != expected {
                return Err(KbError::SchemaError {
                    line: 2,
                    reason: format!("expected feature column `{expected}`, found `{col}`"),
                });
            }
        }
        let solvers: Vec<String> = cols[2 + NUM_FEATURES..]
            .iter()
            .map(|s| s.to_string())
            .collect();

        let mut warnings = Vec::new();
        let mut records = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != cols.len() {
                return Err(KbError::SchemaError {
                    line: line_no,
                    reason: format!("expected {} fields, found {}", cols.len(), cells.len()),
                });
            }
            let instance_id = cells[0].to_string();
            let category = Category::parse(cells[1]).ok_or_else(|| KbError::SchemaError {
                line: line_no,
                reason: format!("unknown category `{}`", cells[1]),
            })?;
            let mut values = [0.0; NUM_FEATURES];
            for (slot, cell) in values.iter_mut().zip(&cells[2..2 + NUM_FEATURES]) {
                *slot = cell.parse().map_err(|_| KbError::SchemaError {
                    line: line_no,
                    reason: format!("feature value `{cell}` is not a number"),
                })?;
            }
            let features = FeatureVector::new(values).map_err(|e: FeatureError| {
                KbError::SchemaError {
                    line: line_no,
                    reason: e.to_string(),
                }
            })?;
            let mut outcomes = Vec::with_capacity(solvers.len());
            for (solver, cell) in solvers.iter().zip(&cells[2 + NUM_FEATURES..]) {
                outcomes.push(parse_outcome(
                    cell,
                    cutoff_seconds,
                    &instance_id,
                    solver,
                    line_no,
                    &mut warnings,
                )?);
            }
            records.push(InstanceRecord::new(instance_id, category, features, outcomes));
        }

        let mut build = KnowledgeBase::from_records(cutoff_seconds, solvers, records)?;
        let mut all = warnings;
        all.append(&mut build.warnings);
        build.warnings = all;
        Ok(build)
    }
}

fn parse_magic_line(line: &str) -> Result<f64, KbError> {
    let mismatch = || KbError::FormatVersionMismatch {
        found: line.to_string(),
    };
    let rest = line.strip_prefix(KB_MAGIC).ok_or_else(mismatch)?;
    let mut fields = rest.split_whitespace();
    if fields.next() != Some(KB_VERSION) {
        return Err(mismatch());
    }
    let cutoff_field = fields.next().ok_or_else(mismatch)?;
    let cutoff: f64 = cutoff_field
        .strip_prefix("cutoff=")
        .and_then(|s| s.parse().ok())
        .ok_or(KbError::SchemaError {
            line: 1,
            reason: format!("cannot parse `{cutoff_field}` as `cutoff=<seconds>`"),
        })?;
    Ok(cutoff)
}

fn parse_outcome(
    cell: &str,
    cutoff: f64,
    instance: &str,
    solver: &str,
    line_no: usize,
    warnings: &mut Vec<BuildWarning>,
) -> Result<RuntimeOutcome, KbError> {
    match cell {
        "T" => Ok(RuntimeOutcome::Timeout),
        "F" => Ok(RuntimeOutcome::Failed),
        _ => {
            let seconds: f64 = cell.parse().map_err(|_| KbError::SchemaError {
                line: line_no,
                reason: format!("outcome `{cell}` is not `T`, `F`, or a time in seconds"),
            })?;
            if !seconds.is_finite() || seconds < 0.0 {
                return Err(KbError::SchemaError {
                    line: line_no,
                    reason: format!("solved time `{cell}` must be finite and non-negative"),
                });
            }
            if seconds > cutoff {
                warnings.push(BuildWarning::SolvedTimeTreatedAsTimeout {
                    instance_id: instance.to_string(),
                    solver: solver.to_string(),
                    seconds,
                });
                Ok(RuntimeOutcome::Timeout)
            } else {
                Ok(RuntimeOutcome::Solved(seconds))
            }
        }
    }
}

/// Saves a knowledge base to disk in the v1 format.
pub fn save_kb(kb: &KnowledgeBase, path: &Path) -> Result<(), KbError> {
    fs::write(path, kb.to_csv_string())?;
    Ok(())
}

/// Loads a knowledge base from disk.
pub fn load_kb(path: &Path) -> Result<KbBuild, KbError> {
    let text = fs::read_to_string(path)?;
    KnowledgeBase::from_csv_str(&text)
}

/// Ingests a runtime table and builds a knowledge base.
///
/// The table is a CSV with header `instance[,category][,f01..f29],<solvers>`.
/// When the feature columns are absent, each instance id is resolved as a
/// CNF path relative to `cnf_dir` and its features are computed. Outcome
/// cells use the same encoding as the knowledge-base format; numeric times
/// above the cutoff are recorded as timeouts.
pub fn build_kb<R: Read>(
    table: R,
    cnf_dir: Option<&Path>,
    cutoff_seconds: f64,
) -> Result<KbBuild, KbError> {
    let mut text = String::new();
    let mut table = table;
    table.read_to_string(&mut text)?;

    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(KbError::SchemaError {
        line: 1,
        reason: "empty runtime table".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(|c| c.trim_end_matches('\r')).collect();
    if cols.first() != Some(&"instance") {
        return Err(KbError::SchemaError {
            line: 1,
            reason: "first column must be `instance`".into(),
        });
    }
    let mut next = 1;
    let has_category = cols.get(next) == Some(&"category");
    if has_category {
        next += 1;
    }
    let has_features = cols.get(next) == Some(&"f01");
    if has_features {
        for i in 1..=NUM_FEATURES {
            let expected = format!("f{i:02}");
            if cols.get(next).map(|c| *c != expected.as_str()).unwrap_or(true) {
                return Err(KbError::SchemaError {
                    line: 1,
                    reason: format!("feature columns must be contiguous f01..f29; expected `{expected}`"),
                });
            }
            next += 1;
        }
    }
    let solvers: Vec<String> = cols[next..].iter().map(|s| s.to_string()).collect();
    if solvers.is_empty() {
        return Err(KbError::SchemaError {
            line: 1,
            reason: "runtime table has no solver columns".into(),
        });
    }

    let mut warnings = Vec::new();
    let mut records = Vec::new();
    for (idx, raw) in lines {
        let row = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(KbError::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", cols.len(), cells.len()),
            });
        }
        let instance_id = cells[0].to_string();
        if instance_id.is_empty() {
            return Err(KbError::MalformedRow {
                row,
                reason: "empty instance id".into(),
            });
        }
        let mut cursor = 1;
        let category = if has_category {
            let cell = cells[cursor];
            cursor += 1;
            Category::parse(cell).ok_or_else(|| KbError::MalformedRow {
                row,
                reason: format!("unknown category `{cell}`"),
            })?
        } else {
            Category::Unknown
        };
        let features = if has_features {
            let mut values = [0.0; NUM_FEATURES];
            for slot in values.iter_mut() {
                let cell = cells[cursor];
                cursor += 1;
                *slot = cell.parse().map_err(|_| KbError::MalformedRow {
                    row,
                    reason: format!("feature value `{cell}` is not a number"),
                })?;
            }
            FeatureVector::new(values).map_err(|e| KbError::MalformedRow {
                row,
                reason: e.to_string(),
            })?
        } else {
            let dir = cnf_dir.ok_or_else(|| KbError::MissingCnfAndFeatures {
                row,
                instance: instance_id.clone(),
            })?;
            let path = dir.join(&instance_id);
            if !path.is_file() {
                return Err(KbError::MissingCnfAndFeatures {
                    row,
                    instance: instance_id.clone(),
                });
            }
            let parsed = parse_dimacs_file(&path).map_err(|source| KbError::Dimacs {
                instance: instance_id.clone(),
                source,
            })?;
            extract_features(&parsed.instance)
        };
        let mut outcomes = Vec::with_capacity(solvers.len());
        for (solver, cell) in solvers.iter().zip(&cells[cursor..]) {
            let outcome = parse_outcome(cell, cutoff_seconds, &instance_id, solver, row, &mut warnings)
                .map_err(|e| match e {
                    KbError::SchemaError { reason, .. } => KbError::MalformedRow { row, reason },
                    other => other,
                })?;
            outcomes.push(outcome);
        }
        records.push(InstanceRecord::new(instance_id, category, features, outcomes));
    }

    let mut build = KnowledgeBase::from_records(cutoff_seconds, solvers, records)?;
    let mut all = warnings;
    all.append(&mut build.warnings);
    build.warnings = all;
    Ok(build)
}

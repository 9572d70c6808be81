//! DIMACS CNF parsing and serialization.
//!
//! The accepted format is the SAT-competition flavor: optional `c` comment
//! lines, one `p cnf <vars> <clauses>` problem line, then clauses as
//! whitespace-separated signed integers terminated by `0`. A trailing clause
//! without a terminating `0` at end of file is accepted. The declared
//! variable count is authoritative (variables that never occur still exist);
//! the declared clause count is only checked against the actual count and a
//! mismatch is reported as a warning, not an error.

use std::fmt;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("missing `p cnf <vars> <clauses>` problem line")]
    MissingProblemLine,
    #[error("line {line}: malformed problem line: {reason}")]
    InvalidProblemLine { line: usize, reason: String },
    #[error("line {line}: token `{token}` is not an integer")]
    NonIntegerToken { line: usize, token: String },
    #[error("line {line}: literal {literal} out of range (declared {num_vars} variables)")]
    LiteralOutOfRange {
        line: usize,
        literal: i64,
        num_vars: usize,
    },
    #[error("line {line}: empty clause")]
    EmptyClause { line: usize },
    #[error("formula contains no clauses")]
    NoClauses,
}

/// Non-fatal oddities observed while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// The problem line declared a clause count that differs from the number
    /// of clauses actually present.
    DeclaredClauseCountMismatch { declared: usize, actual: usize },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::DeclaredClauseCountMismatch { declared, actual } => write!(
                f,
                "problem line declares {declared} clauses but {actual} are present"
            ),
        }
    }
}

/// A parsed CNF formula.
///
/// Literals are nonzero signed integers; `3` is the positive literal of
/// variable 3 and `-3` its negation. Clauses keep their file order and
/// literals keep their order within each clause; duplicate literals and
/// tautological clauses are retained verbatim since feature extraction is
/// occurrence-based. Immutable after construction, so it can be shared
/// freely across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfInstance {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
    source_path: String,
}

impl CnfInstance {
    /// Builds an instance from raw parts, enforcing the structural
    /// invariants: at least one variable, at least one clause, no empty
    /// clause, and every literal within `1..=num_vars` in absolute value.
    pub fn new(
        num_vars: usize,
        clauses: Vec<Vec<i32>>,
        source_path: impl Into<String>,
    ) -> Result<Self, DimacsError> {
        if num_vars == 0 {
            return Err(DimacsError::InvalidProblemLine {
                line: 0,
                reason: "variable count must be at least 1".into(),
            });
        }
        if clauses.is_empty() {
            return Err(DimacsError::NoClauses);
        }
        for clause in &clauses {
            if clause.is_empty() {
                return Err(DimacsError::EmptyClause { line: 0 });
            }
            for &lit in clause {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > num_vars {
                    return Err(DimacsError::LiteralOutOfRange {
                        line: 0,
                        literal: lit as i64,
                        num_vars,
                    });
                }
            }
        }
        Ok(CnfInstance {
            num_vars,
            clauses,
            source_path: source_path.into(),
        })
    }

    /// Declared variable count (header value, authoritative).
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Where the instance came from; informational only.
    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub fn total_literals(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum()
    }

    /// Serializes back to DIMACS text. Parsing the result yields an instance
    /// equal to `self` (given the same source label).
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(out, "{lit} ");
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Result of a parse: the instance plus any non-fatal warnings.
#[derive(Debug, Clone)]
pub struct ParsedCnf {
    pub instance: CnfInstance,
    pub warnings: Vec<ParseWarning>,
}

// Header parse progresses token by token so that any whitespace layout,
// including a problem line broken across physical lines, parses the same.
enum ParseState {
    ExpectP,
    ExpectCnf,
    ExpectVars,
    ExpectClauses { num_vars: usize },
    Body,
}

/// Parses DIMACS CNF from a byte stream. `source` labels the instance for
/// diagnostics and provenance.
pub fn parse_dimacs<R: Read>(input: R, source: &str) -> Result<ParsedCnf, DimacsError> {
    let reader = BufReader::new(input);
    let mut state = ParseState::ExpectP;
    let mut num_vars = 0usize;
    let mut declared_clauses = 0usize;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_start();
        // Comment lines start with `c`; `cnf` is the only grammar token with
        // that prefix and may begin a line when the header spans lines.
        if trimmed.is_empty() || (trimmed.starts_with('c') && !trimmed.starts_with("cnf")) {
            continue;
        }
        for token in trimmed.split_whitespace() {
            match state {
                ParseState::ExpectP => {
                    if token != "p" {
                        return Err(DimacsError::MissingProblemLine);
                    }
                    state = ParseState::ExpectCnf;
                }
                ParseState::ExpectCnf => {
                    if token != "cnf" {
                        return Err(DimacsError::InvalidProblemLine {
                            line: line_no,
                            reason: format!("expected `cnf` after `p`, got `{token}`"),
                        });
                    }
                    state = ParseState::ExpectVars;
                }
                ParseState::ExpectVars => {
                    let vars: usize =
                        token.parse().map_err(|_| DimacsError::InvalidProblemLine {
                            line: line_no,
                            reason: format!("variable count `{token}` is not a non-negative integer"),
                        })?;
                    if vars == 0 {
                        return Err(DimacsError::InvalidProblemLine {
                            line: line_no,
                            reason: "variable count must be at least 1".into(),
                        });
                    }
                    if vars > i32::MAX as usize {
                        return Err(DimacsError::InvalidProblemLine {
                            line: line_no,
                            reason: format!("variable count {vars} exceeds the supported maximum"),
                        });
                    }
                    state = ParseState::ExpectClauses { num_vars: vars };
                }
                ParseState::ExpectClauses { num_vars: vars } => {
                    declared_clauses =
                        token.parse().map_err(|_| DimacsError::InvalidProblemLine {
                            line: line_no,
                            reason: format!("clause count `{token}` is not a non-negative integer"),
                        })?;
                    num_vars = vars;
                    clauses.reserve(declared_clauses.min(1 << 24));
                    state = ParseState::Body;
                }
                ParseState::Body => {
                    let lit: i64 = token.parse().map_err(|_| DimacsError::NonIntegerToken {
                        line: line_no,
                        token: token.to_string(),
                    })?;
                    if lit == 0 {
                        if current.is_empty() {
                            return Err(DimacsError::EmptyClause { line: line_no });
                        }
                        clauses.push(std::mem::take(&mut current));
                    } else {
                        if lit.unsigned_abs() as usize > num_vars {
                            return Err(DimacsError::LiteralOutOfRange {
                                line: line_no,
                                literal: lit,
                                num_vars,
                            });
                        }
                        current.push(lit as i32);
                    }
                }
            }
        }
    }

    match state {
        ParseState::Body => {}
        ParseState::ExpectP => return Err(DimacsError::MissingProblemLine),
        _ => {
            return Err(DimacsError::InvalidProblemLine {
                line: 0,
                reason: "problem line is incomplete".into(),
            })
        }
    }
    // Tolerate a final clause that the file never closed with `0`.
    if !current.is_empty() {
        clauses.push(current);
    }
    if clauses.is_empty() {
        return Err(DimacsError::NoClauses);
    }

    let mut warnings = Vec::new();
    if declared_clauses != clauses.len() {
        warnings.push(ParseWarning::DeclaredClauseCountMismatch {
            declared: declared_clauses,
            actual: clauses.len(),
        });
    }
    let instance = CnfInstance::new(num_vars, clauses, source)?;
    Ok(ParsedCnf { instance, warnings })
}

/// Parses a DIMACS CNF file from disk.
pub fn parse_dimacs_file(path: &Path) -> Result<ParsedCnf, DimacsError> {
    let file = File::open(path)?;
    parse_dimacs(file, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ParsedCnf, DimacsError> {
        parse_dimacs(text.as_bytes(), "<test>")
    }

    #[test]
    fn parses_basic_instance() {
        let parsed = parse("p cnf 3 2\n1 -2 0\n2 3 -1 0\n").unwrap();
        assert_eq!(parsed.instance.num_vars(), 3);
        assert_eq!(parsed.instance.clauses(), &[vec![1, -2], vec![2, 3, -1]]);
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn parses_minimal_instance_with_comment() {
        let parsed = parse("c comment\np cnf 1 1\n1 0").unwrap();
        assert_eq!(parsed.instance.num_vars(), 1);
        assert_eq!(parsed.instance.clauses(), &[vec![1]]);
    }

    #[test]
    fn rejects_literal_out_of_range() {
        match parse("p cnf 2 1\n3 0\n") {
            Err(DimacsError::LiteralOutOfRange { literal: 3, num_vars: 2, .. }) => {}
            other => panic!("expected LiteralOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn rejects_missing_problem_line() {
        assert!(matches!(parse("1 2 0\n"), Err(DimacsError::MissingProblemLine)));
        assert!(matches!(parse(""), Err(DimacsError::MissingProblemLine)));
        assert!(matches!(parse("c only comments\n"), Err(DimacsError::MissingProblemLine)));
    }

    #[test]
    fn rejects_empty_clause() {
        match parse("p cnf 2 2\n1 0 0\n") {
            Err(DimacsError::EmptyClause { line: 2 }) => {}
            other => panic!("expected EmptyClause, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_integer_token() {
        match parse("p cnf 2 1\n1 x 0\n") {
            Err(DimacsError::NonIntegerToken { token, .. }) => assert_eq!(token, "x"),
            other => panic!("expected NonIntegerToken, got {other:?}"),
        }
    }

    #[test]
    fn rejects_zero_variable_header() {
        assert!(matches!(
            parse("p cnf 0 1\n"),
            Err(DimacsError::InvalidProblemLine { .. })
        ));
    }

    #[test]
    fn accepts_trailing_clause_without_terminator() {
        let parsed = parse("p cnf 3 2\n1 2 0\n-3 1").unwrap();
        assert_eq!(parsed.instance.clauses(), &[vec![1, 2], vec![-3, 1]]);
    }

    #[test]
    fn warns_on_declared_count_mismatch() {
        let parsed = parse("p cnf 3 5\n1 0\n2 0\n").unwrap();
        assert_eq!(
            parsed.warnings,
            vec![ParseWarning::DeclaredClauseCountMismatch { declared: 5, actual: 2 }]
        );
        assert_eq!(parsed.instance.num_clauses(), 2);
    }

    #[test]
    fn keeps_duplicate_literals_and_tautologies() {
        let parsed = parse("p cnf 2 2\n1 1 0\n2 -2 0\n").unwrap();
        assert_eq!(parsed.instance.clauses(), &[vec![1, 1], vec![2, -2]]);
    }

    #[test]
    fn clauses_may_span_lines_and_share_lines() {
        let a = parse("p cnf 4 2\n1 2\n3 0 4\n-1 0\n").unwrap();
        let b = parse("p cnf 4 2\n1 2 3 0\n4 -1 0\n").unwrap();
        assert_eq!(a.instance, b.instance);
    }

    #[test]
    fn whitespace_layout_is_irrelevant() {
        let a = parse("p cnf 3 2\n1 -2 0\n2 3 -1 0\n").unwrap();
        let b = parse("p  cnf   3  2\n\n  1\t-2\t 0 2\n3 -1 0").unwrap();
        assert_eq!(a.instance, b.instance);
        let c = parse("p\ncnf\n3\n2\n1 -2 0 2 3 -1 0").unwrap();
        assert_eq!(a.instance, c.instance);
    }

    #[test]
    fn rejects_incomplete_problem_line() {
        assert!(matches!(
            parse("p cnf 3\n"),
            Err(DimacsError::InvalidProblemLine { .. })
        ));
    }

    #[test]
    fn declared_vars_are_authoritative_even_if_unused() {
        let parsed = parse("p cnf 10 1\n1 -2 0\n").unwrap();
        assert_eq!(parsed.instance.num_vars(), 10);
    }

    #[test]
    fn round_trips_through_serialization() {
        let texts = [
            "p cnf 3 2\n1 -2 0\n2 3 -1 0\n",
            "p cnf 1 1\n1 0\n",
            "p cnf 5 3\n1 1 -5 0\n2 -2 0\n4 3 2 1 0\n",
        ];
        for text in texts {
            let parsed = parse(text).unwrap();
            let reparsed = parse(&parsed.instance.to_dimacs()).unwrap();
            assert_eq!(parsed.instance, reparsed.instance);
            assert!(reparsed.warnings.is_empty());
        }
    }

    #[test]
    fn fuzzed_round_trip_and_whitespace_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xd1aca5);
        for _ in 0..200 {
            let num_vars = rng.gen_range(1..=20);
            let num_clauses = rng.gen_range(1..=30);
            let clauses: Vec<Vec<i32>> = (0..num_clauses)
                .map(|_| {
                    (0..rng.gen_range(1..=6))
                        .map(|_| {
                            let v = rng.gen_range(1..=num_vars) as i32;
                            if rng.gen_bool(0.5) {
                                v
                            } else {
                                -v
                            }
                        })
                        .collect()
                })
                .collect();
            let instance = CnfInstance::new(num_vars, clauses, "<test>").unwrap();
            let text = instance.to_dimacs();
            let reparsed = parse(&text).unwrap().instance;
            assert_eq!(instance, reparsed);

            // Same token stream under a scrambled whitespace layout.
            let mut scrambled = String::new();
            for token in text.split_whitespace() {
                scrambled.push_str(token);
                let pad = ["\n", " ", "\t", "  ", " \n "][rng.gen_range(0..5)];
                scrambled.push_str(pad);
            }
            let reparsed = parse(&scrambled).unwrap().instance;
            assert_eq!(instance, reparsed);
        }
    }
}

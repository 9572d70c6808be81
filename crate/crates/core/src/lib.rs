//! SAT solver portfolio built on k-nearest-neighbor selection.
//!
//! Given a CNF instance, the portfolio computes a 29-value syntactic feature
//! vector, finds the k training instances closest to it under a configurable
//! distance, and picks the solver with the smallest PAR10 penalty on that
//! neighborhood (ties resolved on the full training set). The crate also
//! provides the supporting machinery: a DIMACS parser, a persistent knowledge
//! base of training runs, a subprocess runner with cutoff enforcement, and a
//! leave-one-out evaluation harness.

pub mod dimacs;
pub mod evaluator;
pub mod features;
pub mod knowledge_base;
pub mod metrics;
pub mod runner;
pub mod selector;

pub use dimacs::{parse_dimacs, parse_dimacs_file, CnfInstance, DimacsError};
pub use features::{extract_features, FeatureVector, NUM_FEATURES};
pub use knowledge_base::{load_kb, save_kb, InstanceRecord, KnowledgeBase};
pub use metrics::{Distance, DistanceKind, RuntimeOutcome};
pub use selector::{select_solver, SelectionResult};

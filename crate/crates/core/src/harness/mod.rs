//! Corpora, baselines and the analysis quantities reported over a suite.

mod corpus;
pub mod kinship;
mod problem;
mod suite;

pub use corpus::{
    load_corpus, load_problem, write_corpus, CorpusConfig, CorpusError, CORPUS_FILE, EXEMPLARS_FILE, KB_FILE,
};
pub use kinship::{generate_kinship, generate_kinship_between, GenError};
pub use problem::{FieldError, Label, Problem, ProblemFile};
pub use suite::{
    bucket_of, corruption_check, flip_analysis, render_reports, run_suite, useful_clauses, write_reports, BucketRow,
    CorruptionError, FlipRow, FlipTable, IdMismatch, Record, RunMetrics, SuiteReport, System, BUCKETS, REPORT_FILES,
};

//! ARGOS: abductive reasoning that grows the SAT backbone of a problem with
//! language-model-proposed commonsense implications, falling back to an
//! annealed self-consistency vote.

pub mod engine;
pub mod harness;
pub mod llm;
pub mod logic;
pub mod sat;
pub mod seed;

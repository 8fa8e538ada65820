//! Fault localization toolkit for large C codebases.
//!
//! The crate ranks source files (and methods inside them) by how likely they
//! are to contain a reported bug. It provides:
//!
//! - [`corpus`]: indexing of a C source tree, a shared identifier-aware
//!   tokenizer, heuristic entity extraction, and file skeletons.
//! - [`retrieval`]: IR rankers over an index (BM25, rVSM, structured
//!   entity-field retrieval, embedding similarity).
//! - [`benchmark`]: task loading, ground truth from fix patches, recall@k /
//!   MRR scoring, and paired significance testing.
//! - [`mailkb`]: a knowledge base of patch-bearing mailing-list emails with
//!   temporal, file-scoped retrieval.
//! - [`llm`]: provider abstraction (mock and HTTP), prompt construction, and
//!   strict parsers for model output.
//! - [`pipeline`]: the enhancement pipeline that expands an agent's initial
//!   file predictions, fuses the candidate lists by reciprocal rank, and
//!   optionally re-ranks with a model.

pub mod benchmark;
pub mod corpus;
pub mod llm;
pub mod mailkb;
pub mod pipeline;
pub mod retrieval;

//! Learning review behavior from code-review corpora.
//!
//! The pipeline anchors review comments onto AST program graphs
//! ([`astgraph`]), derives node labels and comment-quality targets
//! ([`labeling`]) from a review corpus ([`corpus`]), and trains graph neural
//! networks ([`graphlearn`]) on comment text features ([`textrep`]). The
//! [`evalcli`] module holds metrics, reports and the command-line driver.

pub mod astgraph;
pub mod corpus;
pub mod evalcli;
pub mod graphlearn;
pub mod hash;
pub mod labeling;
pub mod textrep;

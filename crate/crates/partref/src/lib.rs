//! Generic partition refinement for state-based systems.
//!
//! The engine minimizes a finite system up to behavioural equivalence in
//! `O((m+n) log n)`, where `n` is the number of states and `m` the number of
//! edges in the system's graph encoding. It is parameterized over *refinement
//! interfaces* describing the transition type (sets of successors, weighted
//! maps, distributions, tuples), and composite transition types are handled by
//! flattening them into a multi-sorted system and de-sorting into a coproduct.
//!
//! The crate ships:
//! - [`partition`]: a constant-time refinable partition plus the compound
//!   block tracking that drives the "process the smaller half" strategy,
//! - [`interfaces`]: the refinement-interface contract with implementations
//!   for finite powerset, group-valued (integer and rational), distribution,
//!   bag and polynomial transition types, and their coproduct,
//! - [`encoding`]: the input format, flattening of composite functor terms
//!   into sorts, and the de-sorted edge encoding the engine consumes,
//! - [`engine`]: initialization, the splitting step and the main loop,
//! - [`oracle`]: a brute-force minimizer used for differential testing,
//! - [`gen`]: a seeded random instance generator,
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod encoding;
pub mod engine;
pub mod gen;
pub mod grouping;
pub mod interfaces;
pub mod oracle;
pub mod partition;

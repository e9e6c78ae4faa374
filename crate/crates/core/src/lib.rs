//! Operator systems, normal forms, grounding and evaluation for
//! existential first-order queries with one free variable over a
//! knowledge graph.

pub mod entity_set;
pub mod executor;
pub mod formula;
pub mod grounder;
pub mod kg;
pub mod metrics;
pub mod rewrite;
pub mod serialize;
pub mod typegen;

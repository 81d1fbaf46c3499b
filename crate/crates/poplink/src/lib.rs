//! Population reconstruction by record linkage.
//!
//! Links individual records across birth, death, marriage and census
//! certificates and assembles them into per-person life segments. The
//! pipeline runs in stages:
//!
//! 1. [`ingest`] — parse certificate CSV files into the common-schema
//!    record store, cleaning and standardizing attribute values.
//! 2. [`blocking`] — group records by role-typed, phonetically encoded
//!    blocking keys and emit candidate record pairs.
//! 3. [`pairwise`] — score candidate pairs attribute-by-attribute and keep
//!    pairs above the minimum similarity threshold (the link set `S`).
//! 4. [`graph`] / [`relational`] / [`group`] — build the certificate graph
//!    from `S` and score certificate pairs by neighborhood (relational) and
//!    member-link (group) similarity, with optional cardinality
//!    [`constraints`].
//! 5. [`fusion`] — intersect and fuse the relational and group match sets,
//!    then assemble life segments.
//!
//! [`evaluation`] scores any certificate match set against gold links;
//! [`synthgen`] generates seeded synthetic populations for testing;
//! [`pipeline`] wires the stages into reproducible runs driven by a
//! [`config::PipelineConfig`].

pub mod blocking;
pub mod comparators;
pub mod config;
pub mod constraints;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod graph;
pub mod group;
pub mod ingest;
pub mod model;
pub mod pairwise;
pub mod pipeline;
pub mod relational;
pub mod synthgen;
#[cfg(test)]
pub(crate) mod testkit;

pub use error::{Error, Result};

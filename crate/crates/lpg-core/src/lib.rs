//! Relationship inference for aerial scene graphs.
//!
//! The crate has two halves. The first is a rule-based candidate filter:
//! per category pair we collect containment counts and the scale factors
//! at which disjoint (or overlapping) boxes just touch, and use those
//! statistics to decide which object pairs can plausibly be related
//! ([`prd::abs_prd`]). The second is a small graph convolutional network
//! that keeps each node's raw features alongside the aggregated
//! neighborhood features and classifies relationship predicates over the
//! filtered pairs ([`lpg`]).
//!
//! Everything here is pure computation over owned values; file formats
//! and the CLI live in the companion `lpg-tools` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod eval;
pub mod geometry;
pub mod lpg;
pub mod prd;
pub mod priors;
pub mod rng;
pub mod scene;
pub mod tensor;

pub use geometry::{BoundingBox, RelativePosition, ScaleSearchConfig, ZoomConfig};
pub use prd::{AcceptMode, CandidatePair, PrdConfig, Provenance};
pub use priors::PriorDictionary;
pub use scene::{Corpus, ObjectInstance, RelationshipTriple, SceneAnnotation, Vocabulary};

//! Social card metadata analysis and striking image prediction.
//!
//! Documents are loaded from a manifest ([`corpus`]), their head metadata is
//! resolved into per-platform cards ([`metadata`]), candidate images are
//! decoded and hashed ([`imagefeat`]), scholarly figure markup is parsed
//! ([`scholarly`]), and candidates are ranked by classifiers ([`learn`]) and
//! scored against the metadata image ([`eval`]).

pub mod corpus;
pub mod error;
pub mod eval;
pub mod imagefeat;
pub mod learn;
pub mod metadata;
mod par;
pub mod pipeline;
pub mod report;
pub mod scholarly;
pub mod synth;

pub use error::{Error, Result};

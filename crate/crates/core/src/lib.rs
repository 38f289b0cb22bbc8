//! Soft prompt tuning of a frozen decoder-only transformer for cross-lingual
//! topic classification, plus the linguistic-distance analysis that relates
//! per-language transfer accuracy to typological, geographic and genetic
//! distance from the source language.
//!
//! The crate is self-contained: [`numerics`] provides the tensor and
//! reverse-mode machinery, [`model`] the transformer, [`prompting`] the soft
//! prompt and verbalizer, [`training`] the few-shot protocol, [`corpus`] the
//! data, [`linguistics`] the distances, and [`analysis`] the reports.

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod linguistics;
pub mod model;
pub mod numerics;
pub mod prompting;
pub mod training;

pub use error::{Error, Result};

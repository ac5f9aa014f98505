//! Fill-in-the-middle and preference-pair dataset synthesis from local
//! source repositories.

pub mod context;
pub mod curriculum;
pub mod endpoint;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod language;
pub mod parsing;
pub mod pipeline;
pub mod preference;
pub mod quality;
pub mod strategy;
pub mod synth;
pub mod text;

pub use error::{Error, Result};

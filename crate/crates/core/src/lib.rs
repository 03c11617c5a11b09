pub mod annotate;
pub mod classify;
pub mod corpus;
pub mod difficulty;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod pipeline;
pub mod report;
pub mod represent;
pub mod resample;
pub mod seed;

pub use error::{Error, Result};

//! Traced execution of a small Python subset, white-box question generation,
//! answer scoring and dataset-pipeline utilities.

pub mod interp;
pub mod pipeline;
pub mod questions;
pub mod rewards;
pub mod syntax;
pub mod trace;

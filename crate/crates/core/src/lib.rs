//! Measures of information structure in mappings from labeled inputs to
//! discrete signals or vector representations.

pub mod bench;
pub mod descriptors;
pub mod error;
pub mod info;
pub mod io;
pub mod numeric;
pub mod signal;
pub mod structure;
pub mod synthetic;

pub use error::{Error, Result};
pub use info::{Categorical, Correlation, JsDivergence, Weighting};

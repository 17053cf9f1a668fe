pub mod banded;
pub mod error;
pub mod forced;
pub mod grid;
pub mod holder;
pub mod hypotheses;
pub mod mollify;
pub mod operator;
pub mod oracle;
pub mod par;
pub mod poly;
pub mod poly_example;
pub mod profile;
pub mod smoothing;
pub mod solver;
pub mod stencil;
pub mod util;

pub use error::{Error, Result};

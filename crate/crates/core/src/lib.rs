#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolve;
pub mod forms;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod spectral;
pub mod steady;

pub use error::{Error, Result};

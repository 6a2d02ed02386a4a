pub mod bpstats;
pub mod circuits;
pub mod cli;
pub mod error;
pub mod gatealg;
pub mod linalg;
pub mod models;
pub mod optimizers;
pub mod randhaar;
pub mod simcore;
pub mod smatrix;

pub use error::{Error, Result};

//! Third-order finite-volume schemes on networks of one-dimensional domains,
//! with CWENO reconstruction at interior cells and boundary cells.

pub mod cweno;
pub mod error;
pub mod harness;
pub mod models;
pub mod network;
pub mod scheme;

pub use error::{Error, Result, Side};

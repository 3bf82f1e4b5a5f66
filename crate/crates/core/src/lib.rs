//! Potential theory of symmetric stable processes on kappa-fat open sets:
//! exact jump-exit simulation, Green function estimation, and empirical
//! checks of three-point Green function inequalities and Kato-class criteria.

pub mod cli;
pub mod conditions_c;
pub mod error;
pub mod geometry;
pub mod green;
pub mod inequality_lab;
pub mod kato;
pub mod kernels;
pub mod quad;
pub mod relativistic;
pub mod rng;
pub mod special;
pub mod stats;
pub mod wos;

pub use error::{Error, Result};

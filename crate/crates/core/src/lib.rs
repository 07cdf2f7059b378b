//! Random feature method (RFM) solver for linear and mildly nonlinear PDEs on
//! rectangles, with the adaptive feature capture loop (AFCM) that moves
//! feature hyperplanes and collocation points into high-gradient regions.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: domain partitioning, local transforms, partition-of-unity
//!   weights and tensor-grid collocation.
//! * [`features`] and [`grf`]: random feature functions, hyperplane density
//!   and shape-parameter calibration against Gaussian random fields.
//! * [`operator`], [`assembly`], [`lstsq`], [`solution`]: rescaled least-squares
//!   assembly with C¹ interface continuity, the minimum-norm solve and
//!   evaluation of the resulting approximation.
//! * [`adaptivity`]: monitor density, weighted sampling and regeneration of
//!   features and collocation points.
//! * [`drivers`]: stationary, Picard and Crank–Nicolson drivers.
//! * [`experiment`]: problem registry, configuration, reports and exports used
//!   by the `afcm` command line tool.

pub mod adaptivity;
pub mod assembly;
pub mod drivers;
pub mod error;
pub mod experiment;
pub mod features;
pub mod geometry;
pub mod grf;
pub mod lstsq;
pub mod operator;
pub mod rng;
pub mod solution;

mod par;

pub use error::{AfcmError, Result};
pub use geometry::Point;

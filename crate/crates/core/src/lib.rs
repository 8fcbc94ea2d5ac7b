//! Design-based functional principal components analysis.
//!
//! Curves observed on a shared grid are sampled from a finite population under
//! a fixed-size design. The mean curve, covariance operator and its
//! eigenelements are estimated by Horvitz-Thompson substitution, and their
//! variances are approximated by linearization through influence functions.

pub mod cli;
pub mod curves;
pub mod designs;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod io;
pub mod linearize;
pub mod oracle;
pub mod simulate;
pub mod variance;

pub use curves::CurveSet;
pub use designs::{Design, SampleDraw};
pub use error::{FpcaError, Result};
pub use estimators::FpcaModel;
pub use grid::{Curve, Grid, Kernel};
pub use linearize::{LinearizedSet, Target};
pub use variance::VarianceReport;

//! Diffusive Dirichlet process mixtures.
//!
//! Stick-breaking weights whose sticks follow independent Wright–Fisher
//! diffusions, fixed atoms, and a slice-augmented Gibbs sampler for
//! time-varying density estimation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod estimation;
pub mod gibbs;
pub mod measure;
pub mod mixture;
pub mod numerics;
pub mod slice;
pub mod stats;
pub mod validate;
pub mod wf;

pub use data::TimeGridDataset;
pub use error::{Error, Result};
pub use measure::{MeasureState, StickConfig, StickKind, TimeScale};
pub use mixture::{CenteringMeasure, KernelParam};
pub use wf::{TransitionAug, WFParams};

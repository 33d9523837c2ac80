//! Numerical and closed-form toolkit for a two-level atom coupled to a
//! damped cavity mode under incoherent pumping.
//!
//! * [`fock`]: truncated ladder operators and tensor products.
//! * [`liouvillian`]: master-equation generator, steady states, time evolution.
//! * [`observables`]: photon statistics and inversion of a state.
//! * [`analytic`]: moment relations and approximate closed forms.
//! * [`strong_coupling`]: exact distribution in the strong-coupling limit.
//! * [`sweep`] and [`check`]: figure data and the cross-module verification report.

// `!(x <= tol)` is used on purpose so that NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod check;
pub mod error;
pub mod fock;
pub mod liouvillian;
pub mod observables;
pub mod special;
pub mod strong_coupling;
pub mod sweep;

pub use error::{Error, Result};
pub use fock::{ComplexMatrix, SpaceConfig, C64};
pub use liouvillian::{DensityMatrix, ModelParams, SteadyStateOptions, SteadyStateResult};
pub use observables::{MomentSet, PhotonDistribution};

// index loops mirror the stencil math throughout the numeric kernels, and
// the negated comparisons are deliberate NaN guards
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

//! Reconstruction of the axisymmetric plasma equilibrium in a tokamak
//! vacuum vessel from boundary magnetics and line-integrated internal
//! diagnostics. The toolkit solves the inverse Grad-Shafranov problem with
//! Tikhonov-regularized least squares inside a Picard fixed-point loop, and
//! ships a forward solver used to manufacture ground-truth test cases.

pub mod diagnostics;
pub mod direct;
pub mod equil;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod inverse;
pub mod mesh;
pub mod par;
pub mod plasma;
pub mod profiles;
pub mod report;
pub mod sparse;
pub mod testkit;

pub use error::{GsError, Result};

/// Vacuum magnetic permeability, H/m.
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

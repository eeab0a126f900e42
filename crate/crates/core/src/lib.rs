//! Numerical toolkit for synthetic null hypersurfaces stored in ray-decomposed
//! form.
//!
//! A hypersurface is a probability-weighted family of null generators (rays),
//! each carrying a gauge interval and a piecewise-linear density. On top of
//! that model the crate provides:
//!
//! * [`measures`]: probability measures on the hypersurface, relative entropy
//!   and entropy power;
//! * [`transport`]: causal feasibility, the monotone (quantile) coupling,
//!   gauge-affine dynamical plans and displacement interpolation;
//! * [`nec`]: entropy-power concavity tests, per-ray `CD(0, N-1)` checks and
//!   their cross-validation;
//! * [`geometry`]: Minkowski contents, area monotonicity, the convergence
//!   estimator and the ray-length bound for trapped sections;
//! * [`smooth`]: analytic generators (light cones, sphere congruences) and the
//!   warped-product geodesic integrator;
//! * [`stability`]: approximating sequences and limit checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod geometry;
pub mod hypersurface;
pub mod io;
pub mod maps;
pub mod measures;
pub mod nec;
pub mod quadrature;
pub mod ray;
pub mod rng;
pub mod smooth;
pub mod stability;
pub mod transport;
pub mod verdict;

pub use error::{Error, Result};
pub use hypersurface::{PointOnH, SyntheticNullHypersurface, TransversePair};
pub use measures::{Entropy, HMeasure, RayMeasureSlice};
pub use ray::{Embedding, GaugeInterval, Ray, RayDensity, RayId};
pub use verdict::Verdict;

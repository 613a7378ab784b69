//! Solver library for one-dimensional assignment (optimal transport) between
//! worker and job distributions on the real line when the cost of mismatch is
//! *concave* in the skill gap.
//!
//! The pipeline:
//!
//! 1. [`distributions`] — exact finite atomic measures with integer masses over
//!    a shared scale, common-component extraction (perfect pairs), and the
//!    underqualification step function `H = F - G`.
//! 2. [`layering`] — slicing `H` at integer levels decomposes the residual
//!    problem into independent alternating worker/job layers.
//! 3. [`solver`] — optimal within-layer assignment by interval Bellman
//!    recursion (a simple `O(n^3)` form and an `O(n^2)` form), plus the
//!    rank-order shortcut for near-linear costs and a convex-cost positive
//!    assortative comparator.
//! 4. [`dual`] — shadow prices: a hierarchical local construction of the dual
//!    potential on mismatched mass and its extension to perfectly paired mass,
//!    yielding wages `w = g - phi` and firm values `v = h - psi`.
//! 5. [`oracle`] — independent brute-force / min-cost-matching verification and
//!    duality certification for randomized testing.
//! 6. [`quant`] — synthetic economies, wage calibration, and within-job wage
//!    dispersion reports.
//!
//! All numeric code is generic over the scalar type via [`Real`] (any
//! `num_traits::Float`, e.g. `f32` or `f64`); concrete `f64` aliases live at
//! the crate root.

pub mod cost;
pub mod distributions;
pub mod dual;
pub mod layering;
pub mod oracle;
pub mod quant;
pub mod solver;

use std::fmt::{Debug, Display};

/// Scalar trait bound for all floating-point computations in this crate.
///
/// Implemented by `f32` and `f64` (and anything else satisfying the bounds).
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: num_traits::Float + num_traits::FromPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` literal into the generic scalar type.
///
/// Panics only if the target type cannot represent any `f64` at all, which
/// cannot happen for the standard float types.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from(x).expect("scalar type must convert from f64")
}

/// Default skill/cost scalar.
pub type Skill = f64;

/// `f64` specializations of the core domain types.
pub type DiscreteDistribution64 = distributions::DiscreteDistribution<f64>;
pub type StepFunction64 = distributions::StepFunction<f64>;
pub type PowerCostParams64 = cost::PowerCostParams<f64>;
pub type TechnologyPrimitives64 = cost::TechnologyPrimitives<f64>;
pub type ProductionSpec64 = cost::ProductionSpec<f64>;
pub type LegendreCost64 = cost::LegendreCost<f64>;
pub type Layer64 = layering::Layer<f64>;
pub type Assignment64 = solver::Assignment<f64>;
pub type ValueTable64 = solver::ValueTable<f64>;
pub type SubpairForest64 = dual::SubpairForest<f64>;
pub type DualSolution64 = dual::DualSolution<f64>;
pub type BetaSystem64 = dual::BetaSystem<f64>;
pub type UnitInstance64 = oracle::UnitInstance<f64>;
pub type EconomyFixture64 = quant::EconomyFixture<f64>;
pub type DispersionReport64 = quant::DispersionReport<f64>;

//! Mismatch cost functions: the closed-form asymmetric concave power cost, its
//! microfoundation via technology/amenity investment primitives, and the
//! general Legendre-transform cost for arbitrary convex investment schedules.
//!
//! A worker of skill `x` in a job of difficulty `z` incurs
//! `c(x,z) = rho_p (z-x)^zeta_p` when underqualified (`z >= x`) and
//! `c(x,z) = rho_k (x-z)^zeta_k` when overqualified, with the power indices in
//! `(0,1)` so the cost is strictly concave in the skill gap.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{lit, Real};

/// Errors from cost construction and evaluation.
#[derive(Debug, Error)]
pub enum CostError {
    /// A parameter or evaluation point lies outside its valid domain.
    #[error("domain error: {0}")]
    DomainError(String),
    /// Optimal investment is undefined for a perfectly matched pair (the
    /// first-order condition sends the investment level to infinity).
    #[error("optimal investment undefined at x = z = {0}")]
    InvestmentUndefined(String),
    /// The supplied investment-cost schedule is not strictly convex and
    /// decreasing.
    #[error("invalid investment cost schedule: {0}")]
    InvalidCost(String),
}

/// Anything that prices the mismatch between a worker skill `x` and a job
/// difficulty `z`.
pub trait MismatchCost<T: Real> {
    /// Cost of assigning a worker of skill `x` to a job of difficulty `z`.
    fn cost(&self, x: T, z: T) -> T;
}

impl<T: Real, C: MismatchCost<T> + ?Sized> MismatchCost<T> for &C {
    fn cost(&self, x: T, z: T) -> T {
        (**self).cost(x, z)
    }
}

/// Asymmetric concave power cost parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCostParams<T: Real> {
    /// Underqualification power index, in (0,1).
    pub zeta_p: T,
    /// Underqualification level, positive.
    pub rho_p: T,
    /// Overqualification power index, in (0,1).
    pub zeta_k: T,
    /// Overqualification level, positive.
    pub rho_k: T,
}

impl<T: Real> PowerCostParams<T> {
    /// Validated constructor.
    pub fn new(zeta_p: T, rho_p: T, zeta_k: T, rho_k: T) -> Result<Self, CostError> {
        for (name, zeta) in [("zeta_p", zeta_p), ("zeta_k", zeta_k)] {
            if !(zeta > T::zero() && zeta < T::one()) {
                return Err(CostError::DomainError(format!("{name} must lie in (0,1), got {zeta}")));
            }
        }
        for (name, rho) in [("rho_p", rho_p), ("rho_k", rho_k)] {
            if !(rho > T::zero()) {
                return Err(CostError::DomainError(format!("{name} must be positive, got {rho}")));
            }
        }
        Ok(Self { zeta_p, rho_p, zeta_k, rho_k })
    }

    /// Same index and level on both sides.
    pub fn symmetric(zeta: T, rho: T) -> Result<Self, CostError> {
        Self::new(zeta, rho, zeta, rho)
    }
}

impl<T: Real> MismatchCost<T> for PowerCostParams<T> {
    fn cost(&self, x: T, z: T) -> T {
        mismatch_cost(self, x, z)
    }
}

/// The concave power mismatch cost; zero iff `x == z`.
pub fn mismatch_cost<T: Real>(params: &PowerCostParams<T>, x: T, z: T) -> T {
    if z >= x {
        params.rho_p * (z - x).powf(params.zeta_p)
    } else {
        params.rho_k * (x - z).powf(params.zeta_k)
    }
}

/// Microfoundation primitives: investment-cost schedules
/// `Psi(gamma) = (B / eta) * gamma^(-eta)` on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechnologyPrimitives<T: Real> {
    pub b_p: T,
    pub eta_p: T,
    pub b_k: T,
    pub eta_k: T,
}

impl<T: Real> TechnologyPrimitives<T> {
    /// Validated constructor; all primitives must be strictly positive.
    pub fn new(b_p: T, eta_p: T, b_k: T, eta_k: T) -> Result<Self, CostError> {
        for (name, v) in [("B_p", b_p), ("eta_p", eta_p), ("B_k", b_k), ("eta_k", eta_k)] {
            if !(v > T::zero()) {
                return Err(CostError::DomainError(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { b_p, eta_p, b_k, eta_k })
    }
}

/// Maps investment primitives to the closed-form power cost:
/// `zeta = eta / (1 + eta)` and `rho = B^(1/(1+eta)) / zeta` on each side.
pub fn power_params_from_primitives<T: Real>(
    t: &TechnologyPrimitives<T>,
) -> Result<PowerCostParams<T>, CostError> {
    let side = |b: T, eta: T| {
        let zeta = eta / (T::one() + eta);
        let rho = b.powf(T::one() / (T::one() + eta)) / zeta;
        (zeta, rho)
    };
    let (zeta_p, rho_p) = side(t.b_p, t.eta_p);
    let (zeta_k, rho_k) = side(t.b_k, t.eta_k);
    PowerCostParams::new(zeta_p, rho_p, zeta_k, rho_k)
}

/// First-order-condition investment level and its fixed cost for a mismatched
/// pair: `gamma = (|z - x| / B)^(-1/(1+eta))`, `Psi(gamma) = (B/eta) gamma^(-eta)`.
///
/// Errors with [`CostError::InvestmentUndefined`] when `x == z`.
pub fn optimal_investment<T: Real>(
    t: &TechnologyPrimitives<T>,
    x: T,
    z: T,
) -> Result<(T, T), CostError> {
    if x == z {
        return Err(CostError::InvestmentUndefined(format!("{x}")));
    }
    let (d, b, eta) = if z > x { (z - x, t.b_p, t.eta_p) } else { (x - z, t.b_k, t.eta_k) };
    let gamma = (d / b).powf(-T::one() / (T::one() + eta));
    let fixed = b / eta * gamma.powf(-eta);
    Ok((gamma, fixed))
}

/// A tabulated real function with linear interpolation between knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedFn<T: Real> {
    points: Vec<(T, T)>,
}

impl<T: Real> TabulatedFn<T> {
    /// Builds from `(input, value)` knots; inputs must be strictly increasing
    /// after sorting (no duplicates) and at least one knot is required.
    pub fn new(points: Vec<(T, T)>) -> Result<Self, CostError> {
        if points.is_empty() {
            return Err(CostError::DomainError("tabulated function needs at least one knot".into()));
        }
        let mut points = points;
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(CostError::DomainError("duplicate knot in tabulated function".into()));
        }
        Ok(Self { points })
    }

    /// A constant function on `[lo, hi]`.
    pub fn constant(value: T, lo: T, hi: T) -> Self {
        if lo == hi {
            Self { points: vec![(lo, value)] }
        } else {
            Self { points: vec![(lo, value), (hi, value)] }
        }
    }

    /// The identity on `[lo, hi]`.
    pub fn identity(lo: T, hi: T) -> Self {
        Self { points: vec![(lo, lo), (hi, hi)] }
    }

    /// The `(input, value)` knots in increasing input order.
    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// True if values are nondecreasing in the input.
    pub fn is_nondecreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    /// Linear interpolation; errors outside the knot range.
    pub fn eval(&self, x: T) -> Result<T, CostError> {
        let (lo, hi) = (self.points[0].0, self.points[self.points.len() - 1].0);
        if x < lo || x > hi {
            return Err(CostError::DomainError(format!("{x} outside tabulated range [{lo}, {hi}]")));
        }
        let i = self.points.partition_point(|&(t, _)| t <= x);
        if i == 0 {
            return Ok(self.points[0].1);
        }
        if i == self.points.len() {
            return Ok(self.points[i - 1].1);
        }
        let (x0, y0) = self.points[i - 1];
        let (x1, y1) = self.points[i];
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// Investment-cost schedule for the Legendre cost: a tabulated curve or an
/// arbitrary callable (callables cannot be serialized; build them via
/// [`LegendreCost::from_fn`]).
#[derive(Clone)]
pub enum PsiFn<T: Real> {
    Table(TabulatedFn<T>),
    Callable(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> PsiFn<T> {
    fn eval(&self, gamma: T) -> Result<T, CostError> {
        match self {
            PsiFn::Table(t) => t.eval(gamma),
            PsiFn::Callable(f) => Ok(f(gamma)),
        }
    }
}

impl<T: Real> fmt::Debug for PsiFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiFn::Table(t) => f.debug_tuple("Table").field(&t.points().len()).finish(),
            PsiFn::Callable(_) => f.write_str("Callable"),
        }
    }
}

/// Table-driven cost of mismatch `C(d) = min_{gamma >= 0} gamma * d + Psi(gamma)`
/// for a strictly convex, strictly decreasing investment cost `Psi`.
///
/// The inner minimization runs bracketing plus golden-section search over
/// `[gamma_lo, gamma_hi]` to tolerance `tol` on `gamma`. By convention
/// `C(0) = 0` (the infimum of `Psi` is taken to be 0 at large `gamma`).
#[derive(Debug, Clone)]
pub struct LegendreCost<T: Real> {
    psi: PsiFn<T>,
    gamma_lo: T,
    gamma_hi: T,
    tol: T,
}

impl<T: Real> LegendreCost<T> {
    /// Validated constructor: samples `Psi` on the search interval and rejects
    /// schedules whose first differences are not negative or whose second
    /// differences are not positive.
    pub fn new(psi: PsiFn<T>, gamma_lo: T, gamma_hi: T, tol: T) -> Result<Self, CostError> {
        if !(gamma_lo > T::zero() && gamma_hi > gamma_lo) {
            return Err(CostError::DomainError(format!(
                "need 0 < gamma_lo < gamma_hi, got [{gamma_lo}, {gamma_hi}]"
            )));
        }
        if !(tol > T::zero()) {
            return Err(CostError::DomainError(format!("tolerance must be positive, got {tol}")));
        }
        let this = Self { psi, gamma_lo, gamma_hi, tol };
        this.validate_convexity()?;
        Ok(this)
    }

    /// Builds from an arbitrary closure with the default tolerance `1e-10`.
    pub fn from_fn<F>(psi: F, gamma_lo: T, gamma_hi: T) -> Result<Self, CostError>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self::new(PsiFn::Callable(Arc::new(psi)), gamma_lo, gamma_hi, lit(1e-10))
    }

    fn validate_convexity(&self) -> Result<(), CostError> {
        const SAMPLES: usize = 64;
        let step = (self.gamma_hi - self.gamma_lo) / lit(SAMPLES as f64);
        let mut vals = Vec::with_capacity(SAMPLES + 1);
        for i in 0..=SAMPLES {
            let g = self.gamma_lo + step * lit(i as f64);
            vals.push(self.psi.eval(g)?);
        }
        for w in vals.windows(2) {
            if !(w[1] < w[0]) {
                return Err(CostError::InvalidCost("Psi is not strictly decreasing".into()));
            }
        }
        for w in vals.windows(3) {
            if !(w[2] - w[1] > w[1] - w[0]) {
                return Err(CostError::InvalidCost("Psi is not strictly convex".into()));
            }
        }
        Ok(())
    }

    /// Evaluates `C(d)`; see [`legendre_cost`].
    pub fn eval(&self, d: T) -> Result<T, CostError> {
        legendre_cost(self, d)
    }
}

/// `C(d) = min_{gamma >= 0} gamma * d + Psi(gamma)` by golden-section search;
/// `C(0) = 0` by convention. Errors on negative `d`.
pub fn legendre_cost<T: Real>(l: &LegendreCost<T>, d: T) -> Result<T, CostError> {
    if d < T::zero() {
        return Err(CostError::DomainError(format!("mismatch distance must be >= 0, got {d}")));
    }
    if d == T::zero() {
        return Ok(T::zero());
    }
    let f = |g: T| -> Result<T, CostError> { Ok(g * d + l.psi.eval(g)?) };
    let inv_phi: T = lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (l.gamma_lo, l.gamma_hi);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fe = f(e)?;
    while b - a > l.tol {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = f(e)?;
        }
    }
    let mid = (a + b) / lit(2.0);
    // The minimizer may also sit at an interval endpoint.
    let mut best = f(mid)?;
    for g in [l.gamma_lo, l.gamma_hi] {
        let v = f(g)?;
        if v < best {
            best = v;
        }
    }
    Ok(best)
}

/// Two-sided Legendre mismatch cost (separate schedules for under- and
/// overqualification).
#[derive(Debug, Clone)]
pub struct LegendreMismatch<T: Real> {
    pub under: LegendreCost<T>,
    pub over: LegendreCost<T>,
}

impl<T: Real> MismatchCost<T> for LegendreMismatch<T> {
    fn cost(&self, x: T, z: T) -> T {
        let r = if z >= x { self.under.eval(z - x) } else { self.over.eval(x - z) };
        // Domain errors cannot occur for d >= 0 with a validated schedule.
        r.unwrap_or_else(|e| panic!("legendre cost evaluation failed: {e}"))
    }
}

/// Cost model used by a production specification.
#[derive(Debug, Clone)]
pub enum CostModel<T: Real> {
    Power(PowerCostParams<T>),
    Legendre(LegendreMismatch<T>),
}

impl<T: Real> MismatchCost<T> for CostModel<T> {
    fn cost(&self, x: T, z: T) -> T {
        match self {
            CostModel::Power(p) => p.cost(x, z),
            CostModel::Legendre(l) => l.cost(x, z),
        }
    }
}

/// Production environment: worker output component `g`, job output component
/// `h` (both tabulated with linear interpolation), and a mismatch cost.
/// Effective output is `y(x,z) = g(x) + h(z) - c(x,z)`.
#[derive(Debug, Clone)]
pub struct ProductionSpec<T: Real> {
    pub g: TabulatedFn<T>,
    pub h: TabulatedFn<T>,
    pub cost: CostModel<T>,
}

impl<T: Real> ProductionSpec<T> {
    /// Validated constructor: `g` must be nondecreasing.
    pub fn new(g: TabulatedFn<T>, h: TabulatedFn<T>, cost: CostModel<T>) -> Result<Self, CostError> {
        if !g.is_nondecreasing() {
            return Err(CostError::DomainError("g must be nondecreasing".into()));
        }
        Ok(Self { g, h, cost })
    }

    /// Constructor without the monotonicity check (used when `g` is backed out
    /// from wage data plus a dual potential and need not be monotone).
    pub fn from_parts_unchecked(g: TabulatedFn<T>, h: TabulatedFn<T>, cost: CostModel<T>) -> Self {
        Self { g, h, cost }
    }

    /// A zero-output spec (`g = h = 0` on `[lo, hi]`) for potential-only work.
    pub fn zero(lo: T, hi: T, cost: CostModel<T>) -> Self {
        Self {
            g: TabulatedFn::constant(T::zero(), lo, hi),
            h: TabulatedFn::constant(T::zero(), lo, hi),
            cost,
        }
    }
}

/// Effective output `y(x,z) = g(x) + h(z) - c(x,z)`; errors if `x` or `z`
/// falls outside the tabulated domain of `g` or `h`.
pub fn effective_output<T: Real>(spec: &ProductionSpec<T>, x: T, z: T) -> Result<T, CostError> {
    Ok(spec.g.eval(x)? + spec.h.eval(z)? - spec.cost.cost(x, z))
}

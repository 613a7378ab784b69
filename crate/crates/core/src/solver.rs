//! Optimal assignment under concave mismatch costs.
//!
//! Within one alternating layer the optimal pairing obeys an interval Bellman
//! recursion: the leftmost point pairs with some admissible partner `k`, which
//! splits the remaining points into the inside `[i+1, k-1]` and the outside
//! `[k+1, j]`. Two equivalent recursions are implemented: a direct `O(n^3)`
//! minimization over `k` and an `O(n^2)` two-branch form. The full pipeline
//! (`solve`) combines perfect pairs, layering, and per-layer Bellman solves.
//!
//! Two shortcuts are provided for special cost regimes: `layered_positive`
//! (rank pairing within layers, optimal when the concavity index is close
//! enough to 1, see [`zeta_threshold`]) and `positive_sorting_convex` (the
//! classical positively assortative quantile coupling, optimal for costs
//! convex in the skill gap).

use std::collections::BTreeMap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::MismatchCost;
use crate::distributions::{common_component, DiscreteDistribution, DistributionError};
use crate::layering::{decompose_layers, Layer, LayeringError, Side};
use crate::{lit, Real};

/// Errors from assignment solving.
#[derive(Debug, Error)]
pub enum SolverError {
    /// A structural precondition failed (e.g. a non-alternating layer).
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Layering(#[from] LayeringError),
}

/// Which Bellman recursion `solve_layer` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Direct `O(n^3)` minimization over the leftmost point's partner.
    Simple,
    /// Two-branch `O(n^2)` recursion.
    Efficient,
}

/// A sparse assignment: `(worker skill, job skill, integer mass)` triples at a
/// common `scale`, plus the total mismatch cost `sum(mass * c(x,z)) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment<T: Real> {
    pub pairs: Vec<(T, T, u64)>,
    pub total_cost: T,
    pub scale: u64,
}

impl<T: Real> Assignment<T> {
    /// Builds an assignment, sorting pairs by `(x, z)`, merging duplicates,
    /// and computing the total cost under `cost`.
    pub fn new<C: MismatchCost<T>>(pairs: Vec<(T, T, u64)>, scale: u64, cost: &C) -> Self {
        let mut merged: BTreeMap<(OrderedFloat<f64>, OrderedFloat<f64>), (T, T, u64)> =
            BTreeMap::new();
        for (x, z, m) in pairs {
            if m == 0 {
                continue;
            }
            let key = (
                OrderedFloat(x.to_f64().expect("skill fits f64")),
                OrderedFloat(z.to_f64().expect("skill fits f64")),
            );
            merged.entry(key).and_modify(|e| e.2 += m).or_insert((x, z, m));
        }
        let pairs: Vec<(T, T, u64)> = merged.into_values().collect();
        let mut total = T::zero();
        for &(x, z, m) in &pairs {
            total = total + T::from(m).unwrap() * cost.cost(x, z);
        }
        let total_cost = total / T::from(scale).unwrap();
        Self { pairs, total_cost, scale }
    }

    /// The worker marginal of the assignment.
    pub fn worker_marginal(&self) -> DiscreteDistribution<T> {
        let atoms = self.pairs.iter().map(|&(x, _, m)| (x, m)).collect();
        DiscreteDistribution::new(atoms, self.scale).expect("pairs have finite skills")
    }

    /// The job marginal of the assignment.
    pub fn job_marginal(&self) -> DiscreteDistribution<T> {
        let atoms = self.pairs.iter().map(|&(_, z, m)| (z, m)).collect();
        DiscreteDistribution::new(atoms, self.scale).expect("pairs have finite skills")
    }

    /// Total integer mass placed on the diagonal (`x == z`).
    pub fn diagonal_mass(&self) -> u64 {
        self.pairs.iter().filter(|&&(x, z, _)| x == z).map(|&(_, _, m)| m).sum()
    }

    /// True if no two positive-mass pairs have partially overlapping open
    /// intervals (every two intervals are disjoint or nested).
    pub fn is_noncrossing(&self) -> bool {
        let ivals: Vec<(T, T)> = self
            .pairs
            .iter()
            .map(|&(x, z, _)| if x <= z { (x, z) } else { (z, x) })
            .collect();
        for (a, &(lo1, hi1)) in ivals.iter().enumerate() {
            for &(lo2, hi2) in ivals.iter().skip(a + 1) {
                let crossing = (lo1 < lo2 && lo2 < hi1 && hi1 < hi2)
                    || (lo2 < lo1 && lo1 < hi2 && hi2 < hi1);
                if crossing {
                    return false;
                }
            }
        }
        true
    }
}

/// Bellman value table over point indices `1..=2n` of one layer.
///
/// `value(i, j)` is the minimal cost of assigning the points `i..=j` among
/// themselves (defined when `j - i` is odd, plus the empty-interval boundary
/// `value(i, i-1) = 0`). For the simple method, `argmin(i, j)` records the
/// partner chosen for point `i`.
#[derive(Debug, Clone)]
pub struct ValueTable<T: Real> {
    size: usize,
    v: Vec<Option<T>>,
    argmin: Vec<usize>,
}

impl<T: Real> ValueTable<T> {
    fn empty(size: usize) -> Self {
        Self { size, v: vec![None; size * size], argmin: vec![0; size * size] }
    }

    #[inline]
    fn flat(&self, i0: usize, j0: usize) -> usize {
        i0 * self.size + j0
    }

    /// Number of points in the layer (`2n`).
    pub fn size(&self) -> usize {
        self.size
    }

    /// `V_{i,j}` with 1-based endpoints; `None` if `(i, j)` is not a valid
    /// interval of this table. `value(i, i-1)` is 0.
    pub fn value(&self, i: usize, j: usize) -> Option<T> {
        if i >= 1 && j + 1 == i {
            return Some(T::zero());
        }
        if i < 1 || j > self.size || j < i {
            return None;
        }
        self.v[self.flat(i - 1, j - 1)]
    }

    /// The recorded partner of point `i` in the interval `(i, j)` (1-based;
    /// simple method only; 0 when absent).
    pub fn argmin(&self, i: usize, j: usize) -> usize {
        if i < 1 || j > self.size || j < i {
            return 0;
        }
        self.argmin[self.flat(i - 1, j - 1)]
    }

    /// The optimal value of the whole layer, `V_{1,2n}`.
    pub fn root_value(&self) -> T {
        if self.size == 0 {
            T::zero()
        } else {
            self.v[self.flat(0, self.size - 1)].expect("root interval is always computed")
        }
    }
}

/// Cost of pairing points `i` and `k` of a layer, respecting which of the two
/// is the worker.
#[inline]
fn pair_cost<T: Real, C: MismatchCost<T>>(points: &[(T, Side)], cost: &C, i: usize, k: usize) -> T {
    let (si, side_i) = points[i];
    let (sk, _) = points[k];
    match side_i {
        Side::Worker => cost.cost(si, sk),
        Side::Job => cost.cost(sk, si),
    }
}

/// Solves one alternating layer, returning a unit-mass-per-pair assignment at
/// the layer's mass and the full value table.
///
/// Both methods compute the same `V_{1,2n}`; ties are broken toward pairing
/// the leftmost point with its nearest admissible partner.
pub fn solve_layer<T: Real, C: MismatchCost<T>>(
    layer: &Layer<T>,
    cost: &C,
    method: Method,
) -> Result<(Assignment<T>, ValueTable<T>), SolverError> {
    if !layer.alternates() {
        return Err(SolverError::PreconditionViolated(format!(
            "layer must strictly alternate sides over increasing skills: {:?}",
            layer.points
        )));
    }
    let pts = &layer.points;
    let m = pts.len();
    let table = match method {
        Method::Simple => bellman_simple(pts, cost),
        Method::Efficient => bellman_efficient(pts, cost),
    };
    // Reconstruct the pairing by re-scanning partners against the table.
    let mut pairs: Vec<(T, T, u64)> = Vec::with_capacity(m / 2);
    if m > 0 {
        let mut stack = vec![(0usize, m - 1)];
        while let Some((i, j)) = stack.pop() {
            if i >= j {
                continue;
            }
            let k = match method {
                Method::Simple => table.argmin(i + 1, j + 1) - 1,
                Method::Efficient => best_partner(pts, cost, &table, i, j),
            };
            let (x, z) = match pts[i].1 {
                Side::Worker => (pts[i].0, pts[k].0),
                Side::Job => (pts[k].0, pts[i].0),
            };
            pairs.push((x, z, layer.mass));
            if k + 1 <= j {
                stack.push((k + 1, j));
            }
            if i + 1 <= k - 1 {
                stack.push((i + 1, k - 1));
            }
        }
    }
    Ok((Assignment::new(pairs, layer.mass.max(1), cost), table))
}

/// Direct recursion: `V_{i,j} = min_k c(s_i, s_k) + V_{i+1,k-1} + V_{k+1,j}`
/// over admissible partners `k = i+1, i+3, ..., j`; records the argmin.
fn bellman_simple<T: Real, C: MismatchCost<T>>(points: &[(T, Side)], cost: &C) -> ValueTable<T> {
    let m = points.len();
    let mut t = ValueTable::empty(m);
    let get = |t: &ValueTable<T>, a: usize, b: isize| -> T {
        if b < a as isize {
            T::zero()
        } else {
            t.v[a * m + b as usize].expect("subinterval computed earlier")
        }
    };
    let mut len = 2;
    while len <= m {
        for i in 0..=(m - len) {
            let j = i + len - 1;
            let mut best = T::infinity();
            let mut best_k = i + 1;
            let mut k = i + 1;
            while k <= j {
                let cand = pair_cost(points, cost, i, k)
                    + get(&t, i + 1, k as isize - 1)
                    + get(&t, k + 1, j as isize);
                if cand < best {
                    best = cand;
                    best_k = k;
                }
                k += 2;
            }
            let f = t.flat(i, j);
            t.v[f] = Some(best);
            t.argmin[f] = best_k + 1;
        }
        len += 2;
    }
    t
}

/// Two-branch recursion:
/// `V_{i,j} = min(c(s_i,s_j) + V_{i+1,j-1}, V_{i,j-2} + V_{i+2,j} - V_{i+2,j-2})`
/// with boundary values `V_{i,i-1} = 0` and `V_{i+2,i-1} = -c(s_i, s_{i+1})`.
fn bellman_efficient<T: Real, C: MismatchCost<T>>(points: &[(T, Side)], cost: &C) -> ValueTable<T> {
    let m = points.len();
    let mut t = ValueTable::empty(m);
    let get = |t: &ValueTable<T>, a: usize, b: isize| -> T {
        if b + 1 == a as isize {
            T::zero()
        } else if b + 3 == a as isize {
            -pair_cost(points, cost, (b + 1) as usize, (b + 2) as usize)
        } else {
            t.v[a * m + b as usize].expect("subinterval computed earlier")
        }
    };
    let mut len = 2;
    while len <= m {
        for i in 0..=(m - len) {
            let j = i + len - 1;
            let outer = pair_cost(points, cost, i, j) + get(&t, i + 1, j as isize - 1);
            let split = get(&t, i, j as isize - 2) + get(&t, i + 2, j as isize)
                - get(&t, i + 2, j as isize - 2);
            let f = t.flat(i, j);
            t.v[f] = Some(if outer <= split { outer } else { split });
        }
        len += 2;
    }
    t
}

/// Scans admissible partners of point `i` on `[i, j]` (0-based) against the
/// table values and returns the smallest minimizer.
fn best_partner<T: Real, C: MismatchCost<T>>(
    points: &[(T, Side)],
    cost: &C,
    table: &ValueTable<T>,
    i: usize,
    j: usize,
) -> usize {
    let m = points.len();
    let get = |a: usize, b: isize| -> T {
        if b + 1 == a as isize {
            T::zero()
        } else {
            table.v[a * m + b as usize].expect("table entry computed")
        }
    };
    let mut best = T::infinity();
    let mut best_k = i + 1;
    let mut k = i + 1;
    while k <= j {
        let cand =
            pair_cost(points, cost, i, k) + get(i + 1, k as isize - 1) + get(k + 1, j as isize);
        if cand < best {
            best = cand;
            best_k = k;
        }
        k += 2;
    }
    best_k
}

/// Full pipeline with the default (`Efficient`) within-layer method.
pub fn solve<T: Real, C: MismatchCost<T>>(
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
    cost: &C,
) -> Result<Assignment<T>, SolverError> {
    solve_with_method(f, g, cost, Method::Efficient)
}

/// Full pipeline: perfect pairs on the common component, then layer
/// decomposition of the remainders, then one Bellman solve per layer; the
/// union of all per-layer pairings (scaled by layer mass) is optimal.
pub fn solve_with_method<T: Real, C: MismatchCost<T>>(
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
    cost: &C,
    method: Method,
) -> Result<Assignment<T>, SolverError> {
    let (common, f_rem, g_rem) = common_component(f, g)?;
    let mut pairs: Vec<(T, T, u64)> =
        common.atoms().iter().map(|&(s, m)| (s, s, m)).collect();
    for layer in decompose_layers(&f_rem, &g_rem)? {
        let (a, _) = solve_layer(&layer, cost, method)?;
        pairs.extend(a.pairs.iter().copied());
    }
    Ok(Assignment::new(pairs, common.scale(), cost))
}

/// Rank pairing: perfect pairs plus, within each layer, the k-th worker to the
/// k-th job in skill order. Optimal whenever the cost's concavity index is at
/// least [`zeta_threshold`] for the instance.
pub fn layered_positive<T: Real, C: MismatchCost<T>>(
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
    cost: &C,
) -> Result<Assignment<T>, SolverError> {
    let (common, f_rem, g_rem) = common_component(f, g)?;
    let mut pairs: Vec<(T, T, u64)> =
        common.atoms().iter().map(|&(s, m)| (s, s, m)).collect();
    for layer in decompose_layers(&f_rem, &g_rem)? {
        let workers: Vec<T> =
            layer.points.iter().filter(|p| p.1 == Side::Worker).map(|p| p.0).collect();
        let jobs: Vec<T> =
            layer.points.iter().filter(|p| p.1 == Side::Job).map(|p| p.0).collect();
        debug_assert_eq!(workers.len(), jobs.len());
        for (&x, &z) in workers.iter().zip(jobs.iter()) {
            pairs.push((x, z, layer.mass));
        }
    }
    Ok(Assignment::new(pairs, common.scale(), cost))
}

/// The smallest concavity index `zeta_bar` (bisection tolerance `1e-6`) such
/// that `2^(1-zeta) (D' - d')^zeta <= d'^zeta + D'^zeta` holds for every pair
/// of realized pairwise support distances `d' <= D'` with `D' - d'` exceeding
/// the smallest gap. Rank pairing within layers is optimal for any cost index
/// at or above this threshold. Returns 0 when the condition is vacuous.
pub fn zeta_threshold<T: Real>(
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
) -> T {
    let mut skills: Vec<T> = f.support().chain(g.support()).collect();
    skills.sort_by(|a, b| a.partial_cmp(b).unwrap());
    skills.dedup();
    if skills.len() < 2 {
        return T::zero();
    }
    let mut dists: Vec<T> = Vec::new();
    for (i, &a) in skills.iter().enumerate() {
        for &b in skills.iter().skip(i + 1) {
            dists.push(b - a);
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dists.dedup();
    let delta = dists[0];
    let mut constraints: Vec<(T, T)> = Vec::new();
    for (i, &d_small) in dists.iter().enumerate() {
        for &d_large in dists.iter().skip(i) {
            if d_large - d_small > delta {
                constraints.push((d_small, d_large));
            }
        }
    }
    if constraints.is_empty() {
        return T::zero();
    }
    let two = lit::<T>(2.0);
    let holds = |zeta: T| -> bool {
        constraints.iter().all(|&(d, big)| {
            two.powf(T::one() - zeta) * (big - d).powf(zeta) <= d.powf(zeta) + big.powf(zeta)
        })
    };
    // The inequality always holds at zeta = 1; bisect down from there.
    let (mut lo, mut hi) = (T::zero(), T::one());
    let tol = lit::<T>(1e-6);
    while hi - lo > tol {
        let mid = (lo + hi) / two;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Classical positively assortative quantile coupling: the k-th unit of worker
/// mass goes to the k-th unit of job mass in skill order. Minimizes cost when
/// the mismatch cost is convex in the gap.
pub fn positive_sorting_convex<T: Real, C: MismatchCost<T>>(
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
    cost: &C,
) -> Result<Assignment<T>, SolverError> {
    let (f, g) = crate::distributions::to_common_scale(f, g)?;
    if f.total_mass() != g.total_mass() {
        return Err(SolverError::Distribution(DistributionError::MassMismatch {
            lhs: f.total_mass(),
            rhs: g.total_mass(),
            scale: f.scale(),
        }));
    }
    let mut pairs: Vec<(T, T, u64)> = Vec::new();
    let (fa, ga) = (f.atoms(), g.atoms());
    let (mut i, mut j) = (0usize, 0usize);
    let (mut fi, mut gj) = (
        fa.first().map_or(0, |a| a.1),
        ga.first().map_or(0, |a| a.1),
    );
    while i < fa.len() && j < ga.len() {
        let m = fi.min(gj);
        pairs.push((fa[i].0, ga[j].0, m));
        fi -= m;
        gj -= m;
        if fi == 0 {
            i += 1;
            fi = fa.get(i).map_or(0, |a| a.1);
        }
        if gj == 0 {
            j += 1;
            gj = ga.get(j).map_or(0, |a| a.1);
        }
    }
    Ok(Assignment::new(pairs, f.scale(), cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::PowerCostParams;
    use approx::assert_abs_diff_eq;

    fn sqrt_cost() -> PowerCostParams<f64> {
        PowerCostParams::symmetric(0.5, 1.0).unwrap()
    }

    fn dist(atoms: &[(f64, u64)], scale: u64) -> DiscreteDistribution<f64> {
        DiscreteDistribution::new(atoms.to_vec(), scale).unwrap()
    }

    fn layer(points: &[(f64, Side)], mass: u64) -> Layer<f64> {
        Layer { mass, points: points.to_vec(), level_interval: (0, mass as i64) }
    }

    #[test]
    fn four_point_layer_prefers_nested_pairs() {
        // {job 0, worker 1, job 3, worker 4}: min(c(0,1)+c(3,4), c(0,4)+c(1,3))
        // = min(2, 2 + sqrt(2)) = 2.
        let l = layer(
            &[(0.0, Side::Job), (1.0, Side::Worker), (3.0, Side::Job), (4.0, Side::Worker)],
            1,
        );
        for method in [Method::Simple, Method::Efficient] {
            let (a, t) = solve_layer(&l, &sqrt_cost(), method).unwrap();
            assert_abs_diff_eq!(t.root_value(), 2.0, epsilon = 1e-12);
            assert_eq!(a.pairs, vec![(1.0, 0.0, 1), (4.0, 3.0, 1)]);
            assert_abs_diff_eq!(a.total_cost, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_pair_layer() {
        let l = layer(&[(0.0, Side::Worker), (5.0, Side::Job)], 3);
        let (a, t) = solve_layer(&l, &sqrt_cost(), Method::Simple).unwrap();
        assert_abs_diff_eq!(t.root_value(), 5f64.sqrt(), epsilon = 1e-12);
        assert_eq!(a.pairs, vec![(0.0, 5.0, 3)]);
    }

    #[test]
    fn four_point_layer_prefers_crossing_free_negative_sort() {
        // {worker 0, job 4.5, worker 5, job 9}: optimal is {(0,9),(5,4.5)}
        // with cost 3 + sqrt(0.5), beating rank pairing sqrt(4.5) + 2.
        let l = layer(
            &[(0.0, Side::Worker), (4.5, Side::Job), (5.0, Side::Worker), (9.0, Side::Job)],
            1,
        );
        for method in [Method::Simple, Method::Efficient] {
            let (a, t) = solve_layer(&l, &sqrt_cost(), method).unwrap();
            assert_abs_diff_eq!(t.root_value(), 3.0 + 0.5f64.sqrt(), epsilon = 1e-12);
            assert_eq!(a.pairs, vec![(0.0, 9.0, 1), (5.0, 4.5, 1)]);
        }
    }

    #[test]
    fn non_alternating_layer_rejected() {
        let l = layer(&[(0.0, Side::Worker), (1.0, Side::Worker)], 1);
        assert!(matches!(
            solve_layer(&l, &sqrt_cost(), Method::Simple),
            Err(SolverError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn methods_agree_on_asymmetric_cost() {
        let cost = PowerCostParams::new(0.4, 1.3, 0.8, 0.6).unwrap();
        let l = layer(
            &[
                (0.0, Side::Job),
                (0.7, Side::Worker),
                (1.1, Side::Job),
                (2.9, Side::Worker),
                (4.0, Side::Job),
                (4.1, Side::Worker),
                (7.3, Side::Job),
                (9.0, Side::Worker),
            ],
            1,
        );
        let (a_s, t_s) = solve_layer(&l, &cost, Method::Simple).unwrap();
        let (a_e, t_e) = solve_layer(&l, &cost, Method::Efficient).unwrap();
        assert_abs_diff_eq!(t_s.root_value(), t_e.root_value(), epsilon = 1e-9);
        assert_abs_diff_eq!(a_s.total_cost, a_e.total_cost, epsilon = 1e-9);
    }

    #[test]
    fn reflecting_binomial_solution() {
        let f = dist(&[(0.0, 16), (1.0, 32), (2.0, 24), (3.0, 8), (4.0, 1)], 81);
        let g = dist(&[(0.0, 1), (1.0, 8), (2.0, 24), (3.0, 32), (4.0, 16)], 81);
        let a = solve(&f, &g, &sqrt_cost()).unwrap();
        let expected = vec![
            (0.0, 0.0, 1),
            (0.0, 4.0, 15),
            (1.0, 1.0, 8),
            (1.0, 3.0, 24),
            (2.0, 2.0, 24),
            (3.0, 3.0, 8),
            (4.0, 4.0, 1),
        ];
        assert_eq!(a.pairs, expected);
        assert_abs_diff_eq!(
            a.total_cost,
            (15.0 * 2.0 + 24.0 * 2f64.sqrt()) / 81.0,
            epsilon = 1e-12
        );
        assert!(a.is_noncrossing());
    }

    #[test]
    fn mixture_solution() {
        let f = dist(&[(0.0, 16), (1.0, 32), (2.0, 24), (3.0, 8), (4.0, 28)], 108);
        let g = dist(&[(0.0, 28), (1.0, 8), (2.0, 24), (3.0, 32), (4.0, 16)], 108);
        let a = solve(&f, &g, &sqrt_cost()).unwrap();
        let expected = vec![
            (0.0, 0.0, 16),
            (1.0, 0.0, 12),
            (1.0, 1.0, 8),
            (1.0, 3.0, 12),
            (2.0, 2.0, 24),
            (3.0, 3.0, 8),
            (4.0, 3.0, 12),
            (4.0, 4.0, 16),
        ];
        assert_eq!(a.pairs, expected);
        assert!(a.is_noncrossing());
    }

    #[test]
    fn identical_distributions_cost_zero() {
        let f = dist(&[(0.5, 3), (2.0, 7)], 10);
        let a = solve(&f, &f, &sqrt_cost()).unwrap();
        assert_eq!(a.diagonal_mass(), 10);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn total_cost_is_mass_weighted_layer_sum() {
        let f = dist(&[(0.0, 15), (1.0, 24)], 81);
        let g = dist(&[(3.0, 24), (4.0, 15)], 81);
        let a = solve(&f, &g, &sqrt_cost()).unwrap();
        let layers = decompose_layers(&f, &g).unwrap();
        let mut total = 0.0;
        for l in &layers {
            let (_, t) = solve_layer(&l, &sqrt_cost(), Method::Efficient).unwrap();
            total += l.mass as f64 * t.root_value();
        }
        assert_abs_diff_eq!(a.total_cost, total / 81.0, epsilon = 1e-12);
    }

    #[test]
    fn zeta_threshold_vacuous_cases() {
        // Two support points: only one distance, no constraint.
        let f = dist(&[(0.0, 1)], 1);
        let g = dist(&[(7.0, 1)], 1);
        assert_eq!(zeta_threshold(&f, &g), 0.0);
        // Support {0,1,2}: distances {1,2}; no pair differs by more than the
        // smallest gap.
        let f = dist(&[(0.0, 1), (2.0, 1)], 1);
        let g = dist(&[(1.0, 2)], 1);
        assert_eq!(zeta_threshold(&f, &g), 0.0);
        // Single-point support.
        let f = dist(&[(3.0, 1)], 1);
        assert_eq!(zeta_threshold(&f, &f), 0.0);
    }

    #[test]
    fn zeta_threshold_wide_support() {
        let f = dist(&[(0.0, 1), (100.0, 1)], 1);
        let g = dist(&[(1.0, 2)], 1);
        let zbar = zeta_threshold(&f, &g);
        assert!(zbar > 0.0 && zbar < 1.0);
        // At the threshold the defining inequality holds for all realized
        // distance pairs; just below it, some pair fails.
        let check = |zeta: f64| -> bool {
            let dists = [1.0f64, 99.0, 100.0];
            dists.iter().enumerate().all(|(i, &d)| {
                dists[i..].iter().all(|&big| {
                    big - d <= 1.0
                        || 2f64.powf(1.0 - zeta) * (big - d).powf(zeta)
                            <= d.powf(zeta) + big.powf(zeta)
                })
            })
        };
        assert!(check(zbar));
        assert!(!check(zbar - 1e-4));
    }

    #[test]
    fn layered_positive_matches_bellman_above_threshold() {
        let f = dist(&[(0.0, 1), (1.0, 1), (100.0, 1)], 3);
        let g = dist(&[(0.5, 1), (50.0, 1), (101.0, 1)], 3);
        let zbar = zeta_threshold(&f, &g);
        let zeta = zbar.max(0.99);
        let cost = PowerCostParams::symmetric(zeta, 1.0).unwrap();
        let lp = layered_positive(&f, &g, &cost).unwrap();
        let opt = solve(&f, &g, &cost).unwrap();
        assert_abs_diff_eq!(lp.total_cost, opt.total_cost, epsilon = 1e-9);
    }

    #[test]
    fn layered_positive_single_pair_layers_match_solver() {
        let f = dist(&[(0.0, 1)], 1);
        let g = dist(&[(5.0, 1)], 1);
        let cost = sqrt_cost();
        let lp = layered_positive(&f, &g, &cost).unwrap();
        let opt = solve(&f, &g, &cost).unwrap();
        assert_eq!(lp.pairs, opt.pairs);
    }

    #[test]
    fn convex_pam_quantile_coupling() {
        let f = dist(&[(0.0, 1), (1.0, 1)], 2);
        let g = dist(&[(0.5, 1), (2.0, 1)], 2);
        let sq = PowerCostParams::new(0.999_999, 1.0, 0.999_999, 1.0).unwrap();
        // Quantile coupling ignores the cost for pairing; use a squared cost
        // only for the total.
        let a = positive_sorting_convex(&f, &g, &sq).unwrap();
        assert_eq!(
            a.pairs.iter().map(|&(x, z, m)| (x, z, m)).collect::<Vec<_>>(),
            vec![(0.0, 0.5, 1), (1.0, 2.0, 1)]
        );
        // Identical distributions couple diagonally.
        let d = positive_sorting_convex(&f, &f, &sq).unwrap();
        assert!(d.pairs.iter().all(|&(x, z, _)| x == z));
    }

    #[test]
    fn convex_pam_never_crosses_two_points() {
        let f = dist(&[(0.0, 1), (3.0, 1)], 2);
        let g = dist(&[(1.0, 1), (4.0, 1)], 2);
        let a = positive_sorting_convex(&f, &g, &sqrt_cost()).unwrap();
        assert_eq!(a.pairs, vec![(0.0, 1.0, 1), (3.0, 4.0, 1)]);
    }

    #[test]
    fn mass_mismatch_rejected() {
        let f = dist(&[(0.0, 2)], 1);
        let g = dist(&[(1.0, 3)], 1);
        assert!(matches!(solve(&f, &g, &sqrt_cost()), Err(SolverError::Distribution(_))));
        assert!(matches!(
            positive_sorting_convex(&f, &g, &sqrt_cost()),
            Err(SolverError::Distribution(_))
        ));
    }
}

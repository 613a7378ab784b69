//! Independent verification of solver and dual outputs.
//!
//! The primal oracle recomputes the exact minimum assignment cost by brute
//! force (all permutations, small instances) or by a cubic min-cost bipartite
//! matching (medium instances), with no shared code paths with the layered
//! Bellman solver. Report-based checkers certify structural invariants of an
//! assignment and feasibility/tightness/zero-gap of a dual solution. A seeded
//! random instance generator feeds randomized trials.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{
    effective_output, CostError, MismatchCost, PowerCostParams, ProductionSpec,
};
use crate::distributions::{common_component, DiscreteDistribution};
use crate::dual::{skill_key, DualSolution};
use crate::layering::Side;
use crate::solver::Assignment;
use crate::{lit, Real};

/// Errors from the verification oracles.
#[derive(Debug, Error)]
pub enum OracleError {
    /// The instance exceeds the size limit of the requested oracle mode.
    #[error("instance with {len} units exceeds the {mode:?} limit of {limit}")]
    InstanceTooLarge { len: usize, limit: usize, mode: OracleMode },
    /// Worker and job unit lists have different lengths.
    #[error("unbalanced instance: {workers} workers vs {jobs} jobs")]
    Unbalanced { workers: usize, jobs: usize },
    /// A skill value is NaN or infinite.
    #[error("non-finite skill value")]
    NonFiniteSkill,
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Which exact algorithm the primal oracle runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Enumerate all permutations (limit: 8 units).
    Exhaustive,
    /// Shortest-augmenting-path min-cost bipartite matching (limit: 200 units).
    Matching,
}

impl OracleMode {
    /// Maximum number of units this mode accepts.
    pub fn limit(self) -> usize {
        match self {
            OracleMode::Exhaustive => 8,
            OracleMode::Matching => 200,
        }
    }
}

/// A balanced assignment instance with one entry per unit of mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitInstance<T: Real> {
    workers: Vec<T>,
    jobs: Vec<T>,
}

impl<T: Real> UnitInstance<T> {
    /// Validated constructor; sorts both sides.
    pub fn new(mut workers: Vec<T>, mut jobs: Vec<T>) -> Result<Self, OracleError> {
        if workers.len() != jobs.len() {
            return Err(OracleError::Unbalanced { workers: workers.len(), jobs: jobs.len() });
        }
        if workers.iter().chain(jobs.iter()).any(|s| !s.is_finite()) {
            return Err(OracleError::NonFiniteSkill);
        }
        workers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        jobs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { workers, jobs })
    }

    /// Expands a pair of equal-mass distributions into unit entries, one per
    /// unit of integer mass at their common scale.
    pub fn from_distributions(
        f: &DiscreteDistribution<T>,
        g: &DiscreteDistribution<T>,
    ) -> Result<Self, OracleError> {
        let expand = |d: &DiscreteDistribution<T>| -> Vec<T> {
            d.atoms()
                .iter()
                .flat_map(|&(s, m)| std::iter::repeat(s).take(m as usize))
                .collect()
        };
        Self::new(expand(f), expand(g))
    }

    /// Number of units per side.
    pub fn len(&self) -> usize {
        self.workers.len()
    }

    /// True when the instance has no units.
    pub fn is_empty(&self) -> bool {
        self.workers.is_empty()
    }

    /// Sorted worker units.
    pub fn workers(&self) -> &[T] {
        &self.workers
    }

    /// Sorted job units.
    pub fn jobs(&self) -> &[T] {
        &self.jobs
    }
}

/// Exact minimum total cost over all one-to-one pairings, together with an
/// optimal pairing given as `perm[i] = j` (worker unit `i` takes job unit `j`).
///
/// `Exhaustive` enumerates every permutation (at most 8 units); `Matching`
/// runs a shortest-augmenting-path assignment algorithm (at most 200 units).
/// Both return the exact optimum; they differ only in speed and limits.
pub fn brute_force_min_cost<T: Real, C: MismatchCost<T>>(
    inst: &UnitInstance<T>,
    cost: &C,
    mode: OracleMode,
) -> Result<(T, Vec<usize>), OracleError> {
    let n = inst.len();
    if n > mode.limit() {
        return Err(OracleError::InstanceTooLarge { len: n, limit: mode.limit(), mode });
    }
    if n == 0 {
        return Ok((T::zero(), Vec::new()));
    }
    let c: Vec<Vec<T>> = inst
        .workers
        .iter()
        .map(|&x| inst.jobs.iter().map(|&z| cost.cost(x, z)).collect())
        .collect();
    match mode {
        OracleMode::Exhaustive => Ok(exhaustive_min(&c)),
        OracleMode::Matching => Ok(matching_min(&c)),
    }
}

/// Heap's-algorithm enumeration of all permutations; keeps the first optimum.
fn exhaustive_min<T: Real>(c: &[Vec<T>]) -> (T, Vec<usize>) {
    let n = c.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let total = |p: &[usize]| -> T {
        p.iter().enumerate().fold(T::zero(), |acc, (i, &j)| acc + c[i][j])
    };
    let mut best_cost = total(&perm);
    let mut best_perm = perm.clone();
    let mut counters = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            let cur = total(&perm);
            if cur < best_cost {
                best_cost = cur;
                best_perm = perm.clone();
            }
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    (best_cost, best_perm)
}

/// Shortest-augmenting-path (Jonker-Volgenant style) min-cost assignment in
/// `O(n^3)`, with dual potentials maintained in full floating precision.
fn matching_min<T: Real>(c: &[Vec<T>]) -> (T, Vec<usize>) {
    let n = c.len();
    let inf = T::infinity();
    // 1-based with a sentinel column 0; p[j] = row matched to column j.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = c[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    let mut total = T::zero();
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
        total = total + c[p[j] - 1][j - 1];
    }
    (total, perm)
}

/// A structural defect found in an assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AssignmentFlag<T: Real> {
    /// A marginal of the assignment disagrees with the input distribution.
    MarginalMismatch { side: Side, skill: T },
    /// Two pairs' open intervals partially overlap (they cross).
    IntersectingPairs { first: (T, T), second: (T, T) },
    /// Diagonal mass is below the maximum available (the common component).
    SubMaximalDiagonal { expected: u64, actual: u64, scale: u64 },
    /// Stored total cost disagrees with an independent recomputation.
    CostMismatch { stored: T, recomputed: T },
}

/// Outcome of [`check_assignment`]; empty flag list means pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentReport<T: Real> {
    pub flags: Vec<AssignmentFlag<T>>,
}

impl<T: Real> AssignmentReport<T> {
    /// True when no defect was found.
    pub fn is_pass(&self) -> bool {
        self.flags.is_empty()
    }
}

/// True-mass comparison of two integer-scaled masses, exact in `u128`.
fn same_true_mass(m1: u64, scale1: u64, m2: u64, scale2: u64) -> bool {
    (m1 as u128) * (scale2 as u128) == (m2 as u128) * (scale1 as u128)
}

/// Certifies structure: marginals match the inputs, no two pairs cross,
/// diagonal mass is maximal, and the stored total cost recomputes.
pub fn check_assignment<T: Real, C: MismatchCost<T>>(
    assignment: &Assignment<T>,
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
    cost: &C,
) -> AssignmentReport<T> {
    let mut flags = Vec::new();

    for (side, marginal, input) in [
        (Side::Worker, assignment.worker_marginal(), f),
        (Side::Job, assignment.job_marginal(), g),
    ] {
        let mut skills: Vec<T> = marginal.support().chain(input.support()).collect();
        skills.sort_by(|a, b| a.partial_cmp(b).unwrap());
        skills.dedup_by(|a, b| a == b);
        for s in skills {
            if !same_true_mass(
                marginal.mass_at(s),
                marginal.scale(),
                input.mass_at(s),
                input.scale(),
            ) {
                flags.push(AssignmentFlag::MarginalMismatch { side, skill: s });
            }
        }
    }

    let intervals: Vec<(T, T, T, T)> = assignment
        .pairs
        .iter()
        .filter(|&&(x, z, _)| x != z)
        .map(|&(x, z, _)| (x.min(z), x.max(z), x, z))
        .collect();
    'outer: for (i, a) in intervals.iter().enumerate() {
        for b in intervals.iter().skip(i + 1) {
            let partial_overlap =
                (a.0 < b.0 && b.0 < a.1 && a.1 < b.1) || (b.0 < a.0 && a.0 < b.1 && b.1 < a.1);
            if partial_overlap {
                flags.push(AssignmentFlag::IntersectingPairs {
                    first: (a.2, a.3),
                    second: (b.2, b.3),
                });
                break 'outer;
            }
        }
    }

    if let Ok((common, _, _)) = common_component(f, g) {
        let expected = common.total_mass();
        let actual = assignment.diagonal_mass();
        if !same_true_mass(actual, assignment.scale, expected, common.scale()) {
            flags.push(AssignmentFlag::SubMaximalDiagonal {
                expected,
                actual,
                scale: common.scale(),
            });
        }
    }

    let recomputed = assignment.pairs.iter().fold(T::zero(), |acc, &(x, z, m)| {
        acc + cost.cost(x, z) * lit::<T>(m as f64)
    }) / lit::<T>(assignment.scale as f64);
    let tol = lit::<T>(1e-9) * T::one().max(recomputed.abs());
    if (recomputed - assignment.total_cost).abs() > tol {
        flags.push(AssignmentFlag::CostMismatch {
            stored: assignment.total_cost,
            recomputed,
        });
    }

    AssignmentReport { flags }
}

/// Outcome of [`check_duality`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport<T: Real> {
    /// Worst `y(x,z) - w(x) - v(z)` over all skill pairs (positive = violated).
    pub worst_feasibility_violation: T,
    /// Worst `|w(x) + v(z) - y(x,z)|` over pairs carrying assignment mass.
    pub worst_slackness_violation: T,
    /// Primal value: total effective output of the assignment.
    pub primal_value: T,
    /// Dual value: wages integrated over workers plus values over jobs.
    pub dual_value: T,
    /// `|dual - primal| / max(1, |primal|)`.
    pub relative_gap: T,
}

impl<T: Real> DualityReport<T> {
    /// Pass at the given tolerance on all three certificates.
    pub fn is_pass(&self, tol: T) -> bool {
        self.worst_feasibility_violation <= tol
            && self.worst_slackness_violation <= tol
            && self.relative_gap <= tol
    }
}

/// Certifies a dual solution against an assignment: `w(x) + v(z) >= y(x,z)`
/// on every pair of known skills, equality on pairs carrying mass, and a zero
/// primal-dual gap (all up to the caller's tolerance via
/// [`DualityReport::is_pass`]).
pub fn check_duality<T: Real>(
    dualsol: &DualSolution<T>,
    assignment: &Assignment<T>,
    spec: &ProductionSpec<T>,
) -> Result<DualityReport<T>, OracleError> {
    let skills: Vec<T> = {
        let mut m: BTreeMap<_, T> = BTreeMap::new();
        for &(x, z, _) in &assignment.pairs {
            m.insert(skill_key(x), x);
            m.insert(skill_key(z), z);
        }
        m.into_values().collect()
    };

    let value = |map: &BTreeMap<_, T>, s: T| -> Result<T, OracleError> {
        map.get(&skill_key(s)).copied().ok_or_else(|| {
            OracleError::Cost(CostError::DomainError(format!("no dual value at skill {s}")))
        })
    };

    let mut worst_feas = T::neg_infinity();
    for &x in &skills {
        let wx = value(&dualsol.w, x)?;
        for &z in &skills {
            let vz = value(&dualsol.v, z)?;
            let y = effective_output(spec, x, z)?;
            worst_feas = worst_feas.max(y - wx - vz);
        }
    }

    let mut worst_slack = T::zero();
    let mut primal = T::zero();
    let scale = lit::<T>(assignment.scale as f64);
    for &(x, z, m) in &assignment.pairs {
        let y = effective_output(spec, x, z)?;
        let slack = (value(&dualsol.w, x)? + value(&dualsol.v, z)? - y).abs();
        worst_slack = worst_slack.max(slack);
        primal = primal + y * lit::<T>(m as f64) / scale;
    }

    let mut dual = T::zero();
    for &(x, _, m) in &assignment.pairs {
        dual = dual + value(&dualsol.w, x)? * lit::<T>(m as f64) / scale;
    }
    for &(_, z, m) in &assignment.pairs {
        dual = dual + value(&dualsol.v, z)? * lit::<T>(m as f64) / scale;
    }

    Ok(DualityReport {
        worst_feasibility_violation: worst_feas.max(T::zero()),
        worst_slackness_violation: worst_slack,
        primal_value: primal,
        dual_value: dual,
        relative_gap: (dual - primal).abs() / T::one().max(primal.abs()),
    })
}

/// Knobs for the random instance generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    /// Units per side are drawn uniformly from `2..=max_atoms`.
    pub max_atoms: usize,
    /// Range of both concavity indices.
    pub zeta_range: (f64, f64),
    /// Range of both cost levels (drawn independently, so usually asymmetric).
    pub rho_range: (f64, f64),
    /// Probability that a skill is snapped to the integer grid, creating
    /// duplicated skills and perfect pairs.
    pub grid_prob: f64,
    /// Skill range.
    pub skill_range: (f64, f64),
}

impl Default for TrialParams {
    fn default() -> Self {
        Self {
            max_atoms: 12,
            zeta_range: (0.3, 0.95),
            rho_range: (0.5, 2.0),
            grid_prob: 0.3,
            skill_range: (0.0, 10.0),
        }
    }
}

/// A reproducible random trial: two equal-mass distributions and a cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialInstance<T: Real> {
    pub f: DiscreteDistribution<T>,
    pub g: DiscreteDistribution<T>,
    pub cost: PowerCostParams<T>,
}

/// Draws a random instance: `k in 2..=max_atoms` unit atoms per side (grid
/// snapping makes duplicates merge into heavier atoms and creates perfect
/// pairs), and an asymmetric concave power cost.
pub fn random_trial<T: Real, R: Rng>(rng: &mut R, params: &TrialParams) -> TrialInstance<T> {
    let k = rng.gen_range(2..=params.max_atoms.max(2));
    let (lo, hi) = params.skill_range;
    let mut draw_side = || -> DiscreteDistribution<T> {
        let mut counts: BTreeMap<u64, (T, u64)> = BTreeMap::new();
        for _ in 0..k {
            let raw = rng.gen_range(lo..hi);
            let s = if rng.gen_bool(params.grid_prob) { raw.round() } else { raw };
            let s = lit::<T>(s);
            let e = counts.entry(s.to_f64().unwrap().to_bits()).or_insert((s, 0));
            e.1 += 1;
        }
        DiscreteDistribution::new(counts.into_values().collect(), k as u64)
            .expect("generated atoms are valid")
    };
    let f = draw_side();
    let g = draw_side();
    let (zlo, zhi) = params.zeta_range;
    let (rlo, rhi) = params.rho_range;
    let cost = PowerCostParams::new(
        lit::<T>(rng.gen_range(zlo..zhi)),
        lit::<T>(rng.gen_range(rlo..rhi)),
        lit::<T>(rng.gen_range(zlo..zhi)),
        lit::<T>(rng.gen_range(rlo..rhi)),
    )
    .expect("generated cost parameters are valid");
    TrialInstance { f, g, cost }
}

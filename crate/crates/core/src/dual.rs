//! Shadow prices for an optimal assignment: a potential `phi` on skills such
//! that `phi(x) - phi(z) <= c(x, z)` for every worker skill `x` and job skill
//! `z`, with equality on every matched pair. Wages are `w = g - phi` and firm
//! values are `v = h - psi` with `psi = -phi`.
//!
//! The construction is hierarchical and local. Because pair intervals never
//! partially overlap, the off-diagonal pairs form a forest under interval
//! nesting ([`SubpairForest`]). Each pair is processed after its direct
//! subpairs: the children's local potentials are glued together with level
//! shifts `beta` solved from a system of difference constraints
//! ([`BetaSystem`]), then boundary values for the pair's own endpoints are
//! set. Finally the potential on mismatched skills is extended to perfectly
//! paired skills by cost-conjugation ([`extend_duals`]).

use std::collections::BTreeMap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostError, MismatchCost, ProductionSpec};
use crate::solver::Assignment;
use crate::{lit, Real};

/// Exact lookup key for a skill (skills are finite, so the conversion through
/// `f64` is lossless for the supported scalar types).
pub type SkillKey = OrderedFloat<f64>;

/// Converts a skill into its map key.
pub fn skill_key<T: Real>(s: T) -> SkillKey {
    OrderedFloat(s.to_f64().expect("skill fits f64"))
}

/// Errors from the dual construction.
#[derive(Debug, Error)]
pub enum DualError {
    /// The assignment has partially overlapping pair intervals, so no nesting
    /// forest (and no dual potential of this form) exists.
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    /// A state that is impossible for an optimal input assignment was reached
    /// (e.g. an infeasible level-shift system). Signals an incorrect primal
    /// assignment upstream.
    #[error("internal invariant violation: {0}")]
    InternalInvariantViolation(String),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// One off-diagonal pair and the indices of its direct subpairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubpairNode<T: Real> {
    /// Worker skill of the pair.
    pub x: T,
    /// Job skill of the pair.
    pub z: T,
    /// Direct subpairs (non-nested pairs strictly inside this pair's
    /// interval), in dictionary order of `(x, z)`.
    pub children: Vec<usize>,
}

/// The nesting forest of the off-diagonal pairs of an assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubpairForest<T: Real> {
    nodes: Vec<SubpairNode<T>>,
    roots: Vec<usize>,
}

impl<T: Real> SubpairForest<T> {
    /// All nodes; indices in `roots`/`children` refer into this slice.
    pub fn nodes(&self) -> &[SubpairNode<T>] {
        &self.nodes
    }

    /// Indices of the maximal (outermost) pairs, in dictionary order.
    pub fn roots(&self) -> &[usize] {
        &self.roots
    }
}

/// Builds the nesting forest of the off-diagonal pairs of `assignment`.
///
/// Children are the direct (non-nested) subpairs of each pair, ordered by
/// `(x, z)`; maximal pairs become roots. Fails with `InvalidAssignment` if two
/// pair intervals partially overlap.
pub fn build_subpair_forest<T: Real>(
    assignment: &Assignment<T>,
) -> Result<SubpairForest<T>, DualError> {
    let mut pairs: Vec<(T, T)> = assignment
        .pairs
        .iter()
        .filter(|&&(x, z, _)| x != z)
        .map(|&(x, z, _)| (x, z))
        .collect();
    // Interval order: by left endpoint, wider intervals first on ties, so a
    // containing interval is always seen before its contents.
    let span = |&(x, z): &(T, T)| if x <= z { (x, z) } else { (z, x) };
    pairs.sort_by(|a, b| {
        let (alo, ahi) = span(a);
        let (blo, bhi) = span(b);
        alo.partial_cmp(&blo).unwrap().then(bhi.partial_cmp(&ahi).unwrap())
    });

    let mut nodes: Vec<SubpairNode<T>> = Vec::with_capacity(pairs.len());
    let mut roots: Vec<usize> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for (x, z) in pairs {
        let (lo, hi) = if x <= z { (x, z) } else { (z, x) };
        let cur = nodes.len();
        loop {
            match stack.last() {
                None => {
                    roots.push(cur);
                    break;
                }
                Some(&top) => {
                    let (tlo, thi) = span(&(nodes[top].x, nodes[top].z));
                    if lo >= thi {
                        stack.pop();
                    } else if hi <= thi {
                        nodes[top].children.push(cur);
                        break;
                    } else {
                        return Err(DualError::InvalidAssignment(format!(
                            "pair ({x}, {z}) partially overlaps pair ({}, {}) \
                             [interval ({tlo}, {thi})]",
                            nodes[top].x, nodes[top].z
                        )));
                    }
                }
            }
        }
        stack.push(cur);
        nodes.push(SubpairNode { x, z, children: Vec::new() });
    }
    // Insertion followed the interval order, which coincides with dictionary
    // order of (x, z) for non-crossing siblings; make it explicit anyway.
    let by_dict = |nodes: &[SubpairNode<T>], &a: &usize, &b: &usize| {
        (nodes[a].x, nodes[a].z)
            .partial_cmp(&(nodes[b].x, nodes[b].z))
            .unwrap()
    };
    roots.sort_by(|a, b| by_dict(&nodes, a, b));
    for i in 0..nodes.len() {
        let mut kids = std::mem::take(&mut nodes[i].children);
        kids.sort_by(|a, b| by_dict(&nodes, a, b));
        nodes[i].children = kids;
    }
    Ok(SubpairForest { nodes, roots })
}

/// The difference-constraint system for the level shifts `beta_2..beta_p`
/// between `p` ordered subpairs, with its interval bounds and the
/// lexicographically smallest solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSystem<T: Real> {
    /// Number of subpairs.
    pub p: usize,
    /// Lower bounds on `beta_{n+1} + ... + beta_m`, keyed by `(n, m)`,
    /// `1 <= n < m <= p`.
    pub lower: BTreeMap<(usize, usize), T>,
    /// Upper bounds on the same partial sums.
    pub upper: BTreeMap<(usize, usize), T>,
    /// `beta_2, ..., beta_p` (empty when `p < 2`).
    pub solution: Vec<T>,
}

/// Solves for the lexicographically smallest `(beta_2, ..., beta_p)` subject
/// to, for all `1 <= n < m <= p` with `c_ij = c(x_i, z_j)` and index 0 the
/// enclosing pair:
///
/// `max(c00 - c0n - cm0, -cmn) + cnn <= sum_{k=n+1..m} beta_k
///   <= min(c0m + cn0 - c00, cnm) - cmm`
///
/// With no enclosing pair (`outer = None`, used to align the forest roots),
/// only the branches free of index 0 remain. Solved as a single longest-path
/// pass over the prefix sums `S_m = beta_2 + ... + beta_m` (`S_1 = 0`): the
/// pointwise-minimal feasible prefix sums are exactly the lexicographically
/// smallest betas. A positive cycle means the bound system is infeasible,
/// which cannot happen for subpairs of an optimal assignment.
pub fn solve_beta_system<T: Real, C: MismatchCost<T>>(
    outer: Option<(T, T)>,
    subpairs: &[(T, T)],
    cost: &C,
) -> Result<BetaSystem<T>, DualError> {
    let p = subpairs.len();
    let mut system = BetaSystem {
        p,
        lower: BTreeMap::new(),
        upper: BTreeMap::new(),
        solution: Vec::new(),
    };
    if p < 2 {
        return Ok(system);
    }
    let c = |i: usize, j: usize| -> T {
        let x = if i == 0 { outer.unwrap().0 } else { subpairs[i - 1].0 };
        let z = if j == 0 { outer.unwrap().1 } else { subpairs[j - 1].1 };
        cost.cost(x, z)
    };
    for n in 1..p {
        for m in (n + 1)..=p {
            let (lo, hi) = match outer {
                Some(_) => {
                    let c00 = c(0, 0);
                    let lo_a = c00 - c(0, n) - c(m, 0);
                    let lo_b = -c(m, n);
                    let hi_a = c(0, m) + c(n, 0) - c00;
                    let hi_b = c(n, m);
                    (lo_a.max(lo_b) + c(n, n), hi_a.min(hi_b) - c(m, m))
                }
                None => (c(n, n) - c(m, n), c(n, m) - c(m, m)),
            };
            system.lower.insert((n, m), lo);
            system.upper.insert((n, m), hi);
        }
    }

    // Longest path over prefix sums: S_m - S_n >= lower(n,m) is an edge
    // n -> m of weight lower(n,m); S_n - S_m >= -upper(n,m) is an edge
    // m -> n of weight -upper(n,m). d[1] = 0. Bounds that coincide
    // analytically can differ by a few ulps when computed through different
    // cost expressions, so improvements below a relative tolerance do not
    // count as relaxations (they would otherwise masquerade as a positive
    // cycle).
    let magnitude = system
        .lower
        .values()
        .chain(system.upper.values())
        .fold(T::one(), |acc, &b| acc.max(b.abs()));
    let tol = lit::<T>(1e-12) * magnitude;
    let mut d: Vec<T> = vec![T::neg_infinity(); p + 1];
    d[1] = T::zero();
    for pass in 0..=p {
        let mut changed = false;
        for (&(n, m), &lo) in &system.lower {
            if d[n].is_finite() && d[n] + lo > d[m] + tol {
                d[m] = d[n] + lo;
                changed = true;
            }
        }
        for (&(n, m), &hi) in &system.upper {
            if d[m].is_finite() && d[m] - hi > d[n] + tol {
                d[n] = d[m] - hi;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        if pass == p {
            return Err(DualError::InternalInvariantViolation(
                "level-shift bound system has a positive cycle (infeasible); \
                 the input assignment cannot be optimal"
                    .into(),
            ));
        }
    }
    // Defensive recheck of every interval bound.
    for (&(n, m), &lo) in &system.lower {
        let hi = system.upper[&(n, m)];
        let s = d[m] - d[n];
        let tol = lit::<T>(1e-9) * T::one().max(lo.abs()).max(hi.abs());
        if s < lo - tol || s > hi + tol {
            return Err(DualError::InternalInvariantViolation(format!(
                "level shift sum S_{m} - S_{n} = {s} escapes [{lo}, {hi}]"
            )));
        }
    }
    system.solution = (2..=p).map(|k| d[k] - d[k - 1]).collect();
    Ok(system)
}

/// Computes the local potential of one forest node (post-order).
fn node_potential<T: Real, C: MismatchCost<T>>(
    forest: &SubpairForest<T>,
    idx: usize,
    cost: &C,
) -> Result<BTreeMap<SkillKey, T>, DualError> {
    let node = &forest.nodes[idx];
    let (x0, z0) = (node.x, node.z);
    let c00 = cost.cost(x0, z0);
    if node.children.is_empty() {
        let mut phi = BTreeMap::new();
        phi.insert(skill_key(z0), T::zero());
        phi.insert(skill_key(x0), c00);
        return Ok(phi);
    }
    let child_pairs: Vec<(T, T)> =
        node.children.iter().map(|&c| (forest.nodes[c].x, forest.nodes[c].z)).collect();
    let child_maps: Vec<BTreeMap<SkillKey, T>> = node
        .children
        .iter()
        .map(|&c| node_potential(forest, c, cost))
        .collect::<Result<_, _>>()?;
    let beta = solve_beta_system(Some((x0, z0)), &child_pairs, cost)?.solution;
    let mut phi = shift_and_merge(&child_pairs, child_maps, &beta);

    // Boundary values of the pair's own endpoints. When a subpair shares the
    // worker skill with this pair, the potential at x0 must coincide with that
    // subpair's worker potential, which the min branch delivers; otherwise the
    // max branch keeps feasibility against every subpair's worker.
    let shares_worker = child_pairs.iter().any(|&(x, _)| x == x0);
    let phi_z0 = if shares_worker {
        let m = child_pairs
            .iter()
            .map(|&(_, z)| phi[&skill_key(z)] + cost.cost(x0, z))
            .fold(T::infinity(), T::min);
        m - c00
    } else {
        child_pairs
            .iter()
            .map(|&(x, _)| phi[&skill_key(x)] - cost.cost(x, z0))
            .fold(T::neg_infinity(), T::max)
    };
    phi.insert(skill_key(z0), phi_z0);
    phi.insert(skill_key(x0), phi_z0 + c00);
    Ok(phi)
}

/// Applies the per-child level shifts
/// `phi(s) = phi_i(s) + sum_{k=i+1..p} beta_k + phi_p(x_p) - phi_i(x_i)`
/// and merges all child maps.
fn shift_and_merge<T: Real>(
    child_pairs: &[(T, T)],
    child_maps: Vec<BTreeMap<SkillKey, T>>,
    beta: &[T],
) -> BTreeMap<SkillKey, T> {
    let p = child_pairs.len();
    let phi_p_xp = child_maps[p - 1][&skill_key(child_pairs[p - 1].0)];
    let mut merged = BTreeMap::new();
    for (i0, map) in child_maps.into_iter().enumerate() {
        // beta[j] holds beta_{j+2}; the suffix for child i (1-based) is
        // beta_{i+1} + ... + beta_p.
        let suffix = beta[i0..].iter().fold(T::zero(), |acc, &b| acc + b);
        let shift = suffix + phi_p_xp - map[&skill_key(child_pairs[i0].0)];
        for (k, val) in map {
            merged.entry(k).or_insert(val + shift);
        }
    }
    merged
}

/// The dual potential on all mismatched skills: per-root post-order
/// construction plus a cross-root alignment solved with the same level-shift
/// machinery (the roots act as subpairs of a virtual enclosing pair that
/// contributes no cost terms).
pub fn local_potentials<T: Real, C: MismatchCost<T>>(
    forest: &SubpairForest<T>,
    cost: &C,
) -> Result<BTreeMap<SkillKey, T>, DualError> {
    if forest.roots.is_empty() {
        return Ok(BTreeMap::new());
    }
    let root_pairs: Vec<(T, T)> =
        forest.roots.iter().map(|&r| (forest.nodes[r].x, forest.nodes[r].z)).collect();
    let root_maps: Vec<BTreeMap<SkillKey, T>> = forest
        .roots
        .iter()
        .map(|&r| node_potential(forest, r, cost))
        .collect::<Result<_, _>>()?;
    let beta = solve_beta_system(None, &root_pairs, cost)?.solution;
    Ok(shift_and_merge(&root_pairs, root_maps, &beta))
}

/// A complete dual solution on the union of the worker and job supports.
///
/// Invariants (certified separately by the verification oracle):
/// `w(x) + v(z) >= y(x, z)` on all skill pairs with equality on the
/// assignment's support, and the dual value equals the primal output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution<T: Real> {
    /// Cost potential on every skill.
    pub phi: BTreeMap<SkillKey, T>,
    /// `psi = -phi` on every skill.
    pub psi: BTreeMap<SkillKey, T>,
    /// Wages `w = g - phi`.
    pub w: BTreeMap<SkillKey, T>,
    /// Firm values `v = h - psi`.
    pub v: BTreeMap<SkillKey, T>,
    /// Mismatched worker skills (workers of off-diagonal pairs).
    pub mismatched_workers: Vec<T>,
    /// Mismatched job skills (jobs of off-diagonal pairs).
    pub mismatched_jobs: Vec<T>,
    /// Skills carrying only perfectly paired mass.
    pub perfectly_paired: Vec<T>,
}

impl<T: Real> DualSolution<T> {
    /// Potential at a skill (must be in the assignment's support union).
    pub fn phi_at(&self, s: T) -> Option<T> {
        self.phi.get(&skill_key(s)).copied()
    }

    /// Wage at a skill.
    pub fn w_at(&self, s: T) -> Option<T> {
        self.w.get(&skill_key(s)).copied()
    }

    /// Firm value at a skill.
    pub fn v_at(&self, s: T) -> Option<T> {
        self.v.get(&skill_key(s)).copied()
    }
}

/// Extends a potential on mismatched skills to a full dual solution.
///
/// The mismatched worker set `I` and job set `J` come from the assignment's
/// off-diagonal pairs; `K` holds skills with only diagonal mass. The input
/// potential is first replaced by its double cost-conjugate on `I` (a
/// no-worse dual choice), then chained through
/// `psi~(z) = min_{x in I} c(x,z) - phi~(x)` on `I ∪ J`,
/// `phi^(s) = min_{z in I ∪ J} c(s,z) - psi~(z)` on `I ∪ J`, and
/// `psi^(z) = min_{x in I ∪ J} c(x,z) - phi^(x)` on `J`; the final potential
/// is `phi^` on `I`, `-psi^` on `J`, and extends to `K` by
/// `phi(s) = min_{z in I ∪ J} (c(s,z) + phi(z))`. Throughout, `psi = -phi`,
/// `w = g - phi`, `v = h - psi`. With no mismatch, `phi = 0` everywhere.
pub fn extend_duals<T: Real, C: MismatchCost<T>>(
    phi_mismatched: &BTreeMap<SkillKey, T>,
    assignment: &Assignment<T>,
    spec: &ProductionSpec<T>,
    cost: &C,
) -> Result<DualSolution<T>, DualError> {
    let mut set_i: BTreeMap<SkillKey, T> = BTreeMap::new();
    let mut set_j: BTreeMap<SkillKey, T> = BTreeMap::new();
    let mut all: BTreeMap<SkillKey, T> = BTreeMap::new();
    for &(x, z, _) in &assignment.pairs {
        all.insert(skill_key(x), x);
        all.insert(skill_key(z), z);
        if x != z {
            set_i.insert(skill_key(x), x);
            set_j.insert(skill_key(z), z);
        }
    }
    let i_skills: Vec<T> = set_i.values().copied().collect();
    let j_skills: Vec<T> = set_j.values().copied().collect();
    let ij_skills: Vec<T> = {
        let mut m = set_i.clone();
        m.extend(set_j.iter().map(|(k, v)| (*k, *v)));
        m.values().copied().collect()
    };
    let k_skills: Vec<T> = all
        .iter()
        .filter(|(k, _)| !set_i.contains_key(k) && !set_j.contains_key(k))
        .map(|(_, &s)| s)
        .collect();

    let mut phi: BTreeMap<SkillKey, T> = BTreeMap::new();
    if i_skills.is_empty() {
        for (&k, _) in &all {
            phi.insert(k, T::zero());
        }
    } else {
        let min_over = |points: &[T], f: &dyn Fn(T) -> T| -> T {
            points.iter().map(|&s| f(s)).fold(T::infinity(), T::min)
        };
        // Double cost-conjugate of the input potential on I.
        let tilde0: Vec<T> = i_skills
            .iter()
            .map(|&x| {
                *phi_mismatched.get(&skill_key(x)).unwrap_or_else(|| {
                    panic!("potential missing at mismatched worker skill {x}")
                })
            })
            .collect();
        let phi_c: BTreeMap<SkillKey, T> = j_skills
            .iter()
            .map(|&z| {
                let v = i_skills
                    .iter()
                    .zip(&tilde0)
                    .map(|(&x, &t)| cost.cost(x, z) - t)
                    .fold(T::infinity(), T::min);
                (skill_key(z), v)
            })
            .collect();
        let tilde_phi: BTreeMap<SkillKey, T> = i_skills
            .iter()
            .map(|&x| {
                let v = min_over(&j_skills, &|z| cost.cost(x, z) - phi_c[&skill_key(z)]);
                (skill_key(x), v)
            })
            .collect();
        // psi~ on I ∪ J, phi^ on I ∪ J, psi^ on J.
        let tilde_psi: BTreeMap<SkillKey, T> = ij_skills
            .iter()
            .map(|&z| {
                let v = min_over(&i_skills, &|x| cost.cost(x, z) - tilde_phi[&skill_key(x)]);
                (skill_key(z), v)
            })
            .collect();
        let hat_phi: BTreeMap<SkillKey, T> = ij_skills
            .iter()
            .map(|&s| {
                let v = min_over(&ij_skills, &|z| cost.cost(s, z) - tilde_psi[&skill_key(z)]);
                (skill_key(s), v)
            })
            .collect();
        for &x in &i_skills {
            phi.insert(skill_key(x), hat_phi[&skill_key(x)]);
        }
        for &z in &j_skills {
            let hat_psi =
                min_over(&ij_skills, &|x| cost.cost(x, z) - hat_phi[&skill_key(x)]);
            phi.insert(skill_key(z), -hat_psi);
        }
        for &s in &k_skills {
            let v = min_over(&ij_skills, &|z| cost.cost(s, z) + phi[&skill_key(z)]);
            phi.insert(skill_key(s), v);
        }
    }

    let mut psi = BTreeMap::new();
    let mut w = BTreeMap::new();
    let mut v = BTreeMap::new();
    for (&k, &s) in &all {
        let p = phi[&k];
        psi.insert(k, -p);
        w.insert(k, spec.g.eval(s)? - p);
        v.insert(k, spec.h.eval(s)? + p);
    }
    Ok(DualSolution {
        phi,
        psi,
        w,
        v,
        mismatched_workers: i_skills,
        mismatched_jobs: j_skills,
        perfectly_paired: k_skills,
    })
}

/// Full dual pipeline: nesting forest, hierarchical local potential, and
/// extension to the whole support, using the production spec's cost.
pub fn dual_solution<T: Real>(
    assignment: &Assignment<T>,
    spec: &ProductionSpec<T>,
) -> Result<DualSolution<T>, DualError> {
    let forest = build_subpair_forest(assignment)?;
    let phi = local_potentials(&forest, &spec.cost)?;
    extend_duals(&phi, assignment, spec, &spec.cost)
}

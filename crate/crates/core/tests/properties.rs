//! Property-based invariants of the pipeline under randomized inputs.

use std::collections::BTreeMap;

use concave_transport::cost::{CostModel, MismatchCost, PowerCostParams, ProductionSpec};
use concave_transport::distributions::{common_component, DiscreteDistribution};
use concave_transport::dual::dual_solution;
use concave_transport::layering::{decompose_layers, Side};
use concave_transport::oracle::{
    brute_force_min_cost, check_assignment, check_duality, OracleMode, UnitInstance,
};
use concave_transport::solver::{solve, solve_with_method, Method};
use proptest::prelude::*;

/// Skills on a half-integer grid in [0, 10]: coarse enough to hit duplicated
/// skills and perfect pairs often.
fn skill() -> impl Strategy<Value = f64> {
    (0u32..=20).prop_map(|g| g as f64 / 2.0)
}

fn side(k: usize) -> impl Strategy<Value = DiscreteDistribution<f64>> {
    proptest::collection::vec(skill(), k).prop_map(move |skills| {
        let mut masses: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
        for s in skills {
            masses.entry(s.to_bits()).or_insert((s, 0)).1 += 1;
        }
        DiscreteDistribution::new(masses.into_values().collect(), k as u64).unwrap()
    })
}

fn economy() -> impl Strategy<Value = (DiscreteDistribution<f64>, DiscreteDistribution<f64>)> {
    (2usize..=8).prop_flat_map(|k| (side(k), side(k)))
}

fn power_cost() -> impl Strategy<Value = PowerCostParams<f64>> {
    (0.3f64..0.95, 0.5f64..2.0, 0.3f64..0.95, 0.5f64..2.0)
        .prop_map(|(zp, rp, zk, rk)| PowerCostParams::new(zp, rp, zk, rk).unwrap())
}

proptest! {
    /// Layers alternate strictly and, weighted by their masses, reconstruct
    /// the residual distributions exactly.
    #[test]
    fn layers_alternate_and_reconstruct((f, g) in economy()) {
        let (_, f_rem, g_rem) = common_component(&f, &g).unwrap();
        let layers = decompose_layers(&f_rem, &g_rem).unwrap();
        let mut worker_mass: BTreeMap<u64, u64> = BTreeMap::new();
        let mut job_mass: BTreeMap<u64, u64> = BTreeMap::new();
        for layer in &layers {
            prop_assert!(layer.alternates());
            for &(s, side) in &layer.points {
                let map = if side == Side::Worker { &mut worker_mass } else { &mut job_mass };
                *map.entry(s.to_bits()).or_insert(0) += layer.mass;
            }
        }
        for &(s, m) in f_rem.atoms() {
            prop_assert_eq!(worker_mass.get(&s.to_bits()).copied().unwrap_or(0), m);
        }
        for &(s, m) in g_rem.atoms() {
            prop_assert_eq!(job_mass.get(&s.to_bits()).copied().unwrap_or(0), m);
        }
    }

    /// The layered Bellman solver reproduces the exhaustive optimum.
    #[test]
    fn solver_matches_exhaustive_oracle((f, g) in economy(), cost in power_cost()) {
        let a = solve(&f, &g, &cost).unwrap();
        let inst = UnitInstance::from_distributions(&f, &g).unwrap();
        let (units, _) = brute_force_min_cost(&inst, &cost, OracleMode::Exhaustive).unwrap();
        let oracle = units / f.scale() as f64;
        prop_assert!((a.total_cost - oracle).abs() <= 1e-9,
            "solver {} vs oracle {}", a.total_cost, oracle);
    }

    /// The O(n^3) and O(n^2) within-layer recursions give the same optimum.
    #[test]
    fn simple_and_efficient_methods_agree((f, g) in economy(), cost in power_cost()) {
        let a = solve_with_method(&f, &g, &cost, Method::Simple).unwrap();
        let b = solve_with_method(&f, &g, &cost, Method::Efficient).unwrap();
        prop_assert!((a.total_cost - b.total_cost).abs() <= 1e-9);
    }

    /// Structural invariants: exact marginals, no partially overlapping pair
    /// intervals, maximal diagonal mass, and a consistent total cost.
    #[test]
    fn solver_output_is_structurally_sound((f, g) in economy(), cost in power_cost()) {
        let a = solve(&f, &g, &cost).unwrap();
        let report = check_assignment(&a, &f, &g, &cost);
        prop_assert!(report.is_pass(), "{:?}", report.flags);
        prop_assert!(a.is_noncrossing());
    }

    /// The constructed dual is feasible, tight on the support, and closes the
    /// primal-dual gap — an optimality certificate independent of the oracle.
    #[test]
    fn dual_certifies_optimality((f, g) in economy(), cost in power_cost()) {
        let a = solve(&f, &g, &cost).unwrap();
        let spec = ProductionSpec::zero(-1.0, 11.0, CostModel::Power(cost));
        let d = dual_solution(&a, &spec).unwrap();
        let report = check_duality(&d, &a, &spec).unwrap();
        prop_assert!(report.is_pass(1e-9), "{report:?}");
    }

    /// Pairwise cyclical monotonicity: no two pairs of an optimal assignment
    /// can be improved by swapping their jobs.
    #[test]
    fn optimal_pairs_are_cyclically_monotone((f, g) in economy(), cost in power_cost()) {
        let a = solve(&f, &g, &cost).unwrap();
        for (i, &(x1, z1, _)) in a.pairs.iter().enumerate() {
            for &(x2, z2, _) in a.pairs.iter().skip(i + 1) {
                let kept = cost.cost(x1, z1) + cost.cost(x2, z2);
                let swapped = cost.cost(x1, z2) + cost.cost(x2, z1);
                prop_assert!(kept <= swapped + 1e-9,
                    "swap of ({x1},{z1}) and ({x2},{z2}) improves: {kept} > {swapped}");
            }
        }
    }

    /// Locality: the restriction of an optimal assignment to the interval of
    /// any of its pairs is optimal for the restricted sub-economy.
    #[test]
    fn restriction_to_a_pair_interval_stays_optimal((f, g) in economy(), cost in power_cost()) {
        let a = solve(&f, &g, &cost).unwrap();
        for &(x0, z0, _) in &a.pairs {
            let (lo, hi) = (x0.min(z0), x0.max(z0));
            let mut fs: Vec<(f64, u64)> = Vec::new();
            let mut gs: Vec<(f64, u64)> = Vec::new();
            let mut inside_cost = 0.0;
            for &(x, z, m) in &a.pairs {
                if x.min(z) >= lo && x.max(z) <= hi {
                    fs.push((x, m));
                    gs.push((z, m));
                    inside_cost += cost.cost(x, z) * m as f64;
                }
            }
            let merge = |mut v: Vec<(f64, u64)>| {
                v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let mut out: Vec<(f64, u64)> = Vec::new();
                for (s, m) in v {
                    match out.last_mut() {
                        Some(last) if last.0 == s => last.1 += m,
                        _ => out.push((s, m)),
                    }
                }
                out
            };
            let scale = a.scale;
            let f_sub = DiscreteDistribution::new(merge(fs), scale).unwrap();
            let g_sub = DiscreteDistribution::new(merge(gs), scale).unwrap();
            let sub = solve(&f_sub, &g_sub, &cost).unwrap();
            prop_assert!((sub.total_cost - inside_cost / scale as f64).abs() <= 1e-9,
                "restriction to [{lo},{hi}] improvable: {} < {}",
                sub.total_cost, inside_cost / scale as f64);
        }
    }

    /// The concave power mismatch cost obeys the triangle inequality, also
    /// with asymmetric parameters.
    #[test]
    fn mismatch_cost_triangle_inequality(
        x in -10.0f64..10.0,
        y in -10.0f64..10.0,
        z in -10.0f64..10.0,
        cost in power_cost(),
    ) {
        let direct = cost.cost(x, z);
        let via = cost.cost(x, y) + cost.cost(y, z);
        prop_assert!(direct <= via + 1e-12, "c({x},{z}) = {direct} > {via}");
    }
}


//! Synthetic economies, wage calibration, and within-job wage dispersion.
//!
//! Generators produce exact integer-mass worker/job distributions (binomial
//! families and piecewise-uniform grids). A wage curve maps worker rank to a
//! wage level; calibrating `g = wage + phi` makes the equilibrium wage
//! `w = g - phi` reproduce that curve exactly. The dispersion report groups
//! assigned workers by job skill and measures within-job log-wage moments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostError, CostModel, PowerCostParams, ProductionSpec, TabulatedFn};
use crate::distributions::{DiscreteDistribution, DistributionError};
use crate::dual::{dual_solution, skill_key, DualError, DualSolution, SkillKey};
use crate::solver::{solve, Assignment, SolverError};
use crate::{lit, Real};

/// Errors from fixture generation, calibration, and reporting.
#[derive(Debug, Error)]
pub enum QuantError {
    /// Invalid generator parameters.
    #[error("invalid parameter: {0}")]
    ParamError(String),
    /// Invalid wage calibration input.
    #[error("calibration error: {0}")]
    CalibrationError(String),
    /// A wage needed for a log-wage moment is missing or non-positive.
    #[error("invalid wage at skill {skill}: {reason}")]
    InvalidWage { skill: f64, reason: String },
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// A complete synthetic economy: distributions plus production environment.
#[derive(Debug, Clone)]
pub struct EconomyFixture<T: Real> {
    pub f: DiscreteDistribution<T>,
    pub g: DiscreteDistribution<T>,
    pub spec: ProductionSpec<T>,
    pub label: String,
}

impl<T: Real> EconomyFixture<T> {
    /// Validated constructor: equal total mass and a production spec whose
    /// tabulated components cover the full skill support.
    pub fn new(
        f: DiscreteDistribution<T>,
        g: DiscreteDistribution<T>,
        spec: ProductionSpec<T>,
        label: impl Into<String>,
    ) -> Result<Self, QuantError> {
        let lhs = (f.total_mass() as u128) * (g.scale() as u128);
        let rhs = (g.total_mass() as u128) * (f.scale() as u128);
        if lhs != rhs {
            return Err(QuantError::ParamError(
                "worker and job distributions must carry equal total mass".into(),
            ));
        }
        for s in f.support().chain(g.support()) {
            spec.g.eval(s)?;
            spec.h.eval(s)?;
        }
        Ok(Self { f, g, spec, label: label.into() })
    }
}

/// Built-in distribution families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DistributionKind {
    /// Workers binomial `B(n, p)`, jobs the reflected `B(n, 1-p)`, with
    /// rational `p = p_num / p_den` and exact masses at scale `p_den^n`.
    ReflectingBinomial { n: u32, p_num: u64, p_den: u64 },
    /// Workers a `mix_ratio.0 : mix_ratio.1` mixture of `B(n, p)` and a point
    /// mass at skill `n` (a degenerate binomial with success probability 1);
    /// jobs the reflection. Scale `(mix_ratio.0 + mix_ratio.1) * p_den^n`.
    BinomialMixture { n: u32, p_num: u64, p_den: u64, mix_ratio: (u64, u64) },
    /// Unit atoms at every integer of each inclusive range; both sides must
    /// list the same total number of atoms.
    PiecewiseUniform { worker_ranges: Vec<(i64, i64)>, job_ranges: Vec<(i64, i64)> },
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn checked_u64(v: u128, what: &str) -> Result<u64, QuantError> {
    u64::try_from(v).map_err(|_| QuantError::ParamError(format!("{what} overflows u64")))
}

/// Exact binomial masses `C(n,i) p_num^i (p_den - p_num)^(n-i)` for
/// `i = 0..=n`, summing to `p_den^n`.
fn binomial_masses(n: u32, p_num: u64, p_den: u64) -> Result<Vec<u64>, QuantError> {
    if p_den == 0 || p_num == 0 || p_num >= p_den {
        return Err(QuantError::ParamError(format!(
            "p = {p_num}/{p_den} must lie strictly in (0,1)"
        )));
    }
    let q = (p_den - p_num) as u128;
    let p = p_num as u128;
    let mut masses = Vec::with_capacity(n as usize + 1);
    // Running binomial coefficient C(n, i).
    let mut c: u128 = 1;
    for i in 0..=n {
        if i > 0 {
            c = c * (n - i + 1) as u128 / i as u128;
        }
        let m = c
            .checked_mul(p.pow(i))
            .and_then(|v| v.checked_mul(q.pow(n - i)))
            .ok_or_else(|| QuantError::ParamError("binomial mass overflows".into()))?;
        masses.push(checked_u64(m, "binomial mass")?);
    }
    Ok(masses)
}

fn atoms_from_masses<T: Real>(masses: &[u64]) -> Vec<(T, u64)> {
    masses
        .iter()
        .enumerate()
        .filter(|&(_, &m)| m > 0)
        .map(|(i, &m)| (lit::<T>(i as f64), m))
        .collect()
}

fn unit_grid_atoms<T: Real>(ranges: &[(i64, i64)]) -> Result<Vec<(T, u64)>, QuantError> {
    let mut masses: BTreeMap<i64, u64> = BTreeMap::new();
    for &(lo, hi) in ranges {
        if lo > hi {
            return Err(QuantError::ParamError(format!("empty range [{lo}, {hi}]")));
        }
        for s in lo..=hi {
            *masses.entry(s).or_insert(0) += 1;
        }
    }
    Ok(masses.into_iter().map(|(s, m)| (lit::<T>(s as f64), m)).collect())
}

/// Generates the worker and job distributions of a built-in family.
pub fn gen_distribution<T: Real>(
    kind: &DistributionKind,
) -> Result<(DiscreteDistribution<T>, DiscreteDistribution<T>), QuantError> {
    match kind {
        DistributionKind::ReflectingBinomial { n, p_num, p_den } => {
            let masses = binomial_masses(*n, *p_num, *p_den)?;
            let scale = checked_u64((*p_den as u128).pow(*n), "scale")?;
            let reflected: Vec<u64> = masses.iter().rev().copied().collect();
            Ok((
                DiscreteDistribution::new(atoms_from_masses(&masses), scale)?,
                DiscreteDistribution::new(atoms_from_masses(&reflected), scale)?,
            ))
        }
        DistributionKind::BinomialMixture { n, p_num, p_den, mix_ratio } => {
            let (a, b) = *mix_ratio;
            if a == 0 || b == 0 {
                return Err(QuantError::ParamError("mixture ratio parts must be positive".into()));
            }
            let base = binomial_masses(*n, *p_num, *p_den)?;
            let den_n = (*p_den as u128).pow(*n);
            let scale = checked_u64(den_n * (a + b) as u128, "scale")?;
            let point = checked_u64(den_n * b as u128, "point mass")?;
            let mut workers: Vec<u64> =
                base.iter().map(|&m| m * a).collect::<Vec<_>>();
            *workers.last_mut().unwrap() += point;
            let jobs: Vec<u64> = workers.iter().rev().copied().collect();
            // Reduce to the minimal exact scale shared by both sides.
            let g = workers.iter().fold(scale, |acc, &m| gcd(acc, m));
            let workers: Vec<u64> = workers.iter().map(|&m| m / g).collect();
            let jobs: Vec<u64> = jobs.iter().map(|&m| m / g).collect();
            Ok((
                DiscreteDistribution::new(atoms_from_masses(&workers), scale / g)?,
                DiscreteDistribution::new(atoms_from_masses(&jobs), scale / g)?,
            ))
        }
        DistributionKind::PiecewiseUniform { worker_ranges, job_ranges } => {
            let w = unit_grid_atoms::<T>(worker_ranges)?;
            let j = unit_grid_atoms::<T>(job_ranges)?;
            let total: u64 = w.iter().map(|a| a.1).sum();
            let total_j: u64 = j.iter().map(|a| a.1).sum();
            if total != total_j {
                return Err(QuantError::ParamError(format!(
                    "sides carry different total mass: {total} vs {total_j}"
                )));
            }
            Ok((DiscreteDistribution::new(w, total)?, DiscreteDistribution::new(j, total)?))
        }
    }
}

/// Builds the rank-to-wage curve from `(rank, wage)` percentile anchors by
/// monotone linear interpolation. A single anchor yields a constant curve.
pub fn calibrate_g<T: Real>(wage_percentiles: &[(T, T)]) -> Result<TabulatedFn<T>, QuantError> {
    if wage_percentiles.is_empty() {
        return Err(QuantError::CalibrationError("no percentile anchors given".into()));
    }
    for w in wage_percentiles.windows(2) {
        if !(w[0].0 < w[1].0) {
            return Err(QuantError::CalibrationError("ranks must be strictly increasing".into()));
        }
        if !(w[0].1 <= w[1].1) {
            return Err(QuantError::CalibrationError("wages must be sorted by rank".into()));
        }
    }
    for &(r, w) in wage_percentiles {
        if !(r >= T::zero() && r <= T::one()) {
            return Err(QuantError::CalibrationError(format!("rank {r} outside [0,1]")));
        }
        if !(w > T::zero()) {
            return Err(QuantError::CalibrationError(format!("wage {w} must be positive")));
        }
    }
    if wage_percentiles.len() == 1 {
        return Ok(TabulatedFn::constant(wage_percentiles[0].1, T::zero(), T::one()));
    }
    Ok(TabulatedFn::new(wage_percentiles.to_vec())?)
}

/// Worker rank of a skill: total worker mass strictly below it, as a share.
pub fn worker_rank<T: Real>(f: &DiscreteDistribution<T>, s: T) -> T {
    let below: u64 = f.atoms().iter().filter(|&&(x, _)| x < s).map(|&(_, m)| m).sum();
    lit::<T>(below as f64) / lit::<T>(f.total_mass() as f64)
}

/// Default wage anchors: lowest wage 16, median 47 (levels in thousands),
/// extended linearly to 78 at the top rank.
pub fn default_wage_anchors<T: Real>() -> Vec<(T, T)> {
    vec![
        (T::zero(), lit::<T>(16.0)),
        (lit::<T>(0.5), lit::<T>(47.0)),
        (T::one(), lit::<T>(78.0)),
    ]
}

/// Within-job log-wage moments for one job skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobDispersion<T: Real> {
    pub z: T,
    pub mean_log_wage: T,
    pub var_log_wage: T,
    pub mean_abs_dev_log_wage: T,
    pub employment_share: T,
}

/// A segment of jobs by mean-wage rank, with optional data baselines for the
/// explained-share ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSegment<T: Real> {
    pub label: String,
    /// Inclusive lower bound on the job's mean-wage rank.
    pub lo: T,
    /// Exclusive upper bound (inclusive when equal to 1).
    pub hi: T,
    /// Data within-job log-wage variance, if available.
    pub data_var: Option<T>,
    /// Data within-job mean absolute log-wage deviation, if available.
    pub data_abs_dev: Option<T>,
}

/// Model moments per segment, plus explained shares when data was supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDispersion<T: Real> {
    pub label: String,
    pub model_var: T,
    pub model_abs_dev: T,
    /// `model_var / data_var` (variance-ratio explained share).
    pub explained_sq: Option<T>,
    /// `model_abs_dev / data_abs_dev` (absolute-deviation-ratio share).
    pub explained_abs: Option<T>,
}

/// Within-job wage dispersion of an assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport<T: Real> {
    pub per_job: Vec<JobDispersion<T>>,
    pub segments: Vec<SegmentDispersion<T>>,
}

/// Dispersion report with worker wages read from a dual solution
/// (`w = g - phi`).
pub fn dispersion_report<T: Real>(
    _economy: &EconomyFixture<T>,
    assignment: &Assignment<T>,
    dualsol: &DualSolution<T>,
    segments: &[RankSegment<T>],
) -> Result<DispersionReport<T>, QuantError> {
    dispersion_report_from_wages(assignment, &dualsol.w, segments)
}

/// Dispersion report with an explicit worker-skill-to-wage map (used for
/// comparator models that carry no dual solution).
pub fn dispersion_report_from_wages<T: Real>(
    assignment: &Assignment<T>,
    wages: &BTreeMap<SkillKey, T>,
    segments: &[RankSegment<T>],
) -> Result<DispersionReport<T>, QuantError> {
    // Group assigned worker mass by job skill.
    let mut by_job: BTreeMap<SkillKey, Vec<(T, u64)>> = BTreeMap::new();
    let mut total_mass: u64 = 0;
    for &(x, z, m) in &assignment.pairs {
        if m == 0 {
            continue;
        }
        by_job.entry(skill_key(z)).or_default().push((x, m));
        total_mass += m;
    }
    if total_mass == 0 {
        return Err(QuantError::ParamError("assignment carries no mass".into()));
    }

    let wage_at = |x: T| -> Result<T, QuantError> {
        let w = wages.get(&skill_key(x)).copied().ok_or_else(|| QuantError::InvalidWage {
            skill: x.to_f64().unwrap_or(f64::NAN),
            reason: "no wage defined".into(),
        })?;
        if !(w > T::zero()) {
            return Err(QuantError::InvalidWage {
                skill: x.to_f64().unwrap_or(f64::NAN),
                reason: format!("non-positive wage {w}"),
            });
        }
        Ok(w)
    };

    let mut per_job = Vec::with_capacity(by_job.len());
    for (zk, workers) in &by_job {
        let z = T::from(zk.into_inner()).expect("skill key converts back");
        let mass: u64 = workers.iter().map(|&(_, m)| m).sum();
        let wm = lit::<T>(mass as f64);
        let mut mean = T::zero();
        for &(x, m) in workers {
            mean = mean + wage_at(x)?.ln() * lit::<T>(m as f64);
        }
        mean = mean / wm;
        let (mut var, mut abs_dev) = (T::zero(), T::zero());
        for &(x, m) in workers {
            let d = wage_at(x)?.ln() - mean;
            var = var + d * d * lit::<T>(m as f64);
            abs_dev = abs_dev + d.abs() * lit::<T>(m as f64);
        }
        per_job.push(JobDispersion {
            z,
            mean_log_wage: mean,
            var_log_wage: var / wm,
            mean_abs_dev_log_wage: abs_dev / wm,
            employment_share: wm / lit::<T>(total_mass as f64),
        });
    }

    // Rank jobs by mean wage (employment-weighted midpoint percentile).
    let mut order: Vec<usize> = (0..per_job.len()).collect();
    order.sort_by(|&a, &b| {
        per_job[a].mean_log_wage.partial_cmp(&per_job[b].mean_log_wage).unwrap()
    });
    let mut ranks = vec![T::zero(); per_job.len()];
    let mut cum = T::zero();
    for &i in &order {
        let share = per_job[i].employment_share;
        ranks[i] = cum + share / lit::<T>(2.0);
        cum = cum + share;
    }

    let mut segs = Vec::with_capacity(segments.len());
    for seg in segments {
        let (mut var, mut abs_dev, mut mass) = (T::zero(), T::zero(), T::zero());
        for (i, job) in per_job.iter().enumerate() {
            let r = ranks[i];
            let inside = r >= seg.lo && (r < seg.hi || (seg.hi >= T::one() && r <= seg.hi));
            if inside {
                var = var + job.var_log_wage * job.employment_share;
                abs_dev = abs_dev + job.mean_abs_dev_log_wage * job.employment_share;
                mass = mass + job.employment_share;
            }
        }
        let (model_var, model_abs_dev) = if mass > T::zero() {
            (var / mass, abs_dev / mass)
        } else {
            (T::zero(), T::zero())
        };
        segs.push(SegmentDispersion {
            label: seg.label.clone(),
            model_var,
            model_abs_dev,
            explained_sq: seg.data_var.map(|d| model_var / d),
            explained_abs: seg.data_abs_dev.map(|d| model_abs_dev / d),
        });
    }

    Ok(DispersionReport { per_job, segments: segs })
}

/// The three-region synthetic economy with a common band, fully solved:
/// distributions, calibrated production spec, optimal assignment, and the
/// dual solution whose wages reproduce the rank-wage curve.
#[derive(Debug, Clone)]
pub struct RegionPreset<T: Real> {
    pub economy: EconomyFixture<T>,
    pub assignment: Assignment<T>,
    pub dual: DualSolution<T>,
    pub wage_curve: TabulatedFn<T>,
    /// The mismatched-only distributions (common band removed), used by
    /// one-to-one comparator models where atom-level mass collisions from the
    /// common band would otherwise create spurious multi-worker jobs.
    pub mismatched: (DiscreteDistribution<T>, DiscreteDistribution<T>),
}

/// A solved, wage-calibrated economy.
#[derive(Debug, Clone)]
pub struct CalibratedEconomy<T: Real> {
    pub economy: EconomyFixture<T>,
    pub assignment: Assignment<T>,
    pub dual: DualSolution<T>,
    pub wage_curve: TabulatedFn<T>,
}

/// Solves an economy and calibrates `g` so that equilibrium wages reproduce
/// the rank-wage curve exactly: a first potential-only dual pass backs out
/// `phi`, then `g = wage_curve(rank) + phi`, hence `w = g - phi` is the curve.
pub fn calibrated_economy<T: Real>(
    f: DiscreteDistribution<T>,
    g_dist: DiscreteDistribution<T>,
    cost: PowerCostParams<T>,
    wage_anchors: &[(T, T)],
    label: impl Into<String>,
) -> Result<CalibratedEconomy<T>, QuantError> {
    let assignment = solve(&f, &g_dist, &cost)?;

    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for s in f.support().chain(g_dist.support()) {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let (lo, hi) = (lo - T::one(), hi + T::one());
    let zero_spec = ProductionSpec::zero(lo, hi, CostModel::Power(cost));
    let potential_only = dual_solution(&assignment, &zero_spec)?;

    let wage_curve = calibrate_g(wage_anchors)?;
    let mut g_points: Vec<(T, T)> = Vec::new();
    for (&k, &phi) in &potential_only.phi {
        let s = T::from(k.into_inner()).expect("skill key converts back");
        let wage = wage_curve.eval(worker_rank(&f, s))?;
        g_points.push((s, wage + phi));
    }
    let spec = ProductionSpec::from_parts_unchecked(
        TabulatedFn::new(g_points)?,
        TabulatedFn::constant(T::zero(), lo, hi),
        CostModel::Power(cost),
    );
    let dual = dual_solution(&assignment, &spec)?;
    let economy = EconomyFixture::new(f, g_dist, spec, label)?;
    Ok(CalibratedEconomy { economy, assignment, dual, wage_curve })
}

/// Builds and solves the three-region economy:
///
/// - mismatched workers uniform on the integer grids `0..=499` and
///   `1501..=2500`, mismatched jobs on `501..=1500` and `2501..=3000`
///   (underqualification rises and falls across three symmetric regions);
/// - a common band of 250 perfectly paired workers and jobs at `750..=999`;
/// - symmetric square-root mismatch cost;
/// - `g` calibrated so wages equal the rank-wage curve: `g = wage + phi`,
///   hence `w = g - phi` is exactly the curve.
pub fn region_preset<T: Real>(wage_anchors: &[(T, T)]) -> Result<RegionPreset<T>, QuantError> {
    let kind = DistributionKind::PiecewiseUniform {
        worker_ranges: vec![(0, 499), (750, 999), (1501, 2500)],
        job_ranges: vec![(501, 1500), (750, 999), (2501, 3000)],
    };
    let (f, g_dist) = gen_distribution::<T>(&kind)?;
    let mismatched = gen_distribution::<T>(&DistributionKind::PiecewiseUniform {
        worker_ranges: vec![(0, 499), (1501, 2500)],
        job_ranges: vec![(501, 1500), (2501, 3000)],
    })?;

    let cost = PowerCostParams::symmetric(lit::<T>(0.5), T::one())?;
    let solved =
        calibrated_economy(f, g_dist, cost, wage_anchors, "three-region composite")?;
    Ok(RegionPreset {
        economy: solved.economy,
        assignment: solved.assignment,
        dual: solved.dual,
        wage_curve: solved.wage_curve,
        mismatched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::positive_sorting_convex;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reflecting_binomial_masses_exact() {
        let kind = DistributionKind::ReflectingBinomial { n: 4, p_num: 1, p_den: 3 };
        let (f, g) = gen_distribution::<f64>(&kind).unwrap();
        assert_eq!(f.scale(), 81);
        assert_eq!(
            f.atoms(),
            &[(0.0, 16), (1.0, 32), (2.0, 24), (3.0, 8), (4.0, 1)]
        );
        assert_eq!(
            g.atoms(),
            &[(0.0, 1), (1.0, 8), (2.0, 24), (3.0, 32), (4.0, 16)]
        );
    }

    #[test]
    fn binomial_mixture_masses_exact() {
        let kind =
            DistributionKind::BinomialMixture { n: 4, p_num: 1, p_den: 3, mix_ratio: (3, 1) };
        let (f, g) = gen_distribution::<f64>(&kind).unwrap();
        let f = f.rescaled(108).unwrap();
        let g = g.rescaled(108).unwrap();
        assert_eq!(
            f.atoms(),
            &[(0.0, 16), (1.0, 32), (2.0, 24), (3.0, 8), (4.0, 28)]
        );
        assert_eq!(
            g.atoms(),
            &[(0.0, 28), (1.0, 8), (2.0, 24), (3.0, 32), (4.0, 16)]
        );
    }

    #[test]
    fn degenerate_p_rejected() {
        for p in [(0u64, 3u64), (3, 3), (4, 3)] {
            let kind = DistributionKind::ReflectingBinomial { n: 4, p_num: p.0, p_den: p.1 };
            assert!(matches!(gen_distribution::<f64>(&kind), Err(QuantError::ParamError(_))));
        }
    }

    #[test]
    fn calibration_interpolates() {
        let curve = calibrate_g(&[(0.0, 10.0), (1.0, 20.0)]).unwrap();
        assert_abs_diff_eq!(curve.eval(0.25).unwrap(), 12.5, epsilon = 1e-12);
        let single = calibrate_g(&[(0.3, 42.0)]).unwrap();
        assert_abs_diff_eq!(single.eval(0.9).unwrap(), 42.0, epsilon = 1e-12);
        assert!(matches!(
            calibrate_g(&[(0.0, 20.0), (1.0, 10.0)]),
            Err(QuantError::CalibrationError(_))
        ));
        assert!(matches!(
            calibrate_g(&[(0.5, 10.0), (0.5, 20.0)]),
            Err(QuantError::CalibrationError(_))
        ));
    }

    #[test]
    fn region_first_region_is_rank_reversing() {
        let preset = region_preset::<f64>(&default_wage_anchors()).unwrap();
        for &(x, z, m) in &preset.assignment.pairs {
            if x != z && x < 500.0 {
                assert_eq!(z, 1000.0 - x, "worker {x} must take job {z}");
                assert_eq!(m, 1);
            }
        }
        // Every mismatched worker of the first region appears.
        let n_first = preset
            .assignment
            .pairs
            .iter()
            .filter(|&&(x, z, _)| x != z && x < 500.0)
            .count();
        assert_eq!(n_first, 500);
    }

    #[test]
    fn region_overlap_band_has_two_worker_types() {
        let preset = region_preset::<f64>(&default_wage_anchors()).unwrap();
        let mut by_job: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for &(x, z, m) in &preset.assignment.pairs {
            if m > 0 {
                by_job.entry(z.to_bits()).or_default().push(x);
            }
        }
        let workers_of = |z: f64| by_job.get(&z.to_bits()).cloned().unwrap();
        assert_eq!(workers_of(800.0).len(), 2);
        assert!(workers_of(800.0).contains(&200.0));
        assert!(workers_of(800.0).contains(&800.0));
        assert_eq!(workers_of(600.0), vec![400.0]);
    }

    #[test]
    fn region_wages_follow_rank_curve() {
        let preset = region_preset::<f64>(&default_wage_anchors()).unwrap();
        let w0 = preset.dual.w_at(0.0).unwrap();
        assert_abs_diff_eq!(w0, 16.0, epsilon = 1e-9);
        let r = worker_rank(&preset.economy.f, 200.0);
        let expected = preset.wage_curve.eval(r).unwrap();
        assert_abs_diff_eq!(preset.dual.w_at(200.0).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn region_dispersion_zero_single_type_positive_in_band() {
        let preset = region_preset::<f64>(&default_wage_anchors()).unwrap();
        let report =
            dispersion_report(&preset.economy, &preset.assignment, &preset.dual, &[]).unwrap();
        let share_sum: f64 = report.per_job.iter().map(|j| j.employment_share).sum();
        assert_abs_diff_eq!(share_sum, 1.0, epsilon = 1e-12);
        for job in &report.per_job {
            assert!(job.var_log_wage >= 0.0);
            if (750.0..1000.0).contains(&job.z) {
                assert!(job.var_log_wage > 0.0, "job {} should disperse", job.z);
            } else if job.z < 750.0 {
                assert_eq!(job.var_log_wage, 0.0, "job {} has one worker type", job.z);
            }
        }
    }

    #[test]
    fn convex_comparator_has_zero_dispersion() {
        let preset = region_preset::<f64>(&default_wage_anchors()).unwrap();
        let (fm, gm) = &preset.mismatched;
        let convex = PowerCostParams::new(2.0, 1.0, 2.0, 1.0);
        // Quadratic cost is outside the concave parameter domain; build the
        // comparator coupling directly from quantiles instead.
        assert!(convex.is_err());
        let cost = PowerCostParams::symmetric(0.5, 1.0).unwrap();
        let pam = positive_sorting_convex(fm, gm, &cost).unwrap();
        let mut wages = BTreeMap::new();
        for s in fm.support() {
            let w = preset.wage_curve.eval(worker_rank(fm, s)).unwrap();
            wages.insert(skill_key(s), w);
        }
        let report = dispersion_report_from_wages(&pam, &wages, &[]).unwrap();
        for job in &report.per_job {
            assert_eq!(job.var_log_wage, 0.0, "job {} under one-to-one sorting", job.z);
        }
    }

    #[test]
    fn segment_shares() {
        let preset = region_preset::<f64>(&default_wage_anchors()).unwrap();
        let segments = vec![
            RankSegment {
                label: "bottom".into(),
                lo: 0.0,
                hi: 0.2,
                data_var: Some(0.5),
                data_abs_dev: None,
            },
            RankSegment { label: "top".into(), lo: 0.8, hi: 1.0, data_var: None, data_abs_dev: None },
        ];
        let report =
            dispersion_report(&preset.economy, &preset.assignment, &preset.dual, &segments)
                .unwrap();
        assert_eq!(report.segments.len(), 2);
        let bottom = &report.segments[0];
        assert!(bottom.model_var >= 0.0);
        let explained = bottom.explained_sq.unwrap();
        assert_abs_diff_eq!(explained, bottom.model_var / 0.5, epsilon = 1e-15);
        assert!(report.segments[1].explained_sq.is_none());
    }
}

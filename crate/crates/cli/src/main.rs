//! `ctsort`: command-line front end for the concave-transport solver.
//!
//! Subcommands: `solve`, `dual`, `layers`, `verify`, `quant`, `example`.
//! Exit codes: 0 success, 1 validation failure (bad flags or inputs),
//! 2 internal invariant violation (the library certified its own output as
//! wrong — a bug, not a usage error).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use concave_transport::cost::{
    power_params_from_primitives, CostModel, MismatchCost, PowerCostParams, ProductionSpec,
    TabulatedFn, TechnologyPrimitives,
};
use concave_transport::distributions::DiscreteDistribution;
use concave_transport::dual::{
    build_subpair_forest, dual_solution, local_potentials, skill_key, DualError,
};
use concave_transport::layering::decompose_layers;
use concave_transport::oracle::{
    brute_force_min_cost, check_assignment, check_duality, random_trial, OracleMode, TrialInstance,
    TrialParams, UnitInstance,
};
use concave_transport::quant::{
    calibrate_g, calibrated_economy, default_wage_anchors, dispersion_report_from_wages,
    gen_distribution, region_preset, DispersionReport, DistributionKind, RankSegment,
};
use concave_transport::solver::{
    layered_positive, positive_sorting_convex, solve_with_method, Assignment, Method,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

enum CliError {
    /// Bad flags or inputs; exit code 1.
    Validation(String),
    /// The library's own certification failed; exit code 2.
    Internal(String),
}

impl CliError {
    fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<concave_transport::cost::CostError> for CliError {
    fn from(e: concave_transport::cost::CostError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<concave_transport::distributions::DistributionError> for CliError {
    fn from(e: concave_transport::distributions::DistributionError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<concave_transport::solver::SolverError> for CliError {
    fn from(e: concave_transport::solver::SolverError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<concave_transport::layering::LayeringError> for CliError {
    fn from(e: concave_transport::layering::LayeringError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DualError> for CliError {
    fn from(e: DualError) -> Self {
        match e {
            DualError::InternalInvariantViolation(_) => CliError::Internal(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<concave_transport::oracle::OracleError> for CliError {
    fn from(e: concave_transport::oracle::OracleError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<concave_transport::quant::QuantError> for CliError {
    fn from(e: concave_transport::quant::QuantError) -> Self {
        match e {
            concave_transport::quant::QuantError::Dual(d) => CliError::from(d),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("malformed JSON: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(format!("malformed CSV: {e}"))
    }
}

// ---------------------------------------------------------------------------
// Flags
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "ctsort",
    version,
    about = "One-dimensional worker/job assignment with concave mismatch costs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the assignment problem for worker and job distributions.
    Solve(SolveArgs),
    /// Recover dual potentials, wages, and firm values from an assignment.
    Dual(DualArgs),
    /// Show the layer decomposition of the residual economy.
    Layers(LayersArgs),
    /// Run randomized verification trials against the exact oracle.
    Verify(VerifyArgs),
    /// Build a synthetic economy and report within-job wage dispersion.
    Quant(QuantArgs),
    /// Print a built-in example instance and its expected output.
    Example(ExampleArgs),
}

/// Mismatch-cost parameterization: either the power-cost parameters directly
/// (`--zeta-p --rho-p --zeta-k --rho-k`) or the investment primitives
/// (`--B-p --eta-p --B-k --eta-k`), not both.
#[derive(Args, Clone)]
struct CostFlags {
    /// Underqualification concavity index, in (0,1).
    #[arg(long)]
    zeta_p: Option<f64>,
    /// Underqualification cost level, positive.
    #[arg(long)]
    rho_p: Option<f64>,
    /// Overqualification concavity index, in (0,1).
    #[arg(long)]
    zeta_k: Option<f64>,
    /// Overqualification cost level, positive.
    #[arg(long)]
    rho_k: Option<f64>,
    /// Underqualification investment level B.
    #[arg(long = "B-p")]
    b_p: Option<f64>,
    /// Underqualification investment elasticity eta.
    #[arg(long)]
    eta_p: Option<f64>,
    /// Overqualification investment level B.
    #[arg(long = "B-k")]
    b_k: Option<f64>,
    /// Overqualification investment elasticity eta.
    #[arg(long)]
    eta_k: Option<f64>,
}

impl CostFlags {
    fn params(&self) -> Result<PowerCostParams<f64>, CliError> {
        let direct = [self.zeta_p, self.rho_p, self.zeta_k, self.rho_k];
        let prim = [self.b_p, self.eta_p, self.b_k, self.eta_k];
        let d = direct.iter().filter(|v| v.is_some()).count();
        let p = prim.iter().filter(|v| v.is_some()).count();
        match (d, p) {
            (4, 0) => Ok(PowerCostParams::new(
                self.zeta_p.unwrap(),
                self.rho_p.unwrap(),
                self.zeta_k.unwrap(),
                self.rho_k.unwrap(),
            )?),
            (0, 4) => {
                let t = TechnologyPrimitives::new(
                    self.b_p.unwrap(),
                    self.eta_p.unwrap(),
                    self.b_k.unwrap(),
                    self.eta_k.unwrap(),
                )?;
                Ok(power_params_from_primitives(&t)?)
            }
            (0, 0) => Err(CliError::validation(
                "missing cost flags: give --zeta-p/--rho-p/--zeta-k/--rho-k or --B-p/--eta-p/--B-k/--eta-k",
            )),
            (4, _) | (_, 4) | (_, _) => Err(CliError::validation(
                "cost flags must form exactly one complete group: \
                 --zeta-p/--rho-p/--zeta-k/--rho-k or --B-p/--eta-p/--B-k/--eta-k",
            )),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Simple,
    Efficient,
    LayeredPositive,
    ConvexPam,
}

#[derive(Args)]
struct SolveArgs {
    /// Worker distribution CSV with a `skill,mass` header.
    #[arg(long)]
    workers: PathBuf,
    /// Job distribution CSV with a `skill,mass` header.
    #[arg(long)]
    jobs: PathBuf,
    #[command(flatten)]
    cost: CostFlags,
    /// Solution method.
    #[arg(long, value_enum, default_value = "efficient")]
    method: MethodArg,
    /// Output path for the assignment JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DualArgs {
    /// Assignment JSON produced by `solve`.
    #[arg(long)]
    assignment: PathBuf,
    #[command(flatten)]
    cost: CostFlags,
    /// Optional worker output component g as CSV with a `skill,value` header.
    #[arg(long)]
    g_csv: Option<PathBuf>,
    /// Optional job output component h as CSV with a `skill,value` header.
    #[arg(long)]
    h_csv: Option<PathBuf>,
    /// Output path for the dual JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LayersArgs {
    /// Worker distribution CSV with a `skill,mass` header.
    #[arg(long)]
    workers: PathBuf,
    /// Job distribution CSV with a `skill,mass` header.
    #[arg(long)]
    jobs: PathBuf,
    /// Output path for the layers JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of randomized trials.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Seed for the trial generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum unit atoms per side (2..=200).
    #[arg(long, default_value_t = 12)]
    max_atoms: usize,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    ReflectingBinomial,
    Mixture,
    Regions,
}

#[derive(Args)]
struct QuantArgs {
    /// Built-in economy preset.
    #[arg(long, value_enum, conflicts_with = "economy")]
    preset: Option<PresetArg>,
    /// Economy fixture JSON: `{workers, jobs, cost}` with distributions as
    /// `{atoms: [[skill, mass]], scale}`.
    #[arg(long)]
    economy: Option<PathBuf>,
    /// Wage percentile anchors CSV with a `rank,wage` header.
    #[arg(long)]
    wage_percentiles: Option<PathBuf>,
    /// Occupation binning CSV with a `skill,occupation` header; jobs sharing
    /// a label are pooled into one occupation.
    #[arg(long)]
    occupation_map: Option<PathBuf>,
    /// Output path for the plot-data CSV
    /// (`occupation_rank,mean_wage,var_log_wage,employment_share`).
    #[arg(long)]
    plot_csv: Option<PathBuf>,
    /// Output path for the report JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleName {
    ReflectingBinomial,
    Mixture,
    DualWorked,
}

#[derive(Args)]
struct ExampleArgs {
    /// Which built-in example to print.
    #[arg(long, value_enum)]
    name: ExampleName,
}

// ---------------------------------------------------------------------------
// JSON shapes
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PairJson {
    x: f64,
    z: f64,
    mass: u64,
    unit_cost: f64,
}

#[derive(Serialize, Deserialize)]
struct AssignmentJson {
    scale: u64,
    pairs: Vec<PairJson>,
    total_cost: f64,
}

impl AssignmentJson {
    fn from_assignment(a: &Assignment<f64>, cost: &impl MismatchCost<f64>) -> Self {
        AssignmentJson {
            scale: a.scale,
            pairs: a
                .pairs
                .iter()
                .map(|&(x, z, mass)| PairJson { x, z, mass, unit_cost: cost.cost(x, z) })
                .collect(),
            total_cost: a.total_cost,
        }
    }
}

#[derive(Serialize)]
struct DualJson {
    phi: BTreeMap<String, f64>,
    w: BTreeMap<String, f64>,
    v: BTreeMap<String, f64>,
    gap: f64,
}

#[derive(Serialize)]
struct LayerPointJson {
    skill: f64,
    side: concave_transport::layering::Side,
}

#[derive(Serialize)]
struct LayerJson {
    mass: u64,
    points: Vec<LayerPointJson>,
    band: [i64; 2],
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn read_distribution(path: &Path) -> Result<DiscreteDistribution<f64>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(DiscreteDistribution::from_csv(file)?)
}

fn read_table(path: &Path) -> Result<TabulatedFn<f64>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut points = Vec::new();
    for row in rdr.deserialize::<(f64, f64)>() {
        points.push(row?);
    }
    Ok(TabulatedFn::new(points)?)
}

fn emit(out: &Option<PathBuf>, payload: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut f = File::create(path)
                .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))?;
            writeln!(f, "{payload}")?;
        }
        None => println!("{payload}"),
    }
    Ok(())
}

fn skill_domain(pairs: &[(f64, f64, u64)]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(x, z, _) in pairs {
        lo = lo.min(x.min(z));
        hi = hi.max(x.max(z));
    }
    (lo - 1.0, hi + 1.0)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let f = read_distribution(&args.workers)?;
    let g = read_distribution(&args.jobs)?;
    let cost = args.cost.params()?;
    let a = match args.method {
        MethodArg::Simple => solve_with_method(&f, &g, &cost, Method::Simple)?,
        MethodArg::Efficient => solve_with_method(&f, &g, &cost, Method::Efficient)?,
        MethodArg::LayeredPositive => layered_positive(&f, &g, &cost)?,
        MethodArg::ConvexPam => positive_sorting_convex(&f, &g, &cost)?,
    };
    let json = serde_json::to_string_pretty(&AssignmentJson::from_assignment(&a, &cost))?;
    emit(&args.out, &json)
}

fn cmd_dual(args: &DualArgs) -> Result<(), CliError> {
    let file = File::open(&args.assignment).map_err(|e| {
        CliError::validation(format!("cannot read {}: {e}", args.assignment.display()))
    })?;
    let parsed: AssignmentJson = serde_json::from_reader(file)?;
    let cost = args.cost.params()?;
    let pairs: Vec<(f64, f64, u64)> =
        parsed.pairs.iter().map(|p| (p.x, p.z, p.mass)).collect();
    if parsed.scale == 0 {
        return Err(CliError::validation("assignment scale must be positive"));
    }
    let assignment = Assignment::new(pairs, parsed.scale, &cost);
    let (lo, hi) = skill_domain(&assignment.pairs);
    let g = match &args.g_csv {
        Some(p) => read_table(p)?,
        None => TabulatedFn::constant(0.0, lo, hi),
    };
    let h = match &args.h_csv {
        Some(p) => read_table(p)?,
        None => TabulatedFn::constant(0.0, lo, hi),
    };
    let spec = ProductionSpec::from_parts_unchecked(g, h, CostModel::Power(cost));
    let d = dual_solution(&assignment, &spec)?;
    let report = check_duality(&d, &assignment, &spec)?;
    if !report.is_pass(1e-9) {
        return Err(CliError::Internal(format!(
            "dual certification failed: worst feasibility violation {}, worst slackness {}, relative gap {}",
            report.worst_feasibility_violation,
            report.worst_slackness_violation,
            report.relative_gap,
        )));
    }
    let to_map = |m: &BTreeMap<concave_transport::dual::SkillKey, f64>| -> BTreeMap<String, f64> {
        m.iter().map(|(k, &v)| (format!("{}", k.into_inner()), v)).collect()
    };
    let json = serde_json::to_string_pretty(&DualJson {
        phi: to_map(&d.phi),
        w: to_map(&d.w),
        v: to_map(&d.v),
        gap: report.relative_gap,
    })?;
    emit(&args.out, &json)
}

fn cmd_layers(args: &LayersArgs) -> Result<(), CliError> {
    let f = read_distribution(&args.workers)?;
    let g = read_distribution(&args.jobs)?;
    let (_, f_rem, g_rem) = concave_transport::distributions::common_component(&f, &g)?;
    let layers = decompose_layers(&f_rem, &g_rem)?;
    let json: Vec<LayerJson> = layers
        .iter()
        .map(|l| LayerJson {
            mass: l.mass,
            points: l
                .points
                .iter()
                .map(|&(skill, side)| LayerPointJson { skill, side })
                .collect(),
            band: [l.level_interval.0, l.level_interval.1],
        })
        .collect();
    emit(&args.out, &serde_json::to_string_pretty(&json)?)
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    if !(2..=200).contains(&args.max_atoms) {
        return Err(CliError::validation("--max-atoms must lie in 2..=200"));
    }
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(format!("--threads: {e}")))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let params = TrialParams { max_atoms: args.max_atoms, ..TrialParams::default() };
    let trials: Vec<TrialInstance<f64>> =
        (0..args.trials).map(|_| random_trial(&mut rng, &params)).collect();

    let failure = trials
        .par_iter()
        .enumerate()
        .find_map_any(|(i, t)| verify_one(t).err().map(|msg| (i, msg)));
    if let Some((i, msg)) = failure {
        let instance = serde_json::to_string(&trials[i]).unwrap_or_else(|_| "<unprintable>".into());
        return Err(CliError::Internal(format!(
            "trial {i} failed: {msg}\nreproducible instance: {instance}"
        )));
    }
    println!(
        "verified {} trials (seed {}, up to {} atoms per side): all passed",
        args.trials, args.seed, args.max_atoms
    );
    Ok(())
}

fn verify_one(t: &TrialInstance<f64>) -> Result<(), String> {
    let a = concave_transport::solver::solve(&t.f, &t.g, &t.cost).map_err(|e| e.to_string())?;
    let inst = UnitInstance::from_distributions(&t.f, &t.g).map_err(|e| e.to_string())?;
    let mode = if inst.len() <= 8 { OracleMode::Exhaustive } else { OracleMode::Matching };
    let (units, _) = brute_force_min_cost(&inst, &t.cost, mode).map_err(|e| e.to_string())?;
    let oracle = units / t.f.scale() as f64;
    if (a.total_cost - oracle).abs() > 1e-9 {
        return Err(format!("solver cost {} differs from oracle {}", a.total_cost, oracle));
    }
    let report = check_assignment(&a, &t.f, &t.g, &t.cost);
    if !report.is_pass() {
        return Err(format!("structural flags: {:?}", report.flags));
    }
    let (lo, hi) = skill_domain(&a.pairs);
    let spec = ProductionSpec::zero(lo, hi, CostModel::Power(t.cost));
    let d = dual_solution(&a, &spec).map_err(|e| e.to_string())?;
    let dr = check_duality(&d, &a, &spec).map_err(|e| e.to_string())?;
    if !dr.is_pass(1e-9) {
        return Err(format!("duality certificate failed: {dr:?}"));
    }
    Ok(())
}

#[derive(Deserialize, Serialize)]
struct EconomyFile {
    workers: DiscreteDistribution<f64>,
    jobs: DiscreteDistribution<f64>,
    cost: PowerCostParams<f64>,
}

fn default_segments() -> Vec<RankSegment<f64>> {
    [("bottom", 0.0, 0.2), ("middle", 0.2, 0.8), ("top", 0.8, 1.0)]
        .into_iter()
        .map(|(label, lo, hi)| RankSegment {
            label: label.to_string(),
            lo,
            hi,
            data_var: None,
            data_abs_dev: None,
        })
        .collect()
}

fn cmd_quant(args: &QuantArgs) -> Result<(), CliError> {
    let anchors: Vec<(f64, f64)> = match &args.wage_percentiles {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
            let mut rows = Vec::new();
            for row in rdr.deserialize::<(f64, f64)>() {
                rows.push(row?);
            }
            rows
        }
        None => default_wage_anchors(),
    };
    // Check the anchors early for a clear message naming the flag.
    calibrate_g(&anchors)
        .map_err(|e| CliError::validation(format!("--wage-percentiles: {e}")))?;

    let solved = match (&args.preset, &args.economy) {
        (Some(PresetArg::Regions), None) => {
            let preset = region_preset(&anchors)?;
            concave_transport::quant::CalibratedEconomy {
                economy: preset.economy,
                assignment: preset.assignment,
                dual: preset.dual,
                wage_curve: preset.wage_curve,
            }
        }
        (Some(preset), None) => {
            let kind = match preset {
                PresetArg::ReflectingBinomial => {
                    DistributionKind::ReflectingBinomial { n: 4, p_num: 1, p_den: 3 }
                }
                PresetArg::Mixture => DistributionKind::BinomialMixture {
                    n: 4,
                    p_num: 1,
                    p_den: 3,
                    mix_ratio: (3, 1),
                },
                PresetArg::Regions => unreachable!(),
            };
            let (f, g) = gen_distribution::<f64>(&kind)?;
            let cost = PowerCostParams::symmetric(0.5, 1.0)?;
            calibrated_economy(f, g, cost, &anchors, "preset")?
        }
        (None, Some(path)) => {
            let file = File::open(path)
                .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
            let econ: EconomyFile = serde_json::from_reader(file)?;
            calibrated_economy(econ.workers, econ.jobs, econ.cost, &anchors, "file economy")?
        }
        _ => {
            return Err(CliError::validation(
                "give exactly one of --preset or --economy",
            ));
        }
    };

    // Optional occupation binning: pool jobs sharing a label by remapping
    // each job skill to the lowest skill of its occupation.
    let mut assignment = solved.assignment.clone();
    if let Some(path) = &args.occupation_map {
        let file = File::open(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let mut label_of: BTreeMap<u64, String> = BTreeMap::new();
        for row in rdr.deserialize::<(f64, String)>() {
            let (skill, label) = row?;
            label_of.insert(skill.to_bits(), label);
        }
        let mut representative: BTreeMap<String, f64> = BTreeMap::new();
        for &(_, z, _) in &assignment.pairs {
            if let Some(label) = label_of.get(&z.to_bits()) {
                let r = representative.entry(label.clone()).or_insert(z);
                *r = r.min(z);
            }
        }
        let cost = match &solved.economy.spec.cost {
            CostModel::Power(p) => *p,
            CostModel::Legendre(_) => {
                return Err(CliError::validation("occupation binning requires a power cost"))
            }
        };
        let pairs: Vec<(f64, f64, u64)> = assignment
            .pairs
            .iter()
            .map(|&(x, z, m)| {
                let z = label_of
                    .get(&z.to_bits())
                    .and_then(|l| representative.get(l))
                    .copied()
                    .unwrap_or(z);
                (x, z, m)
            })
            .collect();
        assignment = Assignment::new(pairs, assignment.scale, &cost);
    }

    let report = dispersion_report_from_wages(&assignment, &solved.dual.w, &default_segments())?;

    if let Some(path) = &args.plot_csv {
        write_plot_csv(path, &report)?;
    }
    emit(&args.out, &serde_json::to_string_pretty(&report)?)
}

fn write_plot_csv(path: &Path, report: &DispersionReport<f64>) -> Result<(), CliError> {
    let mut order: Vec<usize> = (0..report.per_job.len()).collect();
    order.sort_by(|&a, &b| {
        report.per_job[a]
            .mean_log_wage
            .partial_cmp(&report.per_job[b].mean_log_wage)
            .unwrap()
    });
    let mut wtr = csv::Writer::from_path(path)
        .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))?;
    wtr.write_record(["occupation_rank", "mean_wage", "var_log_wage", "employment_share"])?;
    let mut cum = 0.0;
    for &i in &order {
        let job = &report.per_job[i];
        let rank = cum + job.employment_share / 2.0;
        cum += job.employment_share;
        wtr.write_record([
            format!("{rank}"),
            format!("{}", job.mean_log_wage.exp()),
            format!("{}", job.var_log_wage),
            format!("{}", job.employment_share),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn cmd_example(args: &ExampleArgs) -> Result<(), CliError> {
    match args.name {
        ExampleName::ReflectingBinomial => {
            let kind = DistributionKind::ReflectingBinomial { n: 4, p_num: 1, p_den: 3 };
            let (f, g) = gen_distribution::<f64>(&kind)?;
            let cost = PowerCostParams::symmetric(0.5, 1.0)?;
            let a = concave_transport::solver::solve(&f, &g, &cost)?;
            let payload = serde_json::json!({
                "name": "reflecting-binomial",
                "description": "workers B(4, 1/3), jobs B(4, 2/3), masses at scale 81",
                "workers": f,
                "jobs": g,
                "cost": cost,
                "expected_assignment": AssignmentJson::from_assignment(&a, &cost),
            });
            println!("{}", serde_json::to_string_pretty(&payload)?);
        }
        ExampleName::Mixture => {
            let kind =
                DistributionKind::BinomialMixture { n: 4, p_num: 1, p_den: 3, mix_ratio: (3, 1) };
            let (f, g) = gen_distribution::<f64>(&kind)?;
            let f = f.rescaled(108)?;
            let g = g.rescaled(108)?;
            let cost = PowerCostParams::symmetric(0.5, 1.0)?;
            let a = concave_transport::solver::solve(&f, &g, &cost)?;
            let payload = serde_json::json!({
                "name": "mixture",
                "description": "workers 3:1 mixture of B(4, 1/3) and a point mass at 4; jobs reflected; masses at scale 108",
                "workers": f,
                "jobs": g,
                "cost": cost,
                "expected_assignment": AssignmentJson::from_assignment(&a, &cost),
            });
            println!("{}", serde_json::to_string_pretty(&payload)?);
        }
        ExampleName::DualWorked => {
            let cost = PowerCostParams::symmetric(0.5, 1.0)?;
            let a = Assignment::new(
                vec![(1.0, 10.0, 1), (3.0, 4.0, 1), (7.0, 8.0, 1)],
                1,
                &cost,
            );
            let forest = build_subpair_forest(&a)?;
            let phi = local_potentials(&forest, &cost)?;
            let value = |s: f64| phi[&skill_key(s)];
            let payload = serde_json::json!({
                "name": "dual-worked",
                "description": "workers x = (1, 3, 7) paired with jobs z = (10, 4, 8) under c = sqrt(|x - z|); potential on the six skills",
                "workers": [1.0, 3.0, 7.0],
                "jobs": [4.0, 8.0, 10.0],
                "pairs": [[1.0, 10.0], [3.0, 4.0], [7.0, 8.0]],
                "phi": {
                    "1": value(1.0),
                    "3": value(3.0),
                    "4": value(4.0),
                    "7": value(7.0),
                    "8": value(8.0),
                    "10": value(10.0),
                },
                "closed_forms": {
                    "phi(3)": "5 - 2*sqrt(3)",
                    "phi(4)": "4 - 2*sqrt(3)",
                    "phi(7)": "1",
                    "phi(8)": "0",
                    "phi(1)": "4 - sqrt(3)",
                    "phi(10)": "1 - sqrt(3)",
                },
            });
            println!("{}", serde_json::to_string_pretty(&payload)?);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn run() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.to_string();
            return Err(CliError::Validation(
                msg.strip_prefix("error: ").unwrap_or(&msg).to_string(),
            ));
        }
    };
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Dual(args) => cmd_dual(args),
        Command::Layers(args) => cmd_layers(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Quant(args) => cmd_quant(args),
        Command::Example(args) => cmd_example(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal invariant violation: {msg}");
            ExitCode::from(2)
        }
    }
}

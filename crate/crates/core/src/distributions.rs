//! Finite atomic worker/job measures with exact integer masses, the
//! common-component (perfect-pair) decomposition, and the underqualification
//! step function `H(s) = F(s) - G(s)`.
//!
//! Masses are non-negative integers over a positive `scale` denominator (the
//! true mass of an atom is `mass / scale`), so that slicing `H` at integer
//! levels during layering is exact. Skills are finite-precision reals treated
//! as exact labels: only bitwise-equal skills merge.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

/// Errors from distribution construction and arithmetic.
#[derive(Debug, Error)]
pub enum DistributionError {
    /// The two measures do not carry the same total mass at a common scale.
    #[error("total masses differ at common scale {scale}: {lhs} vs {rhs}")]
    MassMismatch { lhs: u64, rhs: u64, scale: u64 },
    /// A skill value was not a finite number.
    #[error("non-finite skill value in atom list")]
    NonFiniteSkill,
    /// The scale denominator must be a positive integer.
    #[error("scale must be positive, got {0}")]
    InvalidScale(u64),
    /// Integer overflow while rescaling or accumulating masses.
    #[error("integer overflow while {0}")]
    Overflow(&'static str),
    /// Malformed CSV input.
    #[error("malformed CSV: {0}")]
    Csv(String),
}

/// A finite atomic measure on the real line with exact integer masses.
///
/// Invariants: skills are strictly increasing, no zero-mass atoms are stored,
/// and `scale >= 1`. Two distributions are comparable only after rescaling to
/// a common scale (the lcm of their scales).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution<T: Real> {
    atoms: Vec<(T, u64)>,
    scale: u64,
}

impl<T: Real> DiscreteDistribution<T> {
    /// Builds a distribution from `(skill, mass)` atoms at the given scale.
    ///
    /// Atoms are sorted, duplicates merged, and zero masses dropped.
    pub fn new(atoms: Vec<(T, u64)>, scale: u64) -> Result<Self, DistributionError> {
        if scale == 0 {
            return Err(DistributionError::InvalidScale(scale));
        }
        let mut atoms: Vec<(T, u64)> = atoms.into_iter().filter(|&(_, m)| m > 0).collect();
        if atoms.iter().any(|(s, _)| !s.is_finite()) {
            return Err(DistributionError::NonFiniteSkill);
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite skills are comparable"));
        let mut merged: Vec<(T, u64)> = Vec::with_capacity(atoms.len());
        for (s, m) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == s => {
                    last.1 = last
                        .1
                        .checked_add(m)
                        .ok_or(DistributionError::Overflow("merging atom masses"))?;
                }
                _ => merged.push((s, m)),
            }
        }
        Ok(Self { atoms: merged, scale })
    }

    /// The empty measure at the given scale.
    pub fn empty(scale: u64) -> Self {
        Self { atoms: Vec::new(), scale: scale.max(1) }
    }

    /// Ordered `(skill, integer mass)` atoms.
    pub fn atoms(&self) -> &[(T, u64)] {
        &self.atoms
    }

    /// The scale denominator (true atom mass = `mass / scale`).
    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// Total integer mass (at this distribution's scale).
    pub fn total_mass(&self) -> u64 {
        self.atoms.iter().map(|&(_, m)| m).sum()
    }

    /// True (rational) total mass as a scalar.
    pub fn total_true_mass(&self) -> T {
        T::from(self.total_mass()).unwrap() / T::from(self.scale).unwrap()
    }

    /// Integer mass at an exact skill label (0 if absent).
    pub fn mass_at(&self, skill: T) -> u64 {
        self.atoms
            .binary_search_by(|(s, _)| s.partial_cmp(&skill).unwrap())
            .map(|i| self.atoms[i].1)
            .unwrap_or(0)
    }

    /// Skills carrying positive mass, in increasing order.
    pub fn support(&self) -> impl Iterator<Item = T> + '_ {
        self.atoms.iter().map(|&(s, _)| s)
    }

    /// Returns the same measure expressed at `new_scale`, which must be a
    /// multiple of the current scale.
    pub fn rescaled(&self, new_scale: u64) -> Result<Self, DistributionError> {
        if new_scale == 0 || new_scale % self.scale != 0 {
            return Err(DistributionError::InvalidScale(new_scale));
        }
        let factor = new_scale / self.scale;
        let atoms = self
            .atoms
            .iter()
            .map(|&(s, m)| {
                m.checked_mul(factor)
                    .map(|m| (s, m))
                    .ok_or(DistributionError::Overflow("rescaling masses"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { atoms, scale: new_scale })
    }

    /// Divides all masses and the scale by their greatest common divisor.
    pub fn normalized(&self) -> Self {
        let g = self.atoms.iter().fold(self.scale, |acc, &(_, m)| gcd(acc, m));
        if g <= 1 {
            return self.clone();
        }
        Self {
            atoms: self.atoms.iter().map(|&(s, m)| (s, m / g)).collect(),
            scale: self.scale / g,
        }
    }

    /// Reads a distribution from CSV with a `skill,mass` header.
    ///
    /// Masses may be decimals; they are rationalized exactly to a file-wide
    /// power-of-ten scale.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, DistributionError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        {
            let headers = rdr.headers().map_err(|e| DistributionError::Csv(e.to_string()))?;
            if headers.len() < 2
                || !headers[0].eq_ignore_ascii_case("skill")
                || !headers[1].eq_ignore_ascii_case("mass")
            {
                return Err(DistributionError::Csv(format!(
                    "expected header `skill,mass`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }
        let mut rows: Vec<(T, String)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| DistributionError::Csv(e.to_string()))?;
            if rec.len() < 2 {
                return Err(DistributionError::Csv("row with fewer than 2 fields".into()));
            }
            let skill: f64 = rec[0]
                .parse()
                .map_err(|_| DistributionError::Csv(format!("bad skill `{}`", &rec[0])))?;
            let skill = T::from(skill).ok_or(DistributionError::NonFiniteSkill)?;
            rows.push((skill, rec[1].to_string()));
        }
        // File-wide scale: 10^(max number of decimal places).
        let mut max_places = 0usize;
        for (_, m) in &rows {
            max_places = max_places.max(decimal_places(m)?);
        }
        if max_places > 18 {
            return Err(DistributionError::Csv("more than 18 decimal places in mass".into()));
        }
        let scale = 10u64.pow(max_places as u32);
        let mut atoms = Vec::with_capacity(rows.len());
        for (s, m) in rows {
            atoms.push((s, parse_decimal_mass(&m, max_places)?));
        }
        Self::new(atoms, scale)
    }

    /// Internal: subtracts `other` atom-by-atom (same scale; other <= self).
    fn sub_assign_checked(&mut self, other: &Self) -> Result<(), DistributionError> {
        debug_assert_eq!(self.scale, other.scale);
        for &(s, m) in &other.atoms {
            let idx = self
                .atoms
                .binary_search_by(|(t, _)| t.partial_cmp(&s).unwrap())
                .map_err(|_| DistributionError::Overflow("subtracting absent atom"))?;
            let slot = &mut self.atoms[idx].1;
            *slot = slot
                .checked_sub(m)
                .ok_or(DistributionError::Overflow("subtracting larger mass"))?;
        }
        self.atoms.retain(|&(_, m)| m > 0);
        Ok(())
    }
}

/// Number of decimal places in a plain decimal literal.
fn decimal_places(s: &str) -> Result<usize, DistributionError> {
    let s = s.trim();
    match s.split_once('.') {
        None => Ok(0),
        Some((_, frac)) => {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                Err(DistributionError::Csv(format!("bad mass `{s}`")))
            } else {
                Ok(frac.trim_end_matches('0').len())
            }
        }
    }
}

/// Parses a decimal mass string exactly as an integer count of `10^-places`.
fn parse_decimal_mass(s: &str, places: usize) -> Result<u64, DistributionError> {
    let s = s.trim();
    let bad = || DistributionError::Csv(format!("bad mass `{s}`"));
    let (int_part, frac_part) = match s.split_once('.') {
        None => (s, ""),
        Some((i, f)) => (i, f.trim_end_matches('0')),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    if frac_part.len() > places {
        return Err(bad());
    }
    let int_val: u64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
    let mut frac_val: u64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
    for _ in frac_part.len()..places {
        frac_val = frac_val.checked_mul(10).ok_or(DistributionError::Overflow("mass parse"))?;
    }
    int_val
        .checked_mul(10u64.pow(places as u32))
        .and_then(|v| v.checked_add(frac_val))
        .ok_or(DistributionError::Overflow("mass parse"))
}

fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: u64, b: u64) -> Result<u64, DistributionError> {
    (a / gcd(a, b))
        .checked_mul(b)
        .ok_or(DistributionError::Overflow("computing common scale"))
}

/// Rescales both measures to their least common scale.
pub fn to_common_scale<T: Real>(
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
) -> Result<(DiscreteDistribution<T>, DiscreteDistribution<T>), DistributionError> {
    let scale = lcm(f.scale(), g.scale())?;
    Ok((f.rescaled(scale)?, g.rescaled(scale)?))
}

/// Checks equal total mass at a common scale, returning the rescaled pair.
fn equal_mass_pair<T: Real>(
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
) -> Result<(DiscreteDistribution<T>, DiscreteDistribution<T>), DistributionError> {
    let (f, g) = to_common_scale(f, g)?;
    let (lhs, rhs) = (f.total_mass(), g.total_mass());
    if lhs != rhs {
        return Err(DistributionError::MassMismatch { lhs, rhs, scale: f.scale() });
    }
    Ok((f, g))
}

/// Splits worker measure `F` and job measure `G` of equal total mass into the
/// common component `F /\ G` (mass matched in perfect pairs) and the two
/// remainders with disjoint supports.
pub fn common_component<T: Real>(
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
) -> Result<
    (DiscreteDistribution<T>, DiscreteDistribution<T>, DiscreteDistribution<T>),
    DistributionError,
> {
    let (mut f, mut g) = equal_mass_pair(f, g)?;
    let mut common_atoms = Vec::new();
    for &(s, mf) in f.atoms() {
        let mg = g.mass_at(s);
        let m = mf.min(mg);
        if m > 0 {
            common_atoms.push((s, m));
        }
    }
    let common = DiscreteDistribution::new(common_atoms, f.scale())?;
    f.sub_assign_checked(&common)?;
    g.sub_assign_checked(&common)?;
    Ok((common, f, g))
}

/// Right-continuous piecewise-constant function with value 0 below the first
/// breakpoint; stores only breakpoints where the value changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction<T: Real> {
    breakpoints: Vec<(T, i64)>,
}

impl<T: Real> StepFunction<T> {
    /// Builds from `(skill, value)` pairs; redundant breakpoints are dropped.
    pub fn new(points: Vec<(T, i64)>) -> Self {
        let mut points = points;
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut breakpoints: Vec<(T, i64)> = Vec::with_capacity(points.len());
        let mut prev = 0i64;
        for (s, v) in points {
            if v != prev {
                breakpoints.push((s, v));
                prev = v;
            }
        }
        Self { breakpoints }
    }

    /// The stored `(skill, value)` breakpoints.
    pub fn breakpoints(&self) -> &[(T, i64)] {
        &self.breakpoints
    }

    /// Value at `s` (right-continuous).
    pub fn eval(&self, s: T) -> i64 {
        match self.breakpoints.partition_point(|&(t, _)| t <= s) {
            0 => 0,
            i => self.breakpoints[i - 1].1,
        }
    }

    /// Left limit: value just below `s`.
    pub fn eval_before(&self, s: T) -> i64 {
        match self.breakpoints.partition_point(|&(t, _)| t < s) {
            0 => 0,
            i => self.breakpoints[i - 1].1,
        }
    }
}

/// The underqualification step function `H(s) = F(s) - G(s)` in integer mass
/// units at the common scale of `F` and `G`. Requires equal total mass, so
/// `H` returns to 0 above the largest skill.
pub fn underqualification<T: Real>(
    f: &DiscreteDistribution<T>,
    g: &DiscreteDistribution<T>,
) -> Result<StepFunction<T>, DistributionError> {
    let (f, g) = equal_mass_pair(f, g)?;
    let mut skills: Vec<T> = f.support().chain(g.support()).collect();
    skills.sort_by(|a, b| a.partial_cmp(b).unwrap());
    skills.dedup();
    let mut points = Vec::with_capacity(skills.len());
    let mut cum = 0i64;
    for s in skills {
        cum += f.mass_at(s) as i64 - g.mass_at(s) as i64;
        points.push((s, cum));
    }
    Ok(StepFunction::new(points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(atoms: &[(f64, u64)], scale: u64) -> DiscreteDistribution<f64> {
        DiscreteDistribution::new(atoms.to_vec(), scale).unwrap()
    }

    #[test]
    fn reflecting_binomial_common_component() {
        let f = dist(&[(0.0, 16), (1.0, 32), (2.0, 24), (3.0, 8), (4.0, 1)], 81);
        let g = dist(&[(0.0, 1), (1.0, 8), (2.0, 24), (3.0, 32), (4.0, 16)], 81);
        let (common, f_rem, g_rem) = common_component(&f, &g).unwrap();
        assert_eq!(common.atoms(), &[(0.0, 1), (1.0, 8), (2.0, 24), (3.0, 8), (4.0, 1)]);
        assert_eq!(f_rem.atoms(), &[(0.0, 15), (1.0, 24)]);
        assert_eq!(g_rem.atoms(), &[(3.0, 24), (4.0, 15)]);
    }

    #[test]
    fn identical_distributions_have_empty_remainders() {
        let f = dist(&[(0.5, 3), (2.0, 7)], 10);
        let (common, f_rem, g_rem) = common_component(&f, &f).unwrap();
        assert_eq!(common, f);
        assert!(f_rem.atoms().is_empty());
        assert!(g_rem.atoms().is_empty());
    }

    #[test]
    fn mixture_common_component() {
        let f = dist(&[(0.0, 16), (1.0, 32), (2.0, 24), (3.0, 8), (4.0, 28)], 108);
        let g = dist(&[(0.0, 28), (1.0, 8), (2.0, 24), (3.0, 32), (4.0, 16)], 108);
        let (_, f_rem, g_rem) = common_component(&f, &g).unwrap();
        assert_eq!(f_rem.atoms(), &[(1.0, 24), (4.0, 12)]);
        assert_eq!(g_rem.atoms(), &[(0.0, 12), (3.0, 24)]);
    }

    #[test]
    fn mass_mismatch_is_an_error() {
        let f = dist(&[(0.0, 2)], 1);
        let g = dist(&[(0.0, 3)], 1);
        assert!(matches!(
            common_component(&f, &g),
            Err(DistributionError::MassMismatch { lhs: 2, rhs: 3, .. })
        ));
    }

    #[test]
    fn mixed_scales_use_lcm() {
        // 2/2 at skill 0 vs 3/3 at skill 0: same true mass, scales 2 and 3.
        let f = dist(&[(0.0, 2)], 2);
        let g = dist(&[(0.0, 3)], 3);
        let (common, f_rem, g_rem) = common_component(&f, &g).unwrap();
        assert_eq!(common.scale(), 6);
        assert_eq!(common.atoms(), &[(0.0, 6)]);
        assert!(f_rem.atoms().is_empty() && g_rem.atoms().is_empty());
    }

    #[test]
    fn figure_three_underqualification() {
        // F {s1:1, s3:4}/5, G {s2:2, s4:1, s5:2}/5 with s_i = i.
        let f = dist(&[(1.0, 1), (3.0, 4)], 5);
        let g = dist(&[(2.0, 2), (4.0, 1), (5.0, 2)], 5);
        let h = underqualification(&f, &g).unwrap();
        let vals: Vec<i64> = [1.0, 2.0, 3.0, 4.0, 5.0].iter().map(|&s| h.eval(s)).collect();
        assert_eq!(vals, vec![1, -1, 3, 2, 0]);
        assert_eq!(h.eval(99.0), 0);
        assert_eq!(h.eval(0.0), 0);
    }

    #[test]
    fn identical_distributions_give_zero_h() {
        let f = dist(&[(0.0, 2), (1.0, 5)], 7);
        let h = underqualification(&f, &f).unwrap();
        assert!(h.breakpoints().is_empty());
        assert_eq!(h.eval(0.5), 0);
    }

    #[test]
    fn mixture_remainder_underqualification() {
        let f_rem = dist(&[(1.0, 24), (4.0, 12)], 108);
        let g_rem = dist(&[(0.0, 12), (3.0, 24)], 108);
        let h = underqualification(&f_rem, &g_rem).unwrap();
        let vals: Vec<i64> = [0.0, 1.0, 3.0, 4.0].iter().map(|&s| h.eval(s)).collect();
        assert_eq!(vals, vec![-12, 12, -12, 0]);
    }

    #[test]
    fn underqualification_antisymmetry() {
        let f = dist(&[(0.0, 3), (2.5, 4)], 7);
        let g = dist(&[(1.0, 5), (3.0, 2)], 7);
        let h_fg = underqualification(&f, &g).unwrap();
        let h_gf = underqualification(&g, &f).unwrap();
        for s in [-1.0, 0.0, 0.5, 1.0, 2.5, 3.0, 10.0] {
            assert_eq!(h_fg.eval(s), -h_gf.eval(s));
        }
    }

    #[test]
    fn csv_ingestion_rationalizes_decimals() {
        let csv_data = "skill,mass\n0.0,1.5\n2.5,2\n2.5,0.25\n";
        let d = DiscreteDistribution::<f64>::from_csv(csv_data.as_bytes()).unwrap();
        assert_eq!(d.scale(), 100);
        assert_eq!(d.atoms(), &[(0.0, 150), (2.5, 225)]);
    }

    #[test]
    fn csv_rejects_bad_header() {
        let csv_data = "x,y\n0,1\n";
        assert!(matches!(
            DiscreteDistribution::<f64>::from_csv(csv_data.as_bytes()),
            Err(DistributionError::Csv(_))
        ));
    }

    #[test]
    fn step_function_left_limit() {
        let h = StepFunction::new(vec![(1.0, 2), (3.0, 0)]);
        assert_eq!(h.eval_before(1.0), 0);
        assert_eq!(h.eval(1.0), 2);
        assert_eq!(h.eval_before(3.0), 2);
        assert_eq!(h.eval(3.0), 0);
    }

    #[test]
    fn normalized_divides_by_gcd() {
        let d = dist(&[(0.0, 48), (1.0, 96)], 324);
        let n = d.normalized();
        assert_eq!(n.scale(), 27);
        assert_eq!(n.atoms(), &[(0.0, 4), (1.0, 8)]);
    }
}

//! Decomposes the residual assignment problem (after perfect pairs are
//! removed) into independent alternating layers by slicing the
//! underqualification step function `H = F - G` at integer levels.
//!
//! For each band `(a_lo, a_hi]` between consecutive distinct values of `H`, a
//! skill enters the layer as a worker where `H` increases through the band and
//! as a job where it decreases through it. Layers carry uniform per-point mass
//! `a_hi - a_lo` and can be solved independently; summing the per-layer
//! measures recovers the remainders exactly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{underqualification, DiscreteDistribution, DistributionError};
use crate::Real;

/// Errors from layer decomposition.
#[derive(Debug, Error)]
pub enum LayeringError {
    /// The inputs violate the preconditions established by the
    /// common-component decomposition (disjoint supports, equal mass).
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Which side of the market a layer point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Worker,
    Job,
}

/// An alternating worker/job skill sequence with a common per-point mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<T: Real> {
    /// Integer mass carried by every point of the layer (`a_hi - a_lo`),
    /// at the common scale of the input remainders.
    pub mass: u64,
    /// Points in strictly increasing skill order, strictly alternating side.
    pub points: Vec<(T, Side)>,
    /// The level band `(a_lo, a_hi]` of `H` this layer was cut from.
    pub level_interval: (i64, i64),
}

impl<T: Real> Layer<T> {
    /// Number of worker/job pairs in the layer.
    pub fn num_pairs(&self) -> usize {
        self.points.len() / 2
    }

    /// True if points strictly alternate sides with equal counts.
    pub fn alternates(&self) -> bool {
        self.points.len() % 2 == 0
            && self.points.windows(2).all(|w| w[0].1 != w[1].1 && w[0].0 < w[1].0)
    }
}

/// Cuts the residual economy into layers. Inputs must have disjoint supports
/// and equal total mass (the post-conditions of the common-component split).
///
/// Returned layers are ordered by their level band, bottom-up. A skill whose
/// jump in `H` spans several bands appears in each of them.
pub fn decompose_layers<T: Real>(
    f_rem: &DiscreteDistribution<T>,
    g_rem: &DiscreteDistribution<T>,
) -> Result<Vec<Layer<T>>, LayeringError> {
    for s in f_rem.support() {
        if g_rem.mass_at(s) > 0 {
            return Err(LayeringError::PreconditionViolated(format!(
                "supports are not disjoint at skill {s}"
            )));
        }
    }
    let h = underqualification(f_rem, g_rem).map_err(|e| match e {
        DistributionError::MassMismatch { lhs, rhs, .. } => LayeringError::PreconditionViolated(
            format!("total masses differ: {lhs} vs {rhs}"),
        ),
        other => LayeringError::Distribution(other),
    })?;

    // Band edges: 0 plus every plateau value of H.
    let mut levels: BTreeSet<i64> = BTreeSet::new();
    levels.insert(0);
    for &(_, v) in h.breakpoints() {
        levels.insert(v);
    }
    let levels: Vec<i64> = levels.into_iter().collect();

    let mut layers = Vec::with_capacity(levels.len().saturating_sub(1));
    for band in levels.windows(2) {
        let (lo, hi) = (band[0], band[1]);
        let mut points = Vec::new();
        let mut prev = 0i64;
        for &(s, v) in h.breakpoints() {
            if prev <= lo && v >= hi {
                points.push((s, Side::Worker));
            } else if prev >= hi && v <= lo {
                points.push((s, Side::Job));
            }
            prev = v;
        }
        if points.is_empty() {
            continue;
        }
        let layer = Layer { mass: (hi - lo) as u64, points, level_interval: (lo, hi) };
        debug_assert!(layer.alternates(), "layer must alternate: {layer:?}");
        layers.push(layer);
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(atoms: &[(f64, u64)], scale: u64) -> DiscreteDistribution<f64> {
        DiscreteDistribution::new(atoms.to_vec(), scale).unwrap()
    }

    fn sides(layer: &Layer<f64>) -> Vec<(f64, Side)> {
        layer.points.clone()
    }

    #[test]
    fn figure_three_bands() {
        // F {s1:1, s3:4}/5, G {s2:2, s4:1, s5:2}/5, s_i = i.
        let f = dist(&[(1.0, 1), (3.0, 4)], 5);
        let g = dist(&[(2.0, 2), (4.0, 1), (5.0, 2)], 5);
        let layers = decompose_layers(&f, &g).unwrap();
        assert_eq!(layers.len(), 4);

        assert_eq!(layers[0].level_interval, (-1, 0));
        assert_eq!(sides(&layers[0]), vec![(2.0, Side::Job), (3.0, Side::Worker)]);

        assert_eq!(layers[1].level_interval, (0, 1));
        assert_eq!(
            sides(&layers[1]),
            vec![(1.0, Side::Worker), (2.0, Side::Job), (3.0, Side::Worker), (5.0, Side::Job)]
        );

        assert_eq!(layers[2].level_interval, (1, 2));
        assert_eq!(sides(&layers[2]), vec![(3.0, Side::Worker), (5.0, Side::Job)]);

        assert_eq!(layers[3].level_interval, (2, 3));
        assert_eq!(sides(&layers[3]), vec![(3.0, Side::Worker), (4.0, Side::Job)]);

        assert!(layers.iter().all(|l| l.mass == 1));
    }

    #[test]
    fn reflecting_binomial_remainder_layers() {
        let f_rem = dist(&[(0.0, 15), (1.0, 24)], 81);
        let g_rem = dist(&[(3.0, 24), (4.0, 15)], 81);
        let layers = decompose_layers(&f_rem, &g_rem).unwrap();
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[0].mass, 15);
        assert_eq!(sides(&layers[0]), vec![(0.0, Side::Worker), (4.0, Side::Job)]);
        assert_eq!(layers[1].mass, 24);
        assert_eq!(sides(&layers[1]), vec![(1.0, Side::Worker), (3.0, Side::Job)]);
    }

    #[test]
    fn mixture_remainder_layers() {
        let f_rem = dist(&[(1.0, 24), (4.0, 12)], 108);
        let g_rem = dist(&[(0.0, 12), (3.0, 24)], 108);
        let layers = decompose_layers(&f_rem, &g_rem).unwrap();
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[0].mass, 12);
        assert_eq!(
            sides(&layers[0]),
            vec![(0.0, Side::Job), (1.0, Side::Worker), (3.0, Side::Job), (4.0, Side::Worker)]
        );
        assert_eq!(layers[1].mass, 12);
        assert_eq!(sides(&layers[1]), vec![(1.0, Side::Worker), (3.0, Side::Job)]);
    }

    #[test]
    fn non_disjoint_supports_rejected() {
        let f = dist(&[(1.0, 2)], 1);
        let g = dist(&[(1.0, 1), (2.0, 1)], 1);
        assert!(matches!(
            decompose_layers(&f, &g),
            Err(LayeringError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn layers_reconstruct_remainders() {
        let f_rem = dist(&[(0.0, 15), (1.0, 24)], 81);
        let g_rem = dist(&[(3.0, 24), (4.0, 15)], 81);
        let layers = decompose_layers(&f_rem, &g_rem).unwrap();
        let mut f_mass = std::collections::BTreeMap::new();
        let mut g_mass = std::collections::BTreeMap::new();
        for layer in &layers {
            for &(s, side) in &layer.points {
                let map = if side == Side::Worker { &mut f_mass } else { &mut g_mass };
                *map.entry(s.to_bits()).or_insert(0u64) += layer.mass;
            }
        }
        for &(s, m) in f_rem.atoms() {
            assert_eq!(f_mass[&s.to_bits()], m);
        }
        for &(s, m) in g_rem.atoms() {
            assert_eq!(g_mass[&s.to_bits()], m);
        }
    }
}

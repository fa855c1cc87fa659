//! Cell measures with exact integer masses.
//!
//! Masses are stored in units of `2^-62`, so every comparison against `1/2`
//! made by the sweeps is exact and two routes summing the same cells in
//! different orders always agree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quasistate::space::DiscreteSpace;

/// Total mass in integer units.
pub const TOTAL_UNITS: u64 = 1 << 62;
/// Half of the total mass.
pub const HALF_UNITS: u64 = 1 << 61;
/// Relative jitter applied to the area weights of the uniform measure.
pub const UNIFORM_JITTER: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteMeasure {
    pub units: Vec<u64>,
}

/// File form of a cell measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscreteMeasureSpec {
    Uniform {
        #[serde(default)]
        seed: u64,
    },
    Masses {
        masses: Vec<f64>,
    },
    /// An atom of mass `mass` at `cell`, the rest spread uniformly.
    Atom {
        cell: usize,
        mass: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl DiscreteMeasure {
    /// Rounds nonnegative weights to integer units with an exact total,
    /// distributing the remainder by largest fractional part.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        if w.is_empty() || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidMeasure("cell masses must be finite and nonnegative".into()));
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidMeasure("cell masses sum to zero".into()));
        }
        let scale = TOTAL_UNITS as f64 / sum;
        let mut units: Vec<u64> = Vec::with_capacity(w.len());
        let mut frac: Vec<(f64, usize)> = Vec::with_capacity(w.len());
        for (i, x) in w.iter().enumerate() {
            let s = x * scale;
            let f = s.floor();
            units.push(f as u64);
            frac.push((s - f, i));
        }
        let assigned: u128 = units.iter().map(|&u| u as u128).sum();
        let total = TOTAL_UNITS as u128;
        if assigned > total {
            let mut excess = (assigned - total) as u64;
            let mut order: Vec<usize> = (0..w.len()).collect();
            order.sort_by(|&a, &b| units[b].cmp(&units[a]).then(a.cmp(&b)));
            for i in order.into_iter().cycle() {
                if excess == 0 {
                    break;
                }
                if units[i] > 0 {
                    units[i] -= 1;
                    excess -= 1;
                }
            }
        } else {
            let deficit = (total - assigned) as usize;
            frac.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for j in 0..deficit {
                units[frac[j % frac.len()].1] += 1;
            }
        }
        Ok(DiscreteMeasure { units })
    }

    /// Cell masses summing to `1 +- 1e-12`.
    pub fn from_masses(space: &DiscreteSpace, masses: &[f64]) -> Result<Self> {
        if masses.len() != space.len() {
            return Err(Error::BadDimension(format!("{} masses for {} cells", masses.len(), space.len())));
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("cell masses sum to {sum}")));
        }
        Self::from_weights(masses)
    }

    /// Normalized spherical area, perturbed by a seeded relative jitter so no
    /// union of cells carries mass exactly `1/2`.
    pub fn uniform(space: &DiscreteSpace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> =
            space.areas.iter().map(|a| a * (1.0 + UNIFORM_JITTER * rng.gen_range(-1.0..1.0))).collect();
        Self::from_weights(&w).expect("areas are positive")
    }

    pub fn with_atom(space: &DiscreteSpace, cell: usize, mass: f64, seed: u64) -> Result<Self> {
        if cell >= space.len() || !(0.0..=1.0).contains(&mass) {
            return Err(Error::InvalidMeasure(format!("atom of mass {mass} at cell {cell}")));
        }
        let base = Self::uniform(space, seed);
        let mut w: Vec<f64> = base.units.iter().map(|&u| (1.0 - mass) * u as f64 / TOTAL_UNITS as f64).collect();
        w[cell] += mass;
        Self::from_weights(&w)
    }

    pub fn from_spec(space: &DiscreteSpace, spec: &DiscreteMeasureSpec) -> Result<Self> {
        match spec {
            DiscreteMeasureSpec::Uniform { seed } => Ok(Self::uniform(space, *seed)),
            DiscreteMeasureSpec::Masses { masses } => Self::from_masses(space, masses),
            DiscreteMeasureSpec::Atom { cell, mass, seed } => Self::with_atom(space, *cell, *mass, *seed),
        }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn mass(&self, cell: usize) -> f64 {
        self.units[cell] as f64 / TOTAL_UNITS as f64
    }

    /// Mass of the cells flagged in `set`, in units.
    pub fn units_of(&self, set: &[bool]) -> u64 {
        self.units.iter().zip(set).filter(|(_, &s)| s).map(|(u, _)| u).sum()
    }

    pub fn measure_of(&self, set: &[bool]) -> f64 {
        self.units_of(set) as f64 / TOTAL_UNITS as f64
    }
}

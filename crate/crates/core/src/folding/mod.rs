//! Symplectic embedding of the polydisk `(0, alpha) x (0, 1)^{2n-1}` into the
//! cube `(0, k)^{2n}` as `iota = Gamma o Psi o (Theta x id)`.
//!
//! - `Theta` smears the base rectangle onto a long band,
//! - `Psi` lifts the fibers so the `r`-th stretch of the band sits over cube `e(r+1)`,
//! - `Gamma` folds the band back and forth inside `(0, k)^2`.
//!
//! `iota` is the identity on `(0, 1)^{2n}` and a pure translation on the last
//! unit slab; its image contains `(2, k-2) x (0, k)^{2n-1}` minus the integer
//! coordinate planes.

pub mod base;
pub mod enumeration;
pub mod fold;
pub mod lift;
pub mod ribbon;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Matrix, SymplecticMap};
use base::{prepare_base, BasePrep};
use fold::{Fold, TRANSITION_HALF_WIDTH};
use lift::LiftMap;

pub use base::ThetaMap;
pub use enumeration::{CubeEnumeration, Step, StepFamily};

/// Residual bound for membership witnesses.
pub const WITNESS_TOL: f64 = 1e-8;
/// Domain clearance required of a witness.
pub const WITNESS_MARGIN: f64 = 1e-12;
/// Distance from the transition images within which `Unknown` is allowed.
pub const UNKNOWN_BAND: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Membership {
    In { witness: Vec<f64>, residual: f64 },
    Out,
    Unknown,
}

impl Membership {
    pub fn is_in(&self) -> bool {
        matches!(self, Membership::In { .. })
    }
}

pub struct FoldingEmbedding {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub theta: ThetaMap,
    pub lift: LiftMap,
    pub fold: Fold,
}

pub fn build_polydisk_embedding(k: usize, n: usize) -> Result<FoldingEmbedding> {
    let base = prepare_base(k, n)?;
    let lift = LiftMap::new(k, n)?;
    let fold = Fold::new(k, n)?;
    fold.ribbon.audit()?;
    Ok(FoldingEmbedding { k, n, alpha: base.alpha, theta: ThetaMap { base }, lift, fold })
}

/// `l_inf` distance from `p` to the integer coordinate planes.
pub fn distance_to_integer_planes(p: &[f64]) -> f64 {
    p.iter().map(|x| (x - x.round()).abs()).fold(f64::INFINITY, f64::min)
}

impl FoldingEmbedding {
    pub fn base(&self) -> &BasePrep {
        &self.theta.base
    }

    /// Clearance of `z` inside the open domain `(0, alpha) x (0, 1)^{2n-1}`,
    /// negative outside.
    pub fn domain_depth(&self, z: &[f64]) -> f64 {
        let mut d = z[0].min(self.alpha - z[0]);
        for x in &z[1..] {
            d = d.min(x.min(1.0 - x));
        }
        d
    }

    pub fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != 2 * self.n {
            return Err(Error::BadDimension(format!("point of length {} in dimension {}", z.len(), 2 * self.n)));
        }
        Ok(())
    }

    /// Band point `Psi(Theta(z))`, before folding.
    pub fn lifted(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_point(z)?;
        self.lift.eval(&self.theta.eval(z)?)
    }

    pub fn membership(&self, p: &[f64]) -> Membership {
        if self.check_point(p).is_err() {
            return Membership::Out;
        }
        let k = self.k as f64;
        if p.iter().any(|&x| !(x > 0.0 && x < k)) {
            return Membership::Out;
        }
        for cube in self.candidate_cubes(&p[2..]) {
            let i = self.lift.cubes.index(&cube);
            for r in [i.checked_sub(1), i.checked_sub(2)].into_iter().flatten() {
                for band in self.fold.candidates(r, [p[0], p[1]]) {
                    if let Some(m) = self.confirm(p, band) {
                        return m;
                    }
                }
            }
        }
        let near_transition = p[0] < TRANSITION_HALF_WIDTH + UNKNOWN_BAND || p[0] > k - TRANSITION_HALF_WIDTH - UNKNOWN_BAND;
        if near_transition {
            Membership::Unknown
        } else {
            Membership::Out
        }
    }

    /// Fiber cubes that may contain the fiber part `f` of an image point.
    fn candidate_cubes(&self, f: &[f64]) -> Vec<Vec<usize>> {
        let top = self.k - 1;
        let mut axes: Vec<Vec<usize>> = Vec::with_capacity(f.len());
        for &x in f {
            let c = (x.floor().max(0.0) as usize).min(top);
            let mut opts = vec![c];
            let frac = x - c as f64;
            if frac < 1e-9 && c > 0 {
                opts.push(c - 1);
            }
            if frac > 1.0 - 1e-9 && c < top {
                opts.push(c + 1);
            }
            axes.push(opts);
        }
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        for opts in axes {
            out = out
                .into_iter()
                .flat_map(|pre| {
                    opts.iter().map(move |&o| {
                        let mut v = pre.clone();
                        v.push(o);
                        v
                    })
                })
                .collect();
        }
        out
    }

    fn confirm(&self, p: &[f64], band: [f64; 2]) -> Option<Membership> {
        let mut w = p.to_vec();
        w[0] = band[0];
        w[1] = band[1];
        let pre = self.lift.inverse(&w)?.ok()?;
        let z = self.theta.inverse(&pre)?.ok()?;
        if self.domain_depth(&z) <= WITNESS_MARGIN {
            return None;
        }
        let q = self.eval(&z).ok()?;
        let residual = q.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (residual <= WITNESS_TOL).then_some(Membership::In { witness: z, residual })
    }
}

impl SymplecticMap for FoldingEmbedding {
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.fold.eval(&self.lifted(z)?)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        self.check_point(z)?;
        let a = self.theta.eval(z)?;
        let b = self.lift.eval(&a)?;
        Ok(self.fold.jacobian(&b)? * self.lift.jacobian(&a)? * self.theta.jacobian(z)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_and_exit_slabs() {
        let e = build_polydisk_embedding(5, 2).unwrap();
        assert_eq!(e.eval(&[0.5; 4]).unwrap(), vec![0.5; 4]);
        let q = e.eval(&[e.alpha - 0.5, 0.5, 0.5, 0.5]).unwrap();
        for x in q {
            assert!((x - 4.5).abs() < 1e-9);
        }
    }

    #[test]
    fn center_point_is_covered() {
        let e = build_polydisk_embedding(5, 2).unwrap();
        let p = [2.75; 4];
        let m = e.membership(&p);
        assert!(m.is_in(), "{m:?}");
    }

    #[test]
    fn outside_cube_is_out() {
        let e = build_polydisk_embedding(5, 2).unwrap();
        assert_eq!(e.membership(&[5.1, 1.0, 1.0, 1.0]), Membership::Out);
        assert_eq!(e.membership(&[-0.1, 1.0, 1.0, 1.0]), Membership::Out);
    }

    #[test]
    fn fiber_face_is_never_a_false_in() {
        let e = build_polydisk_embedding(5, 2).unwrap();
        for a in 1..4 {
            let p = [2.6, 1.3, a as f64, 0.4];
            assert!(!e.membership(&p).is_in());
        }
    }
}

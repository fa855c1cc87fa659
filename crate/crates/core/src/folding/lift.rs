//! The lift `Psi = Psi_{k^d - 1} o ... o Psi_1`, where `Psi_i` is the time-1
//! map of a lifting Hamiltonian conjugated by `T_{ik d/du}`.
//!
//! Factor `i` is the identity for `u <= ik - 3/4` and a unit fiber shift for
//! `u >= ik - 1/4`. The windows of distinct factors are disjoint, so at any
//! `u` all factors but one act as shifts or the identity; evaluation is
//! `O(1)` in the number of factors.

use crate::error::Result;
use crate::folding::enumeration::{CubeEnumeration, StepFamily};
use crate::geometry::{Lift, LiftHamiltonian, LiftVariable, Matrix, SymplecticMap};

#[derive(Clone, Debug)]
pub struct LiftMap {
    pub k: usize,
    pub n: usize,
    pub cubes: CubeEnumeration,
}

impl LiftMap {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        Ok(LiftMap { k, n, cubes: CubeEnumeration::new(k, 2 * n - 2)? })
    }

    /// Time-1 map of factor `i`, in full coordinates.
    pub fn factor(&self, i: u64) -> Lift {
        let st = self.cubes.step(i);
        let l = st.dual_cell as f64;
        let (variable, a, b) = match st.family {
            StepFamily::XPlus => (LiftVariable::Y, -1.0, l + 1.0),
            StepFamily::XMinus => (LiftVariable::Y, 1.0, -l),
            StepFamily::YPlus => (LiftVariable::X, 1.0, -l),
            StepFamily::YMinus => (LiftVariable::X, -1.0, l + 1.0),
        };
        let c = i as f64 * self.k as f64;
        Lift {
            h: LiftHamiltonian::new(2 * self.n, 0, st.pair, variable, a, b, c)
                .expect("lift pairs are valid"),
        }
    }

    /// Number of factors acting as full shifts at `u`, and the factor (if
    /// any) whose transition window contains `u`.
    pub fn active(&self, u: f64) -> (u64, Option<u64>) {
        let k = self.k as f64;
        let last = self.cubes.len() - 1;
        let full = ((u + 0.25) / k).floor().max(0.0) as u64;
        let full = full.min(last);
        let next = full + 1;
        let partial = if next <= last && u - next as f64 * k > -0.75 { Some(next) } else { None };
        (full, partial)
    }

    /// Fiber shift `e(full + 1) - e(1)` applied by the full factors.
    fn shift(&self, full: u64) -> Vec<usize> {
        self.cubes.cube(full + 1)
    }

    /// Cube `e(i)` for `1 <= i <= k^d`.
    pub fn cube(&self, i: u64) -> Vec<usize> {
        self.cubes.cube(i)
    }
}

impl SymplecticMap for LiftMap {
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (full, partial) = self.active(z[0]);
        let mut p = z.to_vec();
        for (a, s) in self.shift(full).into_iter().enumerate() {
            p[2 + a] += s as f64;
        }
        match partial {
            Some(i) => self.factor(i).eval(&p),
            None => Ok(p),
        }
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let (full, partial) = self.active(z[0]);
        match partial {
            Some(i) => {
                let mut p = z.to_vec();
                for (a, s) in self.shift(full).into_iter().enumerate() {
                    p[2 + a] += s as f64;
                }
                self.factor(i).jacobian(&p)
            }
            None => Ok(Matrix::identity(self.dim(), self.dim())),
        }
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        let (full, partial) = self.active(w[0]);
        let mut p = match partial {
            Some(i) => match self.factor(i).inverse(w)? {
                Ok(p) => p,
                Err(e) => return Some(Err(e)),
            },
            None => w.to_vec(),
        };
        for (a, s) in self.shift(full).into_iter().enumerate() {
            p[2 + a] -= s as f64;
        }
        Some(Ok(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_before_first_window() {
        let l = LiftMap::new(5, 2).unwrap();
        let z = [4.2, 0.3, 0.4, 0.6];
        assert_eq!(l.eval(&z).unwrap(), z.to_vec());
    }

    #[test]
    fn matches_explicit_composition() {
        let l = LiftMap::new(5, 2).unwrap();
        for j in 0..300 {
            let u = 0.1 + j as f64 * 0.41;
            let z = vec![u, 0.5, 0.3 + 0.001 * j as f64 % 0.6, 0.7];
            let mut p = z.clone();
            for i in 1..25 {
                p = l.factor(i).eval(&p).unwrap();
            }
            let q = l.eval(&z).unwrap();
            for a in 0..4 {
                assert!((p[a] - q[a]).abs() < 1e-12, "u={u}");
            }
            let back = l.inverse(&q).unwrap().unwrap();
            for a in 0..4 {
                assert!((back[a] - z[a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn v_shift_within_slope_bound() {
        let l = LiftMap::new(5, 2).unwrap();
        for j in 0..1000 {
            let u = 4.25 + 0.0005 * j as f64;
            let z = [u, 0.5, 0.37, 0.81];
            let p = l.eval(&z).unwrap();
            let rho_d1 = crate::profile::Ramp::default().d1(u - 5.0);
            assert!(p[1] - z[1] >= -1e-15 && p[1] - z[1] <= rho_d1 + 1e-15);
        }
    }
}

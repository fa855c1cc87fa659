//! The fold `gamma` of the band into `(0, k)^2` and `Gamma = gamma x id`.
//!
//! Rectangle `r` (covering `u in (rk, (r+1)k)`) is placed by the identity
//! shift for even `r` and by the point reflection about the square's center
//! for odd `r`. Near each `u = ik` the two placements are joined by
//! `(k, 0) + gamma_+` for odd `i` and `(0, k) - gamma_+` for even `i`.

use crate::error::Result;
use crate::folding::ribbon::Ribbon;
use crate::geometry::{Matrix, SymplecticMap};

/// Half-width of the transition windows around `u = ik`.
pub const TRANSITION_HALF_WIDTH: f64 = 0.125;

/// Where `u` falls: a rectangle body or the transition at `u = ik`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FoldPiece {
    Body(u64),
    Transition(u64),
}

#[derive(Clone, Debug)]
pub struct Fold {
    pub k: usize,
    pub n: usize,
    /// Number of rectangles `k^{2n-2}`.
    pub rects: u64,
    pub ribbon: Ribbon,
}

impl Fold {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        let rects = (k as u64).pow(2 * n as u32 - 2);
        Ok(Fold { k, n, rects, ribbon: Ribbon::new(k)? })
    }

    pub fn piece(&self, u: f64) -> FoldPiece {
        let k = self.k as f64;
        let i = (u / k).round();
        if i >= 1.0 && (i as u64) < self.rects && (u - i * k).abs() < TRANSITION_HALF_WIDTH {
            return FoldPiece::Transition(i as u64);
        }
        let r = (u / k).floor().clamp(0.0, (self.rects - 1) as f64);
        FoldPiece::Body(r as u64)
    }

    pub fn gamma(&self, u: f64, v: f64) -> [f64; 2] {
        let k = self.k as f64;
        match self.piece(u) {
            FoldPiece::Body(r) => body(k, r, u, v),
            FoldPiece::Transition(i) => {
                let p = self.ribbon.eval(u - i as f64 * k, v);
                if i % 2 == 1 {
                    [k + p[0], p[1]]
                } else {
                    [-p[0], k - p[1]]
                }
            }
        }
    }

    pub fn gamma_jacobian(&self, u: f64, v: f64) -> [[f64; 2]; 2] {
        let k = self.k as f64;
        match self.piece(u) {
            FoldPiece::Body(r) => {
                let sgn = if r % 2 == 0 { 1.0 } else { -1.0 };
                [[sgn, 0.0], [0.0, sgn]]
            }
            FoldPiece::Transition(i) => {
                let j = self.ribbon.jacobian(u - i as f64 * k, v);
                let sgn = if i % 2 == 1 { 1.0 } else { -1.0 };
                [[sgn * j[0][0], sgn * j[0][1]], [sgn * j[1][0], sgn * j[1][1]]]
            }
        }
    }

    /// Candidate band points `(u, v)` over `p` for rectangle `r` and its two
    /// adjacent transitions. Callers confirm by forward evaluation.
    pub fn candidates(&self, r: u64, p: [f64; 2]) -> Vec<[f64; 2]> {
        let k = self.k as f64;
        let mut out = Vec::with_capacity(4);
        let (u, v) = if r.is_multiple_of(2) { (p[0] + r as f64 * k, p[1]) } else { ((r + 1) as f64 * k - p[0], k - p[1]) };
        out.push([u, v]);
        for i in [r, r + 1] {
            if i == 0 || i >= self.rects {
                continue;
            }
            let q = if i % 2 == 1 { [p[0] - k, p[1]] } else { [-p[0], k - p[1]] };
            if q[0] < -TRANSITION_HALF_WIDTH - 1e-9 {
                continue;
            }
            for (s, t) in self.ribbon.inverse_candidates(q) {
                out.push([i as f64 * k + s, t]);
            }
        }
        out
    }
}

fn body(k: f64, r: u64, u: f64, v: f64) -> [f64; 2] {
    if r.is_multiple_of(2) {
        [u - r as f64 * k, v]
    } else {
        [(r + 1) as f64 * k - u, k - v]
    }
}

impl SymplecticMap for Fold {
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut w = z.to_vec();
        let p = self.gamma(z[0], z[1]);
        w[0] = p[0];
        w[1] = p[1];
        Ok(w)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let d = self.dim();
        let mut m = Matrix::identity(d, d);
        let j = self.gamma_jacobian(z[0], z[1]);
        for a in 0..2 {
            for b in 0..2 {
                m[(a, b)] = j[a][b];
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_on_first_rectangle() {
        let f = Fold::new(5, 2).unwrap();
        for i in 1..40 {
            let u = (5.0 - 0.125) * i as f64 / 40.0;
            assert_eq!(f.gamma(u, 0.3), [u, 0.3]);
        }
    }

    #[test]
    fn reflection_on_second_rectangle() {
        let f = Fold::new(5, 2).unwrap();
        let p = f.gamma(7.5, 0.4);
        assert!((p[0] - 2.5).abs() < 1e-15 && (p[1] - 4.6).abs() < 1e-15);
    }

    #[test]
    fn continuous_across_transition_edges() {
        let f = Fold::new(5, 2).unwrap();
        for i in 1..4u64 {
            for &e in &[-0.125, 0.125] {
                let u = i as f64 * 5.0 + e;
                let a = f.gamma(u - 1e-10, 0.5);
                let b = f.gamma(u + 1e-10, 0.5);
                assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8, "i={i} e={e}");
            }
        }
    }
}

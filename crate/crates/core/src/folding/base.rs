//! Base preparation: the rectangle `(0, alpha) x (0, 1)` is smeared onto the
//! band over `u in (0, N)`, `N = k^{2n-1}`, lying above the graph of `g` and
//! below the graph of `h + g`.
//!
//! `Theta(s, v) = (U(s), h(U(s)) v + g(U(s)))` with `U` the inverse of
//! `H(u) = int_0^u h`. Since `U' = 1/h` the Jacobian has determinant one.

use crate::error::Result;
use crate::folding::enumeration::check_k;
use crate::geometry::{Matrix, SymplecticMap};
use crate::profile::Trapezoid;

#[derive(Clone, Debug)]
pub struct BasePrep {
    pub k: usize,
    pub n: usize,
    pub h: Trapezoid,
    /// `A = int_0^k h = k^2 - 3k + 3`.
    pub area: f64,
    /// `alpha = k^{2n-2} A`.
    pub alpha: f64,
    /// Band length `N = k^{2n-1}`: `k^{2n-2}` rectangles of length `k`.
    pub band_length: f64,
}

pub fn prepare_base(k: usize, n: usize) -> Result<BasePrep> {
    check_k(k)?;
    if n < 2 {
        return Err(crate::Error::BadDimension(format!("n = {n} must be >= 2")));
    }
    let h = Trapezoid::new(k);
    let area = h.period_area();
    let cubes = (k as f64).powi(2 * n as i32 - 2);
    Ok(BasePrep { k, n, h, area, alpha: cubes * area, band_length: cubes * k as f64 })
}

impl BasePrep {
    /// Lower boundary `g`: `0` up to `N - 2`, `k - h` on `(N - 2, N)`, `k - 1` beyond.
    pub fn g(&self, u: f64) -> f64 {
        let n = self.band_length;
        let k = self.k as f64;
        if u <= n - 2.0 {
            0.0
        } else if u >= n {
            k - 1.0
        } else {
            k - self.h.value(u)
        }
    }

    pub fn g_d1(&self, u: f64) -> f64 {
        let n = self.band_length;
        if u <= n - 2.0 || u >= n {
            0.0
        } else {
            -self.h.d1(u)
        }
    }

    /// Upper boundary `h + g`.
    pub fn top(&self, u: f64) -> f64 {
        self.h.value(u) + self.g(u)
    }

    pub fn theta(&self, s: f64, v: f64) -> (f64, f64) {
        let u = self.h.primitive_inverse(s);
        (u, self.h.value(u) * v + self.g(u))
    }

    pub fn theta_jacobian(&self, s: f64, v: f64) -> [[f64; 2]; 2] {
        let u = self.h.primitive_inverse(s);
        let hu = self.h.value(u);
        [[1.0 / hu, 0.0], [(self.h.d1(u) * v + self.g_d1(u)) / hu, hu]]
    }

    pub fn theta_inverse(&self, u: f64, w: f64) -> (f64, f64) {
        (self.h.primitive(u), (w - self.g(u)) / self.h.value(u))
    }

    /// Whether `(u, w)` lies in the open band, i.e. in the image of `Theta`.
    pub fn in_band(&self, u: f64, w: f64) -> bool {
        u > 0.0 && u < self.band_length && w > self.g(u) && w < self.top(u)
    }
}

/// `Theta x id` on `R^{2n}`.
pub struct ThetaMap {
    pub base: BasePrep,
}

impl SymplecticMap for ThetaMap {
    fn dim(&self) -> usize {
        2 * self.base.n
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut w = z.to_vec();
        let (u, v) = self.base.theta(z[0], z[1]);
        w[0] = u;
        w[1] = v;
        Ok(w)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let d = self.dim();
        let mut j = Matrix::identity(d, d);
        let t = self.base.theta_jacobian(z[0], z[1]);
        for a in 0..2 {
            for b in 0..2 {
                j[(a, b)] = t[a][b];
            }
        }
        Ok(j)
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        let mut z = w.to_vec();
        let (s, v) = self.base.theta_inverse(w[0], w[1]);
        z[0] = s;
        z[1] = v;
        Some(Ok(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_and_area() {
        let b = prepare_base(5, 2).unwrap();
        assert_eq!(b.area, 13.0);
        assert_eq!(b.alpha, 325.0);
        assert_eq!(b.band_length, 125.0);
        assert!((b.h.primitive(b.band_length) - b.alpha).abs() < 1e-10);
    }

    #[test]
    fn identity_on_unit_square() {
        let b = prepare_base(5, 2).unwrap();
        for i in 1..50 {
            for j in 1..10 {
                let (s, v) = (i as f64 / 50.0, j as f64 / 10.0);
                let (u, w) = b.theta(s, v);
                assert!((u - s).abs() <= 1e-15 && (w - v).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn exit_lands_on_top_plateau() {
        let b = prepare_base(5, 2).unwrap();
        for i in 1..20 {
            let (u, w) = b.theta(b.alpha - 0.05 * i as f64, 0.5);
            assert!((u - (b.band_length - 0.05 * i as f64)).abs() < 1e-10);
            assert!(w > 4.0 && w < 5.0);
        }
    }

    #[test]
    fn determinant_and_round_trip() {
        let b = prepare_base(5, 2).unwrap();
        for i in 0..400 {
            let s = 0.3 + i as f64 * 0.8;
            let v = 0.1 + (i % 9) as f64 * 0.1;
            let j = b.theta_jacobian(s, v);
            assert!((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs() < 1e-12);
            let (u, w) = b.theta(s, v);
            assert!(b.in_band(u, w));
            let (s2, v2) = b.theta_inverse(u, w);
            assert!((s2 - s).abs() < 1e-10 && (v2 - v).abs() < 1e-12);
        }
    }
}

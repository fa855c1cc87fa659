//! The transition map `gamma_+` on the strip `(-1/8 - ..) x (0, 1)`.
//!
//! `gamma_+` carries the strip along a ribbon that runs right along `v = 0`,
//! turns up a column just left of `u = 0`, and turns back left along
//! `v = k`. In ribbon coordinates `F(s, t) = C(sigma(s)) + tau(s, t) N(sigma)`
//! with `C` an arclength-parametrized centerline, `N` its left normal, and
//!
//! - `s = -1/8 + W(sigma)`, `W' = w` the thickness profile,
//! - `tau - kappa tau^2 / 2 = t w`,
//!
//! so that `det DF = sigma_s (1 - kappa tau) tau_t = 1`. Where `w = 1` and
//! the centerline is straight the map is the identity (bottom) or the point
//! reflection `(s, t) -> (-s, k - t)` (top). The total `int w` is `1/4`, which
//! makes both ends meet the strip edges `s = -1/8` and `s = 1/8`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::profile::{quarter_turn, step_jet, step_primitive_ext, STEP_D1_MAX};

/// Length of the straight runs at either end.
const LAMBDA: f64 = 1.0 / 64.0;
/// Horizontal (and vertical) displacement of each quarter turn.
const TURN_OFFSET: f64 = 0.085;
/// Width of the thickness transition inside the column.
const COLUMN_RAMP: f64 = 0.5;
/// Bound on `2 kappa w t` in the turns.
const TURN_LOAD: f64 = 0.25;

/// Centerline frame and thickness at one arclength.
#[derive(Clone, Copy, Debug)]
struct Frame {
    c: [f64; 2],
    theta: f64,
    kappa: f64,
    kappa_d1: f64,
    w: f64,
    w_d1: f64,
}

#[derive(Clone, Debug)]
pub struct Ribbon {
    pub k: f64,
    /// Arclength of each quarter turn.
    pub turn_len: f64,
    pub column_u: f64,
    pub column_len: f64,
    /// Thickness in the turns.
    pub w_turn: f64,
    /// Thickness in the middle of the column.
    pub w_column: f64,
    /// Segment ends: bottom run, turn, column, turn, top run.
    knots: [f64; 6],
    /// `W` at the knots.
    w_knots: [f64; 6],
}

impl Ribbon {
    pub fn new(k: usize) -> Result<Self> {
        let kf = k as f64;
        let (pc, _) = quarter_turn();
        let d1 = pc.total();
        let turn_len = TURN_OFFSET / d1;
        let kappa_max = FRAC_PI_2 * STEP_D1_MAX / turn_len;
        let w_turn = TURN_LOAD / kappa_max;
        let column_len = kf - 2.0 * TURN_OFFSET;
        let column_u = -0.125 + LAMBDA + TURN_OFFSET;
        if column_len <= 2.0 * COLUMN_RAMP {
            return Err(Error::TransitionConstructionFailed(format!("column too short for k = {k}")));
        }
        let w_column = (0.25 - LAMBDA * (1.0 + w_turn) - 2.0 * turn_len * w_turn - w_turn * COLUMN_RAMP)
            / (column_len - COLUMN_RAMP);
        if !(w_column > 0.0 && w_column < TURN_OFFSET) {
            return Err(Error::TransitionConstructionFailed(format!(
                "column thickness {w_column} outside (0, {TURN_OFFSET})"
            )));
        }
        let knots = [
            0.0,
            LAMBDA,
            LAMBDA + turn_len,
            LAMBDA + turn_len + column_len,
            LAMBDA + 2.0 * turn_len + column_len,
            2.0 * LAMBDA + 2.0 * turn_len + column_len,
        ];
        let mut r = Ribbon { k: kf, turn_len, column_u, column_len, w_turn, w_column, knots, w_knots: [0.0; 6] };
        let mut acc = 0.0;
        for i in 1..6 {
            acc += r.segment_integral(i - 1, knots[i] - knots[i - 1]);
            r.w_knots[i] = acc;
        }
        // The closed-form sum cancels terms of size ~k, so rounding grows with k.
        if (acc - 0.25).abs() > 1e-13 + 1e-16 * kf {
            return Err(Error::TransitionConstructionFailed(format!("thickness integral {acc} != 1/4")));
        }
        Ok(r)
    }

    pub fn total_len(&self) -> f64 {
        self.knots[5]
    }

    fn segment(&self, sigma: f64) -> usize {
        (0..5).find(|&i| sigma < self.knots[i + 1]).unwrap_or(5)
    }

    /// `int w` over the first `x` of segment `i`.
    fn segment_integral(&self, i: usize, x: f64) -> f64 {
        let (wt, wc, m) = (self.w_turn, self.w_column, COLUMN_RAMP);
        match i {
            0 => x + (wt - 1.0) * LAMBDA * step_primitive_ext(x / LAMBDA),
            1 | 3 => wt * x,
            2 => {
                let l = self.column_len;
                wt * x + (wc - wt) * m * (step_primitive_ext(x / m) - step_primitive_ext((x - l + m) / m))
            }
            4 => wt * x + (1.0 - wt) * LAMBDA * step_primitive_ext(x / LAMBDA),
            _ => x,
        }
    }

    /// `W(sigma) = int_0^sigma w`, extended with slope 1 outside the ribbon.
    fn big_w(&self, sigma: f64) -> f64 {
        if sigma < 0.0 {
            return sigma;
        }
        let i = self.segment(sigma);
        self.w_knots[i] + self.segment_integral(i, sigma - self.knots[i])
    }

    fn frame(&self, sigma: f64) -> Frame {
        let (pc, ps) = quarter_turn();
        let (wt, wc, m) = (self.w_turn, self.w_column, COLUMN_RAMP);
        let x0 = -0.125;
        let d = TURN_OFFSET;
        if sigma < 0.0 {
            return Frame { c: [x0 + sigma, 0.0], theta: 0.0, kappa: 0.0, kappa_d1: 0.0, w: 1.0, w_d1: 0.0 };
        }
        let i = self.segment(sigma);
        let x = sigma - self.knots[i];
        let ell = self.turn_len;
        match i {
            0 => {
                let (s, s1, _) = step_jet(x / LAMBDA);
                Frame {
                    c: [x0 + x, 0.0],
                    theta: 0.0,
                    kappa: 0.0,
                    kappa_d1: 0.0,
                    w: 1.0 + (wt - 1.0) * s,
                    w_d1: (wt - 1.0) * s1 / LAMBDA,
                }
            }
            1 | 3 => {
                let y = x / ell;
                let (s, s1, s2) = step_jet(y);
                let (a, b) = (ell * pc.eval(y), ell * ps.eval(y));
                let (c, base) = if i == 1 {
                    ([x0 + LAMBDA + a, b], 0.0)
                } else {
                    ([self.column_u - b, d + self.column_len + a], FRAC_PI_2)
                };
                Frame {
                    c,
                    theta: base + FRAC_PI_2 * s,
                    kappa: FRAC_PI_2 * s1 / ell,
                    kappa_d1: FRAC_PI_2 * s2 / (ell * ell),
                    w: wt,
                    w_d1: 0.0,
                }
            }
            2 => {
                let l = self.column_len;
                let (a, a1, _) = step_jet(x / m);
                let (b, b1, _) = step_jet((x - l + m) / m);
                Frame {
                    c: [self.column_u, d + x],
                    theta: FRAC_PI_2,
                    kappa: 0.0,
                    kappa_d1: 0.0,
                    w: wt + (wc - wt) * (a - b),
                    w_d1: (wc - wt) * (a1 - b1) / m,
                }
            }
            4 => {
                let (s, s1, _) = step_jet(x / LAMBDA);
                Frame {
                    c: [x0 + LAMBDA - x, self.k],
                    theta: PI,
                    kappa: 0.0,
                    kappa_d1: 0.0,
                    w: wt + (1.0 - wt) * s,
                    w_d1: (1.0 - wt) * s1 / LAMBDA,
                }
            }
            _ => Frame { c: [x0 - x, self.k], theta: PI, kappa: 0.0, kappa_d1: 0.0, w: 1.0, w_d1: 0.0 },
        }
    }

    /// `sigma` with `W(sigma) = s + 1/8`.
    fn sigma_of(&self, s: f64) -> f64 {
        let target = s + 0.125;
        if target <= 0.0 {
            return target;
        }
        if target >= 0.25 {
            return self.knots[5] + (target - 0.25);
        }
        let i = (0..5).find(|&i| target < self.w_knots[i + 1]).unwrap_or(4);
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        let mut sigma = lo + (target - self.w_knots[i]) / (self.w_knots[i + 1] - self.w_knots[i]) * (hi - lo);
        for _ in 0..100 {
            let f = self.big_w(sigma) - target;
            if f > 0.0 {
                hi = sigma;
            } else {
                lo = sigma;
            }
            let next = sigma - f / self.frame(sigma).w;
            let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (next - sigma).abs() <= 1e-16 * (1.0 + sigma.abs()) {
                return next;
            }
            sigma = next;
        }
        sigma
    }

    fn tau_of(f: &Frame, t: f64) -> f64 {
        let q = 2.0 * f.kappa * t * f.w;
        2.0 * t * f.w / (1.0 + (1.0 - q).sqrt())
    }

    /// Whether `(s, t)` is in the ribbon part (not an exact branch).
    fn in_ribbon(s: f64) -> bool {
        s > -0.125 && s < 0.125
    }

    pub fn eval(&self, s: f64, t: f64) -> [f64; 2] {
        if s <= -0.125 {
            return [s, t];
        }
        if s >= 0.125 {
            return [-s, self.k - t];
        }
        let f = self.frame(self.sigma_of(s));
        let tau = Self::tau_of(&f, t);
        let n = [-f.theta.sin(), f.theta.cos()];
        [f.c[0] + tau * n[0], f.c[1] + tau * n[1]]
    }

    /// `DF` at `(s, t)` as rows `[[du/ds, du/dt], [dv/ds, dv/dt]]`.
    pub fn jacobian(&self, s: f64, t: f64) -> [[f64; 2]; 2] {
        if s <= -0.125 {
            return [[1.0, 0.0], [0.0, 1.0]];
        }
        if s >= 0.125 {
            return [[-1.0, 0.0], [0.0, -1.0]];
        }
        let f = self.frame(self.sigma_of(s));
        let tau = Self::tau_of(&f, t);
        let shrink = 1.0 - f.kappa * tau;
        let sigma_s = 1.0 / f.w;
        let tau_t = f.w / shrink;
        let tau_s = sigma_s * (t * f.w_d1 + 0.5 * f.kappa_d1 * tau * tau) / shrink;
        let tv = [f.theta.cos(), f.theta.sin()];
        let nv = [-tv[1], tv[0]];
        let ds = [sigma_s * shrink * tv[0] + tau_s * nv[0], sigma_s * shrink * tv[1] + tau_s * nv[1]];
        let dt = [tau_t * nv[0], tau_t * nv[1]];
        [[ds[0], dt[0]], [ds[1], dt[1]]]
    }

    /// Ribbon coordinates `(sigma, tau)` of `q` by Newton from `seed`.
    fn newton(&self, q: [f64; 2], mut sigma: f64, mut tau: f64) -> Option<(f64, f64)> {
        for _ in 0..50 {
            let f = self.frame(sigma);
            let tv = [f.theta.cos(), f.theta.sin()];
            let nv = [-tv[1], tv[0]];
            let r = [q[0] - f.c[0] - tau * nv[0], q[1] - f.c[1] - tau * nv[1]];
            let shrink = 1.0 - f.kappa * tau;
            if shrink <= 0.1 {
                return None;
            }
            let dsig = (r[0] * tv[0] + r[1] * tv[1]) / shrink;
            let dtau = r[0] * nv[0] + r[1] * nv[1];
            sigma += dsig.clamp(-0.05, 0.05);
            tau += dtau;
            if dsig.abs() < 1e-15 && dtau.abs() < 1e-15 {
                break;
            }
        }
        Some((sigma, tau))
    }

    fn seeds(&self, q: [f64; 2]) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let d = TURN_OFFSET;
        if q[1] > d && q[1] < self.k - d {
            out.push((self.knots[2] + (q[1] - d), self.column_u - q[0]));
        }
        let mut best: Vec<(f64, f64, f64)> = Vec::new();
        let spans = [(self.knots[0], self.knots[2]), (self.knots[3], self.knots[5])];
        for &(a, b) in &spans {
            for j in 0..=200 {
                let sigma = a + (b - a) * j as f64 / 200.0;
                let f = self.frame(sigma);
                let tv = [f.theta.cos(), f.theta.sin()];
                let r = [q[0] - f.c[0], q[1] - f.c[1]];
                let along = r[0] * tv[0] + r[1] * tv[1];
                let tau = -r[0] * tv[1] + r[1] * tv[0];
                if tau > -0.05 && tau < 1.05 {
                    best.push((along.abs(), sigma, tau));
                }
            }
        }
        best.sort_by(|x, y| x.0.total_cmp(&y.0));
        out.extend(best.iter().take(3).map(|&(_, s, t)| (s, t)));
        out
    }

    /// Candidate preimages `(s, t)` of `q`; callers confirm by forward evaluation.
    pub fn inverse_candidates(&self, q: [f64; 2]) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if q[0] <= -0.125 {
            out.push((q[0], q[1]));
            out.push((-q[0], self.k - q[1]));
            return out;
        }
        for (s0, t0) in self.seeds(q) {
            if let Some((sigma, tau)) = self.newton(q, s0, t0) {
                if sigma <= 0.0 || sigma >= self.knots[5] {
                    continue;
                }
                let f = self.frame(sigma);
                let t = (tau - 0.5 * f.kappa * tau * tau) / f.w;
                let s = -0.125 + self.big_w(sigma);
                if Self::in_ribbon(s) {
                    out.push((s, t));
                }
            }
        }
        out
    }

    /// Audit: exact branches agree with the ribbon at the strip edges and the
    /// area condition `2 kappa w < 1` holds along the centerline.
    pub fn audit(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for j in 0..=2000 {
            let sigma = self.knots[5] * j as f64 / 2000.0;
            let f = self.frame(sigma);
            let load = 2.0 * f.kappa * f.w;
            if load >= 1.0 {
                return Err(Error::TransitionConstructionFailed(format!("tube overlap at sigma = {sigma}")));
            }
            worst = worst.max(load);
        }
        for &t in &[0.01, 0.5, 0.99] {
            for &(s, expect) in &[(-0.125 + 1e-9, [-0.125 + 1e-9, t]), (0.125 - 1e-9, [-0.125 + 1e-9, self.k - t])] {
                let p = self.eval(s, t);
                let e = (p[0] - expect[0]).abs().max((p[1] - expect[1]).abs());
                if e > 1e-8 {
                    return Err(Error::TransitionConstructionFailed(format!("edge mismatch {e} at s = {s}")));
                }
            }
        }
        Ok(worst)
    }
}

//! Smooth one-dimensional profiles built from the `exp(-1/t)` mollifier.
//!
//! Every profile used by the constructions (the trapezoid `h`, the lift ramp
//! `rho`, the bump `chi`, plateau cutoffs) is assembled from the single
//! smoothstep [`step`] and its primitive [`step_primitive`].

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

/// 10-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Gauss-Legendre quadrature of `f` over `[a, b]` on `panels` equal panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

/// Smoothstep `S(x) = f(x) / (f(x) + f(1-x))` with `f(t) = exp(-1/t)`.
/// `S = 0` on `(-inf, 0]`, `S = 1` on `[1, inf)`, and `S(1-x) = 1 - S(x)`.
pub fn step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let l = 1.0 / x - 1.0 / (1.0 - x);
        if l > 0.0 {
            let e = (-l).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + l.exp())
        }
    }
}

/// `(S, S', S'')` at `x`.
pub fn step_jet(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let s = step(x);
    let y = 1.0 - x;
    let q = 1.0 / (x * x) + 1.0 / (y * y);
    let dq = -2.0 / (x * x * x) + 2.0 / (y * y * y);
    let qq = s * (1.0 - s);
    let d1 = qq * q;
    let dqq = d1 * (1.0 - 2.0 * s);
    let d2 = dqq * q + qq * dq;
    (s, d1, d2)
}

pub fn step_d1(x: f64) -> f64 {
    step_jet(x).1
}

/// Running integral of a smooth function on `[0, 1]`, tabulated on a fine
/// grid and completed by a local Gauss-Legendre rule.
pub struct Primitive {
    f: fn(f64) -> f64,
    table: Vec<f64>,
}

const PRIMITIVE_CELLS: usize = 2048;

impl Primitive {
    pub fn new(f: fn(f64) -> f64) -> Self {
        let h = 1.0 / PRIMITIVE_CELLS as f64;
        let mut table = Vec::with_capacity(PRIMITIVE_CELLS + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for i in 0..PRIMITIVE_CELLS {
            acc += gauss_legendre(f, i as f64 * h, (i + 1) as f64 * h, 1);
            table.push(acc);
        }
        Primitive { f, table }
    }

    /// `int_0^x f` for `x` in `[0, 1]` (clamped).
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let i = ((x * PRIMITIVE_CELLS as f64) as usize).min(PRIMITIVE_CELLS - 1);
        let x0 = i as f64 / PRIMITIVE_CELLS as f64;
        if x == x0 {
            return self.table[i];
        }
        self.table[i] + gauss_legendre(self.f, x0, x, 1)
    }

    pub fn total(&self) -> f64 {
        self.table[PRIMITIVE_CELLS]
    }
}

fn step_primitive_table() -> &'static Primitive {
    static T: OnceLock<Primitive> = OnceLock::new();
    T.get_or_init(|| Primitive::new(step))
}

/// `P(x) = int_0^x S` on `[0, 1]`, with `P(1) = 1/2` exactly by the symmetry of `S`.
pub fn step_primitive(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        0.5
    } else if x <= 0.5 {
        step_primitive_table().eval(x)
    } else {
        // int_x^1 S = int_0^{1-x} (1 - S)
        let y = 1.0 - x;
        0.5 - y + step_primitive_table().eval(y)
    }
}

/// `P` extended to the real line: 0 left of 0 and `1/2 + (x - 1)` right of 1.
pub fn step_primitive_ext(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        0.5 + (x - 1.0)
    } else {
        step_primitive(x)
    }
}

fn turn_cos(x: f64) -> f64 {
    (FRAC_PI_2 * step(x)).cos()
}

fn turn_sin(x: f64) -> f64 {
    (FRAC_PI_2 * step(x)).sin()
}

/// Primitives of `cos(pi/2 S)` and `sin(pi/2 S)`: the unit-length quarter turn
/// with heading `pi/2 S(x)`.
pub fn quarter_turn() -> &'static (Primitive, Primitive) {
    static T: OnceLock<(Primitive, Primitive)> = OnceLock::new();
    T.get_or_init(|| (Primitive::new(turn_cos), Primitive::new(turn_sin)))
}

/// Maximum of `S'` on `[0, 1]`, attained at `x = 1/2`.
pub const STEP_D1_MAX: f64 = 2.0;

/// Lift ramp: nondecreasing, `0` on `(-inf, lo]`, `1` on `[hi, inf)`, with
/// `rho'` a smoothed plateau of height `slope`.
#[derive(Clone, Debug)]
pub struct Ramp {
    pub lo: f64,
    pub hi: f64,
    /// Width of each smoothing step of `rho'`.
    pub width: f64,
    pub slope: f64,
}

impl Default for Ramp {
    fn default() -> Self {
        Ramp::new(-0.75, -0.25, 0.1)
    }
}

impl Ramp {
    pub fn new(lo: f64, hi: f64, width: f64) -> Self {
        assert!(hi - lo > 2.0 * width && width > 0.0);
        Ramp { lo, hi, width, slope: 1.0 / (hi - lo - width) }
    }

    fn z(&self, t: f64) -> (f64, f64) {
        ((t - self.lo) / self.width, (t - (self.hi - self.width)) / self.width)
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.lo {
            return 0.0;
        }
        if t >= self.hi {
            return 1.0;
        }
        let (z0, z1) = self.z(t);
        self.slope * self.width * (step_primitive_ext(z0) - step_primitive_ext(z1))
    }

    pub fn d1(&self, t: f64) -> f64 {
        if t <= self.lo || t >= self.hi {
            return 0.0;
        }
        let (z0, z1) = self.z(t);
        self.slope * (step(z0) - step(z1))
    }

    pub fn d2(&self, t: f64) -> f64 {
        if t <= self.lo || t >= self.hi {
            return 0.0;
        }
        let (z0, z1) = self.z(t);
        self.slope / self.width * (step_d1(z0) - step_d1(z1))
    }
}

/// Even, `k`-periodic trapezoid: `1` on `[0,1]`, rising on `[1,2]`, `k` on
/// `[2, k-2]`, mirrored on `[k-2, k]`.
#[derive(Clone, Debug)]
pub struct Trapezoid {
    pub k: f64,
}

impl Trapezoid {
    pub fn new(k: usize) -> Self {
        Trapezoid { k: k as f64 }
    }

    /// `int_0^k h = k^2 - 3k + 3`.
    pub fn period_area(&self) -> f64 {
        let k = self.k;
        k * k - 3.0 * k + 3.0
    }

    /// Reduced phase in `[0, k/2]` and the sign of `d(phase)/du`.
    fn phase(&self, u: f64) -> (f64, f64) {
        let k = self.k;
        let t = u.rem_euclid(k);
        if t <= 0.5 * k {
            (t, 1.0)
        } else {
            (k - t, -1.0)
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        let (t, _) = self.phase(u);
        if t <= 1.0 {
            1.0
        } else if t >= 2.0 {
            self.k
        } else {
            1.0 + (self.k - 1.0) * step(t - 1.0)
        }
    }

    pub fn d1(&self, u: f64) -> f64 {
        let (t, sign) = self.phase(u);
        if t <= 1.0 || t >= 2.0 {
            0.0
        } else {
            sign * (self.k - 1.0) * step_d1(t - 1.0)
        }
    }

    /// `int_1^y h` for `y` in `[1, 2]`.
    fn rise(&self, y: f64) -> f64 {
        (y - 1.0) + (self.k - 1.0) * step_primitive(y - 1.0)
    }

    fn knots(&self) -> [f64; 4] {
        let k = self.k;
        let h2 = 1.0 + self.rise(2.0);
        let hk2 = h2 + k * (k - 4.0);
        let hk1 = hk2 + self.rise(2.0);
        [1.0, h2, hk2, hk1]
    }

    /// `int_0^t h` for `t` in `[0, k]`.
    fn period_primitive(&self, t: f64) -> f64 {
        let k = self.k;
        let [h1, h2, hk2, hk1] = self.knots();
        if t <= 1.0 {
            t
        } else if t <= 2.0 {
            h1 + self.rise(t)
        } else if t <= k - 2.0 {
            h2 + k * (t - 2.0)
        } else if t <= k - 1.0 {
            hk2 + self.rise(2.0) - self.rise(k - t)
        } else {
            hk1 + (t - (k - 1.0))
        }
    }

    /// `H(u) = int_0^u h`.
    pub fn primitive(&self, u: f64) -> f64 {
        let q = (u / self.k).floor();
        let t = u - q * self.k;
        q * self.period_area() + self.period_primitive(t)
    }

    /// Solve `rise(y) = r` for `y` in `[1, 2]`.
    fn rise_inverse(&self, r: f64) -> f64 {
        let (mut lo, mut hi) = (1.0, 2.0);
        let mut y = 1.0 + r / (1.0 + self.rise(2.0)).max(1.0);
        for _ in 0..100 {
            let f = self.rise(y) - r;
            if f > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let d = 1.0 + (self.k - 1.0) * step(y - 1.0);
            let mut next = y - f / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 1e-16 * y.abs() || hi - lo < 1e-15 {
                y = next;
                break;
            }
            y = next;
        }
        y
    }

    fn period_primitive_inverse(&self, r: f64) -> f64 {
        let k = self.k;
        let [h1, h2, hk2, hk1] = self.knots();
        if r <= h1 {
            r
        } else if r <= h2 {
            self.rise_inverse(r - h1)
        } else if r <= hk2 {
            2.0 + (r - h2) / k
        } else if r <= hk1 {
            k - self.rise_inverse(hk2 + self.rise(2.0) - r)
        } else {
            k - 1.0 + (r - hk1)
        }
    }

    /// `U = H^{-1}`.
    pub fn primitive_inverse(&self, s: f64) -> f64 {
        let a = self.period_area();
        let q = (s / a).floor();
        let r = s - q * a;
        q * self.k + self.period_primitive_inverse(r)
    }
}

/// Even bump `chi(t) = exp(1 - 1/(1 - t^2))` on `(-1, 1)`, `0` outside.
pub fn bump(t: f64) -> f64 {
    let d = 1.0 - t * t;
    if d <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / d).exp()
    }
}

pub fn bump_d1(t: f64) -> f64 {
    let d = 1.0 - t * t;
    if d <= 0.0 {
        0.0
    } else {
        bump(t) * (-2.0 * t / (d * d))
    }
}

/// Plateau cutoff in a distance variable: `1` for `d <= inner`, `0` for
/// `d >= outer`, smooth and nonincreasing in between.
#[derive(Clone, Copy, Debug)]
pub struct Plateau {
    pub inner: f64,
    pub outer: f64,
}

impl Plateau {
    pub fn jet(&self, d: f64) -> (f64, f64, f64) {
        let w = self.outer - self.inner;
        let (s, s1, s2) = step_jet((d - self.inner) / w);
        (1.0 - s, -s1 / w, -s2 / (w * w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_symmetry_and_primitive_midpoint() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((step(x) + step(1.0 - x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(step_primitive(1.0), 0.5);
        assert!((step_primitive_table().total() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn step_derivatives_match_differences() {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let h = 1e-6;
            let (_, d1, d2) = step_jet(x);
            assert!((d1 - (step(x + h) - step(x - h)) / (2.0 * h)).abs() < 1e-7);
            assert!((d2 - (step_d1(x + h) - step_d1(x - h)) / (2.0 * h)).abs() < 1e-5);
        }
        assert!((step_d1(0.5) - STEP_D1_MAX).abs() < 1e-15);
    }

    #[test]
    fn primitive_matches_fine_quadrature() {
        for &x in &[0.03, 0.2, 0.5, 0.61, 0.99] {
            let reference = gauss_legendre(step, 0.0, x, 400);
            assert!((step_primitive(x) - reference).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn ramp_plateaus_and_slope_bound() {
        let r = Ramp::default();
        assert_eq!(r.value(-0.75), 0.0);
        assert_eq!(r.value(-0.25), 1.0);
        assert!((r.value(-0.2500001) - 1.0).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 0..=10_000 {
            let t = -1.0 + i as f64 * 1e-4;
            let v = r.value(t);
            assert!(v >= prev - 1e-15);
            assert!(r.d1(t) <= 2.5 + 1e-12 && r.d1(t) >= 0.0);
            prev = v;
        }
        assert!((r.d1(-0.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_area_and_inverse() {
        let h = Trapezoid::new(5);
        let numeric = gauss_legendre(|u| h.value(u), 0.0, 5.0, 2000);
        assert!((numeric - 13.0).abs() < 1e-9);
        assert!((h.primitive(5.0) - 13.0).abs() < 1e-13);
        for i in 0..500 {
            let u = i as f64 * 0.2513;
            let s = h.primitive(u);
            assert!((h.primitive_inverse(s) - u).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn bump_is_even_and_decreasing() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        let mut prev = 1.0;
        for i in 1..1000 {
            let t = i as f64 / 1000.0;
            assert_eq!(bump(t), bump(-t));
            assert!(bump(t) < prev);
            prev = bump(t);
        }
    }
}

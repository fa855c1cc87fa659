//! The moment map `Phi_std`, the cutoff profile `rho_a`, the involutive map
//! `Phi_{iota;a} = rho_a o Phi_std o iota^{-1}` (zero off the image), exact
//! fibers of `rho_a`, and finite-difference involutivity audits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{BoxToPolydisk, TotalEmbedding};
use crate::error::{Error, Result};
use crate::folding::Membership;
use crate::geometry::{bracket_from_gradients, SymplecticMap};

/// Slack of the monotone-branch audit, relative to the branch maximum.
const MONOTONE_SLACK: f64 = 1e-13;
/// Number of checkpoints of the monotone-branch audit.
const MONOTONE_CHECKPOINTS: usize = 100;
/// Relative excess over the branch maximum still treated as the frontier.
const FRONTIER_BAND: f64 = 1e-9;
/// Round-trip residual a product solution must meet.
pub const FIBER_RESIDUAL_TOL: f64 = 1e-10;

/// `chi(t) = exp(1 - 1/(1 - t^2))` on `(-1, 1)`, zero elsewhere.
pub fn chi(t: f64) -> f64 {
    let s = 1.0 - t * t;
    if s <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / s).exp()
    }
}

/// `(|z_1|^2, .., |z_n|^2)` for `z = (x_1, y_1, .., x_n, y_n)`.
pub fn phi_std(z: &[f64]) -> Vec<f64> {
    z.chunks(2).map(|p| p[0] * p[0] + p[1] * p[1]).collect()
}

/// `rho_a(t) = prod_j chi(t_j / a_j) * (a_j^2 - t_j^2)_j`.
pub fn rho_a(a: &[f64], t: &[f64]) -> Vec<f64> {
    let w: f64 = a.iter().zip(t).map(|(aj, tj)| chi(tj / aj)).product();
    if w == 0.0 {
        return vec![0.0; a.len()];
    }
    a.iter().zip(t).map(|(aj, tj)| w * (aj * aj - tj * tj)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberSolution {
    /// `c = 0`: everything off the open box `prod (-a_j, a_j)`.
    ComplementOfBox,
    /// `rho_a^{-1}(c) = prod {-alpha_j, alpha_j}`.
    Product { alpha: Vec<f64>, residual: f64 },
}

impl FiberSolution {
    /// Every sign choice of `alpha`, zero entries counted once.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let FiberSolution::Product { alpha, .. } = self else { return Vec::new() };
        let mut out = vec![Vec::with_capacity(alpha.len())];
        for &x in alpha {
            let signs: &[f64] = if x == 0.0 { &[1.0] } else { &[1.0, -1.0] };
            out = out
                .into_iter()
                .flat_map(|p| {
                    signs.iter().map(move |s| {
                        let mut q = p.clone();
                        q.push(s * x);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// The first equation after eliminating `t_j`, `j >= 2`, in favor of `t_1`.
struct ReducedEquation<'a> {
    a: &'a [f64],
    d: Vec<f64>,
}

impl ReducedEquation<'_> {
    fn others(&self, t1: f64) -> Vec<f64> {
        let gap = self.a[0] * self.a[0] - t1 * t1;
        self.a.iter().zip(&self.d).map(|(aj, dj)| (aj * aj - dj * gap).max(0.0).sqrt()).collect()
    }

    fn value(&self, t1: f64) -> f64 {
        let t = self.others(t1);
        let w: f64 = self.a[1..].iter().zip(&t[1..]).map(|(aj, tj)| chi(tj / aj)).product();
        chi(t1 / self.a[0]) * w * (self.a[0] * self.a[0] - t1 * t1)
    }

    /// Left end of the branch: the `t_j` are real for `t_1 >= lo`.
    fn lower_end(&self) -> f64 {
        let a1 = self.a[0];
        let m = self.a[1..].iter().zip(&self.d[1..]).map(|(aj, dj)| aj * aj / dj).fold(f64::INFINITY, f64::min);
        (a1 * a1 - m).max(0.0).sqrt()
    }
}

/// Solves `rho_a(t) = c` on the quadrant `t >= 0`.
pub fn rho_fiber_solve(a: &[f64], c: &[f64]) -> Result<FiberSolution> {
    if a.is_empty() || a.len() != c.len() || a.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::Config("fiber solve needs a in (0, inf)^n and c of the same length".into()));
    }
    if c.iter().all(|&x| x == 0.0) {
        return Ok(FiberSolution::ComplementOfBox);
    }
    if c.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::NotInImage);
    }
    let eq = ReducedEquation { a, d: c.iter().map(|x| x / c[0]).collect() };
    let (lo, hi) = (eq.lower_end(), a[0]);
    let top = eq.value(lo);
    if c[0] > top * (1.0 + FRONTIER_BAND) {
        return Err(Error::NotInImage);
    }
    if c[0] > top {
        return Err(Error::BisectionStall);
    }
    let mut prev = top;
    for i in 1..=MONOTONE_CHECKPOINTS {
        let v = eq.value(lo + (hi - lo) * i as f64 / MONOTONE_CHECKPOINTS as f64);
        if v > prev + MONOTONE_SLACK * top {
            return Err(Error::BisectionStall);
        }
        prev = v;
    }
    // Invariant: value(l) >= c_1 > value(h).
    let (mut l, mut h) = (lo, hi);
    loop {
        let mid = 0.5 * (l + h);
        if mid <= l || mid >= h {
            break;
        }
        if eq.value(mid) >= c[0] {
            l = mid;
        } else {
            h = mid;
        }
    }
    let mut alpha = eq.others(l);
    alpha[0] = l;
    let back = rho_a(a, &alpha);
    let residual = back.iter().zip(c).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if residual > FIBER_RESIDUAL_TOL {
        return Err(Error::BisectionStall);
    }
    Ok(FiberSolution::Product { alpha, residual })
}

/// `n_samples` points of `T(alpha)` with uniformly random angles.
pub fn torus_points(alpha: &[f64], n_samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            alpha
                .iter()
                .flat_map(|&x| {
                    let th = rng.gen_range(0.0..std::f64::consts::TAU);
                    let r = x.sqrt();
                    [r * th.cos(), r * th.sin()]
                })
                .collect()
        })
        .collect()
}

/// Dimension of `T(alpha)`: the number of nonzero `alpha_j`.
pub fn torus_dimension(alpha: &[f64]) -> usize {
    alpha.iter().filter(|&&x| x != 0.0).count()
}

/// A symplectic embedding of a polydisk `P(b)` with a way back.
pub trait PolydiskChart: Sync {
    fn dim(&self) -> usize;
    /// Squared radii `b_j`.
    fn radii_squared(&self) -> Vec<f64>;
    fn embed(&self, w: &[f64]) -> Result<Vec<f64>>;
    /// `iota^{-1}(z)`, or `None` off the image.
    fn locate(&self, z: &[f64]) -> Result<Option<Vec<f64>>>;
}

/// `P(b)` sitting in `C^n` by the identity.
#[derive(Clone, Debug)]
pub struct IdentityChart {
    pub b: Vec<f64>,
}

impl PolydiskChart for IdentityChart {
    fn dim(&self) -> usize {
        2 * self.b.len()
    }
    fn radii_squared(&self) -> Vec<f64> {
        self.b.clone()
    }
    fn embed(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(w.to_vec())
    }
    fn locate(&self, z: &[f64]) -> Result<Option<Vec<f64>>> {
        Ok(phi_std(z).iter().zip(&self.b).all(|(r, b)| r < b).then(|| z.to_vec()))
    }
}

/// The assembled embedding precomposed with the action-angle map of the
/// box onto `P(beta eta/pi, eta^2/pi, ..)`. Its domain is the polydisk
/// minus the slits where the angle is zero, so the image is open and
/// `Phi_{iota;a}` is smooth on it.
pub struct EmbeddedChart {
    pub total: TotalEmbedding,
    pub disk: BoxToPolydisk,
}

impl EmbeddedChart {
    pub fn new(total: TotalEmbedding) -> Self {
        let plan = total.plan();
        let disk = crate::assembly::box_to_polydisk(plan.beta, plan.eta, plan.dim / 2);
        EmbeddedChart { total, disk }
    }

    /// Image points `iota(w)` for box points with angles in
    /// `(margin, 1 - margin)` of a turn and actions in `(margin, top)` of the
    /// height.
    pub fn sample_image(&self, n_samples: usize, seed: u64, margin: f64, top: f64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let mut u = Vec::with_capacity(self.dim());
            for (l, h) in self.disk.sides.iter().zip(&self.disk.heights) {
                u.push(l * rng.gen_range(margin..1.0 - margin));
                u.push(h * rng.gen_range(margin..top));
            }
            out.push(self.total.eval(&u)?);
        }
        Ok(out)
    }
}

impl PolydiskChart for EmbeddedChart {
    fn dim(&self) -> usize {
        self.total.dim()
    }
    fn radii_squared(&self) -> Vec<f64> {
        self.disk.radii_squared()
    }
    fn embed(&self, w: &[f64]) -> Result<Vec<f64>> {
        let u = self.disk.inverse(w).expect("action-angle map is invertible")?;
        self.total.eval(&u)
    }
    fn locate(&self, z: &[f64]) -> Result<Option<Vec<f64>>> {
        match self.total.membership(z) {
            Membership::In { witness, .. } => Ok(Some(self.disk.eval(&witness)?)),
            Membership::Out => Ok(None),
            Membership::Unknown => Err(Error::MembershipUnknown),
        }
    }
}

/// `Phi_{iota;a}(z)`: zero off the image, `rho_a(Phi_std(iota^{-1}(z)))` on it.
pub fn phi_iota_a(chart: &dyn PolydiskChart, a: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let b = chart.radii_squared();
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| !(*x > 0.0 && x < y)) {
        return Err(Error::Config(format!("cutoff a = {a:?} must satisfy 0 < a_j < b_j = {b:?}")));
    }
    if z.len() != chart.dim() {
        return Err(Error::BadDimension(format!("point of length {} in dimension {}", z.len(), chart.dim())));
    }
    Ok(match chart.locate(z)? {
        Some(w) => rho_a(a, &phi_std(&w)),
        None => vec![0.0; a.len()],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketReport {
    pub step: f64,
    pub points: usize,
    /// Points whose stencil hit `MembershipUnknown` or another error.
    pub skipped: usize,
    /// `max |{Phi_i, Phi_j}|` over points and pairs `i < j`.
    pub max_bracket: f64,
    /// `max |{Phi_i, Phi_j}| / (|d Phi_i| |d Phi_j|)`, zero where a gradient vanishes.
    pub max_normalized: f64,
}

/// Central-difference Jacobian rows of a vector map.
fn gradients<F>(phi: &F, z: &[f64], step: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let mut p = z.to_vec();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..z.len() {
        p[i] = z[i] + step;
        let fp = phi(&p)?;
        p[i] = z[i] - step;
        let fm = phi(&p)?;
        p[i] = z[i];
        if rows.is_empty() {
            rows = vec![vec![0.0; z.len()]; fp.len()];
        }
        for (r, (a, b)) in rows.iter_mut().zip(fp.iter().zip(&fm)) {
            r[i] = (a - b) / (2.0 * step);
        }
    }
    Ok(rows)
}

/// Maximum pairwise Poisson bracket of the components of `phi` over `points`.
pub fn involutivity_certify<F>(phi: &F, points: &[Vec<f64>], step: f64) -> BracketReport
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + ?Sized,
{
    let per_point: Vec<Option<(f64, f64)>> = points
        .par_iter()
        .map(|z| {
            let rows = gradients(phi, z, step).ok()?;
            let norms: Vec<f64> = rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
            let (mut abs, mut rel) = (0.0f64, 0.0f64);
            for i in 0..rows.len() {
                for j in i + 1..rows.len() {
                    let b = bracket_from_gradients(&rows[i], &rows[j]).abs();
                    abs = abs.max(b);
                    let scale = norms[i] * norms[j];
                    if scale > 0.0 {
                        rel = rel.max(b / scale);
                    }
                }
            }
            Some((abs, rel))
        })
        .collect();
    let ok: Vec<(f64, f64)> = per_point.iter().flatten().copied().collect();
    BracketReport {
        step,
        points: ok.len(),
        skipped: points.len() - ok.len(),
        max_bracket: ok.iter().map(|p| p.0).fold(0.0, f64::max),
        max_normalized: ok.iter().map(|p| p.1).fold(0.0, f64::max),
    }
}

/// Certifies at `step, step/2, ..` (`levels` values) to separate
/// finite-difference error from model error.
pub fn step_halving_study<F>(phi: &F, points: &[Vec<f64>], step: f64, levels: usize) -> Vec<BracketReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + ?Sized,
{
    (0..levels).map(|i| involutivity_certify(phi, points, step / f64::powi(2.0, i as i32))).collect()
}

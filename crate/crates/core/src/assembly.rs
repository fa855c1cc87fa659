//! A long thin box `(0, beta) x (0, eta)^{2n-1}` embedded so that its image
//! carries `mu`-mass `> 1 - eps`, in the flat ambient model.
//!
//! The cubes of a [`cube_cover`] are translated to the staircase positions
//! `w^(i) = ((4i-3)a', (2i-1)a', ..)`; in that frame `nu` is the translated
//! restriction of `mu`. A scaled folding embedding is placed in each cube
//! `B_i' = B_{w^(i)}(a') - (0, (i-1)eta, ..)`, consecutive copies are joined by
//! straight translated slabs, and a cutoff translation by `xi` moves the
//! excluded lattice planes off the atoms of `nu`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::folding::{build_polydisk_embedding, FoldingEmbedding, Membership};
use crate::geometry::{integrate_flow, Hamiltonian, Matrix, SymplecticMap};
use crate::lattice::{cube_cover, find_lattice_shift, measure_of_lattice, CubeCover, Lattice};
use crate::measure::{measure_of_box, sample, Atom, MeasureSpec, QueryBox, UniformBox};
use crate::profile::Plateau;

/// Relative bisection precision for `a''`.
const RADIUS_BISECTION_STEPS: usize = 200;
/// RK4 step of the cutoff flow; the field has size `|xi|`, so this is far
/// inside the accuracy needed.
const CUTOFF_FLOW_STEP: f64 = 1e-2;
/// Gluing tolerance between consecutive scaled folds.
const ALIGNMENT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingPlan {
    pub dim: usize,
    pub eps: f64,
    /// Number of cubes `r`.
    pub r: usize,
    /// Half-side of the cover cubes.
    pub a: f64,
    /// `a''`: closed cubes of this half-side carry mass `> 1 - eps`.
    pub a_inner: f64,
    /// `a'`: half-side of the cubes receiving the folded polydisks.
    pub a_mid: f64,
    pub delta: f64,
    pub k: usize,
    pub eta: f64,
    /// Length of one scaled folding embedding.
    pub fold_length: f64,
    pub beta: f64,
    /// Cover cube centers `z^(i)`.
    pub sources: Vec<Vec<f64>>,
    /// Staircase centers `w^(i)`.
    pub targets: Vec<Vec<f64>>,
    /// Alignment shifts `s_i`.
    pub shifts: Vec<Vec<f64>>,
    /// `sum_i mu(closed B_{z^(i)}(a''))`.
    pub inner_mass: f64,
    pub cover_mass: f64,
}

impl EmbeddingPlan {
    /// Bound on `|xi|`.
    pub fn xi_bound(&self) -> f64 {
        let rm1 = (self.r - 1) as f64;
        let gap = self.a_mid - self.a_inner;
        (gap - rm1 * self.eta).min(gap - 2.0 * self.eta).min(self.delta - rm1 * self.eta)
    }

    /// Center of `B_i'` (0-based `i`).
    pub fn shifted_center(&self, i: usize) -> Vec<f64> {
        self.targets[i].iter().zip(&self.shifts[i]).map(|(w, s)| w + s).collect()
    }

    /// Re-check every numeric invariant of the plan.
    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(format!("plan invariant violated: {m}")));
        if !(self.a_inner < self.a_mid && self.a_mid < self.a && self.a_mid > self.a - self.a_mid) {
            return fail(format!("radii a''={} a'={} a={}", self.a_inner, self.a_mid, self.a));
        }
        let rm1 = (self.r - 1) as f64;
        let gap = self.a_mid - self.a_inner;
        let mut bound = gap / 2.0;
        if self.r > 1 {
            bound = bound.min(gap / rm1).min(self.delta / rm1);
        }
        if !(self.eta < bound) {
            return fail(format!("eta {} >= {bound}", self.eta));
        }
        let beta = self.r as f64 * self.fold_length + rm1 * 2.0 * self.a_mid;
        if (beta - self.beta).abs() > 1e-12 * beta {
            return fail("beta".into());
        }
        for i in 0..self.r {
            for j in 0..i {
                let d = self.targets[i].iter().zip(&self.targets[j]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                if !(d >= 2.0 * self.a) {
                    return fail(format!("target cubes {j} and {i} overlap"));
                }
            }
        }
        Ok(())
    }
}

fn inner_mass(mu: &MeasureSpec, centers: &[Vec<f64>], rho: f64) -> f64 {
    centers.iter().map(|c| measure_of_box(mu, &QueryBox::ball(c, rho, true))).sum()
}

/// Smallest odd `k >= 5` with `2a'/k < bound`.
fn smallest_k(a_mid: f64, bound: f64) -> Result<usize> {
    if !(bound > 0.0) {
        return Err(Error::EpsilonTooSmall("empty window for eta".into()));
    }
    let mut k = ((2.0 * a_mid / bound).floor() as usize + 1).max(5);
    if k.is_multiple_of(2) {
        k += 1;
    }
    while 2.0 * a_mid / k as f64 >= bound {
        k += 2;
    }
    Ok(k)
}

pub fn plan_embedding(mu: &MeasureSpec, eps: f64) -> Result<EmbeddingPlan> {
    let cover = cube_cover(mu, eps)?;
    plan_from_cover(mu, eps, &cover)
}

pub fn plan_from_cover(mu: &MeasureSpec, eps: f64, cover: &CubeCover) -> Result<EmbeddingPlan> {
    let n = mu.dim;
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::BadDimension(format!("ambient dimension {n} must be even and >= 4")));
    }
    let r = cover.centers.len();
    let a = cover.radius();
    let target = 1.0 - eps;
    if !(inner_mass(mu, &cover.centers, a * (1.0 - 1e-12)) > target) {
        return Err(Error::EpsilonTooSmall(format!("cover cubes carry no mass margin above {target}")));
    }
    // F(rho) = sum mu(closed B(rho)) is nondecreasing and right-continuous.
    let (mut lo, mut hi) = (0.0, a * (1.0 - 1e-12));
    if inner_mass(mu, &cover.centers, 0.0) > target {
        hi = 0.0;
    } else {
        for _ in 0..RADIUS_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if inner_mass(mu, &cover.centers, mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * a {
                break;
            }
        }
    }
    let a_inner = hi + 0.25 * (a - hi);
    let inner = inner_mass(mu, &cover.centers, a_inner);
    if !(inner > target) {
        return Err(Error::EpsilonTooSmall(format!("inner mass {inner} <= {target}")));
    }
    let a_mid = 0.5 * (a + a_inner.max(0.5 * a));
    let delta = 0.5 * (a - a_mid);
    let gap = a_mid - a_inner;
    let mut bound = gap / 2.0;
    if r > 1 {
        let rm1 = (r - 1) as f64;
        bound = bound.min(gap / rm1).min(delta / rm1);
    }
    let k = smallest_k(a_mid, bound)?;
    let eta = 2.0 * a_mid / k as f64;
    let fold_alpha = crate::folding::base::prepare_base(k, n / 2)?.alpha;
    let fold_length = eta * fold_alpha;
    let beta = r as f64 * fold_length + (r as f64 - 1.0) * 2.0 * a_mid;
    // Frame coordinates reach beta; their rounding must stay inside the
    // tolerance at which consecutive folds are glued.
    if beta * f64::EPSILON > ALIGNMENT_TOL {
        return Err(Error::EpsilonTooSmall(format!(
            "r = {r}, k = {k} give a box of length {beta:e}, beyond double precision"
        )));
    }
    let targets: Vec<Vec<f64>> = (1..=r)
        .map(|i| {
            (0..n)
                .map(|j| if j == 0 { (4 * i - 3) as f64 * a_mid } else { (2 * i - 1) as f64 * a_mid })
                .collect()
        })
        .collect();
    let shifts: Vec<Vec<f64>> =
        (0..r).map(|i| (0..n).map(|j| if j == 0 { 0.0 } else { -(i as f64) * eta }).collect()).collect();
    let plan = EmbeddingPlan {
        dim: n,
        eps,
        r,
        a,
        a_inner,
        a_mid,
        delta,
        k,
        eta,
        fold_length,
        beta,
        sources: cover.centers.clone(),
        targets,
        shifts,
        inner_mass: inner,
        cover_mass: cover.covered_mass,
    };
    plan.check()?;
    Ok(plan)
}

/// `nu`: the part of `mu` inside each cover cube, translated by `w^(i) - z^(i)`.
pub fn pullback_measure(plan: &EmbeddingPlan, mu: &MeasureSpec) -> MeasureSpec {
    let n = plan.dim;
    let mut atoms = Vec::new();
    let mut boxes = Vec::new();
    for (z, w) in plan.sources.iter().zip(&plan.targets) {
        let t: Vec<f64> = w.iter().zip(z).map(|(a, b)| a - b).collect();
        let cube = QueryBox::ball(z, plan.a, false);
        for (p, m) in mu.point_masses() {
            if cube.contains(&p) {
                atoms.push(Atom { point: p.iter().zip(&t).map(|(x, s)| x + s).collect(), mass: m });
            }
        }
        for b in &mu.boxes {
            let min: Vec<f64> = (0..n).map(|i| b.min[i].max(z[i] - plan.a)).collect();
            let max: Vec<f64> = (0..n).map(|i| b.max[i].min(z[i] + plan.a)).collect();
            if (0..n).all(|i| max[i] > min[i]) {
                let clipped = UniformBox { min: min.clone(), max: max.clone(), mass: 0.0 };
                let mass = b.mass * clipped.volume() / b.volume();
                boxes.push(UniformBox {
                    min: min.iter().zip(&t).map(|(x, s)| x + s).collect(),
                    max: max.iter().zip(&t).map(|(x, s)| x + s).collect(),
                    mass,
                });
            }
        }
    }
    MeasureSpec { dim: n, atoms, boxes, samples: vec![], sample_mass: 0.0 }
}

/// Translation of a point of the original space into the staircase frame,
/// if it lies in a cover cube.
pub fn to_frame(plan: &EmbeddingPlan, x: &[f64]) -> Option<Vec<f64>> {
    plan.sources.iter().zip(&plan.targets).find_map(|(z, w)| {
        QueryBox::ball(z, plan.a, false)
            .contains(x)
            .then(|| x.iter().zip(w.iter().zip(z)).map(|(p, (wi, zi))| p + wi - zi).collect())
    })
}

fn in_open_cube(p: &[f64], c: &[f64], rad: f64) -> bool {
    p.iter().zip(c).all(|(x, y)| (x - y).abs() < rad)
}

/// `iota-hat` on `(0, beta) x (0, eta)^{2n-1}`.
pub struct HatIota {
    pub plan: EmbeddingPlan,
    pub fold: Arc<FoldingEmbedding>,
}

/// Which formula of `iota-hat` applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HatPiece {
    /// Scaled fold in cube `i` (0-based).
    Fold(usize),
    /// Connector `i >= 1` between cubes `i - 1` and `i`.
    Connector(usize),
}

impl HatIota {
    fn period(&self) -> f64 {
        self.plan.fold_length + 2.0 * self.plan.a_mid
    }

    /// `w^(i) - w^(1) + s_i`.
    fn placement(&self, i: usize) -> Vec<f64> {
        let p = &self.plan;
        (0..p.dim).map(|j| p.targets[i][j] - p.targets[0][j] + p.shifts[i][j]).collect()
    }

    fn connector_shift(&self, i: usize) -> Vec<f64> {
        let p = &self.plan;
        (0..p.dim)
            .map(|j| if j == 0 { i as f64 * (2.0 * p.a_mid - p.fold_length) } else { i as f64 * (2.0 * p.a_mid - p.eta) })
            .collect()
    }

    fn piece(&self, u: f64) -> HatPiece {
        let per = self.period();
        let i = (u / per).floor().max(0.0) as usize;
        let i = i.min(self.plan.r - 1);
        if u - i as f64 * per < self.plan.fold_length {
            HatPiece::Fold(i)
        } else {
            HatPiece::Connector(i + 1)
        }
    }

    pub fn domain_depth(&self, z: &[f64]) -> f64 {
        let e = self.plan.eta;
        let mut d = z[0].min(self.plan.beta - z[0]);
        for x in &z[1..] {
            d = d.min(x.min(e - x));
        }
        d
    }

    fn local(&self, i: usize, z: &[f64]) -> Vec<f64> {
        let e = self.plan.eta;
        let mut l: Vec<f64> = z.iter().map(|x| x / e).collect();
        l[0] = (z[0] - i as f64 * self.period()) / e;
        l
    }

    pub fn membership(&self, p: &[f64]) -> Membership {
        let plan = &self.plan;
        let e = plan.eta;
        let mut unknown = false;
        for i in 0..plan.r {
            if !in_open_cube(p, &plan.shifted_center(i), plan.a_mid) {
                continue;
            }
            let off = self.placement(i);
            let q: Vec<f64> = p.iter().zip(&off).map(|(x, o)| (x - o) / e).collect();
            match self.fold.membership(&q) {
                Membership::In { witness, .. } => {
                    let mut z: Vec<f64> = witness.iter().map(|x| x * e).collect();
                    z[0] += i as f64 * self.period();
                    if let Some(m) = self.confirm(p, z) {
                        return m;
                    }
                }
                Membership::Unknown => unknown = true,
                Membership::Out => {}
            }
        }
        for i in 1..plan.r {
            let s = self.connector_shift(i);
            let z: Vec<f64> = p.iter().zip(&s).map(|(x, o)| x - o).collect();
            let lo = i as f64 * plan.fold_length + (i - 1) as f64 * 2.0 * plan.a_mid - e;
            let hi = i as f64 * plan.fold_length + i as f64 * 2.0 * plan.a_mid + e;
            if z[0] > lo && z[0] < hi && z[1..].iter().all(|&x| x > 0.0 && x < e) {
                if let Some(m) = self.confirm(p, z) {
                    return m;
                }
            }
        }
        if unknown {
            Membership::Unknown
        } else {
            Membership::Out
        }
    }

    fn confirm(&self, p: &[f64], z: Vec<f64>) -> Option<Membership> {
        if self.domain_depth(&z) <= 0.0 {
            return None;
        }
        let q = self.eval(&z).ok()?;
        let residual = q.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (residual <= crate::folding::WITNESS_TOL).then_some(Membership::In { witness: z, residual })
    }

    /// Exit of copy `i` against entry of copy `i + 1` on the shared slabs.
    pub fn check_alignment(&self) -> Result<()> {
        let p = &self.plan;
        let e = p.eta;
        for i in 1..p.r {
            for &frac in &[0.1, 0.5, 0.9] {
                let mut z = vec![0.5 * e; p.dim];
                z[0] = i as f64 * p.fold_length + (i - 1) as f64 * 2.0 * p.a_mid - frac * e;
                let a = self.fold_piece(i - 1, &z)?;
                let b = self.connector(i, &z);
                let mut z2 = z.clone();
                z2[0] = i as f64 * self.period() + frac * e;
                let c = self.fold_piece(i, &z2)?;
                let d = self.connector(i, &z2);
                let err = a
                    .iter()
                    .zip(&b)
                    .chain(c.iter().zip(&d))
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                if err > ALIGNMENT_TOL {
                    return Err(Error::AlignmentFailure(err));
                }
            }
        }
        Ok(())
    }

    fn fold_piece(&self, i: usize, z: &[f64]) -> Result<Vec<f64>> {
        let e = self.plan.eta;
        let q = self.fold.eval(&self.local(i, z))?;
        Ok(q.iter().zip(self.placement(i)).map(|(x, o)| e * x + o).collect())
    }

    fn connector(&self, i: usize, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.connector_shift(i)).map(|(x, s)| x + s).collect()
    }
}

impl SymplecticMap for HatIota {
    fn dim(&self) -> usize {
        self.plan.dim
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        match self.piece(z[0]) {
            HatPiece::Fold(i) => self.fold_piece(i, z),
            HatPiece::Connector(i) => Ok(self.connector(i, z)),
        }
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        match self.piece(z[0]) {
            HatPiece::Fold(i) => self.fold.jacobian(&self.local(i, z)),
            HatPiece::Connector(_) => Ok(Matrix::identity(self.plan.dim, self.plan.dim)),
        }
    }
}

/// `K = chi(z) <c, z>` with `X_{<c,z>} = xi` and `chi` a sum of product
/// plateaus, `1` on each `C_i` and `0` off `C_i'`.
pub struct CutoffTranslation {
    pub xi: Vec<f64>,
    c: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub plateau: Vec<Plateau>,
}

impl CutoffTranslation {
    pub fn new(plan: &EmbeddingPlan, xi: Vec<f64>) -> Self {
        let c: Vec<f64> = xi.chunks(2).flat_map(|p| [p[1], -p[0]]).collect();
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let plateau = (0..plan.r)
            .map(|i| {
                let inner = plan.a_mid + i as f64 * plan.eta + norm;
                Plateau { inner, outer: 0.5 * (inner + plan.a) }
            })
            .collect();
        CutoffTranslation { xi, c, centers: plan.targets.clone(), plateau }
    }

    /// `(chi, grad chi, hess chi)`.
    fn cutoff(&self, z: &[f64]) -> (f64, Vec<f64>, Matrix) {
        let n = z.len();
        let mut v = 0.0;
        let mut g = vec![0.0; n];
        let mut h = Matrix::zeros(n, n);
        for (c, pl) in self.centers.iter().zip(&self.plateau) {
            let jets: Vec<(f64, f64, f64)> = (0..n)
                .map(|j| {
                    let d = z[j] - c[j];
                    let (p0, p1, p2) = pl.jet(d.abs());
                    (p0, p1 * d.signum(), p2)
                })
                .collect();
            if jets.iter().any(|j| j.0 == 0.0) {
                continue;
            }
            let prod_except = |skip: &[usize]| -> f64 {
                (0..n).filter(|j| !skip.contains(j)).map(|j| jets[j].0).product()
            };
            v += prod_except(&[]);
            for a in 0..n {
                g[a] += jets[a].1 * prod_except(&[a]);
                h[(a, a)] += jets[a].2 * prod_except(&[a]);
                for b in 0..a {
                    let x = jets[a].1 * jets[b].1 * prod_except(&[a, b]);
                    h[(a, b)] += x;
                    h[(b, a)] += x;
                }
            }
        }
        (v, g, h)
    }

    fn linear(&self, z: &[f64]) -> f64 {
        self.c.iter().zip(z).map(|(a, b)| a * b).sum()
    }
}

impl Hamiltonian for CutoffTranslation {
    fn dim(&self) -> usize {
        self.xi.len()
    }
    fn value(&self, z: &[f64]) -> f64 {
        self.cutoff(z).0 * self.linear(z)
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let (v, g, _) = self.cutoff(z);
        let l = self.linear(z);
        (0..z.len()).map(|j| v * self.c[j] + l * g[j]).collect()
    }
    fn hessian(&self, z: &[f64]) -> Matrix {
        let (_, g, h) = self.cutoff(z);
        let l = self.linear(z);
        let n = z.len();
        let mut m = h * l;
        for a in 0..n {
            for b in 0..n {
                m[(a, b)] += g[a] * self.c[b] + self.c[a] * g[b];
            }
        }
        m
    }
}

/// Time-1 map `phi_K` of the cutoff translation.
pub struct CutoffFlow {
    pub k: CutoffTranslation,
    /// `B_i'` as (center, half-side).
    pub cubes: Vec<(Vec<f64>, f64)>,
}

enum FlowZone {
    Translate,
    Fixed,
    Flow,
}

impl CutoffFlow {
    pub fn new(plan: &EmbeddingPlan, xi: Vec<f64>) -> Self {
        let cubes = (0..plan.r).map(|i| (plan.shifted_center(i), plan.a_mid)).collect();
        CutoffFlow { k: CutoffTranslation::new(plan, xi), cubes }
    }

    fn zone(&self, z: &[f64], sign: f64) -> FlowZone {
        let back: Vec<f64> = z.iter().zip(&self.k.xi).map(|(a, x)| a - x).collect();
        let probe = if sign > 0.0 { z } else { &back[..] };
        if self.cubes.iter().any(|(c, r)| in_open_cube(probe, c, *r)) {
            return FlowZone::Translate;
        }
        let outside = self.k.centers.iter().zip(&self.k.plateau).all(|(c, pl)| !in_open_cube(z, c, pl.outer));
        if outside {
            FlowZone::Fixed
        } else {
            FlowZone::Flow
        }
    }

    pub fn is_identity(&self) -> bool {
        self.k.xi.iter().all(|&x| x == 0.0)
    }
}

impl SymplecticMap for CutoffFlow {
    fn dim(&self) -> usize {
        self.k.xi.len()
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        if self.is_identity() {
            return Ok(z.to_vec());
        }
        Ok(match self.zone(z, 1.0) {
            FlowZone::Translate => z.iter().zip(&self.k.xi).map(|(a, x)| a + x).collect(),
            FlowZone::Fixed => z.to_vec(),
            FlowZone::Flow => integrate_flow(&self.k, 1.0, z, CUTOFF_FLOW_STEP, false).0,
        })
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let n = self.dim();
        if self.is_identity() {
            return Ok(Matrix::identity(n, n));
        }
        Ok(match self.zone(z, 1.0) {
            FlowZone::Flow => integrate_flow(&self.k, 1.0, z, CUTOFF_FLOW_STEP, true).1.expect("jacobian requested"),
            _ => Matrix::identity(n, n),
        })
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        if self.is_identity() {
            return Some(Ok(w.to_vec()));
        }
        Some(Ok(match self.zone(w, -1.0) {
            FlowZone::Translate => w.iter().zip(&self.k.xi).map(|(a, x)| a - x).collect(),
            FlowZone::Fixed => w.to_vec(),
            FlowZone::Flow => integrate_flow(&self.k, -1.0, w, CUTOFF_FLOW_STEP, false).0,
        }))
    }
}

/// `xi` with `nu(T_xi(Sigma((eta/2, ..), eta))) = 0` and `|xi| < xi_bound`.
pub fn correction_shift(plan: &EmbeddingPlan, nu: &MeasureSpec) -> Result<Vec<f64>> {
    let bound = plan.xi_bound();
    if !(bound > 0.0) {
        return Err(Error::ShiftBoundUnsatisfiable);
    }
    let n = plan.dim;
    let half = 0.5 * bound / (n as f64).sqrt();
    // T_xi(Sigma((eta/2, ..), eta)) = Sigma(xi, eta): planes x_j = xi_j + eta Z.
    let y0 = -0.5 * plan.eta;
    let search = QueryBox::open(vec![y0 - half; n], vec![y0 + half; n]);
    let y = find_lattice_shift(nu, plan.eta, &search)?;
    let xi: Vec<f64> = y.iter().map(|v| v + 0.5 * plan.eta).collect();
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm < bound) {
        return Err(Error::ShiftBoundUnsatisfiable);
    }
    Ok(xi)
}

/// The excluded lattice `T_xi(Sigma((eta/2, ..), eta))`.
pub fn excluded_lattice(plan: &EmbeddingPlan, xi: &[f64]) -> Lattice {
    Lattice { y: xi.iter().map(|x| x - 0.5 * plan.eta).collect(), a: plan.eta }
}

/// `phi o iota-hat`, mapping into the staircase frame.
pub struct TotalEmbedding {
    pub hat: HatIota,
    pub phi: CutoffFlow,
    pub xi: Vec<f64>,
}

impl TotalEmbedding {
    pub fn plan(&self) -> &EmbeddingPlan {
        &self.hat.plan
    }

    pub fn membership(&self, q: &[f64]) -> Membership {
        let Some(Ok(p)) = self.phi.inverse(q) else { return Membership::Unknown };
        match self.hat.membership(&p) {
            Membership::In { witness, .. } => match self.eval(&witness) {
                Ok(w) => {
                    let residual = w.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    if residual <= crate::folding::WITNESS_TOL {
                        Membership::In { witness, residual }
                    } else {
                        Membership::Unknown
                    }
                }
                Err(_) => Membership::Unknown,
            },
            other => other,
        }
    }

    /// Membership of a point of the original space.
    pub fn covers(&self, x: &[f64]) -> Membership {
        match to_frame(self.plan(), x) {
            Some(q) => self.membership(&q),
            None => Membership::Out,
        }
    }
}

impl SymplecticMap for TotalEmbedding {
    fn dim(&self) -> usize {
        self.hat.plan.dim
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.phi.eval(&self.hat.eval(z)?)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let w = self.hat.eval(z)?;
        Ok(self.phi.jacobian(&w)? * self.hat.jacobian(z)?)
    }
}

pub fn assemble_hat_iota(plan: &EmbeddingPlan, fold: Arc<FoldingEmbedding>) -> Result<HatIota> {
    if fold.k != plan.k || 2 * fold.n != plan.dim {
        return Err(Error::Config(format!("fold built for k={} n={}, plan needs k={}", fold.k, fold.n, plan.k)));
    }
    let hat = HatIota { plan: plan.clone(), fold };
    hat.check_alignment()?;
    Ok(hat)
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomCheck {
    pub point: Vec<f64>,
    pub mass: f64,
    pub covered: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageReport {
    /// `nu(union closed B_{w^(i)}(a'') minus T_xi(Sigma))`, by measure arithmetic.
    pub exact_bound: f64,
    pub inner_mass: f64,
    /// `nu` of the excluded lattice; zero by the choice of `xi`.
    pub lattice_mass: f64,
    pub mc_samples: usize,
    pub mc_covered: usize,
    pub mc_unknown: usize,
    pub mc_fraction: f64,
    pub mc_sigma: f64,
    pub atoms: Vec<AtomCheck>,
    pub xi: Vec<f64>,
    pub xi_bound: f64,
}

pub fn build_total_embedding(mu: &MeasureSpec, eps: f64) -> Result<TotalEmbedding> {
    let plan = plan_embedding(mu, eps)?;
    let fold = Arc::new(build_polydisk_embedding(plan.k, plan.dim / 2)?);
    let hat = assemble_hat_iota(&plan, fold)?;
    let nu = pullback_measure(&plan, mu);
    let xi = correction_shift(&plan, &nu)?;
    let phi = CutoffFlow::new(&plan, xi.clone());
    Ok(TotalEmbedding { hat, phi, xi })
}

pub fn coverage_report(total: &TotalEmbedding, mu: &MeasureSpec, samples: usize, seed: u64) -> CoverageReport {
    let plan = total.plan();
    let nu = pullback_measure(plan, mu);
    let lattice_mass = measure_of_lattice(&nu, &excluded_lattice(plan, &total.xi));
    let inner: f64 = plan.targets.iter().map(|w| measure_of_box(&nu, &QueryBox::ball(w, plan.a_inner, true))).sum();
    let exact_bound = inner - lattice_mass;
    let pts = sample(mu, samples, seed);
    let verdicts: Vec<Membership> = pts.par_iter().map(|x| total.covers(x)).collect();
    let mc_covered = verdicts.iter().filter(|m| m.is_in()).count();
    let mc_unknown = verdicts.iter().filter(|m| matches!(m, Membership::Unknown)).count();
    let frac = mc_covered as f64 / samples.max(1) as f64;
    let atoms = mu
        .atoms
        .iter()
        .map(|a| AtomCheck { point: a.point.clone(), mass: a.mass, covered: total.covers(&a.point).is_in() })
        .collect();
    CoverageReport {
        exact_bound,
        inner_mass: inner,
        lattice_mass,
        mc_samples: samples,
        mc_covered,
        mc_unknown,
        mc_fraction: frac,
        mc_sigma: (frac * (1.0 - frac) / samples.max(1) as f64).sqrt(),
        atoms,
        xi: total.xi.clone(),
        xi_bound: plan.xi_bound(),
    }
}

pub fn embed_measure(mu: &MeasureSpec, eps: f64, samples: usize, seed: u64) -> Result<(TotalEmbedding, CoverageReport)> {
    let total = build_total_embedding(mu, eps)?;
    let report = coverage_report(&total, mu, samples, seed);
    Ok((total, report))
}

/// Area-preserving map of `(0, l) x (0, h)` onto the open disk of area `lh`,
/// minus a radius: `(s, t) -> rho (cos 2 pi s/l, -sin 2 pi s/l)`, `rho^2 = l t / pi`.
#[derive(Clone, Debug)]
pub struct BoxToPolydisk {
    pub sides: Vec<f64>,
    pub heights: Vec<f64>,
}

pub fn box_to_polydisk(beta: f64, eta: f64, n: usize) -> BoxToPolydisk {
    let mut sides = vec![eta; n];
    sides[0] = beta;
    BoxToPolydisk { sides, heights: vec![eta; n] }
}

impl BoxToPolydisk {
    /// Squared radii `a_j` of the polydisk `P(a_1, .., a_n)`.
    pub fn radii_squared(&self) -> Vec<f64> {
        self.sides.iter().zip(&self.heights).map(|(l, h)| l * h / std::f64::consts::PI).collect()
    }
}

impl SymplecticMap for BoxToPolydisk {
    fn dim(&self) -> usize {
        2 * self.sides.len()
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut w = vec![0.0; z.len()];
        for (j, &l) in self.sides.iter().enumerate() {
            let (s, t) = (z[2 * j], z[2 * j + 1]);
            let rho = (l * t / std::f64::consts::PI).sqrt();
            let ph = std::f64::consts::TAU * s / l;
            w[2 * j] = rho * ph.cos();
            w[2 * j + 1] = -rho * ph.sin();
        }
        Ok(w)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let d = z.len();
        let mut m = Matrix::zeros(d, d);
        for (j, &l) in self.sides.iter().enumerate() {
            let (s, t) = (z[2 * j], z[2 * j + 1]);
            let rho = (l * t / std::f64::consts::PI).sqrt();
            let drho = l / (2.0 * std::f64::consts::PI * rho);
            let ph = std::f64::consts::TAU * s / l;
            let dph = std::f64::consts::TAU / l;
            let (x, y) = (2 * j, 2 * j + 1);
            m[(x, x)] = -rho * ph.sin() * dph;
            m[(x, y)] = drho * ph.cos();
            m[(y, x)] = -rho * ph.cos() * dph;
            m[(y, y)] = -drho * ph.sin();
        }
        Ok(m)
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        let mut z = vec![0.0; w.len()];
        for (j, &l) in self.sides.iter().enumerate() {
            let (x, y) = (w[2 * j], w[2 * j + 1]);
            let r2 = x * x + y * y;
            let ph = (-y).atan2(x).rem_euclid(std::f64::consts::TAU);
            z[2 * j] = l * ph / std::f64::consts::TAU;
            z[2 * j + 1] = std::f64::consts::PI * r2 / l;
        }
        Some(Ok(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(points: &[(Vec<f64>, f64)]) -> MeasureSpec {
        MeasureSpec {
            dim: points[0].0.len(),
            atoms: points.iter().map(|(p, m)| Atom { point: p.clone(), mass: *m }).collect(),
            boxes: vec![],
            samples: vec![],
            sample_mass: 0.0,
        }
    }

    #[test]
    fn single_atom_plan() {
        let mu = atoms(&[(vec![0.3, 0.1, -0.2, 0.7], 1.0)]);
        let (total, rep) = embed_measure(&mu, 0.1, 200, 3).unwrap();
        assert_eq!(total.plan().r, 1);
        assert_eq!(rep.exact_bound, 1.0);
        assert!(rep.atoms[0].covered);
        assert_eq!(rep.mc_covered, 200);
    }

    #[test]
    fn three_separated_atoms() {
        let mu = atoms(&[
            (vec![0.0, 0.0, 0.0, 0.0], 0.5),
            (vec![3.0, 0.0, 1.0, 0.0], 0.3),
            (vec![0.0, -2.0, 0.5, 4.0], 0.2),
        ]);
        let plan = plan_embedding(&mu, 0.05).unwrap();
        assert_eq!(plan.r, 3);
        plan.check().unwrap();
    }

    #[test]
    fn polydisk_map_round_trip() {
        let b = box_to_polydisk(3.0, 0.5, 2);
        for i in 1..50 {
            let z = [3.0 * i as f64 / 50.0, 0.5 * ((i * 7) % 50) as f64 / 50.0 + 0.001, 0.01 * i as f64, 0.2];
            let w = b.eval(&z).unwrap();
            let back = b.inverse(&w).unwrap().unwrap();
            for j in 0..4 {
                assert!((back[j] - z[j]).abs() < 1e-10);
            }
            assert!(b.defect(&z).unwrap() < 1e-8);
        }
        assert!((b.radii_squared()[0] * std::f64::consts::PI - 1.5).abs() < 1e-15);
    }
}

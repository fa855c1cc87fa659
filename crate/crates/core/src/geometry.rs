//! Elementary symplectic maps of `R^{2n}` with coordinates `(x1, y1, ..., xn, yn)`
//! and form `sum dx_j ^ dy_j`.
//!
//! Hamiltonian vector fields satisfy `i_X omega = -dH`, so
//! `X_H = (-dH/dy_j, dH/dx_j)` per pair and `{f, g} = df(X_g)`. Under this
//! convention the time-1 map of `rho(x1)(a x_j + b)` shifts `y1` by
//! `rho'(x1)(a x_j + b)` and `y_j` by `a rho(x1)`, and `{x1, y1} = -1`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{gauss_legendre, Ramp, Trapezoid};

pub type Matrix = DMatrix<f64>;

/// Seams closer than this are resolved by the first listed piece.
pub const SEAM_TOL: f64 = 1e-9;

pub fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 || !dim.is_multiple_of(2) {
        return Err(Error::BadDimension(format!("{dim} is not an even number >= 2")));
    }
    Ok(())
}

/// Matrix of the standard form: `omega(a, b) = a^T Omega b`.
pub fn standard_form(dim: usize) -> Matrix {
    let mut o = Matrix::zeros(dim, dim);
    for j in 0..dim / 2 {
        o[(2 * j, 2 * j + 1)] = 1.0;
        o[(2 * j + 1, 2 * j)] = -1.0;
    }
    o
}

/// `max |J^T Omega J - Omega|`.
pub fn defect_of(j: &Matrix) -> f64 {
    let o = standard_form(j.nrows());
    (j.transpose() * &o * j - o).amax()
}

/// `X_H` from the gradient of `H`.
pub fn hamiltonian_vector(grad: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; grad.len()];
    for j in 0..grad.len() / 2 {
        x[2 * j] = -grad[2 * j + 1];
        x[2 * j + 1] = grad[2 * j];
    }
    x
}

pub fn gradient_fd<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, z: &[f64], step: f64) -> Vec<f64> {
    let mut p = z.to_vec();
    (0..z.len())
        .map(|i| {
            p[i] = z[i] + step;
            let fp = f(&p);
            p[i] = z[i] - step;
            let fm = f(&p);
            p[i] = z[i];
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// `{f, g}(z) = df(X_g)` by central differences.
pub fn poisson_bracket_fd<F, G>(f: &F, g: &G, z: &[f64], step: f64) -> f64
where
    F: Fn(&[f64]) -> f64 + ?Sized,
    G: Fn(&[f64]) -> f64 + ?Sized,
{
    let df = gradient_fd(f, z, step);
    let dg = gradient_fd(g, z, step);
    bracket_from_gradients(&df, &dg)
}

pub fn bracket_from_gradients(df: &[f64], dg: &[f64]) -> f64 {
    let xg = hamiltonian_vector(dg);
    df.iter().zip(xg.iter()).map(|(a, b)| a * b).sum()
}

pub trait SymplecticMap: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, z: &[f64]) -> Result<Matrix>;
    /// Analytic (or exactly reversible) inverse where available.
    fn inverse(&self, _w: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }
    fn defect(&self, z: &[f64]) -> Result<f64> {
        Ok(defect_of(&self.jacobian(z)?))
    }
}

/// Serializable one-dimensional profile.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Func1 {
    /// `sum c_i t^i`.
    Poly { coeffs: Vec<f64> },
    Ramp { lo: f64, hi: f64, width: f64 },
    Trapezoid { k: usize },
}

impl Func1 {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Func1::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Func1::Ramp { lo, hi, width } => Ramp::new(*lo, *hi, *width).value(t),
            Func1::Trapezoid { k } => Trapezoid::new(*k).value(t),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            Func1::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * t + i as f64 * c),
            Func1::Ramp { lo, hi, width } => Ramp::new(*lo, *hi, *width).d1(t),
            Func1::Trapezoid { k } => Trapezoid::new(*k).d1(t),
        }
    }

    /// Rejects parameters the profiles cannot represent.
    pub fn validate(&self) -> Result<()> {
        match self {
            Func1::Poly { coeffs } if coeffs.iter().any(|c| !c.is_finite()) => {
                Err(Error::Config("polynomial coefficients must be finite".into()))
            }
            Func1::Ramp { lo, hi, width } if !(*width > 0.0 && hi - lo > 2.0 * width) => {
                Err(Error::Config(format!("ramp needs width > 0 and hi - lo > 2 width, got {lo}, {hi}, {width}")))
            }
            Func1::Trapezoid { k } if *k < 4 => Err(Error::Config(format!("trapezoid period {k} < 4"))),
            _ => Ok(()),
        }
    }

    fn constant(&self) -> Option<f64> {
        match self {
            Func1::Poly { coeffs } if coeffs.iter().skip(1).all(|c| *c == 0.0) => {
                Some(coeffs.first().copied().unwrap_or(0.0))
            }
            _ => None,
        }
    }
}

fn pair_check(dim: usize, pair: usize) -> Result<()> {
    check_dim(dim)?;
    if 2 * pair + 1 >= dim {
        return Err(Error::BadDimension(format!("pair {pair} out of range for dim {dim}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Translation {
    pub v: Vec<f64>,
}

impl SymplecticMap for Translation {
    fn dim(&self) -> usize {
        self.v.len()
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(z.iter().zip(&self.v).map(|(a, b)| a + b).collect())
    }
    fn jacobian(&self, _z: &[f64]) -> Result<Matrix> {
        Ok(Matrix::identity(self.v.len(), self.v.len()))
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(Ok(w.iter().zip(&self.v).map(|(a, b)| a - b).collect()))
    }
}

/// `S_f(x, y) = (x, y + f(x))` on one canonical pair.
#[derive(Clone, Debug)]
pub struct Shear {
    pub dim: usize,
    pub pair: usize,
    pub f: Func1,
}

impl Shear {
    pub fn new(dim: usize, pair: usize, f: Func1) -> Result<Self> {
        pair_check(dim, pair)?;
        f.validate()?;
        Ok(Shear { dim, pair, f })
    }
}

impl SymplecticMap for Shear {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut w = z.to_vec();
        w[2 * self.pair + 1] += self.f.value(z[2 * self.pair]);
        Ok(w)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let mut j = Matrix::identity(self.dim, self.dim);
        j[(2 * self.pair + 1, 2 * self.pair)] = self.f.d1(z[2 * self.pair]);
        Ok(j)
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        let mut z = w.to_vec();
        z[2 * self.pair + 1] -= self.f.value(w[2 * self.pair]);
        Some(Ok(z))
    }
}

/// `Theta_g(x, y) = (h(x), g(x) y)` with `h(x) = int_0^x 1/g`, `g > 0`.
#[derive(Clone, Debug)]
pub struct Smear {
    pub dim: usize,
    pub pair: usize,
    pub g: Func1,
}

impl Smear {
    pub fn new(dim: usize, pair: usize, g: Func1) -> Result<Self> {
        pair_check(dim, pair)?;
        g.validate()?;
        Ok(Smear { dim, pair, g })
    }

    fn h(&self, x: f64) -> f64 {
        if let Some(c) = self.g.constant() {
            return x / c;
        }
        let panels = (x.abs() * 16.0).ceil().max(8.0) as usize;
        gauss_legendre(|t| 1.0 / self.g.value(t), 0.0, x, panels)
    }

    fn h_inverse(&self, s: f64) -> f64 {
        if let Some(c) = self.g.constant() {
            return s * c;
        }
        let mut x = s * self.g.value(0.0);
        for _ in 0..60 {
            let dx = (self.h(x) - s) * self.g.value(x);
            x -= dx;
            if dx.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }
}

impl SymplecticMap for Smear {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (x, y) = (z[2 * self.pair], z[2 * self.pair + 1]);
        let g = self.g.value(x);
        if g <= 0.0 {
            return Err(Error::OutOfDomain(z.to_vec()));
        }
        let mut w = z.to_vec();
        w[2 * self.pair] = self.h(x);
        w[2 * self.pair + 1] = g * y;
        Ok(w)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let (x, y) = (z[2 * self.pair], z[2 * self.pair + 1]);
        let g = self.g.value(x);
        if g <= 0.0 {
            return Err(Error::OutOfDomain(z.to_vec()));
        }
        let (i, k) = (2 * self.pair, 2 * self.pair + 1);
        let mut j = Matrix::identity(self.dim, self.dim);
        j[(i, i)] = 1.0 / g;
        j[(k, i)] = self.g.d1(x) * y;
        j[(k, k)] = g;
        Ok(j)
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        let x = self.h_inverse(w[2 * self.pair]);
        let mut z = w.to_vec();
        z[2 * self.pair] = x;
        z[2 * self.pair + 1] = w[2 * self.pair + 1] / self.g.value(x);
        Some(Ok(z))
    }
}

/// Which fiber coordinate a lifting Hamiltonian depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftVariable {
    /// `rho(x1 - c)(a x_j + b)`.
    X,
    /// `rho(x1 - c)(a y_j + b)`.
    Y,
}

/// Lifting Hamiltonian `rho(x_base - c)(a w + b)` with `w` the `x` or `y`
/// coordinate of `fiber_pair`.
#[derive(Clone, Debug)]
pub struct LiftHamiltonian {
    pub dim: usize,
    pub base_pair: usize,
    pub fiber_pair: usize,
    pub variable: LiftVariable,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub ramp: Ramp,
}

impl LiftHamiltonian {
    pub fn new(
        dim: usize,
        base_pair: usize,
        fiber_pair: usize,
        variable: LiftVariable,
        a: f64,
        b: f64,
        c: f64,
    ) -> Result<Self> {
        pair_check(dim, base_pair)?;
        pair_check(dim, fiber_pair)?;
        if base_pair == fiber_pair {
            return Err(Error::BadDimension("lift needs distinct pairs".into()));
        }
        Ok(LiftHamiltonian { dim, base_pair, fiber_pair, variable, a, b, c, ramp: Ramp::default() })
    }

    fn var_index(&self) -> usize {
        match self.variable {
            LiftVariable::X => 2 * self.fiber_pair,
            LiftVariable::Y => 2 * self.fiber_pair + 1,
        }
    }
}

pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;
    fn gradient(&self, z: &[f64]) -> Vec<f64>;
    fn hessian(&self, z: &[f64]) -> Matrix;
}

impl Hamiltonian for LiftHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, z: &[f64]) -> f64 {
        let u = z[2 * self.base_pair] - self.c;
        self.ramp.value(u) * (self.a * z[self.var_index()] + self.b)
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let u = z[2 * self.base_pair] - self.c;
        let w = self.a * z[self.var_index()] + self.b;
        let mut g = vec![0.0; self.dim];
        g[2 * self.base_pair] = self.ramp.d1(u) * w;
        g[self.var_index()] = self.a * self.ramp.value(u);
        g
    }
    fn hessian(&self, z: &[f64]) -> Matrix {
        let u = z[2 * self.base_pair] - self.c;
        let w = self.a * z[self.var_index()] + self.b;
        let (i, k) = (2 * self.base_pair, self.var_index());
        let mut h = Matrix::zeros(self.dim, self.dim);
        h[(i, i)] = self.ramp.d2(u) * w;
        h[(i, k)] = self.a * self.ramp.d1(u);
        h[(k, i)] = h[(i, k)];
        h
    }
}

/// Linear Hamiltonian `<c, z>`; its flow is the translation by `X = -Omega c`.
#[derive(Clone, Debug)]
pub struct LinearHamiltonian {
    pub c: Vec<f64>,
}

impl Hamiltonian for LinearHamiltonian {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, z: &[f64]) -> f64 {
        self.c.iter().zip(z).map(|(a, b)| a * b).sum()
    }
    fn gradient(&self, _z: &[f64]) -> Vec<f64> {
        self.c.clone()
    }
    fn hessian(&self, _z: &[f64]) -> Matrix {
        Matrix::zeros(self.c.len(), self.c.len())
    }
}

/// Exact time-1 map of a [`LiftHamiltonian`]: the field is constant along
/// trajectories because `x_base` and the lifting variable are conserved.
#[derive(Clone, Debug)]
pub struct Lift {
    pub h: LiftHamiltonian,
}

impl Lift {
    /// Displacement `(d y_base, d fiber)` applied by the time-1 map at `z`.
    fn displacement(&self, z: &[f64]) -> (f64, f64) {
        let l = &self.h;
        let u = z[2 * l.base_pair] - l.c;
        let w = l.a * z[l.var_index()] + l.b;
        (l.ramp.d1(u) * w, l.a * l.ramp.value(u))
    }

    fn moved_index(&self) -> (usize, f64) {
        match self.h.variable {
            LiftVariable::X => (2 * self.h.fiber_pair + 1, 1.0),
            LiftVariable::Y => (2 * self.h.fiber_pair, -1.0),
        }
    }
}

impl SymplecticMap for Lift {
    fn dim(&self) -> usize {
        self.h.dim
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (dv, df) = self.displacement(z);
        let (m, sign) = self.moved_index();
        let mut w = z.to_vec();
        w[2 * self.h.base_pair + 1] += dv;
        w[m] += sign * df;
        Ok(w)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let l = &self.h;
        let u = z[2 * l.base_pair] - l.c;
        let w = l.a * z[l.var_index()] + l.b;
        let (bu, bv) = (2 * l.base_pair, 2 * l.base_pair + 1);
        let (m, sign) = self.moved_index();
        let mut j = Matrix::identity(l.dim, l.dim);
        j[(bv, bu)] += l.ramp.d2(u) * w;
        j[(bv, l.var_index())] += l.a * l.ramp.d1(u);
        j[(m, bu)] += sign * l.a * l.ramp.d1(u);
        Ok(j)
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        // x_base and the lifting variable are unchanged, so the displacement
        // evaluated at the image is the one that was applied.
        let (dv, df) = self.displacement(w);
        let (m, sign) = self.moved_index();
        let mut z = w.to_vec();
        z[2 * self.h.base_pair + 1] -= dv;
        z[m] -= sign * df;
        Some(Ok(z))
    }
}

/// Classical RK4 integration of `z' = X_H(z)`, optionally with the
/// variational equation `M' = DX_H(z) M`.
pub fn integrate_flow(
    h: &dyn Hamiltonian,
    time: f64,
    z: &[f64],
    step: f64,
    with_jacobian: bool,
) -> (Vec<f64>, Option<Matrix>) {
    let dim = z.len();
    let steps = ((time.abs() / step).ceil() as usize).max(1);
    let dt = time / steps as f64;
    let minus_omega = -standard_form(dim);
    let field = |p: &[f64]| hamiltonian_vector(&h.gradient(p));
    let mut p = z.to_vec();
    let mut m = if with_jacobian { Some(Matrix::identity(dim, dim)) } else { None };
    let mut tmp = vec![0.0; dim];
    for _ in 0..steps {
        let k1 = field(&p);
        for i in 0..dim {
            tmp[i] = p[i] + 0.5 * dt * k1[i];
        }
        let p2 = tmp.clone();
        let k2 = field(&p2);
        for i in 0..dim {
            tmp[i] = p[i] + 0.5 * dt * k2[i];
        }
        let p3 = tmp.clone();
        let k3 = field(&p3);
        for i in 0..dim {
            tmp[i] = p[i] + dt * k3[i];
        }
        let p4 = tmp.clone();
        let k4 = field(&p4);
        if let Some(mm) = m.as_mut() {
            let a1 = &minus_omega * h.hessian(&p);
            let a2 = &minus_omega * h.hessian(&p2);
            let a3 = &minus_omega * h.hessian(&p3);
            let a4 = &minus_omega * h.hessian(&p4);
            let m1 = &a1 * &*mm;
            let m2 = &a2 * (&*mm + &m1 * (0.5 * dt));
            let m3 = &a3 * (&*mm + &m2 * (0.5 * dt));
            let m4 = &a4 * (&*mm + &m3 * dt);
            *mm += (m1 + m2 * 2.0 + m3 * 2.0 + m4) * (dt / 6.0);
        }
        for i in 0..dim {
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (p, m)
}

/// Time-`t` map of a Hamiltonian flow, audited by energy drift.
#[derive(Clone)]
pub struct Flow {
    pub h: Arc<dyn Hamiltonian>,
    pub time: f64,
    pub step: f64,
    pub drift_tol: f64,
}

impl Flow {
    pub fn new(h: Arc<dyn Hamiltonian>, time: f64) -> Self {
        Flow { h, time, step: 1e-3, drift_tol: 1e-8 }
    }

    fn run(&self, z: &[f64], time: f64, jac: bool) -> Result<(Vec<f64>, Option<Matrix>)> {
        let (p, m) = integrate_flow(self.h.as_ref(), time, z, self.step, jac);
        let drift = (self.h.value(&p) - self.h.value(z)).abs();
        if drift > self.drift_tol {
            return Err(Error::StepTooLarge { drift, tol: self.drift_tol });
        }
        Ok((p, m))
    }
}

/// Time-`t` flow of `H` from `z`.
pub fn hamiltonian_flow(h: &dyn Hamiltonian, t: f64, z: &[f64], step: f64) -> Result<Vec<f64>> {
    let (p, _) = integrate_flow(h, t, z, step, false);
    let drift = (h.value(&p) - h.value(z)).abs();
    if drift > 1e-8 {
        return Err(Error::StepTooLarge { drift, tol: 1e-8 });
    }
    Ok(p)
}

impl SymplecticMap for Flow {
    fn dim(&self) -> usize {
        self.h.dim()
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.run(z, self.time, false)?.0)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        Ok(self.run(z, self.time, true)?.1.expect("jacobian requested"))
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(self.run(w, -self.time, false).map(|r| r.0))
    }
}

/// `factors[0] o factors[1] o ...`: the last factor is applied first.
#[derive(Clone)]
pub struct Composition {
    pub factors: Vec<Arc<dyn SymplecticMap>>,
}

pub fn compose(a: Arc<dyn SymplecticMap>, b: Arc<dyn SymplecticMap>) -> Composition {
    Composition { factors: vec![a, b] }
}

impl SymplecticMap for Composition {
    fn dim(&self) -> usize {
        self.factors[0].dim()
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut p = z.to_vec();
        for f in self.factors.iter().rev() {
            p = f.eval(&p)?;
        }
        Ok(p)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let mut p = z.to_vec();
        let n = self.dim();
        let mut j = Matrix::identity(n, n);
        for f in self.factors.iter().rev() {
            j = f.jacobian(&p)? * j;
            p = f.eval(&p)?;
        }
        Ok(j)
    }
    fn inverse(&self, w: &[f64]) -> Option<Result<Vec<f64>>> {
        let mut p = w.to_vec();
        for f in self.factors.iter() {
            match f.inverse(&p)? {
                Ok(q) => p = q,
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(p))
    }
}

/// Axis-aligned open box.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DomainBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl DomainBox {
    /// Signed depth of `z` inside the box: positive inside, negative outside.
    pub fn depth(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(x, (lo, hi))| (x - lo).min(hi - x))
            .fold(f64::INFINITY, f64::min)
    }
}

pub struct Piece {
    pub domain: DomainBox,
    pub map: Arc<dyn SymplecticMap>,
}

/// Maps agreeing on the closures of adjacent open boxes.
pub struct PiecewiseMap {
    pub dim: usize,
    pub pieces: Vec<Piece>,
}

impl PiecewiseMap {
    /// Index of the active piece and whether another piece also claims `z`.
    fn select(&self, z: &[f64]) -> Result<(usize, bool)> {
        let mut claims = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let d = p.domain.depth(z);
            if d > -SEAM_TOL {
                claims.push((i, d));
            }
        }
        let deep: Vec<_> = claims.iter().filter(|c| c.1 > SEAM_TOL).collect();
        if deep.len() >= 2 {
            return Err(Error::AmbiguousPiece(deep[0].0, deep[1].0));
        }
        match claims.first() {
            None => Err(Error::OutOfDomain(z.to_vec())),
            Some(&(i, _)) => Ok((i, claims.len() > 1)),
        }
    }
}

impl SymplecticMap for PiecewiseMap {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (i, _) = self.select(z)?;
        self.pieces[i].map.eval(z)
    }
    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let (i, seam) = self.select(z)?;
        if seam {
            return Err(Error::OnPieceBoundary);
        }
        self.pieces[i].map.jacobian(z)
    }
}

/// Serializable elementary map, as stored in a piece table.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum MapSpec {
    Translation { v: Vec<f64> },
    Shear { dim: usize, pair: usize, f: Func1 },
    Smear { dim: usize, pair: usize, g: Func1 },
    Lift {
        dim: usize,
        base_pair: usize,
        fiber_pair: usize,
        variable: LiftVariable,
        a: f64,
        b: f64,
        c: f64,
    },
    /// Time-`time` flow of the linear Hamiltonian `<c, z>`.
    LinearFlow { c: Vec<f64>, time: f64 },
    /// Time-`time` flow of a lifting Hamiltonian.
    LiftFlow {
        dim: usize,
        base_pair: usize,
        fiber_pair: usize,
        variable: LiftVariable,
        a: f64,
        b: f64,
        c: f64,
        time: f64,
    },
}

impl MapSpec {
    pub fn build(&self) -> Result<Arc<dyn SymplecticMap>> {
        Ok(match self {
            MapSpec::Translation { v } => {
                check_dim(v.len())?;
                Arc::new(Translation { v: v.clone() })
            }
            MapSpec::Shear { dim, pair, f } => Arc::new(Shear::new(*dim, *pair, f.clone())?),
            MapSpec::Smear { dim, pair, g } => Arc::new(Smear::new(*dim, *pair, g.clone())?),
            MapSpec::Lift { dim, base_pair, fiber_pair, variable, a, b, c } => Arc::new(Lift {
                h: LiftHamiltonian::new(*dim, *base_pair, *fiber_pair, *variable, *a, *b, *c)?,
            }),
            MapSpec::LinearFlow { c, time } => {
                check_dim(c.len())?;
                Arc::new(Flow::new(Arc::new(LinearHamiltonian { c: c.clone() }), *time))
            }
            MapSpec::LiftFlow { dim, base_pair, fiber_pair, variable, a, b, c, time } => {
                let h = LiftHamiltonian::new(*dim, *base_pair, *fiber_pair, *variable, *a, *b, *c)?;
                Arc::new(Flow::new(Arc::new(h), *time))
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PieceSpec {
    #[serde(flatten)]
    pub map: MapSpec,
    pub domain: DomainBox,
}

/// A piece table: pieces composed right-to-left when `compose` is set,
/// otherwise glued as a piecewise map.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PieceTable {
    pub dim: usize,
    #[serde(default)]
    pub compose: bool,
    pub pieces: Vec<PieceSpec>,
}

impl PieceTable {
    pub fn build(&self) -> Result<Arc<dyn SymplecticMap>> {
        check_dim(self.dim)?;
        let mut pieces = Vec::new();
        for p in &self.pieces {
            let map = p.map.build()?;
            if map.dim() != self.dim || p.domain.min.len() != self.dim || p.domain.max.len() != self.dim {
                return Err(Error::BadDimension("piece dimension mismatch".into()));
            }
            pieces.push(Piece { domain: p.domain.clone(), map });
        }
        if self.compose {
            Ok(Arc::new(Composition { factors: pieces.into_iter().map(|p| p.map).collect() }))
        } else {
            Ok(Arc::new(PiecewiseMap { dim: self.dim, pieces }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_and_translation_examples() {
        let s = Shear::new(2, 0, Func1::Poly { coeffs: vec![0.0, 0.0, 1.0] }).unwrap();
        assert_eq!(s.eval(&[1.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        let j = s.jacobian(&[3.0, 0.0]).unwrap();
        assert_eq!(j, Matrix::from_row_slice(2, 2, &[1.0, 0.0, 6.0, 1.0]));
        let t = Translation { v: vec![1.0, 2.0] };
        assert_eq!(t.eval(&[0.0, 0.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(t.defect(&[0.3, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn constant_smear_halves_and_doubles() {
        let s = Smear::new(2, 0, Func1::Poly { coeffs: vec![2.0] }).unwrap();
        assert_eq!(s.eval(&[1.0, 3.0]).unwrap(), vec![0.5, 6.0]);
    }

    #[test]
    fn bracket_convention() {
        let x1 = |z: &[f64]| z[0];
        let y1 = |z: &[f64]| z[1];
        let b = poisson_bracket_fd(&x1, &y1, &[0.3, 0.2, 0.1, 0.4], 1e-4);
        assert!((b + 1.0).abs() < 1e-10);
        let f = |z: &[f64]| z[0] * z[3];
        let g = |z: &[f64]| z[2];
        let z = [0.7, -0.2, 0.5, 1.1];
        assert!((poisson_bracket_fd(&f, &g, &z, 1e-4) - 0.7).abs() < 1e-9);
    }

    #[test]
    fn linear_flow_translates_along_y() {
        let h = LinearHamiltonian { c: vec![1.0, 0.0] };
        let p = hamiltonian_flow(&h, 1.0, &[0.2, 0.3], 1e-3).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-14 && (p[1] - 1.3).abs() < 1e-12);
    }

    #[test]
    fn piecewise_seam_resolution() {
        let a: Arc<dyn SymplecticMap> = Arc::new(Translation { v: vec![1.0, 0.0] });
        let b: Arc<dyn SymplecticMap> = Arc::new(Translation { v: vec![1.0, 0.0] });
        let m = PiecewiseMap {
            dim: 2,
            pieces: vec![
                Piece { domain: DomainBox { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, map: a },
                Piece { domain: DomainBox { min: vec![1.0, 0.0], max: vec![2.0, 1.0] }, map: b },
            ],
        };
        assert!(m.eval(&[1.0, 0.5]).is_ok());
        assert_eq!(m.jacobian(&[1.0, 0.5]), Err(Error::OnPieceBoundary));
        assert!(matches!(m.eval(&[3.0, 0.5]), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn piece_table_round_trips_json() {
        let t = PieceTable {
            dim: 2,
            compose: true,
            pieces: vec![PieceSpec {
                map: MapSpec::Shear { dim: 2, pair: 0, f: Func1::Poly { coeffs: vec![0.0, 1.0] } },
                domain: DomainBox { min: vec![-1.0, -1.0], max: vec![1.0, 1.0] },
            }],
        };
        let s = serde_json::to_string(&t).unwrap();
        let back: PieceTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}

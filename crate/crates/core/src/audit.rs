//! Sampled checks of the folding embedding and of assembled maps: slab
//! formulas, interior coverage, symplectic defect, the lift's cube
//! placement, and injectivity on separated samples.
//!
//! Every sampler draws point `i` from `indexed_rng(seed, i)`, so results do
//! not depend on the thread layout.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::folding::fold::FoldPiece;
use crate::folding::{distance_to_integer_planes, FoldingEmbedding, Membership, WITNESS_TOL};
use crate::geometry::SymplecticMap;
use crate::measure::indexed_rng;

/// Defect bound away from the transition windows of the fold.
pub const DEFECT_TOL_BODY: f64 = 1e-10;
/// Defect bound inside the transition windows.
pub const DEFECT_TOL_TRANSITION: f64 = 1e-6;
/// Bound on `|iota(z) - z|` over the entry slab.
pub const ENTRY_TOL: f64 = 1e-12;
/// Bound on `|iota(z) - z - shift|` over the exit slab.
pub const EXIT_TOL: f64 = 1e-9;
/// Clearance from the fiber faces required by the lift check.
pub const LIFT_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct SlabCheck {
    pub samples: usize,
    pub max_error: f64,
    pub tol: f64,
    pub pass: bool,
}

fn uniform_in(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Uniform samples of `(lo, hi) x (0, 1)^{2n-1}`.
fn slab_points(dim: usize, lo: f64, hi: f64, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..samples)
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let mut z = vec![uniform_in(&mut rng, lo, hi)];
            z.extend((1..dim).map(|_| rng.gen::<f64>()));
            z
        })
        .collect()
}

fn slab_check(e: &FoldingEmbedding, pts: &[Vec<f64>], shift: &[f64], tol: f64) -> SlabCheck {
    let max_error = pts
        .par_iter()
        .map(|z| match e.eval(z) {
            Ok(q) => q.iter().zip(z).zip(shift).map(|((a, b), s)| (a - b - s).abs()).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        })
        .reduce(|| 0.0, f64::max);
    SlabCheck { samples: pts.len(), max_error, tol, pass: max_error <= tol }
}

/// `iota(z) = z` on `(0, 1)^{2n}`.
pub fn entry_slab(e: &FoldingEmbedding, samples: usize, seed: u64) -> SlabCheck {
    let pts = slab_points(2 * e.n, 0.0, 1.0, samples, seed);
    slab_check(e, &pts, &vec![0.0; 2 * e.n], ENTRY_TOL)
}

/// `iota(z) = z + (k - alpha, k - 1, .., k - 1)` on `(alpha - 1, alpha) x (0, 1)^{2n-1}`.
pub fn exit_slab(e: &FoldingEmbedding, samples: usize, seed: u64) -> SlabCheck {
    let pts = slab_points(2 * e.n, e.alpha - 1.0, e.alpha, samples, seed);
    let k = e.k as f64;
    let mut shift = vec![k - 1.0; 2 * e.n];
    shift[0] = k - e.alpha;
    slab_check(e, &pts, &shift, EXIT_TOL)
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageCheck {
    pub samples: usize,
    /// Samples at distance at least `clearance` from the integer planes.
    pub eligible: usize,
    pub confirmed: usize,
    pub unknown: usize,
    pub out: usize,
    /// `in` verdicts whose witness fails forward re-verification.
    pub false_in: usize,
    pub max_residual: f64,
    pub fraction: f64,
    pub clearance: f64,
    pub pass: bool,
}

/// Membership over `(lo, hi) x (0, k)^{2n-1}`, restricted to points
/// `clearance`-far from the integer coordinate planes. Passes when at least
/// `min_fraction` of the eligible points are confirmed and no witness fails.
pub fn interior_coverage(
    e: &FoldingEmbedding,
    lo: f64,
    hi: f64,
    clearance: f64,
    samples: usize,
    seed: u64,
    min_fraction: f64,
) -> CoverageCheck {
    let k = e.k as f64;
    let verdicts: Vec<Option<(Membership, bool)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let mut p = vec![uniform_in(&mut rng, lo, hi)];
            p.extend((1..2 * e.n).map(|_| uniform_in(&mut rng, 0.0, k)));
            if distance_to_integer_planes(&p) < clearance {
                return None;
            }
            let m = e.membership(&p);
            let sound = match &m {
                Membership::In { witness, .. } => {
                    e.domain_depth(witness) > 0.0
                        && e.eval(witness).is_ok_and(|q| {
                            q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= WITNESS_TOL)
                        })
                }
                _ => true,
            };
            Some((m, sound))
        })
        .collect();
    let mut c = CoverageCheck {
        samples,
        eligible: 0,
        confirmed: 0,
        unknown: 0,
        out: 0,
        false_in: 0,
        max_residual: 0.0,
        fraction: 0.0,
        clearance,
        pass: false,
    };
    for (m, sound) in verdicts.into_iter().flatten() {
        c.eligible += 1;
        if !sound {
            c.false_in += 1;
        }
        match m {
            Membership::In { residual, .. } => {
                c.confirmed += 1;
                c.max_residual = c.max_residual.max(residual);
            }
            Membership::Unknown => c.unknown += 1,
            Membership::Out => c.out += 1,
        }
    }
    c.fraction = c.confirmed as f64 / c.eligible.max(1) as f64;
    c.pass = c.eligible > 0 && c.fraction >= min_fraction && c.false_in == 0;
    c
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramBin {
    /// Decade `floor(log10 defect)`; `None` collects exact zeros.
    pub decade: Option<i32>,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectStats {
    pub samples: usize,
    /// Points where the Jacobian could not be formed (seams, domain edge).
    pub failures: usize,
    pub max: f64,
    pub tol: f64,
    pub pass: bool,
    pub histogram: Vec<HistogramBin>,
}

/// `|J^T Omega J - Omega|_max` over `pts`, with a decade histogram.
pub fn defect_stats(map: &dyn SymplecticMap, pts: &[Vec<f64>], tol: f64) -> DefectStats {
    let vals: Vec<Option<f64>> = pts.par_iter().map(|z| map.defect(z).ok()).collect();
    let mut bins: std::collections::BTreeMap<Option<i32>, usize> = Default::default();
    let mut max = 0.0f64;
    let mut failures = 0;
    for v in &vals {
        match v {
            Some(d) => {
                max = max.max(*d);
                let decade = (*d > 0.0).then(|| d.log10().floor() as i32);
                *bins.entry(decade).or_default() += 1;
            }
            None => failures += 1,
        }
    }
    DefectStats {
        samples: pts.len(),
        failures,
        max,
        tol,
        pass: failures == 0 && max <= tol,
        histogram: bins.into_iter().map(|(decade, count)| HistogramBin { decade, count }).collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldDefectCheck {
    pub body: DefectStats,
    pub transition: DefectStats,
    pub pass: bool,
}

/// Domain points whose band image falls in a transition window of the fold.
pub fn transition_points(e: &FoldingEmbedding, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let base = e.base();
    let k = e.k as f64;
    let w = crate::folding::fold::TRANSITION_HALF_WIDTH;
    (0..samples)
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let idx = rng.gen_range(1..e.fold.rects) as f64;
            let u = uniform_in(&mut rng, idx * k - w, idx * k + w);
            let v = uniform_in(&mut rng, base.g(u), base.top(u));
            let (s, t) = base.theta_inverse(u, v);
            let mut z = vec![s, t];
            z.extend((2..2 * e.n).map(|_| rng.gen::<f64>()));
            z
        })
        .collect()
}

fn in_transition(e: &FoldingEmbedding, z: &[f64]) -> bool {
    let u = e.base().theta(z[0], z[1]).0;
    matches!(e.fold.piece(u), FoldPiece::Transition(_))
}

/// Defect over `samples` uniform domain points, split by whether the band
/// image lies in a transition window, plus `samples / 10` points drawn inside
/// the windows.
pub fn fold_defect(e: &FoldingEmbedding, samples: usize, seed: u64) -> FoldDefectCheck {
    let uniform = slab_points(2 * e.n, 0.0, e.alpha, samples, seed);
    let (mut inside, body): (Vec<_>, Vec<_>) = uniform.into_iter().partition(|z| in_transition(e, z));
    inside.extend(transition_points(e, (samples / 10).max(1), seed ^ 0x5eed));
    let body = defect_stats(e, &body, DEFECT_TOL_BODY);
    let transition = defect_stats(e, &inside, DEFECT_TOL_TRANSITION);
    let pass = body.pass && transition.pass;
    FoldDefectCheck { body, transition, pass }
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftCheck {
    pub cubes: u64,
    pub per_cube: usize,
    /// 1-based indices of cubes with a misplaced sample.
    pub failed_cubes: Vec<u64>,
    pub pass: bool,
}

/// For every cube `e(i)`, band points over the `u`-stretch where exactly
/// `i - 1` lift factors have acted land with fiber part in `e(i) + (0, 1)^{2n-2}`.
pub fn lift_placement(e: &FoldingEmbedding, per_cube: usize, seed: u64) -> LiftCheck {
    let base = e.base();
    let k = e.k as f64;
    let cubes = e.lift.cubes.len();
    let failed_cubes: Vec<u64> = (1..=cubes)
        .into_par_iter()
        .filter(|&i| {
            let lo = ((i - 1) as f64 * k - 0.25).max(0.0);
            let hi = if i == cubes { base.band_length } else { i as f64 * k - 0.75 };
            let target = e.lift.cube(i);
            (0..per_cube).any(|j| {
                let mut rng = indexed_rng(seed ^ i, j as u64);
                let u = uniform_in(&mut rng, lo, hi);
                let mut z = vec![u, uniform_in(&mut rng, base.g(u), base.top(u))];
                z.extend((2..2 * e.n).map(|_| uniform_in(&mut rng, LIFT_MARGIN, 1.0 - LIFT_MARGIN)));
                let Ok(p) = e.lift.eval(&z) else { return true };
                p[2..].iter().zip(&target).any(|(x, &c)| {
                    let c = c as f64;
                    !(*x >= c + LIFT_MARGIN && *x <= c + 1.0 - LIFT_MARGIN)
                })
            })
        })
        .collect();
    LiftCheck { cubes, per_cube, pass: failed_cubes.is_empty(), failed_cubes }
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityCheck {
    pub samples: usize,
    /// Samples left after enforcing the domain separation.
    pub kept: usize,
    /// Kept samples the map could not evaluate.
    pub failures: usize,
    pub separation: f64,
    pub radius: f64,
    pub collisions: usize,
    pub pass: bool,
}

type Grid = HashMap<Vec<i64>, Vec<usize>>;

fn cell_of(p: &[f64], h: f64) -> Vec<i64> {
    p.iter().map(|x| (x / h).floor() as i64).collect()
}

/// Every grid cell adjacent to `c`, including `c`.
fn neighbor_cells(c: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(c.len())];
    for &x in c {
        out = out
            .into_iter()
            .flat_map(|pre| {
                (-1..=1).map(move |d| {
                    let mut v = pre.clone();
                    v.push(x + d);
                    v
                })
            })
            .collect();
    }
    out
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Greedy thinning of `pts` so kept points are pairwise more than `sep` apart.
pub fn separate(pts: &[Vec<f64>], sep: f64) -> Vec<Vec<f64>> {
    let mut grid: Grid = HashMap::new();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in pts {
        let c = cell_of(p, sep);
        let close = neighbor_cells(&c)
            .iter()
            .filter_map(|n| grid.get(n))
            .flatten()
            .any(|&j| linf(&kept[j], p) <= sep);
        if !close {
            grid.entry(c).or_default().push(kept.len());
            kept.push(p.clone());
        }
    }
    kept
}

/// Counts pairs of images closer than `radius` among samples whose preimages
/// are pairwise more than `sep` apart.
pub fn injectivity(map: &dyn SymplecticMap, pts: &[Vec<f64>], sep: f64, radius: f64) -> InjectivityCheck {
    let kept = separate(pts, sep);
    let images: Vec<Option<Vec<f64>>> = kept.par_iter().map(|z| map.eval(z).ok()).collect();
    let mut grid: Grid = HashMap::new();
    let mut collisions = 0;
    let mut failures = 0;
    for (i, q) in images.iter().enumerate() {
        let Some(q) = q else {
            failures += 1;
            continue;
        };
        let c = cell_of(q, radius);
        for n in neighbor_cells(&c) {
            if let Some(js) = grid.get(&n) {
                collisions +=
                    js.iter().filter(|&&j| linf(images[j].as_ref().expect("stored images exist"), q) < radius).count();
            }
        }
        grid.entry(c).or_default().push(i);
    }
    InjectivityCheck {
        samples: pts.len(),
        kept: kept.len(),
        failures,
        separation: sep,
        radius,
        collisions,
        pass: collisions == 0 && failures == 0,
    }
}

/// Uniform samples of the folding domain `(0, alpha) x (0, 1)^{2n-1}`.
pub fn domain_points(e: &FoldingEmbedding, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    slab_points(2 * e.n, 0.0, e.alpha, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Translation;

    #[test]
    fn separation_thins_duplicates() {
        let pts = vec![vec![0.0, 0.0], vec![0.0005, 0.0], vec![0.01, 0.0]];
        assert_eq!(separate(&pts, 1e-3).len(), 2);
    }

    #[test]
    fn collapsing_map_collides() {
        struct Collapse;
        impl SymplecticMap for Collapse {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, z: &[f64]) -> crate::Result<Vec<f64>> {
                Ok(vec![z[0].abs(), 0.0])
            }
            fn jacobian(&self, _z: &[f64]) -> crate::Result<crate::geometry::Matrix> {
                unreachable!()
            }
        }
        let pts = vec![vec![0.5, 0.0], vec![-0.5, 0.0], vec![0.2, 0.0]];
        assert_eq!(injectivity(&Collapse, &pts, 1e-3, 1e-6).collisions, 1);
        let t = Translation { v: vec![1.0, 1.0] };
        assert!(injectivity(&t, &pts, 1e-3, 1e-6).pass);
    }
}

//! Hyperplane lattices `Sigma(y, a)`, shifts avoiding atoms, and covers of a
//! measure by disjoint congruent open cubes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{measure_of_box, MeasureSpec, QueryBox};

/// Congruence tolerance for atom-on-hyperplane detection.
pub const CONGRUENCE_TOL: f64 = 1e-12;

/// `Sigma(y, a)`: hyperplanes `x_i = y_i + a/2 + a Z`. Its complement is the
/// family of open cubes of side `a` centered on `y + a Z^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub y: Vec<f64>,
    pub a: f64,
}

impl Lattice {
    pub fn new(y: Vec<f64>, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Config(format!("lattice pitch {a} must be positive")));
        }
        Ok(Lattice { y, a })
    }

    /// Distance from coordinate `x` on axis `i` to the nearest hyperplane.
    pub fn face_offset(&self, i: usize, x: f64) -> f64 {
        let t = (x - self.y[i] - 0.5 * self.a).rem_euclid(self.a);
        t.min(self.a - t)
    }

    pub fn distance_to_planes(&self, p: &[f64]) -> f64 {
        (0..p.len()).map(|i| self.face_offset(i, p[i])).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.distance_to_planes(p) <= CONGRUENCE_TOL
    }

    pub fn cell_index(&self, p: &[f64]) -> Vec<i64> {
        p.iter().zip(&self.y).map(|(x, y)| ((x - y) / self.a).round() as i64).collect()
    }

    pub fn cell_center(&self, idx: &[i64]) -> Vec<f64> {
        idx.iter().zip(&self.y).map(|(i, y)| y + *i as f64 * self.a).collect()
    }
}

/// `mu(Sigma(y, a))`: only point masses can sit on the null hyperplanes.
pub fn measure_of_lattice(mu: &MeasureSpec, lattice: &Lattice) -> f64 {
    mu.point_masses().iter().filter(|(p, _)| lattice.contains(p)).fold(0.0, |s, (_, m)| s + m)
}

/// Circular distance of `t` from the nearest bad residue modulo `a`.
fn residue_clearance(t: f64, bad: &[f64], a: f64) -> f64 {
    bad.iter()
        .map(|b| {
            let d = (t - b).rem_euclid(a);
            d.min(a - d)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Candidate offsets `0, +-w/2, +-w/4, +-3w/4, ...` in dyadic order.
fn dyadic_offsets(w: f64, levels: u32) -> Vec<f64> {
    let mut v = vec![0.0];
    for l in 1..=levels {
        let d = 1u64 << l;
        for j in (1..d).step_by(2) {
            let f = j as f64 / d as f64 * w;
            v.push(f);
            v.push(-f);
        }
    }
    v
}

/// A `y` in the open box `search` with `mu(Sigma(y, a)) = 0`, chosen axis by
/// axis to keep every point mass at least `1e-6 a` off the hyperplanes when
/// the window allows it.
pub fn find_lattice_shift(mu: &MeasureSpec, a: f64, search: &QueryBox) -> Result<Vec<f64>> {
    if !(a > 0.0) {
        return Err(Error::Config(format!("lattice pitch {a} must be positive")));
    }
    let points = mu.point_masses();
    let mut y = Vec::with_capacity(mu.dim);
    for i in 0..mu.dim {
        let (lo, hi) = (search.min[i], search.max[i]);
        if !(hi > lo) {
            return Err(Error::Config("empty search box".into()));
        }
        let center = 0.5 * (lo + hi);
        let bad: Vec<f64> = points.iter().map(|(p, _)| (p[i] - 0.5 * a).rem_euclid(a)).collect();
        if bad.is_empty() {
            y.push(center);
            continue;
        }
        let w = (0.5 * (hi - lo)).min(0.5 * a) * 0.999;
        let mut best = (f64::NEG_INFINITY, center);
        let mut chosen = None;
        for off in dyadic_offsets(w, 12) {
            let t = center + off;
            let c = residue_clearance(t, &bad, a);
            if c >= 1e-6 * a {
                chosen = Some(t);
                break;
            }
            if c > best.0 {
                best = (c, t);
            }
        }
        match chosen {
            Some(t) => y.push(t),
            None if best.0 > CONGRUENCE_TOL => y.push(best.1),
            None => return Err(Error::Exhausted),
        }
    }
    let lat = Lattice { y: y.clone(), a };
    debug_assert_eq!(measure_of_lattice(mu, &lat), 0.0);
    if measure_of_lattice(mu, &lat) != 0.0 {
        return Err(Error::Exhausted);
    }
    Ok(y)
}

/// Finite family of pairwise disjoint congruent open cubes of side `side`,
/// all cells of one lattice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeCover {
    pub side: f64,
    pub centers: Vec<Vec<f64>>,
    /// Exact mass of each open cube.
    pub masses: Vec<f64>,
    pub covered_mass: f64,
    pub lattice: Lattice,
    /// `l-inf` distance from the support to the complement of the ambient
    /// neighborhood `U`.
    pub neighborhood_radius: f64,
}

impl CubeCover {
    pub fn radius(&self) -> f64 {
        0.5 * self.side
    }
}

/// A connected cluster of support pieces: closed boxes and points.
#[derive(Clone, Debug)]
struct Cluster {
    boxes: Vec<(Vec<f64>, Vec<f64>)>,
}

fn box_gap(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> f64 {
    (0..a.0.len())
        .map(|i| (b.0[i] - a.1[i]).max(a.0[i] - b.1[i]).max(0.0))
        .fold(0.0, f64::max)
}

fn clusters(mu: &MeasureSpec) -> Vec<Cluster> {
    let mut parts: Vec<(Vec<f64>, Vec<f64>)> = mu.point_masses().into_iter().map(|(p, _)| (p.clone(), p)).collect();
    parts.extend(mu.boxes.iter().map(|b| (b.min.clone(), b.max.clone())));
    let n = parts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let nx = p[j];
            p[j] = r;
            j = nx;
        }
        r
    }
    for i in 0..n {
        for j in 0..i {
            if box_gap(&parts[i], &parts[j]) == 0.0 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Cluster> = Default::default();
    for (i, p) in parts.into_iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_insert(Cluster { boxes: vec![] }).boxes.push(p);
    }
    groups.into_values().collect()
}

fn cluster_gap(a: &Cluster, b: &Cluster) -> f64 {
    let mut g = f64::INFINITY;
    for p in &a.boxes {
        for q in &b.boxes {
            g = g.min(box_gap(p, q));
        }
    }
    g
}

/// Cells met by the support for lattice `lat`, with the `l-inf` radius from
/// each cell center needed to reach all support inside that cell.
fn occupied_cells(mu: &MeasureSpec, lat: &Lattice) -> std::collections::BTreeMap<Vec<i64>, f64> {
    let mut cells: std::collections::BTreeMap<Vec<i64>, f64> = Default::default();
    let h = 0.5 * lat.a;
    for (p, _) in mu.point_masses() {
        let idx = lat.cell_index(&p);
        let c = lat.cell_center(&idx);
        let need = p.iter().zip(&c).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let e = cells.entry(idx).or_insert(0.0);
        *e = e.max(need);
    }
    for b in &mu.boxes {
        let ranges: Vec<(i64, i64)> = (0..mu.dim)
            .map(|i| {
                let lo = ((b.min[i] - lat.y[i] + h) / lat.a).floor() as i64;
                let hi = ((b.max[i] - lat.y[i] - h) / lat.a).ceil() as i64;
                (lo, hi.max(lo))
            })
            .collect();
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        'odometer: loop {
            let c = lat.cell_center(&idx);
            let mut need: f64 = 0.0;
            let mut meets = true;
            for i in 0..mu.dim {
                let lo = b.min[i].max(c[i] - h);
                let hi = b.max[i].min(c[i] + h);
                if hi <= lo {
                    meets = false;
                    break;
                }
                need = need.max((lo - c[i]).abs()).max((hi - c[i]).abs());
            }
            if meets {
                let e = cells.entry(idx.clone()).or_insert(0.0);
                *e = e.max(need);
            }
            let mut axis = 0;
            loop {
                if axis == mu.dim {
                    break 'odometer;
                }
                idx[axis] += 1;
                if idx[axis] <= ranges[axis].1 {
                    break;
                }
                idx[axis] = ranges[axis].0;
                axis += 1;
            }
        }
    }
    cells
}

/// Cover of `mu` by disjoint open cubes with exact covered mass `> 1 - eps`.
///
/// The support clusters are thickened by `r = (min cluster gap)/3` to form
/// the neighborhood `U`; cubes are the cells of a lattice of pitch `r/2`
/// meeting the support, which therefore lie in `U`. The anchor is chosen
/// among a grid of offsets to minimize the cube count and then the radius
/// needed to reach the mass inside each cube, and is finally moved off every
/// atom. A single cluster gets one cube.
pub fn cube_cover(mu: &MeasureSpec, eps: f64) -> Result<CubeCover> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("epsilon {eps} must lie in (0, 1)")));
    }
    mu.validate()?;
    let cl = clusters(mu);
    let n = mu.dim;
    let (lat, radius) = if cl.len() == 1 {
        let lo: Vec<f64> = (0..n).map(|i| cl[0].boxes.iter().map(|b| b.0[i]).fold(f64::INFINITY, f64::min)).collect();
        let hi: Vec<f64> = (0..n).map(|i| cl[0].boxes.iter().map(|b| b.1[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
        let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let side = if extent > 0.0 { 1.5 * extent } else { 1.0 };
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let search = QueryBox::open(
            center.iter().map(|c| c - side / 64.0).collect(),
            center.iter().map(|c| c + side / 64.0).collect(),
        );
        let y = find_lattice_shift(mu, side, &search)?;
        (Lattice { y, a: side }, side)
    } else {
        let mut gap = f64::INFINITY;
        for i in 0..cl.len() {
            for j in 0..i {
                gap = gap.min(cluster_gap(&cl[i], &cl[j]));
            }
        }
        let r = gap / 3.0;
        let pitch = 0.5 * r;
        let per_axis: usize = if n <= 4 { 8 } else { 4 };
        let combos = per_axis.pow(n as u32);
        let mut best: Option<((usize, f64), Vec<f64>)> = None;
        for c in 0..combos {
            let mut rem = c;
            let y: Vec<f64> = (0..n)
                .map(|_| {
                    let j = rem % per_axis;
                    rem /= per_axis;
                    j as f64 / per_axis as f64 * pitch
                })
                .collect();
            let cells = occupied_cells(mu, &Lattice { y: y.clone(), a: pitch });
            let need = cells.values().fold(0.0, |a: f64, b| a.max(*b));
            let score = (cells.len(), need);
            let better = match &best {
                None => true,
                Some(((cnt, nd), _)) => score.0 < *cnt || (score.0 == *cnt && score.1 < nd - 1e-12 * pitch),
            };
            if better {
                best = Some((score, y));
            }
        }
        let y0 = best.expect("at least one candidate").1;
        let search = QueryBox::open(
            y0.iter().map(|c| c - pitch / 64.0).collect(),
            y0.iter().map(|c| c + pitch / 64.0).collect(),
        );
        let y = find_lattice_shift(mu, pitch, &search)?;
        (Lattice { y, a: pitch }, r)
    };
    let cells = occupied_cells(mu, &lat);
    let mut centers = Vec::new();
    let mut masses = Vec::new();
    for idx in cells.keys() {
        let c = lat.cell_center(idx);
        let m = measure_of_box(mu, &QueryBox::ball(&c, 0.5 * lat.a, false));
        if m > 0.0 {
            centers.push(c);
            masses.push(m);
        }
    }
    let covered_mass: f64 = masses.iter().sum();
    if !(covered_mass > 1.0 - eps) {
        return Err(Error::EpsilonTooSmall(format!("covered mass {covered_mass} <= 1 - {eps}")));
    }
    Ok(CubeCover { side: lat.a, centers, masses, covered_mass, lattice: lat, neighborhood_radius: radius })
}

//! `zeta(h o f)` for a polynomial `h`, with `h o f` read on the
//! piecewise-linear extension of `f`.
//!
//! For a threshold `s`, the set `{h >= s}` is a union of closed intervals.
//! Its preimage under the affine restriction of `f` to a triangle meets each
//! interval of the partition in a convex piece, so a (triangle, interval)
//! node graph glued across shared edges gives the exact regions of
//! `{h o f >= s}` and of its complement. Vertex values are classified by
//! direct evaluation of `h`, which keeps the answer equal to `h(zeta(f))`
//! bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quasistate::levels::RegionGraph;
use crate::quasistate::measure::DiscreteMeasure;
use crate::quasistate::space::DiscreteSpace;
use crate::quasistate::CellFunction;

/// Real polynomial, coefficients in increasing degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly { coeffs };
        while p.coeffs.len() > 1 && *p.coeffs.last().expect("nonempty") == 0.0 {
            p.coeffs.pop();
        }
        if p.coeffs.is_empty() {
            p.coeffs.push(0.0);
        }
        p
    }

    pub fn identity() -> Self {
        Poly::new(vec![0.0, 1.0])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect())
    }

    /// Real roots of `self - s` in `[lo, hi]`, sorted, found by bisection
    /// between consecutive critical points.
    pub fn roots_of_level(&self, s: f64, lo: f64, hi: f64) -> Vec<f64> {
        let mut q = self.clone();
        q.coeffs[0] -= s;
        q.roots_in(lo, hi)
    }

    fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.degree() == 0 {
            return Vec::new();
        }
        let mut knots = vec![lo];
        knots.extend(self.derivative().roots_in(lo, hi));
        knots.push(hi);
        let mut out: Vec<f64> = Vec::new();
        for w in knots.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            if fa == 0.0 {
                out.push(a);
                continue;
            }
            if fb == 0.0 || (fa < 0.0) == (fb < 0.0) {
                continue;
            }
            let neg_at_a = fa < 0.0;
            loop {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if (self.eval(mid) < 0.0) == neg_at_a {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        if self.eval(hi) == 0.0 {
            out.push(hi);
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Alternating closed/open intervals of `{h >= s}` over the range of `f`.
struct Partition {
    breaks: Vec<f64>,
    closed: Vec<bool>,
}

impl Partition {
    fn new(h: &Poly, s: f64, lo: f64, hi: f64) -> Self {
        let roots = h.roots_of_level(s, lo, hi);
        let mut pts = vec![lo];
        pts.extend(roots.iter().copied());
        pts.push(hi);
        let sample = |j: usize| 0.5 * (pts[j] + pts[j + 1]);
        let mut breaks = Vec::new();
        let mut closed = vec![h.eval(sample(0)) >= s];
        for (j, &b) in roots.iter().enumerate() {
            let label = h.eval(sample(j + 1)) >= s;
            if label != *closed.last().expect("nonempty") {
                breaks.push(b);
                closed.push(label);
            }
        }
        Partition { breaks, closed }
    }

    /// Interval of a vertex value `y` whose label agrees with `h(y) >= s`.
    fn locate(&self, y: f64, label: bool) -> usize {
        let j = self.breaks.partition_point(|&b| b < y);
        if self.closed[j] == label {
            return j;
        }
        let left = (j > 0).then(|| (y - self.breaks[j - 1]).abs());
        let right = (j < self.breaks.len()).then(|| (self.breaks[j] - y).abs());
        match (left, right) {
            (Some(l), Some(r)) if l <= r => j - 1,
            (Some(_), None) => j - 1,
            (_, Some(_)) => j + 1,
            (None, None) => j,
        }
    }
}

/// Region graph of `{h o f >= s}` and its complement.
fn regions(space: &DiscreteSpace, mu: &DiscreteMeasure, f: &CellFunction, h: &Poly, s: f64) -> RegionGraph {
    let (lo, hi) = f.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let part = Partition::new(h, s, lo, hi);
    let piece: Vec<usize> = f.values.iter().map(|&y| part.locate(y, h.eval(y) >= s)).collect();
    let tris = &space.triangles;
    let mut span = Vec::with_capacity(tris.len());
    let mut offset = Vec::with_capacity(tris.len() + 1);
    offset.push(0usize);
    for t in tris {
        let a = t.iter().map(|&v| piece[v]).min().expect("three vertices");
        let b = t.iter().map(|&v| piece[v]).max().expect("three vertices");
        span.push((a, b));
        offset.push(offset.last().expect("nonempty") + b - a + 1);
    }
    let node = |t: usize, j: usize| offset[t] + j - span[t].0;
    let total = *offset.last().expect("nonempty");
    let mut uf: Vec<usize> = (0..total).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for &((u, v), [t1, t2]) in &space.edge_triangles {
        for j in piece[u].min(piece[v])..=piece[u].max(piece[v]) {
            let (a, b) = (find(&mut uf, node(t1, j)), find(&mut uf, node(t2, j)));
            if a != b {
                uf[a] = b;
            }
        }
    }
    let mut id = vec![usize::MAX; total];
    let mut closed = Vec::new();
    let mut region_of = vec![0usize; total];
    for t in 0..tris.len() {
        for j in span[t].0..=span[t].1 {
            let x = node(t, j);
            let r = find(&mut uf, x);
            if id[r] == usize::MAX {
                id[r] = closed.len();
                closed.push(part.closed[j]);
            }
            region_of[x] = id[r];
        }
    }
    let mut mass = vec![0u64; closed.len()];
    for (v, &u) in mu.units.iter().enumerate() {
        mass[region_of[node(space.vertex_triangle[v], piece[v])]] += u;
    }
    let mut edges = Vec::new();
    for t in 0..tris.len() {
        for j in span[t].0..span[t].1 {
            edges.push((region_of[node(t, j)], region_of[node(t, j + 1)]));
        }
    }
    RegionGraph::new(mass, closed, edges)
}

/// `zeta(h o f)`: the largest vertex value `s` of `h o f` with
/// `tau({h o f >= s}) = 1`.
pub fn pushforward_eval(space: &DiscreteSpace, mu: &DiscreteMeasure, f: &CellFunction, h: &Poly) -> Result<f64> {
    f.check(space)?;
    let mut levels: Vec<f64> = f.values.iter().map(|&y| h.eval(y)).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let holds = |s: f64| !regions(space, mu, f, h, s).verdict().qualifying.is_empty();
    if !holds(levels[0]) {
        return Err(Error::MedianAmbiguous);
    }
    let (mut lo, mut hi) = (0usize, levels.len());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(levels[mid]) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if regions(space, mu, f, h, levels[lo]).verdict().tie {
        return Err(Error::MedianAmbiguous);
    }
    Ok(levels[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_cubic() {
        let p = Poly::new(vec![0.0, -1.0, 0.0, 1.0]);
        let r = p.roots_of_level(0.0, -2.0, 2.0);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn horner_matches_direct() {
        let p = Poly::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.eval(2.0), 17.0);
        assert_eq!(p.derivative().coeffs, vec![2.0, 6.0]);
    }
}

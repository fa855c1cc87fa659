//! Solid sets, the Aarnes rule, superlevel sweeps and superheavy sets.

use crate::error::{Error, Result};
use crate::quasistate::measure::{DiscreteMeasure, HALF_UNITS};
use crate::quasistate::median::zeta_median;
use crate::quasistate::space::DiscreteSpace;
use crate::quasistate::{check_subset, CellFunction};

/// Regions of a closed/open partition of the sphere and their adjacency.
/// On a sphere the adjacency graph is a tree.
pub(crate) struct RegionGraph {
    pub mass: Vec<u64>,
    pub closed: Vec<bool>,
    pub adj: Vec<Vec<usize>>,
}

/// Outcome of the `tau = 1` test over the closed regions.
pub(crate) struct RegionVerdict {
    /// Closed regions whose complement components all have mass `<= 1/2`.
    pub qualifying: Vec<usize>,
    /// Whether a qualifying region has a complement component of mass exactly `1/2`.
    pub tie: bool,
}

impl RegionGraph {
    pub fn new(mass: Vec<u64>, closed: Vec<bool>, mut edges: Vec<(usize, usize)>) -> Self {
        let n = mass.len();
        for e in edges.iter_mut() {
            *e = (e.0.min(e.1), e.0.max(e.1));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in edges {
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        RegionGraph { mass, closed, adj }
    }

    fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Masses of the components of the graph with `node` removed.
    fn branches_by_search(&self, node: usize) -> Vec<u64> {
        let n = self.mass.len();
        let mut seen = vec![false; n];
        seen[node] = true;
        let mut out = Vec::new();
        for &s in &self.adj[node] {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut m = 0u64;
            while let Some(v) = stack.pop() {
                m += self.mass[v];
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            out.push(m);
        }
        out
    }

    pub fn verdict(&self) -> RegionVerdict {
        let n = self.mass.len();
        let mut qualifying = Vec::new();
        let mut tie = false;
        let mut consider = |v: usize, branches: &[u64], q: &mut Vec<usize>| {
            if branches.iter().all(|&b| b <= HALF_UNITS) {
                q.push(v);
                tie |= branches.contains(&HALF_UNITS);
            }
        };
        if n == 0 {
            return RegionVerdict { qualifying, tie };
        }
        if self.edge_count() + 1 != n {
            for v in (0..n).filter(|&v| self.closed[v]) {
                let b = self.branches_by_search(v);
                consider(v, &b, &mut qualifying);
            }
            return RegionVerdict { qualifying, tie };
        }
        // Tree: subtree sums from an iterative preorder rooted at 0.
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0];
        parent[0] = 0;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in &self.adj[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    stack.push(w);
                }
            }
        }
        if order.len() != n {
            for v in (0..n).filter(|&v| self.closed[v]) {
                let b = self.branches_by_search(v);
                consider(v, &b, &mut qualifying);
            }
            return RegionVerdict { qualifying, tie };
        }
        let total: u64 = self.mass.iter().sum();
        let mut sub = self.mass.clone();
        for &v in order.iter().rev() {
            if v != 0 {
                sub[parent[v]] += sub[v];
            }
        }
        for v in (0..n).filter(|&v| self.closed[v]) {
            let mut b: Vec<u64> = self.adj[v].iter().filter(|&&w| w != parent[v] || v == 0).map(|&w| sub[w]).collect();
            if v != 0 {
                b.push(total - sub[v]);
            }
            consider(v, &b, &mut qualifying);
        }
        RegionVerdict { qualifying, tie }
    }
}

pub fn is_solid(space: &DiscreteSpace, set: &[bool]) -> Result<bool> {
    check_subset(space, set)?;
    let inside = set.iter().filter(|&&s| s).count();
    if inside == 0 {
        return Ok(false);
    }
    if inside == space.len() {
        return Ok(true);
    }
    let complement: Vec<bool> = set.iter().map(|s| !s).collect();
    Ok(space.components(set).1 == 1 && space.components(&complement).1 == 1)
}

/// The simple topological measure on a solid set: an open set has `tau = 1`
/// iff its mass exceeds `1/2`, a closed set iff its mass is at least `1/2`.
pub fn aarnes_tau(space: &DiscreteSpace, mu: &DiscreteMeasure, set: &[bool], open: bool) -> Result<u8> {
    if !is_solid(space, set)? {
        return Err(Error::NotSolid);
    }
    let m = mu.units_of(set);
    Ok(if open { u8::from(m > HALF_UNITS) } else { u8::from(m >= HALF_UNITS) })
}

/// Region graph of the partition into the components of `set` (closed) and
/// of its complement (open).
fn split_regions(space: &DiscreteSpace, mu: &DiscreteMeasure, set: &[bool]) -> RegionGraph {
    let complement: Vec<bool> = set.iter().map(|s| !s).collect();
    let (inner, ni) = space.components(set);
    let (outer, no) = space.components(&complement);
    let region = |c: usize| if set[c] { inner[c] } else { ni + outer[c] };
    let mut mass = vec![0u64; ni + no];
    for c in 0..space.len() {
        mass[region(c)] += mu.units[c];
    }
    let mut closed = vec![false; ni + no];
    closed[..ni].fill(true);
    let edges = space
        .edge_triangles
        .iter()
        .filter(|((u, v), _)| set[*u] != set[*v])
        .map(|((u, v), _)| (region(*u), region(*v)))
        .collect();
    RegionGraph::new(mass, closed, edges)
}

/// `zeta(f) = sup { s : tau({f >= s}) = 1 }`, found by bisection over the
/// sorted cell values.
pub fn zeta_integral(space: &DiscreteSpace, mu: &DiscreteMeasure, f: &CellFunction) -> Result<f64> {
    f.check(space)?;
    let n = space.len();
    let (order, rank) = f.order();
    let test = |t: usize| {
        let set: Vec<bool> = rank.iter().map(|&r| r >= t).collect();
        split_regions(space, mu, &set).verdict()
    };
    // Invariant: the test passes at `lo` and fails at `hi`.
    let (mut lo, mut hi) = (0usize, n);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if test(mid).qualifying.is_empty() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if test(lo).tie {
        return Err(Error::MedianAmbiguous);
    }
    Ok(f.values[order[lo]])
}

/// Whether the closed cell set `set` is superheavy: exactly one of its
/// components has all complement components of mass at most `1/2`.
pub fn superheavy_check(space: &DiscreteSpace, mu: &DiscreteMeasure, set: &[bool]) -> Result<bool> {
    check_subset(space, set)?;
    let (label, count) = space.components(set);
    let mut hits = 0;
    for c in 0..count {
        let rest: Vec<bool> = label.iter().map(|&l| l != c).collect();
        let (lab, nc) = space.components(&rest);
        let mut masses = vec![0u64; nc];
        for (cell, &l) in lab.iter().enumerate() {
            if l != usize::MAX {
                masses[l] += mu.units[cell];
            }
        }
        if masses.iter().all(|&m| m <= HALF_UNITS) {
            hits += 1;
        }
    }
    Ok(hits == 1)
}

/// Cell support of the median contour of `f`: the median cell together with
/// the upper endpoint of every graph edge the contour crosses.
pub fn special_fiber_component(space: &DiscreteSpace, mu: &DiscreteMeasure, f: &CellFunction) -> Result<Vec<usize>> {
    let median = zeta_median(space, mu, f)?;
    let (_, rank) = f.order();
    let x = median.cell;
    let r = rank[x];
    let side = |v: usize| rank[v].cmp(&r);
    let crosses = |u: usize, v: usize| side(u) != side(v) && u != x && v != x;
    let mut visited = vec![false; space.triangles.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (t, tri) in space.triangles.iter().enumerate() {
        if tri.contains(&x) {
            let others: Vec<usize> = tri.iter().copied().filter(|&v| v != x).collect();
            if crosses(others[0], others[1]) {
                visited[t] = true;
                stack.push(t);
            }
        }
    }
    let mut out = vec![false; space.len()];
    out[x] = true;
    while let Some(t) = stack.pop() {
        let tri = space.triangles[t];
        for e in 0..3 {
            let (u, v) = (tri[e], tri[(e + 1) % 3]);
            if !crosses(u, v) {
                continue;
            }
            out[if rank[u] > r { u } else { v }] = true;
            let key = (u.min(v), u.max(v));
            let i = space.edge_triangles.binary_search_by(|(k, _)| k.cmp(&key)).expect("edge of a triangle");
            for &s in &space.edge_triangles[i].1 {
                if !visited[s] {
                    visited[s] = true;
                    stack.push(s);
                }
            }
        }
    }
    Ok((0..space.len()).filter(|&c| out[c]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasistate::indicator;

    #[test]
    fn single_cell_is_solid_band_is_not() {
        let s = DiscreteSpace::cube_sphere(4).unwrap();
        assert!(is_solid(&s, &indicator(&s, &[7]).unwrap()).unwrap());
        let band: Vec<bool> = s.centers.iter().map(|c| c[2].abs() < 0.3).collect();
        assert!(!is_solid(&s, &band).unwrap());
        assert!(!is_solid(&s, &vec![false; s.len()]).unwrap());
        assert!(is_solid(&s, &vec![true; s.len()]).unwrap());
    }

    #[test]
    fn tau_thresholds_and_complement_rule() {
        let s = DiscreteSpace::cube_sphere(4).unwrap();
        let mu = DiscreteMeasure::uniform(&s, 1);
        let cap: Vec<bool> = s.centers.iter().map(|c| c[2] > 0.5).collect();
        let rest: Vec<bool> = cap.iter().map(|b| !b).collect();
        let a = aarnes_tau(&s, &mu, &cap, false).unwrap();
        let b = aarnes_tau(&s, &mu, &rest, true).unwrap();
        assert_eq!((a, b), (0, 1));
        let band: Vec<bool> = s.centers.iter().map(|c| c[2].abs() < 0.3).collect();
        assert_eq!(aarnes_tau(&s, &mu, &band, true), Err(Error::NotSolid));
    }

    #[test]
    fn half_mass_closed_set_is_superheavy() {
        let s = DiscreteSpace::cube_sphere(1).unwrap();
        let mu = DiscreteMeasure::from_masses(&s, &[0.25, 0.1, 0.25, 0.1, 0.15, 0.15]).unwrap();
        let k = indicator(&s, &[0, 2]).unwrap();
        assert!(is_solid(&s, &k).unwrap());
        assert!(superheavy_check(&s, &mu, &k).unwrap());
        assert_eq!(aarnes_tau(&s, &mu, &k, false).unwrap(), 1);
        assert_eq!(aarnes_tau(&s, &mu, &indicator(&s, &[0]).unwrap(), false).unwrap(), 0);
    }
}

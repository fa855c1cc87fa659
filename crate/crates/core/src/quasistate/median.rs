//! The median of a cell function as the weighted centroid of its contour
//! tree.
//!
//! The contour tree is merged from the join tree (superlevel sweep) and the
//! split tree (sublevel sweep) by repeatedly peeling leaves. Removing a
//! vertex from the tree leaves one branch per complement component of its
//! contour, so the median contour is the unique vertex whose branches all
//! carry mass at most `1/2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quasistate::measure::{DiscreteMeasure, HALF_UNITS};
use crate::quasistate::space::DiscreteSpace;
use crate::quasistate::CellFunction;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Median {
    pub value: f64,
    /// Cell whose contour is the median component.
    pub cell: usize,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Merge tree for the sweep visiting cells in `sweep` order: each cell gets
/// the list of earlier-swept tree neighbors and at most one later neighbor.
fn merge_tree(space: &DiscreteSpace, sweep: &[usize], rank: &[usize], ascending: bool) -> (Vec<Vec<usize>>, Vec<Option<usize>>) {
    let n = space.len();
    let mut uf: Vec<usize> = (0..n).collect();
    let mut last = vec![0usize; n];
    let mut before: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut after: Vec<Option<usize>> = vec![None; n];
    let earlier = |a: usize, b: usize| if ascending { rank[a] < rank[b] } else { rank[a] > rank[b] };
    for &v in sweep {
        last[v] = v;
        for &u in &space.neighbors[v] {
            if !earlier(u, v) {
                continue;
            }
            let (ru, rv) = (find(&mut uf, u), find(&mut uf, v));
            if ru == rv {
                continue;
            }
            let tip = last[ru];
            before[v].push(tip);
            after[tip] = Some(v);
            uf[ru] = rv;
            last[rv] = v;
        }
    }
    (before, after)
}

/// Arcs of the contour tree over all cells, ties broken by cell index.
pub fn contour_tree(space: &DiscreteSpace, f: &CellFunction) -> Result<Vec<(usize, usize)>> {
    f.check(space)?;
    let n = space.len();
    let (order, rank) = f.order();
    let desc: Vec<usize> = order.iter().rev().copied().collect();
    // Join tree: `up_j` are higher neighbors, `down_j` the lower one.
    let (mut up_j, mut down_j) = merge_tree(space, &desc, &rank, false);
    // Split tree: `down_s` are lower neighbors, `up_s` the higher one.
    let (mut down_s, mut up_s) = merge_tree(space, &order, &rank, true);
    let is_leaf = |v: usize, up_j: &[Vec<usize>], down_s: &[Vec<usize>]| up_j[v].len() + down_s[v].len() == 1;
    let mut removed = vec![false; n];
    let mut queue: Vec<usize> = (0..n).filter(|&v| is_leaf(v, &up_j, &down_s)).collect();
    let mut arcs = Vec::with_capacity(n.saturating_sub(1));
    let mut left = n;
    while left > 1 {
        let x = queue.pop().ok_or_else(|| Error::Config("contour tree merge stalled".into()))?;
        if removed[x] || !is_leaf(x, &up_j, &down_s) {
            continue;
        }
        let y = if up_j[x].is_empty() { down_j[x] } else { up_s[x] }
            .ok_or_else(|| Error::Config("contour tree leaf without neighbor".into()))?;
        arcs.push((x, y));
        // Splice `x` out of both merge trees.
        let ups = std::mem::take(&mut up_j[x]);
        let d = down_j[x].take();
        for &u in &ups {
            down_j[u] = d;
        }
        if let Some(d) = d {
            up_j[d].retain(|&w| w != x);
            up_j[d].extend(ups);
        }
        let downs = std::mem::take(&mut down_s[x]);
        let u = up_s[x].take();
        for &w in &downs {
            up_s[w] = u;
        }
        if let Some(u) = u {
            down_s[u].retain(|&w| w != x);
            down_s[u].extend(downs);
        }
        removed[x] = true;
        left -= 1;
        if is_leaf(y, &up_j, &down_s) {
            queue.push(y);
        }
    }
    Ok(arcs)
}

/// Weighted centroid of the contour tree.
pub fn zeta_median(space: &DiscreteSpace, mu: &DiscreteMeasure, f: &CellFunction) -> Result<Median> {
    let arcs = contour_tree(space, f)?;
    let n = space.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &arcs {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parent = vec![usize::MAX; n];
    let mut pre = Vec::with_capacity(n);
    let mut stack = vec![0usize];
    parent[0] = 0;
    while let Some(v) = stack.pop() {
        pre.push(v);
        for &w in &adj[v] {
            if parent[w] == usize::MAX {
                parent[w] = v;
                stack.push(w);
            }
        }
    }
    if pre.len() != n {
        return Err(Error::Config("contour tree is not connected".into()));
    }
    let total: u64 = mu.units.iter().sum();
    let mut sub = mu.units.clone();
    for &v in pre.iter().rev() {
        if v != 0 {
            sub[parent[v]] += sub[v];
        }
    }
    let mut best: Option<usize> = None;
    for v in 0..n {
        let up = if v == 0 { 0 } else { total - sub[v] };
        let heaviest = adj[v].iter().filter(|&&w| parent[w] == v && w != 0).map(|&w| sub[w]).fold(up, u64::max);
        if heaviest > HALF_UNITS {
            continue;
        }
        match best {
            Some(b) if f.values[b] != f.values[v] => return Err(Error::MedianAmbiguous),
            Some(_) => {}
            None => best = Some(v),
        }
    }
    let cell = best.ok_or(Error::MedianAmbiguous)?;
    Ok(Median { value: f.values[cell], cell })
}

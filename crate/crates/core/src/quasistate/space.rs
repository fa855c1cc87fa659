//! Cube-sphere cell complexes.
//!
//! Cells of the subdivided cube surface are the vertices of a triangulation
//! of `S^2`: two cells are joined when they share an edge, and the four cells
//! around each interior mesh vertex are split into two triangles by one
//! diagonal (the three cells at a cube corner form one triangle). Because the
//! cell graph is the 1-skeleton of a triangulated sphere, the components of a
//! cell subset and of its complement match those of the corresponding region
//! of the surface.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct DiscreteSpace {
    /// Cube-sphere resolution: `6 m^2` cells.
    pub m: usize,
    /// Cell centers projected to the unit sphere.
    pub centers: Vec<[f64; 3]>,
    /// Spherical area of each cell.
    pub areas: Vec<f64>,
    /// Sorted neighbor lists of the cell graph (edge and diagonal neighbors).
    pub neighbors: Vec<Vec<usize>>,
    pub triangles: Vec<[usize; 3]>,
    /// For each graph edge `(u, v)` with `u < v`, the two triangles containing it.
    pub edge_triangles: Vec<((usize, usize), [usize; 2])>,
    /// One triangle containing each cell.
    pub vertex_triangle: Vec<usize>,
}

type Corner = [i64; 3];

fn unit(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Solid angle of the spherical triangle with unit vertices `a, b, c`.
fn solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let cross = [b[1] * c[2] - b[2] * c[1], b[2] * c[0] - b[0] * c[2], b[0] * c[1] - b[1] * c[0]];
    let num = dot(a, cross).abs();
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

impl DiscreteSpace {
    pub fn cube_sphere(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("cube-sphere resolution must be >= 1".into()));
        }
        let mi = m as i64;
        let to_sphere = |q: [f64; 3]| unit([2.0 * q[0] / m as f64 - 1.0, 2.0 * q[1] / m as f64 - 1.0, 2.0 * q[2] / m as f64 - 1.0]);
        let mut corners: Vec<[Corner; 4]> = Vec::with_capacity(6 * m * m);
        let mut centers = Vec::with_capacity(6 * m * m);
        let mut areas = Vec::with_capacity(6 * m * m);
        for axis in 0..3 {
            let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
            let (a1, a2) = (a1.min(a2), a1.max(a2));
            for side in [0, mi] {
                for i in 0..mi {
                    for j in 0..mi {
                        let pt = |di: i64, dj: i64| {
                            let mut c = [0i64; 3];
                            c[axis] = side;
                            c[a1] = i + di;
                            c[a2] = j + dj;
                            c
                        };
                        let q = [pt(0, 0), pt(1, 0), pt(1, 1), pt(0, 1)];
                        let mut mid = [0.0; 3];
                        mid[axis] = side as f64;
                        mid[a1] = i as f64 + 0.5;
                        mid[a2] = j as f64 + 0.5;
                        centers.push(to_sphere(mid));
                        let s: Vec<[f64; 3]> =
                            q.iter().map(|c| to_sphere([c[0] as f64, c[1] as f64, c[2] as f64])).collect();
                        areas.push(solid_angle(s[0], s[1], s[2]) + solid_angle(s[0], s[2], s[3]));
                        corners.push(q);
                    }
                }
            }
        }
        let n = corners.len();
        // Cells sharing a mesh edge.
        let mut edge_cells: HashMap<(Corner, Corner), Vec<usize>> = HashMap::new();
        let mut vertex_cells: BTreeMap<Corner, Vec<usize>> = BTreeMap::new();
        for (c, q) in corners.iter().enumerate() {
            for e in 0..4 {
                let (p, r) = (q[e], q[(e + 1) % 4]);
                edge_cells.entry((p.min(r), p.max(r))).or_default().push(c);
                vertex_cells.entry(p).or_default().push(c);
            }
        }
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        let add_edge = |u: usize, v: usize, nb: &mut Vec<Vec<usize>>| {
            if !nb[u].contains(&v) {
                nb[u].push(v);
                nb[v].push(u);
            }
        };
        for cells in edge_cells.values() {
            if cells.len() != 2 {
                return Err(Error::Config("cube-sphere mesh edge not shared by two cells".into()));
            }
            add_edge(cells[0], cells[1], &mut neighbors);
        }
        let face_neighbors = neighbors.clone();
        let mut triangles = Vec::with_capacity(2 * n);
        for (_, cells) in vertex_cells {
            let mut ring = vec![*cells.iter().min().expect("vertex has cells")];
            while ring.len() < cells.len() {
                let last = *ring.last().expect("nonempty");
                let next = cells
                    .iter()
                    .copied()
                    .filter(|c| !ring.contains(c) && face_neighbors[last].contains(c))
                    .min()
                    .ok_or_else(|| Error::Config("cells around a mesh vertex do not form a ring".into()))?;
                ring.push(next);
            }
            match ring.len() {
                3 => triangles.push([ring[0], ring[1], ring[2]]),
                4 => {
                    add_edge(ring[0], ring[2], &mut neighbors);
                    triangles.push([ring[0], ring[1], ring[2]]);
                    triangles.push([ring[0], ring[2], ring[3]]);
                }
                k => return Err(Error::Config(format!("mesh vertex of valence {k}"))),
            }
        }
        for nb in neighbors.iter_mut() {
            nb.sort_unstable();
        }
        let mut et: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut vertex_triangle = vec![usize::MAX; n];
        for (t, tri) in triangles.iter().enumerate() {
            for e in 0..3 {
                let (u, v) = (tri[e], tri[(e + 1) % 3]);
                et.entry((u.min(v), u.max(v))).or_default().push(t);
                if vertex_triangle[u] == usize::MAX {
                    vertex_triangle[u] = t;
                }
            }
        }
        let mut edge_triangles = Vec::with_capacity(et.len());
        for (e, ts) in et {
            if ts.len() != 2 {
                return Err(Error::Config("triangulation edge not shared by two triangles".into()));
            }
            edge_triangles.push((e, [ts[0], ts[1]]));
        }
        let space = DiscreteSpace { m, centers, areas, neighbors, triangles, edge_triangles, vertex_triangle };
        let euler = space.len() as i64 - space.edge_count() as i64 + space.triangles.len() as i64;
        if euler != 2 {
            return Err(Error::Config(format!("Euler characteristic {euler} != 2")));
        }
        Ok(space)
    }

    /// Parses `cube-sphere:m`.
    pub fn from_tag(tag: &str) -> Result<Self> {
        let m = tag
            .strip_prefix("cube-sphere:")
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::Config(format!("unknown space {tag:?}; expected cube-sphere:<m>")))?;
        Self::cube_sphere(m)
    }

    pub fn tag(&self) -> String {
        format!("cube-sphere:{}", self.m)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_triangles.len()
    }

    /// Components of the subgraph induced by `inside`, as a label per cell
    /// (`usize::MAX` outside) and the component count.
    pub fn components(&self, inside: &[bool]) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.len() {
            if !inside[s] || label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in &self.neighbors[v] {
                    if inside[w] && label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }
}

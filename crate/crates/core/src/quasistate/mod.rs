//! Simple topological measures and Aarnes quasi-states on a cube-sphere.
//!
//! A cell function is read as the piecewise-linear function on the
//! triangulated sphere whose vertices are the cells, with ties broken by
//! cell index. The quasi-state of a measure `mu` (atoms at the cells) is
//! then evaluated by three independent routes:
//!
//! - [`zeta_integral`]: bisection on `s` for `tau({f >= s}) = 1`, resolving
//!   `tau` of each superlevel set through its region tree,
//! - [`zeta_median`]: the weighted centroid of the contour tree,
//! - [`pushforward_eval`]: the first route run on `h o f` for a polynomial
//!   `h`, with level regions traced through the triangles.
//!
//! All mass comparisons are exact (see [`measure`]).

pub mod levels;
pub mod measure;
pub mod median;
pub mod pushforward;
pub mod space;

use crate::error::{Error, Result};

pub use levels::{aarnes_tau, is_solid, special_fiber_component, superheavy_check, zeta_integral};
pub use measure::{DiscreteMeasure, DiscreteMeasureSpec, HALF_UNITS, TOTAL_UNITS};
pub use median::{contour_tree, zeta_median, Median};
pub use pushforward::{pushforward_eval, Poly};
pub use space::DiscreteSpace;

#[derive(Clone, Debug, PartialEq)]
pub struct CellFunction {
    pub values: Vec<f64>,
}

impl CellFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("cell function has non-finite values".into()));
        }
        Ok(CellFunction { values })
    }

    pub fn check(&self, space: &DiscreteSpace) -> Result<()> {
        if self.values.len() != space.len() {
            return Err(Error::BadDimension(format!("{} values for {} cells", self.values.len(), space.len())));
        }
        Ok(())
    }

    /// Reads `cell,value` rows; a header row is allowed and every cell must
    /// appear exactly once.
    pub fn from_csv<R: std::io::Read>(reader: R, cells: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut values = vec![f64::NAN; cells];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Config(format!("csv: {e}")))?;
            let cell = rec.get(0).unwrap_or("");
            let value = rec.get(1).unwrap_or("");
            let parsed = (cell.parse::<usize>(), value.parse::<f64>());
            let (c, v) = match parsed {
                (Ok(c), Ok(v)) => (c, v),
                _ if line == 0 => continue,
                _ => return Err(Error::Config(format!("csv row {}: expected cell,value", line + 1))),
            };
            if c >= cells || !values[c].is_nan() {
                return Err(Error::Config(format!("csv row {}: bad or repeated cell {c}", line + 1)));
            }
            values[c] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Config("csv does not assign every cell".into()));
        }
        Self::new(values)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("cell,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{i},{v:e}\n"));
        }
        s
    }

    /// Height `z` of the cell centers.
    pub fn height(space: &DiscreteSpace) -> Self {
        CellFunction { values: space.centers.iter().map(|c| c[2]).collect() }
    }

    pub fn map(&self, h: impl Fn(f64) -> f64) -> Self {
        CellFunction { values: self.values.iter().map(|&v| h(v)).collect() }
    }

    /// Cells sorted by `(value, index)` and the rank of each cell.
    pub fn order(&self) -> (Vec<usize>, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b)));
        let mut rank = vec![0; order.len()];
        for (r, &c) in order.iter().enumerate() {
            rank[c] = r;
        }
        (order, rank)
    }
}

/// Checks that `set` is a cell subset of `space`.
pub(crate) fn check_subset(space: &DiscreteSpace, set: &[bool]) -> Result<()> {
    if set.len() != space.len() {
        return Err(Error::BadDimension(format!("subset of length {} for {} cells", set.len(), space.len())));
    }
    Ok(())
}

/// Indicator vector of a list of cells.
pub fn indicator(space: &DiscreteSpace, cells: &[usize]) -> Result<Vec<bool>> {
    let mut set = vec![false; space.len()];
    for &c in cells {
        if c >= space.len() {
            return Err(Error::Config(format!("cell {c} out of range")));
        }
        set[c] = true;
    }
    Ok(set)
}

//! Zig-zag enumeration of the `k^d` unit cubes of `(0, k)^d`.
//!
//! Axis 0 is the innermost (the first fiber coordinate `x2`), then `y2`,
//! `x3`, and so on. For odd `k` the reflected `k`-ary Gray code has the
//! closed form: digit `j` of `i - 1` is reflected iff `floor((i-1)/k^{j+1})`
//! is odd, so consecutive cubes differ by one unit step.

use serde::Serialize;

use crate::error::{Error, Result};

/// Direction of the step from cube `e(i)` to `e(i+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepFamily {
    /// `+d/dx_j`
    XPlus,
    /// `-d/dx_j`
    XMinus,
    /// `+d/dy_j`
    YPlus,
    /// `-d/dy_j`
    YMinus,
}

/// Step classification for cube index `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub family: StepFamily,
    /// Fiber pair `j >= 1` in full coordinates (pair 0 is the base).
    pub pair: usize,
    /// Cell `l` of the dual coordinate in `C_{e(i)}`.
    pub dual_cell: usize,
}

#[derive(Clone, Debug)]
pub struct CubeEnumeration {
    pub k: usize,
    pub d: usize,
    count: u64,
}

pub fn check_k(k: usize) -> Result<()> {
    if k < 5 || k.is_multiple_of(2) {
        return Err(Error::BadK(k));
    }
    Ok(())
}

impl CubeEnumeration {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        check_k(k)?;
        if d < 2 || !d.is_multiple_of(2) {
            return Err(Error::BadDimension(format!("fiber dimension {d} must be even and >= 2")));
        }
        let count = (k as u64).checked_pow(d as u32).ok_or_else(|| Error::BadDimension("k^d overflows".into()))?;
        Ok(CubeEnumeration { k, d, count })
    }

    /// `k^d`.
    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `e(i)` for `1 <= i <= k^d`.
    pub fn cube(&self, i: u64) -> Vec<usize> {
        assert!(i >= 1 && i <= self.count, "cube index {i} out of range");
        let k = self.k as u64;
        let m = i - 1;
        let mut w = vec![0usize; self.d];
        let mut higher = m / k;
        let mut rest = m;
        for wj in w.iter_mut() {
            let digit = (rest % k) as usize;
            *wj = if higher.is_multiple_of(2) { digit } else { self.k - 1 - digit };
            rest /= k;
            higher /= k;
        }
        w
    }

    /// `e^{-1}(w)`.
    pub fn index(&self, w: &[usize]) -> u64 {
        let k = self.k as u64;
        let mut m: u64 = 0;
        let mut parity = 0usize;
        for j in (0..self.d).rev() {
            let digit = if parity.is_multiple_of(2) { w[j] } else { self.k - 1 - w[j] };
            m = m * k + digit as u64;
            parity += digit;
        }
        m + 1
    }

    /// Classification of the step `e(i) -> e(i+1)` for `1 <= i < k^d`.
    pub fn step(&self, i: u64) -> Step {
        let a = self.cube(i);
        let b = self.cube(i + 1);
        let axis = (0..self.d).find(|&j| a[j] != b[j]).expect("consecutive cubes differ");
        let plus = b[axis] > a[axis];
        let pair = 1 + axis / 2;
        let is_y = axis % 2 == 1;
        let dual_axis = if is_y { axis - 1 } else { axis + 1 };
        let family = match (is_y, plus) {
            (false, true) => StepFamily::XPlus,
            (false, false) => StepFamily::XMinus,
            (true, true) => StepFamily::YPlus,
            (true, false) => StepFamily::YMinus,
        };
        Step { family, pair, dual_cell: a[dual_axis] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_adjacency() {
        for &(k, d) in &[(5usize, 2usize), (7, 2), (5, 4)] {
            let e = CubeEnumeration::new(k, d).unwrap();
            assert_eq!(e.cube(1), vec![0; d]);
            assert_eq!(e.cube(e.len()), vec![k - 1; d]);
            for i in 1..e.len() {
                let a = e.cube(i);
                let b = e.cube(i + 1);
                let diff: usize = a.iter().zip(&b).map(|(x, y)| x.abs_diff(*y)).sum();
                assert_eq!(diff, 1, "step {i}");
                assert_eq!(e.index(&a), i);
            }
        }
    }

    #[test]
    fn bijective_for_k5_d2() {
        let e = CubeEnumeration::new(5, 2).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for i in 1..=25 {
            assert!(seen.insert(e.cube(i)));
        }
        assert_eq!(e.cube(2), vec![1, 0]);
        assert_eq!(e.step(1), Step { family: StepFamily::XPlus, pair: 1, dual_cell: 0 });
    }

    #[test]
    fn rejects_even_or_small_k() {
        assert_eq!(CubeEnumeration::new(4, 2).unwrap_err(), Error::BadK(4));
        assert_eq!(CubeEnumeration::new(3, 2).unwrap_err(), Error::BadK(3));
    }
}

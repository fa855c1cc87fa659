//! Probability measures on `R^N` made of atoms and uniform boxes, with exact
//! box queries and reproducible sampling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
}

/// Uniform mass on a closed axis-aligned box of positive volume.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub mass: f64,
}

impl UniformBox {
    pub fn volume(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(a, b)| b - a).product()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpec {
    pub dim: usize,
    pub atoms: Vec<Atom>,
    pub boxes: Vec<UniformBox>,
    /// Equal-weight point cloud carrying `sample_mass` in total.
    pub samples: Vec<Vec<f64>>,
    pub sample_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    point: Vec<f64>,
    mass: String,
}

#[derive(Serialize, Deserialize)]
struct BoxJson {
    min: Vec<f64>,
    max: Vec<f64>,
    mass: String,
}

#[derive(Serialize, Deserialize)]
struct SamplesJson {
    points: Vec<Vec<f64>>,
    mass: String,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    dim: usize,
    #[serde(default)]
    atoms: Vec<AtomJson>,
    #[serde(default)]
    boxes: Vec<BoxJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<SamplesJson>,
}

/// Exact value of a decimal literal such as `"0.3"`, `"-1.25e-2"`.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidMeasure(format!("bad decimal mass {s:?}"));
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut num: BigInt = all.parse().map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(r)
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let j: MeasureJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        let mut total = BigRational::zero();
        let mut take = |m: &str| -> Result<f64> {
            let r = parse_decimal(m)?;
            if !r.is_positive() {
                return Err(Error::InvalidMeasure(format!("mass {m} is not positive")));
            }
            total += &r;
            Ok(rational_to_f64(&r))
        };
        let mut atoms = Vec::new();
        for a in &j.atoms {
            atoms.push(Atom { point: a.point.clone(), mass: take(&a.mass)? });
        }
        let mut boxes = Vec::new();
        for b in &j.boxes {
            boxes.push(UniformBox { min: b.min.clone(), max: b.max.clone(), mass: take(&b.mass)? });
        }
        let (samples, sample_mass) = match &j.samples {
            Some(s) => (s.points.clone(), take(&s.mass)?),
            None => (Vec::new(), 0.0),
        };
        let tol = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), 12));
        if (total.clone() - BigRational::one()).abs() > tol {
            return Err(Error::InvalidMeasure(format!(
                "total mass {} differs from 1",
                rational_to_f64(&total)
            )));
        }
        let m = MeasureSpec { dim: j.dim, atoms, boxes, samples, sample_mass };
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let j = MeasureJson {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomJson { point: a.point.clone(), mass: format!("{}", a.mass) })
                .collect(),
            boxes: self
                .boxes
                .iter()
                .map(|b| BoxJson { min: b.min.clone(), max: b.max.clone(), mass: format!("{}", b.mass) })
                .collect(),
            samples: if self.samples.is_empty() {
                None
            } else {
                Some(SamplesJson { points: self.samples.clone(), mass: format!("{}", self.sample_mass) })
            },
        };
        serde_json::to_string_pretty(&j).expect("measure serializes")
    }

    /// Structural checks plus total mass `1 +- 1e-12`.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::InvalidMeasure("dimension 0".into()));
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if a.point.len() != n || !(a.mass > 0.0) {
                return Err(Error::InvalidMeasure(format!("atom {i} malformed")));
            }
            for b in &self.atoms[..i] {
                if b.point == a.point {
                    return Err(Error::InvalidMeasure(format!("atom {i} repeats a point")));
                }
            }
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if b.min.len() != n || b.max.len() != n || !(b.mass > 0.0) {
                return Err(Error::InvalidMeasure(format!("box {i} malformed")));
            }
            if b.min.iter().zip(&b.max).any(|(lo, hi)| !(hi > lo)) {
                return Err(Error::InvalidMeasure(format!("box {i} has zero volume")));
            }
        }
        if self.samples.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidMeasure("sample dimension mismatch".into()));
        }
        if (self.total_mass() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("total mass {} differs from 1", self.total_mass())));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        let s = if self.samples.is_empty() { 0.0 } else { self.sample_mass };
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.boxes.iter().map(|b| b.mass).sum::<f64>() + s
    }

    /// Every point carrying positive mass individually: atoms and cloud points.
    pub fn point_masses(&self) -> Vec<(Vec<f64>, f64)> {
        let mut v: Vec<_> = self.atoms.iter().map(|a| (a.point.clone(), a.mass)).collect();
        if !self.samples.is_empty() {
            let w = self.sample_mass / self.samples.len() as f64;
            v.extend(self.samples.iter().map(|p| (p.clone(), w)));
        }
        v
    }

    /// Pushforward under `p -> p + t`.
    pub fn translated(&self, t: &[f64]) -> MeasureSpec {
        let add = |p: &[f64]| p.iter().zip(t).map(|(a, b)| a + b).collect::<Vec<_>>();
        MeasureSpec {
            dim: self.dim,
            atoms: self.atoms.iter().map(|a| Atom { point: add(&a.point), mass: a.mass }).collect(),
            boxes: self
                .boxes
                .iter()
                .map(|b| UniformBox { min: add(&b.min), max: add(&b.max), mass: b.mass })
                .collect(),
            samples: self.samples.iter().map(|p| add(p)).collect(),
            sample_mass: self.sample_mass,
        }
    }
}

/// Axis-aligned query box with per-face openness.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub min_closed: Vec<bool>,
    pub max_closed: Vec<bool>,
}

impl QueryBox {
    pub fn open(min: Vec<f64>, max: Vec<f64>) -> Self {
        let n = min.len();
        QueryBox { min, max, min_closed: vec![false; n], max_closed: vec![false; n] }
    }

    pub fn closed(min: Vec<f64>, max: Vec<f64>) -> Self {
        let n = min.len();
        QueryBox { min, max, min_closed: vec![true; n], max_closed: vec![true; n] }
    }

    /// Closed or open `l-inf` ball.
    pub fn ball(center: &[f64], radius: f64, closed: bool) -> Self {
        let min = center.iter().map(|c| c - radius).collect();
        let max = center.iter().map(|c| c + radius).collect();
        if closed {
            QueryBox::closed(min, max)
        } else {
            QueryBox::open(min, max)
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().enumerate().all(|(i, &x)| {
            let lo = if self.min_closed[i] { x >= self.min[i] } else { x > self.min[i] };
            let hi = if self.max_closed[i] { x <= self.max[i] } else { x < self.max[i] };
            lo && hi
        })
    }
}

/// Exact `mu(Q)`: atoms by face-aware containment, boxes by overlap volume.
pub fn measure_of_box(mu: &MeasureSpec, q: &QueryBox) -> f64 {
    let mut total = 0.0;
    for (p, m) in mu.point_masses() {
        if q.contains(&p) {
            total += m;
        }
    }
    for b in &mu.boxes {
        let mut frac = 1.0;
        for i in 0..mu.dim {
            let lo = b.min[i].max(q.min[i]);
            let hi = b.max[i].min(q.max[i]);
            if hi <= lo {
                frac = 0.0;
                break;
            }
            frac *= (hi - lo) / (b.max[i] - b.min[i]);
        }
        total += b.mass * frac;
    }
    total
}

fn sample_one(mu: &MeasureSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: f64 = rng.gen::<f64>() * mu.total_mass();
    for a in &mu.atoms {
        if x < a.mass {
            return a.point.clone();
        }
        x -= a.mass;
    }
    for b in &mu.boxes {
        if x < b.mass {
            return b.min.iter().zip(&b.max).map(|(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect();
        }
        x -= b.mass;
    }
    if !mu.samples.is_empty() {
        let i = rng.gen_range(0..mu.samples.len());
        return mu.samples[i].clone();
    }
    // Rounding left `x` past the last component.
    match (mu.boxes.last(), mu.atoms.last()) {
        (Some(b), _) => b.min.iter().zip(&b.max).map(|(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect(),
        (None, Some(a)) => a.point.clone(),
        (None, None) => vec![0.0; mu.dim],
    }
}

/// Generator for draw `index` of stream `seed`; independent of thread layout.
pub fn indexed_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` i.i.d. draws from `mu`, draw `i` depending only on `(seed, i)`.
pub fn sample(mu: &MeasureSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n)
        .into_par_iter()
        .map(|i| sample_one(mu, &mut indexed_rng(seed, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom_plus_box(n: usize) -> MeasureSpec {
        MeasureSpec {
            dim: n,
            atoms: vec![Atom { point: vec![0.0; n], mass: 0.5 }],
            boxes: vec![UniformBox { min: vec![-1.0; n], max: vec![1.0; n], mass: 0.5 }],
            samples: vec![],
            sample_mass: 0.0,
        }
    }

    #[test]
    fn box_queries() {
        let mu = atom_plus_box(3);
        assert_eq!(measure_of_box(&mu, &QueryBox::open(vec![-2.0; 3], vec![2.0; 3])), 1.0);
        assert_eq!(measure_of_box(&mu, &QueryBox::open(vec![0.0; 3], vec![2.0; 3])), 0.5 * 0.125);
        let degenerate = QueryBox::closed(vec![0.0, -1.0, -1.0], vec![0.0, 1.0, 1.0]);
        assert_eq!(measure_of_box(&mu, &degenerate), 0.5);
    }

    #[test]
    fn decimal_parsing_is_exact() {
        let a = parse_decimal("0.1").unwrap() + parse_decimal("0.2").unwrap();
        assert_eq!(a, parse_decimal("0.3").unwrap());
        assert_eq!(parse_decimal("2.5e-1").unwrap(), parse_decimal(".25").unwrap());
        assert!(parse_decimal("1.2.3").is_err());
    }

    #[test]
    fn json_validation() {
        let ok = r#"{"dim":2,"atoms":[{"point":[0,0],"mass":"0.3"}],
                    "boxes":[{"min":[0,0],"max":[1,1],"mass":"0.7"}]}"#;
        let mu = MeasureSpec::from_json(ok).unwrap();
        assert_eq!(mu.atoms.len(), 1);
        let bad = r#"{"dim":2,"atoms":[{"point":[0,0],"mass":"0.3"}]}"#;
        assert!(MeasureSpec::from_json(bad).is_err());
        let back = MeasureSpec::from_json(&mu.to_json()).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn sampling_is_reproducible_and_balanced() {
        let mu = atom_plus_box(2);
        let a = sample(&mu, 20_000, 7);
        assert_eq!(a, sample(&mu, 20_000, 7));
        let hits = a.iter().filter(|p| p[0] == 0.0 && p[1] == 0.0).count() as f64;
        let sigma = (20_000.0f64 * 0.25).sqrt();
        assert!((hits - 10_000.0).abs() < 5.0 * sigma);
    }
}

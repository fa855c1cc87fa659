//! Cube covers of a measure and lattice shifts that avoid its atoms.
//!
//! Run with `cargo run --release --example lattice_cover`.

use sympack::lattice::{cube_cover, find_lattice_shift, measure_of_lattice, Lattice};
use sympack::measure::{MeasureSpec, QueryBox};

fn main() -> sympack::Result<()> {
    let mu = MeasureSpec::from_json(include_str!("../data/three-atoms.json"))?;
    let cover = cube_cover(&mu, 0.1)?;
    println!("{} cubes of side {:.4}, covered mass {}", cover.centers.len(), cover.side, cover.covered_mass);
    for (c, m) in cover.centers.iter().zip(&cover.masses) {
        println!("  center {c:.4?} mass {m}");
    }

    // The lattice through the origin has atoms on its hyperplanes; a shift fixes that.
    let bad = Lattice::new(vec![0.5; 4], 1.0)?;
    println!("mass on Sigma(1/2, 1): {}", measure_of_lattice(&mu, &bad));
    let y = find_lattice_shift(&mu, 1.0, &QueryBox::open(vec![0.0; 4], vec![1.0; 4]))?;
    println!("shift {y:?} leaves mass {}", measure_of_lattice(&mu, &Lattice::new(y.clone(), 1.0)?));
    Ok(())
}

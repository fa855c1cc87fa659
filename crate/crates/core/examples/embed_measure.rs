//! Embeds a long box into a neighborhood of a measure made of three atoms
//! and a uniform box, then certifies how much of the measure is covered.
//!
//! Run with `cargo run --release --example embed_measure`.

use sympack::assembly::embed_measure;
use sympack::measure::MeasureSpec;

fn main() -> sympack::Result<()> {
    let mu = MeasureSpec::from_json(include_str!("../data/three-atoms.json"))?;
    let (total, report) = embed_measure(&mu, 0.1, 20_000, 7)?;
    let plan = total.plan();
    println!("cubes r = {}, half-side a = {:.4}, fold k = {}, eta = {:.6}", plan.r, plan.a, plan.k, plan.eta);
    println!("box (0, {:.4}) x (0, {:.6})^{}", plan.beta, plan.eta, plan.dim - 1);
    println!("exact coverage bound {:.12}", report.exact_bound);
    println!(
        "Monte Carlo: {}/{} covered ({} unknown), sigma {:.2e}",
        report.mc_covered, report.mc_samples, report.mc_unknown, report.mc_sigma
    );
    for a in &report.atoms {
        println!("atom {:?} (mass {}) covered: {}", a.point, a.mass, a.covered);
    }
    Ok(())
}

//! Finite-difference Poisson brackets of three moment-type maps, with a
//! step-halving study for the one pushed through the assembled embedding.
//!
//! Run with `cargo run --release --example involutivity_study`.

use sympack::assembly::build_total_embedding;
use sympack::cli::polydisk_points;
use sympack::fibers::*;
use sympack::measure::MeasureSpec;

fn main() -> sympack::Result<()> {
    let pts = polydisk_points(&[1.0, 1.0, 1.0], 500, 0.8, 1);
    let std = involutivity_certify(&|z: &[f64]| Ok(phi_std(z)), &pts, 1e-5);
    println!("Phi_std: max bracket {:e}", std.max_bracket);
    let a = [1.0, 1.0, 1.0];
    let rho = involutivity_certify(&|z: &[f64]| Ok(rho_a(&a, &phi_std(z))), &pts, 1e-5);
    println!("rho_a o Phi_std: max bracket {:e}", rho.max_bracket);

    let mu = MeasureSpec::from_json(include_str!("../data/three-atoms.json"))?;
    let chart = EmbeddedChart::new(build_total_embedding(&mu, 0.1)?);
    let eta = chart.total.plan().eta;
    let a: Vec<f64> = chart.radii_squared().iter().map(|b| 0.9 * b).collect();
    let pts = chart.sample_image(300, 5, 0.1, 0.85)?;
    let phi = |z: &[f64]| phi_iota_a(&chart, &a, z);
    for r in step_halving_study(&phi, &pts, eta / 200.0, 4) {
        println!("step {:.3e}: max {:.3e}, normalized {:.3e}", r.step, r.max_bracket, r.max_normalized);
    }
    Ok(())
}

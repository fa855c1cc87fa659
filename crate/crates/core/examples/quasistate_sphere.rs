//! The median quasi-state on a cube-sphere: two independent evaluations,
//! its special fiber, and the push-forward identity for a cubic.
//!
//! Run with `cargo run --release --example quasistate_sphere`.

use sympack::quasistate::*;

fn main() -> sympack::Result<()> {
    let space = DiscreteSpace::cube_sphere(16)?;
    let mu = DiscreteMeasure::uniform(&space, 0);
    println!("{}: {} cells, {} edges", space.tag(), space.len(), space.edge_count());

    let f = CellFunction::new(
        space.centers.iter().map(|p| p[0] + 0.5 * p[1] * p[2] + (3.0 * p[2]).sin()).collect(),
    )?;
    let m = zeta_median(&space, &mu, &f)?;
    let i = zeta_integral(&space, &mu, &f)?;
    println!("median route {} (cell {}), integral route {}", m.value, m.cell, i);

    let fiber = special_fiber_component(&space, &mu, &f)?;
    let set = indicator(&space, &fiber)?;
    println!("special fiber: {} cells, superheavy: {}", fiber.len(), superheavy_check(&space, &mu, &set)?);

    let h = Poly::new(vec![0.1, -1.0, 0.0, 1.0]);
    println!("zeta(h o f) = {}, h(zeta(f)) = {}", pushforward_eval(&space, &mu, &f, &h)?, h.eval(m.value));

    // An atom of mass above one half forces evaluation at its cell.
    let atom = DiscreteMeasure::with_atom(&space, 100, 0.6, 0)?;
    println!("with an atom at cell 100: {} vs f(100) = {}", zeta_median(&space, &atom, &f)?.value, f.values[100]);
    Ok(())
}

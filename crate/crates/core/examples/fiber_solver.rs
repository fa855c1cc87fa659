//! Fibers of the cutoff moment map `rho_a o Phi_std` on `C^3`.
//!
//! Run with `cargo run --release --example fiber_solver`.

use sympack::fibers::{phi_std, rho_a, rho_fiber_solve, torus_points, FiberSolution};
use sympack::Error;

fn main() -> sympack::Result<()> {
    let a = [1.0, 1.0, 1.0];
    let c = rho_a(&a, &[0.3, 0.5, 0.1]);
    println!("c = {c:?}");
    let sol = rho_fiber_solve(&a, &c)?;
    if let FiberSolution::Product { alpha, residual } = &sol {
        println!("alpha = {alpha:?}, residual {residual:e}, {} sign choices", sol.points().len());
        // `rho_a` is taken of the actions, so the torus `T(alpha)` lies over c.
        for z in torus_points(alpha, 3, 1) {
            println!("  rho_a(Phi_std({z:.3?})) = {:?}", rho_a(&a, &phi_std(&z)));
        }
    }
    println!("c = 0: {:?}", rho_fiber_solve(&a, &[0.0; 3])?);
    match rho_fiber_solve(&a, &[0.2, 0.3, 0.1]) {
        Err(Error::NotInImage) => println!("(0.2, 0.3, 0.1) is not a value"),
        other => println!("(0.2, 0.3, 0.1): {other:?}"),
    }
    Ok(())
}

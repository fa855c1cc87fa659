//! Builds the folding embedding of `(0, alpha) x (0, 1)^3` into `(0, 5)^4`,
//! pushes a few points through it, and inverts one image point.
//!
//! Run with `cargo run --release --example fold_polydisk`.

use sympack::audit;
use sympack::folding::{build_polydisk_embedding, Membership};
use sympack::geometry::SymplecticMap;

fn main() -> sympack::Result<()> {
    let e = build_polydisk_embedding(5, 2)?;
    println!("k = {}, n = {}, alpha = {}", e.k, e.n, e.alpha);

    // Entry slab: the identity. Exit slab: a pure translation.
    let z = [0.5, 0.25, 0.75, 0.5];
    println!("iota({z:?}) = {:?}", e.eval(&z)?);
    let z = [e.alpha - 0.5, 0.25, 0.75, 0.5];
    println!("iota({z:?}) = {:?}", e.eval(&z)?);

    // A point deep in the middle of the band, and its symplectic defect.
    let z = [160.3, 0.4, 0.2, 0.9];
    let w = e.eval(&z)?;
    println!("iota({z:?}) = {w:?}, defect {:e}", e.defect(&z)?);

    // Membership returns a witness that is re-checked by forward evaluation.
    match e.membership(&[2.4, 3.3, 1.6, 4.2]) {
        Membership::In { witness, residual } => println!("covered: witness {witness:?}, residual {residual:e}"),
        other => println!("not confirmed: {other:?}"),
    }

    let cov = audit::interior_coverage(&e, 2.0, 3.0, 0.05, 2000, 1, 0.99);
    println!("coverage of (2,3) x (0,5)^3 away from the integer planes: {:.4}", cov.fraction);
    Ok(())
}

//! Describes a map as a table of elementary pieces, round-trips it through
//! JSON, and audits its symplectic defect.
//!
//! Run with `cargo run --release --example piece_table`.

use sympack::audit::defect_stats;
use sympack::geometry::{DomainBox, Func1, LiftVariable, MapSpec, PieceSpec, PieceTable};

fn main() -> sympack::Result<()> {
    let domain = DomainBox { min: vec![0.0; 4], max: vec![4.0, 1.0, 1.0, 1.0] };
    let table = PieceTable {
        dim: 4,
        compose: true,
        pieces: vec![
            PieceSpec {
                map: MapSpec::Shear { dim: 4, pair: 1, f: Func1::Poly { coeffs: vec![0.0, 0.5, 0.25] } },
                domain: domain.clone(),
            },
            PieceSpec {
                map: MapSpec::LiftFlow {
                    dim: 4,
                    base_pair: 0,
                    fiber_pair: 1,
                    variable: LiftVariable::Y,
                    a: -1.0,
                    b: 1.0,
                    c: 2.0,
                    time: 1.0,
                },
                domain,
            },
        ],
    };
    let json = serde_json::to_string_pretty(&table).expect("tables serialize");
    println!("{json}");
    let back: PieceTable = serde_json::from_str(&json).expect("round trip");
    let map = back.build()?;
    let pts: Vec<Vec<f64>> = (1..200).map(|i| vec![0.02 * i as f64, 0.5, 0.3, 0.7]).collect();
    let stats = defect_stats(map.as_ref(), &pts, 1e-10);
    println!("max defect {:e} over {} points", stats.max, stats.samples);
    Ok(())
}

//! Bulk-to-boundary propagation of a boundary bump and the per-tile
//! constants along a conical sequence.
use hypfield::boundary::{beta_constant, h_plus_direct, h_plus_substituted, k_table, BoundarySource};
use hypfield::greens::ModelParams;
use hypfield::tessellation::{generate, TriangleParams};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mp = ModelParams::new(2, 2.0)?;
    let h = BoundarySource::bump(PI / 6.0, PI / 3.0)?;
    for z in [2.0, 0.5, 0.1, 0.02] {
        let (a, b) = (h_plus_direct(&mp, &h, z, 0.4)?, h_plus_substituted(&mp, &h, z, 0.4)?);
        println!("z = {z:<5} H₊h = {a:.12e} (substituted {b:.12e})");
    }
    let one = BoundarySource::constant(1.0);
    let z = 0.3;
    println!("h ≡ 1 at z = {z}: {:.12} vs {:.12}", h_plus_direct(&mp, &one, z, 0.0)?, beta_constant(&mp) * z.powf(1.0 - mp.delta_plus));
    let tess = generate(TriangleParams::new(3, 4, 4)?, 6.0)?;
    let seq = tess.conical_sequence_spaced(PI / 4.0, &tess.fundamental().centroid, 6, 1.0, 0.6)?;
    for k in k_table(&mp, &h, 1.0, &tess, &seq, 6)? {
        println!("tile {:>5}: min H₊h = {:.6e}, log k = {:.6e}", k.tile_id, k.h_extreme, k.log_k);
    }
    Ok(())
}

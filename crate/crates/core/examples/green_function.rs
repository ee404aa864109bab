//! The free Green's function: both hypergeometric forms, the logarithmic
//! singularity and the exponential tail.
use hypfield::greens::{g_plus, g_plus_w_form, ModelParams};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for m2 in [0.5, 2.0, 6.0] {
        let mp = ModelParams::new(2, m2)?;
        println!("m² = {m2}: Δ₊ = {:.6}, γ₊ = {:.6}", mp.delta_plus, mp.gamma_plus);
        for rho in [1e-4, 0.05, 1.0, 5.0, 20.0] {
            let (a, b) = (g_plus(&mp, rho)?, g_plus_w_form(&mp, rho)?);
            println!("  ρ = {rho:<7} G₊ = {a:.15e}  alt = {b:.15e}  rel dev {:.1e}", ((a - b) / a).abs());
        }
        let (r1, r2) = (1e-6, 1e-4);
        let slope = (g_plus(&mp, r2)? - g_plus(&mp, r1)?) / (r2 / r1).ln();
        println!("  short-distance slope {slope:.6} (−1/2π = {:.6})", -0.5 / PI);
    }
    Ok(())
}

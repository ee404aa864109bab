//! Neumann function by images: domination over the free function and
//! evenness across a tile side.
use hypfield::greens::{domination_audit, g_neumann, g_plus, neumann_symmetry_audit, ModelParams, NeumannTruncation};
use hypfield::geometry::dist;
use hypfield::tessellation::{generate, TriangleParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mp = ModelParams::new(2, 2.0)?;
    let tess = generate(TriangleParams::new(3, 4, 4)?, 7.0)?;
    let nt = NeumannTruncation::new(&tess, 5.0, 1e-3)?;
    println!("orbit constant {:.3}, tail bound {:.3e}", nt.orbit_constant, nt.tail_bound(&mp));
    let t1 = tess.fundamental();
    let (x, y) = (t1.incenter(), t1.centroid);
    let gn = g_neumann(&mp, &nt, &x, &y)?;
    println!("G_N = {:.10} from {} images; G₊ = {:.10}", gn.value, gn.images, g_plus(&mp, dist(&x, &y))?);
    let dom = domination_audit(&mp, &nt, 1000, 7)?;
    println!("domination: {} violations in {} pairs, sup G_N/G₊ ≈ {:.3}", dom.violations, dom.n_pairs, dom.c_estimate);
    let sym = neumann_symmetry_audit(&mp, &nt, &t1.sides[0], &x, 0.3, 6)?;
    println!("evenness across side 0: max |f(t) − f(−t)| = {:.2e}, f′(0) ≈ {:.2e}", sym.max_asymmetry, sym.derivative_at_zero);
    Ok(())
}

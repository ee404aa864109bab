//! Generates the (3,4,4) tessellation, locates a few points and writes an
//! SVG of the Poincaré disk.
use hypfield::cli::tessellation_svg;
use hypfield::geometry::Point;
use hypfield::tessellation::{generate, tile_area, TriangleParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tp = TriangleParams::new(3, 4, 4)?;
    let tess = generate(tp, 4.0)?;
    println!("{} tiles; tile area {:.12} (π/6 = {:.12})", tess.len(), tile_area(tess.fundamental()), std::f64::consts::PI / 6.0);
    for (rho, angle) in [(0.3, 0.2), (1.7, 2.0), (3.1, -1.0)] {
        let x = Point::from_polar(rho, angle);
        let id = tess.locate(&x).expect("inside the enumeration");
        println!("point at ρ={rho}, angle {angle}: tile {id}, word {:?}", tess.tiles[id].word);
    }
    let seq = tess.conical_sequence(std::f64::consts::FRAC_PI_4, &tess.fundamental().centroid, 5, 1.0)?;
    println!("conical tiles towards angle π/4: {seq:?}");
    let path = std::env::temp_dir().join("tessellation.svg");
    std::fs::write(&path, tessellation_svg(&tess))?;
    println!("wrote {}", path.display());
    Ok(())
}

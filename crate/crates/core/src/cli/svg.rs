//! Minimal SVG emitters: the tessellation in the Poincaré disk and the
//! decay curve.

use std::fmt::Write;

use crate::fieldmc::TrivialityRun;
use crate::geometry::Point;
use crate::tessellation::Tessellation;

const SIZE: f64 = 800.0;
const EDGE_STEPS: usize = 12;

fn disk_xy(p: &Point) -> (f64, f64) {
    let d = p.to_disk();
    let r = 0.5 * SIZE - 10.0;
    (0.5 * SIZE + r * d.x, 0.5 * SIZE - r * d.y)
}

/// Points along the geodesic `a → b`, interpolated in the Klein chart
/// where geodesics are straight.
fn edge(a: &Point, b: &Point, out: &mut Vec<(f64, f64)>) {
    let (ka, kb) = (a.coords() / a.x3(), b.coords() / b.x3());
    for s in 0..EDGE_STEPS {
        let t = s as f64 / EDGE_STEPS as f64;
        let p = Point::normalize((1.0 - t) * ka + t * kb).expect("inside the Klein disk");
        out.push(disk_xy(&p));
    }
}

pub fn tessellation_svg(tess: &Tessellation) -> String {
    let mut s = String::new();
    let c = 0.5 * SIZE;
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#).unwrap();
    writeln!(s, r##"<circle cx="{c}" cy="{c}" r="{}" fill="#f8f8f8" stroke="#333" stroke-width="1"/>"##, c - 10.0).unwrap();
    for tile in &tess.tiles {
        let mut pts = Vec::with_capacity(3 * EDGE_STEPS);
        for i in 0..3 {
            edge(&tile.vertices[i], &tile.vertices[(i + 1) % 3], &mut pts);
        }
        let fill = match (tile.id == 0, tile.word.len() % 2) {
            (true, _) => "#d62728",
            (false, 0) => "#4c72b0",
            _ => "#dde6f3",
        };
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        writeln!(s, r##"<polygon points="{}" fill="{fill}" stroke="#222" stroke-width="0.3"/>"##, path.join(" ")).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// `U(q)` against `q` with ±2 standard-error bars and the fitted line.
pub fn decay_svg(run: &TrivialityRun) -> String {
    let (w, h, pad) = (640.0, 420.0, 50.0);
    let us: Vec<f64> = run.records.iter().map(|r| r.log_bound).collect();
    // Signed log scale keeps bounds spanning many decades readable.
    let y_of = |u: f64| u.signum() * u.abs().ln_1p();
    let ys: Vec<f64> = us.iter().map(|&u| y_of(u)).collect();
    let (ymin, ymax) = ys.iter().fold((0.0f64, 0.0f64), |(a, b), &y| (a.min(y), b.max(y)));
    let span = (ymax - ymin).max(1e-12);
    let n = us.len().max(2) as f64;
    let px = |q: f64| pad + (q - 1.0) / (n - 1.0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - ymin) / span * (h - 2.0 * pad);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r##"<rect width="{w}" height="{h}" fill="white"/>"##).unwrap();
    writeln!(s, r##"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="#999"/>"##, py(0.0), w - pad, py(0.0)).unwrap();
    for (r, y) in run.records.iter().zip(&ys) {
        let x = px(r.q as f64);
        let lo = py(y_of(r.log_bound - 2.0 * r.log_bound_stderr));
        let hi = py(y_of(r.log_bound + 2.0 * r.log_bound_stderr));
        writeln!(s, r##"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="#555"/>"##).unwrap();
        writeln!(s, r##"<circle cx="{x:.2}" cy="{:.2}" r="4" fill="#4c72b0"/>"##, py(*y)).unwrap();
    }
    writeln!(
        s,
        r##"<text x="{pad}" y="25" font-family="sans-serif" font-size="14">sign(U)·log(1+|U|) vs q; rate {:.4e}, 95% CI [{:.4e}, {:.4e}]</text>"##,
        run.epsilon_hat, run.ci_low, run.ci_high
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

//! Command-line front end. Every subcommand writes its declared files plus
//! a `manifest.json` listing inputs, seed, version, wall time and a SHA-256
//! for each output.
//!
//! Exit codes: 0 success, 1 audit failure or runtime error, 2 usage or
//! configuration error.

mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boundary::{h_plus_direct, h_plus_substituted, BoundaryError, BoundarySource, Bump};
use crate::fieldmc::{self, build_covariance, build_quadrature, CovKind, FieldError, RunConfig};
use crate::greens::{self, domination_audit, g_plus, g_plus_w_form, neumann_symmetry_audit, GreensError, ModelParams, NeumannTruncation};
use crate::tessellation::{generate, TessellationError, TriangleParams};

pub use svg::{decay_svg, tessellation_svg};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Tessellation(#[from] TessellationError),
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Parser, Debug)]
#[command(name = "hypfield", version, about = "Fields on hyperbolic tessellations: tables, audits and the decay experiment")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct Group {
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long, default_value_t = 4)]
    pub q: u32,
    #[arg(long, default_value_t = 4)]
    pub r: u32,
}

#[derive(ValueEnum, Debug, Clone, Copy, serde::Serialize)]
pub enum KindArg {
    Free,
    Neumann,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a tessellation; write a CSV of tiles and an SVG disk render.
    /// Relative output paths of every subcommand resolve against `--out`.
    Tessellate {
        #[command(flatten)]
        group: Group,
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Directory for the manifest.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Tabulate G₊ by both hypergeometric forms; fails if they disagree by 1e−9.
    Green {
        #[arg(long, default_value_t = 2.0)]
        m2: f64,
        #[arg(long, default_value_t = 0.05)]
        rho_min: f64,
        #[arg(long, default_value_t = 20.0)]
        rho_max: f64,
        /// Number of geometrically spaced distances.
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value = "green.csv")]
        csv: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Domination G₊ ≤ G_N on random pairs and evenness across a tile side.
    NeumannAudit {
        #[command(flatten)]
        group: Group,
        #[arg(long, default_value_t = 2.0)]
        m2: f64,
        #[arg(long, default_value_t = 5.0)]
        orbit_radius: f64,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Tabulate H₊h for a boundary bump by both integral forms.
    Propagator {
        #[arg(long, default_value_t = 2.0)]
        m2: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6)]
        beta0: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        beta1: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Horizontal half-plane coordinate of the table.
        #[arg(long, default_value_t = 0.4)]
        zeta: f64,
        #[arg(long, default_value_t = 0.01)]
        z_min: f64,
        #[arg(long, default_value_t = 10.0)]
        z_max: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value = "propagator.csv")]
        csv: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Monte Carlo moments of the exponential and Wick powers on one tile.
    SampleAudit {
        #[command(flatten)]
        group: Group,
        #[arg(long, default_value_t = 2.0)]
        m2: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        resolution: usize,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        max_k: u32,
        #[arg(long, value_enum, default_value_t = KindArg::Free)]
        kind: KindArg,
        #[arg(long, default_value_t = 5.0)]
        orbit_radius: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// The decay experiment from a key=value config.
    Triviality {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
}

/// Status of a completed subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

struct Run {
    outputs: Vec<PathBuf>,
    inputs: serde_json::Value,
    seed: Option<u64>,
}

impl Run {
    fn new(inputs: serde_json::Value, seed: Option<u64>) -> Self {
        Run { outputs: Vec::new(), inputs, seed }
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn manifest(&self, out_dir: &Path, command: &str, outcome: Outcome, started: Instant) -> Result<PathBuf, CliError> {
        let mut files = Vec::new();
        for p in &self.outputs {
            let digest = Sha256::digest(fs::read(p)?);
            files.push(json!({ "path": p.display().to_string(), "sha256": hex::encode(digest) }));
        }
        let m = json!({
            "command": command,
            "inputs": self.inputs,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": rayon::current_num_threads(),
            "wall_time_s": started.elapsed().as_secs_f64(),
            "outputs": files,
            "status": if outcome == Outcome::Pass { "pass" } else { "fail" },
        });
        fs::create_dir_all(out_dir)?;
        let path = out_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(path)
    }
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn tessellate(group: &Group, radius: f64, svg: &Option<PathBuf>, csv: &Option<PathBuf>, run: &mut Run) -> Result<Outcome, CliError> {
    let tp = TriangleParams::new(group.p, group.q, group.r)?;
    let tess = generate(tp, radius)?;
    println!("{} tiles within radius {radius}", tess.len());
    if let Some(path) = csv {
        let mut s = String::from("tile_id,word,v1x,v1y,v2x,v2y,v3x,v3y\n");
        for t in &tess.tiles {
            let word: String = if t.word.is_empty() { "e".into() } else { t.word.iter().map(|g| char::from(b'0' + g)).collect() };
            let v: Vec<String> = t.vertices.iter().flat_map(|p| { let d = p.to_disk(); [real(d.x), real(d.y)] }).collect();
            s.push_str(&format!("{},{},{}\n", t.id, word, v.join(",")));
        }
        run.write(path, s.as_bytes())?;
    }
    if let Some(path) = svg {
        run.write(path, tessellation_svg(&tess).as_bytes())?;
    }
    Ok(Outcome::Pass)
}

fn green(m2: f64, rho_min: f64, rho_max: f64, steps: usize, csv: &Path, run: &mut Run) -> Result<Outcome, CliError> {
    if !(rho_min > 0.0 && rho_max > rho_min && steps >= 2) {
        return Err(CliError::Usage("need 0 < rho-min < rho-max and steps ≥ 2".into()));
    }
    let mp = ModelParams::new(2, m2)?;
    let mut s = String::from("rho,g_plus_G2,g_plus_G3,rel_dev\n");
    let mut worst: f64 = 0.0;
    for i in 0..steps {
        let rho = rho_min * (rho_max / rho_min).powf(i as f64 / (steps - 1) as f64);
        let (a, b) = (g_plus(&mp, rho)?, g_plus_w_form(&mp, rho)?);
        let dev = ((a - b) / a).abs();
        worst = worst.max(dev);
        s.push_str(&format!("{},{},{},{}\n", real(rho), real(a), real(b), real(dev)));
    }
    run.write(csv, s.as_bytes())?;
    println!("max relative deviation {worst:.3e}");
    Ok(if worst < 1e-9 { Outcome::Pass } else { Outcome::Fail })
}

fn neumann_audit(group: &Group, m2: f64, orbit_radius: f64, pairs: usize, seed: u64, out: &Path, run: &mut Run) -> Result<Outcome, CliError> {
    let tp = TriangleParams::new(group.p, group.q, group.r)?;
    let mp = ModelParams::new(2, m2)?;
    let tess = generate(tp, orbit_radius + 2.0 * tp_reach(tp) + 2.1)?;
    let nt = NeumannTruncation::new(&tess, orbit_radius, 0.0)?;
    let dom = domination_audit(&mp, &nt, pairs, seed)?;
    let t1 = tess.fundamental();
    let x = t1.incenter();
    let mut sym = Vec::new();
    for (i, side) in t1.sides.iter().enumerate() {
        let short = neumann_symmetry_audit(&mp, &nt, side, &x, 0.3, 10)?;
        let long = neumann_symmetry_audit(&mp, &nt.with_radius(orbit_radius + 2.0), side, &x, 0.3, 10)?;
        let halves = long.derivative_at_zero.abs() <= 0.5 * short.derivative_at_zero.abs()
            || short.derivative_at_zero.abs() <= short.derivative_noise_floor;
        let even = short.max_asymmetry < 1e-6 && long.max_asymmetry < 1e-6;
        sym.push(greens::AuditRecord {
            audit_name: format!("evenness_side_{i}"),
            params: json!({
                "m2": m2, "orbit_radius": orbit_radius,
                "derivative_at_zero": short.derivative_at_zero,
                "derivative_at_zero_extended": long.derivative_at_zero,
                "derivative_noise_floor": short.derivative_noise_floor,
            }),
            n_samples: short.samples.len(),
            max_violation: short.max_asymmetry.max(long.max_asymmetry),
            tail_bound: short.tail_bound,
            passed: even && halves,
        });
    }
    let mut records = vec![dom.record(&mp)];
    records.extend(sym);
    let passed = records.iter().all(|r| r.passed);
    for r in &records {
        println!("{}: {} (max violation {:.3e})", r.audit_name, if r.passed { "PASS" } else { "FAIL" }, r.max_violation);
    }
    run.write(&out.join("neumann_audit.json"), (serde_json::to_string_pretty(&records)? + "\n").as_bytes())?;
    Ok(if passed { Outcome::Pass } else { Outcome::Fail })
}

fn tp_reach(tp: TriangleParams) -> f64 {
    let t = crate::tessellation::fundamental_triangle(tp);
    t.vertices.iter().map(|v| v.dist_to_origin()).fold(0.0, f64::max)
}

#[allow(clippy::too_many_arguments)]
fn propagator(m2: f64, beta0: f64, beta1: f64, amplitude: f64, zeta: f64, z_min: f64, z_max: f64, steps: usize, csv: &Path, run: &mut Run) -> Result<Outcome, CliError> {
    if !(z_min > 0.0 && z_max > z_min && steps >= 2) {
        return Err(CliError::Usage("need 0 < z-min < z-max and steps ≥ 2".into()));
    }
    let mp = ModelParams::new(2, m2)?;
    let h = BoundarySource::Bump(Bump::new(beta0, beta1, amplitude, 1.0)?);
    let mut s = String::from("z,zeta,h_direct,h_substituted,rel_dev\n");
    let mut worst: f64 = 0.0;
    for i in 0..steps {
        let z = z_min * (z_max / z_min).powf(i as f64 / (steps - 1) as f64);
        let (a, b) = (h_plus_direct(&mp, &h, z, zeta)?, h_plus_substituted(&mp, &h, z, zeta)?);
        let dev = if a == b { 0.0 } else { ((a - b) / a.abs().max(b.abs())).abs() };
        worst = worst.max(dev);
        s.push_str(&format!("{},{},{},{},{}\n", real(z), real(zeta), real(a), real(b), real(dev)));
    }
    run.write(csv, s.as_bytes())?;
    println!("max relative deviation {worst:.3e}");
    Ok(if worst < 1e-8 { Outcome::Pass } else { Outcome::Fail })
}

#[allow(clippy::too_many_arguments)]
fn sample_audit(
    group: &Group,
    m2: f64,
    alpha: f64,
    resolution: usize,
    n: usize,
    max_k: u32,
    kind: KindArg,
    orbit_radius: f64,
    seed: u64,
    out: &Path,
    run: &mut Run,
) -> Result<Outcome, CliError> {
    let tp = TriangleParams::new(group.p, group.q, group.r)?;
    let mp = ModelParams::new(2, m2)?;
    let radius = match kind {
        KindArg::Free => 1.0,
        KindArg::Neumann => orbit_radius + 2.0 * tp_reach(tp) + 0.1,
    };
    let tess = generate(tp, radius)?;
    let quad = build_quadrature(&tess, &[0], resolution);
    let cov = match kind {
        KindArg::Free => build_covariance(&mp, None, &quad, CovKind::Free)?,
        KindArg::Neumann => {
            let nt = NeumannTruncation::new(&tess, orbit_radius, 0.0)?;
            build_covariance(&mp, Some(&nt), &quad, CovKind::Neumann)?
        }
    };
    let report = fieldmc::mc_invariants_audit(&cov, &quad, alpha, max_k, n, seed)?;
    println!(
        "mean {:.6} ± {:.6} (exact {:.6}); second moment {:.6} ± {:.6} (exact {:.6}); {}",
        report.exp_mean.mean,
        report.exp_mean.stderr,
        report.exp_mean_exact,
        report.exp_second.mean,
        report.exp_second.stderr,
        report.exp_second_exact,
        if report.passed { "PASS" } else { "FAIL" }
    );
    run.write(&out.join("sample_audit.json"), (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    Ok(if report.passed { Outcome::Pass } else { Outcome::Fail })
}

fn triviality(config: &Path, out: &Path, run: &mut Run) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(config)?;
    let cfg = RunConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
    run.seed = Some(cfg.seed);
    run.inputs = json!({ "config": config.display().to_string(), "values": cfg });
    let result = fieldmc::triviality_run(&cfg)?;
    run.write(&out.join("config.cfg"), cfg.to_string().as_bytes())?;
    run.write(&out.join("triviality.json"), (serde_json::to_string_pretty(&result)? + "\n").as_bytes())?;
    let mut csv = Vec::new();
    fieldmc::write_q_csv(&mut csv, &result)?;
    run.write(&out.join("triviality_q.csv"), &csv)?;
    run.write(&out.join("decay.svg"), decay_svg(&result).as_bytes())?;
    println!(
        "{} decay rate {:.6e}, 95% CI [{:.6e}, {:.6e}]",
        if result.passed { "PASS" } else { "FAIL" },
        result.epsilon_hat,
        result.ci_low,
        result.ci_high
    );
    Ok(if result.passed { Outcome::Pass } else { Outcome::Fail })
}

fn dispatch(cmd: &Command, run: &mut Run) -> Result<(Outcome, PathBuf, &'static str), CliError> {
    Ok(match cmd {
        Command::Tessellate { group, radius, svg, csv, out } => {
            let (svg, csv) = (svg.as_ref().map(|p| out.join(p)), csv.as_ref().map(|p| out.join(p)));
            (tessellate(group, *radius, &svg, &csv, run)?, out.clone(), "tessellate")
        }
        Command::Green { m2, rho_min, rho_max, steps, csv, out } => (green(*m2, *rho_min, *rho_max, *steps, &out.join(csv), run)?, out.clone(), "green"),
        Command::NeumannAudit { group, m2, orbit_radius, pairs, seed, out } => {
            (neumann_audit(group, *m2, *orbit_radius, *pairs, *seed, out, run)?, out.clone(), "neumann-audit")
        }
        Command::Propagator { m2, beta0, beta1, amplitude, zeta, z_min, z_max, steps, csv, out } => (
            propagator(*m2, *beta0, *beta1, *amplitude, *zeta, *z_min, *z_max, *steps, &out.join(csv), run)?,
            out.clone(),
            "propagator",
        ),
        Command::SampleAudit { group, m2, alpha, resolution, n, max_k, kind, orbit_radius, seed, out } => (
            sample_audit(group, *m2, *alpha, *resolution, *n, *max_k, *kind, *orbit_radius, *seed, out, run)?,
            out.clone(),
            "sample-audit",
        ),
        Command::Triviality { config, out } => (triviality(config, out, run)?, out.clone(), "triviality"),
    })
}

fn inputs_of(cmd: &Command) -> (serde_json::Value, Option<u64>) {
    match cmd {
        Command::Tessellate { group, radius, .. } => (json!({ "group": group, "radius": radius }), None),
        Command::Green { m2, rho_min, rho_max, steps, .. } => (json!({ "m2": m2, "rho_min": rho_min, "rho_max": rho_max, "steps": steps }), None),
        Command::NeumannAudit { group, m2, orbit_radius, pairs, seed, .. } => {
            (json!({ "group": group, "m2": m2, "orbit_radius": orbit_radius, "pairs": pairs }), Some(*seed))
        }
        Command::Propagator { m2, beta0, beta1, amplitude, zeta, z_min, z_max, steps, .. } => (
            json!({ "m2": m2, "beta0": beta0, "beta1": beta1, "amplitude": amplitude, "zeta": zeta, "z_min": z_min, "z_max": z_max, "steps": steps }),
            None,
        ),
        Command::SampleAudit { group, m2, alpha, resolution, n, max_k, kind, orbit_radius, seed, .. } => (
            json!({ "group": group, "m2": m2, "alpha": alpha, "resolution": resolution, "n": n, "max_k": max_k, "kind": kind, "orbit_radius": orbit_radius }),
            Some(*seed),
        ),
        Command::Triviality { config, .. } => (json!({ "config": config.display().to_string() }), None),
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    pool.install(|| {
        let started = Instant::now();
        let (inputs, seed) = inputs_of(&cli.command);
        let mut run = Run::new(inputs, seed);
        match dispatch(&cli.command, &mut run) {
            Ok((outcome, out, name)) => match run.manifest(&out, name, outcome, started) {
                Ok(_) => {
                    let _ = std::io::stdout().flush();
                    if outcome == Outcome::Pass {
                        0
                    } else {
                        1
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            },
            Err(CliError::Usage(msg)) => {
                eprintln!("error: {msg}");
                2
            }
            Err(CliError::Field(FieldError::Config(e))) => {
                eprintln!("error: {e}");
                2
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        }
    })
}

//! `pint` — command-line front end: filtration, generators, estimators,
//! Betti queries, transport distances, convergence studies, reproduction
//! runs. Every command is a thin wrapper over the library crate; all
//! numeric behavior (and its determinism guarantees) lives there.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use pint::{
    betti_curve_empirical, betti_empirical, betti_from_field, constructed_transport,
    discretize_field_to_measure, estimate_density, estimate_intensity, gen_circle, gen_orbit,
    ot_distance, ot_distance_measures, ot_upper_bound, persistence_surface, reproduce_figure,
    rips_persistence, run_convergence, subseed, BettiMode, BettiQuery, CircleDistribution,
    CircleSpec, ConvergenceConfig, EmptyPolicy, EssentialPolicy, Error, FiltrationSpec,
    FigureSetup, GridShape, KernelSpec, OmegaBox, OrbitSpec, Result, SurfaceSpec,
};

#[derive(Parser)]
#[command(
    name = "pint",
    version,
    about = "Persistence measures: filtration, estimation, transport, experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Vietoris-Rips persistence of a point cloud CSV.
    Vr {
        /// Input point CSV (header `x,y` or `x,y,z`).
        #[arg(long)]
        input: PathBuf,
        /// Highest homology dimension (0 or 1).
        #[arg(long = "max-dim", default_value_t = 1)]
        max_dim: usize,
        /// Side of the square box holding the diagram.
        #[arg(long = "L")]
        l: f64,
        /// Edge-length cap of the filtration (defaults to L).
        #[arg(long = "max-edge")]
        max_edge: Option<f64>,
        /// Record never-dying classes with death = L instead of dropping them.
        #[arg(long = "cap-essential")]
        cap_essential: bool,
        /// Output diagram CSV.
        #[arg(long)]
        output: PathBuf,
    },
    /// Batch of linked-twist-map orbits, one point CSV per cloud.
    GenOrbit {
        #[arg(long)]
        r: f64,
        #[arg(long = "n-points")]
        n_points: usize,
        #[arg(long = "n-clouds")]
        n_clouds: usize,
        #[arg(long)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Batch of noisy circle samples, one point CSV per cloud.
    GenCircle {
        /// Angular law: `uniform` or `power`.
        #[arg(long)]
        dist: String,
        /// Mean angle in radians (power law only).
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        mu: f64,
        /// Concentration (power law only).
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Isotropic Gaussian noise standard deviation.
        #[arg(long = "noise-sd", default_value_t = 0.05)]
        noise_sd: f64,
        #[arg(long = "n-points")]
        n_points: usize,
        #[arg(long = "n-clouds")]
        n_clouds: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kernel estimate of the sample's intensity or density field.
    Estimate {
        /// `intensity` (expected counts) or `density` (unit mass per diagram).
        #[arg(long)]
        mode: String,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value = "epanechnikov")]
        kernel: String,
        /// Grid cells per side.
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long = "L")]
        l: f64,
        /// Sample: directory of diagram CSVs or a sample JSON file.
        #[arg(long)]
        sample: PathBuf,
        /// Drop empty diagrams from density averages instead of failing.
        #[arg(long = "skip-empty")]
        skip_empty: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Betti number at a scale (or persistent window), empirical or from a field.
    Betti {
        /// `raw` (counts) or `normalized` (per-diagram fractions).
        #[arg(long, default_value = "raw")]
        mode: String,
        /// `empirical` (needs --sample/--L) or `field` (needs --field).
        #[arg(long)]
        source: String,
        #[arg(long)]
        x: f64,
        /// Second scale for a persistent window query [x, x2].
        #[arg(long)]
        x2: Option<f64>,
        #[arg(long)]
        sample: Option<PathBuf>,
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long = "skip-empty")]
        skip_empty: bool,
    },
    /// Betti curve of a sample with quantile bands.
    BettiCurve {
        #[arg(long, default_value = "raw")]
        mode: String,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        /// Band levels as `lo,hi`.
        #[arg(long, default_value = "0.05,0.95")]
        quantiles: String,
        #[arg(long)]
        sample: PathBuf,
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long = "skip-empty")]
        skip_empty: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Persistence surface: kernel-smoothed, persistence-weighted field.
    Surface {
        /// Weight exponent on the diagonal distance.
        #[arg(long)]
        q: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value = "epanechnikov")]
        kernel: String,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long)]
        sample: PathBuf,
        #[arg(long = "L")]
        l: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Order-q transport distance between two diagram CSVs (JSON to stdout).
    Ot {
        #[arg(long)]
        q: f64,
        #[arg(long = "L")]
        l: f64,
        a: PathBuf,
        b: PathBuf,
    },
    /// Transport sandwich for two gridded densities: exact cost vs the
    /// explicit per-cell plan vs the closed-form bound (JSON to stdout).
    OtBound {
        #[arg(long)]
        q: f64,
        #[arg(long = "L")]
        l: f64,
        a: PathBuf,
        b: PathBuf,
    },
    /// Convergence-rate study from a JSON config.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// End-to-end reproduction run for a built-in setup.
    Repro {
        /// orbit_r25 | orbit_r40 | circle_uniform | circle_power
        #[arg(long)]
        setup: String,
        /// Number of point clouds to generate.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn policy(skip_empty: bool) -> EmptyPolicy {
    if skip_empty {
        EmptyPolicy::Skip
    } else {
        EmptyPolicy::Strict
    }
}

fn betti_mode(s: &str) -> Result<BettiMode> {
    match s {
        "raw" => Ok(BettiMode::Raw),
        "normalized" => Ok(BettiMode::Normalized),
        other => Err(Error::Config(format!(
            "unknown mode {other:?}; expected raw or normalized"
        ))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Vr {
            input,
            max_dim,
            l,
            max_edge,
            cap_essential,
            output,
        } => {
            let cloud = pint::io::read_points_csv(&input)?;
            let essential = if cap_essential {
                EssentialPolicy::Cap
            } else {
                EssentialPolicy::Drop
            };
            let spec = FiltrationSpec::new(max_dim, max_edge.unwrap_or(l), essential)?;
            let diagram = rips_persistence(&cloud, &spec, OmegaBox::new(l)?)?;
            pint::io::write_diagram_csv(&output, &diagram)?;
        }
        Cmd::GenOrbit {
            r,
            n_points,
            n_clouds,
            seed,
            out,
        } => {
            std::fs::create_dir_all(&out)?;
            for i in 0..n_clouds {
                let cloud = gen_orbit(&OrbitSpec {
                    r,
                    n_points,
                    seed: subseed(seed, i as u64),
                })?;
                pint::io::write_points_csv(out.join(format!("cloud_{i:04}.csv")), &cloud)?;
            }
        }
        Cmd::GenCircle {
            dist,
            mu,
            kappa,
            noise_sd,
            n_points,
            n_clouds,
            seed,
            out,
        } => {
            let distribution = match dist.as_str() {
                "uniform" => CircleDistribution::Uniform,
                "power" | "power_spherical" => CircleDistribution::PowerSpherical,
                other => {
                    return Err(Error::Config(format!(
                        "unknown distribution {other:?}; expected uniform or power"
                    )))
                }
            };
            std::fs::create_dir_all(&out)?;
            for i in 0..n_clouds {
                let cloud = gen_circle(&CircleSpec {
                    distribution,
                    mu_angle: mu,
                    kappa,
                    noise_sd,
                    n_points,
                    seed: subseed(seed, i as u64),
                })?;
                pint::io::write_points_csv(out.join(format!("cloud_{i:04}.csv")), &cloud)?;
            }
        }
        Cmd::Estimate {
            mode,
            h,
            kernel,
            grid,
            l,
            sample,
            skip_empty,
            out,
        } => {
            let sample = pint::io::read_sample(&sample, Some(l))?;
            let spec = KernelSpec::new(kernel.parse()?, h)?;
            let grid = GridShape::square(l, grid)?;
            let field = match mode.as_str() {
                "intensity" => estimate_intensity(&sample, &spec, &grid),
                "density" => {
                    let est = estimate_density(&sample, &spec, &grid, policy(skip_empty))?;
                    if est.skipped > 0 {
                        eprintln!("note: skipped {} empty diagram(s)", est.skipped);
                    }
                    est.field
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown mode {other:?}; expected intensity or density"
                    )))
                }
            };
            pint::io::write_field_csv(&out, &field)?;
        }
        Cmd::Betti {
            mode,
            source,
            x,
            x2,
            sample,
            l,
            field,
            skip_empty,
        } => {
            let mode = betti_mode(&mode)?;
            let query = match x2 {
                Some(x2) => BettiQuery::window(mode, x, x2),
                None => BettiQuery::at(mode, x),
            };
            let value = match source.as_str() {
                "empirical" => {
                    let path = sample.ok_or_else(|| {
                        Error::Config("--source empirical requires --sample".into())
                    })?;
                    let sample = pint::io::read_sample(&path, l)?;
                    betti_empirical(&sample, &query, policy(skip_empty))?
                }
                "field" => {
                    let path = field
                        .ok_or_else(|| Error::Config("--source field requires --field".into()))?;
                    let field = pint::io::read_field_csv(&path)?;
                    betti_from_field(&field, &query)
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown source {other:?}; expected empirical or field"
                    )))
                }
            };
            println!("{value}");
        }
        Cmd::BettiCurve {
            mode,
            resolution,
            quantiles,
            sample,
            l,
            skip_empty,
            out,
        } => {
            let mode = betti_mode(&mode)?;
            let parts: Vec<&str> = quantiles.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Config("quantiles must look like 0.05,0.95".into()));
            }
            let lo: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad quantile {:?}", parts[0])))?;
            let hi: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad quantile {:?}", parts[1])))?;
            let sample = pint::io::read_sample(&sample, l)?;
            let curve =
                betti_curve_empirical(&sample, mode, resolution, (lo, hi), policy(skip_empty))?;
            pint::io::write_curve_csv(&out, &curve)?;
        }
        Cmd::Surface {
            q,
            h,
            kernel,
            grid,
            sample,
            l,
            out,
        } => {
            let sample = pint::io::read_sample(&sample, Some(l))?;
            let spec = SurfaceSpec {
                weight_q: q,
                kernel: KernelSpec::new(kernel.parse()?, h)?,
                grid: GridShape::square(l, grid)?,
            };
            let field = persistence_surface(&sample, &spec)?;
            pint::io::write_field_csv(&out, &field)?;
        }
        Cmd::Ot { q, l, a, b } => {
            let bbox = OmegaBox::new(l)?;
            let da = pint::io::read_diagram_csv(&a, bbox)?;
            let db = pint::io::read_diagram_csv(&b, bbox)?;
            let (ot, plan) = ot_distance(&da, &db, q)?;
            let doc = serde_json::json!({
                "ot": ot,
                "cost_q": plan.cost_q,
                "plan_moves": plan.moves.len(),
            });
            println!("{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?);
        }
        Cmd::OtBound { q, l, a, b } => {
            let fa = pint::io::read_field_csv(&a)?;
            let fb = pint::io::read_field_csv(&b)?;
            let atoms_a = discretize_field_to_measure(&fa)?;
            let atoms_b = discretize_field_to_measure(&fb)?;
            let (_, plan) = ot_distance_measures(&atoms_a, &atoms_b, q)?;
            let constructed = constructed_transport(&fa, &fb, q)?;
            let bound = ot_upper_bound(&fa, &fb, q, l)?;
            let mass: f64 = atoms_a.iter().chain(&atoms_b).map(|x| x.mass).sum();
            let grid_tol = 3.0 * fa.shape().cell * mass * l.powf(q - 1.0);
            let doc = serde_json::json!({
                "ot_q_q": plan.cost_q,
                "constructed_cost": constructed.cost_q,
                "upper_bound": bound,
                "grid_tol": grid_tol,
                "identity_rel_tol": 1e-9,
                "sandwich_holds": plan.cost_q <= constructed.cost_q + grid_tol
                    && constructed.cost_q <= bound + grid_tol,
            });
            println!("{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?);
        }
        Cmd::Converge { config, out } => {
            let file = std::fs::File::open(&config)?;
            let config: ConvergenceConfig =
                serde_json::from_reader(std::io::BufReader::new(file)).map_err(Error::from)?;
            let report = run_convergence(&config)?;
            pint::io::write_json(&out, &report)?;
            eprintln!(
                "slope {:.4}, intercept {:.4}, R^2 {:.4}",
                report.slope, report.intercept, report.r_squared
            );
        }
        Cmd::Repro {
            setup,
            n,
            seed,
            out,
        } => {
            let setup: FigureSetup = setup.parse()?;
            let manifest = reproduce_figure(setup, n, seed, &out)?;
            eprintln!(
                "{}: {} diagrams, {} fields, {} curves -> {}",
                manifest.setup,
                manifest.diagram_files.len(),
                manifest.field_files.len(),
                manifest.curve_files.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

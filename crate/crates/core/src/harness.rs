//! Experiment orchestration: Monte-Carlo convergence-rate sweeps for the
//! kernel estimators, log-log rate regression, and end-to-end figure-data
//! reproduction runs that write their artifacts to disk.
//!
//! Two sweep styles:
//! - sample-count sweeps measure stochastic error: each replicate draws a
//!   fresh synthetic sample and is compared against the *kernel-smoothed*
//!   truth (same bandwidth), so the deterministic smoothing error cancels
//!   and the fitted slope reflects pure sampling variance;
//! - bandwidth sweeps measure smoothing error: the kernel-smoothed truth is
//!   compared against the raw truth with no sampling at all, one
//!   deterministic evaluation per bandwidth.
//!
//! Every output is a deterministic function of the configuration and seed;
//! replicate errors are aggregated by sorting before summation so the
//! parallel schedule cannot influence results.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::OmegaBox;
use crate::error::{Error, Result};
use crate::field::{GridShape, ScalarField};
use crate::generators::{
    gen_circle, gen_orbit, gen_synthetic_sample, subseed, CircleDistribution, CircleSpec,
    OrbitSpec, SyntheticMeasureSpec,
};
use crate::io;
use crate::kde::{
    estimate_density, estimate_intensity, smooth_with_kernel, weighted_sup_error, EmptyPolicy,
    KernelFamily, KernelSpec,
};
use crate::repr::{betti_curve_empirical, betti_curve_field, BettiMode};
use crate::vr::{batch_rips, EssentialPolicy, FiltrationSpec, PointCloud};

/// Which estimator a convergence sweep studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceTarget {
    Intensity,
    Density,
    BettiCurve,
}

impl ConvergenceTarget {
    pub fn name(&self) -> &'static str {
        match self {
            ConvergenceTarget::Intensity => "intensity",
            ConvergenceTarget::Density => "density",
            ConvergenceTarget::BettiCurve => "betti_curve",
        }
    }
}

/// The swept parameter: sample counts (stochastic study) or bandwidths
/// (smoothing study). JSON form: `{"kind": "n", "values": [100, 400, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum SweepSpec {
    N(Vec<usize>),
    H(Vec<f64>),
}

/// Full description of a convergence study; serializable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub target: ConvergenceTarget,
    pub sweep: SweepSpec,
    /// Bandwidth held fixed during a sample-count sweep (ignored, and may be
    /// omitted, for bandwidth sweeps).
    #[serde(default)]
    pub fixed_h: Option<f64>,
    /// Independent samples per sweep point (sample-count sweeps only).
    pub replicates: usize,
    pub seed: u64,
    /// Diagonal-distance weight exponent for the intensity error metric;
    /// the density metric always uses exponent 0.
    #[serde(default = "default_weight_q")]
    pub weight_q: f64,
    pub generator: SyntheticMeasureSpec,
    pub kernel: KernelFamily,
    pub grid_cells: usize,
}

fn default_weight_q() -> f64 {
    1.0
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.sweep {
            SweepSpec::N(ns) => {
                if ns.len() < 3 {
                    return Err(Error::Config("sweep needs at least 3 points".into()));
                }
                if !ns.windows(2).all(|w| w[0] < w[1]) || ns[0] == 0 {
                    return Err(Error::Config(
                        "sample counts must be positive and strictly increasing".into(),
                    ));
                }
                match self.fixed_h {
                    Some(h) if h.is_finite() && h > 0.0 => {}
                    _ => {
                        return Err(Error::Config(
                            "sample-count sweeps need a positive fixed_h".into(),
                        ))
                    }
                }
            }
            SweepSpec::H(hs) => {
                if hs.len() < 3 {
                    return Err(Error::Config("sweep needs at least 3 points".into()));
                }
                if !hs.iter().all(|h| h.is_finite() && *h > 0.0)
                    || !hs.windows(2).all(|w| w[0] < w[1])
                {
                    return Err(Error::Config(
                        "bandwidths must be positive and strictly increasing".into(),
                    ));
                }
            }
        }
        if self.replicates < 5 {
            return Err(Error::Config("need at least 5 replicates".into()));
        }
        if !(self.weight_q.is_finite() && self.weight_q >= 0.0) {
            return Err(Error::Config(format!(
                "weight_q must be a nonnegative real, got {}",
                self.weight_q
            )));
        }
        GridShape::square(self.generator.side, self.grid_cells)?;
        Ok(())
    }
}

/// Outcome of a convergence study: per-sweep-point error statistics, the raw
/// per-replicate errors, and the fitted log-log rate line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    pub target: String,
    pub sweep_kind: String,
    pub sweep_values: Vec<f64>,
    pub mean_errors: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub raw_errors: Vec<Vec<f64>>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Curve resolution used when the sweep target is the Betti curve.
const SWEEP_CURVE_RES: usize = 64;
/// Refinement factor for fine-lattice truth fields (Betti truth curves).
const TRUTH_REFINE: usize = 4;

/// Refinement factor making the convolution sub-lattice at least ~40 steps
/// per bandwidth, so quadrature error (~(step/h)^2) stays far below the
/// smoothing error being measured.
fn refine_for(cell: f64, h: f64) -> usize {
    ((40.0 * cell / h).ceil() as usize).clamp(1, 256)
}

/// Reads a same-geometry reference field at node positions. Only valid for
/// probes that are exact node coordinates of `f`'s grid, which is how
/// [`weighted_sup_error`] evaluates its truth argument.
fn node_value(f: &ScalarField) -> impl Fn([f64; 2]) -> f64 + Sync + '_ {
    let s = *f.shape();
    move |p| {
        let ix = ((p[0] - s.origin[0]) / s.cell - 0.5).round() as usize;
        let iy = ((p[1] - s.origin[1]) / s.cell - 0.5).round() as usize;
        f.value(ix, iy)
    }
}

/// Largest node-wise gap between two curves sampled at identical scales.
fn curve_sup_gap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.1 - y.1).abs())
        .fold(0.0, f64::max)
}

fn mean_and_std(raw: &[f64]) -> (f64, f64) {
    let mut sorted = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    if sorted.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = sorted.iter().map(|e| (e - mean) * (e - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Runs the configured sweep and fits the error-vs-parameter rate line.
pub fn run_convergence(config: &ConvergenceConfig) -> Result<RateReport> {
    config.validate()?;
    let grid = GridShape::square(config.generator.side, config.grid_cells)?;
    let gen = config.generator;
    let intensity_fn = move |p: [f64; 2]| gen.intensity_at(p);
    let density_fn = move |p: [f64; 2]| gen.density_at(p);

    let (sweep_kind, sweep_values, raw_errors): (&str, Vec<f64>, Vec<Vec<f64>>) =
        match &config.sweep {
            SweepSpec::N(ns) => {
                let h = config.fixed_h.unwrap();
                let spec = KernelSpec::new(config.kernel, h)?;
                let refine = refine_for(grid.cell, h);
                // Smoothed truth shared by every replicate of the sweep.
                let smoothed = match config.target {
                    ConvergenceTarget::Intensity => {
                        smooth_with_kernel(&intensity_fn, &spec, &grid, refine)
                    }
                    ConvergenceTarget::Density | ConvergenceTarget::BettiCurve => {
                        smooth_with_kernel(&density_fn, &spec, &grid, refine)
                    }
                };
                let truth_curve = match config.target {
                    ConvergenceTarget::BettiCurve => {
                        Some(betti_curve_field(&smoothed, SWEEP_CURVE_RES)?)
                    }
                    _ => None,
                };
                let mut raws = Vec::with_capacity(ns.len());
                for (si, &n) in ns.iter().enumerate() {
                    let errs: Result<Vec<f64>> = (0..config.replicates)
                        .into_par_iter()
                        .map(|r| -> Result<f64> {
                            let mut gspec = gen;
                            gspec.seed =
                                subseed(config.seed, (si * config.replicates + r) as u64);
                            let sample = gen_synthetic_sample(&gspec, n)?;
                            match config.target {
                                ConvergenceTarget::Intensity => {
                                    let est = estimate_intensity(&sample, &spec, &grid);
                                    Ok(weighted_sup_error(
                                        &est,
                                        node_value(&smoothed),
                                        config.weight_q,
                                        h,
                                    )
                                    .value)
                                }
                                ConvergenceTarget::Density => {
                                    let est =
                                        estimate_density(&sample, &spec, &grid, EmptyPolicy::Skip)?;
                                    Ok(weighted_sup_error(
                                        &est.field,
                                        node_value(&smoothed),
                                        0.0,
                                        h,
                                    )
                                    .value)
                                }
                                ConvergenceTarget::BettiCurve => {
                                    let est =
                                        estimate_density(&sample, &spec, &grid, EmptyPolicy::Skip)?;
                                    let curve = betti_curve_field(&est.field, SWEEP_CURVE_RES)?;
                                    Ok(curve_sup_gap(&curve, truth_curve.as_ref().unwrap()))
                                }
                            }
                        })
                        .collect();
                    raws.push(errs?);
                }
                ("n", ns.iter().map(|&n| n as f64).collect(), raws)
            }
            SweepSpec::H(hs) => {
                // Pure smoothing error: deterministic, one evaluation per h.
                let mut raws = Vec::with_capacity(hs.len());
                for &h in hs {
                    let spec = KernelSpec::new(config.kernel, h)?;
                    let refine = refine_for(grid.cell, h);
                    let err = match config.target {
                        ConvergenceTarget::Intensity => {
                            let smoothed =
                                smooth_with_kernel(&intensity_fn, &spec, &grid, refine);
                            weighted_sup_error(&smoothed, intensity_fn, config.weight_q, h).value
                        }
                        ConvergenceTarget::Density => {
                            let smoothed =
                                smooth_with_kernel(&density_fn, &spec, &grid, refine);
                            weighted_sup_error(&smoothed, density_fn, 0.0, h).value
                        }
                        ConvergenceTarget::BettiCurve => {
                            let smoothed =
                                smooth_with_kernel(&density_fn, &spec, &grid, refine);
                            let fine = GridShape::square(
                                config.generator.side,
                                config.grid_cells * TRUTH_REFINE,
                            )?;
                            let truth_field = ScalarField::from_fn(fine, density_fn);
                            let est_curve = betti_curve_field(&smoothed, SWEEP_CURVE_RES)?;
                            let truth_curve = betti_curve_field(&truth_field, SWEEP_CURVE_RES)?;
                            curve_sup_gap(&est_curve, &truth_curve)
                        }
                    };
                    raws.push(vec![err]);
                }
                ("h", hs.clone(), raws)
            }
        };

    let mut mean_errors = Vec::with_capacity(raw_errors.len());
    let mut std_errors = Vec::with_capacity(raw_errors.len());
    for (index, raw) in raw_errors.iter().enumerate() {
        let (mean, std) = mean_and_std(raw);
        if mean <= 0.0 {
            return Err(Error::DegenerateSweep { index });
        }
        mean_errors.push(mean);
        std_errors.push(std);
    }
    let points: Vec<(f64, f64)> = sweep_values
        .iter()
        .copied()
        .zip(mean_errors.iter().copied())
        .collect();
    let (slope, intercept, r_squared) = fit_rate(&points)?;
    Ok(RateReport {
        target: config.target.name().to_string(),
        sweep_kind: sweep_kind.to_string(),
        sweep_values,
        mean_errors,
        std_errors,
        raw_errors,
        slope,
        intercept,
        r_squared,
    })
}

/// Ordinary least squares on `(ln x, ln y)`. Returns (slope, intercept, R^2);
/// a zero total sum of squares (perfectly constant ordinates) reports R^2 = 1.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Config("rate fit needs at least 3 points".into()));
    }
    for &(x, y) in points {
        if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
            return Err(Error::NonPositiveInput);
        }
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = points.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("rate fit abscissae are all identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((slope, intercept, r2))
}

/// The four built-in figure-data setups: two linked-twist-orbit regimes and
/// two noisy-circle sampling regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureSetup {
    OrbitR25,
    OrbitR40,
    CircleUniform,
    CirclePower,
}

impl FigureSetup {
    pub fn name(&self) -> &'static str {
        match self {
            FigureSetup::OrbitR25 => "orbit_r25",
            FigureSetup::OrbitR40 => "orbit_r40",
            FigureSetup::CircleUniform => "circle_uniform",
            FigureSetup::CirclePower => "circle_power",
        }
    }
}

impl std::str::FromStr for FigureSetup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orbit_r25" => Ok(FigureSetup::OrbitR25),
            "orbit_r40" => Ok(FigureSetup::OrbitR40),
            "circle_uniform" => Ok(FigureSetup::CircleUniform),
            "circle_power" => Ok(FigureSetup::CirclePower),
            other => Err(Error::Config(format!(
                "unknown setup {other:?}; expected orbit_r25, orbit_r40, circle_uniform, or circle_power"
            ))),
        }
    }
}

/// Inventory of one reproduction run. Timings vary between runs; every other
/// field, and every file listed, is deterministic for a fixed (setup, seed,
/// n_samples).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureManifest {
    pub setup: String,
    pub seed: u64,
    pub n_samples: usize,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub diagram_files: Vec<String>,
    pub field_files: Vec<String>,
    pub curve_files: Vec<String>,
    /// Diagrams with no 1-dimensional features, dropped from the
    /// density/normalized-curve averages.
    pub skipped_empty: usize,
    pub timings_ms: BTreeMap<String, f64>,
}

const REPRO_GRID_CELLS: usize = 128;
const REPRO_CURVE_RES: usize = 256;
const REPRO_QUANTILES: (f64, f64) = (0.05, 0.95);

/// Generates the setup's point clouds, runs the filtration, estimates the
/// intensity and density fields of the 1-dimensional features, and writes
/// everything (plus raw/normalized Betti curves and a manifest) under
/// `out_dir`. Fully deterministic per (setup, seed, n_samples) except for
/// recorded timings.
pub fn reproduce_figure(
    setup: FigureSetup,
    n_samples: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<FigureManifest> {
    if n_samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let out = out_dir.as_ref();
    std::fs::create_dir_all(out.join("diagrams"))?;

    // Per-setup geometry and estimation parameters.
    let (side, max_edge, h, n_points) = match setup {
        FigureSetup::OrbitR25 | FigureSetup::OrbitR40 => (1.5, 1.5, 0.05, 300),
        FigureSetup::CircleUniform | FigureSetup::CirclePower => (2.5, 2.0, 0.08, 1000),
    };
    let mut parameters: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    parameters.insert("L".into(), side.into());
    parameters.insert("max_edge".into(), max_edge.into());
    parameters.insert("h".into(), h.into());
    parameters.insert("kernel".into(), "epanechnikov".into());
    parameters.insert("grid_cells".into(), (REPRO_GRID_CELLS as u64).into());
    parameters.insert("curve_resolution".into(), (REPRO_CURVE_RES as u64).into());
    parameters.insert(
        "quantiles".into(),
        serde_json::json!([REPRO_QUANTILES.0, REPRO_QUANTILES.1]),
    );
    parameters.insert("n_points".into(), (n_points as u64).into());

    let t0 = Instant::now();
    let clouds: Vec<PointCloud> = match setup {
        FigureSetup::OrbitR25 | FigureSetup::OrbitR40 => {
            let r = if setup == FigureSetup::OrbitR25 {
                2.5
            } else {
                4.0
            };
            parameters.insert("r".into(), r.into());
            (0..n_samples)
                .map(|i| {
                    gen_orbit(&OrbitSpec {
                        r,
                        n_points,
                        seed: subseed(seed, i as u64),
                    })
                })
                .collect::<Result<_>>()?
        }
        FigureSetup::CircleUniform | FigureSetup::CirclePower => {
            let distribution = if setup == FigureSetup::CircleUniform {
                CircleDistribution::Uniform
            } else {
                CircleDistribution::PowerSpherical
            };
            let mu_angle = std::f64::consts::FRAC_PI_2;
            let kappa = 1.0;
            let noise_sd = 0.05;
            parameters.insert("mu_angle".into(), mu_angle.into());
            parameters.insert("kappa".into(), kappa.into());
            parameters.insert("noise_sd".into(), noise_sd.into());
            (0..n_samples)
                .map(|i| {
                    gen_circle(&CircleSpec {
                        distribution,
                        mu_angle,
                        kappa,
                        noise_sd,
                        n_points,
                        seed: subseed(seed, i as u64),
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    let generate_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let bbox = OmegaBox::new(side)?;
    let filtration = FiltrationSpec::new(1, max_edge, EssentialPolicy::Drop)?;
    let sample = batch_rips(&clouds, &filtration, bbox)?;
    let rips_ms = t1.elapsed().as_secs_f64() * 1e3;

    let t2 = Instant::now();
    let mut diagram_files = Vec::with_capacity(sample.len());
    for (i, d) in sample.diagrams().iter().enumerate() {
        let rel = format!("diagrams/diagram_{i:04}.csv");
        io::write_diagram_csv(out.join(&rel), d)?;
        diagram_files.push(rel);
    }

    let h1 = sample.restrict_dim(1);
    let grid = GridShape::square(side, REPRO_GRID_CELLS)?;
    let spec = KernelSpec::new(KernelFamily::Epanechnikov2d, h)?;
    let intensity = estimate_intensity(&h1, &spec, &grid);
    let density = estimate_density(&h1, &spec, &grid, EmptyPolicy::Skip)?;
    io::write_field_csv(out.join("intensity.csv"), &intensity)?;
    io::write_field_csv(out.join("density.csv"), &density.field)?;
    let field_files = vec!["intensity.csv".to_string(), "density.csv".to_string()];
    let estimate_ms = t2.elapsed().as_secs_f64() * 1e3;

    let t3 = Instant::now();
    let raw = betti_curve_empirical(
        &h1,
        BettiMode::Raw,
        REPRO_CURVE_RES,
        REPRO_QUANTILES,
        EmptyPolicy::Skip,
    )?;
    let normalized = betti_curve_empirical(
        &h1,
        BettiMode::Normalized,
        REPRO_CURVE_RES,
        REPRO_QUANTILES,
        EmptyPolicy::Skip,
    )?;
    io::write_curve_csv(out.join("betti_raw.csv"), &raw)?;
    io::write_curve_csv(out.join("betti_normalized.csv"), &normalized)?;
    let curve_files = vec![
        "betti_raw.csv".to_string(),
        "betti_normalized.csv".to_string(),
    ];
    let curves_ms = t3.elapsed().as_secs_f64() * 1e3;

    let mut timings_ms = BTreeMap::new();
    timings_ms.insert("generate".to_string(), generate_ms);
    timings_ms.insert("rips".to_string(), rips_ms);
    timings_ms.insert("estimate".to_string(), estimate_ms);
    timings_ms.insert("curves".to_string(), curves_ms);
    timings_ms.insert("total".to_string(), t0.elapsed().as_secs_f64() * 1e3);

    let manifest = FigureManifest {
        setup: setup.name().to_string(),
        seed,
        n_samples,
        parameters,
        diagram_files,
        field_files,
        curve_files,
        skipped_empty: density.skipped.max(normalized.skipped),
        timings_ms,
    };
    io::write_json(out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

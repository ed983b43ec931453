//! Linear representations of diagram samples: persistent Betti numbers
//! (empirical and field-based), Betti curves with quantile bands, persistence
//! surfaces, and generic linear functionals of gridded fields.
//!
//! The counting window for a query `(x1, x2)` is `birth < x1` and
//! `death > x2`, strict on both sides; a scalar query uses `x1 = x2 = x`.

use rayon::prelude::*;

use crate::diagram::{diag_distance, q_pow, DiagramSample, PersistenceDiagram};
use crate::error::{Error, Result};
use crate::field::{GridShape, ScalarField};
use crate::kde::{accumulate_kde_weighted, EmptyPolicy, KernelSpec};

/// Raw counts average the per-diagram window counts; normalized counts weight
/// each diagram by the reciprocal of its size first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BettiMode {
    Raw,
    Normalized,
}

/// A counting-window query. `x1 = x2` recovers the single-scale count.
#[derive(Debug, Clone, Copy)]
pub struct BettiQuery {
    pub mode: BettiMode,
    pub x1: f64,
    pub x2: f64,
}

impl BettiQuery {
    /// Single-scale query at `x`.
    pub fn at(mode: BettiMode, x: f64) -> Self {
        BettiQuery { mode, x1: x, x2: x }
    }

    /// Two-scale query; counts classes born before `x1` and still alive
    /// after `x2`.
    pub fn window(mode: BettiMode, x1: f64, x2: f64) -> Self {
        BettiQuery { mode, x1, x2 }
    }

    fn validate(&self, side: f64) -> Result<()> {
        let ok = self.x1.is_finite()
            && self.x2.is_finite()
            && 0.0 <= self.x1
            && self.x1 <= self.x2
            && self.x2 <= side;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBettiQuery {
                x1: self.x1,
                x2: self.x2,
            })
        }
    }
}

fn window_count(d: &PersistenceDiagram, x1: f64, x2: f64) -> usize {
    d.pairs()
        .iter()
        .filter(|p| p.birth < x1 && p.death > x2)
        .count()
}

/// Mean windowed count over the sample (see [`BettiMode`] for weighting).
///
/// Empty diagrams contribute zero in raw mode; in normalized mode they make
/// the per-diagram weight undefined and follow `policy`.
pub fn betti_empirical(
    sample: &DiagramSample,
    query: &BettiQuery,
    policy: EmptyPolicy,
) -> Result<f64> {
    query.validate(sample.side())?;
    match query.mode {
        BettiMode::Raw => {
            let total: usize = sample
                .diagrams()
                .iter()
                .map(|d| window_count(d, query.x1, query.x2))
                .sum();
            Ok(total as f64 / sample.len() as f64)
        }
        BettiMode::Normalized => {
            let mut acc = 0.0;
            let mut used = 0usize;
            for (index, d) in sample.diagrams().iter().enumerate() {
                if d.is_empty() {
                    match policy {
                        EmptyPolicy::Strict => {
                            return Err(Error::EmptyDiagramInSample { index })
                        }
                        EmptyPolicy::Skip => continue,
                    }
                }
                acc += window_count(d, query.x1, query.x2) as f64 / d.count() as f64;
                used += 1;
            }
            if used == 0 {
                return Err(Error::AllDiagramsEmpty);
            }
            Ok(acc / used as f64)
        }
    }
}

/// Windowed count read off a gridded intensity or density field: the sum of
/// field values at nodes with `node_x < x1` and `node_y > x2`, times the cell
/// area. Exactly [`linear_functional`] against the window's indicator.
pub fn betti_from_field(field: &ScalarField, query: &BettiQuery) -> f64 {
    let (x1, x2) = (query.x1, query.x2);
    linear_functional(field, |p| if p[0] < x1 && p[1] > x2 { 1.0 } else { 0.0 })
}

/// A sampled curve of Betti values over scales `0..=side`, with point-wise
/// empirical quantile bands when computed from a sample.
#[derive(Debug, Clone)]
pub struct BettiCurve {
    pub xs: Vec<f64>,
    pub mean: Vec<f64>,
    pub q_lo: Vec<f64>,
    pub q_hi: Vec<f64>,
    /// Quantile levels used for the bands.
    pub levels: (f64, f64),
    /// Number of empty diagrams dropped (normalized mode with skipping).
    pub skipped: usize,
}

/// Linear-interpolation quantile of pre-sorted values (the common "type 7"
/// convention: index `(m - 1) * p` interpolated between order statistics).
pub(crate) fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let m = sorted.len();
    let h = (m - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < m {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[m - 1]
    }
}

/// Betti curve of a sample at `resolution` evenly spaced scales, with
/// point-wise quantile bands across diagrams at the given levels.
pub fn betti_curve_empirical(
    sample: &DiagramSample,
    mode: BettiMode,
    resolution: usize,
    levels: (f64, f64),
    policy: EmptyPolicy,
) -> Result<BettiCurve> {
    if resolution < 2 {
        return Err(Error::Config("curve resolution must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&levels.0) || !(0.0..=1.0).contains(&levels.1) {
        return Err(Error::Config(format!(
            "quantile levels must lie in [0, 1], got {:?}",
            levels
        )));
    }
    let side = sample.side();
    // Resolve the empty-diagram policy once so every scale sees the same set.
    let mut kept: Vec<&PersistenceDiagram> = Vec::with_capacity(sample.len());
    let mut skipped = 0usize;
    for (index, d) in sample.diagrams().iter().enumerate() {
        if mode == BettiMode::Normalized && d.is_empty() {
            match policy {
                EmptyPolicy::Strict => return Err(Error::EmptyDiagramInSample { index }),
                EmptyPolicy::Skip => {
                    skipped += 1;
                    continue;
                }
            }
        }
        kept.push(d);
    }
    if kept.is_empty() {
        return Err(Error::AllDiagramsEmpty);
    }

    let xs: Vec<f64> = (0..resolution)
        .map(|k| k as f64 * side / (resolution - 1) as f64)
        .collect();
    let rows: Vec<(f64, f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let mut values: Vec<f64> = kept
                .iter()
                .map(|d| {
                    let c = window_count(d, x, x) as f64;
                    match mode {
                        BettiMode::Raw => c,
                        BettiMode::Normalized => c / d.count() as f64,
                    }
                })
                .collect();
            values.sort_by(f64::total_cmp);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            (
                mean,
                quantile_type7(&values, levels.0),
                quantile_type7(&values, levels.1),
            )
        })
        .collect();

    let mean = rows.iter().map(|r| r.0).collect();
    let q_lo = rows.iter().map(|r| r.1).collect();
    let q_hi = rows.iter().map(|r| r.2).collect();
    Ok(BettiCurve {
        xs,
        mean,
        q_lo,
        q_hi,
        levels,
        skipped,
    })
}

/// Betti curve read off a field at `resolution` evenly spaced scales over
/// `0..=side`, where `side` is the field's x-extent.
pub fn betti_curve_field(field: &ScalarField, resolution: usize) -> Result<Vec<(f64, f64)>> {
    if resolution < 2 {
        return Err(Error::Config("curve resolution must be at least 2".into()));
    }
    let side = field.shape().origin[0] + field.shape().extent()[0];
    Ok((0..resolution)
        .map(|k| {
            let x = k as f64 * side / (resolution - 1) as f64;
            let q = BettiQuery::at(BettiMode::Raw, x);
            (x, betti_from_field(field, &q))
        })
        .collect())
}

/// Surface parameters: persistence-weight exponent, kernel, output grid.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSpec {
    pub weight_q: f64,
    pub kernel: KernelSpec,
    pub grid: GridShape,
}

/// Kernel-smoothed, persistence-weighted rendering of the sample's mean
/// measure: each diagram point contributes its kernel bump scaled by
/// (diagonal distance)^q. Empty diagrams contribute zero.
pub fn persistence_surface(sample: &DiagramSample, spec: &SurfaceSpec) -> Result<ScalarField> {
    if !(spec.weight_q.is_finite() && spec.weight_q > 0.0) {
        return Err(Error::InvalidOrder(spec.weight_q));
    }
    let q = spec.weight_q;
    Ok(accumulate_kde_weighted(
        sample,
        &spec.kernel,
        &spec.grid,
        sample.len() as f64,
        |p| q_pow(diag_distance(p), q),
    ))
}

/// Rectangle-rule pairing of a weight function with a field:
/// `cell^2 * sum_nodes f(node) * field(node)`, summed in row-major node
/// order so identical inputs give bit-identical results.
pub fn linear_functional(field: &ScalarField, f: impl Fn([f64; 2]) -> f64) -> f64 {
    let shape = field.shape();
    let mut acc = 0.0;
    for iy in 0..shape.ny {
        for ix in 0..shape.nx {
            acc += f(shape.node(ix, iy)) * field.value(ix, iy);
        }
    }
    acc * shape.cell * shape.cell
}

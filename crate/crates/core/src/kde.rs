//! Kernel estimators for diagram samples.
//!
//! Given a sample of diagrams `D_1 .. D_n`, the intensity estimator places a
//! scaled kernel bump at every diagram point and averages over diagrams:
//!
//! `F(node) = (1/n) * sum_i sum_{r in D_i} w_i(r) * K((r - node) / h) / h^2`
//!
//! with unit weights for the intensity field and per-diagram weights
//! `1 / N(D_i)` for the probability-density field. Kernels are radially
//! symmetric with support inside the unit disk, so each bump integrates to
//! one and the density field integrates to approximately one whenever bumps
//! stay inside the grid.
//!
//! Evaluation is node-major: grid rows are processed in parallel, and within
//! a node the sum runs over diagrams in sample order and over each diagram's
//! points in a fixed sorted order, so results do not depend on thread
//! scheduling.

use rayon::prelude::*;

use crate::diagram::{q_pow, DiagramSample, SQRT_2};
use crate::error::{Error, Result};
use crate::field::{GridShape, ScalarField};

/// Supported kernel shapes on the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Epanechnikov2d,
    Quartic2d,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Epanechnikov2d => "epanechnikov",
            KernelFamily::Quartic2d => "quartic",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epanechnikov" | "epanechnikov2d" => Ok(KernelFamily::Epanechnikov2d),
            "quartic" | "quartic2d" => Ok(KernelFamily::Quartic2d),
            other => Err(Error::Config(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// Kernel value at a point of the plane (bandwidth-free form).
///
/// Both families are supported on the closed unit disk and integrate to one:
/// Epanechnikov `(2/pi) (1 - |x|^2)`, quartic `(3/pi) (1 - |x|^2)^2`.
#[inline]
pub fn kernel_eval(family: KernelFamily, x: [f64; 2]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 >= 1.0 {
        return 0.0;
    }
    match family {
        KernelFamily::Epanechnikov2d => (2.0 / std::f64::consts::PI) * (1.0 - r2),
        KernelFamily::Quartic2d => (3.0 / std::f64::consts::PI) * (1.0 - r2) * (1.0 - r2),
    }
}

#[inline]
fn kernel_eval_r2(family: KernelFamily, r2: f64) -> f64 {
    if r2 >= 1.0 {
        return 0.0;
    }
    match family {
        KernelFamily::Epanechnikov2d => (2.0 / std::f64::consts::PI) * (1.0 - r2),
        KernelFamily::Quartic2d => (3.0 / std::f64::consts::PI) * (1.0 - r2) * (1.0 - r2),
    }
}

/// A kernel family together with a bandwidth.
///
/// Construction checks the bandwidth and numerically re-validates that the
/// kernel integrates to one (midpoint rule on a 512 x 512 grid over
/// `[-1, 1]^2`, tolerance `1e-4`), guarding against bad kernel definitions.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    family: KernelFamily,
    h: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidBandwidth(h));
        }
        let mass = unit_mass(family, 512);
        if (mass - 1.0).abs() > 1e-4 {
            return Err(Error::KernelNotNormalized(mass));
        }
        Ok(KernelSpec { family, h })
    }

    #[inline]
    pub fn family(&self) -> KernelFamily {
        self.family
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }
}

/// Midpoint-rule mass of the bandwidth-free kernel over `[-1, 1]^2`.
fn unit_mass(family: KernelFamily, cells: usize) -> f64 {
    let step = 2.0 / cells as f64;
    let mut acc = 0.0;
    for iy in 0..cells {
        let y = -1.0 + (iy as f64 + 0.5) * step;
        for ix in 0..cells {
            let x = -1.0 + (ix as f64 + 0.5) * step;
            acc += kernel_eval(family, [x, y]);
        }
    }
    acc * step * step
}

/// How estimators that need non-empty diagrams treat empty ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyPolicy {
    /// Fail with the index of the first empty diagram.
    Strict,
    /// Drop empty diagrams and report how many were dropped.
    Skip,
}

/// Density-estimate output: the field plus the number of empty diagrams that
/// were dropped under [`EmptyPolicy::Skip`].
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub field: ScalarField,
    pub skipped: usize,
}

/// One diagram prepared for node-major accumulation: points with weights,
/// sorted by (x, y) so each node can binary-search its x-window.
type WeightedPoints = Vec<(f64, f64, f64)>;

fn prepare(points: impl Iterator<Item = ([f64; 2], f64)>) -> WeightedPoints {
    let mut v: WeightedPoints = points.map(|(p, w)| (p[0], p[1], w)).collect();
    v.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    v
}

/// Shared accumulation core: `F(node) = (sum_i s_i(node)) / divisor`, where
/// `s_i` sums `w * K((r - node)/h) / h^2` over diagram `i`'s points.
pub(crate) fn accumulate_kde(
    diagrams: &[WeightedPoints],
    spec: &KernelSpec,
    grid: &GridShape,
    divisor: f64,
) -> ScalarField {
    let h = spec.h();
    let h2 = h * h;
    let family = spec.family();
    let mut out = ScalarField::zeros(*grid);
    let nx = grid.nx;
    let shape = *grid;
    out.values_mut()
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(iy, row)| {
            for (ix, slot) in row.iter_mut().enumerate() {
                let node = shape.node(ix, iy);
                let mut total = 0.0;
                for pts in diagrams {
                    let lo = pts.partition_point(|p| p.0 < node[0] - h);
                    let mut s = 0.0;
                    for &(px, py, w) in &pts[lo..] {
                        if px > node[0] + h {
                            break;
                        }
                        let dx = (px - node[0]) / h;
                        let dy = (py - node[1]) / h;
                        let r2 = dx * dx + dy * dy;
                        if r2 < 1.0 {
                            s += w * kernel_eval_r2(family, r2) / h2;
                        }
                    }
                    total += s;
                }
                *slot = total / divisor;
            }
        });
    out
}

/// Accumulation over a sample with a caller-supplied per-point weight
/// (computed from the point's coordinates). Used for persistence surfaces.
pub(crate) fn accumulate_kde_weighted(
    sample: &DiagramSample,
    spec: &KernelSpec,
    grid: &GridShape,
    divisor: f64,
    weight: impl Fn([f64; 2]) -> f64,
) -> ScalarField {
    let prepared: Vec<WeightedPoints> = sample
        .diagrams()
        .iter()
        .map(|d| prepare(d.pairs().iter().map(|p| (p.point(), weight(p.point())))))
        .collect();
    accumulate_kde(&prepared, spec, grid, divisor)
}

/// Mean-intensity field of a diagram sample (unit weight per diagram point).
///
/// The result scales with the expected number of points per diagram; its
/// integral approximates the mean diagram size when kernel bumps stay inside
/// the grid.
pub fn estimate_intensity(
    sample: &DiagramSample,
    spec: &KernelSpec,
    grid: &GridShape,
) -> ScalarField {
    accumulate_kde_weighted(sample, spec, grid, sample.len() as f64, |_| 1.0)
}

/// Probability-density field: each diagram's points are weighted by
/// `1 / N(D_i)` so every diagram contributes unit mass.
///
/// Empty diagrams make the per-diagram weight undefined; they fail under
/// [`EmptyPolicy::Strict`] and are dropped (and counted) under
/// [`EmptyPolicy::Skip`].
pub fn estimate_density(
    sample: &DiagramSample,
    spec: &KernelSpec,
    grid: &GridShape,
    policy: EmptyPolicy,
) -> Result<DensityEstimate> {
    let mut prepared: Vec<WeightedPoints> = Vec::with_capacity(sample.len());
    let mut skipped = 0usize;
    for (index, d) in sample.diagrams().iter().enumerate() {
        if d.is_empty() {
            match policy {
                EmptyPolicy::Strict => return Err(Error::EmptyDiagramInSample { index }),
                EmptyPolicy::Skip => {
                    skipped += 1;
                    continue;
                }
            }
        }
        let w = 1.0 / d.count() as f64;
        prepared.push(prepare(d.pairs().iter().map(|p| (p.point(), w))));
    }
    if prepared.is_empty() {
        return Err(Error::AllDiagramsEmpty);
    }
    let n = prepared.len() as f64;
    Ok(DensityEstimate {
        field: accumulate_kde(&prepared, spec, grid, n),
        skipped,
    })
}

/// Result of [`weighted_sup_error`]: the maximum and how many grid nodes
/// qualified for the comparison.
#[derive(Debug, Clone, Copy)]
pub struct SupError {
    pub value: f64,
    pub qualifying: usize,
}

/// Diagonal-weighted sup-norm error of a field against a reference function.
///
/// Only nodes strictly above the diagonal with diagonal distance `>= 2h`
/// qualify; each contributes `(dist - h)^q * |field - truth|`. With `q = 0`
/// and `h = 0` this is the plain sup-norm over the upper triangle. Returns
/// zero (and a zero count) when no node qualifies.
pub fn weighted_sup_error(
    estimate: &ScalarField,
    truth: impl Fn([f64; 2]) -> f64,
    q: f64,
    h: f64,
) -> SupError {
    let shape = *estimate.shape();
    let mut value = 0.0f64;
    let mut qualifying = 0usize;
    for iy in 0..shape.ny {
        for ix in 0..shape.nx {
            let node = shape.node(ix, iy);
            let s = (node[1] - node[0]) / SQRT_2;
            if s <= 0.0 || s < 2.0 * h {
                continue;
            }
            qualifying += 1;
            let w = if q == 0.0 { 1.0 } else { q_pow(s - h, q) };
            let e = w * (estimate.value(ix, iy) - truth(node)).abs();
            if e > value {
                value = e;
            }
        }
    }
    SupError { value, qualifying }
}

/// Numerically smooth a function with the kernel: evaluates
/// `integral f(x) K((x - node)/h) / h^2 dx` at every grid node using a
/// midpoint rule on a lattice `refine` times finer than the grid.
///
/// This is the reference field the rate harness compares kernel estimates
/// against, and the reference for smoothing-error sweeps.
pub fn smooth_with_kernel(
    truth: &(dyn Fn([f64; 2]) -> f64 + Sync),
    spec: &KernelSpec,
    grid: &GridShape,
    refine: usize,
) -> ScalarField {
    let refine = refine.max(1);
    let fc = grid.cell / refine as f64;
    let h = spec.h();
    let h2 = h * h;
    let family = spec.family();
    let m = (h / fc).ceil() as i64;
    let shape = *grid;
    let mut out = ScalarField::zeros(shape);
    let nx = shape.nx;
    out.values_mut()
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(iy, row)| {
            for (ix, slot) in row.iter_mut().enumerate() {
                let node = shape.node(ix, iy);
                let mut acc = 0.0;
                for j in -m..=m {
                    let dy = j as f64 * fc;
                    for i in -m..=m {
                        let dx = i as f64 * fc;
                        let r2 = (dx * dx + dy * dy) / h2;
                        if r2 >= 1.0 {
                            continue;
                        }
                        let k = kernel_eval_r2(family, r2) / h2;
                        acc += k * truth([node[0] + dx, node[1] + dy]);
                    }
                }
                *slot = acc * fc * fc;
            }
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{OmegaBox, PersistenceDiagram, PersistencePair};

    fn sample(pairss: &[&[(f64, f64)]], side: f64) -> DiagramSample {
        let bbox = OmegaBox::new(side).unwrap();
        DiagramSample::new(
            pairss
                .iter()
                .map(|pairs| {
                    PersistenceDiagram::new(
                        pairs
                            .iter()
                            .map(|&(b, d)| PersistencePair::new(b, d, 1))
                            .collect(),
                        bbox,
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    fn spec(h: f64) -> KernelSpec {
        KernelSpec::new(KernelFamily::Epanechnikov2d, h).unwrap()
    }

    #[test]
    fn kernel_values_at_known_points() {
        let e = kernel_eval(KernelFamily::Epanechnikov2d, [0.0, 0.0]);
        assert!((e - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((e - 0.636_619_772_367_581_3).abs() < 1e-12);
        assert_eq!(kernel_eval(KernelFamily::Epanechnikov2d, [0.6, 0.8]), 0.0);
        assert_eq!(kernel_eval(KernelFamily::Epanechnikov2d, [1.5, 0.0]), 0.0);
        let q = kernel_eval(KernelFamily::Quartic2d, [0.0, 0.0]);
        assert!((q - 3.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn both_families_pass_normalization_check() {
        assert!(KernelSpec::new(KernelFamily::Epanechnikov2d, 0.1).is_ok());
        assert!(KernelSpec::new(KernelFamily::Quartic2d, 0.1).is_ok());
        assert!(matches!(
            KernelSpec::new(KernelFamily::Epanechnikov2d, 0.0),
            Err(Error::InvalidBandwidth(_))
        ));
        assert!(KernelSpec::new(KernelFamily::Epanechnikov2d, f64::NAN).is_err());
    }

    /// Grid whose node (ix, iy) lands exactly on a chosen point.
    fn grid_hitting(p: [f64; 2], cells: usize, side: f64) -> (GridShape, usize, usize) {
        let g = GridShape::square(side, cells).unwrap();
        let ix = ((p[0] / g.cell) - 0.5).round() as usize;
        let iy = ((p[1] / g.cell) - 0.5).round() as usize;
        (g, ix, iy)
    }

    #[test]
    fn intensity_peak_at_single_point() {
        // One diagram, one point; evaluated at the point itself the field is
        // K(0)/h^2 = (2/pi)/0.01.
        let p = [0.3125, 0.5625];
        let s = sample(&[&[(p[0], p[1])]], 1.0);
        let (g, ix, iy) = grid_hitting(p, 8, 1.0);
        assert_eq!(g.node(ix, iy), p);
        let f = estimate_intensity(&s, &spec(0.1), &g);
        let expect = 63.661_977_236_758_13;
        assert!((f.value(ix, iy) - expect).abs() / expect < 1e-9);
    }

    #[test]
    fn intensity_vanishes_outside_support() {
        let s = sample(&[&[(0.2, 0.4)]], 1.0);
        let g = GridShape::square(1.0, 8).unwrap();
        let f = estimate_intensity(&s, &spec(0.05), &g);
        // Node (0.9375, 0.9375 + ...) is far from (0.2, 0.4).
        assert_eq!(f.value(7, 7), 0.0);
    }

    #[test]
    fn intensity_averages_over_diagrams() {
        let p = [0.3125, 0.5625];
        let one = sample(&[&[(p[0], p[1])]], 1.0);
        let two = sample(&[&[(p[0], p[1])], &[(p[0], p[1])]], 1.0);
        let (g, ix, iy) = grid_hitting(p, 8, 1.0);
        let f1 = estimate_intensity(&one, &spec(0.1), &g);
        let f2 = estimate_intensity(&two, &spec(0.1), &g);
        assert!((f1.value(ix, iy) - f2.value(ix, iy)).abs() < 1e-12);
    }

    #[test]
    fn halving_bandwidth_quadruples_peak() {
        let p = [0.3125, 0.5625];
        let s = sample(&[&[(p[0], p[1])]], 1.0);
        let (g, ix, iy) = grid_hitting(p, 8, 1.0);
        let f1 = estimate_intensity(&s, &spec(0.1), &g);
        let f2 = estimate_intensity(&s, &spec(0.05), &g);
        let ratio = f2.value(ix, iy) / f1.value(ix, iy);
        assert!((ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn density_weights_diagrams_equally() {
        // Diagram A has one point at p, diagram B has two points elsewhere;
        // at p the density field sees only A's point with weight 1/1, halved
        // by the sample average.
        let p = [0.28125, 0.65625];
        let s = sample(&[&[(p[0], p[1])], &[(0.125, 0.875), (0.0625, 0.9375)]], 1.0);
        let (g, ix, iy) = grid_hitting(p, 16, 1.0);
        let d = estimate_density(&s, &spec(0.05), &g, EmptyPolicy::Strict).unwrap();
        let expect = 0.5 * kernel_eval(KernelFamily::Epanechnikov2d, [0.0, 0.0]) / (0.05 * 0.05);
        assert!((d.field.value(ix, iy) - expect).abs() / expect < 1e-9);
        assert_eq!(d.skipped, 0);
    }

    #[test]
    fn density_empty_diagram_policies() {
        let bbox = OmegaBox::new(1.0).unwrap();
        let full = PersistenceDiagram::new(vec![PersistencePair::new(0.2, 0.6, 1)], bbox).unwrap();
        let empty = PersistenceDiagram::empty(bbox);
        let s = DiagramSample::new(vec![full, empty]).unwrap();
        let g = GridShape::square(1.0, 8).unwrap();
        let err = estimate_density(&s, &spec(0.05), &g, EmptyPolicy::Strict);
        assert!(matches!(err, Err(Error::EmptyDiagramInSample { index: 1 })));
        let ok = estimate_density(&s, &spec(0.05), &g, EmptyPolicy::Skip).unwrap();
        assert_eq!(ok.skipped, 1);

        let all_empty = DiagramSample::new(vec![PersistenceDiagram::empty(bbox)]).unwrap();
        assert!(matches!(
            estimate_density(&all_empty, &spec(0.05), &g, EmptyPolicy::Skip),
            Err(Error::AllDiagramsEmpty)
        ));
    }

    #[test]
    fn weighted_sup_error_domain_and_weights() {
        let g = GridShape::square(1.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |_| 2.0);
        // Against truth = 2 the error is zero no matter the weighting.
        let e = weighted_sup_error(&f, |_| 2.0, 1.0, 0.1);
        assert_eq!(e.value, 0.0);
        assert!(e.qualifying > 0);
        // Plain sup over the upper triangle: |2 - 0| = 2.
        let e0 = weighted_sup_error(&f, |_| 0.0, 0.0, 0.0);
        assert_eq!(e0.value, 2.0);
        // Exactly the strictly-upper-triangle nodes qualify at h = 0.
        assert_eq!(e0.qualifying, 16 * 15 / 2);
        // Very large h leaves no qualifying nodes.
        let none = weighted_sup_error(&f, |_| 0.0, 0.0, 10.0);
        assert_eq!(none.qualifying, 0);
        assert_eq!(none.value, 0.0);
    }

    #[test]
    fn smoothing_reproduces_constants_away_from_support_edges() {
        // Smoothing the constant function 1 must return 1 up to quadrature
        // error at every node (kernel mass is 1). The refinement must make
        // the sub-lattice much finer than the bandwidth for this to hold.
        let g = GridShape::square(1.0, 8).unwrap();
        let sm = smooth_with_kernel(&|_| 1.0, &spec(0.07), &g, 128);
        for iy in 0..8 {
            for ix in 0..8 {
                assert!(
                    (sm.value(ix, iy) - 1.0).abs() < 1e-3,
                    "node ({ix},{iy}) -> {}",
                    sm.value(ix, iy)
                );
            }
        }
    }
}

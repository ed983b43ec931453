//! Deterministic synthetic-data generators.
//!
//! Everything here is a pure function of its spec (including the seed): the
//! stream is ChaCha12 (a named, cross-platform generator), uniforms come from
//! the top 53 bits of each 64-bit word, Gaussians from the Box-Muller
//! transform, and Poisson counts from Knuth's product method. Independent
//! sub-streams (one per generated object) are derived by mixing the base seed
//! with the object index through a 64-bit finalizer, so parallel generation
//! is reproducible and order-independent.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::diagram::{DiagramSample, OmegaBox, PersistenceDiagram, PersistencePair};
use crate::error::{Error, Result};
use crate::field::{GridShape, ScalarField};
use crate::vr::PointCloud;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Derives a per-object seed from a base seed and an object index
/// (SplitMix64 finalizer over a golden-ratio stride). This is the scheme
/// every batch generator uses for element `index`, so callers can re-derive
/// any element's stream independently.
pub fn subseed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded random stream with the primitive draws the generators need.
pub(crate) struct Sampler {
    rng: ChaCha12Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Pair of independent standard Gaussians (Box-Muller).
    pub fn gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform(); // (0, 1]: keeps the log finite
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let th = TWO_PI * u2;
        (r * th.cos(), r * th.sin())
    }

    /// Poisson count by Knuth's product method (fine for desk-scale means).
    pub fn poisson(&mut self, lambda: f64) -> usize {
        let limit = (-lambda).exp();
        let mut k = 0usize;
        let mut p = 1.0f64;
        loop {
            p *= self.uniform();
            if p <= limit {
                return k;
            }
            k += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Orbits of the linked twist map
// ---------------------------------------------------------------------------

/// Parameters for a twist-map orbit: twist strength, orbit length, seed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OrbitSpec {
    pub r: f64,
    pub n_points: usize,
    pub seed: u64,
}

impl OrbitSpec {
    fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::Config(format!(
                "orbit parameter r must be positive, got {}",
                self.r
            )));
        }
        if self.n_points == 0 {
            return Err(Error::Config("orbit length must be at least 1".into()));
        }
        Ok(())
    }
}

/// The orbit starting at `(x0, y0)`: the initial point plus `n - 1` iterates
/// of `x' = x + r y (1 - y) mod 1`, `y' = y + r x' (1 - x') mod 1`.
pub fn orbit_from(x0: f64, y0: f64, r: f64, n: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::with_capacity(n);
    let (mut x, mut y) = (x0, y0);
    pts.push([x, y]);
    for _ in 1..n {
        x = (x + r * y * (1.0 - y)).rem_euclid(1.0);
        y = (y + r * x * (1.0 - x)).rem_euclid(1.0);
        pts.push([x, y]);
    }
    pts
}

/// Orbit cloud from a uniformly random initial point in `[0,1)^2`.
/// No transient iterations are discarded: the initial point is point 0.
pub fn gen_orbit(spec: &OrbitSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut s = Sampler::new(spec.seed);
    let x0 = s.uniform();
    let y0 = s.uniform();
    PointCloud::from_points(&orbit_from(x0, y0, spec.r, spec.n_points))
}

// ---------------------------------------------------------------------------
// Noisy circle samples
// ---------------------------------------------------------------------------

/// Angular law for circle samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleDistribution {
    Uniform,
    /// Density proportional to `(1 + cos(theta - mu))^kappa` on the circle.
    PowerSpherical,
}

/// Parameters for noisy unit-circle clouds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CircleSpec {
    pub distribution: CircleDistribution,
    pub mu_angle: f64,
    pub kappa: f64,
    pub noise_sd: f64,
    pub n_points: usize,
    pub seed: u64,
}

impl CircleSpec {
    fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::Config("need at least 1 circle point".into()));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::Config(format!(
                "kappa must be nonnegative, got {}",
                self.kappa
            )));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sd must be nonnegative, got {}",
                self.noise_sd
            )));
        }
        if !self.mu_angle.is_finite() {
            return Err(Error::Config("mu_angle must be finite".into()));
        }
        Ok(())
    }
}

/// Tabulated inverse CDF of the angular density on `[0, 2*pi)`:
/// 4096 trapezoid segments, linear interpolation inside a segment.
struct AngleTable {
    cdf: Vec<f64>,
    step: f64,
}

impl AngleTable {
    const KNOTS: usize = 4096;

    fn new(mu: f64, kappa: f64) -> Self {
        let step = TWO_PI / Self::KNOTS as f64;
        let weight = |theta: f64| (1.0 + (theta - mu).cos()).powf(kappa);
        let mut cdf = Vec::with_capacity(Self::KNOTS + 1);
        cdf.push(0.0);
        let mut prev = weight(0.0);
        let mut acc = 0.0;
        for i in 1..=Self::KNOTS {
            let w = weight(i as f64 * step);
            acc += 0.5 * (prev + w) * step;
            cdf.push(acc);
            prev = w;
        }
        let total = *cdf.last().unwrap();
        for c in cdf.iter_mut() {
            *c /= total;
        }
        AngleTable { cdf, step }
    }

    fn invert(&self, u: f64) -> f64 {
        // Last knot with cdf <= u; u < 1 so a following knot always exists.
        let idx = self.cdf.partition_point(|&c| c <= u).saturating_sub(1);
        let idx = idx.min(Self::KNOTS - 1);
        let lo = self.cdf[idx];
        let hi = self.cdf[idx + 1];
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        (idx as f64 + frac) * self.step
    }
}

/// Noisy circle cloud: angle from the configured law, mapped to the unit
/// circle, plus isotropic Gaussian displacement of scale `noise_sd`.
pub fn gen_circle(spec: &CircleSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut s = Sampler::new(spec.seed);
    let table = match spec.distribution {
        CircleDistribution::Uniform => None,
        CircleDistribution::PowerSpherical => Some(AngleTable::new(spec.mu_angle, spec.kappa)),
    };
    let mut pts = Vec::with_capacity(spec.n_points);
    for _ in 0..spec.n_points {
        let u = s.uniform();
        let theta = match &table {
            None => TWO_PI * u,
            Some(t) => t.invert(u),
        };
        let (g1, g2) = s.gaussian_pair();
        pts.push([
            theta.cos() + spec.noise_sd * g1,
            theta.sin() + spec.noise_sd * g2,
        ]);
    }
    PointCloud::from_points(&pts)
}

// ---------------------------------------------------------------------------
// Synthetic diagram-valued measures with closed-form ground truth
// ---------------------------------------------------------------------------

/// Built-in unit-mass densities on the upper-triangle domain of side `L`,
/// with closed-form values and exact inverse-CDF samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticDensity {
    /// Two disjoint truncated-Gaussian bumps whose supports keep distance
    /// at least `0.15 L` from the diagonal and the box edges. Default for
    /// sampling studies.
    TwoBumps,
    /// One wide, twice continuously differentiable bump `(1 - r^2/R^2)^3`
    /// with `R = 0.28 L`, nearly filling the triangle. Its support margin is
    /// thin (~`0.013 L`), which is irrelevant for pure smoothing studies;
    /// prefer it for bandwidth sweeps, where a wide feature keeps curvature
    /// (and so the smoothing error) from being dominated by bump scale. Its
    /// core sits at diagonal distance `0.293 L`; pick `L` large enough that
    /// the widest swept bandwidth satisfies `2 h < 0.293 L`.
    BroadBump,
}

/// One truncated-Gaussian component: center (as fractions of the side),
/// width sigma, truncation radius, and mixture weight.
struct Bump {
    cx: f64,
    cy: f64,
    sigma: f64,
    radius: f64,
    weight: f64,
}

const TWO_BUMPS: [Bump; 2] = [
    Bump {
        cx: 0.25,
        cy: 0.75,
        sigma: 0.025,
        radius: 0.10,
        weight: 0.65,
    },
    Bump {
        cx: 0.45,
        cy: 0.80,
        sigma: 0.0125,
        radius: 0.05,
        weight: 0.35,
    },
];

const BROAD_CX: f64 = 0.293;
const BROAD_CY: f64 = 0.707;
const BROAD_R: f64 = 0.28;

impl SyntheticDensity {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticDensity::TwoBumps => "two_bumps",
            SyntheticDensity::BroadBump => "broad_bump",
        }
    }

    /// Density value at a point of the `[0, side]^2` box; zero off-support.
    pub fn pdf(&self, side: f64, p: [f64; 2]) -> f64 {
        match self {
            SyntheticDensity::TwoBumps => {
                let mut v = 0.0;
                for b in &TWO_BUMPS {
                    let dx = p[0] - b.cx * side;
                    let dy = p[1] - b.cy * side;
                    let r2 = dx * dx + dy * dy;
                    let rad = b.radius * side;
                    if r2 <= rad * rad {
                        let s2 = b.sigma * side * b.sigma * side;
                        let trunc_mass = 1.0 - (-(rad * rad) / (2.0 * s2)).exp();
                        v += b.weight * (-r2 / (2.0 * s2)).exp() / (TWO_PI * s2 * trunc_mass);
                    }
                }
                v
            }
            SyntheticDensity::BroadBump => {
                let rad = BROAD_R * side;
                let dx = p[0] - BROAD_CX * side;
                let dy = p[1] - BROAD_CY * side;
                let x = (dx * dx + dy * dy) / (rad * rad);
                if x >= 1.0 {
                    0.0
                } else {
                    let a = 4.0 / (std::f64::consts::PI * rad * rad);
                    let t = 1.0 - x;
                    a * t * t * t
                }
            }
        }
    }

    /// Largest density value (used by tests and tolerance reasoning).
    pub fn max_pdf(&self, side: f64) -> f64 {
        match self {
            SyntheticDensity::TwoBumps => TWO_BUMPS
                .iter()
                .map(|b| {
                    let s2 = b.sigma * side * b.sigma * side;
                    let rad = b.radius * side;
                    let trunc_mass = 1.0 - (-(rad * rad) / (2.0 * s2)).exp();
                    b.weight / (TWO_PI * s2 * trunc_mass)
                })
                .fold(0.0, f64::max),
            SyntheticDensity::BroadBump => {
                let rad = BROAD_R * side;
                4.0 / (std::f64::consts::PI * rad * rad)
            }
        }
    }

    /// Smallest distance from the support to the diagonal and box edges,
    /// as an absolute length.
    pub fn support_margin(&self, side: f64) -> f64 {
        match self {
            SyntheticDensity::TwoBumps => 0.15 * side,
            SyntheticDensity::BroadBump => {
                let diag = (BROAD_CY - BROAD_CX) / crate::diagram::SQRT_2 - BROAD_R;
                let edges = BROAD_CX - BROAD_R;
                let top = 1.0 - BROAD_CY - BROAD_R;
                diag.min(edges).min(top) * side
            }
        }
    }

    /// One exact draw via inverse-CDF sampling in polar coordinates.
    fn sample(&self, side: f64, s: &mut Sampler) -> [f64; 2] {
        match self {
            SyntheticDensity::TwoBumps => {
                let pick = s.uniform();
                let b = if pick < TWO_BUMPS[0].weight {
                    &TWO_BUMPS[0]
                } else {
                    &TWO_BUMPS[1]
                };
                let sig = b.sigma * side;
                let rad = b.radius * side;
                let trunc_mass = 1.0 - (-(rad * rad) / (2.0 * sig * sig)).exp();
                let u = s.uniform();
                let r = sig * (-2.0 * (1.0 - u * trunc_mass).ln()).sqrt();
                let th = TWO_PI * s.uniform();
                [
                    b.cx * side + r * th.cos(),
                    b.cy * side + r * th.sin(),
                ]
            }
            SyntheticDensity::BroadBump => {
                let rad = BROAD_R * side;
                let u = s.uniform();
                let r = rad * (1.0 - (1.0 - u).powf(0.25)).sqrt();
                let th = TWO_PI * s.uniform();
                [
                    BROAD_CX * side + r * th.cos(),
                    BROAD_CY * side + r * th.sin(),
                ]
            }
        }
    }
}

impl std::str::FromStr for SyntheticDensity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_bumps" => Ok(SyntheticDensity::TwoBumps),
            "broad_bump" => Ok(SyntheticDensity::BroadBump),
            other => Err(Error::Config(format!("unknown density '{other}'"))),
        }
    }
}

/// Spec for a synthetic diagram-valued sampler: each generated "diagram" has
/// a Poisson(lambda) number of i.i.d. points from the chosen density, so the
/// true point intensity is `lambda * pdf` and the true per-diagram density is
/// `pdf` itself — both evaluable in closed form.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticMeasureSpec {
    pub lambda: f64,
    pub density: SyntheticDensity,
    pub side: f64,
    pub seed: u64,
}

impl SyntheticMeasureSpec {
    fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0 && self.lambda <= 1e4) {
            return Err(Error::Config(format!(
                "lambda must be in (0, 1e4], got {}",
                self.lambda
            )));
        }
        if !(self.side.is_finite() && self.side > 0.0) {
            return Err(Error::InvalidBox(self.side));
        }
        Ok(())
    }

    /// Closed-form expected-count intensity `lambda * pdf`.
    pub fn intensity_at(&self, p: [f64; 2]) -> f64 {
        self.lambda * self.density.pdf(self.side, p)
    }

    /// Closed-form per-diagram probability density.
    pub fn density_at(&self, p: [f64; 2]) -> f64 {
        self.density.pdf(self.side, p)
    }
}

/// Sample of `n` independent synthetic diagrams. Diagram `i` uses the
/// sub-stream `subseed(seed, i)`, so any prefix of the sample is stable as
/// `n` grows, and generation parallelizes deterministically.
pub fn gen_synthetic_sample(spec: &SyntheticMeasureSpec, n: usize) -> Result<DiagramSample> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let bbox = OmegaBox::new(spec.side)?;
    let diagrams: Vec<Result<PersistenceDiagram>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = Sampler::new(subseed(spec.seed, i as u64));
            let count = s.poisson(spec.lambda);
            let mut pairs = Vec::with_capacity(count);
            for _ in 0..count {
                let p = spec.density.sample(spec.side, &mut s);
                pairs.push(PersistencePair::new(p[0], p[1], 1));
            }
            PersistenceDiagram::new(pairs, bbox)
        })
        .collect();
    DiagramSample::new(diagrams.into_iter().collect::<Result<Vec<_>>>()?)
}

// ---------------------------------------------------------------------------
// Diverging pair of uniform densities on adjacent diamonds
// ---------------------------------------------------------------------------

/// Signed area of a polygon (shoelace formula).
fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc.abs() * 0.5
}

/// Clips a convex polygon against the half-plane `nx*x + ny*y <= c`
/// (Sutherland-Hodgman step).
fn clip_halfplane(poly: &[[f64; 2]], nx: f64, ny: f64, c: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let fa = nx * a[0] + ny * a[1] - c;
        let fb = nx * b[0] + ny * b[1] - c;
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Fraction of the cell `[x0, x0+cell] x [y0, y0+cell]` covered by the
/// L1 ball of radius `r` centered at `(cx, cy)`.
fn diamond_coverage(x0: f64, y0: f64, cell: f64, cx: f64, cy: f64, r: f64) -> f64 {
    // Quick reject: the diamond lies within L-infinity radius r of center.
    if x0 > cx + r || x0 + cell < cx - r || y0 > cy + r || y0 + cell < cy - r {
        return 0.0;
    }
    let corners = [
        [x0, y0],
        [x0 + cell, y0],
        [x0 + cell, y0 + cell],
        [x0, y0 + cell],
    ];
    // Fully covered cells report exactly 1 so interior values are exact.
    if corners
        .iter()
        .all(|p| (p[0] - cx).abs() + (p[1] - cy).abs() <= r)
    {
        return 1.0;
    }
    let mut poly = corners.to_vec();
    // |x - cx| + |y - cy| <= r as four half-planes.
    for (nx, ny) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let c = r + nx * cx + ny * cy;
        poly = clip_halfplane(&poly, nx, ny, c);
        if poly.len() < 3 {
            return 0.0;
        }
    }
    (polygon_area(&poly) / (cell * cell)).min(1.0)
}

/// A pair of uniform densities on two touching diamonds (L1 balls) of radius
/// `sqrt(2) * side / 2^(n+1)`, rasterized onto a `cells x cells` grid over
/// the box by exact cell-coverage areas. The density value on each diamond is
/// `4^n / side^2`; the diamonds shrink and the value diverges as `n` grows,
/// while the transport cost between the two densities shrinks like `2^-n`.
///
/// For `n >= 2` both diamonds lie inside the domain and each field integrates
/// to 1 up to float summation error. At `n = 1` the stated centers place one
/// diamond partly above the box and the other centered on its left edge, so
/// the clipped integrals are about 0.985 and 0.5; values on the grid are
/// unaffected.
pub fn gen_counterexample_pair(
    n: usize,
    side: f64,
    cells: usize,
) -> Result<(ScalarField, ScalarField)> {
    if n == 0 {
        return Err(Error::Config("diverging-pair index n must be >= 1".into()));
    }
    if !(side.is_finite() && side > 0.0) {
        return Err(Error::InvalidBox(side));
    }
    let shape = GridShape::square(side, cells)?;
    let r = crate::diagram::SQRT_2 * side / 2f64.powi(n as i32 + 1);
    let cells_per_radius = r / shape.cell;
    if cells_per_radius < 8.0 {
        return Err(Error::ResolutionTooCoarse { cells_per_radius });
    }
    let base = crate::diagram::SQRT_2 * side / 4.0;
    let centers = [
        [base, base + r], // higher diamond
        [base - r, base], // lower diamond
    ];
    let value = 4f64.powi(n as i32) / (side * side);

    let mut fields = Vec::with_capacity(2);
    for c in centers {
        let mut f = ScalarField::zeros(shape);
        // Restrict the sweep to cells near the diamond's bounding box.
        let lo_ix = (((c[0] - r) / shape.cell).floor().max(0.0)) as usize;
        let hi_ix = (((c[0] + r) / shape.cell).ceil().min(cells as f64)) as usize;
        let lo_iy = (((c[1] - r) / shape.cell).floor().max(0.0)) as usize;
        let hi_iy = (((c[1] + r) / shape.cell).ceil().min(cells as f64)) as usize;
        for iy in lo_iy..hi_iy {
            for ix in lo_ix..hi_ix {
                let x0 = ix as f64 * shape.cell;
                let y0 = iy as f64 * shape.cell;
                let cov = diamond_coverage(x0, y0, shape.cell, c[0], c[1], r);
                if cov > 0.0 {
                    f.set(ix, iy, value * cov);
                }
            }
        }
        fields.push(f);
    }
    let hi = fields.remove(0);
    let lo = fields.remove(0);
    Ok((hi, lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_first_iterate_matches_hand_computation() {
        let pts = orbit_from(0.2, 0.3, 2.5, 2);
        assert_eq!(pts[0], [0.2, 0.3]);
        assert!((pts[1][0] - 0.725).abs() < 1e-12);
        assert!((pts[1][1] - 0.7984375).abs() < 1e-12);
    }

    #[test]
    fn orbit_length_one_is_initial_point() {
        let spec = OrbitSpec {
            r: 3.3,
            n_points: 1,
            seed: 9,
        };
        let cloud = gen_orbit(&spec).unwrap();
        assert_eq!(cloud.len(), 1);
    }

    #[test]
    fn orbit_is_deterministic_and_in_unit_square() {
        let spec = OrbitSpec {
            r: 4.0,
            n_points: 500,
            seed: 123,
        };
        let a = gen_orbit(&spec).unwrap();
        let b = gen_orbit(&spec).unwrap();
        assert_eq!(a, b);
        for i in 0..a.len() {
            let p = a.row(i);
            assert!((0.0..1.0).contains(&p[0]) && (0.0..1.0).contains(&p[1]));
        }
        assert!(gen_orbit(&OrbitSpec {
            r: -1.0,
            n_points: 5,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn noiseless_circle_points_have_unit_norm() {
        let spec = CircleSpec {
            distribution: CircleDistribution::Uniform,
            mu_angle: 0.0,
            kappa: 0.0,
            noise_sd: 0.0,
            n_points: 200,
            seed: 5,
        };
        let cloud = gen_circle(&spec).unwrap();
        for i in 0..cloud.len() {
            let p = cloud.row(i);
            let norm = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn power_spherical_concentrates_near_mu() {
        let mu = std::f64::consts::FRAC_PI_2;
        let spec = CircleSpec {
            distribution: CircleDistribution::PowerSpherical,
            mu_angle: mu,
            kappa: 1.0,
            noise_sd: 0.0,
            n_points: 100_000,
            seed: 11,
        };
        let cloud = gen_circle(&spec).unwrap();
        let (mut sx, mut sy) = (0.0, 0.0);
        for i in 0..cloud.len() {
            let p = cloud.row(i);
            sx += p[0];
            sy += p[1];
        }
        // Circular mean angle close to mu; the resultant points along mu.
        let mean_angle = sy.atan2(sx);
        assert!(
            (mean_angle - mu).abs() < 0.02,
            "mean angle {mean_angle} vs {mu}"
        );
        // Concentration: resultant length strictly positive.
        assert!((sx * sx + sy * sy).sqrt() / cloud.len() as f64 > 0.3);
    }

    #[test]
    fn poisson_mean_is_close() {
        let mut s = Sampler::new(77);
        let n = 4000;
        let lambda = 5.0;
        let total: usize = (0..n).map(|_| s.poisson(lambda)).sum();
        let mean = total as f64 / n as f64;
        // 4 standard errors of the mean.
        assert!((mean - lambda).abs() < 4.0 * (lambda / n as f64).sqrt());
    }

    #[test]
    fn two_bumps_density_integrates_to_one() {
        for side in [1.0, 2.0] {
            for density in [SyntheticDensity::TwoBumps, SyntheticDensity::BroadBump] {
                let cells = 600usize;
                let step = side / cells as f64;
                let mut acc = 0.0;
                for iy in 0..cells {
                    for ix in 0..cells {
                        let p = [(ix as f64 + 0.5) * step, (iy as f64 + 0.5) * step];
                        acc += density.pdf(side, p);
                    }
                }
                let mass = acc * step * step;
                assert!(
                    (mass - 1.0).abs() < 2e-3,
                    "{} side {side}: mass {mass}",
                    density.name()
                );
            }
        }
    }

    #[test]
    fn synthetic_sample_respects_domain_and_seed() {
        let spec = SyntheticMeasureSpec {
            lambda: 6.0,
            density: SyntheticDensity::TwoBumps,
            side: 1.0,
            seed: 2024,
        };
        let a = gen_synthetic_sample(&spec, 50).unwrap();
        let b = gen_synthetic_sample(&spec, 50).unwrap();
        assert_eq!(a.len(), 50);
        let margin = spec.density.support_margin(spec.side);
        for (da, db) in a.diagrams().iter().zip(b.diagrams()) {
            assert_eq!(da.pairs(), db.pairs());
            for p in da.pairs() {
                let diag = crate::diagram::diag_distance(p.point());
                assert!(diag >= margin - 1e-12);
                assert!(p.birth >= 0.0 && p.death <= spec.side);
            }
        }
        // Prefix stability: the first 50 diagrams of a larger sample match.
        let c = gen_synthetic_sample(&spec, 80).unwrap();
        for i in 0..50 {
            assert_eq!(a.diagrams()[i].pairs(), c.diagrams()[i].pairs());
        }
        // Average count near lambda.
        let total: usize = a.diagrams().iter().map(|d| d.count()).sum();
        let mean = total as f64 / 50.0;
        assert!((mean - 6.0).abs() < 4.0 * (6.0f64 / 50.0).sqrt());
    }

    #[test]
    fn sampled_points_agree_with_pdf_support() {
        let spec = SyntheticMeasureSpec {
            lambda: 20.0,
            density: SyntheticDensity::BroadBump,
            side: 1.5,
            seed: 7,
        };
        let s = gen_synthetic_sample(&spec, 20).unwrap();
        let max_pdf = spec.density.max_pdf(spec.side);
        for d in s.diagrams() {
            for p in d.pairs() {
                let v = spec.density.pdf(spec.side, p.point());
                assert!(v > 0.0, "sampled point off-support");
                assert!(v <= max_pdf * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn diverging_pair_values_and_mass() {
        // Max value 4^1 = 4 at n = 1 even though that pair is edge-clipped.
        let (a, b) = gen_counterexample_pair(1, 1.0, 64).unwrap();
        assert_eq!(a.max_value(), 4.0);
        assert_eq!(b.max_value(), 4.0);
        assert!((a.integral() - 0.985).abs() < 0.01, "{}", a.integral());
        assert!((b.integral() - 0.5).abs() < 0.01, "{}", b.integral());

        for n in 2..=4usize {
            let cells = 1usize << (n + 4);
            let (a, b) = gen_counterexample_pair(n, 1.0, cells).unwrap();
            let v = 4f64.powi(n as i32);
            assert_eq!(a.max_value(), v);
            assert_eq!(b.max_value(), v);
            // Exact coverage: integrals are exact up to float summation.
            assert!((a.integral() - 1.0).abs() < 1e-9, "{}", a.integral());
            assert!((b.integral() - 1.0).abs() < 1e-9, "{}", b.integral());
            // Fields differ by the full height somewhere.
            assert_eq!(a.max_abs_diff(&b).unwrap(), v);
        }
    }

    #[test]
    fn diverging_pair_resolution_guard() {
        assert!(matches!(
            gen_counterexample_pair(3, 1.0, 32),
            Err(Error::ResolutionTooCoarse { .. })
        ));
        assert!(gen_counterexample_pair(0, 1.0, 64).is_err());
    }
}

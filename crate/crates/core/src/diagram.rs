//! Geometry of the birth-death domain and measure views of persistence
//! diagrams.
//!
//! A diagram lives in the triangle `{(b, d) : 0 <= b < d <= side}` sitting
//! above the diagonal `d = b`. This module provides the bounding box, the
//! diagram and sample containers, distance-to-diagonal primitives, and the
//! diagonal-weighted volume of the domain used by transport upper bounds.

use crate::error::{Error, Result};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// `x^q` through a single shared code path.
///
/// Every weighted sum in the crate (total persistence, transport costs,
/// surface weights) raises diagonal distances to the power `q` via this
/// helper so that identities between those sums hold bit-for-bit.
#[inline]
pub(crate) fn q_pow(x: f64, q: f64) -> f64 {
    x.powf(q)
}

/// Square domain `[0, side]^2`; diagrams live in its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaBox {
    side: f64,
}

impl OmegaBox {
    pub fn new(side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidBox(side));
        }
        Ok(OmegaBox { side })
    }

    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }

    /// Whether `(birth, death)` lies in the closed upper triangle
    /// `0 <= birth < death <= side` (births equal to deaths are excluded;
    /// such pairs carry no mass and are discarded at diagram construction).
    #[inline]
    pub fn contains(&self, birth: f64, death: f64) -> bool {
        birth >= 0.0 && birth < death && death <= self.side
    }
}

/// A single birth-death pair together with its homology dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
    pub dim: u32,
}

impl PersistencePair {
    pub fn new(birth: f64, death: f64, dim: u32) -> Self {
        PersistencePair { birth, death, dim }
    }

    #[inline]
    pub fn point(&self) -> [f64; 2] {
        [self.birth, self.death]
    }
}

/// Euclidean distance from a plane point to the diagonal line `d = b`.
///
/// This is `|death - birth| / sqrt(2)`; for points above the diagonal it
/// equals the distance to the nearest diagonal point, and it is zero on the
/// diagonal itself.
#[inline]
pub fn diag_distance(p: [f64; 2]) -> f64 {
    (p[1] - p[0]).abs() / SQRT_2
}

/// Orthogonal projection of a plane point onto the diagonal line `d = b`.
///
/// The projection is the midpoint `((b + d)/2, (b + d)/2)`; it is the
/// nearest diagonal point and is a fixed point for inputs already on the
/// diagonal.
#[inline]
pub fn diag_projection(p: [f64; 2]) -> [f64; 2] {
    let m = 0.5 * (p[0] + p[1]);
    [m, m]
}

/// A persistence diagram: a finite counting measure on the upper triangle.
///
/// Pairs with `birth == death` carry no mass and are dropped on
/// construction; remaining pairs are validated against the box.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
    bbox: OmegaBox,
}

impl PersistenceDiagram {
    pub fn new(pairs: Vec<PersistencePair>, bbox: OmegaBox) -> Result<Self> {
        let mut kept = Vec::with_capacity(pairs.len());
        for p in pairs {
            if !(p.birth.is_finite() && p.death.is_finite()) {
                return Err(Error::NonFinitePair {
                    birth: p.birth,
                    death: p.death,
                });
            }
            if p.birth == p.death {
                continue; // zero-persistence pair: no mass
            }
            if !bbox.contains(p.birth, p.death) {
                return Err(Error::PairOutsideBox {
                    birth: p.birth,
                    death: p.death,
                    side: bbox.side(),
                });
            }
            kept.push(p);
        }
        Ok(PersistenceDiagram { pairs: kept, bbox })
    }

    pub fn empty(bbox: OmegaBox) -> Self {
        PersistenceDiagram {
            pairs: Vec::new(),
            bbox,
        }
    }

    #[inline]
    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    #[inline]
    pub fn bbox(&self) -> OmegaBox {
        self.bbox
    }

    /// Total number of points `N(D)` of the counting measure.
    #[inline]
    pub fn count(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Keep only pairs of the given homology dimension.
    pub fn restrict_dim(&self, dim: u32) -> Self {
        PersistenceDiagram {
            pairs: self.pairs.iter().copied().filter(|p| p.dim == dim).collect(),
            bbox: self.bbox,
        }
    }
}

/// Sum of q-th powers of diagonal distances over all diagram points.
///
/// `q` is assumed nonnegative and finite; `q = 0` counts points.
pub fn total_persistence(diagram: &PersistenceDiagram, q: f64) -> f64 {
    let mut acc = 0.0;
    for p in diagram.pairs() {
        acc += q_pow(diag_distance(p.point()), q);
    }
    acc
}

/// Number of diagram points at diagonal distance `>= ell`.
pub fn mass_above(diagram: &PersistenceDiagram, ell: f64) -> usize {
    diagram
        .pairs()
        .iter()
        .filter(|p| diag_distance(p.point()) >= ell)
        .count()
}

/// Integral of `dist(x, diagonal)^q` over the upper triangle of side `side`.
///
/// Closed form: `2 / ((q + 1)(q + 2)) * (side / sqrt(2))^(q + 2)`.
/// `q` must be nonnegative and finite, `side` positive.
pub fn omega_weighted_volume(q: f64, side: f64) -> f64 {
    debug_assert!(q.is_finite() && q >= 0.0);
    debug_assert!(side.is_finite() && side > 0.0);
    2.0 / ((q + 1.0) * (q + 2.0)) * (side / SQRT_2).powf(q + 2.0)
}

/// A non-empty collection of diagrams sharing one bounding box.
#[derive(Debug, Clone)]
pub struct DiagramSample {
    diagrams: Vec<PersistenceDiagram>,
}

impl DiagramSample {
    pub fn new(diagrams: Vec<PersistenceDiagram>) -> Result<Self> {
        let first = diagrams.first().ok_or(Error::EmptySample)?;
        let side = first.bbox().side();
        if diagrams.iter().any(|d| d.bbox().side() != side) {
            return Err(Error::MixedBoxes);
        }
        Ok(DiagramSample { diagrams })
    }

    #[inline]
    pub fn diagrams(&self) -> &[PersistenceDiagram] {
        &self.diagrams
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.diagrams.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.diagrams.is_empty()
    }

    #[inline]
    pub fn side(&self) -> f64 {
        self.diagrams[0].bbox().side()
    }

    #[inline]
    pub fn bbox(&self) -> OmegaBox {
        self.diagrams[0].bbox()
    }

    pub fn restrict_dim(&self, dim: u32) -> Self {
        DiagramSample {
            diagrams: self.diagrams.iter().map(|d| d.restrict_dim(dim)).collect(),
        }
    }

    /// Total number of points across all diagrams.
    pub fn total_points(&self) -> usize {
        self.diagrams.iter().map(|d| d.count()).sum()
    }
}

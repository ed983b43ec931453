//! Regular-grid scalar fields.
//!
//! A field stores one value per grid cell; the value is associated with the
//! cell's center node, and integrals use the node-center rectangle rule
//! `cell^2 * sum(values)`. Storage is row-major: index `iy * nx + ix`, where
//! `ix` runs along the first (birth) axis and `iy` along the second (death)
//! axis.

use crate::error::{Error, Result};

/// Geometry of a regular grid: origin corner, square cell size, and cell
/// counts along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    pub origin: [f64; 2],
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridShape {
    pub fn new(origin: [f64; 2], cell: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(cell.is_finite() && cell > 0.0) || nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid);
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(Error::InvalidGrid);
        }
        Ok(GridShape {
            origin,
            cell,
            nx,
            ny,
        })
    }

    /// Square grid covering `[0, side]^2` with `cells` cells per axis.
    pub fn square(side: f64, cells: usize) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) || cells == 0 {
            return Err(Error::InvalidGrid);
        }
        GridShape::new([0.0, 0.0], side / cells as f64, cells, cells)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Center node of cell `(ix, iy)`.
    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + (ix as f64 + 0.5) * self.cell,
            self.origin[1] + (iy as f64 + 0.5) * self.cell,
        ]
    }

    /// Extent of the covered rectangle along each axis.
    pub fn extent(&self) -> [f64; 2] {
        [
            self.origin[0] + self.cell * self.nx as f64,
            self.origin[1] + self.cell * self.ny as f64,
        ]
    }
}

/// Scalar values on a [`GridShape`], one per cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    shape: GridShape,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(shape: GridShape) -> Self {
        ScalarField {
            values: vec![0.0; shape.len()],
            shape,
        }
    }

    pub fn from_values(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::GridMismatch);
        }
        Ok(ScalarField { shape, values })
    }

    /// Evaluate `f` at every cell-center node.
    pub fn from_fn(shape: GridShape, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = Vec::with_capacity(shape.len());
        for iy in 0..shape.ny {
            for ix in 0..shape.nx {
                values.push(f(shape.node(ix, iy)));
            }
        }
        ScalarField { shape, values }
    }

    #[inline]
    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.shape.nx + ix]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[iy * self.shape.nx + ix] = v;
    }

    /// Node-center rectangle rule: `cell^2 * sum(values)`.
    pub fn integral(&self) -> f64 {
        let s: f64 = self.values.iter().sum();
        self.shape.cell * self.shape.cell * s
    }

    /// Whether two fields share identical grid geometry.
    pub fn same_geometry(&self, other: &ScalarField) -> bool {
        self.shape == other.shape
    }

    /// Maximum absolute pointwise difference between two fields on the same
    /// grid.
    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        if !self.same_geometry(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_grid_nodes_are_cell_centers() {
        let g = GridShape::square(1.0, 4).unwrap();
        assert_eq!(g.cell, 0.25);
        assert_eq!(g.node(0, 0), [0.125, 0.125]);
        assert_eq!(g.node(3, 1), [0.875, 0.375]);
        assert_eq!(g.extent(), [1.0, 1.0]);
    }

    #[test]
    fn integral_uses_rectangle_rule() {
        let g = GridShape::square(1.0, 8).unwrap();
        let f = ScalarField::from_fn(g, |_| 3.0);
        assert!((f.integral() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn max_abs_diff_requires_matching_grids() {
        let a = ScalarField::zeros(GridShape::square(1.0, 4).unwrap());
        let b = ScalarField::zeros(GridShape::square(1.0, 5).unwrap());
        assert!(matches!(a.max_abs_diff(&b), Err(Error::GridMismatch)));
        let c = ScalarField::zeros(GridShape::square(1.0, 4).unwrap());
        assert_eq!(a.max_abs_diff(&c).unwrap(), 0.0);
    }

    #[test]
    fn row_major_layout() {
        let g = GridShape::square(1.0, 2).unwrap();
        let f = ScalarField::from_values(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.value(0, 0), 1.0);
        assert_eq!(f.value(1, 0), 2.0);
        assert_eq!(f.value(0, 1), 3.0);
        assert_eq!(f.value(1, 1), 4.0);
    }
}

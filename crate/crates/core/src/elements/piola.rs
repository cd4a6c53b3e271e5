use super::ElementError;
use crate::math::{Tensor2, Vec2};

/// Affine map `x = x0 + G x̂` of the reference triangle onto a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub x0: Vec2,
    pub g: Tensor2,
    pub det: f64,
    g_inv: Tensor2,
}

impl CellGeometry {
    pub fn new(cell: usize, vertices: [Vec2; 3]) -> Result<Self, ElementError> {
        let [a, b, c] = vertices;
        let g = Tensor2::new(b[0] - a[0], c[0] - a[0], b[1] - a[1], c[1] - a[1]);
        let det = g.det();
        if !(det > 0.0) {
            return Err(ElementError::InvertedCell { cell, det });
        }
        let g_inv = g.inverse().ok_or(ElementError::InvertedCell { cell, det })?;
        Ok(CellGeometry { x0: a, g, det, g_inv })
    }

    pub fn map(&self, xr: Vec2) -> Vec2 {
        let d = self.g.apply(xr);
        [self.x0[0] + d[0], self.x0[1] + d[1]]
    }

    pub fn inverse_map(&self, x: Vec2) -> Vec2 {
        self.g_inv.apply([x[0] - self.x0[0], x[1] - self.x0[1]])
    }

    /// Contravariant Piola transform of a reference vector value.
    pub fn piola(&self, v: Vec2) -> Vec2 {
        let w = self.g.apply(v);
        [w[0] / self.det, w[1] / self.det]
    }

    pub fn piola_div(&self, d: f64) -> f64 {
        d / self.det
    }

    /// Inverse Piola transform: `det G · G⁻¹ v`.
    pub fn pullback(&self, v: Vec2) -> Vec2 {
        let w = self.g_inv.apply(v);
        [w[0] * self.det, w[1] * self.det]
    }

    /// Physical gradient of a scalar from its reference gradient.
    pub fn grad(&self, gr: Vec2) -> Vec2 {
        self.g_inv.transpose().apply(gr)
    }
}

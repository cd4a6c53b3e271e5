//! Incompressible neo-Hookean constitutive functions of the displacement
//! gradient `K` (with `F = K + I`).

use crate::math::{self, Tensor2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Constraint {
    /// `C(J) = J − 1`
    #[default]
    C1,
    /// `C(J) = ln J`
    C2,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MaterialError {
    #[error("deformation gradient has nonpositive determinant {0}")]
    NonpositiveJacobian(f64),
    #[error("deformation gradient is singular")]
    SingularDeformation,
    #[error("invalid material parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub mu: f64,
    pub constraint: Constraint,
    pub rho0: f64,
    /// Uniform body force per unit mass.
    pub body_force: Vec2,
}

impl Material {
    pub fn new(mu: f64, constraint: Constraint) -> Result<Self, MaterialError> {
        if !(mu > 0.0) {
            return Err(MaterialError::InvalidParameter("mu must be positive"));
        }
        Ok(Material {
            mu,
            constraint,
            rho0: 1.0,
            body_force: [0.0; 2],
        })
    }

    pub fn elastic_stress(&self, k: &Tensor2) -> Tensor2 {
        elastic_stress(k, self.mu)
    }

    pub fn total_stress(&self, k: &Tensor2, p: f64) -> Result<Tensor2, MaterialError> {
        Ok(self.elastic_stress(k) - constraint_tensor(k, self.constraint)?.scale(p))
    }
}

/// `P̃(K) = μ (K + I)`.
pub fn elastic_stress(k: &Tensor2, mu: f64) -> Tensor2 {
    (*k + Tensor2::IDENTITY).scale(mu)
}

pub fn constraint_value(k: &Tensor2, variant: Constraint) -> Result<f64, MaterialError> {
    let j = (*k + Tensor2::IDENTITY).det();
    match variant {
        Constraint::C1 => Ok(j - 1.0),
        Constraint::C2 if j > 0.0 => Ok(math::ln(j)),
        Constraint::C2 => Err(MaterialError::NonpositiveJacobian(j)),
    }
}

/// Cofactor matrix `det A · A⁻ᵀ`, which in 2D is linear in `A`.
fn cofactor(a: &Tensor2) -> Tensor2 {
    Tensor2::new(a[(1, 1)], -a[(1, 0)], -a[(0, 1)], a[(0, 0)])
}

/// `Q = ∂C/∂K`: `det F · F⁻ᵀ` for C1, `F⁻ᵀ` for C2.
pub fn constraint_tensor(k: &Tensor2, variant: Constraint) -> Result<Tensor2, MaterialError> {
    let f = *k + Tensor2::IDENTITY;
    let j = f.det();
    if j == 0.0 || !j.is_finite() {
        return Err(MaterialError::SingularDeformation);
    }
    Ok(match variant {
        Constraint::C1 => cofactor(&f),
        Constraint::C2 => cofactor(&f).scale(1.0 / j),
    })
}

/// Directional derivative `dQ(K)[δK]`.
pub fn constraint_tensor_derivative(k: &Tensor2, dk: &Tensor2, variant: Constraint) -> Result<Tensor2, MaterialError> {
    let f = *k + Tensor2::IDENTITY;
    let fit = f.inverse_transpose().ok_or(MaterialError::SingularDeformation)?;
    Ok(match variant {
        // det F [(F⁻ᵀ:δK) F⁻ᵀ − F⁻ᵀ δKᵀ F⁻ᵀ] collapses to cof(δK) in 2D
        Constraint::C1 => cofactor(dk),
        Constraint::C2 => -fit.matmul(&dk.transpose()).matmul(&fit),
    })
}

/// `P = P̃(K) − p Q(K)`.
pub fn total_stress(k: &Tensor2, p: f64, material: &Material) -> Result<Tensor2, MaterialError> {
    material.total_stress(k, p)
}

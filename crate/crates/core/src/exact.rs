//! Closed-form reference solutions and the strong-form residual oracle.

use alloc::boxed::Box;
use alloc::sync::Arc;

use crate::assembly::{BoundaryData, Forcing};
use crate::materials::{self, Constraint, Material};
use crate::math::{self, Tensor2, Vec2};

/// Smooth fields a discrete solution is compared against.
pub trait ExactSolution {
    fn displacement(&self, x: Vec2) -> Vec2;
    /// Displacement gradient `K = ∇u`.
    fn gradient(&self, x: Vec2) -> Tensor2;
    fn stress(&self, x: Vec2) -> Tensor2;
    /// Row-wise divergence of the stress.
    fn stress_divergence(&self, x: Vec2) -> Vec2;
    fn pressure(&self, x: Vec2) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("point at radius {radius} lies outside the annulus")]
pub struct OutsideAnnulus {
    pub radius: f64,
}

/// Radial inflation of the incompressible annulus `R_in ≤ |X| ≤ R_out`
/// driven by `u = (λ − 1) X` on the outer circle, traction free inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactInflation2D {
    pub lambda: f64,
    pub mu: f64,
    pub r_in: f64,
    pub r_out: f64,
}

/// Relative slack below `R_in` and above `R_out`; straight-edged meshes of
/// the annulus place quadrature points slightly outside the true circles.
const RADIAL_SLACK: f64 = 0.1;

impl ExactInflation2D {
    pub fn new(lambda: f64, mu: f64) -> Self {
        ExactInflation2D {
            lambda,
            mu,
            r_in: 0.5,
            r_out: 1.0,
        }
    }

    /// Deformed radius `r(R)`.
    pub fn radius(&self, big_r: f64) -> f64 {
        math::sqrt(big_r * big_r + (self.lambda * self.lambda - 1.0) * self.r_out * self.r_out)
    }

    pub fn check(&self, x: Vec2) -> Result<f64, OutsideAnnulus> {
        let radius = math::norm(x);
        if radius < self.r_in * (1.0 - RADIAL_SLACK) || radius > self.r_out * (1.0 + RADIAL_SLACK) {
            return Err(OutsideAnnulus { radius });
        }
        Ok(radius)
    }

    /// Deformation gradient `F = (r/R) I + (R² − r²)/(r R³) X ⊗ X`.
    pub fn deformation_gradient(&self, x: Vec2) -> Tensor2 {
        let big_r = math::norm(x);
        let r = self.radius(big_r);
        let c = (big_r * big_r - r * r) / (r * big_r * big_r * big_r);
        Tensor2::IDENTITY.scale(r / big_r) + Tensor2::outer(x, x).scale(c)
    }

    /// Pressure under the convention `P = P̃ − p Q`.
    pub fn pressure_at(&self, x: Vec2) -> f64 {
        let big_r = math::norm(x);
        let r = self.radius(big_r);
        let ri = self.radius(self.r_in);
        let mu = self.mu;
        mu * big_r * big_r / (r * r)
            - 0.5 * mu * (self.lambda * self.lambda - 1.0) * self.r_out * self.r_out * (1.0 / (ri * ri) - 1.0 / (r * r))
            - mu * math::ln(ri * big_r / (r * self.r_in))
    }

    /// Stress assembled in polar form, independent of the material module.
    pub fn polar_stress(&self, x: Vec2) -> Tensor2 {
        let big_r = math::norm(x);
        let r = self.radius(big_r);
        let p = self.pressure_at(x);
        let er = [x[0] / big_r, x[1] / big_r];
        let et = [-er[1], er[0]];
        let prr = self.mu * big_r / r - p * r / big_r;
        let ptt = self.mu * r / big_r - p * big_r / r;
        Tensor2::outer(er, er).scale(prr) + Tensor2::outer(et, et).scale(ptt)
    }
}

impl ExactSolution for ExactInflation2D {
    fn displacement(&self, x: Vec2) -> Vec2 {
        let big_r = math::norm(x);
        let s = self.radius(big_r) / big_r - 1.0;
        [s * x[0], s * x[1]]
    }

    fn gradient(&self, x: Vec2) -> Tensor2 {
        self.deformation_gradient(x) - Tensor2::IDENTITY
    }

    fn stress(&self, x: Vec2) -> Tensor2 {
        let m = Material::new(self.mu, Constraint::C1).expect("positive mu");
        materials::total_stress(&self.gradient(x), self.pressure_at(x), &m).expect("J = 1")
    }

    fn stress_divergence(&self, _x: Vec2) -> Vec2 {
        [0.0; 2]
    }

    fn pressure(&self, x: Vec2) -> f64 {
        self.pressure_at(x)
    }
}

/// Largest strong-form violation of `exact` at `points`: the momentum
/// balance `∇·P` (central differences with step `h`), the constitutive
/// law against `reference_stress`, and `det F − 1`.
pub fn verify_fields(
    exact: &dyn ExactSolution,
    reference_stress: &dyn Fn(Vec2) -> Tensor2,
    points: &[Vec2],
    h: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in points {
        let mut div = [0.0; 2];
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let d = (exact.stress(xp) - exact.stress(xm)).scale(0.5 / h);
            div[0] += d[(0, j)];
            div[1] += d[(1, j)];
        }
        let constitutive = (exact.stress(x) - reference_stress(x)).max_abs();
        let volume = ((exact.gradient(x) + Tensor2::IDENTITY).det() - 1.0).abs();
        worst = worst.max(div[0].abs()).max(div[1].abs()).max(constitutive).max(volume);
    }
    worst
}

/// Strong-form oracle for the inflation solution.
pub fn verify_exact(lambda: f64, mu: f64, points: &[Vec2], h: f64) -> f64 {
    let ex = ExactInflation2D::new(lambda, mu);
    verify_fields(&ex, &|x| ex.polar_stress(x), points, h)
}

type ScalarFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
type TensorFn = Arc<dyn Fn(Vec2) -> Tensor2 + Send + Sync>;

/// Manufactured solution `(u, k, σ, p)` of the problem linearised at the
/// reference state on the unit square. `σ = (1 − x) S` so that the
/// traction vanishes on the edge `x = 1`; the other edges carry `ū = u`.
#[derive(Clone)]
pub struct LinearManufactured {
    pub mu: f64,
    u: VectorFn,
    grad_u: TensorFn,
    k: TensorFn,
    sigma: TensorFn,
    div_sigma: VectorFn,
    p: ScalarFn,
}

impl LinearManufactured {
    /// Smooth, non-polynomial fields with `k = ∇u`.
    pub fn smooth(mu: f64) -> Self {
        use core::f64::consts::PI;
        let grad = |x: Vec2| {
            let (sx, cx) = (math::sin(PI * x[0]), math::cos(PI * x[0]));
            let (sy, cy) = (math::sin(PI * x[1]), math::cos(PI * x[1]));
            Tensor2::new(PI * cx * sy, PI * sx * cy, -PI * sx * x[1] * x[1], 2.0 * x[1] * cx)
        };
        LinearManufactured {
            mu,
            u: Arc::new(|x| {
                [
                    math::sin(PI * x[0]) * math::sin(PI * x[1]),
                    math::cos(PI * x[0]) * x[1] * x[1],
                ]
            }),
            grad_u: Arc::new(grad),
            k: Arc::new(grad),
            sigma: Arc::new(|x| {
                Tensor2::new(math::exp(x[1]), math::sin(x[0]), x[0] * x[1], math::cos(x[1])).scale(1.0 - x[0])
            }),
            div_sigma: Arc::new(|x| {
                [
                    -math::exp(x[1]),
                    (1.0 - 2.0 * x[0]) * x[1] - (1.0 - x[0]) * math::sin(x[1]),
                ]
            }),
            p: Arc::new(|x| math::exp(x[0]) * math::sin(x[1]) + 0.5),
        }
    }

    /// Polynomial fields that lie in the discrete spaces of the pair of
    /// order `order` (1 or 2), with `k ≠ ∇u`.
    pub fn in_space(mu: f64, order: usize) -> Option<Self> {
        Some(match order {
            1 => LinearManufactured {
                mu,
                u: Arc::new(|_| [0.3, -0.2]),
                grad_u: Arc::new(|_| Tensor2::ZERO),
                k: Arc::new(|x| Tensor2::new(1.0 + x[0], x[1], 2.0 * x[0] - x[1], 0.5)),
                sigma: Arc::new(|x| Tensor2::new(1.0, -0.5, 0.25, 2.0).scale(1.0 - x[0])),
                div_sigma: Arc::new(|_| [-1.0, -0.25]),
                p: Arc::new(|x| 0.5 + x[0] - x[1]),
            },
            2 => LinearManufactured {
                mu,
                u: Arc::new(|x| [0.3 + x[0] + 0.2 * x[1], -0.2 - 0.5 * x[0] + x[1]]),
                grad_u: Arc::new(|_| Tensor2::new(1.0, 0.2, -0.5, 1.0)),
                k: Arc::new(|x| Tensor2::new(x[0] * x[0], x[0] * x[1], 1.0 - x[1] * x[1], x[0] + x[1])),
                sigma: Arc::new(|x| Tensor2::new(1.0 + x[0], x[1], x[0] - x[1], 2.0).scale(1.0 - x[0])),
                div_sigma: Arc::new(|x| [1.0 - 3.0 * x[0], 1.0 - 2.0 * x[0] + x[1]]),
                p: Arc::new(|x| x[0] * x[0] - x[0] * x[1] + 0.3),
            },
            _ => return None,
        })
    }

    /// Sources `G = σ − μ k + (p − μ) I`, `H = k − ∇u`, `ρ0 b = −∇·σ` and
    /// `g = tr k` (for unit reference density).
    pub fn forcing(&self) -> Forcing {
        let mu = self.mu;
        let (k, s, p, gu, ds) = (
            self.k.clone(),
            self.sigma.clone(),
            self.p.clone(),
            self.grad_u.clone(),
            self.div_sigma.clone(),
        );
        let (k2, k3) = (k.clone(), k.clone());
        Forcing {
            body: Some(Box::new(move |x| {
                let d = ds(x);
                [-d[0], -d[1]]
            })),
            stress: Some(Box::new(move |x| {
                s(x) - k(x).scale(mu) + Tensor2::IDENTITY.scale(p(x) - mu)
            })),
            gradient: Some(Box::new(move |x| k2(x) - gu(x))),
            constraint: Some(Box::new(move |x| k3(x).trace())),
        }
    }

    pub fn boundary(&self) -> BoundaryData {
        let u = self.u.clone();
        BoundaryData {
            displacement: Box::new(move |x| u(x)),
            traction: Box::new(|_, _| [0.0; 2]),
        }
    }
}

impl ExactSolution for LinearManufactured {
    fn displacement(&self, x: Vec2) -> Vec2 {
        (self.u)(x)
    }

    fn gradient(&self, x: Vec2) -> Tensor2 {
        (self.k)(x)
    }

    fn stress(&self, x: Vec2) -> Tensor2 {
        (self.sigma)(x)
    }

    fn stress_divergence(&self, x: Vec2) -> Vec2 {
        (self.div_sigma)(x)
    }

    fn pressure(&self, x: Vec2) -> f64 {
        (self.p)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn annulus_points(n: usize, seed: u64) -> Vec<Vec2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let r: f64 = rng.gen_range(0.5..1.0);
                let t: f64 = rng.gen_range(0.0..core::f64::consts::TAU);
                [r * math::cos(t), r * math::sin(t)]
            })
            .collect()
    }

    struct Flipped(ExactInflation2D);

    impl ExactSolution for Flipped {
        fn displacement(&self, x: Vec2) -> Vec2 {
            self.0.displacement(x)
        }
        fn gradient(&self, x: Vec2) -> Tensor2 {
            self.0.gradient(x)
        }
        fn stress(&self, x: Vec2) -> Tensor2 {
            let m = Material::new(self.0.mu, Constraint::C1).unwrap();
            materials::total_stress(&self.gradient(x), -self.0.pressure_at(x), &m).unwrap()
        }
        fn stress_divergence(&self, _x: Vec2) -> Vec2 {
            [0.0; 2]
        }
        fn pressure(&self, x: Vec2) -> f64 {
            -self.0.pressure_at(x)
        }
    }

    #[test]
    fn examples() {
        let ex = ExactInflation2D::new(3.0, 1.0);
        let x = [0.5, 0.0];
        let u = ex.displacement(x);
        assert!((u[0] - (math::sqrt(8.25) - 0.5)).abs() < 1e-14 && u[1] == 0.0);
        let xo = [0.6, 0.8];
        let uo = ex.displacement(xo);
        assert!((uo[0] - 2.0 * 0.6).abs() < 1e-14 && (uo[1] - 2.0 * 0.8).abs() < 1e-14);
        let rest = ExactInflation2D::new(1.0, 2.0);
        assert_eq!(rest.displacement([0.3, 0.6]), [0.0, 0.0]);
        assert!((rest.pressure_at([0.3, 0.6]) - 2.0).abs() < 1e-14);
        assert!(rest.stress([0.3, 0.6]).max_abs() < 1e-14);
        assert!(ex.check([0.1, 0.0]).is_err());
        assert!(ex.check([0.49, 0.0]).is_ok());
    }

    #[test]
    fn inner_circle_is_traction_free() {
        let ex = ExactInflation2D::new(3.0, 1.5);
        for t in [0.0, 0.4, 1.1] {
            let n = [math::cos(t), math::sin(t)];
            let tr = ex.stress([0.5 * n[0], 0.5 * n[1]]).apply(n);
            assert!(tr[0].abs() < 1e-13 && tr[1].abs() < 1e-13);
        }
    }

    #[test]
    fn oracle_and_negative_control() {
        let pts = annulus_points(100, 42);
        assert!(verify_exact(1.0, 1.0, &pts, 1e-6) < 1e-8);
        assert!(verify_exact(3.0, 1.0, &pts, 1e-6) <= 1e-6);
        let ex = ExactInflation2D::new(3.0, 1.0);
        let flipped = Flipped(ex);
        let bad = verify_fields(&flipped, &|x| flipped.stress(x), &pts, 1e-6);
        assert!(bad > 0.1, "{bad}");
    }

    #[test]
    fn manufactured_fields_are_consistent() {
        let mut cases = alloc::vec![LinearManufactured::smooth(1.0)];
        cases.extend([1, 2].map(|k| LinearManufactured::in_space(1.0, k).unwrap()));
        assert!(LinearManufactured::in_space(1.0, 3).is_none());
        let h = 1e-6;
        for m in &cases {
            for x in [[0.2, 0.3], [0.7, 0.9], [0.5, 0.1]] {
                let mut div = [0.0; 2];
                let mut grad = Tensor2::ZERO;
                for j in 0..2 {
                    let (mut xp, mut xm) = (x, x);
                    xp[j] += h;
                    xm[j] -= h;
                    let d = (m.stress(xp) - m.stress(xm)).scale(0.5 / h);
                    div[0] += d[(0, j)];
                    div[1] += d[(1, j)];
                    let (up, um) = (m.displacement(xp), m.displacement(xm));
                    grad[(0, j)] = (up[0] - um[0]) * 0.5 / h;
                    grad[(1, j)] = (up[1] - um[1]) * 0.5 / h;
                }
                let e = m.stress_divergence(x);
                assert!((div[0] - e[0]).abs() < 1e-8 && (div[1] - e[1]).abs() < 1e-8);
                assert!((grad - (m.grad_u)(x)).max_abs() < 1e-8);
                let tr = m.stress([1.0, x[1]]).apply([1.0, 0.0]);
                assert!(tr[0].abs() < 1e-15 && tr[1].abs() < 1e-15);
            }
        }
    }
}

//! Displacement correction, error norms, convergence rates, point
//! evaluation and projected Jacobian statistics.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{correction_system, AssemblyError, MixedProblem};
use crate::elements::{CellBasis, ElementError, FeSpace, SpaceKind};
use crate::exact::ExactSolution;
use crate::math::{self, DenseLu, Tensor2, Vec2};
use crate::mesh::TriangleMesh;
use crate::quadrature::triangle_rule;
use crate::sparse::{LinearSolver, SolveError};

/// Volume rule used for error integrals.
pub const ERROR_QUADRATURE_DEGREE: usize = 10;

/// Barycentric tolerance for point location.
pub const LOCATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PostError {
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linear(#[from] SolveError),
    #[error("point ({}, {}) is outside the mesh", .0[0], .0[1])]
    OutsideMesh(Vec2),
    #[error("slope needs at least two levels with strictly decreasing h")]
    BadSequence,
}

/// Coefficients of a finite element function together with its space.
#[derive(Debug, Clone, Copy)]
pub struct FieldRef<'a> {
    pub space: &'a FeSpace,
    pub coeffs: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointValue {
    Scalar(f64),
    Vector(Vec2),
    Tensor(Tensor2),
}

/// Value of `field` at physical point `x`, taken from the lowest-index
/// cell that contains it.
pub fn eval_point(mesh: &TriangleMesh, field: FieldRef<'_>, x: Vec2) -> Result<PointValue, PostError> {
    let c = mesh.locate(x, LOCATE_TOL).ok_or(PostError::OutsideMesh(x))?;
    let space = field.space;
    let xr = space.geometry(c).inverse_map(x);
    let table = space.table(&[xr]);
    let mut basis = CellBasis::default();
    space.tabulate(c, &table, &mut basis);
    let mut local = Vec::new();
    space.gather(c, field.coeffs, &mut local);
    Ok(match space.kind() {
        SpaceKind::CgScalar(_) | SpaceKind::DgScalar(_) => PointValue::Scalar(basis.scalar_at(0, &local)),
        SpaceKind::CgVector(_) | SpaceKind::DgVector(_) | SpaceKind::BdmVector(_) => {
            PointValue::Vector(basis.vector_at(0, &local))
        }
        SpaceKind::BdmTensor(_) => PointValue::Tensor(basis.tensor_at(0, &local)),
    })
}

/// Continuous displacement of one degree higher recovered from `K_h`.
#[derive(Debug, Clone)]
pub struct CorrectedDisplacement {
    pub space: FeSpace,
    pub coeffs: Vec<f64>,
}

impl CorrectedDisplacement {
    pub fn field(&self) -> FieldRef<'_> {
        FieldRef {
            space: &self.space,
            coeffs: &self.coeffs,
        }
    }
}

/// Solves `⟨∇ũ, ∇v⟩ = ⟨K_h, ∇v⟩` in continuous vector Lagrange of order
/// `k + 1` with `ũ = ū` at the displacement-boundary nodes.
pub fn correct_displacement<L: LinearSolver + ?Sized>(
    mesh: &TriangleMesh,
    k_field: FieldRef<'_>,
    displacement: &dyn Fn(Vec2) -> Vec2,
    linear: &mut L,
) -> Result<CorrectedDisplacement, PostError> {
    let mut space = FeSpace::new(mesh, SpaceKind::CgVector(k_field.space.order() + 1))?;
    space.constrain_dirichlet(mesh, displacement)?;
    let (a, b) = correction_system(k_field.space, k_field.coeffs, &space)?;
    let coeffs = linear.solve(&a, &b)?;
    Ok(CorrectedDisplacement { space, coeffs })
}

/// Splits a mixed state into its four fields.
pub fn fields<'a>(problem: &'a MixedProblem, x: &'a [f64]) -> [FieldRef<'a>; 4] {
    let l = problem.layout();
    let s = &problem.spaces;
    [
        FieldRef {
            space: &s.u,
            coeffs: &x[l.u()],
        },
        FieldRef {
            space: &s.k,
            coeffs: &x[l.k()],
        },
        FieldRef {
            space: &s.stress,
            coeffs: &x[l.stress()],
        },
        FieldRef {
            space: &s.p,
            coeffs: &x[l.p()],
        },
    ]
}

/// Correction of the displacement of a solved mixed problem.
pub fn correct_state<L: LinearSolver + ?Sized>(
    problem: &MixedProblem,
    x: &[f64],
    linear: &mut L,
) -> Result<CorrectedDisplacement, PostError> {
    let [_, k, _, _] = fields(problem, x);
    correct_displacement(problem.mesh(), k, &*problem.bc.displacement, linear)
}

/// Errors of one solved state against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LevelErrors {
    pub h: f64,
    /// `‖u − u_h‖` in L².
    pub u: f64,
    /// `‖K − K_h‖` in L².
    pub k: f64,
    /// `‖P − P_h‖` in L².
    pub stress_l2: f64,
    /// `(‖P − P_h‖² + ‖∇·(P − P_h)‖²)^{1/2}`.
    pub stress_hdiv: f64,
    /// `‖p − p_h‖` in L².
    pub p: f64,
    /// `‖u − ũ_h‖` in L² when a correction was computed.
    pub u_corr: Option<f64>,
}

/// Pointwise squared error from a point, the tabulated basis, the
/// quadrature index and the local coefficients.
type ErrorDensity<'a> = &'a dyn Fn(Vec2, &CellBasis, usize, &[f64]) -> f64;

/// Squared L² error `∫ |f_h − f|²` of a single field.
fn field_error_sq(field: FieldRef<'_>, exact: ErrorDensity<'_>) -> f64 {
    let rule = triangle_rule(ERROR_QUADRATURE_DEGREE).expect("rule");
    let table = field.space.table(&rule.points);
    let mut basis = CellBasis::default();
    let mut local = Vec::new();
    let mut total = 0.0;
    for c in 0..field.space.n_cells() {
        field.space.tabulate(c, &table, &mut basis);
        field.space.gather(c, field.coeffs, &mut local);
        let geo = field.space.geometry(c);
        for (q, (xr, w)) in rule.iter().enumerate() {
            total += w * geo.det * exact(geo.map(*xr), &basis, q, &local);
        }
    }
    total
}

fn vec_sq(a: Vec2, b: Vec2) -> f64 {
    let d = math::sub(a, b);
    math::dot(d, d)
}

/// L² error of a vector field.
pub fn vector_error(field: FieldRef<'_>, exact: &dyn Fn(Vec2) -> Vec2) -> f64 {
    math::sqrt(field_error_sq(field, &|x, b, q, l| vec_sq(b.vector_at(q, l), exact(x))))
}

/// L² error of a scalar field.
pub fn scalar_error(field: FieldRef<'_>, exact: &dyn Fn(Vec2) -> f64) -> f64 {
    math::sqrt(field_error_sq(field, &|x, b, q, l| {
        let d = b.scalar_at(q, l) - exact(x);
        d * d
    }))
}

/// L² error of a tensor field and, separately, the L² error of its
/// row-wise divergence.
pub fn tensor_error(
    field: FieldRef<'_>,
    exact: &dyn Fn(Vec2) -> Tensor2,
    exact_div: &dyn Fn(Vec2) -> Vec2,
) -> (f64, f64) {
    let l2 = field_error_sq(field, &|x, b, q, l| (b.tensor_at(q, l) - exact(x)).norm_sq());
    let div = field_error_sq(field, &|x, b, q, l| vec_sq(b.tdiv_at(q, l), exact_div(x)));
    (math::sqrt(l2), math::sqrt(div))
}

/// All field errors of the state `x` of `problem`.
pub fn error_norms(
    problem: &MixedProblem,
    x: &[f64],
    exact: &dyn ExactSolution,
    corrected: Option<&CorrectedDisplacement>,
) -> LevelErrors {
    let [u, k, stress, p] = fields(problem, x);
    let (s_l2, s_div) = tensor_error(stress, &|y| exact.stress(y), &|y| exact.stress_divergence(y));
    LevelErrors {
        h: problem.mesh().mesh_size(),
        u: vector_error(u, &|y| exact.displacement(y)),
        k: tensor_error(k, &|y| exact.gradient(y), &|_| [0.0; 2]).0,
        stress_l2: s_l2,
        stress_hdiv: math::sqrt(s_l2 * s_l2 + s_div * s_div),
        p: scalar_error(p, &|y| exact.pressure(y)),
        u_corr: corrected.map(|c| vector_error(c.field(), &|y| exact.displacement(y))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Rate(f64),
    /// Some error vanished exactly; no rate is defined.
    Exact,
}

impl Slope {
    /// True when the rate is at least `min` (an exact result always is).
    pub fn at_least(self, min: f64) -> bool {
        match self {
            Slope::Rate(r) => r >= min,
            Slope::Exact => true,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Slope::Rate(r) => Some(r),
            Slope::Exact => None,
        }
    }
}

/// Least-squares slope of `log e` against `log h`.
pub fn convergence_slope(errors: &[f64], hs: &[f64]) -> Result<Slope, PostError> {
    let n = errors.len();
    if n < 2 || hs.len() != n || hs.windows(2).any(|w| !(w[1] < w[0])) || hs[n - 1] <= 0.0 {
        return Err(PostError::BadSequence);
    }
    if errors.contains(&0.0) {
        return Ok(Slope::Exact);
    }
    if errors.iter().any(|&e| !(e > 0.0)) {
        return Err(PostError::BadSequence);
    }
    let xs: Vec<f64> = hs.iter().map(|&h| math::ln(h)).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| math::ln(e)).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(Slope::Rate(sxy / sxx))
}

/// Slope between the last two levels.
pub fn last_interval_slope(errors: &[f64], hs: &[f64]) -> Result<Slope, PostError> {
    let n = errors.len();
    if n < 2 || hs.len() != n {
        return Err(PostError::BadSequence);
    }
    convergence_slope(&errors[n - 2..], &hs[n - 2..])
}

/// Fitted and last-interval slopes of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSlopes {
    pub fitted: Slope,
    pub last: Slope,
}

/// Errors over a refinement sequence with per-field slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub levels: Vec<LevelErrors>,
    pub u: Option<FieldSlopes>,
    pub k: Option<FieldSlopes>,
    pub stress_l2: Option<FieldSlopes>,
    pub stress_hdiv: Option<FieldSlopes>,
    pub p: Option<FieldSlopes>,
    pub u_corr: Option<FieldSlopes>,
}

impl NormReport {
    pub fn new(levels: Vec<LevelErrors>) -> Self {
        let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
        let slopes = |get: &dyn Fn(&LevelErrors) -> Option<f64>| -> Option<FieldSlopes> {
            let e: Option<Vec<f64>> = levels.iter().map(get).collect();
            let e = e?;
            Some(FieldSlopes {
                fitted: convergence_slope(&e, &hs).ok()?,
                last: last_interval_slope(&e, &hs).ok()?,
            })
        };
        NormReport {
            u: slopes(&|l| Some(l.u)),
            k: slopes(&|l| Some(l.k)),
            stress_l2: slopes(&|l| Some(l.stress_l2)),
            stress_hdiv: slopes(&|l| Some(l.stress_hdiv)),
            p: slopes(&|l| Some(l.p)),
            u_corr: slopes(&|l| l.u_corr),
            levels,
        }
    }
}

/// Five-number summary of projected determinant values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub count: usize,
    pub negative: usize,
}

impl JacobianStats {
    /// Quartiles by linear interpolation between order statistics.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() || values.iter().any(|v| v.is_nan()) {
            return None;
        }
        let mut s = values.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let quantile = |q: f64| {
            let pos = q * (s.len() - 1) as f64;
            let lo = pos as usize;
            let hi = (lo + 1).min(s.len() - 1);
            s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
        };
        Some(JacobianStats {
            min: s[0],
            q1: quantile(0.25),
            median: quantile(0.5),
            q3: quantile(0.75),
            max: s[s.len() - 1],
            count: s.len(),
            negative: s.iter().filter(|&&v| v < 0.0).count(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct JacobianProjection {
    pub space: FeSpace,
    pub values: Vec<f64>,
    pub stats: JacobianStats,
}

/// Cellwise L² projection of `det(K_h + I)` onto discontinuous Lagrange
/// of the same order as `K_h`.
pub fn project_jacobian(mesh: &TriangleMesh, k_field: FieldRef<'_>) -> Result<JacobianProjection, PostError> {
    let order = k_field.space.order();
    let space = FeSpace::new(mesh, SpaceKind::DgScalar(order))?;
    let rule = triangle_rule((3 * order).max(2)).expect("rule");
    let (tk, tj) = (k_field.space.table(&rule.points), space.table(&rule.points));
    let (mut bk, mut bj) = (CellBasis::default(), CellBasis::default());
    let mut local = Vec::new();
    let mut values = vec![0.0; space.n_dofs()];
    let n = space.local_dim();
    for c in 0..space.n_cells() {
        k_field.space.tabulate(c, &tk, &mut bk);
        space.tabulate(c, &tj, &mut bj);
        k_field.space.gather(c, k_field.coeffs, &mut local);
        let mut mass = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for (q, (_, w)) in rule.iter().enumerate() {
            let j = (bk.tensor_at(q, &local) + Tensor2::IDENTITY).det();
            let phi = &bj.scalar[q * n..(q + 1) * n];
            for a in 0..n {
                rhs[a] += w * j * phi[a];
                for b in 0..n {
                    mass[a * n + b] += w * phi[a] * phi[b];
                }
            }
        }
        let lu = DenseLu::factor(n, &mass).expect("Lagrange mass matrix is SPD");
        for (&g, v) in space.cell_dofs(c).iter().zip(lu.solve(&rhs)) {
            values[g] = v;
        }
    }
    let stats = JacobianStats::from_values(&values).expect("nonempty mesh");
    Ok(JacobianProjection { space, values, stats })
}

//! Benchmark drivers: radial inflation, Cook's membrane, perforated-block
//! stretching and the linearised manufactured study.

use std::path::PathBuf;

use ddfem_core::assembly::{AssemblyError, BoundaryData, Forcing, MixedProblem, Pair};
use ddfem_core::exact::{ExactInflation2D, ExactSolution, LinearManufactured};
use ddfem_core::materials::{Constraint, Material};
use ddfem_core::math::Vec2;
use ddfem_core::mesh::{cook_map, map_mesh, quarter_annulus_map, structured_square_mesh, BoundaryTag, Diagonal};
use ddfem_core::postprocess::{
    self, correct_state, error_norms, eval_point, project_jacobian, JacobianStats, LevelErrors, NormReport, PointValue,
};
use ddfem_core::solver::{continuation_solve, NewtonConfig, SolveReport, SolverError};
use ddfem_core::TriangleMesh;

use crate::linalg::FaerLdlt;
use crate::mesh_io::{self, MeshIoError};

pub const MU: f64 = 1.0;
/// Tip `A` of Cook's membrane.
pub const COOK_TIP: Vec2 = [48.0, 60.0];
pub const COOK_STEPS: usize = 4;
/// Diagonal orientation of the structured Cook meshes.
pub const COOK_DIAGONAL: Diagonal = Diagonal::UpperLeftToLowerRight;
pub const STRETCH_STEPS: usize = 6;
/// Largest increment of the stretch ratio per inflation load step.
pub const INFLATION_STEP: f64 = 0.1;

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Post(#[from] postprocess::PostError),
    #[error(transparent)]
    MeshIo(#[from] MeshIoError),
    #[error(transparent)]
    Mesh(#[from] ddfem_core::mesh::MeshError),
    #[error("{0}")]
    Config(String),
}

/// A converged mixed state.
pub struct Solved {
    pub problem: MixedProblem,
    pub x: Vec<f64>,
    pub report: SolveReport,
}

fn material(constraint: Constraint) -> Material {
    Material::new(MU, constraint).expect("positive shear modulus")
}

/// Reference state: zero fields with the pressure `p = μ` that makes the
/// stress vanish at `K = 0`.
pub fn reference_state(problem: &MixedProblem) -> Vec<f64> {
    let mut x = vec![0.0; problem.n_dofs()];
    let mu = problem.material.mu;
    x[problem.layout().p()].iter_mut().for_each(|v| *v = mu);
    x
}

// ---------------------------------------------------------------- inflation

/// Structured mesh of `[0, 0.5]²` mapped onto the quarter annulus. The
/// inner arc is a traction boundary, the outer arc and both cut edges carry
/// the exact displacement.
pub fn inflation_mesh(n: usize, diagonal: Diagonal) -> Result<TriangleMesh, DriverError> {
    let square = structured_square_mesh(n, diagonal)?;
    let mesh = map_mesh(&square, |p| quarter_annulus_map([0.5 * p[0], 0.5 * p[1]]))?;
    Ok(mesh.tag_boundary(|x| {
        let on_cut = x[0].abs() < 1e-9 || x[1].abs() < 1e-9;
        if !on_cut && x[0].hypot(x[1]) < 0.75 {
            BoundaryTag::Traction
        } else {
            BoundaryTag::Displacement
        }
    }))
}

fn inflation_bc(lambda: f64) -> BoundaryData {
    let ex = ExactInflation2D::new(lambda, MU);
    // Traction of the exact field on the straight chords of the inner arc.
    // It vanishes on the arc itself.
    BoundaryData {
        displacement: Box::new(move |x| ex.displacement(x)),
        traction: Box::new(move |x, n| ex.stress(x).apply(n)),
    }
}

/// Load factors that raise the stretch ratio from 1 to `lambda` in equal
/// increments no larger than [`INFLATION_STEP`].
pub fn inflation_schedule(lambda: f64) -> Vec<f64> {
    let steps = ((lambda - 1.0) / INFLATION_STEP).ceil().max(1.0) as usize;
    (1..=steps).map(|i| i as f64 / steps as f64).collect()
}

pub fn solve_inflation(n: usize, pair: Pair, lambda: f64, constraint: Constraint) -> Result<Solved, DriverError> {
    if !(lambda >= 1.0) {
        return Err(DriverError::Config(format!("lambda must be at least 1, got {lambda}")));
    }
    let mesh = inflation_mesh(n, Diagonal::default())?;
    let mut problem = MixedProblem::new(mesh, pair, material(constraint), inflation_bc(1.0), Forcing::default())?;
    let x0 = reference_state(&problem);
    let config = NewtonConfig {
        continuation: inflation_schedule(lambda),
        ..Default::default()
    };
    let set = |p: &mut MixedProblem, t: f64| p.set_boundary(inflation_bc(1.0 + t * (lambda - 1.0)));
    let (x, report) = continuation_solve(&mut problem, set, x0, &config, &mut FaerLdlt::new())?;
    Ok(Solved { problem, x, report })
}

/// Errors of one solved level against `exact`, optionally with the
/// corrected displacement.
pub fn level_errors(solved: &Solved, exact: &dyn ExactSolution, correction: bool) -> Result<LevelErrors, DriverError> {
    let corrected = if correction {
        Some(correct_state(&solved.problem, &solved.x, &mut FaerLdlt::new())?)
    } else {
        None
    };
    Ok(error_norms(&solved.problem, &solved.x, exact, corrected.as_ref()))
}

/// One row of a convergence study; `errors` is `None` when the level failed.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub level: usize,
    pub h: f64,
    pub errors: Option<LevelErrors>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Study {
    pub rows: Vec<StudyRow>,
    pub report: NormReport,
}

impl Study {
    fn new(rows: Vec<StudyRow>) -> Self {
        let ok = rows.iter().filter_map(|r| r.errors).collect();
        Study {
            report: NormReport::new(ok),
            rows,
        }
    }
}

pub fn run_inflation(
    levels: &[usize],
    pair: Pair,
    lambda: f64,
    constraint: Constraint,
    correction: bool,
) -> Result<Study, DriverError> {
    let exact = ExactInflation2D::new(lambda, MU);
    let mut rows = Vec::new();
    for &n in levels {
        let h = inflation_mesh(n, Diagonal::default())?.mesh_size();
        let row = match solve_inflation(n, pair, lambda, constraint).and_then(|s| level_errors(&s, &exact, correction))
        {
            Ok(e) => StudyRow {
                level: n,
                h,
                errors: Some(e),
                failure: None,
            },
            Err(e) => StudyRow {
                level: n,
                h,
                errors: None,
                failure: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(Study::new(rows))
}

// --------------------------------------------------------------------- cook

pub fn cook_mesh(n: usize, diagonal: Diagonal) -> Result<TriangleMesh, DriverError> {
    let mesh = map_mesh(&structured_square_mesh(n, diagonal)?, cook_map)?;
    Ok(mesh.tag_boundary(|x| {
        if x[0] < 1e-9 {
            BoundaryTag::Displacement
        } else {
            BoundaryTag::Traction
        }
    }))
}

fn cook_bc(f: f64) -> BoundaryData {
    BoundaryData {
        displacement: Box::new(|_| [0.0; 2]),
        traction: Box::new(move |x, _| if x[0] > 48.0 - 1e-9 { [0.0, f] } else { [0.0; 2] }),
    }
}

pub fn solve_cook(
    n: usize,
    pair: Pair,
    f: f64,
    constraint: Constraint,
    diagonal: Diagonal,
) -> Result<Solved, DriverError> {
    let mut problem = MixedProblem::new(
        cook_mesh(n, diagonal)?,
        pair,
        material(constraint),
        cook_bc(0.0),
        Forcing::default(),
    )?;
    let x0 = reference_state(&problem);
    let config = NewtonConfig::default().with_steps(COOK_STEPS);
    let set = |p: &mut MixedProblem, t: f64| p.set_boundary(cook_bc(t * f));
    let (x, report) = continuation_solve(&mut problem, set, x0, &config, &mut FaerLdlt::new())?;
    Ok(Solved { problem, x, report })
}

/// Displacement at `point`: from the corrected field when `correction` is
/// set, otherwise the raw discontinuous field of the lowest-index cell.
pub fn displacement_at(solved: &Solved, point: Vec2, correction: bool) -> Result<Vec2, DriverError> {
    let value = if correction {
        let c = correct_state(&solved.problem, &solved.x, &mut FaerLdlt::new())?;
        eval_point(solved.problem.mesh(), c.field(), point)?
    } else {
        let [u, _, _, _] = postprocess::fields(&solved.problem, &solved.x);
        eval_point(solved.problem.mesh(), u, point)?
    };
    match value {
        PointValue::Vector(v) => Ok(v),
        _ => unreachable!("displacement spaces are vector valued"),
    }
}

#[derive(Debug, Clone)]
pub struct CookRow {
    pub n: usize,
    pub f: f64,
    pub tip: Option<Vec2>,
    pub iterations: usize,
    pub max_step_iterations: usize,
    pub failure: Option<String>,
}

pub fn run_cook(
    levels: &[usize],
    pair: Pair,
    f: f64,
    constraint: Constraint,
    correction: bool,
    diagonal: Diagonal,
) -> Vec<CookRow> {
    levels
        .iter()
        .map(|&n| {
            let solved = solve_cook(n, pair, f, constraint, diagonal);
            match solved.and_then(|s| Ok((displacement_at(&s, COOK_TIP, correction)?, s.report))) {
                Ok((tip, report)) => CookRow {
                    n,
                    f,
                    tip: Some(tip),
                    iterations: report.total_iterations(),
                    max_step_iterations: report.steps.iter().map(|s| s.iterations).max().unwrap_or(0),
                    failure: None,
                },
                Err(e) => CookRow {
                    n,
                    f,
                    tip: None,
                    iterations: 0,
                    max_step_iterations: 0,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect()
}

// ------------------------------------------------------------------ stretch

pub fn asset_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets").join(name)
}

/// Default stretch meshes, coarse then fine.
pub fn stretch_assets() -> Vec<PathBuf> {
    vec![asset_path("perforated_coarse.msh"), asset_path("perforated.msh")]
}

fn stretch_bc(u: f64) -> BoundaryData {
    BoundaryData {
        displacement: Box::new(move |x| if x[0] > 0.5 { [u, 0.0] } else { [0.0; 2] }),
        traction: Box::new(|_, _| [0.0; 2]),
    }
}

pub fn solve_stretch(mesh: TriangleMesh, pair: Pair, u: f64, constraint: Constraint) -> Result<Solved, DriverError> {
    let mut problem = MixedProblem::new(mesh, pair, material(constraint), stretch_bc(0.0), Forcing::default())?;
    let x0 = reference_state(&problem);
    let config = NewtonConfig::default().with_steps(STRETCH_STEPS);
    let set = |p: &mut MixedProblem, t: f64| p.set_boundary(stretch_bc(t * u));
    let (x, report) = continuation_solve(&mut problem, set, x0, &config, &mut FaerLdlt::new())?;
    Ok(Solved { problem, x, report })
}

/// L² norms of the four fields.
pub fn field_norms(solved: &Solved) -> [f64; 4] {
    let [u, k, s, p] = postprocess::fields(&solved.problem, &solved.x);
    [
        postprocess::vector_error(u, &|_| [0.0; 2]),
        postprocess::tensor_error(k, &|_| ddfem_core::Tensor2::ZERO, &|_| [0.0; 2]).0,
        postprocess::tensor_error(s, &|_| ddfem_core::Tensor2::ZERO, &|_| [0.0; 2]).0,
        postprocess::scalar_error(p, &|_| 0.0),
    ]
}

pub fn jacobian_stats(solved: &Solved) -> Result<JacobianStats, DriverError> {
    let [_, k, _, _] = postprocess::fields(&solved.problem, &solved.x);
    Ok(project_jacobian(solved.problem.mesh(), k)?.stats)
}

#[derive(Debug, Clone)]
pub struct StretchRow {
    pub mesh: String,
    pub u: f64,
    pub norms: Option<[f64; 4]>,
    pub stats: Option<JacobianStats>,
    pub failure: Option<String>,
}

pub fn run_stretch(meshes: &[PathBuf], pair: Pair, u: f64, constraint: Constraint) -> Vec<StretchRow> {
    meshes
        .iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
            let result = mesh_io::read_mesh(path)
                .map_err(DriverError::from)
                .and_then(|m| solve_stretch(m, pair, u, constraint))
                .and_then(|s| Ok((field_norms(&s), jacobian_stats(&s)?)));
            match result {
                Ok((norms, stats)) => StretchRow {
                    mesh: name,
                    u,
                    norms: Some(norms),
                    stats: Some(stats),
                    failure: None,
                },
                Err(e) => StretchRow {
                    mesh: name,
                    u,
                    norms: None,
                    stats: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect()
}

// --------------------------------------------------------------- linearised

/// Unit square with the traction boundary on `x = 1`.
pub fn linearised_mesh(n: usize) -> Result<TriangleMesh, DriverError> {
    let square = structured_square_mesh(n, Diagonal::default())?;
    Ok(square.tag_boundary(|x| {
        if x[0] > 1.0 - 1e-9 {
            BoundaryTag::Traction
        } else {
            BoundaryTag::Displacement
        }
    }))
}

/// Solves the problem linearised at the reference state with the sources of
/// `exact`.
pub fn solve_linearised(n: usize, pair: Pair, exact: &LinearManufactured) -> Result<Solved, DriverError> {
    let problem = MixedProblem::new(
        linearised_mesh(n)?,
        pair,
        material(Constraint::C1),
        exact.boundary(),
        exact.forcing(),
    )?;
    let (a, b) = problem.linearised_system()?;
    let x = ddfem_core::sparse::LinearSolver::solve(&mut FaerLdlt::new(), &a, &b).map_err(SolverError::from)?;
    Ok(Solved {
        problem,
        x,
        report: SolveReport::default(),
    })
}

pub fn run_linearised(
    levels: &[usize],
    pair: Pair,
    exact: &LinearManufactured,
    correction: bool,
) -> Result<Study, DriverError> {
    let mut rows = Vec::new();
    for &n in levels {
        let h = linearised_mesh(n)?.mesh_size();
        let row = match solve_linearised(n, pair, exact).and_then(|s| level_errors(&s, exact, correction)) {
            Ok(e) => StudyRow {
                level: n,
                h,
                errors: Some(e),
                failure: None,
            },
            Err(e) => StudyRow {
                level: n,
                h,
                errors: None,
                failure: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(Study::new(rows))
}

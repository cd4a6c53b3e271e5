//! Newton–Raphson with backtracking line search and load continuation.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::assembly::{AssemblyError, MixedProblem};
use crate::math;
use crate::sparse::{Csr, LinearSolver, SolveError};

/// A square nonlinear system with strongly imposed values.
pub trait NonlinearSystem {
    fn dim(&self) -> usize;
    fn constraints(&self) -> Vec<(usize, f64)>;
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, AssemblyError>;
    fn residual_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Csr), AssemblyError>;
}

impl NonlinearSystem for MixedProblem {
    fn dim(&self) -> usize {
        self.n_dofs()
    }

    fn constraints(&self) -> Vec<(usize, f64)> {
        MixedProblem::constraints(self)
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        MixedProblem::residual(self, x)
    }

    fn residual_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Csr), AssemblyError> {
        MixedProblem::residual_and_jacobian(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearch {
    Armijo,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub line_search: LineSearch,
    pub contraction: f64,
    pub sufficient_decrease: f64,
    pub max_halvings: usize,
    /// Load factors in `(0, 1]`, strictly increasing, ending at 1.
    pub continuation: Vec<f64>,
    /// Times a failed load increment may be halved and retried from the last
    /// converged state.
    pub max_bisections: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-9,
            max_iter: 30,
            line_search: LineSearch::Armijo,
            contraction: 0.5,
            sufficient_decrease: 1e-4,
            max_halvings: 20,
            continuation: alloc::vec![1.0],
            max_bisections: 4,
        }
    }
}

impl NewtonConfig {
    /// `n` equal load steps.
    pub fn with_steps(mut self, n: usize) -> Self {
        self.continuation = (1..=n).map(|i| i as f64 / n as f64).collect();
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let ok_factors = !self.continuation.is_empty()
            && self.continuation.windows(2).all(|w| w[0] < w[1])
            && self.continuation[0] > 0.0
            && *self.continuation.last().unwrap() == 1.0;
        if !(self.tol > 0.0) || !ok_factors {
            return Err(SolverError::InvalidConfig);
        }
        Ok(())
    }
}

/// History of one Newton solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub load_factor: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub step_lengths: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub steps: Vec<StepReport>,
    pub final_residual: f64,
}

impl SolveReport {
    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration")]
    InvalidConfig,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("line search stalled at iteration {iteration} (residual {residual:e})")]
    LineSearchStalled { iteration: usize, residual: f64 },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linear(#[from] SolveError),
    #[error("load step {factor} failed: {source}")]
    LoadStep { factor: f64, source: Box<SolverError> },
}

fn norm(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

/// Newton iteration from `x`, which is first made to satisfy the
/// constraints. Returns the converged state and its history.
pub fn newton_solve<S: NonlinearSystem + ?Sized, L: LinearSolver + ?Sized>(
    system: &S,
    mut x: Vec<f64>,
    config: &NewtonConfig,
    linear: &mut L,
) -> Result<(Vec<f64>, StepReport), SolverError> {
    for (g, v) in system.constraints() {
        x[g] = v;
    }
    let mut report = StepReport {
        load_factor: 1.0,
        ..Default::default()
    };
    let mut r = system.residual(&x)?;
    let mut rn = norm(&r);
    report.residuals.push(rn);
    while rn > config.tol {
        if report.iterations >= config.max_iter {
            return Err(SolverError::MaxIterations {
                iterations: report.iterations,
                residual: rn,
            });
        }
        let (_, jac) = system.residual_and_jacobian(&x)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = linear.solve(&jac, &rhs)?;
        let mut alpha = 1.0;
        let mut halvings = 0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
            match system.residual(&trial) {
                Ok(rt) => {
                    let tn = norm(&rt);
                    let enough = tn * tn <= (1.0 - 2.0 * config.sufficient_decrease * alpha) * rn * rn;
                    if config.line_search == LineSearch::None || enough {
                        break Some((trial, rt, tn));
                    }
                }
                Err(e) if e.is_nonpositive_jacobian() && config.line_search == LineSearch::Armijo => {}
                Err(e) => return Err(e.into()),
            }
            if halvings >= config.max_halvings {
                break None;
            }
            alpha *= config.contraction;
            halvings += 1;
        };
        let Some((trial, rt, tn)) = accepted else {
            return Err(SolverError::LineSearchStalled {
                iteration: report.iterations,
                residual: rn,
            });
        };
        x = trial;
        r = rt;
        rn = tn;
        report.iterations += 1;
        report.residuals.push(rn);
        report.step_lengths.push(alpha);
    }
    Ok((x, report))
}

/// Solves a load-parameterised family: `set_load(system, t)` installs load
/// factor `t`, then each step warm-starts from the previous solution. A step
/// that fails is retried with half the increment, up to
/// `config.max_bisections` times per scheduled factor.
pub fn continuation_solve<S, L, F>(
    system: &mut S,
    mut set_load: F,
    x0: Vec<f64>,
    config: &NewtonConfig,
    linear: &mut L,
) -> Result<(Vec<f64>, SolveReport), SolverError>
where
    S: NonlinearSystem + ?Sized,
    L: LinearSolver + ?Sized,
    F: FnMut(&mut S, f64) -> Result<(), AssemblyError>,
{
    config.validate()?;
    let mut report = SolveReport::default();
    let mut x = x0;
    let mut done = 0.0;
    for &target in &config.continuation {
        let mut dt = target - done;
        let mut halvings = 0;
        while done < target {
            let t = if done + dt >= target { target } else { done + dt };
            let wrap = |e: SolverError| SolverError::LoadStep {
                factor: t,
                source: Box::new(e),
            };
            set_load(system, t).map_err(|e| wrap(e.into()))?;
            match newton_solve(system, x.clone(), config, linear) {
                Ok((xn, mut step)) => {
                    step.load_factor = t;
                    report.final_residual = *step.residuals.last().unwrap();
                    report.steps.push(step);
                    x = xn;
                    done = t;
                }
                Err(e) if halvings < config.max_bisections && !matches!(e, SolverError::InvalidConfig) => {
                    halvings += 1;
                    dt = 0.5 * (t - done);
                }
                Err(e) => return Err(wrap(e)),
            }
        }
    }
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{DenseSolver, Triplets};
    use alloc::vec;

    /// r(x) = A x + c·x³ − b with optional strong value on the last entry.
    struct Toy {
        a: [[f64; 2]; 2],
        c: f64,
        b: [f64; 2],
    }

    impl NonlinearSystem for Toy {
        fn dim(&self) -> usize {
            2
        }
        fn constraints(&self) -> Vec<(usize, f64)> {
            Vec::new()
        }
        fn residual(&self, x: &[f64]) -> Result<Vec<f64>, AssemblyError> {
            Ok((0..2)
                .map(|i| self.a[i][0] * x[0] + self.a[i][1] * x[1] + self.c * x[i] * x[i] * x[i] - self.b[i])
                .collect())
        }
        fn residual_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Csr), AssemblyError> {
            let mut t = Triplets::new(2);
            for i in 0..2 {
                for j in 0..2 {
                    let d = if i == j { 3.0 * self.c * x[i] * x[i] } else { 0.0 };
                    t.push(i, j, self.a[i][j] + d);
                }
            }
            Ok((self.residual(x)?, t.to_csr()))
        }
    }

    #[test]
    fn linear_problem_takes_one_step() {
        let toy = Toy {
            a: [[2.0, 1.0], [1.0, 3.0]],
            c: 0.0,
            b: [1.0, -2.0],
        };
        let (x, rep) = newton_solve(&toy, vec![5.0, -7.0], &NewtonConfig::default(), &mut DenseSolver).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(toy.residual(&x).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn converges_superlinearly() {
        let toy = Toy {
            a: [[2.0, 1.0], [1.0, 3.0]],
            c: 1.0,
            b: [10.0, -4.0],
        };
        let (_, rep) = newton_solve(&toy, vec![0.0, 0.0], &NewtonConfig::default(), &mut DenseSolver).unwrap();
        let r = &rep.residuals;
        assert!(*r.last().unwrap() <= 1e-9);
        let n = r.len();
        assert!(n >= 4);
        for i in n - 3..n - 1 {
            if r[i] < 1e-2 && r[i + 1] > 0.0 {
                assert!(r[i + 1] <= 10.0 * math::powf(r[i], 1.5));
            }
        }
        let (_, again) = newton_solve(&toy, vec![0.0, 0.0], &NewtonConfig::default(), &mut DenseSolver).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn max_iterations_reported() {
        let toy = Toy {
            a: [[1.0, 0.0], [0.0, 1.0]],
            c: 1.0,
            b: [100.0, 100.0],
        };
        let cfg = NewtonConfig {
            max_iter: 2,
            ..Default::default()
        };
        assert!(matches!(
            newton_solve(&toy, vec![0.0, 0.0], &cfg, &mut DenseSolver),
            Err(SolverError::MaxIterations { iterations: 2, .. })
        ));
    }

    #[test]
    fn continuation_matches_single_step() {
        let mut toy = Toy {
            a: [[2.0, 1.0], [1.0, 3.0]],
            c: 1.0,
            b: [0.0, 0.0],
        };
        let target = [10.0, -4.0];
        let set = |t: &mut Toy, s: f64| {
            t.b = [s * target[0], s * target[1]];
            Ok(())
        };
        let cfg = NewtonConfig::default().with_steps(4);
        let (x, rep) = continuation_solve(&mut toy, set, vec![0.0; 2], &cfg, &mut DenseSolver).unwrap();
        assert_eq!(rep.steps.len(), 4);
        assert_eq!(rep.steps[3].load_factor, 1.0);
        let single = NewtonConfig::default();
        let (y, _) = continuation_solve(&mut toy, set, vec![0.0; 2], &single, &mut DenseSolver).unwrap();
        assert!((x[0] - y[0]).abs() < 1e-9 && (x[1] - y[1]).abs() < 1e-9);
        let bad = NewtonConfig {
            continuation: vec![0.5, 0.25, 1.0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(
            continuation_solve(&mut toy, set, vec![0.0; 2], &bad, &mut DenseSolver).unwrap_err(),
            SolverError::InvalidConfig
        );
    }

    #[test]
    fn failed_increment_is_bisected() {
        // converges only from starts within distance 1 of the root t·10
        struct Picky {
            load: f64,
        }
        impl NonlinearSystem for Picky {
            fn dim(&self) -> usize {
                1
            }
            fn constraints(&self) -> Vec<(usize, f64)> {
                Vec::new()
            }
            fn residual(&self, x: &[f64]) -> Result<Vec<f64>, AssemblyError> {
                Ok(vec![x[0] - 10.0 * self.load])
            }
            fn residual_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Csr), AssemblyError> {
                let mut t = Triplets::new(1);
                let far = (x[0] - 10.0 * self.load).abs() > 1.0;
                t.push(0, 0, if far { 0.0 } else { 1.0 });
                Ok((self.residual(x)?, t.to_csr()))
            }
        }
        let set = |p: &mut Picky, t: f64| {
            p.load = t;
            Ok(())
        };
        let cfg = NewtonConfig {
            max_bisections: 4,
            ..Default::default()
        }
        .with_steps(2);
        let (x, rep) = continuation_solve(&mut Picky { load: 0.0 }, set, vec![0.0], &cfg, &mut DenseSolver).unwrap();
        assert!((x[0] - 10.0).abs() < 1e-12);
        let factors: Vec<f64> = rep.steps.iter().map(|s| s.load_factor).collect();
        assert_eq!(factors.last(), Some(&1.0));
        assert!(factors.windows(2).all(|w| w[1] - w[0] <= 0.1 + 1e-12));
        let strict = NewtonConfig {
            max_bisections: 1,
            ..cfg
        };
        let err = continuation_solve(&mut Picky { load: 0.0 }, set, vec![0.0], &strict, &mut DenseSolver).unwrap_err();
        assert!(matches!(err, SolverError::LoadStep { .. }));
    }
}

//! Checks shared by the property tests and the acceptance run.
#![allow(dead_code)]

use ddfem_core::assembly::{BoundaryData, Forcing, MixedProblem, Pair};
use ddfem_core::elements::polynomial::Monomials;
use ddfem_core::elements::{CellBasis, Family, FeSpace, ReferenceBasis, SpaceKind};
use ddfem_core::materials::{Constraint, Material};
use ddfem_core::math::Vec2;
use ddfem_core::mesh::{structured_square_mesh, BoundaryTag, Diagonal, TriangleMesh};
use ddfem_core::quadrature::{edge_rule, triangle_rule};
use ddfem_core::Tensor2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Structured square with interior vertices jittered by up to a fifth of the
/// grid spacing.
pub fn wobbly_mesh(n: usize, seed: u64) -> TriangleMesh {
    let base = structured_square_mesh(n, Diagonal::LowerLeftToUpperRight).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / n as f64;
    let inside = |t: f64| t > 1e-12 && t < 1.0 - 1e-12;
    let verts = base
        .vertices()
        .iter()
        .map(|x| {
            let d = [rng.gen_range(-0.2..0.2) * h, rng.gen_range(-0.2..0.2) * h];
            if inside(x[0]) && inside(x[1]) {
                [x[0] + d[0], x[1] + d[1]]
            } else {
                *x
            }
        })
        .collect();
    TriangleMesh::new(verts, base.cells().to_vec()).unwrap()
}

pub fn commuting_defect(mesh: &TriangleMesh, k: usize, rng: &mut ChaCha8Rng) -> f64 {
    let sp = FeSpace::new(mesh, SpaceKind::BdmTensor(k)).unwrap();
    let dg = FeSpace::new(mesh, SpaceKind::DgVector(k - 1)).unwrap();
    let mono = Monomials::new(k);
    let coef: Vec<Tensor2> = (0..mono.len())
        .map(|_| {
            Tensor2::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let f = |x: Vec2| {
        let mut v = Vec::new();
        mono.values(x, &mut v);
        coef.iter().zip(&v).fold(Tensor2::ZERO, |acc, (c, m)| acc + c.scale(*m))
    };
    let divf = |x: Vec2| {
        let mut g = Vec::new();
        mono.gradients(x, &mut g);
        let mut d = [0.0; 2];
        for (c, gr) in coef.iter().zip(&g) {
            for (r, dr) in d.iter_mut().enumerate() {
                *dr += c.0[r][0] * gr[0] + c.0[r][1] * gr[1];
            }
        }
        d
    };
    let pi_div = sp.interpolate_tensor(&f).unwrap();
    let pi_bar = dg.interpolate_vector(&divf).unwrap();
    let rule = triangle_rule(6).unwrap();
    let (t1, t2) = (sp.table(&rule.points), dg.table(&rule.points));
    let (mut c1, mut c2) = (CellBasis::default(), CellBasis::default());
    let (mut l1, mut l2) = (Vec::new(), Vec::new());
    let mut worst = 0.0f64;
    for c in 0..mesh.n_cells() {
        sp.tabulate(c, &t1, &mut c1);
        dg.tabulate(c, &t2, &mut c2);
        sp.gather(c, &pi_div, &mut l1);
        dg.gather(c, &pi_bar, &mut l2);
        for q in 0..rule.len() {
            let (a, b) = (c1.tdiv_at(q, &l1), c2.vector_at(q, &l2));
            worst = worst.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
        }
    }
    worst
}

/// Largest jump of any global BDM basis function's normal trace across an
/// interior edge.
pub fn normal_trace_jump(mesh: &TriangleMesh, k: usize) -> f64 {
    let sp = FeSpace::new(mesh, SpaceKind::BdmVector(k)).unwrap();
    let rule = edge_rule(6).unwrap();
    let mut cb = CellBasis::default();
    let mut worst = 0.0f64;
    for (e, ec) in mesh.edge_cells().iter().enumerate() {
        let Some(second) = ec.second else { continue };
        let [lo, hi] = mesh.edges()[e];
        let (a, b) = (mesh.vertices()[lo], mesh.vertices()[hi]);
        let nu = [b[1] - a[1], a[0] - b[0]];
        let pts: Vec<Vec2> = rule
            .iter()
            .map(|(s, _)| [a[0] + s[0] * (b[0] - a[0]), a[1] + s[0] * (b[1] - a[1])])
            .collect();
        let mut traces = std::collections::BTreeMap::<(usize, usize), [f64; 2]>::new();
        for (side, (c, _)) in [ec.first, second].into_iter().enumerate() {
            let geo = sp.geometry(c);
            let refs: Vec<Vec2> = pts.iter().map(|&x| geo.inverse_map(x)).collect();
            sp.tabulate(c, &sp.table(&refs), &mut cb);
            for q in 0..pts.len() {
                for (l, &g) in sp.cell_dofs(c).iter().enumerate() {
                    let v = cb.vector[q * cb.dim + l];
                    traces.entry((g, q)).or_default()[side] = v[0] * nu[0] + v[1] * nu[1];
                }
            }
        }
        for t in traces.values() {
            worst = worst.max((t[0] - t[1]).abs());
        }
    }
    worst
}

pub fn tagged_square(n: usize) -> TriangleMesh {
    wobbly_mesh(n, 17).tag_boundary(|x| {
        if x[0] < 1e-12 || x[1] < 1e-12 {
            BoundaryTag::Displacement
        } else {
            BoundaryTag::Traction
        }
    })
}

pub fn perturbed_problem(pair: Pair, variant: Constraint) -> MixedProblem {
    let bc = BoundaryData {
        displacement: Box::new(|x| [0.1 * x[1], -0.05 * x[0] * x[1]]),
        traction: Box::new(|x, n| [0.2 * n[0] + 0.1 * x[1], 0.3 * n[1]]),
    };
    MixedProblem::new(
        tagged_square(2),
        pair,
        Material::new(1.3, variant).unwrap(),
        bc,
        Forcing::default(),
    )
    .unwrap()
}

pub fn linear_problem(pair: Pair) -> MixedProblem {
    let bc = BoundaryData {
        displacement: Box::new(|x| [x[1], 0.5]),
        traction: Box::new(|_, _| [0.0; 2]),
    };
    MixedProblem::new(
        tagged_square(2),
        pair,
        Material::new(1.0, Constraint::C1).unwrap(),
        bc,
        Forcing::default(),
    )
    .unwrap()
}

/// `A x − b` as a nonlinear system.
pub struct LinearSystem {
    pub a: ddfem_core::sparse::Csr,
    pub b: Vec<f64>,
    pub fixed: Vec<(usize, f64)>,
}

impl ddfem_core::solver::NonlinearSystem for LinearSystem {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn constraints(&self) -> Vec<(usize, f64)> {
        self.fixed.clone()
    }
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, ddfem_core::assembly::AssemblyError> {
        Ok(self.a.matvec(x).iter().zip(&self.b).map(|(p, q)| p - q).collect())
    }
    fn residual_and_jacobian(
        &self,
        x: &[f64],
    ) -> Result<(Vec<f64>, ddfem_core::sparse::Csr), ddfem_core::assembly::AssemblyError> {
        Ok((self.residual(x)?, self.a.clone()))
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn fd_defect(problem: &MixedProblem, x: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    let d: Vec<f64> = (0..x.len())
        .map(|i| {
            if problem.is_fixed(i) {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    let jd = problem.jacobian(x).unwrap().matvec(&d);
    let h = 1e-6;
    let shift = |s: f64| -> Vec<f64> { x.iter().zip(&d).map(|(a, b)| a + s * b).collect() };
    let (rp, rm) = (
        problem.residual(&shift(h)).unwrap(),
        problem.residual(&shift(-h)).unwrap(),
    );
    let diff: Vec<f64> = rp
        .iter()
        .zip(&rm)
        .zip(&jd)
        .map(|((a, b), j)| (a - b) / (2.0 * h) - j)
        .collect();
    norm(&diff) / norm(&jd)
}

/// Largest deviation of the BDM dual basis from the Kronecker delta.
pub fn dual_basis_defect(k: usize) -> f64 {
    let b = ReferenceBasis::new(Family::BdmVector, k).unwrap();
    let mut worst = 0.0f64;
    for j in 0..b.dim() {
        let f = |x: Vec2| {
            let mut vv = Default::default();
            b.eval_vector(x, &mut vv);
            vv.values[j]
        };
        for (i, d) in b.apply_vector_dofs(&f).iter().enumerate() {
            let e = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((d - e).abs());
        }
    }
    worst
}

/// Largest relative error of the triangle and edge rules up to `degree`
/// on monomials, against `a! b! / (a + b + 2)!` and `1 / (n + 1)`.
pub fn quadrature_defect(degree: usize) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let mut worst = 0.0f64;
    let tri = triangle_rule(degree).unwrap();
    for total in 0..=tri.exact_degree as u32 {
        for a in 0..=total {
            let b = total - a;
            let q: f64 = tri
                .iter()
                .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                .sum();
            let exact = fact(a) * fact(b) / fact(a + b + 2);
            worst = worst.max((q - exact).abs() / exact);
        }
    }
    let edge = edge_rule(degree).unwrap();
    for n in 0..=edge.exact_degree as i32 {
        let q: f64 = edge.iter().map(|(p, w)| w * p[0].powi(n)).sum();
        worst = worst.max(((q - 1.0 / (n as f64 + 1.0)) * (n as f64 + 1.0)).abs());
    }
    worst
}

/// Largest entry of `A − J(0)` relative to `max|J|`, and of `b + r(0)`,
/// for the linearised system of a problem with homogeneous traction data.
pub fn linearisation_defect(pair: Pair) -> (f64, f64) {
    let bc = BoundaryData {
        displacement: Box::new(|x| [x[1], 0.5]),
        traction: Box::new(|_, _| [0.0; 2]),
    };
    let material = Material::new(1.7, Constraint::C1).unwrap();
    let pb = MixedProblem::new(tagged_square(3), pair, material, bc, Forcing::default()).unwrap();
    let x = vec![0.0; pb.n_dofs()];
    let (r, j) = pb.residual_and_jacobian(&x).unwrap();
    let (a, b) = pb.linearised_system().unwrap();
    let scale = j.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for row in 0..j.n {
        for i in j.row_ptr[row]..j.row_ptr[row + 1] {
            worst = worst.max((a.get(row, j.col_idx[i]) - j.vals[i]).abs());
        }
        for i in a.row_ptr[row]..a.row_ptr[row + 1] {
            worst = worst.max((j.get(row, a.col_idx[i]) - a.vals[i]).abs());
        }
    }
    let rhs = b.iter().zip(&r).fold(0.0f64, |m, (x, y)| m.max((x + y).abs()));
    (worst / scale, rhs)
}

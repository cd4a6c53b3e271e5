//! Residual, Jacobian and linear systems of the four-field formulation.
//!
//! Unknowns are stacked as `[u | K | P | p]`. Stress DOFs on traction edges
//! are constrained: their residual rows read `x − prescribed`, their
//! Jacobian rows are identity rows and their columns are dropped.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::elements::reference::ref_edge;
use crate::elements::{CellBasis, ElementError, FeSpace, RefTable, SpaceKind};
use crate::materials::{self, Material, MaterialError};
use crate::math::{Tensor2, Vec2};
use crate::mesh::{BoundaryTag, TriangleMesh};
use crate::quadrature::{edge_rule, triangle_rule, QuadRule};
use crate::sparse::{Csr, Triplets};

pub type VectorField = Box<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
pub type TensorField = Box<dyn Fn(Vec2) -> Tensor2 + Send + Sync>;
pub type ScalarField = Box<dyn Fn(Vec2) -> f64 + Send + Sync>;
/// Traction as a function of position and outward unit normal.
pub type TractionField = Box<dyn Fn(Vec2, Vec2) -> Vec2 + Send + Sync>;

/// The two stable element pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pair {
    /// `P̄0 d1 d1 P1`
    Low,
    /// `P̄1 d2 d2 P2`
    High,
}

impl Pair {
    pub fn order(self) -> usize {
        match self {
            Pair::Low => 1,
            Pair::High => 2,
        }
    }

    pub fn from_order(k: usize) -> Option<Pair> {
        match k {
            1 => Some(Pair::Low),
            2 => Some(Pair::High),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssemblyError {
    #[error("cell {cell}: {source}")]
    Material { cell: usize, source: MaterialError },
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("unsupported configuration: {0}")]
    Unsupported(&'static str),
}

impl AssemblyError {
    /// True when the state inverts an element (recoverable by step reduction).
    pub fn is_nonpositive_jacobian(&self) -> bool {
        matches!(
            self,
            AssemblyError::Material {
                source: MaterialError::NonpositiveJacobian(_) | MaterialError::SingularDeformation,
                ..
            }
        )
    }
}

#[derive(Debug, Clone)]
pub struct MixedSpaces {
    pub pair: Pair,
    pub u: FeSpace,
    pub k: FeSpace,
    pub stress: FeSpace,
    pub p: FeSpace,
}

impl MixedSpaces {
    pub fn new(mesh: &TriangleMesh, pair: Pair) -> Result<Self, ElementError> {
        let k = pair.order();
        Ok(MixedSpaces {
            pair,
            u: FeSpace::new(mesh, SpaceKind::DgVector(k - 1))?,
            k: FeSpace::new(mesh, SpaceKind::BdmTensor(k))?,
            stress: FeSpace::new(mesh, SpaceKind::BdmTensor(k))?,
            p: FeSpace::new(mesh, SpaceKind::CgScalar(k))?,
        })
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::new([self.u.n_dofs(), self.k.n_dofs(), self.stress.n_dofs(), self.p.n_dofs()])
    }

    /// Number of local DOFs of the assembled pair on one cell.
    pub fn local_dofs(&self) -> usize {
        self.u.local_dim() + self.k.local_dim() + self.stress.local_dim() + self.p.local_dim()
    }
}

/// Offsets of the four blocks in the stacked coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    offsets: [usize; 5],
}

impl BlockLayout {
    pub fn new(sizes: [usize; 4]) -> Self {
        let mut offsets = [0; 5];
        for i in 0..4 {
            offsets[i + 1] = offsets[i] + sizes[i];
        }
        BlockLayout { offsets }
    }

    pub fn len(&self) -> usize {
        self.offsets[4]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&self, b: usize) -> Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }

    pub fn u(&self) -> Range<usize> {
        self.block(0)
    }

    pub fn k(&self) -> Range<usize> {
        self.block(1)
    }

    pub fn stress(&self) -> Range<usize> {
        self.block(2)
    }

    pub fn p(&self) -> Range<usize> {
        self.block(3)
    }

    pub fn offset(&self, b: usize) -> usize {
        self.offsets[b]
    }
}

/// Displacement `ū` on Γ_d (imposed weakly) and traction `t̄` on Γ_t
/// (imposed strongly on the stress).
pub struct BoundaryData {
    pub displacement: VectorField,
    pub traction: TractionField,
}

impl BoundaryData {
    pub fn homogeneous() -> Self {
        BoundaryData {
            displacement: Box::new(|_| [0.0; 2]),
            traction: Box::new(|_, _| [0.0; 2]),
        }
    }
}

impl Default for BoundaryData {
    fn default() -> Self {
        Self::homogeneous()
    }
}

/// Optional volume sources. `body` replaces the material's uniform body
/// force; `stress`, `gradient` and `constraint` are subtracted inside the
/// constitutive, kinematic and constraint equations (manufactured data).
#[derive(Default)]
pub struct Forcing {
    pub body: Option<VectorField>,
    pub stress: Option<TensorField>,
    pub gradient: Option<TensorField>,
    pub constraint: Option<ScalarField>,
}

const NONE: u32 = u32::MAX;

/// (row block, column block) pairs present in the Jacobian.
const BLOCKS: [(usize, usize); 7] = [(0, 2), (1, 1), (1, 2), (1, 3), (2, 0), (2, 1), (3, 1)];

pub struct MixedProblem {
    mesh: TriangleMesh,
    pub spaces: MixedSpaces,
    pub material: Material,
    pub bc: BoundaryData,
    pub forcing: Forcing,
    layout: BlockLayout,
    rule: QuadRule<2>,
    tables: [RefTable; 3],
    edge_rule: QuadRule<1>,
    edge_tables: Vec<RefTable>,
    dirichlet_edges: Vec<(usize, usize)>,
    fixed: Vec<bool>,
    pattern: Csr,
    slots: Vec<u32>,
    slot_offsets: Vec<usize>,
    fixed_diag: Vec<usize>,
}

struct LocalIndex {
    ranges: [Range<usize>; 4],
    global: Vec<usize>,
}

impl MixedProblem {
    pub fn new(
        mesh: TriangleMesh,
        pair: Pair,
        material: Material,
        bc: BoundaryData,
        forcing: Forcing,
    ) -> Result<Self, AssemblyError> {
        mesh.check_tags()
            .map_err(|_| AssemblyError::Unsupported("boundary edges must all be tagged"))?;
        let spaces = MixedSpaces::new(&mesh, pair)?;
        let k = pair.order();
        let rule = triangle_rule(2 * k + 3).expect("volume rule");
        let tables = [
            spaces.u.table(&rule.points),
            spaces.k.table(&rule.points),
            spaces.p.table(&rule.points),
        ];
        let erule = edge_rule(2 * k + 1).expect("edge rule");
        let edge_tables = (0..3)
            .map(|i| {
                let (a, b) = ref_edge(i);
                let pts: Vec<Vec2> = erule
                    .points
                    .iter()
                    .map(|s| [a[0] + s[0] * (b[0] - a[0]), a[1] + s[0] * (b[1] - a[1])])
                    .collect();
                spaces.stress.table(&pts)
            })
            .collect();
        let dirichlet_edges = mesh
            .boundary_edges()
            .filter(|&e| mesh.tag(e) == Some(BoundaryTag::Displacement))
            .map(|e| mesh.edge_cells()[e].first)
            .collect();
        let layout = spaces.layout();
        let mut problem = MixedProblem {
            mesh,
            spaces,
            material,
            bc,
            forcing,
            layout,
            rule,
            tables,
            edge_rule: erule,
            edge_tables,
            dirichlet_edges,
            fixed: Vec::new(),
            pattern: Csr {
                n: 0,
                row_ptr: vec![0],
                col_idx: Vec::new(),
                vals: Vec::new(),
            },
            slots: Vec::new(),
            slot_offsets: Vec::new(),
            fixed_diag: Vec::new(),
        };
        problem.update_constraints()?;
        problem.build_pattern();
        Ok(problem)
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn pair(&self) -> Pair {
        self.spaces.pair
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.len()
    }

    /// Replaces the boundary data and recomputes the prescribed stress values.
    pub fn set_boundary(&mut self, bc: BoundaryData) -> Result<(), AssemblyError> {
        self.bc = bc;
        self.update_constraints()
    }

    fn update_constraints(&mut self) -> Result<(), AssemblyError> {
        self.spaces.stress.constrain_traction(&self.mesh, &*self.bc.traction)?;
        let off = self.layout.offset(2);
        let mut fixed = vec![false; self.layout.len()];
        for &(g, _) in self.spaces.stress.constraints() {
            fixed[off + g] = true;
        }
        if !self.fixed.is_empty() && fixed != self.fixed {
            return Err(AssemblyError::Unsupported("constrained stress DOFs changed"));
        }
        self.fixed = fixed;
        Ok(())
    }

    /// Global `(dof, value)` pairs fixed by the traction data.
    pub fn constraints(&self) -> Vec<(usize, f64)> {
        let off = self.layout.offset(2);
        self.spaces
            .stress
            .constraints()
            .iter()
            .map(|&(g, v)| (off + g, v))
            .collect()
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed[i]
    }

    pub fn apply_constraints(&self, x: &mut [f64]) {
        for (g, v) in self.constraints() {
            x[g] = v;
        }
    }

    /// Symbolic Jacobian pattern (values are zero).
    pub fn pattern(&self) -> &Csr {
        &self.pattern
    }

    fn local_index(&self, c: usize, out: &mut LocalIndex) {
        let sp = [&self.spaces.u, &self.spaces.k, &self.spaces.stress, &self.spaces.p];
        out.global.clear();
        let mut start = 0;
        for b in 0..4 {
            let off = self.layout.offset(b);
            let d = sp[b].cell_dofs(c);
            out.global.extend(d.iter().map(|g| off + g));
            out.ranges[b] = start..start + d.len();
            start += d.len();
        }
    }

    fn new_index() -> LocalIndex {
        LocalIndex {
            ranges: [0..0, 0..0, 0..0, 0..0],
            global: Vec::new(),
        }
    }

    fn build_pattern(&mut self) {
        let n = self.layout.len();
        let mut keys: Vec<u64> = Vec::new();
        let mut idx = Self::new_index();
        for c in 0..self.mesh.n_cells() {
            self.local_index(c, &mut idx);
            for &(rb, cb) in &BLOCKS {
                for a in idx.ranges[rb].clone() {
                    let ga = idx.global[a];
                    if self.fixed[ga] {
                        continue;
                    }
                    for b in idx.ranges[cb].clone() {
                        let gb = idx.global[b];
                        if !self.fixed[gb] {
                            keys.push(ga as u64 * n as u64 + gb as u64);
                        }
                    }
                }
            }
        }
        for (g, &f) in self.fixed.iter().enumerate() {
            if f {
                keys.push(g as u64 * n as u64 + g as u64);
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(keys.len());
        for &k in &keys {
            row_ptr[(k / n as u64) as usize + 1] += 1;
            col_idx.push((k % n as u64) as usize);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        let pattern = Csr {
            n,
            row_ptr,
            col_idx,
            vals: vec![0.0; keys.len()],
        };
        let find = |r: usize, c: usize| -> u32 {
            let cols = &pattern.col_idx[pattern.row_ptr[r]..pattern.row_ptr[r + 1]];
            (pattern.row_ptr[r] + cols.binary_search(&c).expect("entry in pattern")) as u32
        };
        let mut slots = Vec::new();
        let mut slot_offsets = Vec::with_capacity(self.mesh.n_cells() + 1);
        for c in 0..self.mesh.n_cells() {
            slot_offsets.push(slots.len());
            self.local_index(c, &mut idx);
            for &(rb, cb) in &BLOCKS {
                for a in idx.ranges[rb].clone() {
                    let ga = idx.global[a];
                    for b in idx.ranges[cb].clone() {
                        let gb = idx.global[b];
                        slots.push(if self.fixed[ga] || self.fixed[gb] {
                            NONE
                        } else {
                            find(ga, gb)
                        });
                    }
                }
            }
        }
        slot_offsets.push(slots.len());
        self.fixed_diag = (0..n).filter(|&g| self.fixed[g]).map(|g| find(g, g) as usize).collect();
        self.pattern = pattern;
        self.slots = slots;
        self.slot_offsets = slot_offsets;
    }

    fn body(&self, x: Vec2) -> Vec2 {
        let rho = self.material.rho0;
        let b = match &self.forcing.body {
            Some(f) => f(x),
            None => self.material.body_force,
        };
        [rho * b[0], rho * b[1]]
    }

    /// Evaluates the residual and, when `jac` is given, accumulates the
    /// Jacobian values into it (pattern order).
    fn assemble(&self, x: &[f64], mut jac: Option<&mut [f64]>) -> Result<Vec<f64>, AssemblyError> {
        assert_eq!(x.len(), self.layout.len());
        let mu = self.material.mu;
        let variant = self.material.constraint;
        let mut res = vec![0.0; x.len()];
        let mut idx = Self::new_index();
        let (mut bu, mut bt, mut bp) = (CellBasis::default(), CellBasis::default(), CellBasis::default());
        let mut local = Vec::new();
        let mut r_loc: Vec<f64> = Vec::new();
        let mut m_loc: Vec<f64> = Vec::new();
        let mut dq: Vec<Tensor2> = Vec::new();
        for c in 0..self.mesh.n_cells() {
            self.local_index(c, &mut idx);
            let nl = idx.global.len();
            let [ru, rk, rs, rp] = idx.ranges.clone();
            local.clear();
            local.extend(idx.global.iter().map(|&g| x[g]));
            r_loc.clear();
            r_loc.resize(nl, 0.0);
            if jac.is_some() {
                m_loc.clear();
                m_loc.resize(nl * nl, 0.0);
            }
            self.spaces.u.tabulate(c, &self.tables[0], &mut bu);
            self.spaces.k.tabulate(c, &self.tables[1], &mut bt);
            self.spaces.p.tabulate(c, &self.tables[2], &mut bp);
            let geo = self.spaces.k.geometry(c);
            let nt = bt.dim;
            for (q, (xr, w)) in self.rule.iter().enumerate() {
                let w = w * geo.det;
                let xq = geo.map(*xr);
                let kq = bt.tensor_at(q, &local[rk.clone()]);
                let pq = bt.tensor_at(q, &local[rs.clone()]);
                let divp = bt.tdiv_at(q, &local[rs.clone()]);
                let uq = bu.vector_at(q, &local[ru.clone()]);
                let prq = bp.scalar_at(q, &local[rp.clone()]);
                let err = |source| AssemblyError::Material { cell: c, source };
                let qt = materials::constraint_tensor(&kq, variant).map_err(err)?;
                let cval = materials::constraint_value(&kq, variant).map_err(err)?;

                let b = self.body(xq);
                let mut rk_t = pq - materials::elastic_stress(&kq, mu) + qt.scale(prq);
                if let Some(g) = &self.forcing.stress {
                    rk_t -= g(xq);
                }
                let mut rs_t = kq;
                if let Some(h) = &self.forcing.gradient {
                    rs_t -= h(xq);
                }
                let g_c = self.forcing.constraint.as_ref().map_or(0.0, |g| g(xq));

                let vu = &bu.vector[q * bu.dim..(q + 1) * bu.dim];
                let tt = &bt.tensor[q * nt..(q + 1) * nt];
                let td = &bt.tdiv[q * nt..(q + 1) * nt];
                let sp = &bp.scalar[q * bp.dim..(q + 1) * bp.dim];
                for (l, v) in vu.iter().enumerate() {
                    r_loc[ru.start + l] += w * (v[0] * (divp[0] + b[0]) + v[1] * (divp[1] + b[1]));
                }
                for l in 0..nt {
                    r_loc[rk.start + l] += w * tt[l].ddot(&rk_t);
                    r_loc[rs.start + l] += w * (tt[l].ddot(&rs_t) + td[l][0] * uq[0] + td[l][1] * uq[1]);
                }
                for (l, s) in sp.iter().enumerate() {
                    r_loc[rp.start + l] += w * s * (cval - g_c);
                }

                if jac.is_none() {
                    continue;
                }
                dq.clear();
                for t in tt {
                    dq.push(materials::constraint_tensor_derivative(&kq, t, variant).map_err(err)?);
                }
                for (a, v) in vu.iter().enumerate() {
                    let row = (ru.start + a) * nl;
                    for m in 0..nt {
                        m_loc[row + rs.start + m] += w * (v[0] * td[m][0] + v[1] * td[m][1]);
                    }
                }
                for a in 0..nt {
                    let row = (rk.start + a) * nl;
                    let ga = &tt[a];
                    for m in 0..nt {
                        let kk = -mu * ga.ddot(&tt[m]) + prq * ga.ddot(&dq[m]);
                        m_loc[row + rk.start + m] += w * kk;
                        m_loc[row + rs.start + m] += w * ga.ddot(&tt[m]);
                    }
                    let gq = ga.ddot(&qt);
                    for (m, s) in sp.iter().enumerate() {
                        m_loc[row + rp.start + m] += w * gq * s;
                    }
                    let row = (rs.start + a) * nl;
                    for (m, v) in vu.iter().enumerate() {
                        m_loc[row + ru.start + m] += w * (td[a][0] * v[0] + td[a][1] * v[1]);
                    }
                    for m in 0..nt {
                        m_loc[row + rk.start + m] += w * tt[a].ddot(&tt[m]);
                    }
                }
                for (a, s) in sp.iter().enumerate() {
                    let row = (rp.start + a) * nl;
                    for m in 0..nt {
                        m_loc[row + rk.start + m] += w * s * qt.ddot(&tt[m]);
                    }
                }
            }
            for (l, &g) in idx.global.iter().enumerate() {
                res[g] += r_loc[l];
            }
            if let Some(vals) = jac.as_deref_mut() {
                let slots = &self.slots[self.slot_offsets[c]..self.slot_offsets[c + 1]];
                let mut s = 0;
                for &(rb, cb) in &BLOCKS {
                    for a in idx.ranges[rb].clone() {
                        for b in idx.ranges[cb].clone() {
                            let slot = slots[s];
                            s += 1;
                            if slot != NONE {
                                vals[slot as usize] += m_loc[a * nl + b];
                            }
                        }
                    }
                }
            }
        }
        self.assemble_dirichlet(&mut res);
        for (g, v) in self.constraints() {
            res[g] = x[g] - v;
        }
        if let Some(vals) = jac {
            for &d in &self.fixed_diag {
                vals[d] = 1.0;
            }
        }
        Ok(res)
    }

    /// Subtracts `⟨τ n, ū⟩` over Γ_d from the stress rows.
    fn assemble_dirichlet(&self, res: &mut [f64]) {
        let off = self.layout.offset(2);
        let mut bt = CellBasis::default();
        for &(c, li) in &self.dirichlet_edges {
            let sp = &self.spaces.stress;
            sp.tabulate(c, &self.edge_tables[li], &mut bt);
            let verts = self.mesh.cell_vertices(c);
            let (a, b) = (verts[(li + 1) % 3], verts[(li + 2) % 3]);
            let nu = [b[1] - a[1], -(b[0] - a[0])];
            let dofs = sp.cell_dofs(c);
            for (q, (s, w)) in self.edge_rule.iter().enumerate() {
                let x = [a[0] + s[0] * (b[0] - a[0]), a[1] + s[0] * (b[1] - a[1])];
                let ub = (self.bc.displacement)(x);
                for (l, g) in dofs.iter().enumerate() {
                    let tn = bt.tensor[q * bt.dim + l].apply(nu);
                    res[off + g] -= w * (tn[0] * ub[0] + tn[1] * ub[1]);
                }
            }
        }
    }

    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        self.assemble(x, None)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<Csr, AssemblyError> {
        Ok(self.residual_and_jacobian(x)?.1)
    }

    pub fn residual_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Csr), AssemblyError> {
        let mut j = self.pattern.clone();
        let r = self.assemble(x, Some(&mut j.vals))?;
        Ok((r, j))
    }

    /// The linearised problem at the stress-free state, assembled directly
    /// from its bilinear forms. Returns the matrix and right-hand side.
    pub fn linearised_system(&self) -> Result<(Csr, Vec<f64>), AssemblyError> {
        if self.constraints().iter().any(|&(_, v)| v != 0.0) {
            return Err(AssemblyError::Unsupported(
                "the linearised problem requires zero traction data",
            ));
        }
        let n = self.layout.len();
        let mu = self.material.mu;
        let mut t = Triplets::new(n);
        let mut rhs = vec![0.0; n];
        let (mut bu, mut bt, mut bp) = (CellBasis::default(), CellBasis::default(), CellBasis::default());
        let o = [
            self.layout.offset(0),
            self.layout.offset(1),
            self.layout.offset(2),
            self.layout.offset(3),
        ];
        let fixed = |g: usize| self.fixed[g];
        for c in 0..self.mesh.n_cells() {
            self.spaces.u.tabulate(c, &self.tables[0], &mut bu);
            self.spaces.k.tabulate(c, &self.tables[1], &mut bt);
            self.spaces.p.tabulate(c, &self.tables[2], &mut bp);
            let geo = self.spaces.k.geometry(c);
            let du = self.spaces.u.cell_dofs(c);
            let dk = self.spaces.k.cell_dofs(c);
            let ds = self.spaces.stress.cell_dofs(c);
            let dp = self.spaces.p.cell_dofs(c);
            let nt = bt.dim;
            for (q, (xr, w)) in self.rule.iter().enumerate() {
                let w = w * geo.det;
                let xq = geo.map(*xr);
                let tt = &bt.tensor[q * nt..(q + 1) * nt];
                let td = &bt.tdiv[q * nt..(q + 1) * nt];
                let vu = &bu.vector[q * bu.dim..(q + 1) * bu.dim];
                let sp = &bp.scalar[q * bp.dim..(q + 1) * bp.dim];
                let b = self.body(xq);
                let g_src = self.forcing.stress.as_ref().map(|g| g(xq));
                let h_src = self.forcing.gradient.as_ref().map(|h| h(xq));
                let c_src = self.forcing.constraint.as_ref().map_or(0.0, |g| g(xq));
                // ⟨v, ∇·σ⟩ = −⟨v, ρ0 b⟩
                for (a, v) in vu.iter().enumerate() {
                    let gu = o[0] + du[a];
                    rhs[gu] -= w * (v[0] * b[0] + v[1] * b[1]);
                    for m in 0..nt {
                        let gs = o[2] + ds[m];
                        if !fixed(gs) {
                            t.push(gu, gs, w * (v[0] * td[m][0] + v[1] * td[m][1]));
                        }
                    }
                }
                // −μ⟨γ, k⟩ + ⟨γ, σ⟩ + ⟨tr γ, p⟩ = ⟨tr γ, μ⟩
                for a in 0..nt {
                    let gk = o[1] + dk[a];
                    let tra = tt[a].trace();
                    rhs[gk] += w * mu * tra;
                    if let Some(g) = &g_src {
                        rhs[gk] += w * tt[a].ddot(g);
                    }
                    for m in 0..nt {
                        t.push(gk, o[1] + dk[m], -w * mu * tt[a].ddot(&tt[m]));
                        let gs = o[2] + ds[m];
                        if !fixed(gs) {
                            t.push(gk, gs, w * tt[a].ddot(&tt[m]));
                        }
                    }
                    for (m, s) in sp.iter().enumerate() {
                        t.push(gk, o[3] + dp[m], w * tra * s);
                    }
                }
                // ⟨∇·τ, u⟩ + ⟨τ, k⟩ = ⟨τ n, ū⟩_Γd
                for a in 0..nt {
                    let gs = o[2] + ds[a];
                    if fixed(gs) {
                        continue;
                    }
                    if let Some(h) = &h_src {
                        rhs[gs] += w * tt[a].ddot(h);
                    }
                    for (m, v) in vu.iter().enumerate() {
                        t.push(gs, o[0] + du[m], w * (td[a][0] * v[0] + td[a][1] * v[1]));
                    }
                    for m in 0..nt {
                        t.push(gs, o[1] + dk[m], w * tt[a].ddot(&tt[m]));
                    }
                }
                // ⟨q, tr k⟩ = 0
                for (a, s) in sp.iter().enumerate() {
                    let gp = o[3] + dp[a];
                    rhs[gp] += w * s * c_src;
                    for m in 0..nt {
                        t.push(gp, o[1] + dk[m], w * s * tt[m].trace());
                    }
                }
            }
        }
        let mut boundary = vec![0.0; n];
        self.assemble_dirichlet(&mut boundary);
        for (g, v) in boundary.iter().enumerate() {
            rhs[g] -= v;
        }
        for (g, _) in self.constraints() {
            t.push(g, g, 1.0);
            rhs[g] = 0.0;
        }
        Ok((t.to_csr(), rhs))
    }
}

/// Displacement correction system: `⟨∇ũ, ∇v⟩ = ⟨K_h, ∇v⟩` on a continuous
/// vector space carrying Dirichlet constraints. Constrained rows become
/// identity rows, their columns are moved to the right-hand side.
pub fn correction_system(
    k_space: &FeSpace,
    k_coeffs: &[f64],
    corr: &FeSpace,
) -> Result<(Csr, Vec<f64>), AssemblyError> {
    if !matches!(corr.kind(), SpaceKind::CgVector(_)) {
        return Err(ElementError::WrongKind(corr.kind()).into());
    }
    if corr.constraints().is_empty() {
        return Err(AssemblyError::Unsupported(
            "correction needs a nonempty displacement boundary",
        ));
    }
    let n = corr.n_dofs();
    let degree = (2 * corr.order()).max(k_space.order() + corr.order()).min(10);
    let rule = triangle_rule(degree).expect("rule");
    let (tk, tc) = (k_space.table(&rule.points), corr.table(&rule.points));
    let (mut bk, mut bc) = (CellBasis::default(), CellBasis::default());
    let mut value = vec![None; n];
    for &(g, v) in corr.constraints() {
        value[g] = Some(v);
    }
    let mut t = Triplets::new(n);
    let mut rhs = vec![0.0; n];
    let mut local = Vec::new();
    for c in 0..corr.n_cells() {
        k_space.tabulate(c, &tk, &mut bk);
        corr.tabulate(c, &tc, &mut bc);
        k_space.gather(c, k_coeffs, &mut local);
        let det = corr.geometry(c).det;
        let dofs = corr.cell_dofs(c);
        for (q, (_, w)) in rule.iter().enumerate() {
            let w = w * det;
            let kq = bk.tensor_at(q, &local);
            let g = &bc.vgrad[q * bc.dim..(q + 1) * bc.dim];
            for (a, &ga) in dofs.iter().enumerate() {
                if value[ga].is_some() {
                    continue;
                }
                rhs[ga] += w * kq.ddot(&g[a]);
                for (m, &gm) in dofs.iter().enumerate() {
                    let v = w * g[a].ddot(&g[m]);
                    match value[gm] {
                        Some(fixed) => rhs[ga] -= v * fixed,
                        None => t.push(ga, gm, v),
                    }
                }
            }
        }
    }
    for &(g, v) in corr.constraints() {
        t.push(g, g, 1.0);
        rhs[g] = v;
    }
    Ok((t.to_csr(), rhs))
}

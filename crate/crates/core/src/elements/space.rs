use alloc::vec;
use alloc::vec::Vec;

use super::piola::CellGeometry;
use super::polynomial::shifted_legendre;
use super::reference::{bdm_layout, Family, ReferenceBasis, ScalarValues, VectorValues};
use super::ElementError;
use crate::math::{DenseLu, Tensor2, Vec2};
use crate::mesh::{BoundaryTag, TriangleMesh};
use crate::quadrature::{edge_rule, triangle_rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    CgScalar(usize),
    CgVector(usize),
    DgScalar(usize),
    DgVector(usize),
    BdmVector(usize),
    BdmTensor(usize),
}

impl SpaceKind {
    pub fn order(self) -> usize {
        match self {
            SpaceKind::CgScalar(k)
            | SpaceKind::CgVector(k)
            | SpaceKind::DgScalar(k)
            | SpaceKind::DgVector(k)
            | SpaceKind::BdmVector(k)
            | SpaceKind::BdmTensor(k) => k,
        }
    }

    fn family(self) -> Family {
        match self {
            SpaceKind::BdmVector(_) | SpaceKind::BdmTensor(_) => Family::BdmVector,
            _ => Family::LagrangeScalar,
        }
    }

    fn components(self) -> usize {
        match self {
            SpaceKind::CgVector(_) | SpaceKind::DgVector(_) | SpaceKind::BdmTensor(_) => 2,
            _ => 1,
        }
    }
}

/// A global finite element space on a fixed mesh.
///
/// Vector Lagrange spaces are numbered component-major, tensor BDM spaces
/// row-major (`row · n_row + vector dof`). Each local basis function is the
/// restriction of `sign · (global basis function)`.
#[derive(Debug, Clone)]
pub struct FeSpace {
    kind: SpaceKind,
    basis: ReferenceBasis,
    n_dofs: usize,
    local_dim: usize,
    dofs: Vec<usize>,
    signs: Vec<f64>,
    geometry: Vec<CellGeometry>,
    fixed: Vec<bool>,
    constraints: Vec<(usize, f64)>,
}

/// Reference basis values tabulated once at a set of reference points.
#[derive(Debug, Clone)]
pub struct RefTable {
    pub points: Vec<Vec2>,
    scalar: Vec<ScalarValues>,
    vector: Vec<VectorValues>,
}

/// Physical, sign-adjusted basis values on one cell. Entries are stored at
/// `q * dim + l` for point `q` and local function `l`; only the arrays that
/// match the space kind are filled.
#[derive(Debug, Clone, Default)]
pub struct CellBasis {
    pub n_points: usize,
    pub dim: usize,
    pub scalar: Vec<f64>,
    pub grad: Vec<Vec2>,
    pub vector: Vec<Vec2>,
    pub div: Vec<f64>,
    pub vgrad: Vec<Tensor2>,
    pub tensor: Vec<Tensor2>,
    pub tdiv: Vec<Vec2>,
}

impl CellBasis {
    pub fn scalar_at(&self, q: usize, local: &[f64]) -> f64 {
        let b = &self.scalar[q * self.dim..(q + 1) * self.dim];
        b.iter().zip(local).map(|(v, c)| v * c).sum()
    }

    pub fn grad_at(&self, q: usize, local: &[f64]) -> Vec2 {
        let mut g = [0.0; 2];
        for (v, c) in self.grad[q * self.dim..(q + 1) * self.dim].iter().zip(local) {
            g[0] += c * v[0];
            g[1] += c * v[1];
        }
        g
    }

    pub fn vector_at(&self, q: usize, local: &[f64]) -> Vec2 {
        let mut out = [0.0; 2];
        for (v, c) in self.vector[q * self.dim..(q + 1) * self.dim].iter().zip(local) {
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        out
    }

    pub fn div_at(&self, q: usize, local: &[f64]) -> f64 {
        let b = &self.div[q * self.dim..(q + 1) * self.dim];
        b.iter().zip(local).map(|(v, c)| v * c).sum()
    }

    pub fn vgrad_at(&self, q: usize, local: &[f64]) -> Tensor2 {
        let mut out = Tensor2::ZERO;
        for (v, c) in self.vgrad[q * self.dim..(q + 1) * self.dim].iter().zip(local) {
            out += v.scale(*c);
        }
        out
    }

    pub fn tensor_at(&self, q: usize, local: &[f64]) -> Tensor2 {
        let mut out = Tensor2::ZERO;
        for (v, c) in self.tensor[q * self.dim..(q + 1) * self.dim].iter().zip(local) {
            out += v.scale(*c);
        }
        out
    }

    pub fn tdiv_at(&self, q: usize, local: &[f64]) -> Vec2 {
        let mut out = [0.0; 2];
        for (v, c) in self.tdiv[q * self.dim..(q + 1) * self.dim].iter().zip(local) {
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        out
    }
}

impl FeSpace {
    pub fn new(mesh: &TriangleMesh, kind: SpaceKind) -> Result<Self, ElementError> {
        let k = kind.order();
        let family = kind.family();
        if matches!(kind, SpaceKind::CgScalar(0) | SpaceKind::CgVector(0)) {
            return Err(ElementError::Unsupported { family, order: 0 });
        }
        let basis = ReferenceBasis::new(family, k)?;
        let mut geometry = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            geometry.push(CellGeometry::new(c, mesh.cell_vertices(c))?);
        }
        let comps = kind.components();
        let base_dim = basis.dim();
        let local_dim = comps * base_dim;
        let nc = mesh.n_cells();
        let mut dofs = vec![0usize; nc * local_dim];
        let mut signs = vec![1.0; nc * local_dim];

        let base_n = match kind {
            SpaceKind::DgScalar(_) | SpaceKind::DgVector(_) => {
                for c in 0..nc {
                    for l in 0..local_dim {
                        dofs[c * local_dim + l] = c * local_dim + l;
                    }
                }
                nc * base_dim
            }
            SpaceKind::CgScalar(_) | SpaceKind::CgVector(_) => {
                let nv = mesh.n_vertices();
                let ne = mesh.n_edges();
                let per_edge = k - 1;
                let interior = if k == 3 { 1 } else { 0 };
                let n_scalar = nv + ne * per_edge + nc * interior;
                for (c, cell) in mesh.cells().iter().enumerate() {
                    let mut local = Vec::with_capacity(base_dim);
                    local.extend_from_slice(cell);
                    for &(e, s) in &mesh.cell_edges()[c] {
                        for j in 0..per_edge {
                            let jg = if s > 0.0 { j } else { per_edge - 1 - j };
                            local.push(nv + e * per_edge + jg);
                        }
                    }
                    for m in 0..interior {
                        local.push(nv + ne * per_edge + c * interior + m);
                    }
                    for comp in 0..comps {
                        for (n, g) in local.iter().enumerate() {
                            dofs[c * local_dim + comp * base_dim + n] = comp * n_scalar + g;
                        }
                    }
                }
                n_scalar
            }
            SpaceKind::BdmVector(_) | SpaceKind::BdmTensor(_) => {
                let (per_edge, per_cell) = bdm_layout(k);
                let ne = mesh.n_edges();
                let n_vec = ne * per_edge + nc * per_cell;
                for c in 0..nc {
                    let mut local = Vec::with_capacity(base_dim);
                    let mut lsign = Vec::with_capacity(base_dim);
                    for &(e, s) in &mesh.cell_edges()[c] {
                        for j in 0..per_edge {
                            local.push(e * per_edge + j);
                            // reversing the edge flips the normal and maps L_j to (−1)^j L_j
                            lsign.push(if s > 0.0 || j % 2 == 1 { 1.0 } else { -1.0 });
                        }
                    }
                    for m in 0..per_cell {
                        local.push(ne * per_edge + c * per_cell + m);
                        lsign.push(1.0);
                    }
                    for row in 0..comps {
                        for n in 0..base_dim {
                            dofs[c * local_dim + row * base_dim + n] = row * n_vec + local[n];
                            signs[c * local_dim + row * base_dim + n] = lsign[n];
                        }
                    }
                }
                n_vec
            }
        };
        let n_dofs = comps * base_n;
        Ok(FeSpace {
            kind,
            basis,
            n_dofs,
            local_dim,
            dofs,
            signs,
            geometry,
            fixed: vec![false; n_dofs],
            constraints: Vec::new(),
        })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.kind.order()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_cells(&self) -> usize {
        self.geometry.len()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.dofs[c * self.local_dim..(c + 1) * self.local_dim]
    }

    pub fn cell_signs(&self, c: usize) -> &[f64] {
        &self.signs[c * self.local_dim..(c + 1) * self.local_dim]
    }

    pub fn geometry(&self, c: usize) -> &CellGeometry {
        &self.geometry[c]
    }

    pub fn reference(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn is_constrained(&self, i: usize) -> bool {
        self.fixed[i]
    }

    /// Sorted `(global dof, prescribed value)` pairs.
    pub fn constraints(&self) -> &[(usize, f64)] {
        &self.constraints
    }

    pub fn clear_constraints(&mut self) {
        self.fixed.iter_mut().for_each(|f| *f = false);
        self.constraints.clear();
    }

    /// Local coefficients of cell `c` from a global vector.
    pub fn gather(&self, c: usize, global: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.cell_dofs(c).iter().map(|&g| global[g]));
    }

    pub fn table(&self, points: &[Vec2]) -> RefTable {
        let mut scalar = Vec::new();
        let mut vector = Vec::new();
        for &x in points {
            if self.kind.family() == Family::BdmVector {
                let mut v = VectorValues::default();
                self.basis.eval_vector(x, &mut v);
                vector.push(v);
            } else {
                let mut s = ScalarValues::default();
                self.basis.eval_scalar(x, &mut s);
                scalar.push(s);
            }
        }
        RefTable {
            points: points.to_vec(),
            scalar,
            vector,
        }
    }

    /// Physical basis values on cell `c` at the points of `table`.
    pub fn tabulate(&self, c: usize, table: &RefTable, out: &mut CellBasis) {
        let geo = &self.geometry[c];
        let signs = self.cell_signs(c);
        let nq = table.points.len();
        let dim = self.local_dim;
        out.n_points = nq;
        out.dim = dim;
        for v in [&mut out.scalar, &mut out.div] {
            v.clear();
        }
        out.grad.clear();
        out.vector.clear();
        out.vgrad.clear();
        out.tensor.clear();
        out.tdiv.clear();
        match self.kind {
            SpaceKind::CgScalar(_) | SpaceKind::DgScalar(_) => {
                for s in &table.scalar {
                    out.scalar.extend_from_slice(&s.values);
                    out.grad.extend(s.grads.iter().map(|&g| geo.grad(g)));
                }
            }
            SpaceKind::CgVector(_) | SpaceKind::DgVector(_) => {
                for s in &table.scalar {
                    for comp in 0..2 {
                        for (v, g) in s.values.iter().zip(&s.grads) {
                            let gp = geo.grad(*g);
                            let mut val = [0.0; 2];
                            val[comp] = *v;
                            out.vector.push(val);
                            out.div.push(gp[comp]);
                            out.vgrad.push(Tensor2::from_row(comp, gp));
                        }
                    }
                }
            }
            SpaceKind::BdmVector(_) => {
                for t in &table.vector {
                    for (n, (v, d)) in t.values.iter().zip(&t.divs).enumerate() {
                        let p = geo.piola(*v);
                        out.vector.push([signs[n] * p[0], signs[n] * p[1]]);
                        out.div.push(signs[n] * geo.piola_div(*d));
                    }
                }
            }
            SpaceKind::BdmTensor(_) => {
                let nb = dim / 2;
                for t in &table.vector {
                    for row in 0..2 {
                        for (n, (v, d)) in t.values.iter().zip(&t.divs).enumerate() {
                            let s = signs[row * nb + n];
                            let p = geo.piola(*v);
                            out.tensor.push(Tensor2::from_row(row, [s * p[0], s * p[1]]));
                            let mut dv = [0.0; 2];
                            dv[row] = s * geo.piola_div(*d);
                            out.tdiv.push(dv);
                        }
                    }
                }
            }
        }
    }

    fn lagrange_nodes_physical(&self, c: usize) -> Vec<Vec2> {
        let geo = &self.geometry[c];
        self.basis.nodes().iter().map(|&x| geo.map(x)).collect()
    }

    /// Local L² projection onto one cell of a discontinuous Lagrange space.
    fn project_cell(&self, c: usize, f: &dyn Fn(Vec2) -> Vec2, comps: usize) -> Vec<f64> {
        let k = self.order();
        let rule = triangle_rule((2 * k + 4).min(10)).expect("rule");
        let geo = &self.geometry[c];
        let n = self.basis.dim();
        let mut mass = vec![0.0; n * n];
        let mut rhs = vec![0.0; comps * n];
        let mut sv = ScalarValues::default();
        for (x, w) in rule.iter() {
            self.basis.eval_scalar(*x, &mut sv);
            let fv = f(geo.map(*x));
            for i in 0..n {
                for j in 0..n {
                    mass[i * n + j] += w * sv.values[i] * sv.values[j];
                }
                for comp in 0..comps {
                    rhs[comp * n + i] += w * fv[comp] * sv.values[i];
                }
            }
        }
        let lu = DenseLu::factor(n, &mass).expect("Lagrange mass matrix is SPD");
        let mut out = Vec::with_capacity(comps * n);
        for comp in 0..comps {
            out.extend(lu.solve(&rhs[comp * n..(comp + 1) * n]));
        }
        out
    }

    fn bdm_cell_dofs(&self, c: usize, f: &dyn Fn(Vec2) -> Vec2) -> Vec<f64> {
        let geo = self.geometry[c];
        let pulled = move |x: Vec2| geo.pullback(f(geo.map(x)));
        self.basis.apply_vector_dofs(&pulled)
    }

    pub fn interpolate_scalar(&self, f: &dyn Fn(Vec2) -> f64) -> Result<Vec<f64>, ElementError> {
        let mut out = vec![0.0; self.n_dofs];
        match self.kind {
            SpaceKind::CgScalar(_) => {
                for c in 0..self.n_cells() {
                    let nodes = self.lagrange_nodes_physical(c);
                    for (g, x) in self.cell_dofs(c).iter().zip(&nodes) {
                        out[*g] = f(*x);
                    }
                }
            }
            SpaceKind::DgScalar(_) => {
                let fv = |x: Vec2| [f(x), 0.0];
                for c in 0..self.n_cells() {
                    let local = self.project_cell(c, &fv, 1);
                    for (g, v) in self.cell_dofs(c).iter().zip(local) {
                        out[*g] = v;
                    }
                }
            }
            _ => return Err(ElementError::WrongKind(self.kind)),
        }
        Ok(out)
    }

    pub fn interpolate_vector(&self, f: &dyn Fn(Vec2) -> Vec2) -> Result<Vec<f64>, ElementError> {
        let mut out = vec![0.0; self.n_dofs];
        match self.kind {
            SpaceKind::CgVector(_) => {
                for c in 0..self.n_cells() {
                    let nodes = self.lagrange_nodes_physical(c);
                    let nb = nodes.len();
                    for (l, g) in self.cell_dofs(c).iter().enumerate() {
                        out[*g] = f(nodes[l % nb])[l / nb];
                    }
                }
            }
            SpaceKind::DgVector(_) => {
                for c in 0..self.n_cells() {
                    let local = self.project_cell(c, f, 2);
                    for (g, v) in self.cell_dofs(c).iter().zip(local) {
                        out[*g] = v;
                    }
                }
            }
            SpaceKind::BdmVector(_) => {
                for c in 0..self.n_cells() {
                    let local = self.bdm_cell_dofs(c, f);
                    for ((g, s), v) in self.cell_dofs(c).iter().zip(self.cell_signs(c)).zip(local) {
                        out[*g] = s * v;
                    }
                }
            }
            _ => return Err(ElementError::WrongKind(self.kind)),
        }
        Ok(out)
    }

    pub fn interpolate_tensor(&self, f: &dyn Fn(Vec2) -> Tensor2) -> Result<Vec<f64>, ElementError> {
        if !matches!(self.kind, SpaceKind::BdmTensor(_)) {
            return Err(ElementError::WrongKind(self.kind));
        }
        let mut out = vec![0.0; self.n_dofs];
        let nb = self.basis.dim();
        for c in 0..self.n_cells() {
            for row in 0..2 {
                let fr = |x: Vec2| f(x).row(row);
                let local = self.bdm_cell_dofs(c, &fr);
                let dofs = &self.cell_dofs(c)[row * nb..(row + 1) * nb];
                let signs = &self.cell_signs(c)[row * nb..(row + 1) * nb];
                for ((g, s), v) in dofs.iter().zip(signs).zip(local) {
                    out[*g] = s * v;
                }
            }
        }
        Ok(out)
    }

    fn set_constraints(&mut self, mut list: Vec<(usize, f64)>) {
        self.clear_constraints();
        list.sort_by_key(|p| p.0);
        list.dedup_by_key(|p| p.0);
        for &(g, _) in &list {
            self.fixed[g] = true;
        }
        self.constraints = list;
    }

    /// Prescribes the normal trace `P n = t̄(x, n)` of a tensor BDM space on
    /// every traction edge through its edge moments.
    pub fn constrain_traction(
        &mut self,
        mesh: &TriangleMesh,
        traction: &dyn Fn(Vec2, Vec2) -> Vec2,
    ) -> Result<(), ElementError> {
        let SpaceKind::BdmTensor(k) = self.kind else {
            return Err(ElementError::WrongKind(self.kind));
        };
        let (per_edge, per_cell) = bdm_layout(k);
        let n_vec = mesh.n_edges() * per_edge + mesh.n_cells() * per_cell;
        let rule = edge_rule((2 * k + 4).min(10)).expect("rule");
        let mut list = Vec::new();
        for e in mesh.boundary_edges() {
            let [lo, hi] = mesh.edges()[e];
            match mesh.tag(e) {
                None => return Err(ElementError::UntaggedBoundary(lo, hi)),
                Some(BoundaryTag::Displacement) => continue,
                Some(BoundaryTag::Traction) => {}
            }
            let (c, li) = mesh.edge_cells()[e].first;
            let sigma = mesh.cell_edges()[c][li].1;
            let (a, b) = (mesh.vertices()[lo], mesh.vertices()[hi]);
            let nu = [b[1] - a[1], -(b[0] - a[0])];
            let len = crate::math::norm(nu);
            let n_out = [sigma * nu[0] / len, sigma * nu[1] / len];
            let mut acc = vec![[0.0; 2]; per_edge];
            for (s, w) in rule.iter() {
                let x = [a[0] + s[0] * (b[0] - a[0]), a[1] + s[0] * (b[1] - a[1])];
                let t = traction(x, n_out);
                for (j, m) in acc.iter_mut().enumerate() {
                    let l = shifted_legendre(j, s[0]);
                    m[0] += w * t[0] * l;
                    m[1] += w * t[1] * l;
                }
            }
            for (j, m) in acc.iter().enumerate() {
                for row in 0..2 {
                    list.push((row * n_vec + e * per_edge + j, sigma * len * m[row]));
                }
            }
        }
        self.set_constraints(list);
        Ok(())
    }

    /// Prescribes nodal values of a continuous vector space on every
    /// displacement edge.
    pub fn constrain_dirichlet(
        &mut self,
        mesh: &TriangleMesh,
        value: &dyn Fn(Vec2) -> Vec2,
    ) -> Result<(), ElementError> {
        let SpaceKind::CgVector(k) = self.kind else {
            return Err(ElementError::WrongKind(self.kind));
        };
        let nv = mesh.n_vertices();
        let n_scalar = self.n_dofs / 2;
        let mut list = Vec::new();
        for e in mesh.boundary_edges() {
            let [lo, hi] = mesh.edges()[e];
            match mesh.tag(e) {
                None => return Err(ElementError::UntaggedBoundary(lo, hi)),
                Some(BoundaryTag::Traction) => continue,
                Some(BoundaryTag::Displacement) => {}
            }
            let (a, b) = (mesh.vertices()[lo], mesh.vertices()[hi]);
            let mut nodes = vec![(lo, a), (hi, b)];
            for j in 0..k - 1 {
                let s = (j + 1) as f64 / k as f64;
                nodes.push((
                    nv + e * (k - 1) + j,
                    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
                ));
            }
            for (g, x) in nodes {
                let v = value(x);
                list.push((g, v[0]));
                list.push((n_scalar + g, v[1]));
            }
        }
        self.set_constraints(list);
        Ok(())
    }
}

//! Reference bases built numerically from their dual functionals.
//!
//! Candidates are monomials of `P_k` (or `P_k²`); every DOF functional is
//! evaluated on every candidate by quadrature and the resulting moment
//! matrix is inverted, so `dof_i(φ_j) = δ_ij` holds by construction.

use alloc::vec;
use alloc::vec::Vec;

use super::polynomial::{shifted_legendre, Monomials};
use super::ElementError;
use crate::math::{DenseLu, Vec2};
use crate::quadrature::{edge_rule, triangle_rule};

pub const REF_VERTICES: [Vec2; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Start and end of local edge `i` (opposite vertex `i`).
pub fn ref_edge(i: usize) -> (Vec2, Vec2) {
    (REF_VERTICES[(i + 1) % 3], REF_VERTICES[(i + 2) % 3])
}

/// Outward normal of local edge `i` scaled by the edge length.
pub fn ref_edge_normal(i: usize) -> Vec2 {
    let (a, b) = ref_edge(i);
    [b[1] - a[1], -(b[0] - a[0])]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    LagrangeScalar,
    LagrangeVector,
    BdmVector,
}

#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    family: Family,
    order: usize,
    mono: Monomials,
    /// Row `j` holds the candidate coefficients of basis function `j`.
    coeffs: Vec<f64>,
    n_candidates: usize,
    nodes: Vec<Vec2>,
}

/// Basis values at one reference point.
#[derive(Debug, Clone, Default)]
pub struct ScalarValues {
    pub values: Vec<f64>,
    pub grads: Vec<Vec2>,
}

#[derive(Debug, Clone, Default)]
pub struct VectorValues {
    pub values: Vec<Vec2>,
    pub divs: Vec<f64>,
}

/// Lagrange nodes of order `k`: vertices, then edge nodes in local edge
/// direction, then interior nodes.
pub fn lagrange_nodes(k: usize) -> Vec<Vec2> {
    if k == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    let mut nodes: Vec<Vec2> = REF_VERTICES.to_vec();
    for i in 0..3 {
        let (a, b) = ref_edge(i);
        for j in 1..k {
            let s = j as f64 / k as f64;
            nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    match k {
        1 | 2 => {}
        3 => nodes.push([1.0 / 3.0, 1.0 / 3.0]),
        _ => unreachable!(),
    }
    nodes
}

/// Interior test fields for BDM₂: the lowest-order first-kind Nédélec space.
fn nedelec_first_kind(x: Vec2) -> [Vec2; 3] {
    [[1.0, 0.0], [0.0, 1.0], [-x[1], x[0]]]
}

pub fn bdm_dim(k: usize) -> usize {
    (k + 1) * (k + 2)
}

pub fn lagrange_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

impl ReferenceBasis {
    pub fn new(family: Family, order: usize) -> Result<Self, ElementError> {
        match (family, order) {
            (Family::LagrangeScalar | Family::LagrangeVector, 0..=3) => Ok(Self::lagrange(family, order)),
            (Family::BdmVector, 1 | 2) => Ok(Self::bdm(order)),
            _ => Err(ElementError::Unsupported { family, order }),
        }
    }

    fn lagrange(family: Family, k: usize) -> Self {
        let mono = Monomials::new(k);
        let nodes = lagrange_nodes(k);
        let n = mono.len();
        let mut m = vec![0.0; n * n];
        let mut vals = Vec::new();
        for (i, &x) in nodes.iter().enumerate() {
            mono.values(x, &mut vals);
            m[i * n..(i + 1) * n].copy_from_slice(&vals);
        }
        let coeffs = invert_dual(n, &m);
        ReferenceBasis {
            family,
            order: k,
            mono,
            coeffs,
            n_candidates: n,
            nodes,
        }
    }

    fn bdm(k: usize) -> Self {
        let mono = Monomials::new(k);
        let np = mono.len();
        let n = 2 * np;
        let mut m = vec![0.0; n * n];
        for l in 0..n {
            let (comp, idx) = (l / np, l % np);
            let cand = |x: Vec2| {
                let mut v = Vec::new();
                mono.values(x, &mut v);
                let mut out = [0.0; 2];
                out[comp] = v[idx];
                out
            };
            let dofs = bdm_dofs(k, &cand);
            for i in 0..n {
                m[i * n + l] = dofs[i];
            }
        }
        let coeffs = invert_dual(n, &m);
        ReferenceBasis {
            family: Family::BdmVector,
            order: k,
            mono,
            coeffs,
            n_candidates: n,
            nodes: Vec::new(),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions.
    pub fn dim(&self) -> usize {
        match self.family {
            Family::LagrangeScalar => self.n_candidates,
            Family::LagrangeVector => 2 * self.n_candidates,
            Family::BdmVector => self.n_candidates,
        }
    }

    /// Lagrange nodes (empty for BDM).
    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    /// Scalar Lagrange values and reference gradients.
    pub fn eval_scalar(&self, x: Vec2, out: &mut ScalarValues) {
        assert!(self.family != Family::BdmVector, "BDM basis is vector valued");
        let n = self.n_candidates;
        let mut mv = Vec::with_capacity(n);
        let mut mg = Vec::with_capacity(n);
        self.mono.values(x, &mut mv);
        self.mono.gradients(x, &mut mg);
        out.values.clear();
        out.grads.clear();
        for j in 0..n {
            let row = &self.coeffs[j * n..(j + 1) * n];
            let mut v = 0.0;
            let mut g = [0.0; 2];
            for l in 0..n {
                v += row[l] * mv[l];
                g[0] += row[l] * mg[l][0];
                g[1] += row[l] * mg[l][1];
            }
            out.values.push(v);
            out.grads.push(g);
        }
    }

    /// Vector values and reference divergences (BDM or stacked Lagrange).
    pub fn eval_vector(&self, x: Vec2, out: &mut VectorValues) {
        out.values.clear();
        out.divs.clear();
        match self.family {
            Family::BdmVector => {
                let np = self.mono.len();
                let n = self.n_candidates;
                let mut mv = Vec::with_capacity(np);
                let mut mg = Vec::with_capacity(np);
                self.mono.values(x, &mut mv);
                self.mono.gradients(x, &mut mg);
                for j in 0..n {
                    let row = &self.coeffs[j * n..(j + 1) * n];
                    let mut v = [0.0; 2];
                    let mut d = 0.0;
                    for l in 0..np {
                        v[0] += row[l] * mv[l];
                        v[1] += row[np + l] * mv[l];
                        d += row[l] * mg[l][0] + row[np + l] * mg[l][1];
                    }
                    out.values.push(v);
                    out.divs.push(d);
                }
            }
            Family::LagrangeVector | Family::LagrangeScalar => {
                let mut s = ScalarValues::default();
                self.eval_scalar(x, &mut s);
                for c in 0..2 {
                    for (v, g) in s.values.iter().zip(&s.grads) {
                        let mut val = [0.0; 2];
                        val[c] = *v;
                        out.values.push(val);
                        out.divs.push(g[c]);
                    }
                }
            }
        }
    }

    /// Applies the dual functionals of a vector family to `f`.
    pub fn apply_vector_dofs(&self, f: &dyn Fn(Vec2) -> Vec2) -> Vec<f64> {
        match self.family {
            Family::BdmVector => bdm_dofs(self.order, f),
            _ => {
                let mut out: Vec<f64> = self.nodes.iter().map(|&x| f(x)[0]).collect();
                out.extend(self.nodes.iter().map(|&x| f(x)[1]));
                out
            }
        }
    }

    /// Applies the dual functionals of the scalar Lagrange family to `f`.
    pub fn apply_scalar_dofs(&self, f: &dyn Fn(Vec2) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

fn invert_dual(n: usize, m: &[f64]) -> Vec<f64> {
    // M[i][l] = dof_i(m_l); basis j has candidate coefficients (M^{-1})[l][j]
    let inv = DenseLu::factor(n, m)
        .expect("reference DOF functionals are unisolvent")
        .inverse();
    let mut coeffs = vec![0.0; n * n];
    for j in 0..n {
        for l in 0..n {
            coeffs[j * n + l] = inv[l * n + j];
        }
    }
    coeffs
}

/// BDM_k functionals: for each local edge the normal moments against
/// shifted Legendre polynomials `L_0..L_k` in the local edge parameter
/// (unnormalised normal, so the moments are invariant under the Piola map),
/// then for `k = 2` the interior moments against first-kind Nédélec fields.
pub fn bdm_dofs(k: usize, f: &dyn Fn(Vec2) -> Vec2) -> Vec<f64> {
    let erule = edge_rule(2 * k + 2).expect("edge rule");
    let mut out = Vec::with_capacity(bdm_dim(k));
    for i in 0..3 {
        let (a, b) = ref_edge(i);
        let nu = ref_edge_normal(i);
        for j in 0..=k {
            let mut acc = 0.0;
            for (s, w) in erule.iter() {
                let x = [a[0] + s[0] * (b[0] - a[0]), a[1] + s[0] * (b[1] - a[1])];
                let v = f(x);
                acc += w * (v[0] * nu[0] + v[1] * nu[1]) * shifted_legendre(j, s[0]);
            }
            out.push(acc);
        }
    }
    if k >= 2 {
        let trule = triangle_rule(2 * k).expect("triangle rule");
        let mut acc = [0.0; 3];
        for (x, w) in trule.iter() {
            let v = f(*x);
            for (m, t) in nedelec_first_kind(*x).iter().enumerate() {
                acc[m] += w * (v[0] * t[0] + v[1] * t[1]);
            }
        }
        out.extend_from_slice(&acc);
    }
    out
}

/// Number of edge DOFs per edge and interior DOFs per cell of BDM_k.
pub fn bdm_layout(k: usize) -> (usize, usize) {
    (k + 1, bdm_dim(k) - 3 * (k + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(ReferenceBasis::new(Family::BdmVector, 1).unwrap().dim(), 6);
        assert_eq!(ReferenceBasis::new(Family::BdmVector, 2).unwrap().dim(), 12);
        assert_eq!(bdm_layout(2), (3, 3));
        assert_eq!(bdm_layout(1), (2, 0));
        for k in 0..=3 {
            let b = ReferenceBasis::new(Family::LagrangeScalar, k).unwrap();
            assert_eq!(b.dim(), lagrange_dim(k));
            assert_eq!(b.nodes().len(), lagrange_dim(k));
        }
        assert!(matches!(
            ReferenceBasis::new(Family::BdmVector, 3),
            Err(ElementError::Unsupported { .. })
        ));
        assert!(ReferenceBasis::new(Family::BdmVector, 0).is_err());
    }

    #[test]
    fn lagrange_nodal_property() {
        for k in 0..=3 {
            let b = ReferenceBasis::new(Family::LagrangeScalar, k).unwrap();
            let mut sv = ScalarValues::default();
            for (i, &x) in b.nodes().iter().enumerate() {
                b.eval_scalar(x, &mut sv);
                for (j, v) in sv.values.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((v - e).abs() < 1e-12, "k={k} node {i} fn {j}: {v}");
                }
            }
        }
    }

    #[test]
    fn bdm_dual_basis() {
        for k in 1..=2 {
            let b = ReferenceBasis::new(Family::BdmVector, k).unwrap();
            for j in 0..b.dim() {
                let f = |x: Vec2| {
                    let mut vv = VectorValues::default();
                    b.eval_vector(x, &mut vv);
                    vv.values[j]
                };
                let dofs = b.apply_vector_dofs(&f);
                for (i, d) in dofs.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((d - e).abs() < 1e-12, "k={k}: dof {i} of fn {j} = {d}");
                }
            }
        }
    }

    #[test]
    fn bdm_normal_trace_vanishes_off_own_edge() {
        let erule = edge_rule(6).unwrap();
        for k in 1..=2 {
            let b = ReferenceBasis::new(Family::BdmVector, k).unwrap();
            let mut vv = VectorValues::default();
            for j in 0..b.dim() {
                let own = if j < 3 * (k + 1) { Some(j / (k + 1)) } else { None };
                for i in 0..3 {
                    if own == Some(i) {
                        continue;
                    }
                    let (a, e) = ref_edge(i);
                    let nu = ref_edge_normal(i);
                    for (s, _) in erule.iter() {
                        let x = [a[0] + s[0] * (e[0] - a[0]), a[1] + s[0] * (e[1] - a[1])];
                        b.eval_vector(x, &mut vv);
                        let vn = vv.values[j][0] * nu[0] + vv.values[j][1] * nu[1];
                        assert!(vn.abs() < 1e-12);
                    }
                }
            }
        }
    }
}

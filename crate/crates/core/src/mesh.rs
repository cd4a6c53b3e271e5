//! Simplicial 2D meshes with oriented edges and boundary tags.
//!
//! Local edge `i` of a cell is the edge opposite local vertex `i`, traversed
//! from local vertex `i+1` to `i+2` (counter-clockwise). Global edges are
//! oriented from the lower to the higher vertex index and carry the normal
//! obtained by rotating the unit tangent 90° clockwise. The sign stored in
//! [`TriangleMesh::cell_edges`] is `+1` when the cell's outward normal agrees
//! with the global edge normal.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, Vec2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("cell {cell} has non-positive signed area {area:e}")]
    InvertedCell { cell: usize, area: f64 },
    #[error("cell {cell} references vertex {vertex} out of range")]
    VertexOutOfRange { cell: usize, vertex: usize },
    #[error("edge ({0}, {1}) is shared by more than two cells")]
    NonManifoldEdge(usize, usize),
    #[error("edge ({0}, {1}) is traversed in the same direction by both neighbours")]
    InconsistentOrientation(usize, usize),
    #[error("boundary edge ({0}, {1}) has no tag")]
    UntaggedBoundaryEdge(usize, usize),
    #[error("tagged edge ({0}, {1}) is not a boundary edge")]
    NotABoundaryEdge(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// Γ_d: displacement data imposed weakly.
    Displacement,
    /// Γ_t: traction data imposed strongly on the stress space.
    Traction,
}

/// Which diagonal splits each square of a structured mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    #[default]
    LowerLeftToUpperRight,
    UpperLeftToLowerRight,
}

/// The (cell, local edge) pairs adjacent to a global edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCells {
    pub first: (usize, usize),
    pub second: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec2>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[(usize, f64); 3]>,
    edge_cells: Vec<EdgeCells>,
    tags: Vec<Option<BoundaryTag>>,
    h: f64,
}

fn signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl TriangleMesh {
    /// Builds connectivity for counter-clockwise cells. Boundary edges start
    /// untagged.
    pub fn new(vertices: Vec<Vec2>, cells: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::InvalidArgument("mesh has no cells"));
        }
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange { cell: c, vertex: v });
                }
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if !(area > 0.0) {
                return Err(MeshError::InvertedCell { cell: c, area });
            }
        }

        // (lo, hi, cell, local edge, sign)
        let mut keys: Vec<(usize, usize, usize, usize, f64)> = Vec::with_capacity(3 * cells.len());
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..3 {
                let a = cell[(i + 1) % 3];
                let b = cell[(i + 2) % 3];
                let (lo, hi, s) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
                keys.push((lo, hi, c, i, s));
            }
        }
        keys.sort_unstable_by_key(|x| (x.0, x.1, x.2));

        let mut edges = Vec::new();
        let mut edge_cells: Vec<EdgeCells> = Vec::new();
        let mut cell_edges = vec![[(0usize, 0.0f64); 3]; cells.len()];
        let mut i = 0;
        while i < keys.len() {
            let (lo, hi, c, li, s) = keys[i];
            let e = edges.len();
            edges.push([lo, hi]);
            cell_edges[c][li] = (e, s);
            let mut ec = EdgeCells {
                first: (c, li),
                second: None,
            };
            let mut j = i + 1;
            while j < keys.len() && keys[j].0 == lo && keys[j].1 == hi {
                if ec.second.is_some() {
                    return Err(MeshError::NonManifoldEdge(lo, hi));
                }
                let (_, _, c2, li2, s2) = keys[j];
                if s2 == s {
                    return Err(MeshError::InconsistentOrientation(lo, hi));
                }
                cell_edges[c2][li2] = (e, s2);
                ec.second = Some((c2, li2));
                j += 1;
            }
            edge_cells.push(ec);
            i = j;
        }

        let n_edges = edges.len();
        let mut mesh = TriangleMesh {
            vertices,
            cells,
            edges,
            cell_edges,
            edge_cells,
            tags: vec![None; n_edges],
            h: 0.0,
        };
        mesh.h = mesh.compute_h();
        Ok(mesh)
    }

    fn compute_h(&self) -> f64 {
        let mut h: f64 = 0.0;
        for cell in &self.cells {
            for i in 0..3 {
                let d = math::norm(math::sub(self.vertices[cell[i]], self.vertices[cell[(i + 1) % 3]]));
                h = h.max(d);
            }
        }
        h
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Per cell, the `(global edge, sign)` of its three local edges.
    pub fn cell_edges(&self) -> &[[(usize, f64); 3]] {
        &self.cell_edges
    }

    pub fn edge_cells(&self) -> &[EdgeCells] {
        &self.edge_cells
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Maximum cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.h
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_cells[e].second.is_none()
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| self.is_boundary_edge(e))
    }

    pub fn tag(&self, e: usize) -> Option<BoundaryTag> {
        self.tags[e]
    }

    pub fn cell_vertices(&self, c: usize) -> [Vec2; 3] {
        let [a, b, d] = self.cells[c];
        [self.vertices[a], self.vertices[b], self.vertices[d]]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cell_vertices(c);
        signed_area(a, b, d)
    }

    pub fn edge_midpoint(&self, e: usize) -> Vec2 {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Tags every boundary edge from its midpoint; interior edges are untouched.
    pub fn tag_boundary<F: Fn(Vec2) -> BoundaryTag>(mut self, predicate: F) -> Self {
        for e in 0..self.edges.len() {
            if self.is_boundary_edge(e) {
                self.tags[e] = Some(predicate(self.edge_midpoint(e)));
            }
        }
        self
    }

    /// Tags the boundary edge `(a, b)` (either vertex order).
    pub fn set_tag(&mut self, a: usize, b: usize, tag: BoundaryTag) -> Result<(), MeshError> {
        let key = if a < b { [a, b] } else { [b, a] };
        let e = self
            .edges
            .binary_search(&key)
            .map_err(|_| MeshError::NotABoundaryEdge(key[0], key[1]))?;
        if !self.is_boundary_edge(e) {
            return Err(MeshError::NotABoundaryEdge(key[0], key[1]));
        }
        self.tags[e] = Some(tag);
        Ok(())
    }

    /// Fails on the first untagged boundary edge.
    pub fn check_tags(&self) -> Result<(), MeshError> {
        for e in self.boundary_edges() {
            if self.tags[e].is_none() {
                let [a, b] = self.edges[e];
                return Err(MeshError::UntaggedBoundaryEdge(a, b));
            }
        }
        Ok(())
    }

    pub fn count_tagged(&self, tag: BoundaryTag) -> usize {
        self.tags.iter().filter(|t| **t == Some(tag)).count()
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.cells.len() as i64
    }

    /// Number of closed boundary loops (outer boundary plus holes).
    pub fn boundary_loops(&self) -> usize {
        // each boundary vertex has exactly two boundary edges on a manifold
        let mut next = vec![usize::MAX; self.vertices.len()];
        let mut starts = Vec::new();
        for e in self.boundary_edges() {
            let (c, li) = self.edge_cells[e].first;
            let cell = self.cells[c];
            let a = cell[(li + 1) % 3];
            let b = cell[(li + 2) % 3];
            next[a] = b;
            starts.push(a);
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut loops = 0;
        for s in starts {
            if seen[s] {
                continue;
            }
            loops += 1;
            let mut v = s;
            while !seen[v] {
                seen[v] = true;
                v = next[v];
                if v == usize::MAX {
                    break;
                }
            }
        }
        loops
    }

    /// Signed area enclosed by the boundary loops (shoelace over boundary
    /// edges traversed with the domain on the left).
    pub fn boundary_polygon_area(&self) -> f64 {
        let mut area = 0.0;
        for e in self.boundary_edges() {
            let (c, li) = self.edge_cells[e].first;
            let cell = self.cells[c];
            let a = self.vertices[cell[(li + 1) % 3]];
            let b = self.vertices[cell[(li + 2) % 3]];
            area += 0.5 * (a[0] * b[1] - b[0] * a[1]);
        }
        area
    }

    pub fn total_area(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_area(c)).sum()
    }

    /// Barycentric coordinates of `x` in cell `c`.
    pub fn barycentric(&self, c: usize, x: Vec2) -> [f64; 3] {
        let [a, b, d] = self.cell_vertices(c);
        let area = signed_area(a, b, d);
        let l0 = signed_area(x, b, d) / area;
        let l1 = signed_area(a, x, d) / area;
        [l0, l1, 1.0 - l0 - l1]
    }

    /// Lowest-index cell containing `x` within barycentric tolerance `tol`.
    pub fn locate(&self, x: Vec2, tol: f64) -> Option<usize> {
        (0..self.cells.len()).find(|&c| self.barycentric(c, x).iter().all(|&l| l >= -tol))
    }
}

/// `2n²` counter-clockwise triangles on the unit square.
pub fn structured_square_mesh(n: usize, diagonal: Diagonal) -> Result<TriangleMesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidArgument("cells per side must be at least 1"));
    }
    let m = n + 1;
    let mut vertices = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * m + i;
            let v10 = v00 + 1;
            let v01 = v00 + m;
            let v11 = v01 + 1;
            match diagonal {
                Diagonal::LowerLeftToUpperRight => {
                    cells.push([v00, v10, v11]);
                    cells.push([v00, v11, v01]);
                }
                Diagonal::UpperLeftToLowerRight => {
                    cells.push([v00, v10, v01]);
                    cells.push([v10, v11, v01]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, cells)
}

/// Applies `map` to every vertex. Connectivity and tags are kept.
pub fn map_mesh<F: Fn(Vec2) -> Vec2>(mesh: &TriangleMesh, map: F) -> Result<TriangleMesh, MeshError> {
    let vertices: Vec<Vec2> = mesh.vertices.iter().map(|&x| map(x)).collect();
    for (c, cell) in mesh.cells.iter().enumerate() {
        let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
        if !(area > 0.0) {
            return Err(MeshError::InvertedCell { cell: c, area });
        }
    }
    let mut out = mesh.clone();
    out.vertices = vertices;
    out.h = out.compute_h();
    Ok(out)
}

/// `(s, t) ∈ [0, 0.5]² ↦` quarter annulus with radii 0.5 and 1.
pub fn quarter_annulus_map(p: Vec2) -> Vec2 {
    let radius = 0.5 + p[0];
    let angle = core::f64::consts::PI * p[1];
    [radius * math::cos(angle), radius * math::sin(angle)]
}

/// Unit square ↦ Cook's membrane with corners (0,0), (48,44), (48,60), (0,44).
pub fn cook_map(p: Vec2) -> Vec2 {
    let (s, t) = (p[0], p[1]);
    [48.0 * s, 44.0 * t + s * (44.0 - 28.0 * t)]
}

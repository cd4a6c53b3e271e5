//! Four-field mixed finite elements for incompressible nonlinear elasticity in 2D.
//!
//! The unknowns are a discontinuous displacement `u`, the displacement
//! gradient `K`, the first Piola–Kirchhoff stress `P` and a continuous
//! pressure `p`. `K` and `P` live in tensor-valued BDM spaces (row-wise
//! H(div)), `u` in discontinuous vector Lagrange and `p` in continuous
//! Lagrange. Two element pairs are supported: `P̄0 d1 d1 P1` ([`Pair::Low`])
//! and `P̄1 d2 d2 P2` ([`Pair::High`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the sparse
//! direct solver backend and the benchmark drivers live in the `ddfem`
//! companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod elements;
pub mod exact;
pub mod materials;
pub mod math;
pub mod mesh;
pub mod postprocess;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use assembly::{BlockLayout, BoundaryData, Forcing, MixedProblem, MixedSpaces, Pair};
pub use materials::{Constraint, Material};
pub use math::Tensor2;
pub use mesh::{BoundaryTag, TriangleMesh};

//! Reference elements, affine/Piola maps and global finite element spaces.

pub mod piola;
pub mod polynomial;
pub mod reference;
pub mod space;

pub use piola::CellGeometry;
pub use reference::{Family, ReferenceBasis};
pub use space::{CellBasis, FeSpace, RefTable, SpaceKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ElementError {
    #[error("unsupported element: {family:?} of order {order}")]
    Unsupported { family: Family, order: usize },
    #[error("cell {cell} has nonpositive geometric Jacobian determinant {det}")]
    InvertedCell { cell: usize, det: f64 },
    #[error("boundary edge ({0}, {1}) has no tag")]
    UntaggedBoundary(usize, usize),
    #[error("operation not available for space {0:?}")]
    WrongKind(SpaceKind),
}

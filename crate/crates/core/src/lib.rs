//! Exact classification of Calabi–Yau complete intersections cut out by
//! nef-partitions in fake weighted projective spaces.

pub mod algebra;
pub mod arith;
pub mod autgroup;
pub mod classify;
pub mod dataset;
pub mod error;
pub mod iso;
pub mod lattice;
pub mod maxcodim;
pub mod palp;
pub mod tables;
pub mod torsion;
pub mod weights;

pub use algebra::{ClassElement, ClassGroupShape, DegreeMatrix, NefPartition, TorsionRow, VertexMatrix, WeightVector};
pub use error::{Error, Result};

//! Stratified sampling over equal-measure partitions of the unit cube,
//! discrepancy functionals, the reproducing-kernel worst-case error and a
//! replication engine for expected-error experiments.

pub mod discrepancy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod hilbert;
pub mod partition;
pub mod quadrature;
pub mod sampling;
pub mod sobolev;
pub mod vdc;

pub use error::{Error, Result};
pub use geometry::{box_count, AnchoredBox, Point, PointSet};
pub use partition::{count_boundary_cells, Cell, CellKind, Partition, PartitionKind, PartitionSpec};
pub use sampling::{sample, RngStream, Sampler, SamplerSpec, Strategy};

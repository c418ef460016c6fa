//! Online binary space partitioning forests.
//!
//! Each tree partitions feature space with oblique cuts that span two
//! coordinates at a time. Nodes are represented by the convex hulls of their
//! points in every coordinate pair, so the trees grow over the region the data
//! actually covers, and new points extend hulls, insert cuts above existing
//! subtrees, or refine leaves as the budget grows.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forest;
pub mod geometry;
pub mod io;
pub mod online;
pub mod partition;
pub mod store;
pub mod validation;

pub use error::{Error, Result};
pub use forest::{BudgetSchedule, Forest, ForestConfig, ScheduleKind, Task};
pub use geometry::{Cut, Direction, Point2, Polygon2D, Side};
pub use partition::{BspTree, HullBundle, TreeConfig};
pub use store::{Label, LeafStats, PointStore};

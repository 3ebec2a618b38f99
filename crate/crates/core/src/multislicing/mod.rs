//! Dyadic pixelization, covering numbers, regularization, robust measures and
//! small-instance checks of projection inequalities.
//!
//! Covering numbers are dyadic-cell proxies throughout. The constants in the
//! empirical bound checks are our own choices, not certified values.

mod chernoff;
mod dyadic;
mod exceptional;
mod regularize;
mod robust;
mod visual;

pub use chernoff::chernoff_bound;
pub use dyadic::{
    covering_number, covering_number_box, greedy_ball_cover, pixelize, projected_covering_number, Cell,
    DyadicPartition, PointCloud, MAX_LEVEL, SEPARATION_CHECK_LIMIT,
};
pub use exceptional::{exceptional_set_estimate, is_exceptional, ExceptionalMode, ExceptionalParams};
pub use regularize::{is_equidistributed, is_regular, regularize, Regularized};
pub use robust::{robust_decompose, unit_ball_volume, verify_witness, BallFamily, RobustWitness, WeightedCloud};
pub use visual::{visual_inequality_check, ProjectionDatum, VisualReport};

//! Virtual gear hobbing: generating kinematics of a worm hob, the as-cut
//! flank as the discrete envelope of cutter poses, and flank metrology
//! against the theoretical involute helicoid.

// `!(x > 0.0)` in validation also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cutting;
pub mod error;
pub mod gear;
pub mod hob;
pub mod kinematics;
pub mod metrology;
pub mod stl;
pub mod sweep;

pub use error::{Error, Result};

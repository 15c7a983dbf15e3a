//! Numerical electromagnetics toolkit for on-chip antennas: material models,
//! closed-form design equations, a nonuniform-grid FDTD solver with CPML,
//! lumped ports and near-to-far-field transform, and cavity mode analytics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cavity;
pub mod constants;
pub mod design;
pub mod error;
pub mod fdtd;
pub mod grid;
pub mod materials;
pub mod postproc;
pub mod scene;
pub mod special;

pub use error::{Error, Result};

//! Sensing matrix design for block-sparse compressive sensing.
//!
//! The design objective is the minimum sensing capacity over all pairs of
//! signal blocks, `min_r ln det(A_r^H A_r + beta I)`, maximized over the
//! parameters of a sensing model with a method of multipliers. Recovery uses
//! joint l2/l1 minimization, and `bench` measures success-rate curves.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod blocks;
pub mod capacity;
pub mod design_opt;
pub mod error;
pub mod linalg;
pub mod models;
pub mod recovery;

pub use blocks::{BlockLayout, BlockSpec, BlockStructure, PairSupport};
pub use capacity::{block_ric, capacity_report, BlockRicResult, CapacityReport, DEFAULT_BETA};
pub use design_opt::{design, design_from_seed, DesignOptions, DesignResult, DesignState, Termination};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use num_complex::Complex64;
pub use models::{DenseModel, EmGeometry, EmModel, FourierModel, ModelDescriptor, SensingModel};
pub use recovery::{solve_group_bp, solve_l1, GroupBasisPursuit, RecoveryOptions, RecoveryProblem, RecoveryResult};

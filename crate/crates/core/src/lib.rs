//! Computing-mode selection and time allocation for wireless powered
//! mobile-edge computing networks with binary offloading.
//!
//! Each device either computes locally on harvested energy or offloads its
//! whole task to the access point. Given the modes, [`time_alloc`] finds the
//! optimal energy-transfer / offloading split; [`mode_cd`] and [`mode_admm`]
//! search over the modes; [`benchmarks`] holds the reference schemes and
//! [`harness`] runs seeded experiment sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod channel_gen;
pub mod error;
pub mod harness;
pub mod lambertw;
pub mod mode_admm;
pub mod mode_cd;
pub mod model;
pub mod time_alloc;

pub use error::{Error, Result};
pub use model::{
    local_rate, objective, offload_rate, Allocation, Mode, ModeSelection, NetworkInstance, SolveReport,
    SystemParams,
};

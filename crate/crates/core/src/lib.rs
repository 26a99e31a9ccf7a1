//! Time allocation for a multi-function cognitive radar.
//!
//! The crate is layered bottom-up:
//!
//! - [`sim`]: ground-truth targets, constant-velocity motion and range/azimuth measurements.
//! - [`tracking`]: EKF tracks, dwell-dependent measurement noise, GNN association and
//!   3-of-4 track initialisation.
//! - [`scanning`]: Albersheim detection threshold, maximum detectable range and the
//!   surveillance metric Γ.
//! - [`env`]: the constrained MDP wrapping the three layers above, with the Lagrangian
//!   reward and the dual-variable update.
//! - [`drl`]: from-scratch MLPs, Adam, replay, DDPG and SAC.
//! - [`moo`]: dominance, non-dominated sorting, NSGA-II and 2-D hypervolume.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{} vs {} (tol {})", a, b, $tol);
    }};
}

pub mod drl;
pub mod env;
pub mod error;
pub mod moo;
pub mod scanning;
pub mod sim;
pub mod tracking;

pub use error::{Error, Result};

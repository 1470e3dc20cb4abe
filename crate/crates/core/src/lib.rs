//! Cramér-Rao position and rotation error bounds (PEB/REB) for a mmWave MIMO
//! positioning link assisted by several reconfigurable intelligent surfaces,
//! plus particle-swarm optimization of the surface phase shifts.
//!
//! The pipeline is:
//!
//! 1. [`geometry::compute_geometry`] turns BS/RIS/MU placement into delays and angles,
//!    and [`geometry::jacobian_t`] gives their derivatives w.r.t. `(p_x, p_y, α)`.
//! 2. [`channel::ChannelRealization`] holds path losses, gains, steering vectors and
//!    the precoder; [`channel::mean_signal`] is the noiseless received signal.
//! 3. [`fim`] assembles the channel-domain Fisher information, maps it to the
//!    position domain and extracts PEB/REB.
//! 4. [`optimizer`] builds random, beam-aligned and PSO-optimized phase profiles.

pub mod channel;
pub mod error;
pub mod fim;
pub mod geometry;
pub mod optimizer;
pub mod par;
pub mod scenario;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

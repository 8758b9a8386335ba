//! Forward-link Monte Carlo simulator for a multi-beam geostationary
//! satellite system with full frequency reuse.
//!
//! The simulated pipeline per iteration: drop users uniformly into each
//! beam footprint, synthesise noise-normalised feed-to-user channel
//! coefficients, group each beam's users into multicast clusters with one
//! of four strategies, serve the clusters over TDMA frames (all beams
//! transmit in every frame), precode each frame with regularised
//! least-squares weights under per-feed or total power normalisation, and
//! map every cluster's worst-member SINR to a served spectral efficiency.
//!
//! Modules are layered bottom-up:
//!
//! * [`math`] — scalar helpers: dB conversions, a Bessel `J1`
//!   approximation, seed derivation, summary statistics.
//! * [`linalg`] — dense complex matrices and a Hermitian
//!   positive-definite solver.
//! * [`geometry`] — spherical-Earth beam layouts, hex grids, user drops,
//!   slant ranges.
//! * [`channel`] — link budget, feed patterns, channel coefficients.
//! * [`clustering`] — the four grouping strategies over two feature
//!   spaces.
//! * [`precoding`] — equivalent channels, MMSE weights, power
//!   normalisation, SINRs.
//! * [`link`] — threshold ladder and Shannon rate models.
//! * [`montecarlo`] — configuration, the per-iteration pipeline, parallel
//!   execution, aggregation, and report output.

pub mod channel;
pub mod clustering;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod link;
pub mod math;
pub mod montecarlo;
pub mod precoding;

pub use error::{Error, Result};
pub use montecarlo::{GridPoint, RateReport, SimConfig, SimContext};

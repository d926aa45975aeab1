//! Energy-driven long-run growth model.
//!
//! The crate links world GDP to primary energy consumption through a
//! Cobb-Douglas production function whose residual productivity grows with
//! cumulative energy use. It is organised bottom-up:
//!
//! - [`series`]: year-indexed series and their arithmetic.
//! - [`ingest`]: input tables, manifests, energy aggregation and conversions.
//! - [`residual`]: the energy-productivity residual, its calibration and the
//!   structure of its annual growth.
//! - [`balanced`]: closed-form capital dynamics and fixed points.
//! - [`sim`]: fixed-step numerical integration of the capital systems.
//! - [`scenario`]: forward projections of energy and GDP under policies.
//! - [`cli`]: the command-line front end.

pub mod balanced;
pub mod cli;
pub mod ingest;
pub mod residual;
pub mod scenario;
pub mod series;
pub mod sim;

pub use series::{AnnualSeries, NormalizedSeries, Unit, Year};

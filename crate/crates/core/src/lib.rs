//! Stochastic zonal demand forecasting and heterogeneous asset
//! location-allocation for maritime search and rescue.
//!
//! The pipeline runs in stages: [`ingest`] cleans event records, [`zoning`]
//! clusters them into demand zones, [`distfit`] fits monthly count and
//! response models, [`mcsim`] turns those into integer demand scenarios, and
//! [`milp`] locates and allocates the fleet exactly. [`pipeline`] wires the
//! stages to on-disk artifacts driven by a run manifest.

pub mod distfit;
pub mod error;
pub mod exec;
pub mod geo;
pub mod ingest;
pub mod mcsim;
pub mod milp;
pub mod pipeline;
pub mod zoning;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geo::GeoPoint;

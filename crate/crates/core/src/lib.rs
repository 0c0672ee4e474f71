//! Time-of-day car accessibility on road networks with speed profiles.
//!
//! The crate builds origin × destination × departure-slot travel-time cubes
//! over a time-dependent network, turns them into gravity-type potential
//! accessibility, distorts reference maps into radial time cartograms and
//! renders animation frames as SVG.

pub mod accessibility;
pub mod cartogram;
mod csvio;
pub mod error;
pub mod geometry;
pub mod network;
pub mod pipeline;
pub mod render;
pub mod routing;
pub mod zoning;

pub use error::{Error, Result};

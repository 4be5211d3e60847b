//! Betti numbers and torsion of real zero sets of homogeneous polynomial
//! systems on the sphere and on projective space.
//!
//! The pipeline samples a grid, certifies a point cloud near the zero set
//! with alpha-theory estimates ([`covering`]), builds the nerve of a ball
//! cover around it ([`nerve`]) and reads off homology from Smith normal
//! forms ([`homology`]). [`pipeline::run_homology`] runs all three.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covering;
pub mod error;
pub mod grid;
pub mod homology;
pub mod meb;
pub mod nerve;
mod par;
pub mod pipeline;
pub mod pointestimates;
pub mod polysys;
pub mod randharness;

pub use error::{Error, Result};
pub use polysys::PolynomialSystem;

//! Constructive machinery for approximating planar BV maps by finitely
//! piecewise-affine homeomorphisms.
//!
//! The crate is organised around the stages of the approximation pipeline:
//!
//! * [`geom`] — robust planar geometry kernel (predicates, triangulations,
//!   piecewise-affine maps, geodesic distance in Jordan polygons),
//! * [`mapcat`] — the analytic catalogue of BV test maps with closed-form
//!   derivative-measure oracles,
//! * [`grid`] — straight and non-straight grids on `Q(0,1) = (-1,1)^2` and
//!   admissibility checks,
//! * [`rep`] — geometric representatives on grids, spiral replacement of
//!   crossings, the non-straight-to-straight transfer and the injective
//!   piecewise-linear approximation machinery,
//! * [`extend`] — homeomorphic extension algorithms from boundary data,
//! * [`pipeline`] — the full area-strict approximation pipeline with
//!   convergence metrics.

pub mod error;
pub mod extend;
pub mod geom;
pub mod grid;
pub mod mapcat;
pub mod pipeline;
pub mod rep;

pub use error::{Error, Result};

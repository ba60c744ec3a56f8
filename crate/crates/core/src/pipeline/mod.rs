//! Area-strict approximation pipeline: singular-support isolation, dyadic
//! classification, vertex perturbation, skeleton boundary map, per-category
//! homeomorphic extension and convergence metrics.
//!
//! Stages (each verified against the closed-form measure oracles):
//!
//! 1. [`isolate_singular_support`] — thin rectangle covers of the jump set
//!    with small absolutely continuous mass,
//! 2. [`classify_dyadic`] — partition of the dyadic squares into categories
//!    with quantitative measure conclusions, scanning the level `K` upward
//!    until every conclusion verifies,
//! 3. [`perturb_vertices`] — random perturbation of the dyadic lattice into
//!    a convex quadrilateral mesh whose edges pass per-edge quality checks,
//! 4. [`build_boundary_map`] — an injective piecewise-linear map on the mesh
//!    skeleton obtained from the filled restriction of the test map,
//! 5. [`assemble_homeo`] — per-quadrilateral extension dispatched by
//!    category and glued into one certified piecewise-affine homeomorphism,
//! 6. [`run_sequence`] — the full pipeline over a decreasing list of scales
//!    with an L¹/variation convergence report.

mod assemble;
mod classify;
mod metrics;
mod perturb;
mod skeleton;

pub use assemble::{assemble_homeo, AssembledMap};
pub use classify::{classify_dyadic, isolate_singular_support, square_rect};
pub use metrics::{convergence_csv, run_sequence, ConvergenceReport, ReportRow, RunArtifacts};
pub use perturb::{perturb_vertices, EdgeCheck, PerturbedMesh};
pub use skeleton::{build_boundary_map, Chain, SkeletonLedger, SkeletonMap};

use nalgebra::Matrix2;

/// Per-square category of the dyadic classification.
///
/// `F` marks the squares covering the singular support, with `E` the subset
/// carrying singular mass at a good polar-decomposition point. `G` squares
/// have a uniformly positive Jacobian at the reference point, `T` squares a
/// vanishing one, and `W` collects the remainder (including the forced
/// boundary collar). `Plain` squares are those on which the map is exactly
/// the identity; they bypass the quantitative oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    F,
    E,
    G,
    T,
    W,
    Plain,
}

impl Category {
    pub fn label(self) -> &'static str {
        match self {
            Category::F => "F",
            Category::E => "E",
            Category::G => "G",
            Category::T => "T",
            Category::W => "W",
            Category::Plain => "plain",
        }
    }
}

/// Per-square classification data.
#[derive(Debug, Clone)]
pub struct SquareInfo {
    pub category: Category,
    /// Reference differentiability point inside the square.
    pub w: crate::geom::Point2,
    /// Derivative of the absolutely continuous body at `w`.
    pub grad: Matrix2<f64>,
    /// For `E` squares: the (jump direction, jump normal) pair at `w`.
    pub polar: Option<(crate::geom::Vec2, crate::geom::Vec2)>,
}

/// Output of [`classify_dyadic`]: the dyadic level, the tolerance scale, the
/// Jacobian threshold and one [`SquareInfo`] per square (row-major, `2^K`
/// squares per row over `Q(0,1)`).
#[derive(Debug, Clone)]
pub struct SquareClassification {
    pub k: u32,
    pub eps: f64,
    pub alpha: f64,
    pub squares: Vec<SquareInfo>,
}

impl SquareClassification {
    pub fn n(&self) -> usize {
        1usize << self.k
    }

    pub fn square(&self, ix: usize, iy: usize) -> &SquareInfo {
        &self.squares[iy * self.n() + ix]
    }

    pub fn count(&self, c: Category) -> usize {
        self.squares.iter().filter(|s| s.category == c).count()
    }
}

/// Tunable pipeline constants. `c` is the acceptance-threshold constant used
/// in every quantitative budget; the remaining fields control the sampling
/// budgets and numerical tolerances of the constructive stages.
#[derive(Debug, Clone)]
pub struct PipelineParams {
    /// Threshold constant in all quantitative budgets.
    pub c: f64,
    /// Transversality threshold for edges crossing the jump set.
    pub beta: f64,
    /// Per-vertex redraw budget in the perturbation stage.
    pub budget: usize,
    /// RNG seed for the perturbation stage.
    pub seed: u64,
    /// Blend weight towards the identity used to injectivise the skeleton
    /// map; scales with the current `eps`.
    pub blend: f64,
    /// Maximum dyadic level scanned by the classification.
    pub k_max: u32,
    /// Minimum dyadic level scanned by the classification.
    pub k_min: u32,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            c: 64.0,
            beta: 0.05,
            budget: 64,
            seed: 7,
            blend: 0.05,
            k_max: 12,
            k_min: 4,
        }
    }
}

//! Homeomorphic extension operators: given an injective piecewise-linear
//! boundary map on a convex polygon, produce a finitely piecewise-affine
//! homeomorphism of the whole polygon with measured variation bounds.

pub mod boundary;
pub mod componentwise;
pub mod corpus;
pub mod corner;
pub mod degenerate;
pub mod hp;
pub mod report;
pub mod width;

pub use boundary::{square_identity, square_loop, BoundaryData};
pub use componentwise::{extend_componentwise, ComponentwiseReport};
pub use corner::affine_corner_extension;
pub use corpus::{random_star_boundary, run_hp_corpus, CorpusSample, CorpusSummary};
pub use degenerate::{extend_degenerate, DegenerateReport};
pub use hp::{extend_hp, HpReport, MAX_REFINEMENT_ROUNDS};
pub use report::{extension_csv, ExtensionRecord};
pub use width::{straight_width_integral, width_integral, width_profile, WidthProfile};

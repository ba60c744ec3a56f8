//! Geometric representatives on grids, spiral replacement of crossings,
//! small-variation rectangles, the non-straight-to-straight transfer,
//! arrival grids, generalized segments, and the injective PL approximation
//! machinery.

pub mod arrival;
pub mod genseg;
pub mod geomrep;
pub mod injective;
pub mod rectangle;
pub mod repetition;
pub mod spiral;
pub mod transfer;

pub use arrival::{choose_arrival_grid, ArrivalGrid, ArrivalHit};
pub use genseg::{generalized_segment, GeneralizedSegment};
pub use geomrep::{build_geom_rep, ArcRep, GeomRep, TAU_REP};
pub use injective::{build_injective_pl_approx, HProvider, PlGridMap};
pub use rectangle::{select_small_tv_rectangle, SmallTvRectangle};
pub use repetition::{repetition_bound, RepetitionCheck};
pub use spiral::{base_spiral, spiral_replacement, SpiralReplacement};
pub use transfer::{transfer_nonstraight_to_straight, Transfer};

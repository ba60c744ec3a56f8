//! Library half of the command-line driver: configuration parsing and
//! artifact rendering, kept separate from `main` so they can be tested.

pub mod config;
pub mod render;

pub use config::{parse_config, parse_config_str, ConfigError, RunConfig};
pub use render::{covered_outside_singular, manifest, mesh_svg, render_outputs};

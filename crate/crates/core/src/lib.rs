pub mod assemble;
pub mod cli;
pub mod cut;
pub mod error;
pub mod fair;
pub mod film;
pub mod geom;
pub mod export;
pub mod graph;
pub mod mesh;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod presets;
pub mod sparse;
pub mod subdiv;

pub use error::{Error, Result};

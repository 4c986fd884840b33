//! Cold-chain network design for routine vaccination: outreach-post
//! selection, demand aggregation, drone-hub location models, and the
//! experiment drivers around them.

pub mod audit;
pub mod experiments;
pub mod formulation;
pub mod geo;
pub mod io;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod solve;

pub use model::{validate_instance, Instance, Solution};

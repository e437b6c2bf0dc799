//! Continuous-variable simulation of collective atomic spin teleportation
//! and swapping with EPR light.

pub mod dsl;
pub mod engine;
pub mod feasibility;
pub mod gaussian;
pub mod oracle;
pub mod program;
pub mod protocols;
pub mod spin_light;
pub mod validation;

//! Quotient-aware EM for latent-variable models whose parameters are only
//! identified up to a symmetry group, together with calculators for the
//! contraction, concentration, and IPM envelopes that govern them.

pub mod bounds;
pub mod dataset;
pub mod em;
pub mod groups;
pub mod harness;
pub mod ipm;
pub mod models;
pub mod numerics;
pub mod params;
pub mod rng;

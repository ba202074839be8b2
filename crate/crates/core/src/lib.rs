//! Max-3-XOR gap instances and a two-round SDP rounding pipeline.
//!
//! The crate builds tripartite Max-C instances (C = G₃ ∪ G₁, the triples
//! whose product is +1), either from simple planted/random families or by
//! composing a dictatorship test with a small Label-Cover instance, and runs
//! a two-round quadratic-program rounding scheme on their cubic Fourier
//! part. A brute-force oracle checks every measured value.

pub mod distributions;
pub mod fourier;
pub mod gadget;
pub mod instances;
pub mod families;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod sdp;
pub mod sign;

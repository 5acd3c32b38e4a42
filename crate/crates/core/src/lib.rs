//! Distributed cooperative ISAC design for transmissive-RIS transceivers.
//!
//! A base station with a transmissive RIS serves `K` cooperative users (CUEs)
//! with a rate-splitting signal. The CUEs decode the common stream, re-encode
//! it and forward it to `M` destination users (DUEs) in a blocked region, and
//! at the same time use the forwarded signal as a radar probe. The crate
//! synthesizes that scenario, evaluates its communication and sensing
//! metrics, and solves the max-min radar mutual information design with a
//! consensus ADMM whose subproblems all have closed-form updates.
//!
//! Module map:
//! - [`tensorops`]: index vectors, masked vectorization, block expansion.
//! - [`channel`]: geometry and channel synthesis.
//! - [`metrics`]: rates, RMI, objective and constraint checking.
//! - [`admm`]: the consensus ADMM engine.
//! - [`scenario`]: the reference deployment.
//! - [`recovery`]: threshold recovery of binary scheduling variables.
//! - [`oracle`]: finite-difference verification of every closed-form update.

pub mod admm;
pub mod channel;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod recovery;
pub mod scenario;
pub mod tensorops;

pub use error::{Error, Result};
pub use num_complex::Complex64;

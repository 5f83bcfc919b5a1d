//! Statistical model of the receive SNR in a RIS-assisted MIMO link over
//! cascaded Rician fading.
//!
//! The crate models a transmitter (URA) whose signal reaches a receiver
//! (ULA) only through a reconfigurable intelligent surface (URA).  Both hops
//! fade independently with Rician statistics; conditioned on the RIS
//! configuration, the cascaded channel has a matrix normal law whose mean is
//! rank one and whose receive-side covariance has an explicit two-eigenvalue
//! structure.  The post-combining SNR is then `rho_bar` times a quadratic
//! form in Gaussians, i.e. a weighted sum of noncentral chi-square terms.
//!
//! Modules:
//! - [`arrays`]: ULA/URA steering vectors.
//! - [`ris`]: phase policies, phase-dependent amplitudes, cascade gain.
//! - [`chanstats`]: closed-form statistics of the cascaded channel and the
//!   eigen-decomposition that defines the quadratic form.
//! - [`spa`]: saddle-point evaluation of the PDF/CDF/outage of the form.
//! - [`quadrature`]: the adaptive Gauss–Kronrod integrator used internally.
//! - [`montecarlo`]: deterministic, parallel channel simulation plus
//!   independent numerical oracles (Gil-Pelaez inversion, exact single-term
//!   CDF) for validation.

pub mod arrays;
pub mod chanstats;
pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod ris;
pub mod spa;

pub use error::{ModelError, Result};

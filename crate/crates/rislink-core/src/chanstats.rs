//! Closed-form statistics of the cascaded two-hop channel and the reduction
//! of the post-combining SNR to a quadratic form in Gaussians.
//!
//! Both hops fade independently with Rician statistics.  In the
//! many-elements regime the cascaded matrix `F = G · diag(Γ) · H` is matrix
//! normal: its mean is the rank-one `M = α · m_r · m_t^H`, and under
//! LoS-aligned transmit beamforming the receive vector `z = (F − M) w` has
//! covariance `R_eff = a·I + b · m_r · m_r^H`.  Because the mean direction is
//! exactly `m_r`, the rotated coordinates decouple, and the SNR
//! `ρ = ρ̄ · ‖F w‖²` is `ρ̄` times
//!
//! ```text
//! Q = Σ_i |x̃_i|²,   x̃_i ~ CN(μ̃_i, λ_i) independent,
//! ```
//!
//! captured here as a [`QuadFormSpec`] (eigenvalues `λ_i` and
//! noncentralities `|μ̃_i|²`).  The eigenstructure is closed-form — a
//! spiked identity — so no numerical eigensolver is involved; a dense
//! eigendecomposition exists in the test suite as an independent oracle.

use num_complex::Complex64;

use crate::arrays::SteeringVector;
use crate::error::{ModelError, Result};
use crate::spa;

/// One Rician fading hop: K-factor plus the variance of the diffuse part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianHop {
    k_factor: f64,
    nlos_variance: f64,
}

impl RicianHop {
    /// Creates a hop with the given K-factor (linear, not dB) and NLoS
    /// variance.
    pub fn new(k_factor: f64, nlos_variance: f64) -> Result<Self> {
        if !k_factor.is_finite() || k_factor < 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "k_factor",
                message: format!("must be finite and non-negative, got {k_factor}"),
            });
        }
        if !nlos_variance.is_finite() || nlos_variance <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "nlos_variance",
                message: format!("must be finite and positive, got {nlos_variance}"),
            });
        }
        Ok(Self {
            k_factor,
            nlos_variance,
        })
    }

    /// A hop with unit NLoS variance, the assumption behind all closed forms.
    pub fn unit(k_factor: f64) -> Result<Self> {
        Self::new(k_factor, 1.0)
    }

    /// The Rician K-factor (linear scale).
    pub fn k_factor(&self) -> f64 {
        self.k_factor
    }

    /// Variance of the diffuse (NLoS) component.
    pub fn nlos_variance(&self) -> f64 {
        self.nlos_variance
    }

    /// Scale of the deterministic LoS term: `sqrt(K / (K + 1))`.
    pub fn los_scale(&self) -> f64 {
        (self.k_factor / (self.k_factor + 1.0)).sqrt()
    }

    /// Variance of the diffuse term after Rician normalization:
    /// `σ² / (K + 1)` per complex entry.
    pub fn nlos_entry_variance(&self) -> f64 {
        self.nlos_variance / (self.k_factor + 1.0)
    }
}

/// Mean scale of the cascade: `α = sqrt(K_H K_G / ((K_H+1)(K_G+1))) · η_RIS`.
///
/// The cascaded mean matrix is `M = α · m_r · m_t^H`.
pub fn cascaded_mean_scale(hop_h: &RicianHop, hop_g: &RicianHop, eta_ris: Complex64) -> Complex64 {
    let kh = hop_h.k_factor;
    let kg = hop_g.k_factor;
    let scale = (kh * kg / ((kh + 1.0) * (kg + 1.0))).sqrt();
    scale * eta_ris
}

/// Common variance `Σ` of every entry of the zero-mean part of the cascade:
/// `Σ = (K_H + K_G + 1) / ((K_H+1)(K_G+1)) · ξ_β`.
///
/// The closed form assumes unit NLoS variance on both hops; anything else is
/// rejected.
pub fn cascaded_entry_variance(hop_h: &RicianHop, hop_g: &RicianHop, xi_beta: f64) -> Result<f64> {
    for (name, hop) in [("hop_h", hop_h), ("hop_g", hop_g)] {
        if hop.nlos_variance != 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "nlos_variance",
                message: format!(
                    "the closed-form entry variance assumes unit NLoS variance, \
                     but {name} has {}",
                    hop.nlos_variance
                ),
            });
        }
    }
    if !xi_beta.is_finite() || xi_beta < 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "xi_beta",
            message: format!("must be finite and non-negative, got {xi_beta}"),
        });
    }
    let kh = hop_h.k_factor;
    let kg = hop_g.k_factor;
    Ok((kh + kg + 1.0) / ((kh + 1.0) * (kg + 1.0)) * xi_beta)
}

/// Coefficients `(a, b)` of the effective receive covariance
/// `R_eff = a·I + b · m_r · m_r^H` of `z = (F − M) w` under LoS-aligned
/// beamforming `w = m_t / ‖m_t‖`:
///
/// ```text
/// a = ξ_β · σ_g² · (K_H ‖m_t‖² + σ_h²) / ((K_G+1)(K_H+1))
/// b = ξ_β · σ_h² · K_G / ((K_H+1)(K_G+1))
/// ```
pub fn effective_covariance_coeffs(
    hop_h: &RicianHop,
    hop_g: &RicianHop,
    xi_beta: f64,
    norm_mt_sq: f64,
) -> Result<(f64, f64)> {
    if !xi_beta.is_finite() || xi_beta < 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "xi_beta",
            message: format!("must be finite and non-negative, got {xi_beta}"),
        });
    }
    if !norm_mt_sq.is_finite() || norm_mt_sq <= 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "norm_mt_sq",
            message: format!("must be finite and positive, got {norm_mt_sq}"),
        });
    }
    let kh = hop_h.k_factor;
    let kg = hop_g.k_factor;
    let denom = (kh + 1.0) * (kg + 1.0);
    let a = xi_beta * hop_g.nlos_variance * (kh * norm_mt_sq + hop_h.nlos_variance) / denom;
    let b = xi_beta * hop_h.nlos_variance * kg / denom;
    Ok((a, b))
}

/// Full second-order description of the cascade under LoS-aligned
/// beamforming.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeStats {
    /// Mean scale `α`; the cascaded mean matrix is `α · m_r · m_t^H`.
    pub alpha: Complex64,
    /// Per-entry variance `Σ` of the zero-mean part.
    pub sigma_entry: f64,
    /// Isotropic covariance coefficient `a`.
    pub cov_a: f64,
    /// Rank-one covariance coefficient `b`.
    pub cov_b: f64,
    /// Transmit steering vector `m_t` (the beamforming direction).
    pub m_t: SteeringVector,
    /// Receive steering vector `m_r` (the covariance spike direction).
    pub m_r: SteeringVector,
}

/// Assembles [`CascadeStats`] from the two hops and a configured RIS.
///
/// Requires unit NLoS variance on both hops, since `Σ` only has a closed
/// form in that normalization.
pub fn cascade_stats(
    hop_h: &RicianHop,
    hop_g: &RicianHop,
    eta_ris: Complex64,
    xi_beta: f64,
    m_t: &SteeringVector,
    m_r: &SteeringVector,
) -> Result<CascadeStats> {
    let alpha = cascaded_mean_scale(hop_h, hop_g, eta_ris);
    let sigma_entry = cascaded_entry_variance(hop_h, hop_g, xi_beta)?;
    let (cov_a, cov_b) = effective_covariance_coeffs(hop_h, hop_g, xi_beta, m_t.len() as f64)?;
    Ok(CascadeStats {
        alpha,
        sigma_entry,
        cov_a,
        cov_b,
        m_t: m_t.clone(),
        m_r: m_r.clone(),
    })
}

/// Eigenvalues and noncentralities of the SNR quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadFormSpec {
    lambdas: Vec<f64>,
    noncentralities: Vec<f64>,
}

impl QuadFormSpec {
    /// Creates a spec from raw eigenvalues `λ_i > 0` and noncentralities
    /// `|μ̃_i|² ≥ 0` (equal lengths, at least one term).
    pub fn new(lambdas: Vec<f64>, noncentralities: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != noncentralities.len() {
            return Err(ModelError::InvalidParameter {
                name: "lambdas/noncentralities",
                message: format!(
                    "need equal, non-zero lengths, got {} and {}",
                    lambdas.len(),
                    noncentralities.len()
                ),
            });
        }
        for &l in &lambdas {
            if !l.is_finite() || l <= 0.0 {
                return Err(ModelError::InvalidParameter {
                    name: "lambdas",
                    message: format!("eigenvalues must be finite and positive, got {l}"),
                });
            }
        }
        for &m in &noncentralities {
            if !m.is_finite() || m < 0.0 {
                return Err(ModelError::InvalidParameter {
                    name: "noncentralities",
                    message: format!("noncentralities must be finite and non-negative, got {m}"),
                });
            }
        }
        Ok(Self {
            lambdas,
            noncentralities,
        })
    }

    /// Eigenvalues `λ_i` of the effective covariance.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Noncentralities `|μ̃_i|²` in the rotated coordinates.
    pub fn noncentralities(&self) -> &[f64] {
        &self.noncentralities
    }

    /// Number of quadratic-form terms.
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    /// True when the spec has no terms (never, for validated specs).
    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Largest eigenvalue; sets the MGF convergence strip `s < 1/λ_max`.
    pub fn lambda_max(&self) -> f64 {
        self.lambdas
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean of the form: `E[Q] = Σ λ_i + Σ |μ̃_i|²`.
    pub fn mean(&self) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.noncentralities)
            .map(|(l, m)| l + m)
            .sum()
    }

    /// Variance of the form: `Var[Q] = Σ λ_i² + 2 Σ λ_i |μ̃_i|²`.
    pub fn variance(&self) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.noncentralities)
            .map(|(l, m)| l * l + 2.0 * l * m)
            .sum()
    }
}

/// Reduces the cascade statistics to the quadratic form of the SNR.
///
/// The effective covariance `a·I + b · m_r · m_r^H` is a spiked identity, so
/// its eigendecomposition is closed-form: `λ_1 = a + b·N_r` along
/// `m_r / √N_r`, and `λ_i = a` on the orthogonal complement.  The rotated
/// mean `μ̃ = U^H (α ‖m_t‖ m_r)` is exactly aligned with the top
/// eigenvector, so `|μ̃_1|² = |α|² N_t N_r` and every other noncentrality is
/// zero.
pub fn quadform_spec(stats: &CascadeStats, n_r: usize) -> Result<QuadFormSpec> {
    if stats.m_r.len() != n_r {
        return Err(ModelError::InvalidParameter {
            name: "n_r",
            message: format!("m_r has {} entries but n_r = {n_r}", stats.m_r.len()),
        });
    }
    let a = stats.cov_a;
    let b = stats.cov_b;
    if a.is_nan() || a <= 0.0 {
        return Err(ModelError::DegenerateDistribution {
            message: format!(
                "effective covariance coefficient a = {a} is not positive; \
                 the SNR has no absolutely continuous distribution"
            ),
        });
    }
    if b < 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "cov_b",
            message: format!("must be non-negative, got {b}"),
        });
    }
    let n_t = stats.m_t.len() as f64;
    let mut lambdas = vec![a; n_r];
    lambdas[0] = a + b * n_r as f64;
    let mut noncentralities = vec![0.0; n_r];
    noncentralities[0] = stats.alpha.norm_sqr() * n_t * n_r as f64;
    QuadFormSpec::new(lambdas, noncentralities)
}

/// The SNR distribution `ρ = ρ̄ · Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrDistribution {
    spec: QuadFormSpec,
    rho_bar: f64,
}

/// Binds a quadratic form to an average-SNR scale `ρ̄ > 0`.
pub fn snr_spec(spec: QuadFormSpec, rho_bar: f64) -> Result<SnrDistribution> {
    if !rho_bar.is_finite() || rho_bar <= 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "rho_bar",
            message: format!("must be finite and positive, got {rho_bar}"),
        });
    }
    Ok(SnrDistribution { spec, rho_bar })
}

impl SnrDistribution {
    /// The underlying quadratic form.
    pub fn spec(&self) -> &QuadFormSpec {
        &self.spec
    }

    /// The average-SNR scale `ρ̄`.
    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    /// Mean SNR `E[ρ] = ρ̄ · E[Q]`.
    pub fn mean(&self) -> f64 {
        self.rho_bar * self.spec.mean()
    }

    /// Saddle-point PDF of `ρ` at `rho`: `f_ρ(x) = f_Q(x/ρ̄) / ρ̄`.
    pub fn pdf(&self, rho: f64) -> Result<spa::DistributionResult> {
        let mut r = spa::pdf(&self.spec, rho / self.rho_bar)?;
        r.value /= self.rho_bar;
        Ok(r)
    }

    /// Saddle-point CDF of `ρ` at `rho`: `F_ρ(x) = F_Q(x/ρ̄)`.
    pub fn cdf(&self, rho: f64) -> Result<spa::DistributionResult> {
        spa::cdf(&self.spec, rho / self.rho_bar)
    }

    /// Outage probability `P(ρ < ρ_th)`.
    pub fn outage(&self, rho_th: f64) -> Result<f64> {
        spa::outage(&self.spec, self.rho_bar, rho_th)
    }
}

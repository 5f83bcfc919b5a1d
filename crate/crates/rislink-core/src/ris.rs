//! RIS phase configuration, phase-dependent amplitudes, and the resulting
//! scalar cascade gain.
//!
//! Each reflecting element applies `Γ_n = β_n · exp(j φ_n)`.  The phase
//! `φ_n` is chosen by a [`PhasePolicy`]; the amplitude follows the
//! phase-dependent response
//!
//! ```text
//! β(φ) = (1 − ζ_min) · (|sin(φ − c)| / 2)^k + ζ_min
//! ```
//!
//! and is always evaluated at the phase actually applied (after any
//! quantization).  The quantities cached in [`RisState`] are the effective
//! scalar gain `η_RIS = a_out^H · diag(Γ) · a_in` and the squared-amplitude
//! sum `ξ_β = Σ β_n²`, which parameterize the cascaded channel statistics.
//!
//! Quantization uses the circular distance on the phase circle by default;
//! the plain absolute difference (which mis-assigns phases near `2π` to the
//! top codeword instead of wrapping to `0`) is available through
//! [`PhaseMetric::PlainDifference`] for replicating that convention exactly.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arrays::SteeringVector;
use crate::error::{ModelError, Result};

/// Largest supported phase-resolution in bits; `2^24` codewords is already
/// far beyond any hardware phase shifter and keeps enumeration cheap.
pub const MAX_PHASE_BITS: u32 = 24;

/// RNG stream reserved for drawing random RIS phases, so that the phase draw
/// never collides with the per-trial channel streams (trial `i` uses stream
/// `i`).
pub(crate) const RIS_PHASE_STREAM: u64 = u64::MAX;

/// Phase-dependent amplitude response of a reflecting element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeModel {
    /// Minimum amplitude, attained where the sine factor vanishes.
    pub zeta_min: f64,
    /// Phase offset of the response in radians.
    pub c: f64,
    /// Steepness exponent.
    pub k: f64,
}

impl AmplitudeModel {
    /// Creates an amplitude model, validating `0 ≤ zeta_min ≤ 1` and `k > 0`.
    pub fn new(zeta_min: f64, c: f64, k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&zeta_min) || !zeta_min.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "zeta_min",
                message: format!("must lie in [0, 1], got {zeta_min}"),
            });
        }
        if !c.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "c",
                message: format!("must be finite, got {c}"),
            });
        }
        if !k.is_finite() || k <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "k",
                message: format!("must be finite and positive, got {k}"),
            });
        }
        Ok(Self { zeta_min, c, k })
    }

    /// The ideal lossless element: unit amplitude at every phase.
    pub fn ideal() -> Self {
        Self {
            zeta_min: 1.0,
            c: 0.0,
            k: 1.0,
        }
    }
}

/// Evaluates the phase-dependent amplitude response `β(φ)` of `model`.
pub fn amplitude_response(phase: f64, model: &AmplitudeModel) -> f64 {
    // With zeta_min = 1 the first term vanishes identically; skip the power
    // to keep the ideal model exact.
    if model.zeta_min == 1.0 {
        return 1.0;
    }
    let s = ((phase - model.c).sin().abs()) / 2.0;
    (1.0 - model.zeta_min) * s.powf(model.k) + model.zeta_min
}

/// How the per-element phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhasePolicy {
    /// Each phase drawn independently and uniformly from the `2^bits`-point
    /// quantized set.
    Random {
        /// Phase resolution in bits.
        bits: u32,
    },
    /// Continuous phase alignment: every cascade summand is made real
    /// non-negative.
    OptimalContinuous,
    /// The continuous optimum rounded to the nearest quantized phase.
    OptimalDiscrete {
        /// Phase resolution in bits.
        bits: u32,
    },
}

impl PhasePolicy {
    /// Validates the policy (discrete modes need `1 ≤ bits ≤ MAX_PHASE_BITS`).
    pub fn validate(&self) -> Result<()> {
        match *self {
            PhasePolicy::Random { bits } | PhasePolicy::OptimalDiscrete { bits } => {
                validate_bits(bits)
            }
            PhasePolicy::OptimalContinuous => Ok(()),
        }
    }
}

fn validate_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_PHASE_BITS {
        return Err(ModelError::InvalidParameter {
            name: "bits",
            message: format!(
                "phase resolution must satisfy 1 <= bits <= {MAX_PHASE_BITS}, got {bits}"
            ),
        });
    }
    Ok(())
}

/// The quantized phase set `{2πℓ/2^b : ℓ = 0, …, 2^b − 1}` in increasing
/// order.
pub fn quantized_phase_set(bits: u32) -> Result<Vec<f64>> {
    validate_bits(bits)?;
    let m = 1usize << bits;
    Ok((0..m).map(|l| TAU * l as f64 / m as f64).collect())
}

/// Distance notion used by [`quantize_phase_with_metric`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMetric {
    /// Wrap-around distance `min(|Δ|, 2π − |Δ|)` on the phase circle.
    Circular,
    /// Plain absolute difference `|Δ|` of the `[0, 2π)` representatives.
    PlainDifference,
}

/// Rounds `phase_c` to the nearest member of the `2^bits`-point quantized
/// set under the circular distance; ties go to the smaller codeword.
pub fn quantize_phase(phase_c: f64, bits: u32) -> Result<f64> {
    quantize_phase_with_metric(phase_c, bits, PhaseMetric::Circular)
}

/// Rounds `phase_c` to the nearest quantized phase under the given metric;
/// ties go to the smaller codeword.
pub fn quantize_phase_with_metric(phase_c: f64, bits: u32, metric: PhaseMetric) -> Result<f64> {
    validate_bits(bits)?;
    if !phase_c.is_finite() {
        return Err(ModelError::InvalidParameter {
            name: "phase_c",
            message: format!("must be finite, got {phase_c}"),
        });
    }
    let m = 1u64 << bits;
    let x = phase_c.rem_euclid(TAU);
    let mut best_l = 0u64;
    let mut best_d = f64::INFINITY;
    for l in 0..m {
        let q = TAU * l as f64 / m as f64;
        let d = match metric {
            PhaseMetric::Circular => {
                let d = (x - q).abs();
                d.min(TAU - d)
            }
            PhaseMetric::PlainDifference => (x - q).abs(),
        };
        // Strict improvement only: the first (smallest) codeword wins ties.
        if d < best_d {
            best_d = d;
            best_l = l;
        }
    }
    Ok(TAU * best_l as f64 / m as f64)
}

/// The continuous phase that makes element `n`'s cascade summand real
/// non-negative: `−angle([a_out]_n^* · [a_in]_n)`, mapped to `[0, 2π)`.
pub fn optimal_continuous_phase(
    n: usize,
    a_out: &SteeringVector,
    a_in: &SteeringVector,
) -> Result<f64> {
    if a_out.len() != a_in.len() {
        return Err(ModelError::InvalidParameter {
            name: "a_out/a_in",
            message: format!(
                "steering vectors must have equal length, got {} and {}",
                a_out.len(),
                a_in.len()
            ),
        });
    }
    if n >= a_in.len() {
        return Err(ModelError::InvalidParameter {
            name: "n",
            message: format!("element index {n} out of range for {} elements", a_in.len()),
        });
    }
    let prod = a_out.entries()[n].conj() * a_in.entries()[n];
    Ok((-prod.arg()).rem_euclid(TAU))
}

/// A fully configured RIS: phases, amplitudes, reflection coefficients, and
/// the cached scalar summaries of the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct RisState {
    phases: Vec<f64>,
    amplitudes: Vec<f64>,
    reflection: Vec<Complex64>,
    eta_ris: Complex64,
    xi_beta: f64,
}

impl RisState {
    /// Applied phases in `[0, 2π)`, one per element.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Amplitudes `β_n`, evaluated at the applied phases.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Reflection coefficients `Γ_n = β_n · exp(j φ_n)`.
    pub fn reflection(&self) -> &[Complex64] {
        &self.reflection
    }

    /// Effective scalar cascade gain `η_RIS = a_out^H · diag(Γ) · a_in`.
    pub fn eta_ris(&self) -> Complex64 {
        self.eta_ris
    }

    /// Squared-amplitude sum `ξ_β = Σ β_n²`.
    pub fn xi_beta(&self) -> f64 {
        self.xi_beta
    }

    /// Amplitude sum `Σ β_n`, the upper bound on `|η_RIS|`.
    pub fn beta_sum(&self) -> f64 {
        self.amplitudes.iter().sum()
    }

    /// Number of reflecting elements.
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    /// True when the surface has no elements (never, for built states).
    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Configures the RIS under `policy` and caches the cascade summaries.
///
/// `a_out` is the RIS steering vector toward the receiver, `a_in` the one
/// toward the transmitter.  `seed` feeds the phase draw of the random policy
/// (on its own reserved RNG stream) and is ignored by the deterministic
/// policies.
pub fn build_ris_state(
    policy: &PhasePolicy,
    model: &AmplitudeModel,
    a_out: &SteeringVector,
    a_in: &SteeringVector,
    seed: u64,
) -> Result<RisState> {
    policy.validate()?;
    if a_out.len() != a_in.len() {
        return Err(ModelError::InvalidParameter {
            name: "a_out/a_in",
            message: format!(
                "steering vectors must have equal length, got {} and {}",
                a_out.len(),
                a_in.len()
            ),
        });
    }
    let n_ris = a_in.len();

    let phases: Vec<f64> = match *policy {
        PhasePolicy::Random { bits } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(RIS_PHASE_STREAM);
            let m = 1u64 << bits;
            (0..n_ris)
                .map(|_| TAU * rng.gen_range(0..m) as f64 / m as f64)
                .collect()
        }
        PhasePolicy::OptimalContinuous => (0..n_ris)
            .map(|n| optimal_continuous_phase(n, a_out, a_in))
            .collect::<Result<_>>()?,
        PhasePolicy::OptimalDiscrete { bits } => (0..n_ris)
            .map(|n| quantize_phase(optimal_continuous_phase(n, a_out, a_in)?, bits))
            .collect::<Result<_>>()?,
    };

    let amplitudes: Vec<f64> = phases
        .iter()
        .map(|&p| amplitude_response(p, model))
        .collect();
    let reflection: Vec<Complex64> = phases
        .iter()
        .zip(&amplitudes)
        .map(|(&p, &b)| Complex64::from_polar(b, p))
        .collect();
    let eta_ris = a_out
        .entries()
        .iter()
        .zip(reflection.iter())
        .zip(a_in.entries())
        .map(|((ao, g), ai)| ao.conj() * g * ai)
        .sum();
    let xi_beta = amplitudes.iter().map(|b| b * b).sum();

    Ok(RisState {
        phases,
        amplitudes,
        reflection,
        eta_ris,
        xi_beta,
    })
}

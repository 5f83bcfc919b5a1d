//! Ground-truth oracles: channel-level Monte Carlo simulation, direct
//! quadratic-form sampling, empirical covariance estimation, and numerical
//! inversion of the exact characteristic function.
//!
//! Conventions used throughout:
//!
//! - **Complex Gaussian**: "variance `σ²`" always means real and imaginary
//!   parts are independent `N(0, σ²/2)`.
//! - **Determinism**: trial `i` derives its generator as
//!   `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so results are
//!   bit-identical for a given `(config, seed)` regardless of thread count
//!   or scheduling; aggregation reduces over trial order.  The random phase
//!   draw of the RIS uses the reserved stream `u64::MAX` and therefore never
//!   collides with a trial.
//! - **Fixed RIS**: the reflection matrix is drawn once per experiment
//!   (phases are a design choice, not fading); only the channels are redrawn
//!   each trial.
//! - **Array layout**: matrices are dense row-major `Vec<Complex64>`; `H` is
//!   `N_RIS × N_t`, `G` is `N_r × N_RIS`, `F = G · diag(Γ) · H` is
//!   `N_r × N_t`.  Entries are drawn in row-major order, real part before
//!   imaginary part.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::gamma::gamma_lr;

use crate::arrays::{
    ula_steering, ura_steering, AnglePair, SteeringVector, UlaGeometry, UraGeometry,
};
use crate::chanstats::{
    cascade_stats, cascaded_mean_scale, quadform_spec, QuadFormSpec, RicianHop,
};
use crate::error::{ModelError, Result};
use crate::quadrature;
use crate::ris::{build_ris_state, AmplitudeModel, PhasePolicy};

/// Power-iteration stopping rule: relative Rayleigh-quotient change.
const POWER_ITERATION_RTOL: f64 = 1e-10;
/// Power-iteration budget; the quotient increases monotonically, so its
/// increments always die out long before this.
const POWER_ITERATION_MAX: usize = 50_000;
/// Absolute accuracy target of the Gil-Pelaez inversion.
const GIL_PELAEZ_TOL: f64 = 1e-6;

/// Transmit beamformer used per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precoder {
    /// The statistical precoder `w = m_t / ‖m_t‖` (aligned with the LoS
    /// transmit direction).
    LosAligned,
    /// The per-trial optimal benchmark: the unit right-singular vector of
    /// `F` for the largest singular value, found by power iteration on
    /// `F^H F`.
    MaxEigenvector,
}

/// The four link directions of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAngles {
    /// Transmit-array steering direction `(φ_t, θ_t)`.
    pub tx: AnglePair,
    /// RIS steering direction toward the transmitter `(φ_H, θ_H)`.
    pub ris_in: AnglePair,
    /// RIS steering direction toward the receiver `(φ_r, θ_r)`.
    pub ris_out: AnglePair,
    /// Receive-ULA steering angle `ϑ_r`.
    pub rx: f64,
}

/// Full description of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Transmit antennas (URA, squarest factorization, half-wavelength).
    pub n_t: usize,
    /// Receive antennas (ULA, half-wavelength).
    pub n_r: usize,
    /// RIS elements (URA, squarest factorization, half-wavelength).
    pub n_ris: usize,
    /// Transmitter-to-RIS hop.
    pub hop_h: RicianHop,
    /// RIS-to-receiver hop.
    pub hop_g: RicianHop,
    /// RIS phase policy.
    pub policy: PhasePolicy,
    /// RIS amplitude response model.
    pub amplitude: AmplitudeModel,
    /// Link directions.
    pub angles: LinkAngles,
    /// Transmit beamformer.
    pub precoder: Precoder,
    /// Average-SNR scale `ρ̄` multiplying the quadratic form.
    pub rho_bar: f64,
    /// Number of Monte Carlo trials.
    pub trials: usize,
    /// Base RNG seed.
    pub seed: u64,
}

impl SimConfig {
    /// Validates dimensions, hop parameters, and the phase policy.
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_t", self.n_t), ("n_r", self.n_r), ("n_ris", self.n_ris)] {
            if n == 0 {
                return Err(ModelError::InvalidConfig {
                    message: format!("{name} must be at least 1"),
                });
            }
        }
        if self.trials == 0 {
            return Err(ModelError::InvalidConfig {
                message: "trials must be at least 1".to_string(),
            });
        }
        if !self.rho_bar.is_finite() || self.rho_bar <= 0.0 {
            return Err(ModelError::InvalidConfig {
                message: format!("rho_bar must be finite and positive, got {}", self.rho_bar),
            });
        }
        self.policy.validate()?;
        Ok(())
    }

    /// Builds the steering vectors and the (experiment-fixed) RIS state.
    pub fn link_geometry(&self) -> Result<LinkGeometry> {
        self.validate()?;
        let tx_geom = UraGeometry::squarest(self.n_t)?;
        let ris_geom = UraGeometry::squarest(self.n_ris)?;
        let rx_geom = UlaGeometry::half_wavelength(self.n_r)?;
        let m_t = ura_steering(tx_geom, self.angles.tx);
        let a_in = ura_steering(ris_geom, self.angles.ris_in);
        let a_out = ura_steering(ris_geom, self.angles.ris_out);
        let m_r = ula_steering(rx_geom, self.angles.rx);
        let ris = build_ris_state(&self.policy, &self.amplitude, &a_out, &a_in, self.seed)?;
        Ok(LinkGeometry {
            m_t,
            m_r,
            a_in,
            a_out,
            ris,
        })
    }
}

/// Steering vectors and RIS state derived from a [`SimConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    /// Transmit steering vector `m_t = a_T(φ_t, θ_t)`.
    pub m_t: SteeringVector,
    /// Receive steering vector `m_r = a_R(ϑ_r)`.
    pub m_r: SteeringVector,
    /// RIS steering vector toward the transmitter `a_RIS(φ_H, θ_H)`.
    pub a_in: SteeringVector,
    /// RIS steering vector toward the receiver `a_RIS(φ_r, θ_r)`.
    pub a_out: SteeringVector,
    /// The configured surface.
    pub ris: crate::ris::RisState,
}

/// The closed-form quadratic form implied by a config (used as the
/// analytical counterpart of `simulate_snr`).
pub fn theoretical_quadform(config: &SimConfig) -> Result<QuadFormSpec> {
    let geo = config.link_geometry()?;
    let stats = cascade_stats(
        &config.hop_h,
        &config.hop_g,
        geo.ris.eta_ris(),
        geo.ris.xi_beta(),
        &geo.m_t,
        &geo.m_r,
    )?;
    quadform_spec(&stats, config.n_r)
}

fn draw_cn(rng: &mut ChaCha8Rng, mean: Complex64, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(mean.re + scale * re, mean.im + scale * im)
}

/// Draws the transmitter-to-RIS hop `H` (`N_RIS × N_t`, row-major):
/// `sqrt(K_H/(K_H+1)) · a_in · m_t^H` plus i.i.d. diffuse entries of
/// variance `σ_h²/(K_H+1)`.
pub fn sample_hop_h(
    config: &SimConfig,
    geometry: &LinkGeometry,
    rng: &mut ChaCha8Rng,
) -> Vec<Complex64> {
    let los = config.hop_h.los_scale();
    let var = config.hop_h.nlos_entry_variance();
    let a_in = geometry.a_in.entries();
    let m_t = geometry.m_t.entries();
    let mut h = Vec::with_capacity(config.n_ris * config.n_t);
    for a in a_in.iter().take(config.n_ris) {
        for t in m_t.iter().take(config.n_t) {
            h.push(draw_cn(rng, los * a * t.conj(), var));
        }
    }
    h
}

/// Draws the RIS-to-receiver hop `G` (`N_r × N_RIS`, row-major):
/// `sqrt(K_G/(K_G+1)) · m_r · a_out^H` plus i.i.d. diffuse entries of
/// variance `σ_g²/(K_G+1)`.
pub fn sample_hop_g(
    config: &SimConfig,
    geometry: &LinkGeometry,
    rng: &mut ChaCha8Rng,
) -> Vec<Complex64> {
    let los = config.hop_g.los_scale();
    let var = config.hop_g.nlos_entry_variance();
    let m_r = geometry.m_r.entries();
    let a_out = geometry.a_out.entries();
    let mut g = Vec::with_capacity(config.n_r * config.n_ris);
    for r in m_r.iter().take(config.n_r) {
        for a in a_out.iter().take(config.n_ris) {
            g.push(draw_cn(rng, los * r * a.conj(), var));
        }
    }
    g
}

/// `F = G · diag(Γ) · H`, `N_r × N_t` row-major.
fn cascade_matrix(
    g: &[Complex64],
    h: &[Complex64],
    reflection: &[Complex64],
    n_r: usize,
    n_ris: usize,
    n_t: usize,
) -> Vec<Complex64> {
    let mut f = vec![Complex64::new(0.0, 0.0); n_r * n_t];
    for r in 0..n_r {
        let g_row = &g[r * n_ris..(r + 1) * n_ris];
        for (n, (gn, gamma)) in g_row.iter().zip(reflection).enumerate() {
            let weight = gn * gamma;
            let h_row = &h[n * n_t..(n + 1) * n_t];
            let f_row = &mut f[r * n_t..(r + 1) * n_t];
            for (ft, ht) in f_row.iter_mut().zip(h_row) {
                *ft += weight * ht;
            }
        }
    }
    f
}

fn matvec(m: &[Complex64], x: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut y = Vec::with_capacity(rows);
    for r in 0..rows {
        y.push(
            m[r * cols..(r + 1) * cols]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum(),
        );
    }
    y
}

fn norm_sq(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Largest eigenvalue of `F^H F` (= `‖F w‖²` at the optimal unit `w`) by
/// power iteration with the deterministic start vector `w0`.  Returns the
/// Rayleigh quotient, iterations spent, and convergence flag.  The quotient
/// increases monotonically from `‖F w0‖²`, so even a non-converged result
/// dominates the LoS-aligned value.
fn dominant_power(f: &[Complex64], n_r: usize, n_t: usize, w0: &[Complex64]) -> (f64, usize, bool) {
    // A = F^H F, n_t x n_t row-major.
    let mut a = vec![Complex64::new(0.0, 0.0); n_t * n_t];
    for i in 0..n_t {
        for j in 0..n_t {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..n_r {
                acc += f[r * n_t + i].conj() * f[r * n_t + j];
            }
            a[i * n_t + j] = acc;
        }
    }
    let quad = |x: &[Complex64], ax: &[Complex64]| -> f64 {
        x.iter().zip(ax).map(|(xi, yi)| (xi.conj() * yi).re).sum()
    };
    let mut x = w0.to_vec();
    let mut ax = matvec(&a, &x, n_t, n_t);
    let mut rq = quad(&x, &ax);
    for iteration in 1..=POWER_ITERATION_MAX {
        let norm = norm_sq(&ax).sqrt();
        if norm == 0.0 {
            // F vanished entirely; the quotient is exactly zero.
            return (0.0, iteration, true);
        }
        for z in ax.iter_mut() {
            *z /= norm;
        }
        x = std::mem::take(&mut ax);
        ax = matvec(&a, &x, n_t, n_t);
        let rq_next = quad(&x, &ax);
        if (rq_next - rq).abs() <= POWER_ITERATION_RTOL * rq_next.max(f64::MIN_POSITIVE) {
            return (rq_next, iteration, true);
        }
        rq = rq_next;
    }
    (rq, POWER_ITERATION_MAX, false)
}

/// Sorted Monte Carlo samples with their summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
    by_trial: Vec<f64>,
    seed: u64,
    failed_trials: usize,
    mean: f64,
    variance: f64,
}

impl EmpiricalDistribution {
    /// Builds the distribution from samples in trial order.
    pub fn from_trial_samples(by_trial: Vec<f64>, seed: u64, failed_trials: usize) -> Result<Self> {
        if by_trial.is_empty() {
            return Err(ModelError::InvalidParameter {
                name: "samples",
                message: "need at least one sample".to_string(),
            });
        }
        for &x in &by_trial {
            if !x.is_finite() || x < 0.0 {
                return Err(ModelError::InvalidParameter {
                    name: "samples",
                    message: format!("samples must be finite and non-negative, got {x}"),
                });
            }
        }
        let n = by_trial.len() as f64;
        let mean = by_trial.iter().sum::<f64>() / n;
        let variance = if by_trial.len() > 1 {
            by_trial
                .iter()
                .map(|x| (x - mean) * (x - mean))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = by_trial.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            sorted,
            by_trial,
            seed,
            failed_trials,
            mean,
            variance,
        })
    }

    /// Samples sorted ascending.
    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Samples in trial order (the deterministic raw output).
    pub fn trial_samples(&self) -> &[f64] {
        &self.by_trial
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    /// True when there are no samples (never, for constructed values).
    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Base seed the experiment ran with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Trials whose per-trial numeric routine (power iteration) did not
    /// converge; their best-effort samples are still included.
    pub fn failed_trials(&self) -> usize {
        self.failed_trials
    }

    /// Sample mean.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Standard error of the sample mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.sorted.len() as f64).sqrt()
    }

    /// Empirical CDF `#{samples < x} / n`.
    pub fn cdf(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&s| s < x);
        below as f64 / self.sorted.len() as f64
    }
}

/// Runs the channel-level Monte Carlo experiment and collects
/// `ρ = ρ̄ · ‖F w‖²` per trial.
pub fn simulate_snr(config: &SimConfig) -> Result<EmpiricalDistribution> {
    let geo = config.link_geometry()?;
    let norm_mt = geo.m_t.norm_sqr().sqrt();
    let w_los: Vec<Complex64> = geo.m_t.entries().iter().map(|z| z / norm_mt).collect();
    let (n_r, n_ris, n_t) = (config.n_r, config.n_ris, config.n_t);

    let outcomes: Vec<(f64, bool)> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let h = sample_hop_h(config, &geo, &mut rng);
            let g = sample_hop_g(config, &geo, &mut rng);
            let f = cascade_matrix(&g, &h, geo.ris.reflection(), n_r, n_ris, n_t);
            match config.precoder {
                Precoder::LosAligned => {
                    let y = matvec(&f, &w_los, n_r, n_t);
                    (config.rho_bar * norm_sq(&y), true)
                }
                Precoder::MaxEigenvector => {
                    let (rq, _, converged) = dominant_power(&f, n_r, n_t, &w_los);
                    (config.rho_bar * rq, converged)
                }
            }
        })
        .collect();

    let failed = outcomes.iter().filter(|(_, ok)| !ok).count();
    let samples = outcomes.into_iter().map(|(rho, _)| rho).collect();
    EmpiricalDistribution::from_trial_samples(samples, config.seed, failed)
}

/// Sample covariance of `z = (F − M) w` with per-entry standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// `N_r × N_r` sample covariance, row-major.
    pub matrix: Vec<Complex64>,
    /// Standard error of each entry's real part, row-major.
    pub se_re: Vec<f64>,
    /// Standard error of each entry's imaginary part, row-major.
    pub se_im: Vec<f64>,
    /// Trials averaged over.
    pub trials: usize,
}

/// Estimates the covariance of the zero-mean receive vector
/// `z = (F − M) w` under LoS-aligned beamforming over `trials` draws.
///
/// `z` has exactly zero mean by construction (the true mean is subtracted),
/// so the estimator is the raw second moment `Σ z z^H / T`.
pub fn empirical_covariance_z(config: &SimConfig, trials: usize) -> Result<CovarianceEstimate> {
    if config.precoder != Precoder::LosAligned {
        return Err(ModelError::InvalidConfig {
            message: "covariance estimation is defined for the los-aligned precoder".to_string(),
        });
    }
    if trials == 0 {
        return Err(ModelError::InvalidConfig {
            message: "trials must be at least 1".to_string(),
        });
    }
    let geo = config.link_geometry()?;
    let norm_mt = geo.m_t.norm_sqr().sqrt();
    let w_los: Vec<Complex64> = geo.m_t.entries().iter().map(|z| z / norm_mt).collect();
    let alpha = cascaded_mean_scale(&config.hop_h, &config.hop_g, geo.ris.eta_ris());
    // M w = α · m_r · (m_t^H w) = α · ‖m_t‖ · m_r.
    let mean_vec: Vec<Complex64> = geo
        .m_r
        .entries()
        .iter()
        .map(|z| alpha * norm_mt * z)
        .collect();
    let (n_r, n_ris, n_t) = (config.n_r, config.n_ris, config.n_t);

    let draws: Vec<Vec<Complex64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let h = sample_hop_h(config, &geo, &mut rng);
            let g = sample_hop_g(config, &geo, &mut rng);
            let f = cascade_matrix(&g, &h, geo.ris.reflection(), n_r, n_ris, n_t);
            let y = matvec(&f, &w_los, n_r, n_t);
            y.iter().zip(&mean_vec).map(|(a, b)| a - b).collect()
        })
        .collect();

    let t = trials as f64;
    let entries = n_r * n_r;
    let mut sum = vec![Complex64::new(0.0, 0.0); entries];
    let mut sum_re2 = vec![0.0; entries];
    let mut sum_im2 = vec![0.0; entries];
    for z in &draws {
        for i in 0..n_r {
            for j in 0..n_r {
                let p = z[i] * z[j].conj();
                let idx = i * n_r + j;
                sum[idx] += p;
                sum_re2[idx] += p.re * p.re;
                sum_im2[idx] += p.im * p.im;
            }
        }
    }
    let matrix: Vec<Complex64> = sum.iter().map(|s| s / t).collect();
    let mut se_re = vec![0.0; entries];
    let mut se_im = vec![0.0; entries];
    for idx in 0..entries {
        let var_re = (sum_re2[idx] / t - matrix[idx].re * matrix[idx].re).max(0.0);
        let var_im = (sum_im2[idx] / t - matrix[idx].im * matrix[idx].im).max(0.0);
        se_re[idx] = (var_re / t).sqrt();
        se_im[idx] = (var_im / t).sqrt();
    }

    Ok(CovarianceEstimate {
        matrix,
        se_re,
        se_im,
        trials,
    })
}

/// Draws `Q = Σ_i |μ̃_i + z̃_i|²` directly from a spec (`z̃_i` complex
/// Gaussian of variance `λ_i`; `μ̃_i` taken real non-negative, which loses
/// no generality for the distribution of `Q`).
pub fn sample_quadform(
    spec: &QuadFormSpec,
    trials: usize,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    if trials == 0 {
        return Err(ModelError::InvalidConfig {
            message: "trials must be at least 1".to_string(),
        });
    }
    let lambdas = spec.lambdas().to_vec();
    let means: Vec<f64> = spec.noncentralities().iter().map(|m| m.sqrt()).collect();
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut q = 0.0;
            for (l, mu) in lambdas.iter().zip(&means) {
                let scale = (l / 2.0).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let x_re = mu + scale * re;
                let x_im = scale * im;
                q += x_re * x_re + x_im * x_im;
            }
            q
        })
        .collect();
    EmpiricalDistribution::from_trial_samples(samples, seed, 0)
}

/// Draws the single cascaded entry `f_{row,col}` of `F = G · diag(Γ) · H`
/// per trial (used to probe the CLT normality of the cascade).  Each trial
/// draws only column `col` of `H` (entries in RIS order, real part first)
/// followed by row `row` of `G`.
pub fn sample_cascaded_entry(config: &SimConfig, row: usize, col: usize) -> Result<Vec<Complex64>> {
    let geo = config.link_geometry()?;
    if row >= config.n_r || col >= config.n_t {
        return Err(ModelError::InvalidParameter {
            name: "row/col",
            message: format!(
                "entry ({row}, {col}) out of range for a {} x {} cascade",
                config.n_r, config.n_t
            ),
        });
    }
    let los_h = config.hop_h.los_scale();
    let var_h = config.hop_h.nlos_entry_variance();
    let los_g = config.hop_g.los_scale();
    let var_g = config.hop_g.nlos_entry_variance();
    let a_in = geo.a_in.entries();
    let a_out = geo.a_out.entries();
    let mt_c = geo.m_t.entries()[col];
    let mr_r = geo.m_r.entries()[row];
    let reflection = geo.ris.reflection().to_vec();

    let samples: Vec<Complex64> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let h_col: Vec<Complex64> = a_in
                .iter()
                .map(|a| draw_cn(&mut rng, los_h * a * mt_c.conj(), var_h))
                .collect();
            let mut entry = Complex64::new(0.0, 0.0);
            for (n, a) in a_out.iter().enumerate() {
                let g_rn = draw_cn(&mut rng, los_g * mr_r * a.conj(), var_g);
                entry += g_rn * reflection[n] * h_col[n];
            }
            entry
        })
        .collect();
    Ok(samples)
}

/// Log-modulus and phase (without the `-tq` drift) of the characteristic
/// function `φ(t) = M(jt)` of the form.
fn cf_parts(spec: &QuadFormSpec, t: f64) -> (f64, f64) {
    let mut log_r = 0.0;
    let mut theta = 0.0;
    for (&l, &m) in spec.lambdas().iter().zip(spec.noncentralities()) {
        let u = t * l;
        let u2 = u * u;
        log_r += -0.5 * u2.ln_1p() - t * t * l * m / (1.0 + u2);
        theta += u.atan() + t * m / (1.0 + u2);
    }
    (log_r, theta)
}

/// Derivative of the characteristic-function phase; bounds the oscillation
/// rate `|d/dt arg(φ(t) e^{-jtq})| = |D(t) − q|` used to pick the
/// truncation point.
fn cf_phase_derivative(spec: &QuadFormSpec, t: f64) -> f64 {
    let mut d = 0.0;
    for (&l, &m) in spec.lambdas().iter().zip(spec.noncentralities()) {
        let u2 = t * t * l * l;
        let denom = 1.0 + u2;
        d += l / denom + m * (1.0 - u2) / (denom * denom);
    }
    d
}

/// Gil-Pelaez inversion of the exact characteristic function:
///
/// ```text
/// F(q) = 1/2 − (1/π) ∫₀^∞ Im[φ(t) e^{−jtq}] / t  dt
/// ```
///
/// evaluated by adaptive quadrature on `[0, T]`.  `T` doubles from
/// `1/λ_max` until either `|φ(T)| < 1e-12`, or the integrand's oscillatory
/// tail is provably below half the accuracy target (phase drift at least
/// `q/2` per unit `t` and envelope bound `4|φ(T)|/(Tq)` small); the plain
/// `|φ| < 1e-12` cutoff alone is unreachable for slowly decaying central
/// specs.  Absolute accuracy target: `1e-6`.
pub fn gil_pelaez_cdf(spec: &QuadFormSpec, q: f64) -> Result<f64> {
    if !q.is_finite() || q <= 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "q",
            message: format!("evaluation point must be finite and positive, got {q}"),
        });
    }
    let budget = std::f64::consts::PI * GIL_PELAEZ_TOL / 2.0;
    let mut t_max = 1.0 / spec.lambda_max();
    let mut truncated = false;
    for _ in 0..200 {
        let (log_r, _) = cf_parts(spec, t_max);
        let r = log_r.exp();
        if r < 1e-12 {
            truncated = true;
            break;
        }
        if cf_phase_derivative(spec, t_max) <= 0.5 * q && 4.0 * r / (t_max * q) < budget {
            truncated = true;
            break;
        }
        t_max *= 2.0;
    }
    if !truncated {
        return Err(ModelError::QuadratureFailed {
            message: format!("no usable truncation point found for q = {q}"),
        });
    }
    let mean = spec.mean();
    let integrand = |t: f64| {
        if t == 0.0 {
            // lim_{t→0} Im[φ(t) e^{−jtq}]/t = E[Q] − q.
            mean - q
        } else {
            let (log_r, theta) = cf_parts(spec, t);
            log_r.exp() * (theta - t * q).sin() / t
        }
    };
    // The integrand oscillates at rate |D(t) − q| ≤ q + E[Q]; seed the
    // quadrature with half-period segments so its error estimate stays
    // honest (one wide interval can alias hundreds of periods).
    let half_period = std::f64::consts::PI / (q + mean);
    let segments = ((t_max / half_period).ceil() as usize).clamp(1, 50_000);
    let points: Vec<f64> = (0..=segments)
        .map(|k| t_max * k as f64 / segments as f64)
        .collect();
    let integral = quadrature::integrate_segmented(integrand, &points, budget)?;
    Ok((0.5 - integral.value / std::f64::consts::PI).clamp(0.0, 1.0))
}

/// Exact CDF of a single-term form `|x|²` with `x ~ CN(μ̃, λ)`: the
/// noncentral χ² with two degrees of freedom, evaluated by the Poisson
/// mixture of central χ² CDFs
///
/// ```text
/// F(q) = Σ_j  e^{−δ/2} (δ/2)^j / j! · P(j+1, q/λ),    δ/2 = |μ̃|²/λ,
/// ```
///
/// where `P` is the regularized lower incomplete gamma function.  Truncation
/// error is below 1e-14.  Rejects `|μ̃|²/λ > 700` (the series start would
/// underflow); use the Gil-Pelaez oracle in that regime.
pub fn exact_single_term_cdf(lambda: f64, mu_sq: f64, q: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "lambda",
            message: format!("must be finite and positive, got {lambda}"),
        });
    }
    if !mu_sq.is_finite() || mu_sq < 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "mu_sq",
            message: format!("must be finite and non-negative, got {mu_sq}"),
        });
    }
    if !q.is_finite() {
        return Err(ModelError::InvalidParameter {
            name: "q",
            message: format!("must be finite, got {q}"),
        });
    }
    if q <= 0.0 {
        return Ok(0.0);
    }
    let half_delta = mu_sq / lambda;
    if half_delta > 700.0 {
        return Err(ModelError::InvalidParameter {
            name: "mu_sq",
            message: format!("noncentrality ratio {half_delta} too large for the series form"),
        });
    }
    let y = q / lambda;
    let mut weight = (-half_delta).exp();
    let mut cumulative = 0.0;
    let mut cdf = 0.0;
    let mut j = 0usize;
    loop {
        cdf += weight * gamma_lr((j + 1) as f64, y);
        cumulative += weight;
        if 1.0 - cumulative < 1e-14 {
            break;
        }
        j += 1;
        if j > 100_000 {
            return Err(ModelError::QuadratureFailed {
                message: "noncentral chi-square series did not converge".to_string(),
            });
        }
        weight *= half_delta / j as f64;
    }
    Ok(cdf.min(1.0))
}

/// Two-sample Kolmogorov–Smirnov statistic; both slices must be sorted
/// ascending.
pub fn ks_statistic_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// One-sample Kolmogorov–Smirnov statistic of sorted samples against a CDF.
pub fn ks_statistic_against<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n);
        d = d.max((i + 1) as f64 / n - f);
    }
    d
}

/// Contents of a raw sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFileContents {
    /// Configuration hash recorded at write time.
    pub config_hash: String,
    /// Base seed of the experiment.
    pub seed: u64,
    /// The stored samples (sorted ascending, as written).
    pub samples: Vec<f64>,
}

/// Writes the sorted samples as a binary file: one text header line
/// `rislink-samples v1 hash=<hash> seed=<seed> count=<n>` followed by
/// `n` little-endian 64-bit floats.
pub fn write_sample_file(
    path: &Path,
    config_hash: &str,
    dist: &EmpiricalDistribution,
) -> Result<()> {
    if config_hash.is_empty() || config_hash.contains(char::is_whitespace) {
        return Err(ModelError::InvalidParameter {
            name: "config_hash",
            message: format!("hash must be a non-empty token, got {config_hash:?}"),
        });
    }
    let mut bytes = format!(
        "rislink-samples v1 hash={config_hash} seed={} count={}\n",
        dist.seed(),
        dist.len()
    )
    .into_bytes();
    bytes.reserve(dist.len() * 8);
    for &x in dist.samples() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| ModelError::Io {
        message: format!("writing {}: {e}", path.display()),
    })
}

/// Reads a raw sample file written by [`write_sample_file`].
pub fn read_sample_file(path: &Path) -> Result<SampleFileContents> {
    let bytes = fs::read(path).map_err(|e| ModelError::Io {
        message: format!("reading {}: {e}", path.display()),
    })?;
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| ModelError::Io {
            message: format!("{}: missing header line", path.display()),
        })?;
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| ModelError::Io {
        message: format!("{}: header is not UTF-8", path.display()),
    })?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("rislink-samples") || fields.next() != Some("v1") {
        return Err(ModelError::Io {
            message: format!("{}: not a v1 sample file", path.display()),
        });
    }
    let mut config_hash = None;
    let mut seed = None;
    let mut count = None;
    for field in fields {
        if let Some(v) = field.strip_prefix("hash=") {
            config_hash = Some(v.to_string());
        } else if let Some(v) = field.strip_prefix("seed=") {
            seed = v.parse::<u64>().ok();
        } else if let Some(v) = field.strip_prefix("count=") {
            count = v.parse::<usize>().ok();
        }
    }
    let (config_hash, seed, count) = match (config_hash, seed, count) {
        (Some(h), Some(s), Some(c)) => (h, s, c),
        _ => {
            return Err(ModelError::Io {
                message: format!("{}: malformed header `{header}`", path.display()),
            })
        }
    };
    let payload = &bytes[header_end + 1..];
    if payload.len() != count * 8 {
        return Err(ModelError::Io {
            message: format!(
                "{}: payload holds {} bytes, header promises {count} samples",
                path.display(),
                payload.len()
            ),
        });
    }
    let samples = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks_exact yields 8 bytes")))
        .collect();
    Ok(SampleFileContents {
        config_hash,
        seed,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// The reference experiment: optimal 2-bit phases, K_H = K_G = 3,
    /// 4x4 MIMO through a 100-element surface.
    pub(crate) fn reference_config() -> SimConfig {
        SimConfig {
            n_t: 4,
            n_r: 4,
            n_ris: 100,
            hop_h: RicianHop::unit(3.0).unwrap(),
            hop_g: RicianHop::unit(3.0).unwrap(),
            policy: PhasePolicy::OptimalDiscrete { bits: 2 },
            amplitude: AmplitudeModel::new(0.8, 0.43 * PI, 1.6).unwrap(),
            angles: LinkAngles {
                tx: AnglePair::new(PI / 6.0, PI / 4.0),
                ris_in: AnglePair::new(PI / 6.0, PI / 4.0),
                ris_out: AnglePair::new(PI / 3.0, PI / 5.0),
                rx: PI / 4.0,
            },
            precoder: Precoder::LosAligned,
            rho_bar: 1.0,
            trials: 1000,
            seed: 7,
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = reference_config();
        cfg.n_t = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = reference_config();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = reference_config();
        cfg.rho_bar = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = reference_config();
        cfg.policy = PhasePolicy::Random { bits: 0 };
        assert!(cfg.validate().is_err());
        assert!(reference_config().validate().is_ok());
    }

    #[test]
    fn hop_sample_moments_match_rician_normalization() {
        // Mean of each entry ~ sqrt(K/(K+1)) * LoS entry, variance ~ 1/(K+1),
        // both within 5 standard errors over 1e5 draws.
        let mut cfg = reference_config();
        cfg.n_ris = 16;
        cfg.n_t = 2;
        let geo = cfg.link_geometry().unwrap();
        let draws = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut mean = Complex64::new(0.0, 0.0);
        let mut mean_sq = 0.0;
        let entry = 5usize; // row 2, col 1
        let mut entries = Vec::with_capacity(draws);
        for _ in 0..draws {
            let h = sample_hop_h(&cfg, &geo, &mut rng);
            mean += h[entry];
            entries.push(h[entry]);
        }
        mean /= draws as f64;
        let los = cfg.hop_h.los_scale() * geo.a_in.entries()[2] * geo.m_t.entries()[1].conj();
        for &z in &entries {
            mean_sq += (z - los).norm_sqr();
        }
        let var = mean_sq / draws as f64;
        let want_var = cfg.hop_h.nlos_entry_variance();
        // SE of the complex mean components is sqrt(var/2 / n).
        let se_mean = (want_var / 2.0 / draws as f64).sqrt();
        assert!(
            (mean - los).re.abs() < 5.0 * se_mean && (mean - los).im.abs() < 5.0 * se_mean,
            "entry mean {mean} vs LoS {los} (se {se_mean})"
        );
        // SE of the variance of |CN|^2 with variance v is about v/sqrt(n).
        let se_var = want_var / (draws as f64).sqrt();
        assert!(
            (var - want_var).abs() < 5.0 * se_var,
            "entry variance {var} vs {want_var}"
        );
    }

    #[test]
    fn strong_los_makes_cascade_deterministic() {
        // With K = 1e12 the diffuse parts are negligible: every sample of
        // the LoS-aligned SNR equals |alpha|^2 * N_t * N_r almost exactly.
        let mut cfg = reference_config();
        cfg.hop_h = RicianHop::unit(1e12).unwrap();
        cfg.hop_g = RicianHop::unit(1e12).unwrap();
        cfg.trials = 64;
        let spec = theoretical_quadform(&cfg).unwrap();
        let want: f64 = spec.noncentralities().iter().sum();
        let dist = simulate_snr(&cfg).unwrap();
        for &s in dist.samples() {
            assert!(
                (s - want).abs() < 1e-3 * want,
                "sample {s} deviates from deterministic value {want}"
            );
        }
    }

    #[test]
    fn simulation_is_seed_reproducible() {
        let mut cfg = reference_config();
        cfg.trials = 500;
        let a = simulate_snr(&cfg).unwrap();
        let b = simulate_snr(&cfg).unwrap();
        assert_eq!(a.trial_samples(), b.trial_samples());
        cfg.seed = 8;
        let c = simulate_snr(&cfg).unwrap();
        assert_ne!(a.trial_samples(), c.trial_samples());
    }

    #[test]
    fn benchmark_precoder_dominates_per_trial() {
        let mut cfg = reference_config();
        cfg.trials = 300;
        let los = simulate_snr(&cfg).unwrap();
        cfg.precoder = Precoder::MaxEigenvector;
        let best = simulate_snr(&cfg).unwrap();
        assert_eq!(best.failed_trials(), 0);
        for (l, b) in los.trial_samples().iter().zip(best.trial_samples()) {
            assert!(
                b >= l,
                "max-eigenvector sample {b} below los-aligned sample {l}"
            );
        }
    }

    #[test]
    fn quadform_sampler_matches_cumulants() {
        let spec = QuadFormSpec::new(
            vec![109.421_469_61, 56.899_164_2, 56.899_164_2, 56.899_164_2],
            vec![51_116.413_362_71, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let dist = sample_quadform(&spec, 20_000, 11).unwrap();
        let se_mean = dist.std_error();
        assert!(
            (dist.mean() - spec.mean()).abs() < 5.0 * se_mean,
            "mean {} vs K'(0) = {}",
            dist.mean(),
            spec.mean()
        );
        // SE of the sample variance ~ var * sqrt(2/n + kurtosis-term); a
        // generous 5x sqrt(8/n) covers the skewed case here.
        let se_var = spec.variance() * (8.0 / dist.len() as f64).sqrt();
        assert!(
            (dist.variance() - spec.variance()).abs() < 5.0 * se_var,
            "variance {} vs K''(0) = {}",
            dist.variance(),
            spec.variance()
        );
    }

    #[test]
    fn quadform_sampler_central_case_is_gamma() {
        use statrs::distribution::{ContinuousCDF, Gamma};
        // Equal lambdas, zero means: Q/lambda ~ Gamma(shape N_r, scale 1)
        // scaled; KS distance below 2x the 5% critical value.
        let spec = QuadFormSpec::new(vec![2.0; 4], vec![0.0; 4]).unwrap();
        let n = 1_000_000usize;
        let dist = sample_quadform(&spec, n, 5).unwrap();
        let gamma = Gamma::new(4.0, 0.5).unwrap(); // rate 1/scale, scale = 2
        let d = ks_statistic_against(dist.samples(), |x| gamma.cdf(x));
        let critical = 1.358 / (n as f64).sqrt();
        assert!(
            d < 2.0 * critical,
            "KS distance {d} exceeds twice the critical value {critical}"
        );
    }

    #[test]
    fn gil_pelaez_matches_exponential() {
        let spec = QuadFormSpec::new(vec![1.0], vec![0.0]).unwrap();
        for q in [0.05, 0.5, 1.0, 2.0, 5.0, 12.0] {
            let f = gil_pelaez_cdf(&spec, q).unwrap();
            let exact = 1.0 - (-q).exp();
            assert!((f - exact).abs() < 1e-6, "q = {q}: GP {f} vs exact {exact}");
        }
    }

    #[test]
    fn gil_pelaez_matches_noncentral_series() {
        // Noncentrality-to-eigenvalue ratios 0.1, 1, 10.
        for ratio in [0.1, 1.0, 10.0] {
            let lambda = 2.0;
            let mu_sq = ratio * lambda;
            let spec = QuadFormSpec::new(vec![lambda], vec![mu_sq]).unwrap();
            let mean = spec.mean();
            let sd = spec.variance().sqrt();
            for k in 0..9 {
                let q = (mean + sd * (-2.0 + 0.5 * k as f64)).max(0.05 * mean);
                let gp = gil_pelaez_cdf(&spec, q).unwrap();
                let exact = exact_single_term_cdf(lambda, mu_sq, q).unwrap();
                assert!(
                    (gp - exact).abs() < 2e-6,
                    "ratio {ratio}, q {q}: GP {gp} vs series {exact}"
                );
            }
        }
    }

    #[test]
    fn gil_pelaez_left_tail_is_tiny() {
        let spec = QuadFormSpec::new(
            vec![109.421_469_61, 56.899_164_2, 56.899_164_2, 56.899_164_2],
            vec![51_116.413_362_71, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let f = gil_pelaez_cdf(&spec, 1e-3 * spec.mean()).unwrap();
        assert!(f < 1e-6, "F(0+) = {f}");
    }

    #[test]
    fn exact_single_term_cdf_basics() {
        // Central case: exponential.
        for q in [0.1, 1.0, 3.0] {
            let f = exact_single_term_cdf(2.0, 0.0, q).unwrap();
            let exact = 1.0 - (-q / 2.0f64).exp();
            assert!((f - exact).abs() < 1e-12);
        }
        // Degenerate arguments.
        assert_eq!(exact_single_term_cdf(1.0, 0.0, -1.0).unwrap(), 0.0);
        assert!(exact_single_term_cdf(0.0, 0.0, 1.0).is_err());
        assert!(exact_single_term_cdf(1.0, -1.0, 1.0).is_err());
        assert!(exact_single_term_cdf(1.0, 701.0, 1.0).is_err());
        // Monotone in q.
        let mut prev = 0.0;
        for k in 1..40 {
            let f = exact_single_term_cdf(1.0, 5.0, 0.5 * k as f64).unwrap();
            assert!(f >= prev);
            prev = f;
        }
        assert!(prev > 0.99);
    }

    #[test]
    fn ks_helpers_behave() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let b = a.clone();
        assert!(ks_statistic_two_sample(&a, &b) < 1e-12);
        let shifted: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        assert!(ks_statistic_two_sample(&a, &shifted) > 0.4);
        // Uniform samples against the uniform CDF.
        let d = ks_statistic_against(&a, |x| x.clamp(0.0, 1.0));
        assert!(d <= 1.0 / 1000.0 + 1e-12);
    }

    #[test]
    fn covariance_estimate_matches_structure_quickly() {
        // A fast 5-SE smoke check; the full grid lives in the validation
        // suite.
        let mut cfg = reference_config();
        cfg.n_t = 1;
        let est = empirical_covariance_z(&cfg, 20_000).unwrap();
        let geo = cfg.link_geometry().unwrap();
        let (a, b) = crate::chanstats::effective_covariance_coeffs(
            &cfg.hop_h,
            &cfg.hop_g,
            geo.ris.xi_beta(),
            geo.m_t.norm_sqr(),
        )
        .unwrap();
        let mr = geo.m_r.entries();
        for i in 0..cfg.n_r {
            for j in 0..cfg.n_r {
                let idx = i * cfg.n_r + j;
                let want = b * mr[i] * mr[j].conj()
                    + if i == j {
                        Complex64::new(a, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                let got = est.matrix[idx];
                // Diagonal entries are real products, so their imaginary
                // standard error is exactly zero; keep a tiny floor.
                assert!(
                    (got.re - want.re).abs() <= 5.0 * est.se_re[idx] + 1e-12,
                    "Re[{i}{j}]: {} vs {} (se {})",
                    got.re,
                    want.re,
                    est.se_re[idx]
                );
                assert!(
                    (got.im - want.im).abs() <= 5.0 * est.se_im[idx] + 1e-12,
                    "Im[{i}{j}]: {} vs {} (se {})",
                    got.im,
                    want.im,
                    est.se_im[idx]
                );
            }
        }
    }

    #[test]
    fn covariance_requires_los_precoder() {
        let mut cfg = reference_config();
        cfg.precoder = Precoder::MaxEigenvector;
        assert!(empirical_covariance_z(&cfg, 100).is_err());
    }

    #[test]
    fn entry_sampler_matches_mean() {
        let mut cfg = reference_config();
        cfg.trials = 20_000;
        let samples = sample_cascaded_entry(&cfg, 1, 2).unwrap();
        let geo = cfg.link_geometry().unwrap();
        let alpha = cascaded_mean_scale(&cfg.hop_h, &cfg.hop_g, geo.ris.eta_ris());
        let want = alpha * geo.m_r.entries()[1] * geo.m_t.entries()[2].conj();
        let mean: Complex64 = samples.iter().sum::<Complex64>() / samples.len() as f64;
        let var =
            crate::chanstats::cascaded_entry_variance(&cfg.hop_h, &cfg.hop_g, geo.ris.xi_beta())
                .unwrap();
        let se = (var / 2.0 / samples.len() as f64).sqrt();
        assert!(
            (mean - want).re.abs() < 5.0 * se && (mean - want).im.abs() < 5.0 * se,
            "entry mean {mean} vs {want} (se {se})"
        );
    }

    #[test]
    fn sample_file_roundtrip() {
        let dir = std::env::temp_dir().join(format!("rislink-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.samples");
        let dist =
            EmpiricalDistribution::from_trial_samples(vec![3.0, 1.0, 2.5, 0.25], 42, 0).unwrap();
        write_sample_file(&path, "abcdef0123456789", &dist).unwrap();
        let back = read_sample_file(&path).unwrap();
        assert_eq!(back.config_hash, "abcdef0123456789");
        assert_eq!(back.seed, 42);
        assert_eq!(back.samples, dist.samples());
        // Corrupt the payload length.
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_sample_file(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn empirical_distribution_summaries() {
        let dist =
            EmpiricalDistribution::from_trial_samples(vec![4.0, 1.0, 3.0, 2.0], 0, 1).unwrap();
        assert_eq!(dist.samples(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(dist.trial_samples(), &[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(dist.mean(), 2.5);
        assert!((dist.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(dist.failed_trials(), 1);
        assert_eq!(dist.cdf(0.5), 0.0);
        assert_eq!(dist.cdf(2.0), 0.25); // strict: #{x < 2} = 1
        assert_eq!(dist.cdf(100.0), 1.0);
        assert!(EmpiricalDistribution::from_trial_samples(vec![], 0, 0).is_err());
        assert!(EmpiricalDistribution::from_trial_samples(vec![1.0, -2.0], 0, 0).is_err());
    }
}

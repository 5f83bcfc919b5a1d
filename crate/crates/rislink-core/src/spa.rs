//! Saddle-point evaluation of the distribution of the SNR quadratic form.
//!
//! With `Q = Σ_i |x̃_i|²`, `x̃_i ~ CN(μ̃_i, λ_i)` independent, the MGF is
//!
//! ```text
//! M(s) = Π_i (1 − s λ_i)^{-1} · exp(s |μ̃_i|² / (1 − s λ_i)),   s < 1/max(λ_i),
//! ```
//!
//! and everything here works off the cumulant generating function
//! `K(s) = log M(s)` and its first three derivatives.  For an evaluation
//! point `q > 0` the saddle point `ŝ` solves `K'(ŝ) = q` (unique, since `K`
//! is strictly convex on its domain); the density follows from the
//! saddle-point approximation and the CDF from the Lugannani–Rice formula
//!
//! ```text
//! f(q) ≈ exp(K(ŝ) − ŝ q) / sqrt(2π K''(ŝ))
//! F(q) ≈ Φ(w) + φ(w) (1/w − 1/u),   w = sign(ŝ) sqrt(2(ŝq − K(ŝ))),  u = ŝ sqrt(K''(ŝ)).
//! ```
//!
//! The LR formula is singular at the mean (`w = u = 0`): below
//! [`W_NEAR_MEAN`] in `|w|` the limit value
//! `F ≈ 1/2 + K'''(ŝ) / (6 sqrt(2π) K''(ŝ)^{3/2})` is used instead, and up
//! to [`W_BLEND_END`] the two are blended linearly so no seam is visible.
//! Results taking either non-standard path are flagged
//! [`Branch::NearMeanLimit`] in the returned diagnostics.
//!
//! The PDF is reported exactly as the approximation gives it, without
//! renormalization, so integrating it over the support yields values close
//! to but not exactly 1 (e.g. `e/sqrt(2π) ≈ 1.084` for a single exponential
//! term; within a few tenths of a percent for the many-term spiked specs
//! this crate produces).

use statrs::function::erf::erfc;

use crate::chanstats::QuadFormSpec;
use crate::error::{ModelError, Result};

/// `|w|` below which the CDF switches to the near-mean limit formula.
pub const W_NEAR_MEAN: f64 = 1e-4;

/// `|w|` below which the limit formula is blended into the standard
/// Lugannani–Rice value.
pub const W_BLEND_END: f64 = 1e-2;

/// Iteration budget of the saddle solver (bracketed Newton: bisection needs
/// at most ~60 halvings, Newton finishes quadratically).
const MAX_SADDLE_ITERATIONS: usize = 200;

/// The CGF and its first three derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfEval {
    /// Evaluation point.
    pub s: f64,
    /// `K(s)`.
    pub value: f64,
    /// `K'(s)`.
    pub d1: f64,
    /// `K''(s)` (strictly positive on the domain).
    pub d2: f64,
    /// `K'''(s)`.
    pub d3: f64,
}

/// Stopping tolerance of the saddle solve: `|K'(s) − q| ≤ rtol·q + atol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleTolerance {
    /// Relative part, scaled by `q`.
    pub rtol: f64,
    /// Absolute part.
    pub atol: f64,
}

impl Default for SaddleTolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

/// A converged saddle point together with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleSolution {
    /// The saddle point `ŝ` with `K'(ŝ) = q`.
    pub s_hat: f64,
    /// The evaluation point the solve was run for.
    pub q: f64,
    /// CGF evaluation at `ŝ`.
    pub cgf: CgfEval,
    /// Newton/bisection iterations spent.
    pub iterations: usize,
    /// Always true for returned solutions (failures are errors).
    pub converged: bool,
}

/// Which evaluation path produced a distribution value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The plain saddle-point / Lugannani–Rice formula.
    Standard,
    /// The near-mean limit was used or blended in (`|w| < W_BLEND_END`).
    NearMeanLimit,
}

/// A PDF/CDF value with the saddle diagnostics that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionResult {
    /// The density or probability.
    pub value: f64,
    /// Evaluation path taken.
    pub branch: Branch,
    /// The saddle solution behind the value.
    pub diagnostics: SaddleSolution,
}

fn check_spec_point(spec: &QuadFormSpec, s: f64) -> Result<()> {
    let s_max = 1.0 / spec.lambda_max();
    if !s.is_finite() || s >= s_max {
        return Err(ModelError::OutsideDomain { s, s_max });
    }
    Ok(())
}

/// CGF evaluation without the domain check, for solver-internal points that
/// are inside the bracket by construction.
fn cgf_unchecked(spec: &QuadFormSpec, s: f64) -> CgfEval {
    let mut value = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    let mut d3 = 0.0;
    for (&l, &m) in spec.lambdas().iter().zip(spec.noncentralities()) {
        let r = 1.0 / (1.0 - s * l);
        let r2 = r * r;
        // log1p keeps K accurate where |s·λ| is tiny.
        value += -(-s * l).ln_1p() + s * m * r;
        d1 += l * r + m * r2;
        d2 += l * l * r2 + 2.0 * l * m * r2 * r;
        d3 += 2.0 * l * l * l * r2 * r + 6.0 * l * l * m * r2 * r2;
    }
    CgfEval {
        s,
        value,
        d1,
        d2,
        d3,
    }
}

/// Moment generating function `M(s)` of the form, for `s < 1/max(λ_i)`.
pub fn mgf(spec: &QuadFormSpec, s: f64) -> Result<f64> {
    check_spec_point(spec, s)?;
    Ok(cgf_unchecked(spec, s).value.exp())
}

/// The CGF `K(s)` and its first three derivatives, for `s < 1/max(λ_i)`.
pub fn cgf_eval(spec: &QuadFormSpec, s: f64) -> Result<CgfEval> {
    check_spec_point(spec, s)?;
    Ok(cgf_unchecked(spec, s))
}

/// Solves the saddle-point equation `K'(ŝ) = q`.
///
/// `K'` is strictly increasing from 0 (at `s → −∞`) to `+∞` (at the domain
/// edge), so a bracketed Newton iteration is globally convergent: the
/// bracket starts at `(−1/q, (1 − 1e-12)/λ_max)`, expanding the left end by
/// doubling until `K'` falls below `q` there, and any Newton step leaving
/// the bracket is replaced by bisection.
pub fn solve_saddle(spec: &QuadFormSpec, q: f64, tol: SaddleTolerance) -> Result<SaddleSolution> {
    if !q.is_finite() || q <= 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "q",
            message: format!("evaluation point must be finite and positive, got {q}"),
        });
    }
    let bad = |t: f64| t.is_nan() || t < 0.0;
    if bad(tol.rtol) || bad(tol.atol) || tol.rtol + tol.atol == 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "tol",
            message: "tolerances must be non-negative and not both zero".to_string(),
        });
    }
    let target = tol.rtol * q + tol.atol;
    let mut hi = (1.0 - 1e-12) / spec.lambda_max();
    let mut lo = -1.0 / q;
    let mut expansions = 0usize;
    while cgf_unchecked(spec, lo).d1 > q {
        lo *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(ModelError::SaddleNotConverged {
                q,
                iterations: expansions,
                residual: f64::INFINITY,
            });
        }
    }

    // Start at the origin, which always lies strictly inside the bracket.
    let mut s = 0.0;
    let mut iterations = 0usize;
    loop {
        let eval = cgf_unchecked(spec, s);
        let residual = eval.d1 - q;
        if residual.abs() <= target {
            return Ok(SaddleSolution {
                s_hat: s,
                q,
                cgf: eval,
                iterations,
                converged: true,
            });
        }
        if residual > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        iterations += 1;
        if iterations > MAX_SADDLE_ITERATIONS {
            return Err(ModelError::SaddleNotConverged {
                q,
                iterations,
                residual: residual.abs(),
            });
        }
        let newton = s - residual / eval.d2;
        s = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
}

/// Saddle-point density of the form at `q > 0`.
pub fn pdf(spec: &QuadFormSpec, q: f64) -> Result<DistributionResult> {
    let sol = solve_saddle(spec, q, SaddleTolerance::default())?;
    let value =
        (sol.cgf.value - sol.s_hat * q).exp() / (2.0 * std::f64::consts::PI * sol.cgf.d2).sqrt();
    Ok(DistributionResult {
        value: value.max(0.0),
        branch: Branch::Standard,
        diagnostics: sol,
    })
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Lugannani–Rice CDF of the form at `q > 0`, with the near-mean limit
/// branch described in the module docs.  The value is clamped to `[0, 1]`
/// (the raw formula can overshoot by a sliver in extreme tails).
pub fn cdf(spec: &QuadFormSpec, q: f64) -> Result<DistributionResult> {
    let sol = solve_saddle(spec, q, SaddleTolerance::default())?;
    let k = &sol.cgf;
    // Legendre transform value; non-negative mathematically, clipped against
    // rounding noise at the mean.
    let arg = (2.0 * (sol.s_hat * q - k.value)).max(0.0);
    let w = if sol.s_hat == 0.0 {
        0.0
    } else if sol.s_hat > 0.0 {
        arg.sqrt()
    } else {
        -arg.sqrt()
    };
    let w_abs = w.abs();

    let f_limit = 0.5 + k.d3 / (6.0 * (2.0 * std::f64::consts::PI).sqrt() * k.d2.powf(1.5));
    let (raw, branch) = if w_abs < W_NEAR_MEAN {
        (f_limit, Branch::NearMeanLimit)
    } else {
        let u = sol.s_hat * k.d2.sqrt();
        let f_standard = normal_cdf(w) + normal_pdf(w) * (1.0 / w - 1.0 / u);
        if w_abs < W_BLEND_END {
            let t = (w_abs - W_NEAR_MEAN) / (W_BLEND_END - W_NEAR_MEAN);
            ((1.0 - t) * f_limit + t * f_standard, Branch::NearMeanLimit)
        } else {
            (f_standard, Branch::Standard)
        }
    };

    Ok(DistributionResult {
        value: raw.clamp(0.0, 1.0),
        branch,
        diagnostics: sol,
    })
}

/// Outage probability `P(ρ̄ · Q < ρ_th) = F_Q(ρ_th / ρ̄)`.
pub fn outage(spec: &QuadFormSpec, rho_bar: f64, rho_th: f64) -> Result<f64> {
    for (name, v) in [("rho_bar", rho_bar), ("rho_th", rho_th)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "rho_bar/rho_th",
                message: format!("{name} must be finite and positive, got {v}"),
            });
        }
    }
    Ok(cdf(spec, rho_th / rho_bar)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(lambda: f64, mu_sq: f64) -> QuadFormSpec {
        QuadFormSpec::new(vec![lambda], vec![mu_sq]).unwrap()
    }

    /// The spiked spec of the reference configuration (optimal 2-bit phases,
    /// K_H = K_G = 3, 4x4 MIMO, 100 elements).
    fn spiked() -> QuadFormSpec {
        QuadFormSpec::new(
            vec![109.421_469_61, 56.899_164_2, 56.899_164_2, 56.899_164_2],
            vec![51_116.413_362_71, 0.0, 0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn mgf_examples() {
        let spec = single(1.0, 0.0);
        assert!((mgf(&spec, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((mgf(&spec, 0.5).unwrap() - 2.0).abs() < 1e-12);
        let noncentral = single(1.0, 1.0);
        assert!((mgf(&noncentral, 0.5).unwrap() - 2.0 * std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn mgf_domain_errors() {
        let spec = single(2.0, 0.0);
        // Domain edge is 1/2.
        assert!(mgf(&spec, 0.5).is_err());
        assert!(mgf(&spec, 0.7).is_err());
        assert!(mgf(&spec, f64::NAN).is_err());
        assert!(mgf(&spec, 0.49).is_ok());
        assert!(mgf(&spec, -100.0).is_ok());
    }

    #[test]
    fn cgf_at_origin_gives_cumulants() {
        let spec = spiked();
        let e = cgf_eval(&spec, 0.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert!((e.d1 - spec.mean()).abs() < 1e-12 * spec.mean());
        assert!((e.d2 - spec.variance()).abs() < 1e-12 * spec.variance());
        // Third cumulant at the origin: 2Σλ³ + 6Σλ²|μ̃|².
        let want: f64 = spec
            .lambdas()
            .iter()
            .zip(spec.noncentralities())
            .map(|(l, m)| 2.0 * l * l * l + 6.0 * l * l * m)
            .sum();
        assert!((e.d3 - want).abs() < 1e-12 * want);
    }

    #[test]
    fn cgf_chanstats_example() {
        let spec = QuadFormSpec::new(vec![225.0, 125.0, 125.0, 125.0], vec![144.0, 0.0, 0.0, 0.0])
            .unwrap();
        let e = cgf_eval(&spec, 0.0).unwrap();
        assert!((e.d1 - 744.0).abs() < 1e-12 * 744.0);
    }

    #[test]
    fn cgf_derivatives_match_finite_differences() {
        let spec = QuadFormSpec::new(vec![2.0, 1.0, 0.5], vec![1.5, 0.0, 0.3]).unwrap();
        let h = 1e-6;
        for s in [-2.0, -0.5, 0.0, 0.2, 0.4] {
            let e = cgf_eval(&spec, s).unwrap();
            let plus = cgf_eval(&spec, s + h).unwrap();
            let minus = cgf_eval(&spec, s - h).unwrap();
            let fd1 = (plus.value - minus.value) / (2.0 * h);
            let fd2 = (plus.d1 - minus.d1) / (2.0 * h);
            let fd3 = (plus.d2 - minus.d2) / (2.0 * h);
            assert!(
                (fd1 - e.d1).abs() < 1e-5 * e.d1.abs().max(1.0),
                "d1 at s={s}"
            );
            assert!(
                (fd2 - e.d2).abs() < 1e-5 * e.d2.abs().max(1.0),
                "d2 at s={s}"
            );
            assert!(
                (fd3 - e.d3).abs() < 1e-5 * e.d3.abs().max(1.0),
                "d3 at s={s}"
            );
        }
    }

    #[test]
    fn cgf_is_strictly_convex_on_domain() {
        let spec = spiked();
        let edge = 1.0 / spec.lambda_max();
        for i in 0..100 {
            // Sweep from deep negative s up to 95% of the domain edge.
            let s = (-5.0 + 5.95 * i as f64 / 99.0) * edge;
            let e = cgf_eval(&spec, s).unwrap();
            assert!(e.d2 > 0.0);
        }
    }

    #[test]
    fn saddle_at_mean_is_zero() {
        let spec = spiked();
        let sol = solve_saddle(&spec, spec.mean(), SaddleTolerance::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.s_hat.abs() < 1e-12);
    }

    #[test]
    fn saddle_matches_exponential_inversion() {
        // Single central term λ=1: K'(s) = 1/(1−s), so ŝ = 1 − 1/q.
        let spec = single(1.0, 0.0);
        for q in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let sol = solve_saddle(&spec, q, SaddleTolerance::default()).unwrap();
            let want = 1.0 - 1.0 / q;
            assert!(
                (sol.s_hat - want).abs() < 1e-9 * want.abs().max(1.0),
                "q = {q}: got {}, want {want}",
                sol.s_hat
            );
        }
    }

    #[test]
    fn saddle_sign_trichotomy_and_monotonicity() {
        let spec = spiked();
        let mean = spec.mean();
        let sd = spec.variance().sqrt();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..41 {
            let q = mean + sd * (-4.0 + 0.2 * i as f64);
            let sol = solve_saddle(&spec, q, SaddleTolerance::default()).unwrap();
            // Residual invariant.
            assert!((sol.cgf.d1 - q).abs() <= 1e-10 * q + 1e-12);
            // Sign trichotomy.
            if q < mean - 1e-9 {
                assert!(sol.s_hat < 0.0, "q below mean should give negative saddle");
            }
            if q > mean + 1e-9 {
                assert!(sol.s_hat > 0.0 && sol.s_hat < 1.0 / spec.lambda_max());
            }
            // Monotonicity in q.
            assert!(sol.s_hat > prev);
            prev = sol.s_hat;
        }
    }

    #[test]
    fn saddle_handles_extreme_points() {
        let spec = spiked();
        // Deep left tail and far right tail both converge.
        let left = solve_saddle(&spec, 1e-6 * spec.mean(), SaddleTolerance::default()).unwrap();
        assert!(left.s_hat < 0.0);
        let right = solve_saddle(&spec, 10.0 * spec.mean(), SaddleTolerance::default()).unwrap();
        assert!(right.s_hat > 0.0 && right.s_hat < 1.0 / spec.lambda_max());
        // Invalid points are rejected.
        assert!(solve_saddle(&spec, 0.0, SaddleTolerance::default()).is_err());
        assert!(solve_saddle(&spec, -1.0, SaddleTolerance::default()).is_err());
    }

    #[test]
    fn pdf_of_exponential_is_exact_up_to_stirling() {
        // For a single central term the SPA density is analytically
        // (e/sqrt(2π)) · e^{−q}: the classic Stirling-factor overshoot.
        let spec = single(1.0, 0.0);
        let stirling = std::f64::consts::E / (2.0 * std::f64::consts::PI).sqrt();
        for i in 0..100 {
            let q = 0.1 + 9.9 * i as f64 / 99.0;
            let f = pdf(&spec, q).unwrap().value;
            let exact = (-q).exp();
            assert!(
                (f / exact - stirling).abs() < 1e-9,
                "q = {q}: ratio {}",
                f / exact
            );
            // Within the documented 12% band of the exact density.
            assert!((f - exact).abs() <= 0.12 * exact);
        }
    }

    #[test]
    fn pdf_nonnegative_on_grid() {
        let spec = spiked();
        let mean = spec.mean();
        let sd = spec.variance().sqrt();
        for i in 0..1000 {
            let q = (mean - 6.0 * sd).max(1e-3 * mean) + 12.0 * sd * i as f64 / 999.0;
            let r = pdf(&spec, q).unwrap();
            assert!(r.value >= 0.0);
            assert_eq!(r.branch, Branch::Standard);
        }
    }

    #[test]
    fn pdf_integrates_to_one_within_band() {
        // Four-term central spec (Gamma(4) shape): the unnormalized SPA mass
        // is Γ-function Stirling error, about 1.021.
        let gamma4 = QuadFormSpec::new(vec![1.0; 4], vec![0.0; 4]).unwrap();
        let mass = crate::quadrature::integrate(
            |q| pdf(&gamma4, q).map(|r| r.value).unwrap_or(0.0),
            1e-9,
            30.0,
            1e-8,
        )
        .unwrap();
        assert!(
            (0.97..=1.03).contains(&mass.value),
            "Gamma(4) SPA mass = {}",
            mass.value
        );

        // The spiked reference spec is extremely well normalized (~1.0004).
        let spec = spiked();
        let mean = spec.mean();
        let sd = spec.variance().sqrt();
        let mass = crate::quadrature::integrate(
            |q| pdf(&spec, q).map(|r| r.value).unwrap_or(0.0),
            (mean - 8.0 * sd).max(1e-6 * mean),
            mean + 10.0 * sd,
            1e-8,
        )
        .unwrap();
        assert!(
            (0.97..=1.03).contains(&mass.value),
            "spiked SPA mass = {}",
            mass.value
        );
    }

    #[test]
    fn cdf_of_exponential_within_tolerance() {
        let spec = single(1.0, 0.0);
        let r = cdf(&spec, 2.0).unwrap();
        let exact = 1.0 - (-2.0f64).exp();
        assert!(
            (r.value - exact).abs() < 5e-3,
            "LR = {}, exact = {exact}",
            r.value
        );
        // Frozen value of the LR formula itself for this case.
        assert!((r.value - 0.864_461_010_263_119_6).abs() < 1e-9);
        assert_eq!(r.branch, Branch::Standard);
    }

    #[test]
    fn cdf_limits_at_extreme_quantiles() {
        let spec = spiked();
        let mean = spec.mean();
        let sd = spec.variance().sqrt();
        let low = cdf(&spec, (mean - 8.0 * sd).max(1e-6 * mean))
            .unwrap()
            .value;
        assert!(low < 1e-4, "low tail CDF = {low}");
        let high = cdf(&spec, mean + 8.0 * sd).unwrap().value;
        assert!(high > 1.0 - 1e-4, "high tail CDF = {high}");
        // Clamping keeps extreme evaluations inside [0, 1].
        assert!(cdf(&spec, mean * 20.0).unwrap().value <= 1.0);
        assert!(cdf(&spec, mean * 1e-6).unwrap().value >= 0.0);
    }

    #[test]
    fn cdf_near_mean_branch_and_continuity() {
        let spec = spiked();
        let mean = spec.mean();
        let at_mean = cdf(&spec, mean).unwrap();
        assert_eq!(at_mean.branch, Branch::NearMeanLimit);
        // The limit value is 1/2 plus the skewness correction.
        let e = cgf_eval(&spec, 0.0).unwrap();
        let want = 0.5 + e.d3 / (6.0 * (2.0 * std::f64::consts::PI).sqrt() * e.d2.powf(1.5));
        assert!((at_mean.value - want).abs() < 1e-9);

        // Continuity across the blend edges: small steps in q change the
        // CDF by only a hair more than the density would predict.
        let sd = spec.variance().sqrt();
        let mut prev = cdf(&spec, mean - 0.05 * sd).unwrap().value;
        for i in 1..=100 {
            let q = mean - 0.05 * sd + 0.1 * sd * i as f64 / 100.0;
            let val = cdf(&spec, q).unwrap().value;
            let step = val - prev;
            assert!(
                step > 0.0 && step < 0.002,
                "suspicious CDF step {step} at q = {q}"
            );
            prev = val;
        }
    }

    #[test]
    fn cdf_monotone_on_report_grid() {
        let spec = spiked();
        let mean = spec.mean();
        let sd = spec.variance().sqrt();
        let lo = (mean - 6.0 * sd).max(1e-6 * mean);
        let hi = mean + 6.0 * sd;
        let mut prev = -1.0;
        for i in 0..200 {
            let q = lo + (hi - lo) * i as f64 / 199.0;
            let val = cdf(&spec, q).unwrap().value;
            assert!(val >= prev - 1e-9, "CDF dip at q = {q}: {val} after {prev}");
            prev = val;
        }
    }

    #[test]
    fn pdf_matches_cdf_derivative_away_from_mean() {
        // Centered finite difference of the LR CDF against the SPA density
        // on the spiked spec, which is normalized to ~4e-4; the agreement
        // is limited only by that normalization and FD error.
        let spec = spiked();
        let mean = spec.mean();
        let sd = spec.variance().sqrt();
        let h = 1e-4 * sd;
        for i in 0..60 {
            let q = mean - 5.0 * sd + 10.0 * sd * i as f64 / 59.0;
            if q <= 0.0 {
                continue;
            }
            if cdf(&spec, q).unwrap().branch == Branch::NearMeanLimit {
                continue; // documented exclusion: the blended region
            }
            let fd =
                (cdf(&spec, q + h).unwrap().value - cdf(&spec, q - h).unwrap().value) / (2.0 * h);
            let f = pdf(&spec, q).unwrap().value;
            if f < 1e-12 {
                continue; // tails: both vanish, the ratio is noise
            }
            assert!(
                (fd - f).abs() < 0.01 * f,
                "q = {q}: FD {fd} vs pdf {f} ({}%)",
                100.0 * (fd - f).abs() / f
            );
        }
    }

    #[test]
    fn outage_examples() {
        let spec = spiked();
        // Vanishing threshold.
        assert!(outage(&spec, 1.0, 1e-6 * spec.mean()).unwrap() < 1e-9);
        // Matches the CDF at the scaled point.
        let p = outage(&spec, 2.0, 15.0).unwrap();
        let f = cdf(&spec, 7.5).unwrap().value;
        assert_eq!(p, f);
        // Nonincreasing in rho_bar.
        let mut prev = 1.0;
        for i in 0..20 {
            let rho_bar = 10f64.powf(-4.0 + 0.2 * i as f64);
            let p = outage(&spec, rho_bar, 15.0).unwrap();
            assert!(p <= prev + 1e-12);
            prev = p;
        }
        // Bad arguments.
        assert!(outage(&spec, 0.0, 15.0).is_err());
        assert!(outage(&spec, 1.0, -1.0).is_err());
    }
}

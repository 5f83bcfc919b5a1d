//! Adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! A classic globally adaptive bisection scheme built on the (G7, K15) pair:
//! each interval is estimated with the 15-point Kronrod rule, the embedded
//! 7-point Gauss rule provides the error estimate `|K15 − G7|` (deliberately
//! conservative), and intervals that miss their share of the tolerance are
//! split in half.  Smooth integrands converge in a handful of splits; the
//! oscillatory characteristic-function integrals of the Gil-Pelaez inversion
//! take a few thousand.

use crate::error::{ModelError, Result};

/// Positive abscissae of the 15-point Kronrod rule on [-1, 1] (descending;
/// the final entry is the midpoint).  Entries at odd indices are the
/// embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_47,
    0.0,
];

/// Kronrod weights matching `XGK` (the weight of a positive abscissa is also
/// applied to its mirror image).
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_41,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the nodes at odd indices of `XGK` (and the midpoint).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Hard cap on processed subintervals; hitting it means the integrand is
/// rougher than anything this integrator is meant for.
const MAX_INTERVALS: usize = 500_000;

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    /// The integral estimate.
    pub value: f64,
    /// Sum of the per-interval `|K15 − G7|` error estimates.
    pub abs_error: f64,
    /// Number of integrand evaluations.
    pub evaluations: usize,
}

/// One (K15, error) evaluation on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k15 = WGK[7] * fc;
    let mut g7 = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let pair = f(c + x) + f(c - x);
        k15 += WGK[i] * pair;
        if i % 2 == 1 {
            g7 += WG[i / 2] * pair;
        }
    }
    (h * k15, h * (k15 - g7).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Fails if the integrand produces non-finite values, or if the tolerance is
/// unreachable within the interval budget.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<QuadratureResult> {
    if !a.is_finite() || !b.is_finite() {
        return Err(ModelError::InvalidParameter {
            name: "a/b",
            message: format!("integration limits must be finite, got [{a}, {b}]"),
        });
    }
    if a == b {
        check_tolerance(abs_tol)?;
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    run_adaptive(&f, vec![(a, b, abs_tol)], a, b, abs_tol)
}

/// Integrates `f` over `[points[0], points[last]]` with the given initial
/// subdivision; each starting segment receives a tolerance share
/// proportional to its width.
///
/// Seeding the subdivision matters for oscillatory integrands: the
/// `|K15 − G7|` estimate is only trustworthy once an interval spans at most
/// a few oscillation periods (on wider spans the two rules can alias to the
/// same wrong value and stop refinement early), so callers that know the
/// oscillation rate should pre-split accordingly.
pub fn integrate_segmented<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    abs_tol: f64,
) -> Result<QuadratureResult> {
    if points.len() < 2 {
        return Err(ModelError::InvalidParameter {
            name: "points",
            message: format!("need at least two breakpoints, got {}", points.len()),
        });
    }
    for pair in points.windows(2) {
        if !pair[0].is_finite() || !pair[1].is_finite() || pair[0] >= pair[1] {
            return Err(ModelError::InvalidParameter {
                name: "points",
                message: format!(
                    "breakpoints must be finite and strictly increasing, got {} then {}",
                    pair[0], pair[1]
                ),
            });
        }
    }
    check_tolerance(abs_tol)?;
    let a = points[0];
    let b = points[points.len() - 1];
    let span = b - a;
    // Reverse order so the stack pops segments left to right.
    let initial = points
        .windows(2)
        .rev()
        .map(|pair| (pair[0], pair[1], abs_tol * (pair[1] - pair[0]) / span))
        .collect();
    run_adaptive(&f, initial, a, b, abs_tol)
}

fn check_tolerance(abs_tol: f64) -> Result<()> {
    if !abs_tol.is_finite() || abs_tol <= 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "abs_tol",
            message: format!("tolerance must be finite and positive, got {abs_tol}"),
        });
    }
    Ok(())
}

fn run_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    initial: Vec<(f64, f64, f64)>,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<QuadratureResult> {
    check_tolerance(abs_tol)?;
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0usize;
    let mut processed = 0usize;
    let mut stack: Vec<(f64, f64, f64)> = initial;

    while let Some((lo, hi, tol)) = stack.pop() {
        processed += 1;
        if processed > MAX_INTERVALS {
            return Err(ModelError::QuadratureFailed {
                message: format!(
                    "tolerance {abs_tol:e} not reached after {MAX_INTERVALS} subintervals \
                     on [{a}, {b}]"
                ),
            });
        }
        let (value, err) = gk15(f, lo, hi);
        evaluations += 15;
        if !value.is_finite() {
            return Err(ModelError::QuadratureFailed {
                message: format!("integrand produced a non-finite value on [{lo}, {hi}]"),
            });
        }
        let width_floor = (hi - lo).abs() <= 1e-14 * (lo.abs() + hi.abs() + 1.0);
        if err <= tol || width_floor {
            if width_floor && err > tol {
                return Err(ModelError::QuadratureFailed {
                    message: format!(
                        "interval [{lo}, {hi}] cannot be refined further \
                         (error estimate {err:e} > tolerance {tol:e})"
                    ),
                });
            }
            total += value;
            total_err += err;
        } else {
            let mid = 0.5 * (lo + hi);
            let half_tol = 0.5 * tol;
            stack.push((lo, mid, half_tol));
            stack.push((mid, hi, half_tol));
        }
    }

    Ok(QuadratureResult {
        value: total,
        abs_error: total_err,
        evaluations,
    })
}

//! Asymptotic expansions of φ at the two ends and the smooth-extension verdict.
//!
//! Near w = 0 the profile is fitted as a₀ + a₁x + a₂x² with x = wᵏ, near
//! w = ∞ as b₀ + b₁x + b₂x² with x = w⁻ᵏ. Both ends sit in the region where
//! the slope is exactly ±1, so φ is a closed-form function of x there.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{ProfileMode, RadialProfile};

/// Largest relative residual max|φ − fit| / max|φ| for which a fit counts.
pub const FIT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_WINDOW: (f64, f64) = (1e-8, 1e-4);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionEnd {
    Zero,
    Infinity,
}

impl fmt::Display for ExpansionEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpansionEnd::Zero => "zero",
            ExpansionEnd::Infinity => "infinity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionFit {
    pub end: ExpansionEnd,
    pub coefficients: [f64; 3],
    pub fit_residual: f64,
    /// Range of the expansion variable x that was sampled.
    pub window: (f64, f64),
    pub samples: usize,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionVerdict {
    pub extends_at_zero: bool,
    pub extends_at_infinity: bool,
    /// Set for k > 1, where the criterion is applied in the variable w^{±k}
    /// without a separate justification.
    pub heuristic: bool,
    pub zero: ExpansionFit,
    pub infinity: ExpansionFit,
}

/// The default window, pulled toward the end when the transition band is so
/// wide that [1e−8, 1e−4] would reach into it. At the zero end the series is
/// in x/c, so a small cap constant shrinks the window by c.
pub fn default_window(profile: &RadialProfile, end: ExpansionEnd) -> (f64, f64) {
    let p = profile.params();
    let edge = (-(p.k as f64) * p.delta).exp();
    let scale = match end {
        ExpansionEnd::Zero => p.c.min(1.0),
        ExpansionEnd::Infinity => 1.0,
    };
    let hi = (DEFAULT_WINDOW.1 * scale).min(edge);
    (hi * DEFAULT_WINDOW.0 / DEFAULT_WINDOW.1, hi)
}

pub fn fit_expansion(
    profile: &RadialProfile,
    end: ExpansionEnd,
    samples: usize,
) -> Result<ExpansionFit> {
    fit_expansion_window(profile, end, samples, default_window(profile, end))
}

pub fn fit_expansion_window(
    profile: &RadialProfile,
    end: ExpansionEnd,
    samples: usize,
    window: (f64, f64),
) -> Result<ExpansionFit> {
    if samples < 6 {
        return Err(Error::InvalidParams(format!(
            "need at least 6 samples, got {samples}"
        )));
    }
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "bad expansion window [{lo}, {hi}]"
        )));
    }
    let p = profile.params();
    let k = p.k as f64;
    let r_of = |x: f64| match end {
        ExpansionEnd::Zero => x.ln() / k,
        ExpansionEnd::Infinity => -x.ln() / k,
    };
    let inner = r_of(hi).abs();
    if inner < p.delta {
        return Err(Error::InvalidParams(format!(
            "window reaches |r| = {inner} inside the transition band |r| < {}",
            p.delta
        )));
    }

    let ratio = (hi / lo).ln();
    let xs: Vec<f64> = (0..samples)
        .map(|i| lo * (ratio * i as f64 / (samples - 1) as f64).exp())
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| profile.phi(r_of(x))).collect();
    let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));

    let mut coefficients = [f64::NAN; 3];
    let mut fit_residual = f64::INFINITY;
    if ys.iter().all(|y| y.is_finite()) && scale > 0.0 {
        // Regress in s = x/hi so the three columns have comparable size.
        let design = DMatrix::from_fn(samples, 3, |i, j| (xs[i] / hi).powi(j as i32));
        let rhs = DVector::from_column_slice(&ys);
        if let Ok(sol) = design.clone().svd(true, true).solve(&rhs, 1e-14) {
            let fitted = &design * &sol;
            fit_residual = (&fitted - &rhs).amax() / scale;
            for (j, c) in coefficients.iter_mut().enumerate() {
                *c = sol[j] / hi.powi(j as i32);
            }
        }
    }
    let valid = fit_residual.is_finite() && fit_residual <= FIT_TOLERANCE;
    Ok(ExpansionFit {
        end,
        coefficients,
        fit_residual,
        window,
        samples,
        valid,
    })
}

/// Closed-form (leading, first-order) coefficients where they exist.
pub fn analytic_coefficients(profile: &RadialProfile, end: ExpansionEnd) -> Option<(f64, f64)> {
    let p = profile.params();
    let n = p.n as f64;
    let k = p.k as f64;
    match end {
        ExpansionEnd::Zero => Some((p.c.powf(1.0 / n), p.c.powf(1.0 / n - 1.0) / k)),
        ExpansionEnd::Infinity => {
            let base = p.c + n * profile.f_total_integral().ok()?;
            Some((base.powf(1.0 / n), -base.powf(1.0 / n - 1.0) / k))
        }
    }
}

pub fn check_extension(profile: &RadialProfile) -> ExtensionVerdict {
    let run = |end| {
        fit_expansion(profile, end, DEFAULT_SAMPLES).unwrap_or_else(|_| ExpansionFit {
            end,
            coefficients: [f64::NAN; 3],
            fit_residual: f64::INFINITY,
            window: default_window(profile, end),
            samples: DEFAULT_SAMPLES,
            valid: false,
        })
    };
    let zero = run(ExpansionEnd::Zero);
    let infinity = run(ExpansionEnd::Infinity);
    let [a0, a1, _] = zero.coefficients;
    let [b0, b1, _] = infinity.coefficients;
    ExtensionVerdict {
        extends_at_zero: zero.valid && a0 > 0.0 && a1 > 0.0,
        extends_at_infinity: infinity.valid && b0 > 0.0 && b1 < 0.0,
        heuristic: profile.params().k > 1 && profile.mode() == ProfileMode::PaperSmoothed,
        zero,
        infinity,
    }
}

//! Certification of the initial metric and detection of mixed Ricci sign.

use serde::Serialize;

use crate::calabi::{check_extension, ExtensionVerdict};
use crate::error::Result;
use crate::flow::{
    analytic_dt_psi_r, sign_threshold, FlowSnapshot, FlowSolver, Grid, SolverConfig,
};
use crate::profile::{ProfileMode, RadialProfile};

pub const DEFAULT_SIGN_TOL: f64 = 1e-12;
/// Δt pair for the Richardson estimate of ∂ₜψ_r at t = 0.
pub const RATE_STEPS: (f64, f64) = (1e-5, 5e-6);
/// Integration steps per Δt in the rate estimate.
pub const RATE_SUBSTEPS: usize = 10;
/// Lower end of the r-window used for rate errors and zero-crossing search,
/// at k = 1. For twist k the window starts at RATE_WINDOW_LOW / k: the rate
/// decays like e^{kr} on the cap, and below that point it sinks under the
/// rounding floor of ψ_r.
pub const RATE_WINDOW_LOW: f64 = -20.0;

pub fn rate_window_low(profile: &RadialProfile) -> f64 {
    RATE_WINDOW_LOW / profile.params().k as f64
}
/// Points used to sample the transition band densely in `certify_initial`.
const TRANSITION_SAMPLES: usize = 20_001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub r: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Conditions {
    pub phi_positive: bool,
    pub phi_r_positive: bool,
    pub psi_positive: bool,
    pub psi_r_nonnegative: bool,
    pub extends_at_zero: bool,
    pub extends_at_infinity: bool,
}

impl Conditions {
    pub fn as_array(&self) -> [bool; 6] {
        [
            self.phi_positive,
            self.phi_r_positive,
            self.psi_positive,
            self.psi_r_nonnegative,
            self.extends_at_zero,
            self.extends_at_infinity,
        ]
    }

    pub fn all(&self) -> bool {
        self.as_array().iter().all(|&b| b)
    }
}

/// Minima of the pointwise quantities over the grid and the transition band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witnesses {
    pub phi_min: Witness,
    pub phi_r_min: Witness,
    pub psi_min: Witness,
    pub psi_r_min: Witness,
}

/// Exact values on the two rays where the slope is constant. There φ and φ_r
/// are explicit positive functions and ψ, ψ_r are constants, so checking the
/// constants covers every r on the ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayChecks {
    pub cap_psi: f64,
    pub cap_psi_r: f64,
    /// Absent for the constant-slope profile, which has no far ray.
    pub far_psi: Option<f64>,
    pub far_psi_r: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub conditions: Conditions,
    pub witnesses: Witnesses,
    pub rays: RayChecks,
    pub extension: ExtensionVerdict,
}

pub fn certify_initial(profile: &RadialProfile, grid: &Grid) -> Certificate {
    let p = profile.params();
    let mut points: Vec<f64> = grid.nodes().to_vec();
    if profile.mode() == ProfileMode::PaperSmoothed {
        let d = p.delta;
        let last = (TRANSITION_SAMPLES - 1) as f64;
        points.extend((0..TRANSITION_SAMPLES).map(|i| -d + 2.0 * d * i as f64 / last));
    }
    let start = Witness {
        r: f64::NAN,
        value: f64::INFINITY,
    };
    let mut w = Witnesses {
        phi_min: start,
        phi_r_min: start,
        psi_min: start,
        psi_r_min: start,
    };
    let lower = |slot: &mut Witness, r: f64, value: f64| {
        if value < slot.value || value.is_nan() {
            *slot = Witness { r, value };
        }
    };
    for &r in &points {
        let s = profile.sample(r);
        lower(&mut w.phi_min, r, s.phi);
        lower(&mut w.phi_r_min, r, s.phi_r);
        lower(&mut w.psi_min, r, s.psi);
        lower(&mut w.psi_r_min, r, s.psi_r);
    }

    let (cap_psi, far) = profile.end_psi();
    let rays = match profile.mode() {
        ProfileMode::KnopfConstant => RayChecks {
            cap_psi,
            cap_psi_r: 0.0,
            far_psi: None,
            far_psi_r: None,
            holds: cap_psi > 0.0,
        },
        ProfileMode::PaperSmoothed => {
            let cap = profile.sample(-p.delta);
            let far_sample = profile.sample(p.delta);
            RayChecks {
                cap_psi: cap.psi,
                cap_psi_r: cap.psi_r,
                far_psi: Some(far_sample.psi),
                far_psi_r: Some(far_sample.psi_r),
                holds: cap.psi == cap_psi
                    && far_sample.psi == far
                    && cap.psi_r == 0.0
                    && far_sample.psi_r == 0.0
                    && cap_psi > 0.0,
            }
        }
    };

    let extension = check_extension(profile);
    let conditions = Conditions {
        phi_positive: w.phi_min.value > 0.0,
        phi_r_positive: w.phi_r_min.value > 0.0,
        psi_positive: w.psi_min.value > 0.0 && rays.holds,
        psi_r_nonnegative: w.psi_r_min.value >= 0.0 && rays.holds,
        extends_at_zero: extension.extends_at_zero,
        extends_at_infinity: extension.extends_at_infinity,
    };
    Certificate {
        conditions,
        witnesses: w,
        rays,
        extension,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedSignReport {
    pub t: f64,
    /// Nodes where λ₂ plus its rounding bound is still below −tol.
    pub negative_locus: Vec<f64>,
    pub min_lambda2: Option<Witness>,
    /// log(kc)/k; log c for the untwisted bundle.
    pub predicted_threshold: f64,
    pub locus_within_threshold: bool,
    /// Smallest λ₂ on cap-ray nodes more than one cell above the threshold.
    pub min_lambda2_above_threshold: Option<Witness>,
    /// Nodes whose λ₂ is smaller than its rounding bound.
    pub unresolved: usize,
}

impl MixedSignReport {
    pub fn mixed(&self) -> bool {
        !self.negative_locus.is_empty()
    }

    pub fn locus_bounds(&self) -> Option<(f64, f64)> {
        Some((*self.negative_locus.first()?, *self.negative_locus.last()?))
    }
}

fn resolved(s: &FlowSnapshot, i: usize) -> bool {
    s.lambda2_noise[i] <= s.lambda2[i].abs()
}

pub fn detect_mixed_sign(
    profile: &RadialProfile,
    snapshots: &[FlowSnapshot],
    tol: f64,
) -> Vec<MixedSignReport> {
    let threshold = sign_threshold(profile);
    snapshots
        .iter()
        .map(|s| {
            let h = s.r[1] - s.r[0];
            let mut negative_locus = Vec::new();
            let mut min_lambda2: Option<Witness> = None;
            let mut above: Option<Witness> = None;
            let mut unresolved = 0;
            for i in 0..s.len() {
                let (r, l2) = (s.r[i], s.lambda2[i]);
                if !resolved(s, i) {
                    unresolved += 1;
                    continue;
                }
                if l2 + s.lambda2_noise[i] < -tol {
                    negative_locus.push(r);
                }
                if min_lambda2.is_none_or(|w| l2 < w.value) {
                    min_lambda2 = Some(Witness { r, value: l2 });
                }
                if r > threshold + h && profile.on_cap_ray(r) && above.is_none_or(|w| l2 < w.value)
                {
                    above = Some(Witness { r, value: l2 });
                }
            }
            MixedSignReport {
                t: s.t,
                locus_within_threshold: negative_locus.iter().all(|&r| r < threshold + h),
                negative_locus,
                min_lambda2,
                predicted_threshold: threshold,
                min_lambda2_above_threshold: above,
                unresolved,
            }
        })
        .collect()
}

/// Whether, at nodes with r ≤ r_cut that are resolved in every snapshot, a
/// node once in the negative locus stays there at later times.
pub fn locus_monotone_below(snapshots: &[FlowSnapshot], tol: f64, r_cut: f64) -> bool {
    let Some(first) = snapshots.first() else {
        return true;
    };
    (0..first.len())
        .filter(|&i| first.r[i] <= r_cut && snapshots.iter().all(|s| resolved(s, i)))
        .all(|i| {
            let mut seen = false;
            snapshots.iter().all(|s| {
                let neg = s.lambda2[i] + s.lambda2_noise[i] < -tol;
                let ok = neg || !seen;
                seen |= neg;
                ok
            })
        })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateComparison {
    pub window: (f64, f64),
    pub nodes: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub worst_r: f64,
    /// Where the Richardson estimate changes sign on [rate_window_low, −δ],
    /// by linear interpolation; the crossing closest to the prediction.
    pub zero_crossing: Option<f64>,
    pub predicted_zero: f64,
    pub grid_spacing: f64,
    #[serde(skip)]
    pub r: Vec<f64>,
    #[serde(skip)]
    pub measured: Vec<f64>,
}

/// Richardson-extrapolated ∂ₜψ_r at t = 0 from two short evolutions,
/// compared with the closed form on [rate_window_low, −2δ].
pub fn compare_dt_psi_r(profile: &RadialProfile, config: &SolverConfig) -> Result<RateComparison> {
    let solver = FlowSolver::new(profile, config.clone())?;
    let start = solver.init_state();
    let base_psi_r = &solver.base().psi_r;
    let quotient = |dt: f64| -> Result<Vec<f64>> {
        let snaps = solver.evolve_to(&start, &[dt], dt / RATE_SUBSTEPS as f64)?;
        Ok(snaps[0]
            .psi_r
            .iter()
            .zip(base_psi_r)
            .map(|(a, b)| (a - b) / dt)
            .collect())
    };
    let coarse = quotient(RATE_STEPS.0)?;
    let fine = quotient(RATE_STEPS.1)?;
    let ratio = RATE_STEPS.0 / RATE_STEPS.1;
    let measured: Vec<f64> = fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (ratio * f - c) / (ratio - 1.0))
        .collect();

    let p = profile.params();
    let hi = -2.0 * p.delta;
    let lo = rate_window_low(profile);
    let r = solver.grid().nodes().to_vec();
    let mut max_rel_error = 0.0f64;
    let mut worst_r = f64::NAN;
    let mut sum = 0.0;
    let mut nodes = 0;
    for (i, &x) in r.iter().enumerate() {
        if x < lo || x > hi {
            continue;
        }
        let exact = analytic_dt_psi_r(profile, x)?;
        let rel = ((measured[i] - exact) / exact).abs();
        sum += rel;
        nodes += 1;
        if !(rel <= max_rel_error) {
            max_rel_error = rel;
            worst_r = x;
        }
    }

    let predicted_zero = sign_threshold(profile);
    let mut zero_crossing: Option<f64> = None;
    for i in 1..r.len() {
        if r[i - 1] < lo || !profile.on_cap_ray(r[i]) {
            continue;
        }
        let (a, b) = (measured[i - 1], measured[i]);
        if a == 0.0 || a.signum() != b.signum() {
            let x = if a == b {
                r[i - 1]
            } else {
                r[i - 1] + (r[i] - r[i - 1]) * a / (a - b)
            };
            if zero_crossing.is_none_or(|z| (x - predicted_zero).abs() < (z - predicted_zero).abs())
            {
                zero_crossing = Some(x);
            }
        }
    }

    Ok(RateComparison {
        window: (lo, hi),
        nodes,
        max_rel_error,
        mean_rel_error: if nodes > 0 {
            sum / nodes as f64
        } else {
            f64::NAN
        },
        worst_r,
        zero_crossing,
        predicted_zero,
        grid_spacing: solver.grid().spacing(),
        r,
        measured,
    })
}

//! Radial Kähler profiles.
//!
//! A U(n)-invariant Kähler potential P(r), r = log|z|², is encoded by its
//! radial derivative φ = P_r. The profiles built here solve
//!
//! ```text
//!     [log(φ^(n-1) φ_r)]_r = k·a(r),   φ = (n·F + c)^(1/n),   F(r) = ∫_{-∞}^r e^f,  f' = k·a
//! ```
//!
//! so that ψ = n − k·a exactly. `a` is either the smoothed corner slope
//! (+1 for r ≤ −δ, −1 for r ≥ δ) or the constant slope a ≡ 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Gauss–Legendre order used on each transition panel.
pub const TRANSITION_ORDER: usize = 20;
/// Panel refinement stops once F_∞ changes by less than this (relative).
pub const TRANSITION_TOLERANCE: f64 = 1e-13;
const MAX_TRANSITION_PANELS: usize = 1 << 12;
/// Panel width used when integrating φ outside the transition interval.
const POTENTIAL_PANEL_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    /// Complex dimension.
    pub n: usize,
    /// Twist of the bundle.
    pub k: usize,
    /// Cap constant.
    pub c: f64,
    /// Half-width of the smoothing interval.
    pub delta: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            n: 2,
            k: 1,
            c: 1.0,
            delta: 1.0,
        }
    }
}

impl ProfileParams {
    pub fn new(n: usize, k: usize, c: f64, delta: f64) -> Result<Self> {
        let params = Self { n, k, c, delta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "complex dimension n must be >= 2, got {}",
                self.n
            )));
        }
        if self.k < 1 || self.k > self.n - 1 {
            return Err(Error::InvalidParams(format!(
                "twist k must satisfy 1 <= k <= n-1 = {}, got {}",
                self.n - 1,
                self.k
            )));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParams(format!(
                "cap constant c must be positive, got {}",
                self.c
            )));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "smoothing width delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    pub(crate) fn nf(&self) -> f64 {
        self.n as f64
    }

    pub(crate) fn kf(&self) -> f64 {
        self.k as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    /// Smoothed corner of y = −|r|: slope +1 near −∞ and −1 near +∞.
    PaperSmoothed,
    /// Constant slope a ≡ 1 (complete, non-compact comparison metric).
    KnopfConstant,
}

impl fmt::Display for ProfileMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileMode::PaperSmoothed => "paper-smoothed",
            ProfileMode::KnopfConstant => "knopf-constant",
        })
    }
}

impl FromStr for ProfileMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper-smoothed" | "paper" | "smoothed" => Ok(ProfileMode::PaperSmoothed),
            "knopf-constant" | "knopf" => Ok(ProfileMode::KnopfConstant),
            other => Err(Error::InvalidParams(format!(
                "unknown profile mode '{other}'"
            ))),
        }
    }
}

/// The unscaled slope a(r) and its first two derivatives.
///
/// On (−δ, δ): a = 1 − 2·s((r+δ)/(2δ)) with s(t) = σ(t)/(σ(t)+σ(1−t)),
/// σ(t) = exp(−1/t). Outside the interval a is exactly ±1.
pub fn smoothed_slope(r: f64, delta: f64) -> (f64, f64, f64) {
    if r <= -delta {
        return (1.0, 0.0, 0.0);
    }
    if r >= delta {
        return (-1.0, 0.0, 0.0);
    }
    let t = (r + delta) / (2.0 * delta);
    let (p, p1, p2) = sigma(t);
    let (q, q1m, q2) = sigma(1.0 - t);
    let q1 = -q1m;
    let sum = p + q;
    // a = (q - p)/(p + q) keeps the odd symmetry exact.
    let a = (q - p) / sum;
    let num = p1 * q - p * q1;
    let ds = num / (sum * sum);
    let dnum = p2 * q - p * q2;
    let d2s = dnum / (sum * sum) - 2.0 * num * (p1 + q1) / (sum * sum * sum);
    (a, -ds / delta, -d2s / (2.0 * delta * delta))
}

/// σ(t) = exp(−1/t) for t > 0, else 0, with its first two derivatives.
fn sigma(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = (-1.0 / t).exp();
    if s == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let t2 = t * t;
    (s, s / t2, s * (1.0 - 2.0 * t) / (t2 * t2))
}

/// Cached composite quadrature on [−δ, δ]: slope integral A and cumulative F
/// at the panel edges.
#[derive(Debug, Clone)]
struct TransitionTable {
    rule: GaussLegendre,
    delta: f64,
    k: f64,
    width: f64,
    panels: usize,
    slope_integral: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

impl TransitionTable {
    fn build(delta: f64, k: f64, order: usize) -> Self {
        let mut panels = 4;
        let mut table = Self::with_panels(delta, k, order, panels);
        loop {
            panels *= 2;
            let finer = Self::with_panels(delta, k, order, panels);
            let change = (finer.total - table.total).abs();
            table = finer;
            if change <= TRANSITION_TOLERANCE * table.total || panels >= MAX_TRANSITION_PANELS {
                return table;
            }
        }
    }

    fn with_panels(delta: f64, k: f64, order: usize, panels: usize) -> Self {
        let rule = GaussLegendre::new(order);
        let width = 2.0 * delta / panels as f64;
        let tail = (-k * delta).exp() / k;
        let mut table = Self {
            rule,
            delta,
            k,
            width,
            panels,
            slope_integral: Vec::with_capacity(panels + 1),
            cumulative: Vec::with_capacity(panels + 1),
            total: 0.0,
        };
        table.slope_integral.push(0.0);
        table.cumulative.push(tail);
        for j in 0..panels {
            let lo = table.edge(j);
            let hi = table.edge(j + 1);
            let a0 = table.slope_integral[j];
            let da = table.slope_integral_from(lo, hi);
            let df = table.density_integral_from(lo, hi, a0);
            table.slope_integral.push(a0 + da);
            table.cumulative.push(table.cumulative[j] + df);
        }
        table.total = table.cumulative[panels] + tail;
        table
    }

    fn panels(&self) -> usize {
        self.panels
    }

    fn edge(&self, j: usize) -> f64 {
        if j == self.panels() {
            self.delta
        } else {
            -self.delta + j as f64 * self.width
        }
    }

    fn panel_of(&self, r: f64) -> usize {
        let j = ((r + self.delta) / self.width).floor();
        (j.max(0.0) as usize).min(self.panels() - 1)
    }

    fn slope_integral_from(&self, lo: f64, hi: f64) -> f64 {
        self.rule
            .integrate(lo, hi, |x| smoothed_slope(x, self.delta).0)
    }

    fn log_density(&self, slope_integral: f64) -> f64 {
        -self.k * self.delta + self.k * slope_integral
    }

    fn density_integral_from(&self, lo: f64, hi: f64, a0: f64) -> f64 {
        self.rule.integrate(lo, hi, |y| {
            let a = a0 + self.slope_integral_from(lo, y);
            self.log_density(a).exp()
        })
    }

    /// (f, F) at a point of [−δ, δ].
    fn eval(&self, r: f64) -> (f64, f64) {
        let j = self.panel_of(r);
        let lo = self.edge(j);
        let a0 = self.slope_integral[j];
        let a = a0 + self.slope_integral_from(lo, r);
        let big_f = self.cumulative[j] + self.density_integral_from(lo, r, a0);
        (self.log_density(a), big_f)
    }
}

/// Evaluator for the radially reduced initial metric.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    params: ProfileParams,
    mode: ProfileMode,
    transition: Option<TransitionTable>,
}

/// Every radial quantity of the profile at one r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub r: f64,
    /// Unscaled slope a(r); the generating ODE uses k·a.
    pub slope: f64,
    pub slope_r: f64,
    /// f, with f' = k·a.
    pub log_density: f64,
    /// F(r) = ∫_{-∞}^r e^f.
    pub cumulative: f64,
    pub phi: f64,
    pub phi_r: f64,
    pub phi_rr: f64,
    pub psi: f64,
    pub psi_r: f64,
    pub psi_rr: f64,
    /// G = −log det g + const = n·r − (n−1)·log φ − log φ_r.
    pub ricci_potential: f64,
}

impl RadialProfile {
    pub fn build(params: ProfileParams, mode: ProfileMode) -> Result<Self> {
        Self::build_with_order(params, mode, TRANSITION_ORDER)
    }

    /// Same as [`RadialProfile::build`] with a custom per-panel quadrature order.
    pub fn build_with_order(
        params: ProfileParams,
        mode: ProfileMode,
        order: usize,
    ) -> Result<Self> {
        params.validate()?;
        let transition = match mode {
            ProfileMode::PaperSmoothed => {
                Some(TransitionTable::build(params.delta, params.kf(), order))
            }
            ProfileMode::KnopfConstant => {
                if params.k != 1 {
                    return Err(Error::InvalidParams(format!(
                        "knopf-constant mode requires k = 1, got k = {}",
                        params.k
                    )));
                }
                None
            }
        };
        if let Some(t) = &transition {
            if !(t.total.is_finite() && t.total > 0.0) {
                return Err(Error::NonFinite("total integral of e^f"));
            }
        }
        Ok(Self {
            params,
            mode,
            transition,
        })
    }

    pub fn params(&self) -> &ProfileParams {
        &self.params
    }

    pub fn mode(&self) -> ProfileMode {
        self.mode
    }

    /// Number of composite panels the transition quadrature settled on.
    pub fn transition_panels(&self) -> usize {
        self.transition.as_ref().map_or(0, |t| t.panels())
    }

    /// F_∞ = ∫_ℝ e^f.
    pub fn f_total_integral(&self) -> Result<f64> {
        self.transition
            .as_ref()
            .map(|t| t.total)
            .ok_or(Error::NoCapAtInfinity)
    }

    /// Whether r lies on the ray where the slope is exactly +1 (ψ ≡ n − k).
    pub fn on_cap_ray(&self, r: f64) -> bool {
        match self.mode {
            ProfileMode::KnopfConstant => true,
            ProfileMode::PaperSmoothed => r <= -self.params.delta,
        }
    }

    /// ψ on the cap ray and on the far ray.
    pub fn end_psi(&self) -> (f64, f64) {
        let n = self.params.nf();
        let k = self.params.kf();
        match self.mode {
            ProfileMode::KnopfConstant => (n - 1.0, n - 1.0),
            ProfileMode::PaperSmoothed => (n - k, n + k),
        }
    }

    /// Unscaled slope a(r) and derivatives.
    pub fn slope(&self, r: f64) -> (f64, f64, f64) {
        match self.mode {
            ProfileMode::KnopfConstant => (1.0, 0.0, 0.0),
            ProfileMode::PaperSmoothed => smoothed_slope(r, self.params.delta),
        }
    }

    /// (f, F) at r.
    pub fn density(&self, r: f64) -> (f64, f64) {
        let k = self.params.kf();
        match &self.transition {
            None => (r, r.exp()),
            Some(t) => {
                let delta = self.params.delta;
                if r <= -delta {
                    (k * r, (k * r).exp() / k)
                } else if r >= delta {
                    (-k * r, t.total - (-k * r).exp() / k)
                } else {
                    t.eval(r)
                }
            }
        }
    }

    /// φ alone (cheaper than a full sample off the transition interval).
    pub fn phi(&self, r: f64) -> f64 {
        let n = self.params.nf();
        let (_, big_f) = self.density(r);
        (n * big_f + self.params.c).powf(1.0 / n)
    }

    pub fn sample(&self, r: f64) -> ProfileSample {
        let n = self.params.nf();
        let k = self.params.kf();
        let (a, a_r, a_rr) = self.slope(r);
        let (f, big_f) = self.density(r);
        let phi = (n * big_f + self.params.c).powf(1.0 / n);
        let ef = f.exp();
        let phi_pow = phi.powi(self.params.n as i32 - 1);
        let phi_r = ef / phi_pow;
        let phi_rr = phi_r * (k * a - (n - 1.0) * phi_r / phi);
        let log_phi_r = if phi_r > f64::MIN_POSITIVE {
            phi_r.ln()
        } else {
            f - (n - 1.0) * phi.ln()
        };
        ProfileSample {
            r,
            slope: a,
            slope_r: a_r,
            log_density: f,
            cumulative: big_f,
            phi,
            phi_r,
            phi_rr,
            psi: n - k * a,
            psi_r: -k * a_r,
            psi_rr: -k * a_rr,
            ricci_potential: n * r - (n - 1.0) * phi.ln() - log_phi_r,
        }
    }

    /// Kähler potential P(r) = ∫_0^r φ, so that P_r = φ and P_rr = φ_r.
    pub fn potential(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let (lo, hi, sign) = if r > 0.0 {
            (0.0, r, 1.0)
        } else {
            (r, 0.0, -1.0)
        };
        sign * self.integrate_phi(lo, hi)
    }

    fn integrate_phi(&self, lo: f64, hi: f64) -> f64 {
        let rule = GaussLegendre::new(TRANSITION_ORDER);
        let mut cuts = vec![lo, hi];
        if let Some(t) = &self.transition {
            for j in 0..=t.panels() {
                let x = t.edge(j);
                if x > lo && x < hi {
                    cuts.push(x);
                }
            }
        }
        let mut x = (lo / POTENTIAL_PANEL_WIDTH).floor() * POTENTIAL_PANEL_WIDTH;
        while x < hi {
            if x > lo {
                cuts.push(x);
            }
            x += POTENTIAL_PANEL_WIDTH;
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        cuts.windows(2)
            .map(|w| rule.integrate(w[0], w[1], |s| self.phi(s)))
            .sum()
    }
}

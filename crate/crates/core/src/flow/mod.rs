//! Radial Kähler–Ricci flow φ_t = −ψ on a truncated r-line.
//!
//! The unknown is stored as a perturbation of the first-order Taylor
//! expansion in time, φ = φ₀ − tψ₀ + v, with φ₀, ψ₀ and their r-derivatives
//! taken from the analytic profile. Only v is differenced on the grid, which
//! keeps the tiny curvature changes far out on the cap ray above rounding.
//! Time stepping is the linearly implicit two-stage Rosenbrock scheme ROS2
//! with the exact banded Jacobian; the end nodes hold v = 0.

mod analytic;
pub mod banded;
mod solver;
pub mod stencil;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::ProfileParams;

pub use analytic::{analytic_dt_psi_r, sign_threshold};
pub use solver::{BaseFields, FlowSnapshot, FlowSolver, FlowState, PsiResidual, RESIDUAL_WINDOW};

/// Largest flow time the solver accepts.
pub const MAX_T_END: f64 = 0.1;
pub const MIN_GRID_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub m: usize,
    /// Scales the step bound dt ≤ cfl_safety·Δr².
    pub cfl_safety: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            r_min: -40.0,
            r_max: 40.0,
            m: 4096,
            cfl_safety: 0.2,
            t_end: 1e-3,
            snapshot_times: vec![2.5e-4, 5e-4, 1e-3],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, params: &ProfileParams) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let all = [self.r_min, self.r_max, self.cfl_safety, self.t_end];
        if all
            .iter()
            .chain(&self.snapshot_times)
            .any(|x| !x.is_finite())
        {
            return bad("solver settings must be finite".into());
        }
        let d = params.delta;
        if self.r_min >= -d - 5.0 {
            return bad(format!(
                "r_min = {} must be below -delta - 5 = {}",
                self.r_min,
                -d - 5.0
            ));
        }
        if self.r_max <= d + 5.0 {
            return bad(format!(
                "r_max = {} must exceed delta + 5 = {}",
                self.r_max,
                d + 5.0
            ));
        }
        if self.m < MIN_GRID_POINTS {
            return bad(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {}",
                self.m
            ));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!(
                "cfl_safety = {} must lie in (0, 1]",
                self.cfl_safety
            ));
        }
        if !(0.0..=MAX_T_END).contains(&self.t_end) {
            return bad(format!(
                "t_end = {} must lie in [0, {MAX_T_END}]",
                self.t_end
            ));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(0.0..=self.t_end).contains(*t))
        {
            return bad(format!(
                "snapshot time {t} outside [0, t_end = {}]",
                self.t_end
            ));
        }
        Ok(())
    }

    /// Output times: 0, the requested snapshots and t_end, sorted without repeats.
    pub fn output_times(&self) -> Vec<f64> {
        let mut times = vec![0.0, self.t_end];
        times.extend(&self.snapshot_times);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    spacing: f64,
}

impl Grid {
    pub fn uniform(r_min: f64, r_max: f64, m: usize) -> Self {
        let spacing = (r_max - r_min) / (m - 1) as f64;
        let mut nodes: Vec<f64> = (0..m).map(|i| r_min + i as f64 * spacing).collect();
        nodes[m - 1] = r_max;
        Self { nodes, spacing }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

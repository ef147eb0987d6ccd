use serde::Serialize;

use super::banded::{BandedLu, BandedMatrix};
use super::stencil::Stencil;
use super::{Grid, SolverConfig};
use crate::error::{Error, Result};
use crate::profile::{ProfileMode, ProfileParams, RadialProfile};

/// ψ-equation residuals are reported on |r| ≤ this; further out the second
/// derivative of ψ is divided by φ_r ~ e^{−|r|} and rounding dominates.
pub const RESIDUAL_WINDOW: f64 = 20.0;

/// Multiplier on the rounding bound for λ₂, covering the operations the
/// stencil-weighted estimate does not count individually.
const NOISE_SAFETY: f64 = 8.0;

const GAMMA: f64 = 1.0 + std::f64::consts::FRAC_1_SQRT_2;

/// Initial profile and its r-derivatives at the grid nodes, evaluated exactly.
#[derive(Debug, Clone)]
pub struct BaseFields {
    pub phi: Vec<f64>,
    pub phi_r: Vec<f64>,
    pub phi_rr: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_r: Vec<f64>,
    pub psi_rr: Vec<f64>,
}

impl BaseFields {
    fn sample(profile: &RadialProfile, grid: &Grid) -> Self {
        let samples: Vec<_> = grid.nodes().iter().map(|&r| profile.sample(r)).collect();
        let pick = |f: fn(&crate::profile::ProfileSample) -> f64| samples.iter().map(f).collect();
        Self {
            phi: pick(|s| s.phi),
            phi_r: pick(|s| s.phi_r),
            phi_rr: pick(|s| s.phi_rr),
            psi: pick(|s| s.psi),
            psi_r: pick(|s| s.psi_r),
            psi_rr: pick(|s| s.psi_rr),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub phi_values: Vec<f64>,
    perturbation: Vec<f64>,
}

impl FlowState {
    /// v in φ = φ₀ − tψ₀ + v.
    pub fn perturbation(&self) -> &[f64] {
        &self.perturbation
    }
}

/// A state together with every field derived from it.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSnapshot {
    pub t: f64,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_r: Vec<f64>,
    pub phi_rr: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_r: Vec<f64>,
    pub psi_rr: Vec<f64>,
    /// ψ/φ, the eigenvalue on the complement of the radial direction.
    pub lambda1: Vec<f64>,
    /// ψ_r/φ_r, the radial eigenvalue.
    pub lambda2: Vec<f64>,
    /// Bound on the rounding error carried by `lambda2`.
    pub lambda2_noise: Vec<f64>,
}

impl FlowSnapshot {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Index of the node nearest to r.
    pub fn nearest(&self, r: f64) -> usize {
        let h = self.r[1] - self.r[0];
        (((r - self.r[0]) / h).round().max(0.0) as usize).min(self.r.len() - 1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiResidual {
    pub t: f64,
    /// |ψ_t − right side| at every node; the two nodes at each end are zero.
    pub residual: Vec<f64>,
    /// Maximum over |r| ≤ RESIDUAL_WINDOW.
    pub max: f64,
    pub argmax_r: f64,
}

/// ψ − ψ₀ and its partial derivatives with respect to v, v_r and v_rr.
struct Linearization {
    dpsi: Vec<f64>,
    d_v: Vec<f64>,
    d_vr: Vec<f64>,
    d_vrr: Vec<f64>,
    phi: Vec<f64>,
    phi_r: Vec<f64>,
    e2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FlowSolver {
    params: ProfileParams,
    mode: ProfileMode,
    config: SolverConfig,
    grid: Grid,
    base: BaseFields,
    d1: Stencil,
    d2: Stencil,
}

impl FlowSolver {
    pub fn new(profile: &RadialProfile, config: SolverConfig) -> Result<Self> {
        config.validate(profile.params())?;
        let grid = Grid::uniform(config.r_min, config.r_max, config.m);
        let h = grid.spacing();
        Ok(Self {
            params: *profile.params(),
            mode: profile.mode(),
            d1: Stencil::first(config.m, h),
            d2: Stencil::second(config.m, h),
            base: BaseFields::sample(profile, &grid),
            grid,
            config,
        })
    }

    pub fn params(&self) -> &ProfileParams {
        &self.params
    }

    pub fn mode(&self) -> ProfileMode {
        self.mode
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn base(&self) -> &BaseFields {
        &self.base
    }

    /// Largest step used by `evolve`: cfl_safety·Δr².
    pub fn dt_max(&self) -> f64 {
        self.config.cfl_safety * self.grid.spacing().powi(2)
    }

    pub fn init_state(&self) -> FlowState {
        let m = self.grid.len();
        FlowState {
            t: 0.0,
            phi_values: self.base.phi.clone(),
            perturbation: vec![0.0; m],
        }
    }

    fn state_from(&self, t: f64, v: Vec<f64>) -> FlowState {
        let phi_values = (0..v.len())
            .map(|i| self.base.phi[i] - t * self.base.psi[i] + v[i])
            .collect();
        FlowState {
            t,
            phi_values,
            perturbation: v,
        }
    }

    fn linearize(&self, v: &[f64], t: f64) -> Result<Linearization> {
        let b = &self.base;
        let nm1 = self.params.n as f64 - 1.0;
        let dv = self.d1.apply(v);
        let dvv = self.d2.apply(v);
        let m = v.len();
        let mut out = Linearization {
            dpsi: vec![0.0; m],
            d_v: vec![0.0; m],
            d_vr: vec![0.0; m],
            d_vrr: vec![0.0; m],
            phi: vec![0.0; m],
            phi_r: vec![0.0; m],
            e2: vec![0.0; m],
        };
        for i in 0..m {
            let e0 = v[i] - t * b.psi[i];
            let e1 = dv[i] - t * b.psi_r[i];
            let e2 = dvv[i] - t * b.psi_rr[i];
            let phi = b.phi[i] + e0;
            let phi_r = b.phi_r[i] + e1;
            let r = self.grid.nodes()[i];
            if !(phi_r > 0.0) {
                return Err(Error::SingularEquation {
                    node: i,
                    r,
                    value: phi_r,
                });
            }
            if !(phi > 0.0) {
                return Err(Error::InvariantViolation {
                    node: i,
                    r,
                    what: "phi > 0",
                });
            }
            // ψ − ψ₀ = −(n−1)[log φ − log φ₀]_r − [log φ_r − log φ₀_r]_r, expanded
            // so that no difference of nearly equal quantities is formed.
            let t1 = (e1 * b.phi[i] - b.phi_r[i] * e0) / (phi * b.phi[i]);
            let t2 = (e2 * b.phi_r[i] - b.phi_rr[i] * e1) / (phi_r * b.phi_r[i]);
            out.dpsi[i] = -nm1 * t1 - t2;
            out.d_v[i] = -nm1 * (-b.phi_r[i] / (phi * b.phi[i]) - t1 / phi);
            out.d_vr[i] = -nm1 / phi + b.phi_rr[i] / (phi_r * b.phi_r[i]) + t2 / phi_r;
            out.d_vrr[i] = -1.0 / phi_r;
            out.phi[i] = phi;
            out.phi_r[i] = phi_r;
            out.e2[i] = e2;
        }
        let last = m - 1;
        out.dpsi[0] = 0.0;
        out.dpsi[last] = 0.0;
        Ok(out)
    }

    /// v_t = −(ψ − ψ₀), held at zero on the end nodes.
    fn field(&self, lin: &Linearization) -> Vec<f64> {
        lin.dpsi.iter().map(|d| -d).collect()
    }

    /// ∂/∂t of the field at fixed v (the explicit t in e0, e1, e2).
    fn field_t(&self, lin: &Linearization) -> Vec<f64> {
        let b = &self.base;
        let m = lin.dpsi.len();
        let mut out: Vec<f64> = (0..m)
            .map(|i| lin.d_v[i] * b.psi[i] + lin.d_vr[i] * b.psi_r[i] + lin.d_vrr[i] * b.psi_rr[i])
            .collect();
        out[0] = 0.0;
        out[m - 1] = 0.0;
        out
    }

    /// (I − γ·dt·J)·S restricted to the interior nodes, with J the Jacobian
    /// of the field in v and S = diag(φ₀_r).
    ///
    /// The end nodes carry v = 0 and drop out. The true perturbation scales
    /// like φ₀_r, which spans e^{±k·r} over the grid; solving for k = S·y keeps
    /// the rounding error of each stage relative to the local scale.
    fn stage_matrix(&self, lin: &Linearization, gdt: f64) -> BandedMatrix {
        let m = lin.dpsi.len();
        let s = &self.base.phi_r;
        let mut mat = BandedMatrix::zeros(m - 2, 4, 4);
        let mut put = |i: usize, j: usize, value: f64| {
            if j >= 1 && j <= m - 2 {
                mat.add(i - 1, j - 1, value * s[j]);
            }
        };
        for i in 1..m - 1 {
            put(i, i, 1.0 + gdt * lin.d_v[i]);
            let (s1, c1) = self.d1.row(i);
            for (j, c) in c1.iter().enumerate() {
                put(i, s1 + j, gdt * lin.d_vr[i] * c);
            }
            let (s2, c2) = self.d2.row(i);
            for (j, c) in c2.iter().enumerate() {
                put(i, s2 + j, gdt * lin.d_vrr[i] * c);
            }
        }
        mat
    }

    fn stage_solve(&self, lu: &BandedLu, rhs: &[f64]) -> Vec<f64> {
        let m = rhs.len();
        let y = lu.solve(&rhs[1..m - 1]);
        let mut k = vec![0.0; m];
        for i in 1..m - 1 {
            k[i] = y[i - 1] * self.base.phi_r[i];
        }
        k
    }

    /// φ_t = −ψ at every node.
    pub fn rhs(&self, state: &FlowState) -> Result<Vec<f64>> {
        let lin = self.linearize(&state.perturbation, state.t)?;
        Ok((0..lin.dpsi.len())
            .map(|i| -self.base.psi[i] - lin.dpsi[i])
            .collect())
    }

    /// One ROS2 step of length dt.
    pub fn step(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        if dt == 0.0 {
            return Ok(state.clone());
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let v = &state.perturbation;
        let t = state.t;
        let gdt = GAMMA * dt;
        let lin = self.linearize(v, t)?;
        let f1 = self.field(&lin);
        let ft = self.field_t(&lin);
        let lu = self
            .stage_matrix(&lin, gdt)
            .factor()
            .map_err(|col| Error::SingularEquation {
                node: col + 1,
                r: self.grid.nodes()[col + 1],
                value: 0.0,
            })?;
        let rhs1: Vec<f64> = f1.iter().zip(&ft).map(|(f, d)| f + gdt * d).collect();
        let k1 = self.stage_solve(&lu, &rhs1);
        let v2: Vec<f64> = v.iter().zip(&k1).map(|(x, k)| x + dt * k).collect();
        let f2 = self.field(&self.linearize(&v2, t + dt)?);
        let rhs2: Vec<f64> = (0..v.len())
            .map(|i| f2[i] - 2.0 * k1[i] - gdt * ft[i])
            .collect();
        let k2 = self.stage_solve(&lu, &rhs2);
        let next: Vec<f64> = (0..v.len())
            .map(|i| v[i] + dt * (1.5 * k1[i] + 0.5 * k2[i]))
            .collect();
        let state = self.state_from(t + dt, next);
        self.check_invariants(&state)?;
        Ok(state)
    }

    /// φ > 0 and discrete φ_r > 0 at every node.
    pub fn check_invariants(&self, state: &FlowState) -> Result<()> {
        let v = &state.perturbation;
        let dv = self.d1.apply(v);
        for (i, &r) in self.grid.nodes().iter().enumerate() {
            let phi = state.phi_values[i];
            let phi_r = self.base.phi_r[i] + dv[i] - state.t * self.base.psi_r[i];
            if !phi.is_finite() || !phi_r.is_finite() {
                return Err(Error::InvariantViolation {
                    node: i,
                    r,
                    what: "finite phi",
                });
            }
            if phi <= 0.0 {
                return Err(Error::InvariantViolation {
                    node: i,
                    r,
                    what: "phi > 0",
                });
            }
            if phi_r <= 0.0 {
                return Err(Error::InvariantViolation {
                    node: i,
                    r,
                    what: "phi_r > 0",
                });
            }
        }
        Ok(())
    }

    /// Advances to each time in `times` (ascending, ≥ state.t), splitting every
    /// interval into equal steps no longer than `dt_max`.
    pub fn evolve_to(
        &self,
        state: &FlowState,
        times: &[f64],
        dt_max: f64,
    ) -> Result<Vec<FlowSnapshot>> {
        if !(dt_max > 0.0) {
            return Err(Error::InvalidParams(format!(
                "dt_max must be positive, got {dt_max}"
            )));
        }
        let mut out = Vec::with_capacity(times.len());
        let mut current = state.clone();
        for &target in times {
            let span = target - current.t;
            if span < -1e-15 * target.abs().max(1.0) {
                return Err(Error::InvalidParams(format!(
                    "output time {target} precedes current time {}",
                    current.t
                )));
            }
            if span > 0.0 {
                let steps = (span / dt_max).ceil().max(1.0) as usize;
                let start = current.t;
                for s in 1..=steps {
                    // Landing on start + s·span/steps keeps t free of accumulated drift.
                    let goal = if s == steps {
                        target
                    } else {
                        start + span * s as f64 / steps as f64
                    };
                    current = self.step(&current, goal - current.t)?;
                    current.t = goal;
                }
                current = self.state_from(target, std::mem::take(&mut current.perturbation));
            }
            out.push(self.snapshot(&current)?);
        }
        Ok(out)
    }

    /// Snapshots at the configured output times, always starting with t = 0.
    pub fn evolve(&self, state: &FlowState) -> Result<Vec<FlowSnapshot>> {
        let mut times = self.config.output_times();
        times.retain(|&t| t >= state.t);
        if times.first() != Some(&state.t) {
            times.insert(0, state.t);
        }
        self.evolve_to(state, &times, self.dt_max())
    }

    pub fn snapshot(&self, state: &FlowState) -> Result<FlowSnapshot> {
        let lin = self.linearize(&state.perturbation, state.t)?;
        let b = &self.base;
        let m = lin.dpsi.len();
        let dpsi_r = self.d1.apply(&lin.dpsi);
        let dpsi_rr = self.d2.apply(&lin.dpsi);
        let psi: Vec<f64> = (0..m).map(|i| b.psi[i] + lin.dpsi[i]).collect();
        let psi_r: Vec<f64> = (0..m).map(|i| b.psi_r[i] + dpsi_r[i]).collect();
        let psi_rr: Vec<f64> = (0..m).map(|i| b.psi_rr[i] + dpsi_rr[i]).collect();
        let phi_rr: Vec<f64> = (0..m).map(|i| b.phi_rr[i] + lin.e2[i]).collect();

        // Rounding in v enters ψ − ψ₀ through v, v_r and v_rr; ψ_r then differences it once more.
        let eps = f64::EPSILON;
        let v = &state.perturbation;
        let abs_v: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        let rv = self.d1.apply_abs(&abs_v);
        let rvv = self.d2.apply_abs(&abs_v);
        let dpsi_noise: Vec<f64> = (0..m)
            .map(|i| {
                eps * (lin.d_vrr[i].abs() * rvv[i]
                    + lin.d_vr[i].abs() * rv[i]
                    + lin.d_v[i].abs() * abs_v[i]
                    + lin.dpsi[i].abs())
            })
            .collect();
        let psi_r_noise = self.d1.apply_abs(&dpsi_noise);

        let lambda1 = (0..m).map(|i| psi[i] / lin.phi[i]).collect();
        let lambda2 = (0..m).map(|i| psi_r[i] / lin.phi_r[i]).collect();
        let lambda2_noise = (0..m)
            .map(|i| NOISE_SAFETY * psi_r_noise[i] / lin.phi_r[i])
            .collect();
        Ok(FlowSnapshot {
            t: state.t,
            r: self.grid.nodes().to_vec(),
            phi: lin.phi,
            phi_r: lin.phi_r,
            phi_rr,
            psi,
            psi_r,
            psi_rr,
            lambda1,
            lambda2,
            lambda2_noise,
        })
    }

    /// ψ computed straight from the φ values with the grid stencils, without
    /// the perturbation splitting. Only useful where φ_r is not tiny.
    pub fn direct_psi(&self, state: &FlowState) -> Vec<f64> {
        let n = self.params.n as f64;
        let phi = &state.phi_values;
        let phi_r = self.d1.apply(phi);
        let phi_rr = self.d2.apply(phi);
        (0..phi.len())
            .map(|i| n - (n - 1.0) * phi_r[i] / phi[i] - phi_rr[i] / phi_r[i])
            .collect()
    }

    /// Right side of the ψ-equation, evaluated from one snapshot.
    pub fn psi_equation_rhs(&self, s: &FlowSnapshot) -> Vec<f64> {
        let nm1 = self.params.n as f64 - 1.0;
        (0..s.len())
            .map(|i| {
                let (phi, pr) = (s.phi[i], s.phi_r[i]);
                s.psi_rr[i] / pr
                    - (s.phi_rr[i] / (pr * pr) - nm1 / phi) * s.psi_r[i]
                    - nm1 * pr * s.psi[i] / (phi * phi)
            })
            .collect()
    }

    /// ψ_t by three-point differencing in time minus the ψ-equation's right
    /// side, at every snapshot that has a neighbour on both sides.
    pub fn psi_equation_residual(&self, snapshots: &[FlowSnapshot]) -> Result<Vec<PsiResidual>> {
        if snapshots.len() < 3 {
            return Err(Error::NotEnoughSnapshots {
                needed: 3,
                got: snapshots.len(),
            });
        }
        let mut out = Vec::with_capacity(snapshots.len() - 2);
        for w in snapshots.windows(3) {
            let (s0, s1, s2) = (&w[0], &w[1], &w[2]);
            let h1 = s1.t - s0.t;
            let h2 = s2.t - s1.t;
            if !(h1 > 0.0 && h2 > 0.0) {
                return Err(Error::InvalidParams("snapshot times must increase".into()));
            }
            let c0 = -h2 / (h1 * (h1 + h2));
            let c1 = (h2 - h1) / (h1 * h2);
            let c2 = h1 / (h2 * (h1 + h2));
            let rhs = self.psi_equation_rhs(s1);
            let m = s1.len();
            let mut residual = vec![0.0; m];
            let mut max = 0.0f64;
            let mut argmax_r = f64::NAN;
            for i in 2..m - 2 {
                let psi_t = c0 * s0.psi[i] + c1 * s1.psi[i] + c2 * s2.psi[i];
                let res = (psi_t - rhs[i]).abs();
                residual[i] = res;
                if s1.r[i].abs() <= RESIDUAL_WINDOW && !(res <= max) {
                    max = res;
                    argmax_r = s1.r[i];
                }
            }
            out.push(PsiResidual {
                t: s1.t,
                residual,
                max,
                argmax_r,
            });
        }
        Ok(out)
    }
}

//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line; exits nonzero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use calabi_flow::analysis::{
    certify_initial, compare_dt_psi_r, detect_mixed_sign, DEFAULT_SIGN_TOL,
};
use calabi_flow::flow::{Grid, SolverConfig};
use calabi_flow::geometry::{check_ricci_identity, generalized_eigen, metric_at, ricci_at};
use calabi_flow::{FlowSolver, PointCoordinates, ProfileMode, ProfileParams, RadialProfile};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SMOOTHED: ProfileMode = ProfileMode::PaperSmoothed;
const KNOPF: ProfileMode = ProfileMode::KnopfConstant;

fn profile(n: usize, k: usize, c: f64, mode: ProfileMode) -> RadialProfile {
    RadialProfile::build(ProfileParams::new(n, k, c, 1.0).unwrap(), mode).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Random points with |z| in [0.5, 2] and uniformly random direction.
fn random_points(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<PointCoordinates> {
    (0..count)
        .map(|_| {
            let raw: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let radius = rng.random_range(0.5..2.0);
            PointCoordinates::new(raw.iter().map(|c| c * (radius / norm)).collect()).unwrap()
        })
        .collect()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let p = profile(2, 1, 1.0, SMOOTHED);
    let cert = certify_initial(&p, &Grid::uniform(-40.0, 40.0, 4096));
    let elapsed = start.elapsed();

    let grid = Grid::uniform(-40.0, 40.0, 4096);
    let cap_psi_exact = grid
        .nodes()
        .iter()
        .filter(|&&r| r <= -1.0)
        .all(|&r| p.sample(r).psi == 1.0);
    let [a0, a1, _] = cert.extension.zero.coefficients;
    let e0 = rel(a0, 1.0);
    let e1 = rel(a1, 1.0);
    let ok = cert.conditions.all()
        && cert.witnesses.psi_min.value >= 1.0
        && cert.witnesses.psi_r_min.value >= 0.0
        && cap_psi_exact
        && e0 <= 1e-6
        && e1 <= 1e-6
        && elapsed < Duration::from_secs(1);
    outcome(
        ok,
        format!(
            "conditions {:?}, min psi {}, a0 err {e0:.1e}, a1 err {e1:.1e}, {elapsed:.2?}",
            cert.conditions.as_array(),
            cert.witnesses.psi_min.value
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let p = profile(2, 1, 1.0, KNOPF);
    let cert = certify_initial(&p, &Grid::uniform(-40.0, 40.0, 4096));
    let elapsed = start.elapsed();
    let pattern = cert.conditions.as_array();
    let ok = pattern == [true, true, true, true, true, false] && elapsed < Duration::from_secs(1);
    outcome(ok, format!("pattern {pattern:?}, {elapsed:.2?}"))
}

/// Sign change at t = 1e−3 for one parameter set: returns (ok, detail).
fn sign_change(n: usize, k: usize, c: f64) -> (bool, String) {
    let p = profile(n, k, c, SMOOTHED);
    let solver = FlowSolver::new(&p, SolverConfig::default()).unwrap();
    let snaps = solver.evolve(&solver.init_state()).unwrap();
    let reports = detect_mixed_sign(&p, &snaps, DEFAULT_SIGN_TOL);
    let initial_clean = !reports[0].mixed();
    let last = reports.last().unwrap();
    let above_ok = last
        .min_lambda2_above_threshold
        .is_none_or(|w| w.value >= -1e-10);
    let ok =
        initial_clean && last.t == 1e-3 && last.mixed() && last.locus_within_threshold && above_ok;
    let bounds = last
        .locus_bounds()
        .map_or("empty".into(), |(a, b)| format!("[{a:.3}, {b:.3}]"));
    let above = last
        .min_lambda2_above_threshold
        .map_or("none".into(), |w| format!("{:.1e}", w.value));
    (
        ok,
        format!(
            "(n={n},k={k},c={c:.3e}) locus {bounds} vs threshold {:.3}, min above {above}",
            last.predicted_threshold
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (ok_default, d_default) = sign_change(2, 1, 1.0);
    let elapsed = start.elapsed();
    let (ok_small, d_small) = sign_change(2, 1, (-5.0f64).exp());
    outcome(
        ok_default && ok_small && elapsed < Duration::from_secs(30),
        format!("{d_default}; {d_small}; {elapsed:.2?}"),
    )
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let p = profile(n, 1, 1.0, SMOOTHED);
        let rc = compare_dt_psi_r(&p, &SolverConfig::default()).unwrap();
        let good = rc.window == (-20.0, -2.0) && rc.nodes > 0 && rc.max_rel_error <= 1e-2;
        ok &= good;
        parts.push(format!("n={n} max rel {:.1e}", rc.max_rel_error));
    }
    let p = profile(2, 1, (-5.0f64).exp(), SMOOTHED);
    let rc = compare_dt_psi_r(&p, &SolverConfig::default()).unwrap();
    let crossing_ok = rc
        .zero_crossing
        .is_some_and(|z| (z + 5.0).abs() <= rc.grid_spacing);
    ok &= crossing_ok;
    parts.push(format!(
        "zero at {:?} (cell {:.4})",
        rc.zero_crossing, rc.grid_spacing
    ));
    outcome(ok, parts.join(", "))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut ratio_range = (f64::INFINITY, 0.0f64);
    let mut ok = true;
    for mode in [SMOOTHED, KNOPF] {
        for n in [2, 3] {
            let p = profile(n, 1, 1.0, mode);
            for z in random_points(&mut rng, n, 20) {
                let at = |h: f64| check_ricci_identity(&p, &z, h).unwrap();
                let res = at(1e-4);
                let ratio = at(2e-3) / at(1e-3);
                worst = worst.max(res);
                ratio_range = (ratio_range.0.min(ratio), ratio_range.1.max(ratio));
                ok &= res <= 1e-6 && (3.5..=4.5).contains(&ratio);
            }
        }
    }
    outcome(
        ok,
        format!(
            "max residual at h=1e-4 {worst:.1e}, halving ratios in [{:.2}, {:.2}]",
            ratio_range.0, ratio_range.1
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_eig = 0.0f64;
    let mut worst_det = 0.0f64;
    for n in [2, 3, 4] {
        for k in 1..n {
            let p = profile(n, k, 1.0, SMOOTHED);
            for z in random_points(&mut rng, n, 20) {
                let s = p.sample(z.r());
                let g = metric_at(&p, &z).unwrap();
                let ricci = ricci_at(&p, &z).unwrap();
                let (values, _) = generalized_eigen(&g, &ricci).unwrap();
                let mut expected = vec![s.psi / s.phi; n - 1];
                expected.push(s.psi_r / s.phi_r);
                expected.sort_by(f64::total_cmp);
                let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (a, b) in values.iter().zip(&expected) {
                    worst_eig = worst_eig.max((a - b).abs() / scale);
                }
                let det = (-(n as f64) * z.r()).exp() * s.phi.powi(n as i32 - 1) * s.phi_r;
                worst_det = worst_det.max(rel(g.determinant(), det));
            }
        }
    }
    outcome(
        worst_eig <= 1e-10 && worst_det <= 1e-10,
        format!("eigenvalue rel err {worst_eig:.1e}, det rel err {worst_det:.1e}"),
    )
}

const RESIDUAL_LEVELS: [(usize, f64); 3] = [(2049, 2e-4), (4097, 1e-4), (8193, 5e-5)];
const RESIDUAL_TIME: f64 = 1e-3;

fn residual_levels(p: &RadialProfile) -> Vec<f64> {
    RESIDUAL_LEVELS
        .iter()
        .map(|&(m, tau)| {
            let s = FlowSolver::new(
                p,
                SolverConfig {
                    m,
                    ..SolverConfig::default()
                },
            )
            .unwrap();
            let times = [RESIDUAL_TIME - tau, RESIDUAL_TIME, RESIDUAL_TIME + tau];
            let snaps = s.evolve_to(&s.init_state(), &times, tau / 16.0).unwrap();
            s.psi_equation_residual(&snaps).unwrap()[0].max
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let smoothed = residual_levels(&profile(n, 1, 1.0, SMOOTHED));
        let knopf = residual_levels(&profile(n, 1, 1.0, KNOPF));
        let ratios = [smoothed[0] / smoothed[1], smoothed[1] / smoothed[2]];
        ok &= ratios.iter().all(|&q| q >= 3.5);
        ok &= knopf.iter().zip(&smoothed).all(|(a, b)| a <= b);
        parts.push(format!(
            "n={n} residuals {:.1e} {:.1e} {:.1e} (ratios {:.2}, {:.2}), knopf max {:.1e}",
            smoothed[0],
            smoothed[1],
            smoothed[2],
            ratios[0],
            ratios[1],
            knopf.iter().fold(0.0f64, |m, &v| m.max(v))
        ));

        let p = profile(n, 1, 1.0, SMOOTHED);
        let s = FlowSolver::new(&p, SolverConfig::default()).unwrap();
        let snap = s.snapshot(&s.init_state()).unwrap();
        let rhs = s.psi_equation_rhs(&snap);
        let nm1 = n as f64 - 1.0;
        let mut worst = 0.0f64;
        for i in 2..snap.len() - 2 {
            if snap.r[i] <= -1.0 {
                let exact = -nm1 * nm1 * snap.phi_r[i] / (snap.phi[i] * snap.phi[i]);
                worst = worst.max(rel(rhs[i], exact));
            }
        }
        ok &= worst <= 1e-10;
        parts.push(format!("t=0 cap rhs rel err {worst:.1e}"));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let n = 4;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 1..=3 {
        let p = profile(n, k, 1.0, SMOOTHED);
        let grid = Grid::uniform(-40.0, 40.0, 4096);
        let mut density_err = 0.0f64;
        let mut identities = true;
        let band = (0..=2000).map(|i| -1.0 + i as f64 / 1000.0);
        for r in grid.nodes().iter().copied().chain(band) {
            let s = p.sample(r);
            identities &= s.psi == n as f64 - k as f64 * s.slope && s.psi_r >= 0.0;
            let lhs = s.phi.powi(n as i32 - 1) * s.phi_r;
            density_err = density_err.max(rel(lhs, s.log_density.exp()));
        }
        let (sign_ok, sign) = sign_change(n, k, 1.0);
        ok &= identities && density_err <= 1e-12 && sign_ok;
        parts.push(format!(
            "k={k}: identities {identities}, density err {density_err:.1e}, {sign}"
        ));
    }
    outcome(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("initial certification", criterion_1),
        ("constant-slope contrast", criterion_2),
        ("sign change under the flow", criterion_3),
        ("rate of psi_r at t=0", criterion_4),
        ("Ricci identity by finite differences", criterion_5),
        ("eigenvalue and determinant structure", criterion_6),
        ("psi-equation residual", criterion_7),
        ("twisted profiles", criterion_8),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failures += usize::from(!o.passed);
        println!(
            "acceptance {} [{}] {name}: {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

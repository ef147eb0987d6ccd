use calabi_flow::analysis::{detect_mixed_sign, locus_monotone_below, DEFAULT_SIGN_TOL};
use calabi_flow::flow::{analytic_dt_psi_r, SolverConfig};
use calabi_flow::{FlowSnapshot, FlowSolver, ProfileMode, ProfileParams, RadialProfile};

fn profile(n: usize, k: usize) -> RadialProfile {
    RadialProfile::build(
        ProfileParams::new(n, k, 1.0, 1.0).unwrap(),
        ProfileMode::PaperSmoothed,
    )
    .unwrap()
}

fn solver(p: &RadialProfile, r_min: f64, m: usize) -> FlowSolver {
    FlowSolver::new(
        p,
        SolverConfig {
            r_min,
            m,
            ..SolverConfig::default()
        },
    )
    .unwrap()
}

fn phi_at(s: &FlowSolver, t: f64, dt: f64, r: f64) -> f64 {
    let snap = &s.evolve_to(&s.init_state(), &[t], dt).unwrap()[0];
    let i = snap.nearest(r);
    assert!((snap.r[i] - r).abs() < 1e-12, "{r} is not a node");
    snap.phi[i]
}

fn final_snapshot(s: &FlowSolver) -> FlowSnapshot {
    s.evolve(&s.init_state()).unwrap().pop().unwrap()
}

#[test]
fn cap_potential_drops_by_elapsed_time() {
    // ψ = 1 on the cap for n = 2, so φ(−20) falls by t to leading order.
    let p = profile(2, 1);
    let s = solver(&p, -40.0, 4096);
    let snap = final_snapshot(&s);
    let i = snap.nearest(-20.0);
    let drop = p.phi(snap.r[i]) - snap.phi[i];
    assert!((drop - 1e-3).abs() < 1e-9, "{drop}");
}

#[test]
fn interior_ignores_the_left_boundary() {
    let p = profile(2, 1);
    let a = final_snapshot(&solver(&p, -40.0, 4097));
    let b = final_snapshot(&solver(&p, -60.0, 5121));
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        if a.r[i].abs() <= 20.0 {
            let j = b.nearest(a.r[i]);
            assert!((b.r[j] - a.r[i]).abs() < 1e-9);
            worst = worst.max((a.phi[i] - b.phi[j]).abs());
        }
    }
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn fourth_order_in_space() {
    let p = profile(2, 1);
    let values: Vec<f64> = [1025, 2049, 4097, 8193]
        .iter()
        .map(|&m| phi_at(&solver(&p, -40.0, m), 1e-3, 1e-5, 0.625))
        .collect();
    for w in values.windows(3) {
        let ratio = (w[1] - w[0]) / (w[2] - w[1]);
        assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
    }
}

#[test]
fn second_order_in_time() {
    let p = profile(2, 1);
    let s = solver(&p, -40.0, 2049);
    let values: Vec<f64> = [2e-4, 1e-4, 5e-5, 2.5e-5]
        .iter()
        .map(|&dt| phi_at(&s, 1e-3, dt, -5.0))
        .collect();
    for w in values.windows(3) {
        let ratio = (w[1] - w[0]) / (w[2] - w[1]);
        assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
    }
}

#[test]
fn early_radial_eigenvalue_follows_first_order_prediction() {
    // λ₂(t) ≈ t·∂ₜψ_r(0)/φ_r on the cap, since ψ_r vanishes there at t = 0.
    let p = profile(2, 1);
    let snap = final_snapshot(&solver(&p, -40.0, 4096));
    let i = snap.nearest(-10.0);
    let predicted = snap.t * analytic_dt_psi_r(&p, snap.r[i]).unwrap() / snap.phi_r[i];
    assert!(predicted < 0.0);
    assert!((snap.lambda2[i] / predicted - 1.0).abs() < 0.05);
}

#[test]
fn negative_locus_grows_deep_in_the_cap() {
    let p = profile(2, 1);
    let s = solver(&p, -40.0, 4096);
    let snaps = s.evolve(&s.init_state()).unwrap();
    assert!(locus_monotone_below(&snaps, DEFAULT_SIGN_TOL, -2.0));
    // The left end is where λ₂ sinks below its rounding bound, not a
    // physical edge; it only has to sit deep in the cap.
    let reports = detect_mixed_sign(&p, &snaps, DEFAULT_SIGN_TOL);
    assert!(reports[1..]
        .iter()
        .all(|r| r.locus_bounds().unwrap().0 < -25.0));
}

#[test]
fn locus_edge_near_the_band_recedes() {
    // ψ_r > 0 in the transition band diffuses into the cap, so the right end
    // of the negative set moves left with time instead of right.
    let p = profile(2, 1);
    let s = solver(&p, -40.0, 4096);
    let reports = detect_mixed_sign(&p, &s.evolve(&s.init_state()).unwrap(), DEFAULT_SIGN_TOL);
    let highs: Vec<f64> = reports[1..]
        .iter()
        .map(|r| r.locus_bounds().unwrap().1)
        .collect();
    assert!(highs.windows(2).all(|w| w[1] < w[0]), "{highs:?}");
    assert!(highs.iter().all(|&h| h > -1.2 && h < -0.9), "{highs:?}");
}

#[test]
fn twisted_loci_stay_on_the_cap() {
    for k in [2, 3] {
        let p = profile(4, k);
        let s = solver(&p, -40.0, 4096);
        let reports = detect_mixed_sign(&p, &s.evolve(&s.init_state()).unwrap(), DEFAULT_SIGN_TOL);
        assert!(!reports[0].mixed());
        for r in &reports[1..] {
            let (_, hi) = r.locus_bounds().unwrap();
            assert!(hi < -0.9 && r.locus_within_threshold, "k={k} {hi}");
        }
    }
}

#[test]
fn zero_duration_returns_initial_state() {
    let p = profile(3, 2);
    let s = FlowSolver::new(
        &p,
        SolverConfig {
            t_end: 0.0,
            snapshot_times: vec![],
            ..SolverConfig::default()
        },
    )
    .unwrap();
    let snaps = s.evolve(&s.init_state()).unwrap();
    assert_eq!(snaps.len(), 1);
    assert_eq!(snaps[0].phi, s.base().phi);
}

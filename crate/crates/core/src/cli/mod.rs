//! Command-line front end: configuration, the five subcommands and their
//! artifacts (per-snapshot CSV tables and a `summary.json`).

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    certify_initial, compare_dt_psi_r, detect_mixed_sign, Certificate, MixedSignReport,
    RateComparison, Witness, DEFAULT_SIGN_TOL,
};
use crate::calabi::{analytic_coefficients, check_extension, ExpansionEnd, ExtensionVerdict};
use crate::error::{Error, Result};
use crate::flow::{FlowSnapshot, FlowSolver, Grid};
use crate::profile::RadialProfile;

pub use config::{Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

/// Relative tolerance on the leading expansion coefficients.
pub const EXPANSION_TOL: f64 = 1e-6;
/// Relative tolerance on the measured ∂ₜψ_r against the closed form.
pub const RATE_TOL: f64 = 1e-2;
/// Floor for λ₂ on cap-ray nodes above the sign threshold.
pub const ABOVE_THRESHOLD_FLOOR: f64 = -1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "calabi-flow",
    version,
    about = "Radial Kähler–Ricci flow on Calabi's twisted bundles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the initial metric's positivity and extension conditions.
    Certify,
    /// Fit the expansions of φ at both ends.
    Expand,
    /// Run the flow and write one table per snapshot.
    Evolve,
    /// Evolve, locate negative Ricci directions and compare ∂ₜψ_r with the closed form.
    VerifySign,
    /// certify, expand, evolve and verify-sign in one go; fails if any check fails.
    Reproduce,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub verdict: ExtensionVerdict,
    pub analytic_zero: Option<(f64, f64)>,
    pub analytic_infinity: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocusSummary {
    pub t: f64,
    pub nodes: usize,
    pub bounds: Option<(f64, f64)>,
    pub min_lambda2: Option<Witness>,
    pub min_lambda2_above_threshold: Option<Witness>,
    pub predicted_threshold: f64,
    pub unresolved: usize,
}

impl From<&MixedSignReport> for LocusSummary {
    fn from(r: &MixedSignReport) -> Self {
        Self {
            t: r.t,
            nodes: r.negative_locus.len(),
            bounds: r.locus_bounds(),
            min_lambda2: r.min_lambda2,
            min_lambda2_above_threshold: r.min_lambda2_above_threshold,
            predicted_threshold: r.predicted_threshold,
            unresolved: r.unresolved,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: &'static str,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion: Option<ExpansionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub snapshot_files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub negative_locus: Vec<LocusSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateComparison>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Summary {
    fn new(command: &'static str, config: &RunConfig) -> Self {
        Self {
            command,
            config: config.clone(),
            certificate: None,
            expansion: None,
            snapshot_files: Vec::new(),
            negative_locus: Vec::new(),
            rate: None,
            checks: Vec::new(),
            passed: true,
        }
    }

    fn check(&mut self, name: &'static str, passed: bool, detail: String) {
        self.passed &= passed;
        self.checks.push(Check {
            name,
            passed,
            detail,
        });
    }
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Certify => "certify",
        Command::Expand => "expand",
        Command::Evolve => "evolve",
        Command::VerifySign => "verify-sign",
        Command::Reproduce => "reproduce",
    }
}

fn certificate_checks(summary: &mut Summary, cert: &Certificate) {
    let c = &cert.conditions;
    summary.check(
        "initial-conditions",
        c.all(),
        format!(
            "phi>0 {} phi_r>0 {} psi>0 {} psi_r>=0 {} extends at 0 {} extends at infinity {}",
            c.phi_positive,
            c.phi_r_positive,
            c.psi_positive,
            c.psi_r_nonnegative,
            c.extends_at_zero,
            c.extends_at_infinity
        ),
    );
}

fn expansion_checks(summary: &mut Summary, report: &ExpansionReport) {
    let fits = [
        (&report.verdict.zero, report.analytic_zero),
        (&report.verdict.infinity, report.analytic_infinity),
    ];
    for (fit, exact) in fits {
        let Some((c0, c1)) = exact else { continue };
        let e0 = ((fit.coefficients[0] - c0) / c0).abs();
        let e1 = ((fit.coefficients[1] - c1) / c1).abs();
        let name = match fit.end {
            ExpansionEnd::Zero => "expansion-at-zero",
            ExpansionEnd::Infinity => "expansion-at-infinity",
        };
        summary.check(
            name,
            e0 <= EXPANSION_TOL && e1 <= EXPANSION_TOL,
            format!("relative errors {e0:.3e}, {e1:.3e} on the two leading coefficients"),
        );
    }
}

fn sign_checks(
    summary: &mut Summary,
    reports: &[MixedSignReport],
    rate: &RateComparison,
    cap_edge: f64,
) {
    let initial = reports.iter().filter(|r| r.t == 0.0).all(|r| !r.mixed());
    summary.check("no-negative-direction-at-t0", initial, String::new());
    let later: Vec<_> = reports.iter().filter(|r| r.t > 0.0).collect();
    summary.check(
        "negative-direction-for-t>0",
        !later.is_empty() && later.iter().all(|r| r.mixed()),
        later
            .iter()
            .map(|r| format!("t={:e}: {} nodes", r.t, r.negative_locus.len()))
            .collect::<Vec<_>>()
            .join("; "),
    );
    let contained = later.iter().all(|r| {
        r.locus_within_threshold
            && r.min_lambda2_above_threshold
                .is_none_or(|w| w.value >= ABOVE_THRESHOLD_FLOOR)
    });
    summary.check(
        "locus-below-threshold",
        contained,
        format!(
            "threshold r = {:.6}",
            reports.first().map_or(f64::NAN, |r| r.predicted_threshold)
        ),
    );
    if rate.nodes > 0 {
        summary.check(
            "rate-match",
            rate.max_rel_error <= RATE_TOL,
            format!(
                "max relative error {:.3e} (mean {:.3e}) on {} nodes",
                rate.max_rel_error, rate.mean_rel_error, rate.nodes
            ),
        );
    }
    let z = rate.predicted_zero;
    if z > rate.window.0 && z < cap_edge {
        let ok = rate
            .zero_crossing
            .is_some_and(|x| (x - z).abs() <= rate.grid_spacing);
        summary.check(
            "rate-zero-crossing",
            ok,
            format!("measured {:?}, predicted {z:.6}", rate.zero_crossing),
        );
    }
}

fn evolve_and_write(
    cfg: &RunConfig,
    profile: &RadialProfile,
    summary: &mut Summary,
) -> Result<Vec<FlowSnapshot>> {
    let solver = FlowSolver::new(profile, cfg.solver.clone())?;
    let snapshots = solver.evolve(&solver.init_state())?;
    for s in &snapshots {
        let path = output::write_snapshot(&cfg.out_dir, s)?;
        summary.snapshot_files.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    }
    Ok(snapshots)
}

/// Runs one subcommand and writes its artifacts into `cfg.out_dir`.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Summary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let profile = RadialProfile::build(cfg.params, cfg.mode)?;
    let mut summary = Summary::new(command_name(command), cfg);

    if matches!(command, Command::Certify | Command::Reproduce) {
        let grid = Grid::uniform(cfg.solver.r_min, cfg.solver.r_max, cfg.solver.m);
        let cert = certify_initial(&profile, &grid);
        if command == Command::Reproduce {
            certificate_checks(&mut summary, &cert);
        }
        summary.certificate = Some(cert);
    }
    if matches!(command, Command::Expand | Command::Reproduce) {
        let report = ExpansionReport {
            verdict: check_extension(&profile),
            analytic_zero: analytic_coefficients(&profile, ExpansionEnd::Zero),
            analytic_infinity: analytic_coefficients(&profile, ExpansionEnd::Infinity),
        };
        if command == Command::Reproduce {
            expansion_checks(&mut summary, &report);
        }
        summary.expansion = Some(report);
    }
    if matches!(
        command,
        Command::Evolve | Command::VerifySign | Command::Reproduce
    ) {
        let snapshots = evolve_and_write(cfg, &profile, &mut summary)?;
        if command != Command::Evolve {
            let reports = detect_mixed_sign(&profile, &snapshots, DEFAULT_SIGN_TOL);
            let rate = compare_dt_psi_r(&profile, &cfg.solver)?;
            let cap_edge = if profile.on_cap_ray(0.0) {
                0.0
            } else {
                -cfg.params.delta
            };
            sign_checks(&mut summary, &reports, &rate, cap_edge);
            summary.negative_locus = reports.iter().map(LocusSummary::from).collect();
            summary.rate = Some(rate);
        }
    }
    output::write_json(&cfg.out_dir, "summary.json", &summary)?;
    Ok(summary)
}

fn print_summary(s: &Summary) {
    if let Some(cert) = &s.certificate {
        let c = &cert.conditions;
        println!("phi_positive          {}", c.phi_positive);
        println!("phi_r_positive        {}", c.phi_r_positive);
        println!("psi_positive          {}", c.psi_positive);
        println!("psi_r_nonnegative     {}", c.psi_r_nonnegative);
        println!("extends_at_zero       {}", c.extends_at_zero);
        println!("extends_at_infinity   {}", c.extends_at_infinity);
    }
    if let Some(e) = &s.expansion {
        for fit in [&e.verdict.zero, &e.verdict.infinity] {
            let [c0, c1, c2] = fit.coefficients;
            println!(
                "{:<8} {:+.12e} {:+.12e} {:+.6e}  residual {:.2e}{}",
                fit.end.to_string(),
                c0,
                c1,
                c2,
                fit.fit_residual,
                if fit.valid { "" } else { "  (invalid)" }
            );
        }
        if e.verdict.heuristic {
            println!("verdict for k > 1 is heuristic");
        }
    }
    for l in &s.negative_locus {
        match l.bounds {
            Some((a, b)) => println!(
                "t = {:.3e}: lambda2 < 0 on {} nodes in [{a:.4}, {b:.4}]",
                l.t, l.nodes
            ),
            None => println!("t = {:.3e}: no negative lambda2", l.t),
        }
    }
    if let Some(r) = &s.rate {
        println!(
            "d/dt psi_r at t=0: max rel error {:.3e} on [{}, {}]",
            r.max_rel_error, r.window.0, r.window.1
        );
    }
    if !s.snapshot_files.is_empty() {
        println!(
            "wrote {} snapshot tables to {}",
            s.snapshot_files.len(),
            s.config.out_dir.display()
        );
    }
    for c in &s.checks {
        println!(
            "[{}] {} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_solver_failure() || matches!(err, Error::NonFinite(_) | Error::NotPositiveDefinite) {
        EXIT_SOLVER
    } else {
        EXIT_CONFIG
    }
}

/// Parses arguments, runs, prints and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match RunConfig::resolve(&cli.overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run(cli.command, &cfg) {
        Ok(summary) => {
            print_summary(&summary);
            if summary.passed {
                EXIT_OK
            } else {
                EXIT_ACCEPTANCE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

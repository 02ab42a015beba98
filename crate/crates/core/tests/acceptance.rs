//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;

use stringasym::expr::{parse_flux, ExprError, FluxExpr};
use stringasym::full::{full_initial_condition_with, FieldState, FullSolver};
use stringasym::kdv::{kdv_initial_condition, Branch, KdvSolver, KdvState};
use stringasym::params::{Closure, DerivedParams, PhysicalParams};
use stringasym::pipeline::Problem;
use stringasym::profiles::Profile;
use stringasym::run::fast_sample_times;
use stringasym::spectral::{PeriodicGrid, Spectral};
use stringasym::validation::{eps_sweep, fast_mode_diagnostic, fit_loglog_slope};

/// Written to the raw stderr handle so the line survives output capture.
fn report(id: u32, name: &str, pass: bool, detail: String, start: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id:>2} {verdict} {name}: {detail} [{:.2} s]",
        start.elapsed().as_secs_f64()
    );
}

fn info(id: u32, detail: String) {
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} INFO {detail}");
}

fn default_params(eps: f64) -> PhysicalParams {
    PhysicalParams::new(eps, 1.0, 2.0, 1.0, 1.0).unwrap()
}

#[test]
fn criterion_01_linear_energy_conservation() {
    let start = Instant::now();
    let p = default_params(0.1);
    let mut pr = Problem::new(p, FluxExpr::zero(), 1.0);
    pr.output_times = (0..=10).map(|i| i as f64 / 10.0).collect();
    let traj = pr.solve_full().unwrap();
    let sp = Spectral::new(traj[0].grid);
    let e0 = traj[0].weighted_energy(&p, &sp);
    let drift = traj
        .iter()
        .map(|s| (s.weighted_energy(&p, &sp) - e0).abs() / e0)
        .fold(0.0, f64::max);
    let pass = drift < 1e-9;
    report(1, "linear energy conservation", pass, format!("max relative drift {drift:.3e} < 1e-9"), start);
    assert!(pass);
}

#[test]
fn criterion_02_propagator_reversibility() {
    let start = Instant::now();
    let p = default_params(0.1);
    let solver = FullSolver::new(
        stringasym::full::resolved_grid(&p, 6.0),
        p,
        FluxExpr::zero(),
    );
    let grid = *solver.spectral().grid();
    let sech2 = Profile::sech2();
    let gauss = Profile::Gaussian {
        amplitude: 0.7,
        scale: 1.5,
        shift: 2.0,
    };
    // Inconsistent data and a nonzero velocity excite every mode family.
    let state = full_initial_condition_with(&p, |x| sech2.eval(x), |x| gauss.eval(x), grid, false).unwrap();
    let mut worst: f64 = 0.0;
    for dt in [solver.default_dt(), 0.01, 0.1] {
        let fwd = solver.step_with(&state, &solver.propagator(dt)).unwrap();
        let back = solver.step_with(&fwd, &solver.propagator(-dt)).unwrap();
        worst = worst.max(back.sup_distance(&state));
    }
    let pass = worst < 1e-10;
    report(2, "exact-propagator reversibility", pass, format!("sup distance {worst:.3e} < 1e-10"), start);
    assert!(pass);
}

#[test]
fn criterion_03_kdv_invariants() {
    let start = Instant::now();
    let p = default_params(1.0);
    let d = DerivedParams::new(&p, Closure::Consistent).unwrap();
    let grid = PeriodicGrid::new(1024, 80.0);
    let solver = KdvSolver::new(grid, &p, d, parse_flux("u*v").unwrap()).unwrap();
    let sech2 = Profile::sech2();
    let mut worst_mass: f64 = 0.0;
    let mut worst_l2: f64 = 0.0;
    for branch in [Branch::I, Branch::II] {
        let s0 = kdv_initial_condition(|z| sech2.eval(z), grid, branch).unwrap();
        let outs: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        for s in solver.solve(&s0, 1.0, None, &outs).unwrap() {
            worst_mass = worst_mass.max((s.mass() - s0.mass()).abs() / s0.mass().abs());
            worst_l2 = worst_l2.max((s.l2_squared() - s0.l2_squared()).abs() / s0.l2_squared());
        }
    }
    let pass = worst_mass < 1e-10 && worst_l2 < 1e-8;
    report(
        3,
        "KdV invariants",
        pass,
        format!("mass drift {worst_mass:.3e} < 1e-10, L2 drift {worst_l2:.3e} < 1e-8 (h = {:.4} S^2)", d.flux_scale * d.v_ratio),
        start,
    );
    assert!(pass);
}

/// Direct O(M^2) Fourier evaluation of the linear solution, independent of
/// the solver's transforms.
fn linear_oracle(s0: &[f64], grid: &PeriodicGrid, sign: f64, cap_k: f64, t: f64) -> Vec<f64> {
    let m = s0.len();
    let dz = grid.spacing();
    let z: Vec<f64> = grid.points();
    let mut coef = vec![Complex64::new(0.0, 0.0); m];
    for (j, c) in coef.iter_mut().enumerate() {
        let idx = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
        let kappa = 2.0 * PI * idx / grid.length;
        for l in 0..m {
            *c += s0[l] * Complex64::from_polar(1.0, -kappa * z[l]);
        }
        *c *= dz / grid.length;
        if j != m / 2 {
            *c *= Complex64::from_polar(1.0, -sign * cap_k * kappa.powi(3) * t);
        }
    }
    (0..m)
        .map(|l| {
            coef.iter()
                .enumerate()
                .map(|(j, c)| {
                    let idx = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
                    let kappa = 2.0 * PI * idx / grid.length;
                    (c * Complex64::from_polar(1.0, kappa * z[l])).re
                })
                .sum()
        })
        .collect()
}

#[test]
fn criterion_04_linear_dispersion_oracle() {
    let start = Instant::now();
    let p = default_params(0.2);
    let d = DerivedParams::new(&p, Closure::Consistent).unwrap();
    let grid = PeriodicGrid::new(512, 120.0);
    let solver = KdvSolver::new(grid, &p, d, FluxExpr::zero()).unwrap();
    let sech2 = Profile::sech2();
    let mut worst: f64 = 0.0;
    for branch in [Branch::I, Branch::II] {
        let s0 = kdv_initial_condition(|z| sech2.eval(z), grid, branch).unwrap();
        let t = 1.0;
        let s = &solver.solve(&s0, t, None, &[]).unwrap()[0];
        let exact = linear_oracle(&s0.s, &grid, branch.sign(), d.cap_k, t);
        worst = worst.max(s.s.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let pass = worst < 1e-8;
    report(4, "linear-dispersion oracle", pass, format!("L_inf error {worst:.3e} < 1e-8 (K = {:.4})", d.cap_k), start);
    assert!(pass);
}

#[test]
fn criterion_05_soliton_oracle() {
    let start = Instant::now();
    // Quadratic flux h = c S^2. Substituting A sech^2(beta (zeta - V t)) into
    // S_t = K S_zzz - 2 c S S_z gives V = -4 K beta^2 and A = -6 K beta^2 / c.
    let p = default_params(1.0);
    let d = DerivedParams::new(&p, Closure::Consistent).unwrap();
    let c = d.flux_scale;
    let beta = 0.5;
    let speed = -4.0 * d.cap_k * beta * beta;
    let amp = -6.0 * d.cap_k * beta * beta / c;
    let t_end = 1.0 / (beta * speed);
    let grid = PeriodicGrid::new(1024, 100.0);
    let solver = KdvSolver::new(grid, &p, d, parse_flux("u^2").unwrap()).unwrap();
    let soliton = |z: f64, t: f64, dir: f64| amp / (beta * (z - dir * speed * t)).cosh().powi(2);
    let mut worst: f64 = 0.0;
    for (branch, dir) in [(Branch::I, 1.0), (Branch::II, -1.0)] {
        let s0 = KdvState::new(branch, grid, grid.points().iter().map(|&z| soliton(z, 0.0, dir)).collect(), 0.0).unwrap();
        let s = &solver.solve(&s0, t_end, None, &[]).unwrap()[0];
        let err = grid
            .points()
            .iter()
            .zip(&s.s)
            .map(|(&z, v)| (v - soliton(z, t_end, dir)).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    let pass = worst < 1e-4;
    report(
        5,
        "soliton oracle",
        pass,
        format!("L_inf error {worst:.3e} < 1e-4 (A = {amp:.4}, V = {speed:.4}, travel {:.3} widths)", speed * t_end * beta),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_06_recombination_identity() {
    let start = Instant::now();
    let p = PhysicalParams::new(0.1, 1.0, 2.0, 1.0, 2.0).unwrap();
    let pr = Problem::new(p, parse_flux("u*v").unwrap(), 0.5);
    let ap = pr.assemble_at(&[0.0]).unwrap();
    let state = &ap.fields[0];
    let sech2 = Profile::sech2();
    let err = state
        .grid
        .points()
        .iter()
        .zip(&state.u)
        .map(|(x, u)| (u - sech2.eval(x / p.eps)).abs())
        .fold(0.0, f64::max);
    let ratio = p.v_ratio();
    let exact_v = state.v.iter().zip(&state.u).all(|(v, u)| *v == ratio * u);
    let pass = err < 1e-10 && exact_v;
    report(
        6,
        "recombination identity",
        pass,
        format!("sup |u_ap - u0(x/eps)| = {err:.3e} < 1e-10, v_ap == (a/b) u_ap: {exact_v}"),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_07_asymptotic_convergence() {
    let start = Instant::now();
    let pr = Problem::new(default_params(0.4), parse_flux("u*v").unwrap(), 0.5);
    let sweep = eps_sweep(&pr, &[0.4, 0.2, 0.1]).unwrap();
    let s = &sweep.slopes;
    let defect_slope = s.pde_residual_sup.unwrap_or(f64::NAN);
    let pass = sweep.monotone_sup_u && s.sup_u >= 0.7 && defect_slope >= 0.7;
    let sups: Vec<String> = sweep.rows.iter().map(|r| format!("{:.4e}", r.sup_u)).collect();
    report(
        7,
        "asymptotic convergence",
        pass,
        format!(
            "sup R_u = [{}] monotone: {}, slope {:.3} >= 0.7, defect slope {:.3} >= 0.7",
            sups.join(", "),
            sweep.monotone_sup_u,
            s.sup_u,
            defect_slope
        ),
        start,
    );
    assert!(pass);
}

fn fast_mode_pair(p: PhysicalParams, t_end: f64) -> (f64, f64, f64) {
    let times = fast_sample_times(&p, t_end, 16.0);
    let run = |consistent: bool| {
        let mut pr = Problem::new(p, parse_flux("u*v").unwrap(), t_end);
        pr.consistent = consistent;
        let traj: Vec<FieldState> = pr.solve_full_at(&times).unwrap();
        fast_mode_diagnostic(&traj, &p).unwrap()
    };
    let (c, i) = (run(true), run(false));
    (i.max_energy / c.max_energy, i.dominant_frequency, i.expected_frequency)
}

#[test]
fn criterion_08_consistency_phenomenon() {
    let start = Instant::now();
    // Equal speeds: the regime where consistent data stay in the kernel of
    // the coupling for every wavenumber.
    let p = PhysicalParams::new(0.2, 1.0, 1.0, 1.0, 1.0).unwrap();
    let (ratio, freq, expected) = fast_mode_pair(p, 3.0);
    let rel = (freq - expected).abs() / expected;
    let pass = ratio >= 100.0 && rel <= 0.2;
    report(
        8,
        "consistency phenomenon",
        pass,
        format!(
            "k1 = k2 = 1: energy ratio {ratio:.3e} >= 100, frequency {freq:.3} vs {expected:.3} (rel {rel:.3} <= 0.2)"
        ),
        start,
    );
    let (ratio_d, freq_d, _) = fast_mode_pair(default_params(0.2), 3.0);
    info(
        8,
        format!("k1 = 1, k2 = 2: energy ratio {ratio_d:.3} (consistent data leave the kernel when k1 != k2), frequency {freq_d:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_parser_suite() {
    let start = Instant::now();
    let sources = [
        "u*v",
        "u^2",
        "0",
        "u",
        "-v",
        "u + v",
        "u - v",
        "2*u*v",
        "u*v + 0.5*u^2",
        "-(u + v)^3",
        "u*(v - u)",
        "(u - v)*(u + v)",
        "u^3 - 3*u*v^2",
        "1e-3*u^4",
        "-u*-v",
        "u - (v - u)",
        "2.5*(u*v)^2 - u",
        "u^1*v^0 - 1 + 1",
        "((u))",
        "v*v*v*v - u*u",
    ];
    let pts = [(0.0, 0.0), (1.0, 2.0), (-0.7, 0.3), (2.5, -1.25)];
    let mut round_trips = 0;
    for src in sources {
        let f = parse_flux(src).unwrap();
        let printed = f.ast().to_string();
        let g = parse_flux(&printed).unwrap();
        let same = g.ast() == f.ast() && pts.iter().all(|&(u, v)| g.eval(u, v) == f.eval(u, v));
        if same {
            round_trips += 1;
        }
    }
    let syntax = matches!(parse_flux("u * (v"), Err(ExprError::Syntax { .. }))
        && matches!(parse_flux("u ^ v"), Err(ExprError::Syntax { .. }));
    let unknown = matches!(parse_flux("u * w"), Err(ExprError::UnknownSymbol { .. }));
    let origin = matches!(parse_flux("u + 1"), Err(ExprError::NonzeroAtOrigin { value }) if value == 1.0)
        && matches!(parse_flux("u^0"), Err(ExprError::NonzeroAtOrigin { .. }))
        && parse_flux("u + 1 - 1").is_ok();
    let pass = round_trips == sources.len() && syntax && unknown && origin;
    report(
        9,
        "parser suite",
        pass,
        format!(
            "{round_trips}/{} round trips, syntax: {syntax}, unknown symbol: {unknown}, f(0,0) = 0 enforced: {origin}",
            sources.len()
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_10_sweep_slope_oracle() {
    let start = Instant::now();
    let eps = [0.4, 0.2, 0.1, 0.05];
    let mut worst: f64 = 0.0;
    for p in [0.0, 0.5, 1.0, 2.0] {
        let e: Vec<f64> = eps.iter().map(|x: &f64| 0.37 * x.powf(p)).collect();
        worst = worst.max((fit_loglog_slope(&eps, &e).unwrap() - p).abs());
    }
    let pass = worst < 1e-6;
    report(10, "sweep-slope oracle", pass, format!("max slope error {worst:.3e} < 1e-6"), start);
    assert!(pass);
}

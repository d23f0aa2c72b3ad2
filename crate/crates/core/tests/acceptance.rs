//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them as they complete).
//!
//! The physics checks are property-based: the theory predicts growth laws,
//! decay directions, and bounds with unspecified constants, so each criterion
//! verifies the qualitative law at desk scale rather than a reference number.

use std::f64::consts::PI;
use std::sync::OnceLock;

use glwire::analysis::{
    agmon_fit, agmon_large_domain, large_domain_run, masked_psi_mass, parameter_sweep,
    steady_run, time_decay_track, w_comparison, LargeSetup, RegionKind, RunSetup, SweepParam,
};
use glwire::domain::{build_wire_domain, CurrentProfile};
use glwire::fields::{
    compute_hj, conjugacy_residual, extract_regions, solve_normal_fields,
};
use glwire::linalg::convergence_order;
use glwire::spectral::{
    de_gennes_theta0, lambda_vs_lambda_d, sector_dn_ground, SectorProblem,
};
use glwire::tdgl::{
    default_dt, gauge_transform, initial_tapered, normal_state, project_coulomb, psi_l2,
    residual, run_to_steady, steady_identities, step, PhysicsParams, RunOptions, StepContext,
    Stepper,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Print the verdict line for a criterion and panic on failure.
fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("criterion {id:02} ({name}): {status} [{detail}]");
    assert!(ok, "criterion {id:02} ({name}) failed: {detail}");
}

fn theta0() -> f64 {
    static THETA0: OnceLock<f64> = OnceLock::new();
    *THETA0.get_or_init(|| {
        let xi: Vec<f64> = (0..25).map(|k| 0.2 + 0.05 * k as f64).collect();
        de_gennes_theta0(10.0, 0.005, &xi).unwrap().value
    })
}

#[test]
fn criterion_01_theta0() {
    let xi: Vec<f64> = (0..25).map(|k| 0.2 + 0.05 * k as f64).collect();
    let v10 = theta0();
    let v15 = de_gennes_theta0(15.0, 0.005, &xi).unwrap().value;
    let in_range = (0.58..=0.60).contains(&v10);
    let stable = (v10 - v15).abs() <= 1e-4;
    verdict(
        1,
        "de Gennes constant",
        in_range && stable,
        format!("theta0(T=10) = {v10:.6}, theta0(T=15) = {v15:.6}"),
    );
}

#[test]
fn criterion_02_sector_constant() {
    let run = |alpha: f64, r: f64| {
        sector_dn_ground(&SectorProblem { alpha, r_trunc: r, h_mesh: 0.05 })
            .unwrap()
            .value
    };
    // Truncating the sector at radius R confines the ground state and raises
    // the value by ~ C / R^2, so extrapolate the R -> infinity limit from two
    // truncation radii (Richardson in 1/R^2).
    let extrap = |alpha: f64| {
        let (v8, v12) = (run(alpha, 8.0), run(alpha, 12.0));
        let w = (8.0f64 / 12.0).powi(2);
        (v12 - (v8 - v12) * w / (1.0 - w), v8, v12)
    };
    let t0 = theta0();
    let (v_half, v8_half, v12_half) = extrap(PI / 2.0);
    let (v_pi, v8_pi, v12_pi) = extrap(PI);
    let v12_mid = run(0.75 * PI, 12.0);
    let close = (v_half - t0).abs() <= 0.05 * t0 && (v_pi - t0).abs() <= 0.05 * t0;
    // monotone nonincreasing in alpha at matched truncation, and in R
    let monotone = v12_half >= v12_mid - 1e-9
        && v12_mid >= v12_pi - 1e-9
        && v8_half >= v12_half
        && v8_pi >= v12_pi;
    verdict(
        2,
        "sector Dirichlet-Neumann constant",
        close && monotone,
        format!(
            "extrapolated theta(pi/2) = {v_half:.5}, theta(pi) = {v_pi:.5}, theta0 = {t0:.5}; \
             at R = 12: {v12_half:.5} >= {v12_mid:.5} >= {v12_pi:.5}"
        ),
    );
}

#[test]
fn criterion_03_lambda_identity() {
    let (_, grid) = build_wire_domain(1.0, 1.0, 65, 65).unwrap();
    let (lam, lam_d) = lambda_vs_lambda_d(&grid).unwrap();
    let mutual = (lam - lam_d).abs() <= 0.05 * lam_d;
    let exact = 2.0 * PI * PI;
    let abs = (lam_d - exact).abs() <= 0.02 * exact;
    verdict(
        3,
        "lambda = lambda^D",
        mutual && abs,
        format!("lambda = {lam:.4}, lambda^D = {lam_d:.4}, 2 pi^2 = {exact:.4}"),
    );
}

#[test]
fn criterion_04_normal_fields() {
    // (a) zero current: B_n identically h_ex, phi_n identically 0
    let (dom, grid) = build_wire_domain(1.0, 2.0, 17, 33).unwrap();
    let nf = solve_normal_fields(&dom, &grid, &CurrentProfile::zero(), 0.7).unwrap();
    let a_ok = nf.bn.iter().all(|&b| (b - 0.7).abs() < 1e-12)
        && nf.phin.iter().all(|&p| p.abs() < 1e-12);

    // (b) contact-constant formula vs boundary trace, and (c) conjugacy
    // residual between B_n and phi_n, both measured on the bump profile with
    // an external field. The formula and the trace use the same boundary
    // quadrature, so their agreement is exact up to rounding at every
    // resolution; accept either machine-level agreement or second-order
    // convergence. The conjugacy residual uses one-sided differences near the
    // boundary, so its order is measured in the asymptotic range h <= 1/32.
    let mut hs = Vec::new();
    let mut errs_hj = Vec::new();
    let mut errs_cr = Vec::new();
    for (nx, ny) in [(33, 65), (65, 129), (129, 257)] {
        let (dom, grid) = build_wire_domain(1.0, 2.0, nx, ny).unwrap();
        let profile = CurrentProfile::bump(4.0);
        let hj = compute_hj(&dom, &grid, &profile, 0.5).unwrap();
        let nf = solve_normal_fields(&dom, &grid, &profile, 0.5).unwrap();
        hs.push(grid.h);
        errs_hj.push(
            (hj.h1_formula - hj.h1_trace)
                .abs()
                .max((hj.h2_formula - hj.h2_trace).abs()),
        );
        errs_cr.push(conjugacy_residual(&grid, &nf.bn, &nf.phin));
    }
    let hj_exact = errs_hj.iter().all(|&e| e <= 1e-12);
    let hj_ok = hj_exact || convergence_order(&hs, &errs_hj).unwrap() >= 1.8;
    let order_cr = convergence_order(&hs, &errs_cr).unwrap();

    // (d) symmetric wire: (h1, h2) = (-2, +2) up to quadrature error
    let (dom, grid) = build_wire_domain(1.0, 2.0, 33, 65).unwrap();
    let hj = compute_hj(&dom, &grid, &CurrentProfile::wire(4.0), 0.0).unwrap();
    let tol_d = 2.0 * grid.h * grid.h;
    let d_ok = (hj.h1_formula + 2.0).abs() <= tol_d && (hj.h2_formula - 2.0).abs() <= tol_d;

    verdict(
        4,
        "normal-field correctness",
        a_ok && hj_ok && order_cr >= 1.8 && d_ok,
        format!(
            "zero-current exact: {a_ok}, hj trace agreement = {:.1e} (exact: {hj_exact}), \
             conjugacy order = {order_cr:.2}, wire (h1, h2) = ({:.4}, {:.4})",
            errs_hj[2],
            hj.h1_formula, hj.h2_formula
        ),
    );
}

#[test]
fn criterion_05_normal_state_stationarity() {
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    let mut rel_finest = f64::NAN;
    for (nx, ny) in [(17, 33), (33, 65), (65, 129)] {
        let (dom, grid) = build_wire_domain(1.0, 2.0, nx, ny).unwrap();
        let profile = CurrentProfile::bump(4.0);
        let nf = solve_normal_fields(&dom, &grid, &profile, 0.5).unwrap();
        let params = PhysicsParams::new(8.0, 1.0, 0.5).unwrap();
        let ctx = StepContext::new(&dom, &grid, profile, params, &nf);
        let s = normal_state(&ctx, &nf);
        let r = residual(&s, &ctx);
        // scale: the A-equation terms are O(c kappa |grad phi_n|)
        let scale = ctx.params.c * ctx.params.kappa * 4.0;
        hs.push(grid.h);
        errs.push(r.a_eq);
        rel_finest = r.a_eq / scale;
    }
    let order = convergence_order(&hs, &errs).unwrap();
    verdict(
        5,
        "normal-state stationarity",
        order >= 1.8 && rel_finest <= 1e-2,
        format!("residual order = {order:.2}, relative residual at h=1/64: {rel_finest:.2e}"),
    );
}

#[test]
fn criterion_06_maximum_principle() {
    // kappa = 8, h_ex = 2 wire; tapered start has sup |psi_0| = 1
    let (dom, grid) = build_wire_domain(1.0, 2.0, 33, 65).unwrap();
    let profile = CurrentProfile::wire(4.0);
    let nf = solve_normal_fields(&dom, &grid, &profile, 2.0).unwrap();
    let params = PhysicsParams::new(8.0, 1.0, 2.0).unwrap();
    let ctx = StepContext::new(&dom, &grid, profile, params, &nf);
    let mut s = initial_tapered(&ctx, &nf);
    let dt = default_dt(&ctx.grid, &ctx.params);
    let mut worst = s.psi.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
    for _ in 0..10_000 {
        let rep = step(&mut s, &ctx, dt).unwrap();
        worst = worst.max(rep.sup_psi);
    }
    verdict(
        6,
        "maximum principle",
        worst <= 1.0 + 1e-10,
        format!("max over 10^4 steps of sup |psi| = {worst:.12}"),
    );
}

#[test]
fn criterion_07_gauge_invariance() {
    let (dom, grid) = build_wire_domain(1.0, 2.0, 17, 33).unwrap();
    let profile = CurrentProfile::wire(4.0);
    let nf = solve_normal_fields(&dom, &grid, &profile, 0.5).unwrap();
    let params = PhysicsParams::new(4.0, 1.0, 0.5).unwrap();
    let ctx = StepContext::new(&dom, &grid, profile, params, &nf);
    let base = {
        let mut s = initial_tapered(&ctx, &nf);
        let dt = default_dt(&ctx.grid, &ctx.params);
        for _ in 0..200 {
            step(&mut s, &ctx, dt).unwrap();
        }
        s
    };
    let l2_0 = psi_l2(&ctx, &base);
    let res_0 = residual(&base, &ctx);
    let id_0 = steady_identities(&base, &ctx);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        // random smooth gauge function: low-order trigonometric polynomial
        let (a1, a2, a3): (f64, f64, f64) =
            (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (w1, w2): (f64, f64) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let omega: Vec<f64> = (0..grid.n_nodes())
            .map(|p| {
                let (i, j) = (p % grid.nx, p / grid.nx);
                let (x, y) = (i as f64 * grid.h, j as f64 * grid.h);
                a1 * (w1 * x).sin() * (w2 * y).cos() + a2 * x * y + a3 * (x * x - y * y)
            })
            .collect();
        let mut s = base.clone();
        gauge_transform(&mut s, &ctx, &omega, None);
        let res = residual(&s, &ctx);
        let id = steady_identities(&s, &ctx);
        worst = worst
            .max((psi_l2(&ctx, &s) - l2_0).abs())
            .max((res.psi_eq - res_0.psi_eq).abs())
            .max((res.a_eq - res_0.a_eq).abs())
            .max((id.grad_identity - id_0.grad_identity).abs() / id_0.scale)
            .max((id.imag_identity - id_0.imag_identity).abs() / id_0.scale);
    }

    // projection idempotence
    let mut s = base.clone();
    project_coulomb(&mut s, &ctx).unwrap();
    let snap = s.clone();
    project_coulomb(&mut s, &ctx).unwrap();
    let proj_drift = s
        .a
        .ax
        .iter()
        .zip(&snap.a.ax)
        .chain(s.a.ay.iter().zip(&snap.a.ay))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);

    verdict(
        7,
        "gauge invariance",
        worst <= 1e-10 && proj_drift <= 1e-12,
        format!("worst observable drift = {worst:.2e}, projection drift = {proj_drift:.2e}"),
    );
}

#[test]
fn criterion_08_steady_identities() {
    // The discrete integral identities hold exactly only at a true fixed
    // point, so this needs a run that genuinely reaches rate < 1e-8. Any
    // injected current sustains a voltage and hence a steady phase rotation
    // of psi, which keeps the update rate bounded away from zero; the
    // zero-current wire is the configuration that converges to machine-level
    // stationarity. Its steady state vanishes on the contacts and is
    // superconducting in the bulk (classified Mixed).
    let mut setup = RunSetup::wire(0.0, 17, 33);
    setup.h_ex = 0.0;
    setup.tol = 1e-8;
    setup.t_max = 10.0;
    let run = steady_run(&setup, 4.0).unwrap();
    let id = steady_identities(&run.state, &run.ctx);
    let l2 = run.report.l2_psi;
    let rel = |d: f64| d / id.scale;
    let defects_ok = rel(id.grad_identity) <= 1e-6
        && rel(id.phi_elliptic) <= 1e-6
        && rel(id.imag_identity) <= 1e-6;
    let imag_ok = id.imag_identity <= 1e-8 * run.ctx.params.kappa * l2 * l2;
    verdict(
        8,
        "steady-state identities",
        run.report.converged && defects_ok && imag_ok,
        format!(
            "converged = {} (t = {:.2}), relative defects = {:.1e} / {:.1e} / {:.1e}, \
             imag identity = {:.1e}",
            run.report.converged, run.report.t_final,
            rel(id.grad_identity), rel(id.phi_elliptic), rel(id.imag_identity),
            id.imag_identity
        ),
    );
}

#[test]
fn criterion_13_reproducibility() {
    // identical setup twice: the sweep CSV bytes must match exactly
    let mut setup = RunSetup::wire(4.0, 17, 33);
    setup.t_max = 2.0;
    setup.tol = 1e-3;
    let render = || {
        let sweep = parameter_sweep(&setup, 4.0, SweepParam::Kappa, &[2.0, 3.0, 4.0, 5.0]).unwrap();
        let mut csv = Vec::new();
        for row in &sweep.rows {
            csv.extend_from_slice(
                format!(
                    "{:?},{},{},{},{},{}\n",
                    row.param, row.l2_psi, row.sup_psi, row.grad_identity, row.steps,
                    row.converged
                )
                .as_bytes(),
            );
        }
        csv
    };
    let a = render();
    let b = render();
    verdict(
        13,
        "reproducibility",
        a == b,
        format!("{} bytes, reruns identical: {}", a.len(), a == b),
    );
}

//! Post-processing of simulation output: Agmon-type exponential decay fits,
//! parameter sweeps with scaling-law checks, time-asymptotic tracking of the
//! order-parameter mass, and rescaled large-domain experiments.

use crate::domain::{build_wire_domain, CurrentProfile, Grid};
use crate::error::{GlError, Result};
use crate::fields::{
    brute_distance_field, domain_integral, extract_regions, solve_normal_fields, LinkField,
    NormalFields, RegionMasks,
};
use crate::linalg::{cg, linear_fit};
use crate::tdgl::{
    default_dt, initial_tapered, run_to_steady, steady_identities, step, ConvergenceReport,
    FixedPointKind, GLState, PhysicsParams, RunOptions, StepContext, Stepper,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Log-safe floor for |psi|^2 in decay fits.
const PSI_SQ_FLOOR: f64 = 1e-300;

/// Relative floor for |psi|^2 in decay fits: nodes more than twelve decades
/// below the region maximum in |psi| sit at the double-precision noise level
/// of the time integration and would contaminate the regression with a flat
/// roundoff plateau.
const PSI_SQ_REL_FLOOR: f64 = 1e-24;

/// Trapezoid-weighted integral of |psi|^2 over a node mask.
pub fn masked_psi_mass(grid: &Grid, psi: &[Complex64], mask: &[bool]) -> f64 {
    let mut acc = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.node(i, j);
            if !mask[k] {
                continue;
            }
            let wx = if i == 0 || i == grid.nx - 1 { 0.5 } else { 1.0 };
            let wy = if j == 0 || j == grid.ny - 1 { 0.5 } else { 1.0 };
            acc += wx * wy * psi[k].norm_sqr();
        }
    }
    acc * grid.h * grid.h
}

/// Node field of curl A: the average of the plaquette curls adjacent to each
/// node (4 in the interior, 2 on edges, 1 at corners).
pub fn node_curl(grid: &Grid, a: &LinkField) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_nodes()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let mut sum = 0.0;
            let mut cnt = 0usize;
            for (pi, pj) in [
                (i.wrapping_sub(1), j.wrapping_sub(1)),
                (i, j.wrapping_sub(1)),
                (i.wrapping_sub(1), j),
                (i, j),
            ] {
                if pi < grid.nx - 1 && pj < grid.ny - 1 {
                    sum += a.curl(grid, pi, pj);
                    cnt += 1;
                }
            }
            out[grid.node(i, j)] = sum / cnt as f64;
        }
    }
    out
}

/// Which threshold region a decay fit is taken over, for each insulator
/// component j in {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionKind {
    /// S_{delta,j} with distance to the interior level set C_{delta,j}.
    SDelta,
    /// omega_{delta,j} with distance to its free boundary Gamma_{delta,j}.
    OmegaDelta,
}

/// Result of an exponential decay fit: |psi| ~ exp(-slope * d).
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Fitted rate per unit length on |psi| (log|psi|^2 regressed on -2d).
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub region_id: String,
    pub n_points: usize,
    pub distance_range: (f64, f64),
    /// Weighted integral sum exp(sqrt(delta) kappa d) |psi|^2 over the region.
    pub agmon_integral: f64,
    /// delta^{3/2}-scaled value of the weighted integral.
    pub agmon_scaled: f64,
}

fn fit_log_psi(
    grid: &Grid,
    psi: &[Complex64],
    mask: &[bool],
    dist: &[f64],
    region_id: String,
) -> Result<DecayFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    let eligible = |k: usize| mask[k] && dist[k].is_finite() && dist[k] > 2.0 * grid.h;
    let m2_max = (0..grid.n_nodes())
        .filter(|&k| eligible(k))
        .map(|k| psi[k].norm_sqr())
        .fold(0.0f64, f64::max);
    let floor = PSI_SQ_FLOOR.max(PSI_SQ_REL_FLOOR * m2_max);
    for k in 0..grid.n_nodes() {
        if !eligible(k) {
            continue;
        }
        let m2 = psi[k].norm_sqr();
        if m2 <= floor {
            continue;
        }
        xs.push(-2.0 * dist[k]);
        ys.push(m2.ln());
        dmin = dmin.min(dist[k]);
        dmax = dmax.max(dist[k]);
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys).map_err(|e| match e {
        GlError::DegenerateFit(msg) => GlError::DegenerateFit(format!("{region_id}: {msg}")),
        other => other,
    })?;
    Ok(DecayFit {
        slope,
        intercept,
        r_squared: r2.clamp(0.0, 1.0),
        region_id,
        n_points: xs.len(),
        distance_range: (dmin, dmax),
        agmon_integral: 0.0,
        agmon_scaled: 0.0,
    })
}

/// Exponential decay fit of |psi| over a B_n threshold region. `comp` is the
/// insulator component index (1 or 2). Fit nodes are region nodes more than
/// two cells away from the reference set with |psi|^2 above the log floor.
/// The weighted (Agmon) integral is evaluated over the whole region.
pub fn agmon_fit(
    grid: &Grid,
    psi: &[Complex64],
    masks: &RegionMasks,
    kind: RegionKind,
    comp: usize,
    kappa: f64,
) -> Result<DecayFit> {
    assert!(comp == 1 || comp == 2, "component index must be 1 or 2");
    let jc = comp - 1;
    let (mask, dist, name) = match kind {
        RegionKind::SDelta => (&masks.s_delta_j[jc], &masks.dist_to_c[jc], "S"),
        RegionKind::OmegaDelta => (&masks.omega_delta_j[jc], &masks.dist_to_gamma[jc], "omega"),
    };
    let delta = masks.delta;
    let region_id = format!("{name}_{{{delta},{comp}}}");
    let count = mask.iter().filter(|&&m| m).count();
    if count < 20 {
        return Err(GlError::EmptyRegion(format!(
            "{region_id} has {count} nodes; need at least 20"
        )));
    }
    let mut fit = fit_log_psi(grid, psi, mask, dist, region_id)?;
    let mut integral = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.node(i, j);
            if !mask[k] || !dist[k].is_finite() {
                continue;
            }
            let wx = if i == 0 || i == grid.nx - 1 { 0.5 } else { 1.0 };
            let wy = if j == 0 || j == grid.ny - 1 { 0.5 } else { 1.0 };
            integral +=
                wx * wy * (delta.sqrt() * kappa * dist[k]).exp() * psi[k].norm_sqr();
        }
    }
    fit.agmon_integral = integral * grid.h * grid.h;
    fit.agmon_scaled = delta.powf(1.5) * fit.agmon_integral;
    Ok(fit)
}

/// Everything needed to set up a steady-state wire run except the swept
/// physics parameter.
#[derive(Debug, Clone, Serialize)]
pub struct RunSetup {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub profile: CurrentProfile,
    pub h_ex: f64,
    pub c: f64,
    pub tol: f64,
    pub t_max: f64,
    pub n_proj: usize,
    pub stepper: Stepper,
}

impl RunSetup {
    /// The standard 1 x 2 wire with uniform contact current J0.
    pub fn wire(j0: f64, nx: usize, ny: usize) -> Self {
        RunSetup {
            lx: 1.0,
            ly: 2.0,
            nx,
            ny,
            profile: CurrentProfile::wire(j0),
            h_ex: 0.0,
            c: 1.0,
            tol: 1e-5,
            t_max: 40.0,
            n_proj: 10,
            stepper: Stepper::Explicit,
        }
    }
}

/// A completed steady-state solve with everything needed for post-processing.
pub struct SteadyRun {
    pub ctx: StepContext,
    pub nf: NormalFields,
    pub state: GLState,
    pub report: ConvergenceReport,
}

/// Solve the normal fields, start from the tapered initial data, and
/// integrate to a steady state.
pub fn steady_run(setup: &RunSetup, kappa: f64) -> Result<SteadyRun> {
    let (domain, grid) = build_wire_domain(setup.lx, setup.ly, setup.nx, setup.ny)?;
    let nf = solve_normal_fields(&domain, &grid, &setup.profile, setup.h_ex)?;
    let params = PhysicsParams::new(kappa, setup.c, setup.h_ex)?;
    let ctx = StepContext::new(&domain, &grid, setup.profile.clone(), params, &nf);
    let mut state = initial_tapered(&ctx, &nf);
    let opts = RunOptions {
        dt: default_dt(&grid, &ctx.params),
        tol: setup.tol,
        t_max: setup.t_max,
        n_proj: setup.n_proj,
        stepper: setup.stepper,
    };
    let report = run_to_steady(&mut state, &ctx, opts)?;
    Ok(SteadyRun { ctx, nf, state, report })
}

/// Which physics knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    Kappa,
    C,
    J0,
}

/// One completed (or failed) run of a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub l2_psi: f64,
    pub sup_psi: f64,
    pub grad_identity: f64,
    pub phi_elliptic: f64,
    pub imag_identity: f64,
    pub converged: bool,
    pub normal_like: bool,
    pub steps: usize,
    pub wall_secs: f64,
    pub error: Option<String>,
}

/// Parameter sweep with the scaling-law bookkeeping attached.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    /// Fitted exponent p in ||psi||_2 ~ param^p over non-degenerate rows
    /// (NaN when fewer than two such rows exist).
    pub exponent: f64,
    pub exponent_r2: f64,
    /// For kappa sweeps: C calibrated at the smallest kappa so that
    /// ||psi||_2 <= C (1 + c^{-1/2})^{1/3} kappa^{-1/6} holds there; true iff
    /// the bound then holds at every larger kappa. Trivially true otherwise.
    pub bound_ok: bool,
    pub bound_c: f64,
    /// ||psi||_2 nonincreasing along the sweep (kappa sweeps).
    pub monotone: bool,
    /// Every row collapsed to the normal state.
    pub degenerate: bool,
}

fn envelope(param: SweepParam, value: f64, c: f64) -> f64 {
    match param {
        SweepParam::Kappa => (1.0 + 1.0 / c.sqrt()).powf(1.0 / 3.0) * value.powf(-1.0 / 6.0),
        SweepParam::C => (1.0 + 1.0 / value.sqrt()).powf(1.0 / 3.0),
        SweepParam::J0 => 1.0,
    }
}

/// Run a sweep over `values` of the chosen parameter, rows in parallel.
/// `kappa` is the fixed Ginzburg-Landau parameter for C and J0 sweeps (and is
/// ignored for kappa sweeps). Failed rows are kept with NaN observables and
/// the error message recorded.
pub fn parameter_sweep(
    setup: &RunSetup,
    kappa: f64,
    param: SweepParam,
    values: &[f64],
) -> Result<SweepResult> {
    let min_points = if param == SweepParam::Kappa { 4 } else { 2 };
    if values.len() < min_points {
        return Err(GlError::Config(format!(
            "sweep needs at least {min_points} values, got {}",
            values.len()
        )));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GlError::Config("sweep values must be strictly increasing".into()));
    }
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| {
            let started = std::time::Instant::now();
            let mut s = setup.clone();
            let k = match param {
                SweepParam::Kappa => v,
                SweepParam::C => {
                    s.c = v;
                    kappa
                }
                SweepParam::J0 => {
                    s.profile = CurrentProfile::wire(v);
                    kappa
                }
            };
            match steady_run(&s, k) {
                Ok(run) => {
                    let ids = steady_identities(&run.state, &run.ctx);
                    let sup = run
                        .state
                        .psi
                        .iter()
                        .fold(0.0f64, |m, z| m.max(z.norm()));
                    SweepRow {
                        param: v,
                        l2_psi: run.report.l2_psi,
                        sup_psi: sup,
                        grad_identity: ids.grad_identity,
                        phi_elliptic: ids.phi_elliptic,
                        imag_identity: ids.imag_identity,
                        converged: run.report.converged,
                        normal_like: run.report.fixed_point == FixedPointKind::NormalLike,
                        steps: run.report.steps,
                        wall_secs: started.elapsed().as_secs_f64(),
                        error: None,
                    }
                }
                Err(e) => SweepRow {
                    param: v,
                    l2_psi: f64::NAN,
                    sup_psi: f64::NAN,
                    grad_identity: f64::NAN,
                    phi_elliptic: f64::NAN,
                    imag_identity: f64::NAN,
                    converged: false,
                    normal_like: false,
                    steps: 0,
                    wall_secs: started.elapsed().as_secs_f64(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let ok_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let degenerate = !ok_rows.is_empty() && ok_rows.iter().all(|r| r.normal_like);
    let area_scale = (setup.lx * setup.ly).sqrt();
    let live: Vec<&&SweepRow> =
        ok_rows.iter().filter(|r| r.l2_psi > 1e-4 * area_scale).collect();
    let (exponent, exponent_r2) = if live.len() >= 2 {
        let xs: Vec<f64> = live.iter().map(|r| r.param.ln()).collect();
        let ys: Vec<f64> = live.iter().map(|r| r.l2_psi.ln()).collect();
        match linear_fit(&xs, &ys) {
            Ok((s, _, r2)) => (s, r2),
            Err(_) => (f64::NAN, f64::NAN),
        }
    } else {
        (f64::NAN, f64::NAN)
    };
    let (bound_ok, bound_c) = match (param, ok_rows.first()) {
        (SweepParam::Kappa, Some(first)) => {
            let c0 = first.l2_psi / envelope(param, first.param, setup.c);
            let ok = ok_rows.iter().all(|r| {
                r.l2_psi <= c0 * envelope(param, r.param, setup.c) * (1.0 + 1e-9)
            });
            (ok, c0)
        }
        (SweepParam::C, Some(first)) => {
            // the envelope decreases in c; calibrate at the first (smallest) c
            let c0 = first.l2_psi / envelope(param, first.param, setup.c);
            let ok = ok_rows.iter().all(|r| {
                r.l2_psi <= c0 * envelope(param, r.param, setup.c) * (1.0 + 1e-9)
            });
            (ok, c0)
        }
        _ => (true, f64::NAN),
    };
    let monotone = ok_rows
        .windows(2)
        .all(|w| w[1].l2_psi <= w[0].l2_psi * (1.0 + 1e-9) + 1e-12);
    Ok(SweepResult {
        param,
        rows,
        exponent,
        exponent_r2,
        bound_ok,
        bound_c,
        monotone,
        degenerate,
    })
}

/// Time series of the masked order-parameter mass m(t) with a drift-gated
/// trailing-window limsup estimate.
#[derive(Debug, Clone, Serialize)]
pub struct DecayTrack {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    /// Max of m(t) over the trailing 20% of samples.
    pub limsup: f64,
    /// Relative spread of m(t) over the trailing window.
    pub drift: f64,
    pub m0: f64,
}

/// Integrate the trajectory to `opts.t_max`, sampling the masked |psi|^2 mass
/// every `sample_every` steps. The trailing 20% of samples must show relative
/// drift below 1%; its max is the limsup estimate.
pub fn time_decay_track(
    state: &mut GLState,
    ctx: &StepContext,
    mask: &[bool],
    opts: RunOptions,
    sample_every: usize,
) -> Result<DecayTrack> {
    assert!(sample_every > 0, "sample_every must be positive");
    let grid = &ctx.grid;
    let mut times = vec![state.t];
    let mut mass = vec![masked_psi_mass(grid, &state.psi, mask)];
    let m0 = mass[0];
    let mut steps = 0usize;
    while state.t < opts.t_max {
        step(state, ctx, opts.dt)?;
        steps += 1;
        if steps % opts.n_proj == 0 {
            crate::tdgl::project_coulomb(state, ctx)?;
        }
        if steps % sample_every == 0 {
            times.push(state.t);
            mass.push(masked_psi_mass(grid, &state.psi, mask));
        }
    }
    let tail_start = mass.len() - (mass.len() / 5).max(2).min(mass.len());
    let tail = &mass[tail_start..];
    let tmax = tail.iter().fold(f64::MIN, |m, &v| m.max(v));
    let tmin = tail.iter().fold(f64::MAX, |m, &v| m.min(v));
    let scale = tmax.abs().max(1e-12 * m0.max(1.0));
    let drift = (tmax - tmin) / scale;
    if drift >= 0.01 {
        return Err(GlError::InsufficientHorizon(format!(
            "trailing-window drift {drift:.3e} >= 1e-2 at t = {:.3}",
            state.t
        )));
    }
    Ok(DecayTrack { times, mass, limsup: tmax.max(0.0), drift, m0 })
}

/// Fixed inputs for the rescaled large-domain family (the unit 1 x 2 wire
/// carrying the eps-scaled current).
#[derive(Debug, Clone, Serialize)]
pub struct LargeSetup {
    /// Unscaled contact current amplitude J0.
    pub j0: f64,
    /// Unscaled applied field.
    pub h_ex: f64,
    pub nx: usize,
    pub ny: usize,
    /// Threshold for the weak-field set D_delta.
    pub delta: f64,
    pub tol: f64,
    pub t_max: f64,
    pub n_proj: usize,
    pub stepper: Stepper,
}

impl Default for LargeSetup {
    fn default() -> Self {
        LargeSetup {
            j0: 4.0,
            h_ex: 0.0,
            nx: 33,
            ny: 65,
            delta: 0.5,
            tol: 1e-5,
            t_max: 40.0,
            n_proj: 10,
            stepper: Stepper::Explicit,
        }
    }
}

/// A solved member of the rescaled large-domain family: the unit-domain
/// steady state at kappa = 1/eps with current and field amplified by
/// eps^{-gamma}, together with the rescaled induced field B_eps = eps curl A,
/// the weak-field set D_delta = {|B_eps| < delta eps^{-gamma}}, and its
/// distances d_{delta,j} to the two insulator sides (d_delta = max_j).
pub struct LargeDomainRun {
    pub eps: f64,
    pub gamma: f64,
    pub delta: f64,
    pub ctx: StepContext,
    pub nf: NormalFields,
    pub state: GLState,
    pub report: ConvergenceReport,
    /// Node field eps * curl A; boundary nodes carry the exact trace.
    pub b_eps: Vec<f64>,
    pub d_delta_mask: Vec<bool>,
    /// Distance from D_delta to insulator side j (infinite if D_delta empty).
    pub d_delta_j: [f64; 2],
    /// max_j d_{delta,j}.
    pub d_delta: f64,
}

/// Solve one member of the large-domain family.
pub fn large_domain_run(eps: f64, gamma: f64, setup: &LargeSetup) -> Result<LargeDomainRun> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(GlError::Config(format!("eps must lie in (0,1), got {eps}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(GlError::Config(format!("gamma must lie in (0,1), got {gamma}")));
    }
    let scale = eps.powf(-gamma);
    let run_setup = RunSetup {
        lx: 1.0,
        ly: 2.0,
        nx: setup.nx,
        ny: setup.ny,
        profile: CurrentProfile::wire(scale * setup.j0),
        h_ex: scale * setup.h_ex,
        c: 1.0,
        tol: setup.tol,
        t_max: setup.t_max,
        n_proj: setup.n_proj,
        stepper: setup.stepper,
    };
    let run = steady_run(&run_setup, 1.0 / eps)?;
    let grid = &run.ctx.grid;
    let mut b_eps = node_curl(grid, &run.state.a);
    for v in b_eps.iter_mut() {
        *v *= eps;
    }
    // the boundary trace of curl A is pinned to kappa B_n; eps kappa = 1
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_boundary(i, j) {
                b_eps[grid.node(i, j)] = run.nf.bn[grid.node(i, j)];
            }
        }
    }
    let threshold = setup.delta * scale;
    let mask: Vec<bool> = b_eps.iter().map(|v| v.abs() < threshold).collect();
    let mut d_delta_j = [f64::INFINITY; 2];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if mask[grid.node(i, j)] {
                let (x, _) = grid.xy(i, j);
                d_delta_j[0] = d_delta_j[0].min(x);
                d_delta_j[1] = d_delta_j[1].min(grid.lx - x);
            }
        }
    }
    let d_delta = d_delta_j[0].max(d_delta_j[1]);
    Ok(LargeDomainRun {
        eps,
        gamma,
        delta: setup.delta,
        ctx: run.ctx,
        nf: run.nf,
        state: run.state,
        report: run.report,
        b_eps,
        d_delta_mask: mask,
        d_delta_j,
        d_delta,
    })
}

/// Comparison solution and its sup-norm defect against B_eps - 1.
#[derive(Debug, Clone, Serialize)]
pub struct WComparison {
    pub w: Vec<f64>,
    /// ||B_eps - 1 - w||_inf over the grid.
    pub defect: f64,
    /// Pass threshold 1/2 + 2h used by the acceptance suite.
    pub gate: f64,
}

/// Solve Laplacian w - |psi|^2 w / eps^2 = 0 with Dirichlet data B_eps - 1
/// and measure how far w strays from the data. The defect depends only on
/// |psi| and B_eps, so it is gauge-invariant by construction.
pub fn w_comparison(run: &LargeDomainRun) -> Result<WComparison> {
    let grid = &run.ctx.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    let n = grid.n_nodes();
    let h2 = grid.h * grid.h;
    let inv_eps2 = 1.0 / (run.eps * run.eps);
    let m: Vec<f64> = run.state.psi.iter().map(|z| h2 * inv_eps2 * z.norm_sqr()).collect();
    let mut x = vec![0.0; n];
    for j in 0..ny {
        for i in 0..nx {
            if grid.is_boundary(i, j) {
                x[grid.node(i, j)] = run.b_eps[grid.node(i, j)] - 1.0;
            }
        }
    }
    let b = vec![0.0; n];
    let apply = |u: &[f64], out: &mut [f64]| {
        for k in 0..n {
            out[k] = 0.0;
        }
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                out[k] =
                    (4.0 + m[k]) * u[k] - u[k - 1] - u[k + 1] - u[k - nx] - u[k + nx];
            }
        }
    };
    let project = |v: &mut [f64]| {
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 || i == nx - 1 || j == 0 || j == ny - 1 {
                    v[j * nx + i] = 0.0;
                }
            }
        }
    };
    let max_iter = 20 * (nx + ny) * (nx + ny);
    cg(apply, &b, &mut x, 1e-10, max_iter.max(200), project)?;
    let mut defect = 0.0f64;
    for k in 0..n {
        defect = defect.max((run.b_eps[k] - 1.0 - x[k]).abs());
    }
    Ok(WComparison { w: x, defect, gate: 0.5 + 2.0 * grid.h })
}

/// Decay fit outside the weak-field set, with the rate the scaling theory
/// predicts for |psi|^2 there.
#[derive(Debug, Clone, Serialize)]
pub struct LargeDecay {
    pub fit: DecayFit,
    /// Predicted exponential rate on |psi|^2 per unit distance:
    /// sqrt(2 delta Theta0 eps^{-gamma}) / (4 eps).
    pub predicted_rate: f64,
    /// Fitted |psi|^2 rate (2 * fit.slope) over the predicted rate.
    pub ratio: f64,
}

/// Boundary nodes of a mask: mask nodes with an off-mask 8-neighbor.
fn mask_boundary_points(grid: &Grid, mask: &[bool]) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !mask[grid.node(i, j)] {
                continue;
            }
            let mut edge = false;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii >= 0
                        && jj >= 0
                        && (ii as usize) < grid.nx
                        && (jj as usize) < grid.ny
                        && !mask[grid.node(ii as usize, jj as usize)]
                    {
                        edge = true;
                    }
                }
            }
            if edge {
                pts.push(grid.xy(i, j));
            }
        }
    }
    pts
}

/// Fit the decay of |psi| against the distance to the weak-field set D_delta
/// over the complement of D_delta, and compare with the predicted rate.
/// `theta0` is the de Gennes half-plane constant.
pub fn agmon_large_domain(run: &LargeDomainRun, theta0: f64) -> Result<LargeDecay> {
    let grid = &run.ctx.grid;
    if run.d_delta_mask.iter().all(|&m| !m) {
        return Err(GlError::EmptyRegion("D_delta is empty".into()));
    }
    let pts = mask_boundary_points(grid, &run.d_delta_mask);
    let dist = brute_distance_field(grid, &pts);
    let outside: Vec<bool> = run.d_delta_mask.iter().map(|&m| !m).collect();
    let mut fit = fit_log_psi(
        grid,
        &run.state.psi,
        &outside,
        &dist,
        format!("complement of D_{}", run.delta),
    )?;
    let predicted =
        (2.0 * run.delta * theta0 * run.eps.powf(-run.gamma)).sqrt() / (4.0 * run.eps);
    // weighted integral over the complement with the predicted rate
    let mut integral = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.node(i, j);
            if !outside[k] {
                continue;
            }
            let wx = if i == 0 || i == grid.nx - 1 { 0.5 } else { 1.0 };
            let wy = if j == 0 || j == grid.ny - 1 { 0.5 } else { 1.0 };
            integral += wx * wy * (predicted * dist[k]).exp() * run.state.psi[k].norm_sqr();
        }
    }
    fit.agmon_integral = integral * grid.h * grid.h;
    fit.agmon_scaled = run.delta.powf(1.5) * fit.agmon_integral;
    let ratio = 2.0 * fit.slope / predicted;
    Ok(LargeDecay { fit, predicted_rate: predicted, ratio })
}

/// The shifted normal potential orthogonal to |psi|^2.
#[derive(Debug, Clone, Serialize)]
pub struct PhiNView {
    /// The constant C with Phi_n = phi_n + C and integral |psi|^2 Phi_n = 0.
    pub shift: f64,
    pub phi_shifted: Vec<f64>,
    /// |integral |psi|^2 Phi_n| after the shift.
    pub defect: f64,
    pub sup_phin: f64,
}

/// Shift phi_n by the |psi|^2-weighted mean so the weighted integral
/// vanishes; the shift magnitude never exceeds the sup of phi_n.
pub fn phi_n_view(grid: &Grid, nf: &NormalFields, psi: &[Complex64]) -> Result<PhiNView> {
    let m2: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    let mass = domain_integral(grid, &m2);
    if mass <= 0.0 {
        return Err(GlError::ZeroOrderParameter);
    }
    let weighted: Vec<f64> =
        (0..grid.n_nodes()).map(|k| nf.phin[k] * m2[k]).collect();
    let shift = -domain_integral(grid, &weighted) / mass;
    let phi_shifted: Vec<f64> = nf.phin.iter().map(|v| v + shift).collect();
    let post: Vec<f64> = (0..grid.n_nodes()).map(|k| phi_shifted[k] * m2[k]).collect();
    let defect = domain_integral(grid, &post).abs();
    let sup_phin = nf.phin.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(PhiNView { shift, phi_shifted, defect, sup_phin })
}

/// Node-wise check of the inclusion S_{delta + kappa^{-alpha}} inside
/// {|curl A| > (1 + delta) kappa} for a converged state.
#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub holds: bool,
    /// Nodes of the shrunken S region that fall outside the strong-field set.
    pub violations: usize,
    pub s_nodes: usize,
    pub strong_nodes: usize,
}

/// Check the strong-field inclusion with the default alpha = 1/2.
pub fn inclusion_check(
    ctx: &StepContext,
    state: &GLState,
    nf: &NormalFields,
    delta: f64,
    alpha: f64,
) -> InclusionReport {
    let grid = &ctx.grid;
    let k = ctx.params.kappa;
    let masks = extract_regions(grid, &nf.bn, delta + k.powf(-alpha));
    let curl = node_curl(grid, &state.a);
    let strong: Vec<bool> = curl.iter().map(|v| v.abs() > (1.0 + delta) * k).collect();
    let mut violations = 0usize;
    let mut s_nodes = 0usize;
    for kk in 0..grid.n_nodes() {
        if masks.s_delta[kk] {
            s_nodes += 1;
            if !strong[kk] {
                violations += 1;
            }
        }
    }
    InclusionReport {
        holds: violations == 0,
        violations,
        s_nodes,
        strong_nodes: strong.iter().filter(|&&b| b).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::fields::solve_bn;
    use crate::tdgl::normal_state;

    fn wire(nx: usize, ny: usize) -> (DomainSpec, Grid) {
        build_wire_domain(1.0, 2.0, nx, ny).unwrap()
    }

    /// Masks for the symmetric wire B_n = 4x - 2 at a given delta.
    fn wire_masks(grid: &Grid, domain: &DomainSpec, delta: f64) -> RegionMasks {
        let bn = solve_bn(domain, grid, &CurrentProfile::wire(4.0), 0.0).unwrap();
        extract_regions(grid, &bn, delta)
    }

    #[test]
    fn planted_exponential_recovers_slope() {
        let (dom, grid) = wire(65, 129);
        let masks = wire_masks(&grid, &dom, 0.25);
        // psi = exp(-3 d(x, C_{delta,2})) everywhere
        let psi: Vec<Complex64> = (0..grid.n_nodes())
            .map(|k| Complex64::new((-3.0 * masks.dist_to_c[1][k]).exp(), 0.0))
            .collect();
        let fit = agmon_fit(&grid, &psi, &masks, RegionKind::SDelta, 2, 8.0).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-6, "slope {}", fit.slope);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!(fit.n_points >= 20);
        assert!(fit.agmon_integral.is_finite() && fit.agmon_integral > 0.0);
    }

    #[test]
    fn constant_psi_fits_zero_slope() {
        let (dom, grid) = wire(65, 129);
        let masks = wire_masks(&grid, &dom, 0.25);
        let psi = vec![Complex64::new(0.5, 0.0); grid.n_nodes()];
        let fit = agmon_fit(&grid, &psi, &masks, RegionKind::SDelta, 2, 8.0).unwrap();
        assert!(fit.slope.abs() < 1e-9);
    }

    #[test]
    fn empty_region_is_reported() {
        let (dom, grid) = wire(33, 65);
        // delta = 5: S region requires |B_n| >= 6, impossible for J0 = 4
        let masks = wire_masks(&grid, &dom, 5.0);
        let psi = vec![Complex64::new(1.0, 0.0); grid.n_nodes()];
        match agmon_fit(&grid, &psi, &masks, RegionKind::SDelta, 2, 8.0) {
            Err(GlError::EmptyRegion(_)) => {}
            other => panic!("expected EmptyRegion, got {other:?}"),
        }
        // omega_{delta,2} is empty at delta = 0.25 for this wire
        let masks = wire_masks(&grid, &dom, 0.25);
        match agmon_fit(&grid, &psi, &masks, RegionKind::OmegaDelta, 2, 8.0) {
            Err(GlError::EmptyRegion(_)) => {}
            other => panic!("expected EmptyRegion, got {other:?}"),
        }
    }

    #[test]
    fn phi_n_view_constant_psi() {
        let setup = RunSetup::wire(4.0, 17, 33);
        let (dom, grid) = wire(17, 33);
        let nf = solve_normal_fields(&dom, &grid, &setup.profile, 0.0).unwrap();
        let psi = vec![Complex64::new(1.0, 0.0); grid.n_nodes()];
        let view = phi_n_view(&grid, &nf, &psi).unwrap();
        // phi_n has zero domain mean, so the constant weight gives C ~ 0
        assert!(view.shift.abs() < 1e-9, "shift {}", view.shift);
        assert!(view.defect < 1e-12 * view.sup_phin.max(1.0));
        assert!(view.shift.abs() <= view.sup_phin + 1e-12);
        let zero = vec![Complex64::default(); grid.n_nodes()];
        match phi_n_view(&grid, &nf, &zero) {
            Err(GlError::ZeroOrderParameter) => {}
            other => panic!("expected ZeroOrderParameter, got {other:?}"),
        }
    }

    #[test]
    fn normal_state_mass_track_is_zero() {
        let setup = RunSetup::wire(4.0, 17, 33);
        let (dom, grid) = wire(17, 33);
        let nf = solve_normal_fields(&dom, &grid, &setup.profile, 0.0).unwrap();
        let params = PhysicsParams::new(4.0, 1.0, 0.0).unwrap();
        let ctx = StepContext::new(&dom, &grid, setup.profile.clone(), params, &nf);
        let mut state = normal_state(&ctx, &nf);
        let mask = vec![true; grid.n_nodes()];
        let opts = RunOptions {
            dt: default_dt(&grid, &ctx.params),
            tol: 1e-6,
            t_max: 0.5,
            n_proj: 10,
            stepper: Stepper::Explicit,
        };
        let track = time_decay_track(&mut state, &ctx, &mask, opts, 50).unwrap();
        assert_eq!(track.m0, 0.0);
        assert_eq!(track.limsup, 0.0);
        assert!(track.drift < 1e-2);
    }

    #[test]
    fn tapered_start_mass_decays_to_plateau() {
        let setup = RunSetup::wire(4.0, 17, 33);
        let (dom, grid) = wire(17, 33);
        let nf = solve_normal_fields(&dom, &grid, &setup.profile, 0.0).unwrap();
        let params = PhysicsParams::new(8.0, 1.0, 2.0).unwrap();
        let ctx = StepContext::new(&dom, &grid, setup.profile.clone(), params, &nf);
        let mut state = initial_tapered(&ctx, &nf);
        let masks = wire_masks(&grid, &dom, 0.25);
        let opts = RunOptions {
            dt: default_dt(&grid, &ctx.params),
            tol: 1e-6,
            t_max: 12.0,
            n_proj: 10,
            stepper: Stepper::Explicit,
        };
        let track =
            time_decay_track(&mut state, &ctx, &masks.s_delta_j[1], opts, 200).unwrap();
        assert!(track.m0 > 0.0);
        assert!(track.limsup <= track.m0 + 1e-12, "plateau above m(0)");
        assert!(track.drift < 1e-2);
    }

    #[test]
    fn degenerate_sweep_is_flagged() {
        // J0 = 20 collapses every run to the normal state
        let mut setup = RunSetup::wire(20.0, 17, 33);
        setup.t_max = 15.0;
        let vals = [4.0, 6.0, 8.0, 12.0];
        let sweep = parameter_sweep(&setup, 4.0, SweepParam::Kappa, &vals).unwrap();
        assert!(sweep.degenerate);
        assert!(sweep.bound_ok, "zero rows satisfy any calibrated bound");
        assert!(sweep.monotone);
        assert!(sweep.exponent.is_nan());
        assert_eq!(sweep.rows.len(), 4);
        for (row, v) in sweep.rows.iter().zip(vals) {
            assert_eq!(row.param, v);
            assert!(row.error.is_none());
            assert!(row.normal_like);
        }
    }

    #[test]
    fn sweep_preconditions() {
        let setup = RunSetup::wire(4.0, 17, 33);
        assert!(parameter_sweep(&setup, 4.0, SweepParam::Kappa, &[4.0, 8.0]).is_err());
        assert!(
            parameter_sweep(&setup, 4.0, SweepParam::Kappa, &[4.0, 8.0, 8.0, 16.0]).is_err()
        );
    }

    #[test]
    fn large_domain_strip_and_comparison() {
        // eps = 1/8, gamma = 1/2: B_eps tracks eps^{-1/2}(4x - 2) so
        // D_{1/2} is a strip around x = 1/2 at distance ~ (1/2 - delta/4)
        let setup = LargeSetup { nx: 17, ny: 33, t_max: 20.0, ..LargeSetup::default() };
        let run = large_domain_run(0.125, 0.5, &setup).unwrap();
        assert!(run.d_delta_mask.iter().any(|&m| m), "strip should be nonempty");
        let expected = 0.5 - setup.delta / 4.0;
        for d in run.d_delta_j {
            assert!((d - expected).abs() < 0.1, "d = {d}, expected ~{expected}");
        }
        assert!((run.d_delta - expected).abs() < 0.1);
        // trace consistency on the boundary
        let grid = &run.ctx.grid;
        for i in 0..grid.nx {
            let k = grid.node(i, 0);
            assert_eq!(run.b_eps[k], run.nf.bn[k]);
        }
        let cmp = w_comparison(&run).unwrap();
        assert!(cmp.defect <= cmp.gate, "defect {} > gate {}", cmp.defect, cmp.gate);
        let decay = agmon_large_domain(&run, 0.59).unwrap();
        assert!(decay.fit.slope > 0.0, "no decay away from the strip");
        assert!(decay.predicted_rate > 0.0);
    }

    #[test]
    fn large_domain_parameter_validation() {
        let setup = LargeSetup::default();
        assert!(large_domain_run(1.5, 0.5, &setup).is_err());
        assert!(large_domain_run(0.125, 1.0, &setup).is_err());
    }

    #[test]
    fn w_comparison_zero_psi_harmonic_field() {
        // with psi = 0 the comparison problem is the harmonic extension of
        // B_eps - 1; the normal-state B is itself (discretely) harmonic, so
        // the defect vanishes to solver tolerance
        let setup = LargeSetup { nx: 17, ny: 33, ..LargeSetup::default() };
        let mut run = large_domain_run(0.125, 0.5, &setup).unwrap();
        for z in run.state.psi.iter_mut() {
            *z = Complex64::default();
        }
        // replace B_eps by the exact harmonic normal field
        run.b_eps = run.nf.bn.clone();
        let cmp = w_comparison(&run).unwrap();
        assert!(cmp.defect < 1e-6, "defect {}", cmp.defect);
    }

    #[test]
    fn inclusion_holds_for_normal_state() {
        let (dom, grid) = wire(33, 65);
        let profile = CurrentProfile::wire(4.0);
        let nf = solve_normal_fields(&dom, &grid, &profile, 0.0).unwrap();
        let params = PhysicsParams::new(16.0, 1.0, 0.0).unwrap();
        let ctx = StepContext::new(&dom, &grid, profile, params, &nf);
        let state = normal_state(&ctx, &nf);
        let rep = inclusion_check(&ctx, &state, &nf, 0.25, 0.5);
        assert!(rep.s_nodes > 0);
        assert!(rep.holds, "{} violations of {} nodes", rep.violations, rep.s_nodes);
    }

    #[test]
    fn node_curl_matches_uniform_field() {
        let (_, grid) = wire(17, 33);
        // A = (-y/2, x/2) has curl 1 everywhere
        let mut a = LinkField::zeros(&grid);
        for j in 0..grid.ny {
            for i in 0..grid.nx - 1 {
                let (_, y) = grid.xy(i, j);
                a.ax[grid.xlink(i, j)] = -0.5 * y;
            }
        }
        for j in 0..grid.ny - 1 {
            for i in 0..grid.nx {
                let (x, _) = grid.xy(i, j);
                a.ay[grid.ylink(i, j)] = 0.5 * x;
            }
        }
        for v in node_curl(&grid, &a) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}

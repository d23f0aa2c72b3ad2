//! Gauge-invariant time integration of the TDGL system for a wire with
//! injected current:
//!
//!   psi_t = Lap_{kA} psi - i k phi psi + k^2 (1 - |psi|^2) psi
//!   A_t   = -grad phi - c curl^2 A + c Js,   Js = (1/k) Im(conj(psi) D_{kA} psi)
//!
//! with psi = 0 on the contacts, magnetic Neumann on the insulator sides,
//! flux data dphi/dnu = -c k J on the contacts, and the boundary plaquette
//! field pinned to k B_n. The electric potential has no time derivative; it
//! is eliminated each step by a compatible Neumann Poisson solve. The order
//! parameter update splits off the i k phi psi term as an exact phase
//! rotation so the discrete maximum principle survives at machine precision.

use crate::domain::{CurrentProfile, DomainSpec, Grid};
use crate::error::{GlError, Result};
use crate::fields::{domain_integral, neumann_current_load, LinkField, NormalFields};
use crate::linalg::{solve_neumann_lattice, solve_neumann_weighted};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const PHI_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub kappa: f64,
    /// c = kappa^2 / sigma with sigma the normal conductivity.
    pub c: f64,
    pub h_ex: f64,
}

impl PhysicsParams {
    pub fn new(kappa: f64, c: f64, h_ex: f64) -> Result<Self> {
        if !(kappa >= 1.0) {
            return Err(GlError::Config(format!("kappa must be >= 1, got {kappa}")));
        }
        if !(c > 0.0) {
            return Err(GlError::Config(format!("c must be positive, got {c}")));
        }
        Ok(PhysicsParams { kappa, c, h_ex })
    }
}

/// Dynamical state: order parameter at nodes, magnetic potential on links,
/// electric potential at nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GLState {
    pub psi: Vec<Complex64>,
    pub a: LinkField,
    pub phi: Vec<f64>,
    pub t: f64,
}

/// Immutable per-run context: geometry, current, physics, the imposed
/// boundary trace of the magnetic field, and the precomputed flux load for
/// the electric potential solve.
pub struct StepContext {
    pub domain: DomainSpec,
    pub grid: Grid,
    pub profile: CurrentProfile,
    pub params: PhysicsParams,
    /// kappa * B_n at x-link midpoints on the bottom and top contacts.
    bn_bottom: Vec<f64>,
    bn_top: Vec<f64>,
    /// kappa * B_n at y-link midpoints on the left and right insulators.
    bn_left: Vec<f64>,
    bn_right: Vec<f64>,
    /// Boundary mean of the imposed trace, for the circulation check.
    trace_mean: f64,
    /// Weak-form load for the phi solve: the -c k J flux datum.
    phi_load: Vec<f64>,
}

/// Fourth-order midpoint values of a 1D node sequence (cubic interpolation,
/// one-sided at the ends). Needed because the one-sided normal-derivative
/// stencil divides the trace by h: a second-order midpoint average would
/// degrade the whole boundary treatment to first order.
fn midpoints4(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 4);
    let mut m = vec![0.0; n - 1];
    m[0] = (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0;
    for i in 1..n - 2 {
        m[i] = (9.0 * (f[i] + f[i + 1]) - (f[i - 1] + f[i + 2])) / 16.0;
    }
    m[n - 2] = (5.0 * f[n - 1] + 15.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]) / 16.0;
    m
}

impl StepContext {
    pub fn new(
        domain: &DomainSpec,
        grid: &Grid,
        profile: CurrentProfile,
        params: PhysicsParams,
        nf: &NormalFields,
    ) -> Self {
        let k = params.kappa;
        let row = |j: usize| -> Vec<f64> {
            (0..grid.nx).map(|i| k * nf.bn[grid.node(i, j)]).collect()
        };
        let col = |i: usize| -> Vec<f64> {
            (0..grid.ny).map(|j| k * nf.bn[grid.node(i, j)]).collect()
        };
        let bn_bottom = midpoints4(&row(0));
        let bn_top = midpoints4(&row(grid.ny - 1));
        let bn_left = midpoints4(&col(0));
        let bn_right = midpoints4(&col(grid.nx - 1));
        let mut trace_sum = 0.0;
        let mut trace_cnt = 0usize;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if grid.is_boundary(i, j) {
                    trace_sum += k * nf.bn[grid.node(i, j)];
                    trace_cnt += 1;
                }
            }
        }
        let phi_load = neumann_current_load(domain, grid, &profile, params.c * k);
        StepContext {
            domain: domain.clone(),
            grid: grid.clone(),
            profile,
            params,
            bn_bottom,
            bn_top,
            bn_left,
            bn_right,
            trace_mean: trace_sum / trace_cnt as f64,
            phi_load,
        }
    }
}

/// Explicit stability limit with margin: the psi diffusion needs dt <= h^2/4,
/// the A diffusion (coefficient c) needs dt <= h^2/(4c), and the reaction
/// scale needs dt <= 1/kappa^2. The 0.2 margin also guarantees the discrete
/// maximum principle (dt (4/h^2 + 2 kappa^2) <= 0.6 < 1).
pub fn default_dt(grid: &Grid, params: &PhysicsParams) -> f64 {
    let h2 = grid.h * grid.h;
    0.2 * (h2 / 4.0).min(h2 / (4.0 * params.c)).min(1.0 / (params.kappa * params.kappa))
}

/// The current-carrying normal state (psi = 0, A = k A_n, phi = c k phi_n).
pub fn normal_state(ctx: &StepContext, nf: &NormalFields) -> GLState {
    let grid = &ctx.grid;
    let k = ctx.params.kappa;
    let ck = ctx.params.c * k;
    let mut a = nf.an.clone();
    for v in a.ax.iter_mut().chain(a.ay.iter_mut()) {
        *v *= k;
    }
    GLState {
        psi: vec![Complex64::default(); grid.n_nodes()],
        a,
        phi: nf.phin.iter().map(|v| ck * v).collect(),
        t: 0.0,
    }
}

/// Default initial data: |psi| = 1 tapered to zero at the contacts over two
/// cells, A = k A_n, phi = c k phi_n.
pub fn initial_tapered(ctx: &StepContext, nf: &NormalFields) -> GLState {
    let mut s = normal_state(ctx, nf);
    let grid = &ctx.grid;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let d = j.min(grid.ny - 1 - j) as f64 / 2.0;
            s.psi[grid.node(i, j)] = Complex64::new(d.min(1.0), 0.0);
        }
    }
    s
}

/// Seeded random initial order parameter with |psi| <= 1, zero on contacts.
pub fn initial_random(ctx: &StepContext, nf: &NormalFields, seed: u64) -> GLState {
    let mut s = normal_state(ctx, nf);
    let grid = &ctx.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 1..grid.ny - 1 {
        for i in 0..grid.nx {
            let r = rng.gen::<f64>();
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            s.psi[grid.node(i, j)] = Complex64::from_polar(r, th);
        }
    }
    s
}

/// Gauge-invariant supercurrent on links:
/// Js_ab = (1/(k h)) Im(conj(psi_a) U_ab psi_b), U_ab = exp(-i k h A_ab).
pub fn supercurrent(ctx: &StepContext, state: &GLState) -> LinkField {
    let grid = &ctx.grid;
    let k = ctx.params.kappa;
    let h = grid.h;
    let mut js = LinkField::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx - 1 {
            let l = grid.xlink(i, j);
            let u = Complex64::from_polar(1.0, -k * h * state.a.ax[l]);
            js.ax[l] = (state.psi[grid.node(i, j)].conj() * u * state.psi[grid.node(i + 1, j)])
                .im
                / (k * h);
        }
    }
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx {
            let l = grid.ylink(i, j);
            let u = Complex64::from_polar(1.0, -k * h * state.a.ay[l]);
            js.ay[l] = (state.psi[grid.node(i, j)].conj() * u * state.psi[grid.node(i, j + 1)])
                .im
                / (k * h);
        }
    }
    js
}

/// Eliminate the electric potential: solve the compatible Neumann problem
/// Lap phi = (c/k) div Im(conj(psi) D psi) with dphi/dnu = -c k J on the
/// contacts, zero mean. Warm-started from the previous phi.
pub fn solve_phi(ctx: &StepContext, state: &mut GLState, js: &LinkField) -> Result<()> {
    let grid = &ctx.grid;
    let h = grid.h;
    let c = ctx.params.c;
    let mut rhs = ctx.phi_load.clone();
    // weak divergence of c*Js with the same link weights as the stiffness:
    // each link moves w*c*h*Js from its start to its end
    for j in 0..grid.ny {
        let wx = wx_row(grid, j);
        for i in 0..grid.nx - 1 {
            let f = wx * c * h * js.ax[grid.xlink(i, j)];
            rhs[grid.node(i, j)] -= f;
            rhs[grid.node(i + 1, j)] += f;
        }
    }
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx {
            let f = wy_col(grid, i) * c * h * js.ay[grid.ylink(i, j)];
            rhs[grid.node(i, j)] -= f;
            rhs[grid.node(i, j + 1)] += f;
        }
    }
    solve_neumann_weighted(grid.nx, grid.ny, &rhs, &mut state.phi, PHI_TOL)?;
    let mean = crate::fields::domain_mean(grid, &state.phi);
    for v in state.phi.iter_mut() {
        *v -= mean;
    }
    Ok(())
}

/// curl^2 A on every link, with the boundary plaquette field pinned to the
/// imposed trace k B_n through second-order one-sided normal derivatives.
fn curl_curl(ctx: &StepContext, a: &LinkField) -> LinkField {
    let grid = &ctx.grid;
    let h = grid.h;
    let (px, py) = (grid.nx - 1, grid.ny - 1);
    let mut bp = vec![0.0; grid.n_plaq()];
    for j in 0..py {
        for i in 0..px {
            bp[grid.plaq(i, j)] = a.curl(grid, i, j);
        }
    }
    let mut out = LinkField::zeros(grid);
    // x-links carry dB/dy
    for j in 0..grid.ny {
        for i in 0..px {
            out.ax[grid.xlink(i, j)] = if j == 0 {
                (-8.0 * ctx.bn_bottom[i] + 9.0 * bp[grid.plaq(i, 0)] - bp[grid.plaq(i, 1)])
                    / (3.0 * h)
            } else if j == grid.ny - 1 {
                (8.0 * ctx.bn_top[i] - 9.0 * bp[grid.plaq(i, py - 1)] + bp[grid.plaq(i, py - 2)])
                    / (3.0 * h)
            } else {
                (bp[grid.plaq(i, j)] - bp[grid.plaq(i, j - 1)]) / h
            };
        }
    }
    // y-links carry -dB/dx
    for j in 0..py {
        for i in 0..grid.nx {
            out.ay[grid.ylink(i, j)] = if i == 0 {
                -(-8.0 * ctx.bn_left[j] + 9.0 * bp[grid.plaq(0, j)] - bp[grid.plaq(1, j)])
                    / (3.0 * h)
            } else if i == grid.nx - 1 {
                -(8.0 * ctx.bn_right[j] - 9.0 * bp[grid.plaq(px - 1, j)]
                    + bp[grid.plaq(px - 2, j)])
                    / (3.0 * h)
            } else {
                -(bp[grid.plaq(i, j)] - bp[grid.plaq(i - 1, j)]) / h
            };
        }
    }
    out
}

/// Weight of an x-link in row j / a y-link in column i: boundary-parallel
/// links carry 1/2 (half-width dual strip), everything else 1.
#[inline]
fn wx_row(grid: &Grid, j: usize) -> f64 {
    if j == 0 || j == grid.ny - 1 {
        0.5
    } else {
        1.0
    }
}

#[inline]
fn wy_col(grid: &Grid, i: usize) -> f64 {
    if i == 0 || i == grid.nx - 1 {
        0.5
    } else {
        1.0
    }
}

/// Trapezoid control-volume fraction of node (i, j).
#[inline]
fn node_vol(grid: &Grid, i: usize, j: usize) -> f64 {
    let wi = if i == 0 || i == grid.nx - 1 { 0.5 } else { 1.0 };
    let wj = if j == 0 || j == grid.ny - 1 { 0.5 } else { 1.0 };
    wi * wj
}

/// Covariant 5-point Laplacian of psi at node (i, j): Dirichlet through the
/// stored zeros on contact nodes, magnetic Neumann on the insulator sides.
/// Links and the control volume carry trapezoid weights, which on the
/// insulator columns reproduces the second-order mirror-ghost scheme.
#[inline]
fn covariant_lap(
    grid: &Grid,
    psi: &[Complex64],
    a: &LinkField,
    k: f64,
    i: usize,
    j: usize,
) -> Complex64 {
    let h = grid.h;
    let mut acc = Complex64::default();
    let wx = wx_row(grid, j);
    let wy = wy_col(grid, i);
    if i + 1 < grid.nx {
        let u = Complex64::from_polar(1.0, -k * h * a.ax[grid.xlink(i, j)]);
        acc += wx * (u * psi[grid.node(i + 1, j)] - psi[grid.node(i, j)]);
    }
    if i > 0 {
        let u = Complex64::from_polar(1.0, k * h * a.ax[grid.xlink(i - 1, j)]);
        acc += wx * (u * psi[grid.node(i - 1, j)] - psi[grid.node(i, j)]);
    }
    if j + 1 < grid.ny {
        let u = Complex64::from_polar(1.0, -k * h * a.ay[grid.ylink(i, j)]);
        acc += wy * (u * psi[grid.node(i, j + 1)] - psi[grid.node(i, j)]);
    }
    if j > 0 {
        let u = Complex64::from_polar(1.0, k * h * a.ay[grid.ylink(i, j - 1)]);
        acc += wy * (u * psi[grid.node(i, j - 1)] - psi[grid.node(i, j)]);
    }
    acc / (node_vol(grid, i, j) * h * h)
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub dt_used: f64,
    pub sup_psi: f64,
    pub l2_psi: f64,
    pub max_dpsi: f64,
    pub max_da: f64,
}

/// One explicit step. The caller owns the projection cadence.
pub fn step(state: &mut GLState, ctx: &StepContext, dt: f64) -> Result<StepReport> {
    step_with(state, ctx, dt, Stepper::Explicit)
}

/// Time-stepping scheme for the order-parameter linear part. The magnetic
/// potential update and the reaction term are explicit in both variants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stepper {
    /// Fully explicit; preserves the discrete maximum principle.
    #[default]
    Explicit,
    /// Backward-Euler covariant diffusion for psi (CG solve per step); lifts
    /// the psi diffusion restriction dt <= h^2/4.
    SemiImplicit,
}

/// Stability limit for the semi-implicit stepper: only the explicit A
/// diffusion and the reaction scale remain.
pub fn default_dt_semi_implicit(grid: &Grid, params: &PhysicsParams) -> f64 {
    let h2 = grid.h * grid.h;
    0.2 * (h2 / (4.0 * params.c)).min(1.0 / (params.kappa * params.kappa))
}

/// Backward-Euler solve of (I - dt Lap_{kA}) psi_new = rhs with zero
/// Dirichlet contacts, symmetrized by the trapezoid control volumes.
fn implicit_diffusion(
    grid: &Grid,
    a: &LinkField,
    k: f64,
    dt: f64,
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let h2 = grid.h * grid.h;
    let n = grid.n_nodes();
    let mut b = vec![Complex64::default(); n];
    for j in 1..grid.ny - 1 {
        for i in 0..grid.nx {
            let kk = grid.node(i, j);
            b[kk] = node_vol(grid, i, j) * h2 * rhs[kk];
        }
    }
    let apply = |u: &[Complex64], out: &mut [Complex64]| {
        for v in out.iter_mut() {
            *v = Complex64::default();
        }
        for j in 1..grid.ny - 1 {
            for i in 0..grid.nx {
                let kk = grid.node(i, j);
                let vol = node_vol(grid, i, j) * h2;
                out[kk] = vol * (u[kk] - dt * covariant_lap(grid, u, a, k, i, j));
            }
        }
    };
    let mut x = rhs.to_vec();
    for j in [0, grid.ny - 1] {
        for i in 0..grid.nx {
            x[grid.node(i, j)] = Complex64::default();
        }
    }
    let max_iter = 20 * (grid.nx + grid.ny) * (grid.nx + grid.ny);
    crate::linalg::zcg(apply, &b, &mut x, 1e-11, max_iter.max(200))?;
    Ok(x)
}

/// One step with the chosen stepper. The caller owns the projection cadence.
pub fn step_with(
    state: &mut GLState,
    ctx: &StepContext,
    dt: f64,
    stepper: Stepper,
) -> Result<StepReport> {
    let grid = &ctx.grid;
    let (k, c) = (ctx.params.kappa, ctx.params.c);
    let h = grid.h;

    let js = supercurrent(ctx, state);
    solve_phi(ctx, state, &js)?;

    // order parameter: diffusion + explicit reaction, then exact rotation
    let star = match stepper {
        Stepper::Explicit => {
            let mut out = state.psi.clone();
            for j in 1..grid.ny - 1 {
                for i in 0..grid.nx {
                    let n = grid.node(i, j);
                    let p = state.psi[n];
                    let lap = covariant_lap(grid, &state.psi, &state.a, k, i, j);
                    out[n] = p + dt * (lap + k * k * (1.0 - p.norm_sqr()) * p);
                }
            }
            out
        }
        Stepper::SemiImplicit => {
            let mut rhs = state.psi.clone();
            for j in 1..grid.ny - 1 {
                for i in 0..grid.nx {
                    let n = grid.node(i, j);
                    let p = state.psi[n];
                    rhs[n] = p + dt * k * k * (1.0 - p.norm_sqr()) * p;
                }
            }
            implicit_diffusion(grid, &state.a, k, dt, &rhs)?
        }
    };
    let mut max_dpsi = 0.0f64;
    let mut sup = 0.0f64;
    let mut new_psi = state.psi.clone();
    for j in 1..grid.ny - 1 {
        for i in 0..grid.nx {
            let n = grid.node(i, j);
            let rotated = Complex64::from_polar(1.0, -dt * k * state.phi[n]) * star[n];
            max_dpsi = max_dpsi.max((rotated - state.psi[n]).norm());
            sup = sup.max(rotated.norm());
            new_psi[n] = rotated;
        }
    }
    state.psi = new_psi;

    // magnetic potential
    let cc = curl_curl(ctx, &state.a);
    let mut max_da = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx - 1 {
            let l = grid.xlink(i, j);
            let gphi = (state.phi[grid.node(i + 1, j)] - state.phi[grid.node(i, j)]) / h;
            let da = dt * (-gphi - c * cc.ax[l] + c * js.ax[l]);
            max_da = max_da.max(da.abs());
            state.a.ax[l] += da;
        }
    }
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx {
            let l = grid.ylink(i, j);
            let gphi = (state.phi[grid.node(i, j + 1)] - state.phi[grid.node(i, j)]) / h;
            let da = dt * (-gphi - c * cc.ay[l] + c * js.ay[l]);
            max_da = max_da.max(da.abs());
            state.a.ay[l] += da;
        }
    }
    state.t += dt;

    if !sup.is_finite() || !max_da.is_finite() || sup > 2.0 {
        return Err(GlError::Blowup {
            step: 0,
            what: format!("sup|psi| = {sup}, max |dA| = {max_da} at t = {}", state.t),
        });
    }
    let l2 = psi_l2(ctx, state);
    Ok(StepReport { dt_used: dt, sup_psi: sup, l2_psi: l2, max_dpsi, max_da })
}

/// Bilinear sample of a lattice field with spacing `h`, origin offset
/// (`ox`, `oy`), and dimensions `mx` x `my` (row-major).
fn bilerp(vals: &[f64], mx: usize, my: usize, h: f64, ox: f64, oy: f64, x: f64, y: f64) -> f64 {
    // cells are clamped but the fractional part is not, so points up to half
    // a cell outside the sample lattice are linearly extrapolated
    let u = (x - ox) / h;
    let v = (y - oy) / h;
    let i0 = (u.floor().max(0.0) as usize).min(mx.saturating_sub(2));
    let j0 = (v.floor().max(0.0) as usize).min(my.saturating_sub(2));
    let (fu, fv) = (u - i0 as f64, v - j0 as f64);
    let at = |i: usize, j: usize| vals[j * mx + i];
    let i1 = (i0 + 1).min(mx - 1);
    let j1 = (j0 + 1).min(my - 1);
    (1.0 - fu) * (1.0 - fv) * at(i0, j0)
        + fu * (1.0 - fv) * at(i1, j0)
        + (1.0 - fu) * fv * at(i0, j1)
        + fu * fv * at(i1, j1)
}

/// Transfer a state to a finer grid of the same physical domain by bilinear
/// interpolation of psi, phi, and the link potentials (sampled at link
/// midpoints). The interpolation error is high-frequency and heals in a short
/// continuation run; contacts keep psi = 0 exactly.
pub fn prolong_state(coarse: &Grid, state: &GLState, fine: &Grid) -> GLState {
    assert!(
        (coarse.lx - fine.lx).abs() < 1e-12 && (coarse.ly - fine.ly).abs() < 1e-12,
        "prolongation requires matching physical domains"
    );
    let hc = coarse.h;
    let re: Vec<f64> = state.psi.iter().map(|z| z.re).collect();
    let im: Vec<f64> = state.psi.iter().map(|z| z.im).collect();
    let mut psi = vec![Complex64::default(); fine.n_nodes()];
    let mut phi = vec![0.0; fine.n_nodes()];
    for j in 0..fine.ny {
        for i in 0..fine.nx {
            let (x, y) = fine.xy(i, j);
            let k = fine.node(i, j);
            if j == 0 || j == fine.ny - 1 {
                psi[k] = Complex64::default();
            } else {
                psi[k] = Complex64::new(
                    bilerp(&re, coarse.nx, coarse.ny, hc, 0.0, 0.0, x, y),
                    bilerp(&im, coarse.nx, coarse.ny, hc, 0.0, 0.0, x, y),
                );
            }
            phi[k] = bilerp(&state.phi, coarse.nx, coarse.ny, hc, 0.0, 0.0, x, y);
        }
    }
    let mut a = LinkField::zeros(fine);
    for j in 0..fine.ny {
        for i in 0..fine.nx - 1 {
            let (x, y) = fine.xy(i, j);
            a.ax[fine.xlink(i, j)] = bilerp(
                &state.a.ax,
                coarse.nx - 1,
                coarse.ny,
                hc,
                0.5 * hc,
                0.0,
                x + 0.5 * fine.h,
                y,
            );
        }
    }
    for j in 0..fine.ny - 1 {
        for i in 0..fine.nx {
            let (x, y) = fine.xy(i, j);
            a.ay[fine.ylink(i, j)] = bilerp(
                &state.a.ay,
                coarse.nx,
                coarse.ny - 1,
                hc,
                0.0,
                0.5 * hc,
                x,
                y + 0.5 * fine.h,
            );
        }
    }
    GLState { psi, a, phi, t: state.t }
}

/// L2 norm of psi with trapezoid quadrature.
pub fn psi_l2(ctx: &StepContext, state: &GLState) -> f64 {
    let dens: Vec<f64> = state.psi.iter().map(|p| p.norm_sqr()).collect();
    domain_integral(&ctx.grid, &dens).max(0.0).sqrt()
}

/// Static gauge transformation: A += grad omega, psi *= exp(i k omega),
/// phi -= omega_t (default 0). Exactly covariant for the link discretization.
pub fn gauge_transform(
    state: &mut GLState,
    ctx: &StepContext,
    omega: &[f64],
    omega_t: Option<&[f64]>,
) {
    let grid = &ctx.grid;
    let k = ctx.params.kappa;
    let h = grid.h;
    for j in 0..grid.ny {
        for i in 0..grid.nx - 1 {
            state.a.ax[grid.xlink(i, j)] +=
                (omega[grid.node(i + 1, j)] - omega[grid.node(i, j)]) / h;
        }
    }
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx {
            state.a.ay[grid.ylink(i, j)] +=
                (omega[grid.node(i, j + 1)] - omega[grid.node(i, j)]) / h;
        }
    }
    for (p, w) in state.psi.iter_mut().zip(omega) {
        *p *= Complex64::from_polar(1.0, k * w);
    }
    if let Some(wt) = omega_t {
        for (f, w) in state.phi.iter_mut().zip(wt) {
            *f -= w;
        }
    }
}

/// Helmholtz projection onto the Coulomb gauge: solve the Neumann problem
/// for omega with div(A - grad omega) = 0 under the ghost-zero (A.nu = 0)
/// convention, then gauge-transform by -omega. Returns the max |div A|
/// before projection.
pub fn project_coulomb(state: &mut GLState, ctx: &StepContext) -> Result<f64> {
    let grid = &ctx.grid;
    let h = grid.h;
    let mut rhs = vec![0.0; grid.n_nodes()];
    let mut max_div = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let d = state.a.div(grid, i, j);
            max_div = max_div.max(d.abs());
            rhs[grid.node(i, j)] = h * h * d;
        }
    }
    let mut omega = vec![0.0; grid.n_nodes()];
    solve_neumann_lattice(grid.nx, grid.ny, &rhs, &mut omega, 1e-13)?;
    gauge_transform(state, ctx, &omega, None);
    Ok(max_div)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// L2 norm of the steady psi-equation residual on non-contact nodes.
    pub psi_eq: f64,
    /// L2 norm of the steady A-equation residual over all links.
    pub a_eq: f64,
    /// L2 norm of the contact flux defect dphi/dnu + c k J (one-sided).
    pub phi_flux: f64,
    /// |boundary mean of the imposed trace - k h_ex|.
    pub circulation: f64,
    /// max |div A| under the ghost-zero convention.
    pub div_a: f64,
}

/// Residual norms of the steady system at the current state.
pub fn residual(state: &GLState, ctx: &StepContext) -> ResidualReport {
    let grid = &ctx.grid;
    let (k, c) = (ctx.params.kappa, ctx.params.c);
    let h = grid.h;
    let h2 = h * h;

    let mut psi_eq = 0.0;
    for j in 1..grid.ny - 1 {
        for i in 0..grid.nx {
            let n = grid.node(i, j);
            let p = state.psi[n];
            let lap = covariant_lap(grid, &state.psi, &state.a, k, i, j);
            let r = lap - Complex64::i() * k * state.phi[n] * p
                + k * k * (1.0 - p.norm_sqr()) * p;
            psi_eq += r.norm_sqr() * h2;
        }
    }

    let js = supercurrent(ctx, state);
    let cc = curl_curl(ctx, &state.a);
    let mut a_eq = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx - 1 {
            let l = grid.xlink(i, j);
            let gphi = (state.phi[grid.node(i + 1, j)] - state.phi[grid.node(i, j)]) / h;
            let r = gphi + c * cc.ax[l] - c * js.ax[l];
            a_eq += r * r * h2;
        }
    }
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx {
            let l = grid.ylink(i, j);
            let gphi = (state.phi[grid.node(i, j + 1)] - state.phi[grid.node(i, j)]) / h;
            let r = gphi + c * cc.ay[l] - c * js.ay[l];
            a_eq += r * r * h2;
        }
    }

    // one-sided second-order flux at the contacts
    let mut phi_flux = 0.0;
    for i in 0..grid.nx {
        let x = i as f64 * h;
        for (jb, side) in [
            (0usize, crate::domain::Side::Bottom),
            (grid.ny - 1, crate::domain::Side::Top),
        ] {
            let f0 = state.phi[grid.node(i, jb)];
            let (f1, f2) = if jb == 0 {
                (state.phi[grid.node(i, 1)], state.phi[grid.node(i, 2)])
            } else {
                (state.phi[grid.node(i, jb - 1)], state.phi[grid.node(i, jb - 2)])
            };
            // second-order one-sided outward normal derivative
            let dnu = (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h);
            let jv = ctx.profile.value(&ctx.domain, side, x);
            let r = dnu + c * k * jv;
            phi_flux += r * r * h;
        }
    }

    let circulation = (ctx.trace_mean - k * ctx.params.h_ex).abs();

    let mut div_a = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            div_a = div_a.max(state.a.div(grid, i, j).abs());
        }
    }
    ResidualReport {
        psi_eq: psi_eq.sqrt(),
        a_eq: a_eq.sqrt(),
        phi_flux: phi_flux.sqrt(),
        circulation,
        div_a,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FixedPointKind {
    NormalLike,
    Mixed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub steps: usize,
    pub t_final: f64,
    /// Last observed max(|dpsi|, |dA|)/dt.
    pub rate: f64,
    pub fixed_point: FixedPointKind,
    pub l2_psi: f64,
    pub max_sup_psi: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub dt: f64,
    pub tol: f64,
    pub t_max: f64,
    pub n_proj: usize,
    pub stepper: Stepper,
}

/// Integrate until the discrete time derivative drops below tol (steady
/// state) or t_max is reached (reported, not an error). Coulomb projection
/// every n_proj steps.
pub fn run_to_steady(
    state: &mut GLState,
    ctx: &StepContext,
    opts: RunOptions,
) -> Result<ConvergenceReport> {
    if !(opts.tol > 0.0) {
        return Err(GlError::Config("steady tolerance must be positive".into()));
    }
    let mut steps = 0usize;
    let mut rate = f64::INFINITY;
    let mut max_sup = 0.0f64;
    let mut converged = false;
    while state.t < opts.t_max {
        let rep = step_with(state, ctx, opts.dt, opts.stepper).map_err(|e| match e {
            GlError::Blowup { what, .. } => GlError::Blowup { step: steps, what },
            other => other,
        })?;
        steps += 1;
        max_sup = max_sup.max(rep.sup_psi);
        if steps % opts.n_proj == 0 {
            project_coulomb(state, ctx)?;
        }
        rate = rep.max_dpsi.max(rep.max_da) / opts.dt;
        if rate < opts.tol {
            converged = true;
            break;
        }
    }
    project_coulomb(state, ctx)?;
    let l2 = psi_l2(ctx, state);
    let area = ctx.grid.lx * ctx.grid.ly;
    let kind = if l2 <= 1e-4 * area.sqrt() {
        FixedPointKind::NormalLike
    } else {
        FixedPointKind::Mixed
    };
    Ok(ConvergenceReport {
        converged,
        steps,
        t_final: state.t,
        rate,
        fixed_point: kind,
        l2_psi: l2,
        max_sup_psi: max_sup,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// | ||D_{kA} psi||^2 + k^2 ||psi||_4^4 - k^2 ||psi||_2^2 | (uniform
    /// h^2 node/link weights, for which the identity is exact at discrete
    /// steady states).
    pub grad_identity: f64,
    /// L2 defect of the eliminated-phi elliptic equation
    /// -Lap phi + c |psi|^2 phi = 0 with the c k J flux data.
    pub phi_elliptic: f64,
    /// | sum |psi|^2 phi h^2 | (imaginary-part identity).
    pub imag_identity: f64,
    /// Scale kappa^2 ||psi||_2^2 for relative comparisons.
    pub scale: f64,
}

/// Discrete integral identities satisfied exactly by steady states.
pub fn steady_identities(state: &GLState, ctx: &StepContext) -> IdentityReport {
    let grid = &ctx.grid;
    let k = ctx.params.kappa;
    let h = grid.h;
    let h2 = h * h;

    let mut kinetic = 0.0;
    for j in 0..grid.ny {
        let wx = wx_row(grid, j);
        for i in 0..grid.nx - 1 {
            let u = Complex64::from_polar(1.0, -k * h * state.a.ax[grid.xlink(i, j)]);
            let d = (u * state.psi[grid.node(i + 1, j)] - state.psi[grid.node(i, j)]) / h;
            kinetic += wx * d.norm_sqr() * h2;
        }
    }
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx {
            let u = Complex64::from_polar(1.0, -k * h * state.a.ay[grid.ylink(i, j)]);
            let d = (u * state.psi[grid.node(i, j + 1)] - state.psi[grid.node(i, j)]) / h;
            kinetic += wy_col(grid, i) * d.norm_sqr() * h2;
        }
    }
    let mut l2sq = 0.0;
    let mut l4q = 0.0;
    let mut imag = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.node(i, j);
            let w = node_vol(grid, i, j) * h2;
            let m2 = state.psi[p].norm_sqr();
            l2sq += m2 * w;
            l4q += m2 * m2 * w;
            imag += m2 * state.phi[p] * w;
        }
    }
    let grad_identity = (kinetic + k * k * l4q - k * k * l2sq).abs();

    // weak-form defect of K phi + c |psi|^2 phi vol - load = 0 using the
    // same weighted stiffness as the phi solve
    let c = ctx.params.c;
    let n = grid.n_nodes();
    let mut kphi = vec![0.0; n];
    crate::linalg::lattice_stiffness_weighted(grid.nx, grid.ny, &state.phi, &mut kphi);
    let mut phi_def = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.node(i, j);
            let w = node_vol(grid, i, j) * h2;
            let r = (kphi[p] + c * state.psi[p].norm_sqr() * state.phi[p] * w
                - ctx.phi_load[p])
                / h2;
            phi_def += r * r * h2;
        }
    }

    IdentityReport {
        grad_identity,
        phi_elliptic: phi_def.sqrt(),
        imag_identity: imag.abs(),
        scale: k * k * l2sq,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_wire_domain;
    use crate::fields::solve_normal_fields;

    fn setup(
        j0: f64,
        h_ex: f64,
        kappa: f64,
        c: f64,
        nx: usize,
        ny: usize,
    ) -> (StepContext, NormalFields) {
        let (dom, grid) = build_wire_domain(1.0, 2.0, nx, ny).unwrap();
        let profile = CurrentProfile::wire(j0);
        let nf = solve_normal_fields(&dom, &grid, &profile, h_ex).unwrap();
        let params = PhysicsParams::new(kappa, c, h_ex).unwrap();
        let ctx = StepContext::new(&dom, &grid, profile, params, &nf);
        (ctx, nf)
    }

    #[test]
    fn semi_implicit_matches_explicit_fixed_point() {
        // c = 0.25 relaxes the A diffusion limit, so lifting the psi
        // diffusion restriction lets the semi-implicit stepper take 4x dt;
        // zero current so the dynamics have a clean fixed point (at this c
        // the current-carrying wire settles into phase-slip oscillations)
        let (ctx, nf) = setup(0.0, 0.0, 4.0, 0.25, 17, 33);
        let dt_ex = default_dt(&ctx.grid, &ctx.params);
        let mut ex = initial_tapered(&ctx, &nf);
        let opts = RunOptions {
            dt: dt_ex,
            tol: 1e-5,
            t_max: 20.0,
            n_proj: 10,
            stepper: Stepper::Explicit,
        };
        let rep_ex = run_to_steady(&mut ex, &ctx, opts).unwrap();
        let dt_si = default_dt_semi_implicit(&ctx.grid, &ctx.params);
        assert!(dt_si > 2.0 * dt_ex, "semi-implicit dt {dt_si} vs explicit {dt_ex}");
        let mut si = initial_tapered(&ctx, &nf);
        let opts_si = RunOptions {
            dt: dt_si,
            tol: 1e-5,
            t_max: 20.0,
            n_proj: 10,
            stepper: Stepper::SemiImplicit,
        };
        let rep_si = run_to_steady(&mut si, &ctx, opts_si).unwrap();
        assert!(rep_si.converged, "rate = {}", rep_si.rate);
        assert_eq!(rep_si.fixed_point, rep_ex.fixed_point);
        let rel = (rep_si.l2_psi - rep_ex.l2_psi).abs() / rep_ex.l2_psi.max(1e-12);
        assert!(rel < 1e-2, "fixed points disagree: {} vs {}", rep_si.l2_psi, rep_ex.l2_psi);
    }

    #[test]
    fn zero_current_zero_state_is_fixed() {
        let (ctx, nf) = setup(0.0, 0.0, 2.0, 1.0, 17, 33);
        let mut s = normal_state(&ctx, &nf);
        let dt = default_dt(&ctx.grid, &ctx.params);
        for _ in 0..50 {
            step(&mut s, &ctx, dt).unwrap();
        }
        for p in &s.psi {
            assert_eq!(*p, Complex64::default());
        }
        for v in s.a.ax.iter().chain(s.a.ay.iter()) {
            assert!(v.abs() < 1e-12);
        }
        for v in &s.phi {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn normal_state_near_stationary() {
        let (ctx, nf) = setup(4.0, 0.0, 4.0, 1.0, 33, 65);
        let s = normal_state(&ctx, &nf);
        let r = residual(&s, &ctx);
        assert_eq!(r.psi_eq, 0.0);
        // A-equation residual is O(h^2); scale ~ c k |grad phi_n| ~ 16
        assert!(r.a_eq < 0.15, "a_eq = {}", r.a_eq);
        assert!(r.circulation < 1e-9);
        assert!(r.div_a < 1e-8, "div = {}", r.div_a);
        // time stepping barely moves it
        let mut sm = s.clone();
        let dt = default_dt(&ctx.grid, &ctx.params);
        for _ in 0..100 {
            step(&mut sm, &ctx, dt).unwrap();
        }
        for p in &sm.psi {
            assert_eq!(*p, Complex64::default());
        }
        let drift: f64 = sm
            .a
            .ax
            .iter()
            .zip(&s.a.ax)
            .chain(sm.a.ay.iter().zip(&s.a.ay))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(drift < 100.0 * dt, "drift = {drift}");
    }

    #[test]
    fn normal_state_residual_order_in_h() {
        // the bump profile with external field has no exact discrete solution,
        // so the residual actually measures truncation order
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for (nx, ny) in [(17, 33), (33, 65), (65, 129)] {
            let (dom, grid) = build_wire_domain(1.0, 2.0, nx, ny).unwrap();
            let profile = CurrentProfile::bump(4.0);
            let nf = solve_normal_fields(&dom, &grid, &profile, 0.5).unwrap();
            let params = PhysicsParams::new(4.0, 1.0, 0.5).unwrap();
            let ctx = StepContext::new(&dom, &grid, profile, params, &nf);
            let s = normal_state(&ctx, &nf);
            let r = residual(&s, &ctx);
            hs.push(ctx.grid.h);
            errs.push(r.a_eq);
        }
        let order = crate::linalg::convergence_order(&hs, &errs).unwrap();
        assert!(order >= 1.8, "order = {order}, errs = {errs:?}");
    }

    #[test]
    fn maximum_principle_short_run() {
        let (ctx, nf) = setup(4.0, 0.0, 4.0, 1.0, 17, 33);
        let mut s = initial_tapered(&ctx, &nf);
        let dt = default_dt(&ctx.grid, &ctx.params);
        let mut worst = 0.0f64;
        for _ in 0..500 {
            let rep = step(&mut s, &ctx, dt).unwrap();
            worst = worst.max(rep.sup_psi);
        }
        assert!(worst <= 1.0 + 1e-10, "sup over time = {worst}");
    }

    #[test]
    fn projection_properties() {
        let (ctx, nf) = setup(4.0, 0.0, 4.0, 1.0, 17, 33);
        let mut s = initial_tapered(&ctx, &nf);
        // inject a gradient part
        let grid = ctx.grid.clone();
        let omega: Vec<f64> = (0..grid.n_nodes())
            .map(|p| {
                let (i, j) = (p % grid.nx, p / grid.nx);
                (0.3 * i as f64 * grid.h).sin() * (0.7 * j as f64 * grid.h).cos()
            })
            .collect();
        let curls_before: Vec<f64> = (0..grid.ny - 1)
            .flat_map(|j| (0..grid.nx - 1).map(move |i| (i, j)))
            .map(|(i, j)| s.a.curl(&grid, i, j))
            .collect();
        let mods_before: Vec<f64> = s.psi.iter().map(|p| p.norm()).collect();
        gauge_transform(&mut s, &ctx, &omega, None);
        project_coulomb(&mut s, &ctx).unwrap();
        // curl and |psi| preserved exactly (up to rounding)
        let curls_after: Vec<f64> = (0..grid.ny - 1)
            .flat_map(|j| (0..grid.nx - 1).map(move |i| (i, j)))
            .map(|(i, j)| s.a.curl(&grid, i, j))
            .collect();
        for (b, a) in curls_before.iter().zip(&curls_after) {
            assert!((b - a).abs() < 1e-11);
        }
        for (b, p) in mods_before.iter().zip(&s.psi) {
            assert!((b - p.norm()).abs() < 1e-12);
        }
        // divergence killed
        let mut dmax = 0.0f64;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                dmax = dmax.max(s.a.div(&grid, i, j).abs());
            }
        }
        assert!(dmax < 1e-10, "div after projection = {dmax}");
        // idempotence
        let snap = s.clone();
        project_coulomb(&mut s, &ctx).unwrap();
        for (x, y) in s.a.ax.iter().zip(&snap.a.ax) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in s.psi.iter().zip(&snap.psi) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn gauge_invariance_of_observables() {
        let (ctx, nf) = setup(4.0, 0.0, 4.0, 1.0, 17, 33);
        let mut s = initial_tapered(&ctx, &nf);
        let dt = default_dt(&ctx.grid, &ctx.params);
        for _ in 0..50 {
            step(&mut s, &ctx, dt).unwrap();
        }
        let r0 = residual(&s, &ctx);
        let grid = ctx.grid.clone();
        let omega: Vec<f64> = (0..grid.n_nodes())
            .map(|p| {
                let (i, j) = (p % grid.nx, p / grid.nx);
                0.8 * ((1.3 * i as f64 * grid.h).cos() + 0.4 * j as f64 * grid.h)
            })
            .collect();
        let mods: Vec<f64> = s.psi.iter().map(|p| p.norm()).collect();
        gauge_transform(&mut s, &ctx, &omega, None);
        let r1 = residual(&s, &ctx);
        assert!((r0.psi_eq - r1.psi_eq).abs() < 1e-10 * (1.0 + r0.psi_eq));
        assert!((r0.a_eq - r1.a_eq).abs() < 1e-10 * (1.0 + r0.a_eq));
        for (m, p) in mods.iter().zip(&s.psi) {
            assert!((m - p.norm()).abs() < 1e-12);
        }
        // round trip restores the state
        let neg: Vec<f64> = omega.iter().map(|w| -w).collect();
        gauge_transform(&mut s, &ctx, &neg, None);
        for (m, p) in mods.iter().zip(&s.psi) {
            assert!((m - p.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn steady_identities_normal_state_and_run() {
        let (ctx, nf) = setup(4.0, 0.0, 4.0, 1.0, 17, 33);
        let s = normal_state(&ctx, &nf);
        let idr = steady_identities(&s, &ctx);
        assert!(idr.grad_identity < 1e-12);
        assert!(idr.imag_identity < 1e-12);
        // phi elliptic defect at psi = 0 reduces to the phi_n solve residual
        assert!(idr.phi_elliptic < 1e-6, "phi defect = {}", idr.phi_elliptic);
    }

    #[test]
    fn run_to_steady_zero_current_superconducting() {
        let (ctx, nf) = setup(0.0, 0.0, 4.0, 1.0, 17, 33);
        let mut s = initial_tapered(&ctx, &nf);
        let opts = RunOptions {
            dt: default_dt(&ctx.grid, &ctx.params),
            tol: 1e-5,
            t_max: 20.0,
            n_proj: 10,
            stepper: Stepper::Explicit,
        };
        let rep = run_to_steady(&mut s, &ctx, opts).unwrap();
        assert!(rep.converged, "rate = {}", rep.rate);
        assert_eq!(rep.fixed_point, FixedPointKind::Mixed);
        // away from the contacts the order parameter saturates toward
        // the 1D healing profile tanh(kappa d / sqrt(2)) ~ 0.993
        let grid = &ctx.grid;
        let midpsi = s.psi[grid.node(grid.nx / 2, grid.ny / 2)].norm();
        assert!(midpsi > 0.95, "|psi| at center = {midpsi}");
        assert!(rep.max_sup_psi <= 1.0 + 1e-10);
    }

    #[test]
    fn large_current_collapses_to_normal_state() {
        // h = 10 with kappa = 2: far above the critical field scale
        let (ctx, nf) = setup(20.0, 0.0, 2.0, 1.0, 17, 33);
        let mut s = initial_tapered(&ctx, &nf);
        let opts = RunOptions {
            dt: default_dt(&ctx.grid, &ctx.params),
            tol: 1e-6,
            t_max: 15.0,
            n_proj: 10,
            stepper: Stepper::Explicit,
        };
        let rep = run_to_steady(&mut s, &ctx, opts).unwrap();
        assert_eq!(rep.fixed_point, FixedPointKind::NormalLike, "l2 = {}", rep.l2_psi);
    }

    #[test]
    fn blowup_reported_for_absurd_dt() {
        let (ctx, nf) = setup(4.0, 0.0, 4.0, 1.0, 17, 33);
        let mut s = initial_tapered(&ctx, &nf);
        let dt = 10.0 * default_dt(&ctx.grid, &ctx.params) * 50.0;
        let mut failed = false;
        for k in 0..500 {
            match step(&mut s, &ctx, dt) {
                Ok(_) => {}
                Err(GlError::Blowup { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => panic!("unexpected error at step {k}: {e}"),
            }
        }
        assert!(failed, "expected a blow-up with dt far beyond the stability limit");
    }

    #[test]
    fn prolongation_is_exact_on_affine_fields() {
        let (_, coarse) = build_wire_domain(1.0, 2.0, 9, 17).unwrap();
        let (_, fine) = build_wire_domain(1.0, 2.0, 17, 33).unwrap();
        let mut s = GLState {
            psi: vec![Complex64::default(); coarse.n_nodes()],
            a: LinkField::zeros(&coarse),
            phi: vec![0.0; coarse.n_nodes()],
            t: 0.75,
        };
        for j in 0..coarse.ny {
            for i in 0..coarse.nx {
                let (x, y) = coarse.xy(i, j);
                s.psi[coarse.node(i, j)] = Complex64::new(1.0 + x - 0.5 * y, 2.0 * y - x);
                s.phi[coarse.node(i, j)] = 3.0 * x + y;
            }
        }
        for j in 0..coarse.ny {
            for i in 0..coarse.nx - 1 {
                let (x, y) = coarse.xy(i, j);
                s.a.ax[coarse.xlink(i, j)] = 0.5 + (x + 0.5 * coarse.h) - y;
            }
        }
        for j in 0..coarse.ny - 1 {
            for i in 0..coarse.nx {
                let (x, y) = coarse.xy(i, j);
                s.a.ay[coarse.ylink(i, j)] = 2.0 * x + (y + 0.5 * coarse.h);
            }
        }
        let f = prolong_state(&coarse, &s, &fine);
        assert_eq!(f.t, s.t);
        for j in 1..fine.ny - 1 {
            for i in 0..fine.nx {
                let (x, y) = fine.xy(i, j);
                let z = f.psi[fine.node(i, j)];
                assert!((z.re - (1.0 + x - 0.5 * y)).abs() < 1e-12, "psi re at ({i},{j})");
                assert!((z.im - (2.0 * y - x)).abs() < 1e-12);
                assert!((f.phi[fine.node(i, j)] - (3.0 * x + y)).abs() < 1e-12);
            }
        }
        // contacts stay exactly zero
        for i in 0..fine.nx {
            assert_eq!(f.psi[fine.node(i, 0)], Complex64::default());
            assert_eq!(f.psi[fine.node(i, fine.ny - 1)], Complex64::default());
        }
        // interior link midpoints reproduce the affine potential; near the
        // boundary the shifted lattice clamps, so check interior links only
        for j in 1..fine.ny - 1 {
            for i in 0..fine.nx - 1 {
                let (x, y) = fine.xy(i, j);
                let want = 0.5 + (x + 0.5 * fine.h) - y;
                let got = f.a.ax[fine.xlink(i, j)];
                assert!((got - want).abs() < 1e-12, "ax at ({i},{j}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn stepping_is_deterministic() {
        let (ctx, nf) = setup(4.0, 0.0, 4.0, 1.0, 17, 33);
        let dt = default_dt(&ctx.grid, &ctx.params);
        let run = |seed: u64| {
            let mut s = initial_random(&ctx, &nf, seed);
            for k in 0..200 {
                step(&mut s, &ctx, dt).unwrap();
                if k % 10 == 0 {
                    project_coulomb(&mut s, &ctx).unwrap();
                }
            }
            s
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a.psi, b.psi);
        assert_eq!(a.a, b.a);
        assert_eq!(a.phi, b.phi);
    }
}

//! Normal-state fields for a current-carrying wire: the induced magnetic
//! field B_n (harmonic, tangential boundary derivative J, boundary mean
//! h_ex), the electric potential phi_n (harmonic, Neumann flux -J, zero
//! mean), the Coulomb-gauge potential A_n recovered through a stream
//! function, the contact constants h_1, h_2, and the B_n-derived regions
//! where the order parameter is expected to be exponentially small.

use crate::domain::{BoundaryPoint, CurrentProfile, DomainSpec, Grid, Side};
use crate::error::{GlError, Result};
use crate::linalg::{solve_dirichlet_lattice, solve_neumann_weighted};
use serde::Serialize;

const SOLVE_TOL: f64 = 1e-12;

/// J value at a boundary-walk point. Horizontal sides are parametrized by
/// the physical x coordinate; vertical (insulator) sides return 0.
fn j_at(profile: &CurrentProfile, domain: &DomainSpec, grid: &Grid, p: &BoundaryPoint) -> f64 {
    let x = p.i as f64 * grid.h;
    profile.value(domain, p.side, x)
}

/// Boundary trace of B_n: cumulative trapezoid integral of J along the
/// positively oriented boundary (dB/ds = J), shifted so that the boundary
/// average equals h_ex. Returns the full node field with interior zeros
/// plus the shift applied on boundary nodes.
fn bn_boundary_trace(
    domain: &DomainSpec,
    grid: &Grid,
    profile: &CurrentProfile,
    h_ex: f64,
) -> Vec<f64> {
    let walk = grid.boundary_walk();
    let mut trace = vec![0.0; grid.n_nodes()];
    let mut running = 0.0;
    let mut prev: Option<(&BoundaryPoint, f64)> = None;
    for p in &walk {
        let jv = j_at(profile, domain, grid, p);
        if let Some((q, jq)) = prev {
            // corner duplicates have the same node on two sides: zero step
            if q.side == p.side {
                running += 0.5 * (jq + jv) * grid.h;
            }
        }
        trace[grid.node(p.i, p.j)] = running;
        prev = Some((p, jv));
    }
    // boundary mean over distinct nodes (uniform spacing, closed loop)
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_boundary(i, j) {
                sum += trace[grid.node(i, j)];
                count += 1;
            }
        }
    }
    let shift = h_ex - sum / count as f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_boundary(i, j) {
                trace[grid.node(i, j)] += shift;
            }
        }
    }
    trace
}

/// Induced magnetic field of the normal state: boundary trace from the
/// tangential condition dB_n/ds = J, interior by the harmonic (Dirichlet)
/// extension.
pub fn solve_bn(
    domain: &DomainSpec,
    grid: &Grid,
    profile: &CurrentProfile,
    h_ex: f64,
) -> Result<Vec<f64>> {
    let trace = bn_boundary_trace(domain, grid, profile, h_ex);
    solve_dirichlet_lattice(
        grid.nx,
        grid.ny,
        &vec![0.0; grid.n_nodes()],
        &trace,
        None,
        SOLVE_TOL,
    )
}

/// Neumann boundary load for a potential solve with flux data
/// d(potential)/dnu = scale * (-J) on the contacts and 0 on the insulators,
/// assembled for the graph-stiffness (control-volume) operator. Corners use
/// the contact-side flux over the whole corner segment; with equal contact
/// treatment on both contacts this keeps the load exactly compatible.
pub fn neumann_current_load(
    domain: &DomainSpec,
    grid: &Grid,
    profile: &CurrentProfile,
    scale: f64,
) -> Vec<f64> {
    let mut load = vec![0.0; grid.n_nodes()];
    let h = grid.h;
    for side in [Side::Bottom, Side::Top] {
        let j = if side == Side::Bottom { 0 } else { grid.ny - 1 };
        for i in 0..grid.nx {
            let x = i as f64 * h;
            // trapezoid control segments: corners carry half a cell of contact
            let w = if i == 0 || i == grid.nx - 1 { 0.5 * h } else { h };
            load[grid.node(i, j)] += scale * (-profile.value(domain, side, x)) * w;
        }
    }
    load
}

/// Electric potential of the normal state: harmonic with -dphi_n/dnu = J,
/// normalized to zero domain mean (trapezoid quadrature).
pub fn solve_phin(domain: &DomainSpec, grid: &Grid, profile: &CurrentProfile) -> Result<Vec<f64>> {
    let load = neumann_current_load(domain, grid, profile, 1.0);
    let total: f64 = load.iter().sum();
    let scale = load.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if total.abs() > 1e-10 * scale * grid.n_nodes() as f64 {
        return Err(GlError::Compatibility(format!(
            "Neumann load sums to {total:.3e}; the injected current does not balance"
        )));
    }
    let mut phi = vec![0.0; grid.n_nodes()];
    solve_neumann_weighted(grid.nx, grid.ny, &load, &mut phi, SOLVE_TOL)?;
    let mean = domain_mean(grid, &phi);
    for v in phi.iter_mut() {
        *v -= mean;
    }
    Ok(phi)
}

/// Trapezoid-weighted domain mean of a node field.
pub fn domain_mean(grid: &Grid, f: &[f64]) -> f64 {
    domain_integral(grid, f) / (grid.lx * grid.ly)
}

/// Trapezoid quadrature of a node field over the rectangle.
pub fn domain_integral(grid: &Grid, f: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let wx = if i == 0 || i == grid.nx - 1 { 0.5 } else { 1.0 };
            let wy = if j == 0 || j == grid.ny - 1 { 0.5 } else { 1.0 };
            acc += wx * wy * f[grid.node(i, j)];
        }
    }
    acc * grid.h * grid.h
}

/// Link representation of a vector field: values on x-links and y-links.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkField {
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
}

impl LinkField {
    pub fn zeros(grid: &Grid) -> Self {
        LinkField { ax: vec![0.0; grid.n_xlinks()], ay: vec![0.0; grid.n_ylinks()] }
    }

    /// Discrete curl on plaquette (i,j): counterclockwise circulation / h.
    pub fn curl(&self, grid: &Grid, i: usize, j: usize) -> f64 {
        (self.ax[grid.xlink(i, j)] + self.ay[grid.ylink(i + 1, j)]
            - self.ax[grid.xlink(i, j + 1)]
            - self.ay[grid.ylink(i, j)])
            / grid.h
    }

    /// Discrete divergence at node (i,j) with zero ghost links outside the
    /// domain (the A.nu = 0 convention).
    pub fn div(&self, grid: &Grid, i: usize, j: usize) -> f64 {
        let mut d = 0.0;
        if i < grid.nx - 1 {
            d += self.ax[grid.xlink(i, j)];
        }
        if i > 0 {
            d -= self.ax[grid.xlink(i - 1, j)];
        }
        if j < grid.ny - 1 {
            d += self.ay[grid.ylink(i, j)];
        }
        if j > 0 {
            d -= self.ay[grid.ylink(i, j - 1)];
        }
        d / grid.h
    }
}

/// Average of the four corner nodes of plaquette (i,j).
pub fn plaquette_average(grid: &Grid, f: &[f64], i: usize, j: usize) -> f64 {
    0.25 * (f[grid.node(i, j)]
        + f[grid.node(i + 1, j)]
        + f[grid.node(i, j + 1)]
        + f[grid.node(i + 1, j + 1)])
}

/// Coulomb-gauge potential with curl A_n = B_n: solve the stream function
/// chi on the dual (plaquette-center) lattice with a zero halo ring, then
/// take the perpendicular gradient on links. The construction gives exact
/// discrete div A_n = 0 (ghost-zero convention) and plaquette curl equal to
/// the plaquette average of B_n up to solver tolerance.
pub fn recover_an(grid: &Grid, bn: &[f64]) -> Result<LinkField> {
    let (px, py) = (grid.nx - 1, grid.ny - 1);
    // dual lattice with halo: (px+2) x (py+2), interior = plaquettes
    let (m1, m2) = (px + 2, py + 2);
    let mut rhs = vec![0.0; m1 * m2];
    for j in 0..py {
        for i in 0..px {
            // -h^2 Lap chi = -h^2 B  <=>  Lap chi = B
            rhs[(j + 1) * m1 + (i + 1)] = -grid.h * grid.h * plaquette_average(grid, bn, i, j);
        }
    }
    let chi = solve_dirichlet_lattice(m1, m2, &rhs, &vec![0.0; m1 * m2], None, SOLVE_TOL)?;
    let chi_at = |i: isize, j: isize| -> f64 {
        // plaquette indices; out-of-range values sit on the zero halo
        chi[((j + 1) as usize) * m1 + (i + 1) as usize]
    };
    let mut a = LinkField::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..px {
            // A_x = -dchi/dy at the link midpoint (i+1/2, j)
            a.ax[grid.xlink(i, j)] =
                -(chi_at(i as isize, j as isize) - chi_at(i as isize, j as isize - 1)) / grid.h;
        }
    }
    for j in 0..py {
        for i in 0..grid.nx {
            // A_y = dchi/dx at the link midpoint (i, j+1/2)
            a.ay[grid.ylink(i, j)] =
                (chi_at(i as isize, j as isize) - chi_at(i as isize - 1, j as isize)) / grid.h;
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Serialize)]
pub struct HjReport {
    pub h1_formula: f64,
    pub h2_formula: f64,
    pub h1_trace: f64,
    pub h2_trace: f64,
    /// h = max(|h1|, |h2|), from the formula values.
    pub h: f64,
    /// Whether h1*h2 < 0 (the two-sided regime assumption).
    pub opposite_signs: bool,
}

/// The averaged-portion formula for the contact constant at boundary
/// arclength s_j: h_ex minus the boundary average of |Gamma(s, s_j)| J(s),
/// where |Gamma| is the positively oriented portion length from s to s_j.
pub fn hj_formula_at(
    domain: &DomainSpec,
    grid: &Grid,
    profile: &CurrentProfile,
    h_ex: f64,
    s_j: f64,
) -> f64 {
    let walk = grid.boundary_walk();
    let perim = domain.perimeter();
    let mut integral = 0.0;
    let mut prev: Option<(&BoundaryPoint, f64)> = None;
    for p in &walk {
        let val = ((s_j - p.s).rem_euclid(perim)) * j_at(profile, domain, grid, p);
        if let Some((q, vq)) = prev {
            if q.side == p.side {
                integral += 0.5 * (vq + val) * grid.h;
            }
        }
        prev = Some((p, val));
    }
    h_ex - integral / perim
}

/// Contact constants h_1, h_2 by the portion-average formula and by reading
/// the B_n boundary trace at the insulator midpoints; the two agree to
/// quadrature order.
pub fn compute_hj(
    domain: &DomainSpec,
    grid: &Grid,
    profile: &CurrentProfile,
    h_ex: f64,
) -> Result<HjReport> {
    let h1_formula = hj_formula_at(domain, grid, profile, h_ex, domain.insulator_midpoint(1));
    let h2_formula = hj_formula_at(domain, grid, profile, h_ex, domain.insulator_midpoint(2));
    let bn = solve_bn(domain, grid, profile, h_ex)?;
    let mid = (grid.ny - 1) / 2;
    // midpoint of a vertical side: exact node when ny is odd, else the
    // average of the two middle nodes
    let trace_at = |i: usize| -> f64 {
        if grid.ny % 2 == 1 {
            bn[grid.node(i, mid)]
        } else {
            0.5 * (bn[grid.node(i, mid)] + bn[grid.node(i, mid + 1)])
        }
    };
    let h1_trace = trace_at(0);
    let h2_trace = trace_at(grid.nx - 1);
    Ok(HjReport {
        h1_formula,
        h2_formula,
        h1_trace,
        h2_trace,
        h: h1_formula.abs().max(h2_formula.abs()),
        opposite_signs: h1_formula * h2_formula < 0.0,
    })
}

/// Cauchy-Riemann defect between the conjugate pair (phi_n, B_n):
/// max over interior nodes of |dphi/dx + dB/dy| + |dphi/dy - dB/dx|
/// with centered differences. Vanishes to O(h^2) for the solved fields.
pub fn conjugacy_residual(grid: &Grid, bn: &[f64], phin: &[f64]) -> f64 {
    let h2 = 2.0 * grid.h;
    let mut worst = 0.0f64;
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let px = (phin[grid.node(i + 1, j)] - phin[grid.node(i - 1, j)]) / h2;
            let py = (phin[grid.node(i, j + 1)] - phin[grid.node(i, j - 1)]) / h2;
            let bx = (bn[grid.node(i + 1, j)] - bn[grid.node(i - 1, j)]) / h2;
            let by = (bn[grid.node(i, j + 1)] - bn[grid.node(i, j - 1)]) / h2;
            worst = worst.max((px + by).abs() + (py - bx).abs());
        }
    }
    worst
}

/// Minimum of |grad B_n| over nodes: centered differences in the interior,
/// second-order one-sided stencils on the boundary.
pub fn min_grad_bn(grid: &Grid, bn: &[f64]) -> f64 {
    let h = grid.h;
    let deriv = |a: f64, b: f64| (b - a) / (2.0 * h);
    let one_sided = |f0: f64, f1: f64, f2: f64| (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
    let mut best = f64::INFINITY;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let gx = if i == 0 {
                one_sided(bn[grid.node(0, j)], bn[grid.node(1, j)], bn[grid.node(2, j)])
            } else if i == grid.nx - 1 {
                -one_sided(
                    bn[grid.node(i, j)],
                    bn[grid.node(i - 1, j)],
                    bn[grid.node(i - 2, j)],
                )
            } else {
                deriv(bn[grid.node(i - 1, j)], bn[grid.node(i + 1, j)])
            };
            let gy = if j == 0 {
                one_sided(bn[grid.node(i, 0)], bn[grid.node(i, 1)], bn[grid.node(i, 2)])
            } else if j == grid.ny - 1 {
                -one_sided(
                    bn[grid.node(i, j)],
                    bn[grid.node(i, j - 1)],
                    bn[grid.node(i, j - 2)],
                )
            } else {
                deriv(bn[grid.node(i, j - 1)], bn[grid.node(i, j + 1)])
            };
            best = best.min(gx.hypot(gy));
        }
    }
    best
}

/// All normal-state data needed by the TDGL stepper and the diagnostics.
#[derive(Debug, Clone)]
pub struct NormalFields {
    pub bn: Vec<f64>,
    pub phin: Vec<f64>,
    pub an: LinkField,
    pub h1: f64,
    pub h2: f64,
    pub h: f64,
    pub h_ex: f64,
}

pub fn solve_normal_fields(
    domain: &DomainSpec,
    grid: &Grid,
    profile: &CurrentProfile,
    h_ex: f64,
) -> Result<NormalFields> {
    let bn = solve_bn(domain, grid, profile, h_ex)?;
    let phin = solve_phin(domain, grid, profile)?;
    let an = recover_an(grid, &bn)?;
    let hj = compute_hj(domain, grid, profile, h_ex)?;
    Ok(NormalFields {
        bn,
        phin,
        an,
        h1: hj.h1_formula,
        h2: hj.h2_formula,
        h: hj.h,
        h_ex,
    })
}

/// Node masks and polyline distance fields for the B_n-derived regions.
/// Index 0 corresponds to component j = 1 (B_n < -1 side, the x = 0
/// insulator), index 1 to j = 2 (B_n > +1 side, x = Lx).
#[derive(Debug, Clone)]
pub struct RegionMasks {
    pub delta: f64,
    /// omega_j = { (-1)^j B_n > 1 }
    pub omega: [Vec<bool>; 2],
    /// S_delta = { |B_n| > 1 + delta }
    pub s_delta: Vec<bool>,
    /// Split of S_delta by sign: S_{delta,j} = { (-1)^j B_n > 1 + delta }
    pub s_delta_j: [Vec<bool>; 2],
    /// omega_{delta,j} = S_{delta,j} with d(x, insulators) > delta
    pub omega_delta_j: [Vec<bool>; 2],
    /// C_{delta,j}: level-set polyline of the S_{delta,j} boundary off dOmega
    pub c_polyline: [Vec<(f64, f64)>; 2],
    /// Gamma_{delta,j}: boundary polyline of omega_{delta,j} off the contacts
    pub gamma_polyline: [Vec<(f64, f64)>; 2],
    pub dist_to_c: [Vec<f64>; 2],
    pub dist_to_gamma: [Vec<f64>; 2],
    /// Connected components (4-neighbor) of S_delta
    pub s_components: usize,
}

/// Crossing points of the level set {f = level} on mesh edges, with linear
/// interpolation. Nodes with f >= level count as inside (ties go to the
/// region), so a crossing is an edge whose endpoints disagree on inclusion.
fn level_crossings(grid: &Grid, f: &[f64], level: f64) -> Vec<(f64, f64)> {
    let h = grid.h;
    let mut pts = Vec::new();
    let mut push = |xa: f64, ya: f64, xb: f64, yb: f64, va: f64, vb: f64| {
        let ia = va >= 0.0;
        let ib = vb >= 0.0;
        if ia != ib {
            let t = va / (va - vb);
            pts.push((xa + t * (xb - xa), ya + t * (yb - ya)));
        }
    };
    for j in 0..grid.ny {
        for i in 0..grid.nx - 1 {
            let (x, y) = (i as f64 * h, j as f64 * h);
            push(
                x,
                y,
                x + h,
                y,
                f[grid.node(i, j)] - level,
                f[grid.node(i + 1, j)] - level,
            );
        }
    }
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx {
            let (x, y) = (i as f64 * h, j as f64 * h);
            push(
                x,
                y,
                x,
                y + h,
                f[grid.node(i, j)] - level,
                f[grid.node(i, j + 1)] - level,
            );
        }
    }
    pts
}

pub fn brute_distance_field(grid: &Grid, pts: &[(f64, f64)]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; grid.n_nodes()];
    if pts.is_empty() {
        return d;
    }
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = grid.xy(i, j);
            let mut best = f64::INFINITY;
            for &(px, py) in pts {
                let dd = (x - px).hypot(y - py);
                if dd < best {
                    best = dd;
                }
            }
            d[grid.node(i, j)] = best;
        }
    }
    d
}

fn count_components(grid: &Grid, mask: &[bool]) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = (k % grid.nx, k / grid.nx);
            let mut try_push = |ii: usize, jj: usize, stack: &mut Vec<usize>| {
                let kk = grid.node(ii, jj);
                if mask[kk] && !seen[kk] {
                    seen[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                try_push(i - 1, j, &mut stack);
            }
            if i + 1 < grid.nx {
                try_push(i + 1, j, &mut stack);
            }
            if j > 0 {
                try_push(i, j - 1, &mut stack);
            }
            if j + 1 < grid.ny {
                try_push(i, j + 1, &mut stack);
            }
        }
    }
    count
}

/// Extract all threshold regions of B_n at a given delta. Empty regions are
/// reported as empty masks with infinite distance fields, never as errors.
pub fn extract_regions(grid: &Grid, bn: &[f64], delta: f64) -> RegionMasks {
    let n = grid.n_nodes();
    let eps = 1e-12;
    // signed field per component: f_j = (-1)^j B_n
    let signed = |jc: usize, v: f64| if jc == 0 { -v } else { v };
    let mut omega = [vec![false; n], vec![false; n]];
    let mut s_delta = vec![false; n];
    let mut s_delta_j = [vec![false; n], vec![false; n]];
    let mut omega_delta_j = [vec![false; n], vec![false; n]];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.node(i, j);
            let x = i as f64 * grid.h;
            let d_ins = x.min(grid.lx - x);
            for jc in 0..2 {
                let f = signed(jc, bn[k]);
                if f > 1.0 {
                    omega[jc][k] = true;
                }
                if f >= 1.0 + delta {
                    s_delta_j[jc][k] = true;
                    s_delta[k] = true;
                    if d_ins > delta {
                        omega_delta_j[jc][k] = true;
                    }
                }
            }
        }
    }
    let mut c_polyline: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    let mut gamma_polyline: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for jc in 0..2 {
        let fj: Vec<f64> = bn.iter().map(|&v| signed(jc, v)).collect();
        // C_{delta,j}: the part of the S_{delta,j} level set off dOmega
        c_polyline[jc] = level_crossings(grid, &fj, 1.0 + delta)
            .into_iter()
            .filter(|&(x, y)| {
                x > eps && x < grid.lx - eps && y > eps && y < grid.ly - eps
            })
            .collect();
        // Gamma_{delta,j}: boundary of { f_j > 1+delta } cut with the
        // distance-to-insulator condition, minus the contact part; the
        // combined region is the superlevel set of a min of two fields
        let g: Vec<f64> = (0..n)
            .map(|k| {
                let i = k % grid.nx;
                let x = i as f64 * grid.h;
                let d_ins = x.min(grid.lx - x);
                (fj[k] - (1.0 + delta)).min(d_ins - delta)
            })
            .collect();
        gamma_polyline[jc] = level_crossings(grid, &g, 0.0)
            .into_iter()
            .filter(|&(_, y)| y > eps && y < grid.ly - eps)
            .collect();
    }
    let dist_to_c = [
        brute_distance_field(grid, &c_polyline[0]),
        brute_distance_field(grid, &c_polyline[1]),
    ];
    let dist_to_gamma = [
        brute_distance_field(grid, &gamma_polyline[0]),
        brute_distance_field(grid, &gamma_polyline[1]),
    ];
    let s_components = count_components(grid, &s_delta);
    RegionMasks {
        delta,
        omega,
        s_delta,
        s_delta_j,
        omega_delta_j,
        c_polyline,
        gamma_polyline,
        dist_to_c,
        dist_to_gamma,
        s_components,
    }
}

//! Small dense-free linear algebra kernels: conjugate gradients (real and
//! complex Hermitian), 5-point lattice Poisson solves, a Thomas solver for
//! tridiagonal systems, and least-squares line fits.

use crate::error::{GlError, Result};
use num_complex::Complex64;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn zdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn znorm2(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct CgInfo {
    pub iterations: usize,
    pub residual: f64,
}

/// Conjugate gradients for a symmetric positive (semi-)definite operator.
/// `project` is applied to every direction/iterate update; it restricts the
/// iteration to a subspace (e.g. mean-zero for pinned Neumann problems, or
/// zeroed Dirichlet rows). `x` is the warm start and the result.
pub fn cg<A, P>(
    apply: A,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    mut project: P,
) -> Result<CgInfo>
where
    A: Fn(&[f64], &mut [f64]),
    P: FnMut(&mut [f64]),
{
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    project(&mut r);
    let mut rr = dot(&r, &r);
    // scale by the data actually driving the solve: b may be all zero when
    // the forcing enters through fixed (Dirichlet) entries of the warm start
    let b_norm = norm2(b).max(rr.sqrt()).max(1e-300);
    let target = tol * b_norm;
    if rr.sqrt() <= target {
        return Ok(CgInfo { iterations: 0, residual: rr.sqrt() });
    }
    p.copy_from_slice(&r);
    let mut best = rr;
    let mut since_best = 0usize;
    for it in 0..max_iter {
        apply(&p, &mut ap);
        project(&mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(GlError::LinearSolve(format!(
                "CG breakdown: p^T A p = {pap} at iteration {it}"
            )));
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(CgInfo { iterations: it + 1, residual: rr_new.sqrt() });
        }
        // rounding-floor stagnation: the recurrence residual stops improving
        // once the attainable accuracy is reached; accept if close to target
        if rr_new < best * (1.0 - 1e-4) {
            best = rr_new;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= 200 {
            let res = rr_new.sqrt();
            if res <= 1e3 * target {
                return Ok(CgInfo { iterations: it + 1, residual: res });
            }
            return Err(GlError::LinearSolve(format!(
                "CG stagnated at residual {:.3e} (target {:.3e}) after {} iterations",
                res / b_norm,
                tol,
                it + 1
            )));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(GlError::LinearSolve(format!(
        "CG did not reach tolerance {tol:.3e} in {max_iter} iterations (residual {:.3e})",
        rr.sqrt() / b_norm
    )))
}

/// CG for a complex Hermitian positive definite operator.
pub fn zcg<A>(
    apply: A,
    b: &[Complex64],
    x: &mut [Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<CgInfo>
where
    A: Fn(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let mut r = vec![Complex64::default(); n];
    let mut p = vec![Complex64::default(); n];
    let mut ap = vec![Complex64::default(); n];
    apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut rr = zdot(&r, &r).re;
    let b_norm = znorm2(b).max(rr.sqrt()).max(1e-300);
    let target = tol * b_norm;
    if rr.sqrt() <= target {
        return Ok(CgInfo { iterations: 0, residual: rr.sqrt() });
    }
    p.copy_from_slice(&r);
    let mut best = rr;
    let mut since_best = 0usize;
    for it in 0..max_iter {
        apply(&p, &mut ap);
        let pap = zdot(&p, &ap).re;
        if pap <= 0.0 {
            return Err(GlError::LinearSolve(format!(
                "complex CG breakdown: <p, A p> = {pap} at iteration {it}"
            )));
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = zdot(&r, &r).re;
        if rr_new.sqrt() <= target {
            return Ok(CgInfo { iterations: it + 1, residual: rr_new.sqrt() });
        }
        if rr_new < best * (1.0 - 1e-4) {
            best = rr_new;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= 200 {
            let res = rr_new.sqrt();
            if res <= 1e3 * target {
                return Ok(CgInfo { iterations: it + 1, residual: res });
            }
            return Err(GlError::LinearSolve(format!(
                "complex CG stagnated at residual {:.3e} (target {:.3e}) after {} iterations",
                res / b_norm,
                tol,
                it + 1
            )));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(GlError::LinearSolve(format!(
        "complex CG did not reach tolerance {tol:.3e} in {max_iter} iterations"
    )))
}

/// Graph stiffness (unweighted 5-point) on an n1 x n2 node lattice:
/// out_i = sum over existing neighbors (u_i - u_nb). Equals -h^2 Laplacian
/// at interior nodes; at boundary nodes it is the natural (zero-flux) form.
pub fn lattice_stiffness(n1: usize, n2: usize, u: &[f64], out: &mut [f64]) {
    for j in 0..n2 {
        for i in 0..n1 {
            let k = j * n1 + i;
            let mut acc = 0.0;
            let mut deg = 0.0;
            if i > 0 {
                acc += u[k - 1];
                deg += 1.0;
            }
            if i + 1 < n1 {
                acc += u[k + 1];
                deg += 1.0;
            }
            if j > 0 {
                acc += u[k - n1];
                deg += 1.0;
            }
            if j + 1 < n2 {
                acc += u[k + n1];
                deg += 1.0;
            }
            out[k] = deg * u[k] - acc;
        }
    }
}

/// Trapezoid-weighted (control-volume) 5-point stiffness: boundary-parallel
/// links carry weight 1/2 because their dual flux strip is half a cell wide.
/// This is the second-order natural (Neumann) scheme. The unweighted graph
/// form above is kept for operators that must pair exactly with the
/// ghost-zero link divergence (Coulomb projection).
pub fn lattice_stiffness_weighted(n1: usize, n2: usize, u: &[f64], out: &mut [f64]) {
    for j in 0..n2 {
        let wx = if j == 0 || j == n2 - 1 { 0.5 } else { 1.0 };
        for i in 0..n1 {
            let wy = if i == 0 || i == n1 - 1 { 0.5 } else { 1.0 };
            let k = j * n1 + i;
            let mut acc = 0.0;
            if i > 0 {
                acc += wx * (u[k] - u[k - 1]);
            }
            if i + 1 < n1 {
                acc += wx * (u[k] - u[k + 1]);
            }
            if j > 0 {
                acc += wy * (u[k] - u[k - n1]);
            }
            if j + 1 < n2 {
                acc += wy * (u[k] - u[k + n1]);
            }
            out[k] = acc;
        }
    }
}

#[inline]
fn is_lattice_boundary(n1: usize, n2: usize, k: usize) -> bool {
    let i = k % n1;
    let j = k / n1;
    i == 0 || j == 0 || i == n1 - 1 || j == n2 - 1
}

/// Solve the 5-point Dirichlet problem -h^2 Lap u = rhs_h2 at interior
/// nodes with u = boundary on the lattice boundary. `rhs_h2` already carries
/// the h^2 scaling. Warm start optional.
pub fn solve_dirichlet_lattice(
    n1: usize,
    n2: usize,
    rhs_h2: &[f64],
    boundary: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
) -> Result<Vec<f64>> {
    let n = n1 * n2;
    assert_eq!(rhs_h2.len(), n);
    assert_eq!(boundary.len(), n);
    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    for k in 0..n {
        if is_lattice_boundary(n1, n2, k) {
            x[k] = boundary[k];
        }
    }
    let mut b = vec![0.0; n];
    for k in 0..n {
        if !is_lattice_boundary(n1, n2, k) {
            b[k] = rhs_h2[k];
        }
    }
    let apply = |u: &[f64], out: &mut [f64]| {
        // interior rows of the full stiffness; boundary rows zeroed
        for j in 1..n2 - 1 {
            for i in 1..n1 - 1 {
                let k = j * n1 + i;
                out[k] = 4.0 * u[k] - u[k - 1] - u[k + 1] - u[k - n1] - u[k + n1];
            }
        }
        for k in 0..n {
            if is_lattice_boundary(n1, n2, k) {
                out[k] = 0.0;
            }
        }
    };
    let project = |v: &mut [f64]| {
        for k in 0..v.len() {
            if is_lattice_boundary(n1, n2, k) {
                v[k] = 0.0;
            }
        }
    };
    let max_iter = 20 * (n1 + n2) * (n1 + n2);
    cg(apply, &b, &mut x, tol, max_iter.max(200), project)?;
    Ok(x)
}

/// Solve the natural (Neumann) 5-point problem G^T G u = load on the whole
/// lattice, pinned to the mean-zero subspace. The load must be compatible
/// (sum ~ 0); its mean is projected out before solving.
pub fn solve_neumann_lattice(
    n1: usize,
    n2: usize,
    load: &[f64],
    x: &mut [f64],
    tol: f64,
) -> Result<CgInfo> {
    neumann_solve_impl(n1, n2, load, x, tol, false)
}

/// Same pinned Neumann solve with the trapezoid-weighted stiffness
/// (second-order boundary fluxes). Loads must use matching half-weight
/// corner control segments.
pub fn solve_neumann_weighted(
    n1: usize,
    n2: usize,
    load: &[f64],
    x: &mut [f64],
    tol: f64,
) -> Result<CgInfo> {
    neumann_solve_impl(n1, n2, load, x, tol, true)
}

fn neumann_solve_impl(
    n1: usize,
    n2: usize,
    load: &[f64],
    x: &mut [f64],
    tol: f64,
    weighted: bool,
) -> Result<CgInfo> {
    let n = n1 * n2;
    assert_eq!(load.len(), n);
    assert_eq!(x.len(), n);
    let mean = load.iter().sum::<f64>() / n as f64;
    let b: Vec<f64> = load.iter().map(|v| v - mean).collect();
    let apply = |u: &[f64], out: &mut [f64]| {
        if weighted {
            lattice_stiffness_weighted(n1, n2, u, out)
        } else {
            lattice_stiffness(n1, n2, u, out)
        }
    };
    let project = |v: &mut [f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        for q in v.iter_mut() {
            *q -= m;
        }
    };
    // warm start must live in the mean-zero subspace
    project(x);
    let max_iter = 20 * (n1 + n2) * (n1 + n2);
    let info = cg(apply, &b, x, tol, max_iter.max(200), project)?;
    project(x);
    Ok(info)
}

/// Thomas solve for a symmetric tridiagonal system (diag, off) x = b.
/// Overwrites nothing; returns x. The matrix must admit a stable LU without
/// pivoting (true for diagonally dominant and for shifted PD matrices here).
pub fn tridiag_solve(diag: &[f64], off: &[f64], b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert_eq!(off.len(), n - 1);
    assert_eq!(b.len(), n);
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    let mut x = vec![0.0; n];
    d[0] = diag[0];
    for k in 1..n {
        c[k - 1] = off[k - 1] / d[k - 1];
        d[k] = diag[k] - c[k - 1] * off[k - 1];
    }
    x[0] = b[0];
    for k in 1..n {
        x[k] = b[k] - c[k - 1] * x[k - 1];
    }
    x[n - 1] /= d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = (x[k] - off[k] * x[k + 1]) / d[k];
    }
    x
}

/// Ordinary least squares y = slope*x + intercept; returns (slope, intercept, r^2).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return Err(GlError::DegenerateFit(format!("need >= 2 paired points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for k in 0..n {
        let dx = xs[k] - mx;
        let dy = ys[k] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 1e-300 {
        return Err(GlError::DegenerateFit("all abscissae equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= 1e-300 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, intercept, r2))
}

/// Fitted convergence order from (h, err) pairs: slope of log err vs log h.
pub fn convergence_order(hs: &[f64], errs: &[f64]) -> Result<f64> {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.max(1e-300).ln()).collect();
    Ok(linear_fit(&xs, &ys)?.0)
}

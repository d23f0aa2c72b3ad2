use glwire::analysis::*;
use glwire::fields::extract_regions;
use std::time::Instant;

fn main() {
    let kappa: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let n: usize = std::env::args().nth(2).unwrap().parse().unwrap();
    let tmax: f64 = std::env::args().nth(3).unwrap().parse().unwrap();
    let h_ex: f64 = std::env::args().nth(4).map(|s| s.parse().unwrap()).unwrap_or(0.0);
    let j0: f64 = std::env::args().nth(5).map(|s| s.parse().unwrap()).unwrap_or(4.0);
    let mut setup = RunSetup::wire(j0, n, 2 * n - 1);
    setup.h_ex = h_ex;
    setup.t_max = tmax;
    setup.tol = 2e-6;
    let t0 = Instant::now();
    let run = steady_run(&setup, kappa).unwrap();
    println!(
        "kappa={kappa} n={n}: converged={} steps={} t={:.2} l2={:.3e} wall={:.1}s fixed={:?}",
        run.report.converged, run.report.steps, run.report.t_final, run.report.l2_psi,
        t0.elapsed().as_secs_f64(), run.report.fixed_point
    );
    let grid = &run.ctx.grid;
    let masks = extract_regions(grid, &run.nf.bn, 0.25);
    let total = masked_psi_mass(grid, &run.state.psi, &vec![true; grid.n_nodes()]);
    let m2 = masked_psi_mass(grid, &run.state.psi, &masks.omega_delta_j[1]);
    println!("  ratio omega_d2 = {:.3e} (total {:.3e})", m2 / total, total);
    match agmon_fit(grid, &run.state.psi, &masks, RegionKind::SDelta, 2, kappa) {
        Ok(f) => println!("  S_d2 fit: slope={:.4} r2={:.4} n={} range={:?}", f.slope, f.r_squared, f.n_points, f.distance_range),
        Err(e) => println!("  S_d2 fit error: {e}"),
    }
    match agmon_fit(grid, &run.state.psi, &masks, RegionKind::SDelta, 1, kappa) {
        Ok(f) => println!("  S_d1 fit: slope={:.4} r2={:.4} n={}", f.slope, f.r_squared, f.n_points),
        Err(e) => println!("  S_d1 fit error: {e}"),
    }
    match agmon_fit(grid, &run.state.psi, &masks, RegionKind::OmegaDelta, 2, kappa) {
        Ok(f) => println!("  w_d2 fit: slope={:.4} r2={:.4} n={} range={:?}", f.slope, f.r_squared, f.n_points, f.distance_range),
        Err(e) => println!("  w_d2 fit error: {e}"),
    }
    // centerline |psi| vs x at mid-height
    let j = grid.ny / 2;
    let prof: Vec<String> = (0..grid.nx)
        .map(|i| format!("{:.2e}", run.state.psi[grid.node(i, j)].norm()))
        .collect();
    println!("  |psi|(x, y=1): {}", prof.join(" "));
    // profile along y at the channel column x=0.5
    let i = grid.nx / 2;
    let prof: Vec<String> = (0..grid.ny)
        .step_by(4)
        .map(|jj| format!("{:.2e}", run.state.psi[grid.node(i, jj)].norm()))
        .collect();
    println!("  |psi|(x=0.5, y): {}", prof.join(" "));
}

use glwire::analysis::*;
use glwire::domain::{build_wire_domain, CurrentProfile};
use glwire::fields::{extract_regions, solve_normal_fields};
use glwire::tdgl::*;
use std::time::Instant;

// args: kappa n tmax h_ex j0 dt_mode(0=explicit,1=semi) [delta]
fn main() {
    let a: Vec<String> = std::env::args().collect();
    let kappa: f64 = a[1].parse().unwrap();
    let n: usize = a[2].parse().unwrap();
    let tmax: f64 = a[3].parse().unwrap();
    let h_ex: f64 = a[4].parse().unwrap();
    let j0: f64 = a[5].parse().unwrap();
    let semi: bool = a[6] == "1";
    let delta: f64 = a.get(7).map(|s| s.parse().unwrap()).unwrap_or(0.25);
    let tol: f64 = a.get(8).map(|s| s.parse().unwrap()).unwrap_or(2e-6);
    let (dom, grid) = build_wire_domain(1.0, 2.0, n, 2 * n - 1).unwrap();
    let profile = CurrentProfile::wire(j0);
    let nf = solve_normal_fields(&dom, &grid, &profile, h_ex).unwrap();
    let params = PhysicsParams::new(kappa, 1.0, h_ex).unwrap();
    let ctx = StepContext::new(&dom, &grid, profile, params, &nf);
    let mut state = initial_tapered(&ctx, &nf);
    let (stepper, dt) = if semi {
        (Stepper::SemiImplicit, default_dt_semi_implicit(&grid, &ctx.params))
    } else {
        (Stepper::Explicit, default_dt(&grid, &ctx.params))
    };
    let opts = RunOptions { dt, tol, t_max: tmax, n_proj: 10, stepper };
    let t0 = Instant::now();
    let rep = run_to_steady(&mut state, &ctx, opts).unwrap();
    println!(
        "kappa={kappa} n={n} semi={semi} dt={dt:.2e}: conv={} steps={} t={:.2} rate={:.2e} l2={:.3e} wall={:.1}s fixed={:?}",
        rep.converged, rep.steps, rep.t_final, rep.rate, rep.l2_psi, t0.elapsed().as_secs_f64(), rep.fixed_point
    );
    let masks = extract_regions(&grid, &nf.bn, delta);
    let total = masked_psi_mass(&grid, &state.psi, &vec![true; grid.n_nodes()]);
    let m2 = masked_psi_mass(&grid, &state.psi, &masks.omega_delta_j[1]);
    println!("  delta={delta} ratio omega_d2 = {:.3e} (total {:.3e})", m2 / total, total);
    for (kind, name) in [(RegionKind::SDelta, "S_d2"), (RegionKind::OmegaDelta, "w_d2")] {
        match agmon_fit(&grid, &state.psi, &masks, kind, 2, kappa) {
            Ok(f) => println!("  {name}: slope={:.4} r2={:.4} n={} range={:?}", f.slope, f.r_squared, f.n_points, f.distance_range),
            Err(e) => println!("  {name} error: {e}"),
        }
    }
}

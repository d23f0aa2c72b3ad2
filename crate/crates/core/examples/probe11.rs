use glwire::analysis::*;
use glwire::domain::{build_wire_domain, CurrentProfile};
use glwire::fields::{extract_regions, solve_normal_fields};
use glwire::tdgl::*;
use std::time::Instant;

// warm-started fine-grid run: args kappa h_ex j0 t_coarse t_fine_extra [delta]
fn main() {
    let a: Vec<String> = std::env::args().collect();
    let kappa: f64 = a[1].parse().unwrap();
    let h_ex: f64 = a[2].parse().unwrap();
    let j0: f64 = a[3].parse().unwrap();
    let t_coarse: f64 = a[4].parse().unwrap();
    let t_extra: f64 = a[5].parse().unwrap();
    let delta: f64 = a.get(6).map(|s| s.parse().unwrap()).unwrap_or(0.25);
    let profile = CurrentProfile::wire(j0);
    let params = PhysicsParams::new(kappa, 1.0, h_ex).unwrap();

    let t0 = Instant::now();
    let (cdom, cgrid) = build_wire_domain(1.0, 2.0, 33, 65).unwrap();
    let cnf = solve_normal_fields(&cdom, &cgrid, &profile, h_ex).unwrap();
    let cctx = StepContext::new(&cdom, &cgrid, profile.clone(), params, &cnf);
    let mut cstate = initial_tapered(&cctx, &cnf);
    let copts = RunOptions {
        dt: default_dt(&cgrid, &params), tol: 2e-6, t_max: t_coarse, n_proj: 10,
        stepper: Stepper::Explicit,
    };
    let crep = run_to_steady(&mut cstate, &cctx, copts).unwrap();
    println!("coarse: t={:.2} l2={:.3e} wall={:.0}s", crep.t_final, crep.l2_psi, t0.elapsed().as_secs_f64());

    let (fdom, fgrid) = build_wire_domain(1.0, 2.0, 65, 129).unwrap();
    let fnf = solve_normal_fields(&fdom, &fgrid, &profile, h_ex).unwrap();
    let fctx = StepContext::new(&fdom, &fgrid, profile.clone(), params, &fnf);
    let mut fstate = prolong_state(&cgrid, &cstate, &fgrid);
    let masks = extract_regions(&fgrid, &fnf.bn, delta);
    let chunk = 0.2f64;
    let n_chunks = (t_extra / chunk).round().max(1.0) as usize;
    for c in 0..n_chunks {
        let fopts = RunOptions {
            dt: default_dt(&fgrid, &params), tol: 2e-6,
            t_max: cstate.t + chunk * (c + 1) as f64, n_proj: 10,
            stepper: Stepper::Explicit,
        };
        let frep = run_to_steady(&mut fstate, &fctx, fopts).unwrap();
        let total = masked_psi_mass(&fgrid, &fstate.psi, &vec![true; fgrid.n_nodes()]);
        let m2 = masked_psi_mass(&fgrid, &fstate.psi, &masks.omega_delta_j[1]);
        let spike = (0..fgrid.nx).map(|i| fstate.psi[fgrid.node(i, 1)].norm()).fold(0.0f64, f64::max);
        let supv = fstate.psi.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        println!(
            "fine t={:.2} l2={:.3e} ratio={:.3e} spike={:.3e} sup={:.3e} wall={:.0}s",
            frep.t_final, frep.l2_psi, m2 / total, spike, supv, t0.elapsed().as_secs_f64()
        );
        for (kind, name) in [(RegionKind::SDelta, "S_d2"), (RegionKind::OmegaDelta, "w_d2")] {
            match agmon_fit(&fgrid, &fstate.psi, &masks, kind, 2, kappa) {
                Ok(f) => println!("  {name}: slope={:.4} r2={:.4} n={} range={:?}", f.slope, f.r_squared, f.n_points, f.distance_range),
                Err(e) => println!("  {name} error: {e}"),
            }
        }
    }
}

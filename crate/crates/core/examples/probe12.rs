use glwire::analysis::*;
use glwire::domain::{build_wire_domain, CurrentProfile};
use glwire::fields::{extract_regions, solve_normal_fields};
use glwire::tdgl::*;
use std::time::Instant;

// time-decay track probe: args kappa n tmax h_ex j0 delta
fn main() {
    let a: Vec<String> = std::env::args().collect();
    let kappa: f64 = a[1].parse().unwrap();
    let n: usize = a[2].parse().unwrap();
    let tmax: f64 = a[3].parse().unwrap();
    let h_ex: f64 = a[4].parse().unwrap();
    let j0: f64 = a[5].parse().unwrap();
    let delta: f64 = a[6].parse().unwrap();
    let (dom, grid) = build_wire_domain(1.0, 2.0, n, 2 * n - 1).unwrap();
    let profile = CurrentProfile::wire(j0);
    let nf = solve_normal_fields(&dom, &grid, &profile, h_ex).unwrap();
    let params = PhysicsParams::new(kappa, 1.0, h_ex).unwrap();
    let ctx = StepContext::new(&dom, &grid, profile, params, &nf);
    let mut state = initial_tapered(&ctx, &nf);
    let masks = extract_regions(&grid, &nf.bn, delta);
    let mask = &masks.omega_delta_j[1];
    println!("  omega_d2 nodes: {}", mask.iter().filter(|&&m| m).count());
    let opts = RunOptions {
        dt: default_dt(&grid, &params), tol: 1e-12, t_max: tmax, n_proj: 10,
        stepper: Stepper::Explicit,
    };
    let t0 = Instant::now();
    match time_decay_track(&mut state, &ctx, mask, opts, 200) {
        Ok(track) => println!(
            "kappa={kappa} n={n} delta={delta}: m0={:.3e} limsup={:.3e} k2*limsup={:.3e} drift={:.2e} samples={} wall={:.0}s",
            track.m0, track.limsup, kappa * kappa * track.limsup, track.drift,
            track.mass.len(), t0.elapsed().as_secs_f64()
        ),
        Err(e) => println!("kappa={kappa}: ERROR {e} (wall {:.0}s)", t0.elapsed().as_secs_f64()),
    }
}

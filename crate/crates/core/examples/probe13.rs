use glwire::analysis::*;
use glwire::tdgl::Stepper;
use std::time::Instant;

// large-domain suite probe: args t_max tol [j0] [delta]
fn main() {
    let a: Vec<String> = std::env::args().collect();
    let t_max: f64 = a[1].parse().unwrap();
    let tol: f64 = a[2].parse().unwrap();
    let j0: f64 = a.get(3).map(|s| s.parse().unwrap()).unwrap_or(4.0);
    let delta: f64 = a.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.5);
    let setup = LargeSetup {
        j0, h_ex: 0.0, nx: 33, ny: 65, delta, tol, t_max, n_proj: 10,
        stepper: Stepper::Explicit,
    };
    for eps in [0.125, 0.0625, 0.03125] {
        let t0 = Instant::now();
        match large_domain_run(eps, 0.5, &setup) {
            Ok(run) => {
                let w = w_comparison(&run);
                let ag = agmon_large_domain(&run, 0.5901);
                let d_nodes = run.d_delta_mask.iter().filter(|&&m| m).count();
                println!(
                    "eps=1/{:.0}: conv={} t={:.2} l2={:.3e} d_delta={:?} |D|={} wall={:.0}s",
                    1.0 / eps, run.report.converged, run.report.t_final, run.report.l2_psi,
                    run.d_delta_j, d_nodes, t0.elapsed().as_secs_f64()
                );
                match w {
                    Ok(w) => println!("  w defect = {:.4} (gate {:.4})", w.defect, w.gate),
                    Err(e) => println!("  w error: {e}"),
                }
                match ag {
                    Ok(d) => println!(
                        "  agmon: slope={:.3} r2={:.3} predicted={:.3} ratio={:.3}",
                        d.fit.slope, d.fit.r_squared, d.predicted_rate, d.ratio
                    ),
                    Err(e) => println!("  agmon error: {e}"),
                }
            }
            Err(e) => println!("eps={eps}: ERROR {e}"),
        }
    }
}

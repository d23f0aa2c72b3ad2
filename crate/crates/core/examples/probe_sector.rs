use glwire::spectral::{sector_dn_ground, SectorProblem};
use std::f64::consts::PI;
fn main() {
    for alpha in [PI / 2.0, PI] {
        let v = |r: f64| {
            sector_dn_ground(&SectorProblem { alpha, r_trunc: r, h_mesh: 0.05 })
                .unwrap()
                .value
        };
        let (v8, v12) = (v(8.0), v(12.0));
        let vinf = v12 - (v8 - v12) * (64.0 / 144.0) / (1.0 - 64.0 / 144.0);
        println!("alpha={alpha:.4}: v8={v8:.6} v12={v12:.6} vinf={vinf:.6}");
    }
}

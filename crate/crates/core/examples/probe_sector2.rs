use glwire::domain::{build_wire_domain, CurrentProfile};
use glwire::fields::{conjugacy_residual, solve_normal_fields};
fn main() {
    let mut prev: Option<(f64, f64)> = None;
    for (nx, ny) in [(17usize, 33usize), (33, 65), (65, 129), (129, 257)] {
        let (dom, grid) = build_wire_domain(1.0, 2.0, nx, ny).unwrap();
        let profile = CurrentProfile::bump(4.0);
        let nf = solve_normal_fields(&dom, &grid, &profile, 0.5).unwrap();
        let e = conjugacy_residual(&grid, &nf.bn, &nf.phin);
        let ord = prev.map(|(hp, ep)| (ep / e).ln() / (hp / grid.h).ln());
        println!("h=1/{}: cr={e:.4e} pair_order={:?}", nx - 1, ord);
        prev = Some((grid.h, e));
    }
}

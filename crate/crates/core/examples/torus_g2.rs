//! Torus-fibred G2 structures from Monge-Ampère potentials: dφ vanishes identically
//! and d*φ measures how far the discrete potential is from a solution.

use adiabat::bridges::{self, radial};
use adiabat::flow::FlowParams;
use adiabat::grid::{GridShape, ScalarGrid};
use nalgebra::Matrix3;

fn main() -> adiabat::Result<()> {
    let a = Matrix3::new(2.0, 0.5, 0.0, 0.5, 1.0, 0.25, 0.0, 0.25, 1.5);
    let f = bridges::quadratic_potential(GridShape::unit_box(3, 9)?, &a);
    let r = bridges::torus_g2_assemble(&f)?;
    println!("quadratic potential: dphi {:e}, d*phi {:e} on {} nodes", r.dphi_residual, r.dstar_residual, r.nodes);

    let t = bridges::torus_triple(&a);
    println!("fibre lambda for unit volume: {:.6}", bridges::unit_fibre_lambda(&t)?);

    // d*φ is compared at the interior nodes of the 9³ grid (three layers deep), which
    // every refinement contains
    let coarse = GridShape::cube(3, 9, 1.0, 1.0)?;
    println!("exact radial potential sampled on the grid:");
    for n in [9, 17] {
        let f = ScalarGrid::from_fn(GridShape::cube(3, n, 1.0, 1.0)?, radial::potential);
        let r = bridges::torus_g2_fields(&f)?;
        let nested = f.grid.max_on_nested(&r.dstar, &coarse, 3)?;
        println!("  n = {n:2}: dphi {:e}, d*phi {nested:.3e}", r.report().dphi_residual);
    }

    println!("potential recovered from a flowed maximal section:");
    for n in [9, 17] {
        let hs = 1.0 / (n as f64 - 1.0);
        let params = FlowParams { stop_mnorm: 0.1 * hs * hs, ..FlowParams::default() };
        let (f, fr) = bridges::flow_ma_potential(&bridges::radial_graph(n)?, &params)?;
        let r = bridges::torus_g2_fields(&f)?;
        let nested = f.grid.max_on_nested(&r.dstar, &coarse, 3)?;
        println!("  n = {n:2}: {} flow steps, dphi {:e}, d*phi {nested:.3e}", fr.trace.accepted, r.report().dphi_residual);
    }
    Ok(())
}

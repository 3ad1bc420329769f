//! Graphs of gradients of convex potentials: the Monge-Ampère residual and the maximal
//! residual vanish together.

use adiabat::bridges::{self, radial};
use adiabat::fixtures;
use adiabat::sections;
use adiabat::grid::{GridShape, ScalarGrid};

fn main() -> adiabat::Result<()> {
    let a = fixtures::fixture_quadratic();
    let q = bridges::quadratic_potential(GridShape::unit_box(3, 9)?, &a);
    let (ma, m) = bridges::ma_maximal_crosscheck(&q, a.determinant())?;
    println!("quadratic diag(1,2,3): |det Hess F - 6| = {ma:e}, max |m| = {m:e}");

    let f = fixtures::non_ma_potential(9)?;
    let (ma, m) = bridges::ma_maximal_crosscheck(&f, 1.0)?;
    println!("|t|^2/2 + 0.1 t0^3:    |det Hess F - 1| = {ma:.4}, max |m| = {m:.4}");

    // the radial solution u'(r) = (r^3 + 1)^(1/3), sampled: both residuals shrink like
    // h^2 at fixed points (next to the boundary the one-sided gradient dominates)
    let coarse = GridShape::cube(3, 9, 1.0, 1.0)?;
    for n in [9, 17, 33] {
        let g = GridShape::cube(3, n, 1.0, 1.0)?;
        let f = ScalarGrid::from_fn(g.clone(), radial::potential);
        let ma: Vec<f64> = bridges::ma_residual(&f, 1.0)?.iter().map(|x| x.abs()).collect();
        let m = sections::mean_curvature(&bridges::graph_section(&f)?)?;
        println!(
            "radial n = {n:2}: at the 9^3 nodes (depth 2) MA {:.3e}, maximal {:.3e}; all nodes: maximal {:.3e}",
            g.max_on_nested(&ma, &coarse, 2)?,
            g.max_on_nested(&m.norms, &coarse, 2)?,
            m.max_norm
        );
    }
    Ok(())
}

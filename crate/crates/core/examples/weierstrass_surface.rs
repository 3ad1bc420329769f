//! A maximal surface in R^{2,1} from an isotropic polynomial curve, with its Gauss map
//! on the quadric and the Cauchy-Riemann check of the Gauss lift.

use adiabat::bridges::{self, IsotropicCurve, Rect};
use adiabat::sections;

fn main() -> adiabat::Result<()> {
    let c = IsotropicCurve::q1_fixture();
    println!("curve: {}", serde_json::to_string(&c).expect("serializable"));
    println!("isotropy residual {:e}", bridges::isotropy_residual(&c));

    let rect = Rect { re0: -0.5, re1: 0.5, im0: -0.5, im1: 0.5 };
    let coarse = bridges::weierstrass(&c, rect, 17)?.grid;
    let mut prev: Option<(f64, f64)> = None;
    for n in [17, 33, 65] {
        let s = bridges::weierstrass(&c, rect, n)?;
        let mc = sections::mean_curvature(&s)?;
        let gm = bridges::gauss_map(&s)?;
        let cr = bridges::gauss_cr_field(&s, 0)?;
        // compare at the coarse-grid nodes, which every refinement contains
        let m = s.grid.max_on_nested(&mc.norms, &coarse, 1)?;
        let c = s.grid.max_on_nested(&cr, &coarse, 2)?;
        let orders = prev.map(|(pm, pc)| format!(", orders {:.2} / {:.2}", (pm / m).log2(), (pc / c).log2())).unwrap_or_default();
        println!("n = {n:2}: mean curvature {m:.3e}, CR {c:.3e}, quadric {:.1e}{orders}", gm.quadric_residual);
        prev = Some((m, c));
    }
    Ok(())
}

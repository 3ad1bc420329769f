//! Curvature of maximal sections (Ricci by the second fundamental form and by the Gauss
//! map derivative) and the pointwise Cayley algebra in signature (3, q).

use adiabat::curvature::{self, CayleySample};
use adiabat::fixtures;
use adiabat::flow::{self, FlowParams};
use adiabat::forms::{self, AltForm};
use adiabat::grid::GridShape;
use adiabat::sections::SignatureSpace;
use nalgebra::{Matrix3, Matrix4};

fn main() -> adiabat::Result<()> {
    let mut coarse = None;
    let mut mins = Vec::new();
    let mut hs = Vec::new();
    for n in [5, 9, 17] {
        let h0 = fixtures::radial_seed(n, 0.1)?;
        let step = h0.grid.hstep;
        let params = FlowParams { stop_mnorm: 1e-3 * step * step, ..FlowParams::default() };
        let h = flow::mcf_run(&h0, &params)?.state;
        let coarse = coarse.get_or_insert_with(|| h.grid.clone());
        let ric = curvature::induced_ricci(&h)?;
        let q = curvature::gauss_route(&h)?;
        let mismatch = h.grid.max_on_nested(&curvature::gauss_route_mismatch_field(&h.grid, &ric, &q), coarse, 2)?;
        println!("n = {n:2}: min Ricci eigenvalue {:.3e}, Gauss-route mismatch {mismatch:.3e}", ric.min_eigenvalue);
        mins.push(ric.min_eigenvalue);
        hs.push(step);
    }
    let (c, stable) = curvature::ricci_stability(&mins, &hs);
    println!("C_k = max(0, -min/h^2) = {c:?}, stable: {stable}");

    // trace identity on a wedge-kernel sample
    let s = Matrix3::new(0.3, -0.2, 0.5, 0.1, 0.4, -0.7, 0.2, 0.6, -0.1);
    let k = CayleySample::kernel(s, [0.5, 0.5, 0.5, 0.5]);
    let (lhs, rhs) = curvature::cayley_trace_identity(&k)?;
    println!("kernel sample t = {:.3?}: lhs {lhs:.15}, rhs {rhs:.15}, -|t|^2 {:.15}", k.t, -k.t.iter().map(|x| x * x).sum::<f64>());

    // constant Cayley fields built from self-dual frames of the metric AᵀA
    let constant = |a: &Matrix4<f64>| -> adiabat::Result<curvature::CayleyField> {
        let frame = curvature::self_dual_frame(a)?;
        curvature::CayleyField::from_fn(GridShape::unit_box(4, 3)?, SignatureSpace::diagonal(3, 2), |_| {
            let mut v: Vec<AltForm> = frame.to_vec();
            v.extend([AltForm::zero(4, 2), AltForm::zero(4, 2)]);
            v
        })
    };
    let rep = curvature::validate_adiabatic_cayley(&constant(&Matrix4::identity())?)?;
    println!("flat frame: self-duality {:e}, isometry {:e}, closed {:e}", rep.max_self_duality, rep.max_isometry, rep.max_closed);
    let a = Matrix4::new(1.0, 0.2, 0.0, 0.1, 0.0, 1.1, 0.3, 0.0, 0.0, 0.0, 0.9, 0.2, 0.1, 0.0, 0.0, 1.0);
    let norm = curvature::special_normalize(&constant(&a)?)?;
    println!("skewed frame: special residual {:.1e}, metric recovered to {:.1e}", norm.special_residual, (norm.metrics[0] - a.transpose() * a).abs().max());

    let o = curvature::omega0();
    println!("|Omega0|^2 = {}, Omega0 ^ Omega0 = {} vol", o.coeffs().iter().map(|x| x * x).sum::<f64>(), forms::wedge(&o, &o)?.top());
    Ok(())
}

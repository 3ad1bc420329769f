//! The model positive 3-form in seven dimensions: its metric, Hodge star and a
//! co-associative 4-plane.

use adiabat::forms::{self, coassociative_check, AltForm, hodge_star, metric_of, phi0, Subspace};
use nalgebra::DMatrix;

fn main() -> adiabat::Result<()> {
    let phi = phi0();
    println!("phi0 = {}", serde_json::to_string(&phi).expect("serializable"));

    let pos = forms::is_positive(&phi)?;
    println!("positive: {} (margin {:.3})", pos.positive, pos.margin);

    let e = metric_of(&phi)?;
    let dev = (&e.metric - DMatrix::identity(7, 7)).abs().max();
    println!("|g_phi - I|_max = {dev:e}, |phi|^2 = {}", e.norm_sq(&phi)?);

    let psi = hodge_star(&phi, &e)?;
    // top coefficient is against e^0..6; the orientation is its negative
    let top = forms::wedge(&phi, &psi)?.top() * AltForm::orientation_sign(7);
    println!("phi ^ *phi = {top} vol");

    for axes in [[0, 1, 2, 3], [0, 1, 2, 4]] {
        let r = coassociative_check(&phi, &Subspace::coordinate(7, &axes)?)?;
        println!("span{axes:?}: coassociative {} (residual {})", r.coassociative, r.residual);
    }

    // rescaling: g scales by c^(2/3), so the norm stays 7
    let scaled = &phi * 2.0;
    let e2 = metric_of(&scaled)?;
    println!("g_(2 phi)[0][0] = {:.6} (2^(2/3) = {:.6})", e2.metric[(0, 0)], 2f64.powf(2.0 / 3.0));
    Ok(())
}

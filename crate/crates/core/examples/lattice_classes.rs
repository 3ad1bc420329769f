//! The K3 lattice II(3,19): exact invariants, E8 roots, −2 classes and reflections.

use adiabat::lattice::{self, LatticeVector, ReflectionDatum};

fn main() -> adiabat::Result<()> {
    let rows = lattice::gram_rows();
    println!("signature {:?}, det {}", lattice::exact_signature(&rows), lattice::exact_determinant(&rows));
    println!("E8 roots: {}", lattice::e8_roots().len());

    for bound in [1, 2, 3] {
        let scan = lattice::minus_two_classes(bound);
        println!("height <= {bound}: {} classes ({})", scan.vectors.len(), scan.domain);
    }

    let delta = lattice::minus_two_classes(1).vectors[0];
    let v = LatticeVector::unit(0).add(&LatticeVector::unit(7).scale(3));
    let tv = lattice::reflect_int(&delta, &v)?;
    println!("delta = {:?}", delta.0);
    println!("(delta, delta) = {}, tau(v) = {:?}", lattice::pairing_int(&delta, &delta), tv.0);
    println!("tau(tau(v)) == v: {}", lattice::reflect_int(&delta, &tv)? == v);
    println!("(tau v, tau v) = {} = (v, v) = {}", lattice::pairing_int(&tv, &tv), lattice::pairing_int(&v, &v));

    // affine version with a shift, acting on real vectors
    let r = ReflectionDatum::new(delta, 0.5)?;
    let x = lattice::reflect(&r, &v.to_real())?;
    println!("shifted reflection of v, first six coordinates: {:?}", &x[..6]);

    // a positive 3-plane and the roots orthogonal to it
    let plane: Vec<Vec<f64>> = (0..3)
        .map(|u| (0..lattice::RANK).map(|j| if j == 2 * u || j == 2 * u + 1 { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = lattice::default_tolerance(&plane);
    let orth = lattice::orthogonal_roots(&plane, 1, tol)?;
    println!("roots orthogonal to span(e_u + f_u) at height 1: {}", orth.vectors.len());
    Ok(())
}

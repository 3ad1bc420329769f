//! Hypersymplectic triples on 4-space: the wedge Gram, Θ and μ against the 7-d Hodge
//! star, and the S-map with its inverse.

use adiabat::forms::{hodge_star, metric_of};
use adiabat::hyper::{self, HyperTriple};
use adiabat::suites;

fn main() -> adiabat::Result<()> {
    let std = HyperTriple::standard();
    println!("standard wedge Gram:\n{}", hyper::wedge_gram(&std));

    let mut rng = suites::rng(7);
    let t = suites::random_hypersymplectic(&mut rng);
    let check = hyper::is_hypersymplectic(&t);
    println!("random triple: hypersymplectic {} (margin {:.4})", check.hypersymplectic, check.margin);

    let lambda = 2.5;
    let tm = hyper::theta_mu(&t, lambda)?;
    println!("theta =\n{}mu = {:.12}", tm.theta, tm.mu);

    // the same quantities read off *phi in seven dimensions
    let phi = hyper::assemble_phi(&t, lambda)?;
    let star = hodge_star(&phi, &metric_of(&phi)?)?;
    let (_, mu, rest) = hyper::split_four_form(&star)?;
    println!("from *phi: mu = {mu:.12}, residual outside the ansatz {rest:e}");
    println!("relative disagreement {:e}", suites::theta_mu_oracle_error(&t, lambda)?);

    let v = [[1.0, 0.0, 0.5, 0.0], [0.0, -1.0, 0.0, 2.0], [0.25, 0.0, 0.0, 1.0]];
    let s = hyper::s_map(&t, &v);
    let back = hyper::s_inverse(&t, &s)?;
    let err = back.iter().flatten().zip(v.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("S(v) = {s:?}\nround trip error {err:e}");

    let e = hyper::conformal_structure(&t)?;
    println!("conformal metric (det 1):\n{}self-duality defect {:e}", e.metric, hyper::self_duality_defect(&t, &e)?);
    Ok(())
}

//! Gradient paths of t ↦ c·h(t) on a maximal section in the lattice space, and the
//! homological matching of vanishing cycles across a monodromy wall.

use adiabat::assoc::{self, MonodromyAtlas, PathParams, Wall};
use adiabat::fixtures;
use adiabat::flow::{self, FlowParams};
use adiabat::lattice::{self, LatticeVector, ReflectionDatum};

fn main() -> adiabat::Result<()> {
    let h = flow::mcf_run(&fixtures::lattice_radial_seed(9, 0.1)?, &FlowParams::default())?.state;
    let delta = fixtures::fixture_delta();
    let p = assoc::gradient_path(&h, &delta.to_real(), &[1.8, 1.5, 1.5], &PathParams::default())?;
    let (first, last) = (&p.nodes[0], p.nodes.last().expect("nonempty"));
    println!("{} nodes, stop {:?}", p.nodes.len(), p.stop);
    println!("from {first:.4?} (c·h = {:.5}) to {last:.4?} (c·h = {:.5})", p.profile[0], p.profile.last().unwrap());
    println!("transverse Hessian eigenvalues at the ends: {:.4?} / {:.4?}", p.transverse_hessian[0], p.transverse_hessian[1]);

    // a wall at t0 = 1.5 whose monodromy is the reflection in a second class
    let mut other = LatticeVector::unit(14);
    other.0[0] = 1;
    let wall = Wall { name: "w0".into(), axis: 0, position: 1.5, datum: ReflectionDatum::new(other, 0.0)? };
    let atlas = MonodromyAtlas { walls: vec![wall] };
    println!("walls crossed: {:?}", atlas.crossings(&p).iter().map(|w| &w.name).collect::<Vec<_>>());

    let start = ReflectionDatum::new(delta, 0.0)?;
    let transported = lattice::reflect_int(&other, &delta)?;
    for (label, end) in [("transported class", transported), ("untransported class", delta)] {
        let ok = assoc::matching_check(&p, &start, &ReflectionDatum::new(end, 0.0)?, &atlas)?;
        println!("end carries the {label}: matching {ok}");
    }

    let back = assoc::reversed(&p, &transported);
    let ok = assoc::matching_check(&back, &ReflectionDatum::new(transported, 0.0)?, &start, &atlas)?;
    println!("reversed path matches back: {ok}");
    Ok(())
}

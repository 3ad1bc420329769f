//! Mean curvature flow of a positive section in R^{3,3} to the maximal graph of a
//! quadratic potential, then the same seed carried into the lattice space.

use adiabat::fixtures;
use adiabat::flow::{self, FlowParams, FlowStatus};
use adiabat::sections;

fn main() -> adiabat::Result<()> {
    let a = fixtures::fixture_quadratic();
    let h0 = fixtures::perturbed_quadratic_graph(9, &a, 0.1)?;
    let pos = sections::is_positive_section(&h0);
    println!("seed: positive {} (min margin {:.4}), volume {:.6}", pos.positive, pos.margin, sections::volume3(&h0)?);

    let r = flow::mcf_run(&h0, &FlowParams::default())?;
    assert_eq!(r.status, FlowStatus::Converged);
    println!("{:?} after {} accepted / {} rejected steps", r.status, r.trace.accepted, r.trace.rejected);
    println!("max |m_perp|: {:.3e} -> {:.3e}", r.initial_mnorm, r.final_mnorm);
    for rec in r.trace.records.iter().step_by(r.trace.records.len() / 6 + 1) {
        println!("  step {:5}  t {:.4}  vol {:.9}  |m| {:.3e}", rec.step, rec.time, rec.volume, rec.mnorm);
    }
    println!("volume monotone: {}", flow::volume_monotone(&r.trace));

    let hs = r.state.grid.hstep;
    let d = flow::distance_to_span(&r.state, &fixtures::quadratic_graph_span(&a));
    println!("distance to the exact graph {d:.3e} (hstep^2 = {:.3e})", hs * hs);

    let lat = fixtures::lattice_radial_seed(5, 0.1)?;
    let rl = flow::mcf_run(&lat, &FlowParams::default())?;
    // the image of the U blocks is orthogonal to the E8 roots, so every node is flagged
    let avoid = sections::avoids_minus_two(&rl.state, 1, 1e-8)?;
    println!(
        "lattice seed: {:?}, {} nodes checked, {} meet a -2 class of height <= 1",
        rl.status,
        avoid.nodes_checked,
        avoid.flagged.len()
    );
    Ok(())
}

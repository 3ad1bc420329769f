//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use adiabat::bridges::{self, IsotropicCurve, Rect};
use adiabat::curvature;
use adiabat::fixtures;
use adiabat::flow::{self, FlowParams, FlowStatus};
use adiabat::grid::GridShape;
use adiabat::sections::{self, SectionGrid};
use adiabat::suites::{self, Check};
use nalgebra::Matrix3;

type Outcome = Result<String, String>;

fn checks(cs: &[Check]) -> Outcome {
    let text: Vec<String> = cs.iter().map(|c| format!("{} = {:e}", c.name, c.value)).collect();
    if cs.iter().all(|c| c.pass) {
        Ok(text.join(", "))
    } else {
        Err(text.join(", "))
    }
}

fn within(d: Duration, limit_s: u64, what: Outcome) -> Outcome {
    let t = format!("{:.1} s", d.as_secs_f64());
    match what {
        Ok(s) if d.as_secs_f64() <= limit_s as f64 => Ok(format!("{s}, {t}")),
        Ok(s) => Err(format!("{s}, {t} exceeds {limit_s} s")),
        Err(s) => Err(format!("{s}, {t}")),
    }
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn c1_theta_mu() -> Outcome {
    let t = Instant::now();
    let c = suites::theta_mu_suite(&mut suites::rng(1), 1000).map_err(|e| e.to_string())?;
    within(t.elapsed(), 30, checks(&[c]))
}

fn c2_model_form() -> Outcome {
    checks(&suites::model_form_suite().map_err(|e| e.to_string())?)
}

fn c3_contraction_identity() -> Outcome {
    checks(&[suites::contraction_identity_suite(&mut suites::rng(3), 100).map_err(|e| e.to_string())?])
}

fn c4_s_map() -> Outcome {
    checks(&suites::s_map_suite(&mut suites::rng(4), 10, 1000).map_err(|e| e.to_string())?)
}

fn c5_lattice() -> Outcome {
    checks(&suites::lattice_suite(&mut suites::rng(5), 1000).map_err(|e| e.to_string())?)
}

fn c6_maximal_flow() -> Outcome {
    let t = Instant::now();
    let a = fixtures::fixture_quadratic();
    let h0 = fixtures::perturbed_quadratic_graph(17, &a, 0.1).map_err(|e| e.to_string())?;
    let p = FlowParams::default();
    let r = flow::mcf_run(&h0, &p).map_err(|e| e.to_string())?;
    let hs = h0.grid.hstep;
    let d = flow::distance_to_span(&r.state, &fixtures::quadratic_graph_span(&a));
    let rel = r.final_mnorm / r.initial_mnorm;
    let ok = r.status == FlowStatus::Converged
        && rel <= 1e-6
        && r.trace.accepted <= 100_000
        && d <= 5.0 * hs * hs
        && flow::volume_monotone(&r.trace);
    let msg = format!(
        "{:?} after {} steps, mnorm ratio {rel:.2e}, distance {d:.2e} (5h^2 = {:.2e}), worst volume drop {:.1e}",
        r.status,
        r.trace.accepted,
        5.0 * hs * hs,
        r.trace.worst_volume_drop
    );
    within(t.elapsed(), 300, ensure(ok, msg))
}

fn c7_ma_bridge() -> Outcome {
    let g = GridShape::unit_box(3, 9).map_err(|e| e.to_string())?;
    let quadratics = [
        Matrix3::identity(),
        fixtures::fixture_quadratic(),
        Matrix3::new(2.0, 0.5, 0.0, 0.5, 1.0, 0.25, 0.0, 0.25, 1.5),
        Matrix3::new(1.0, 0.125, -0.25, 0.125, 0.75, 0.0, -0.25, 0.0, 2.0),
    ];
    let mut worst = (0.0f64, 0.0f64);
    for a in &quadratics {
        let f = bridges::quadratic_potential(g.clone(), a);
        let (ma, m) = bridges::ma_maximal_crosscheck(&f, a.determinant()).map_err(|e| e.to_string())?;
        worst = (worst.0.max(ma), worst.1.max(m));
    }
    let f = fixtures::non_ma_potential(9).map_err(|e| e.to_string())?;
    let (ma, m) = bridges::ma_maximal_crosscheck(&f, 1.0).map_err(|e| e.to_string())?;
    let ok = worst.0 == 0.0 && worst.1 <= 1e-11 && ma >= 1e-3 && m >= 1e-3;
    ensure(ok, format!("quadratics ({:e}, {:e}), non-MA fixture ({ma:.3e}, {m:.3e})", worst.0, worst.1))
}

fn c8_torus() -> Outcome {
    let coarse = GridShape::cube(3, 9, 1.0, 1.0).map_err(|e| e.to_string())?;
    let mut dstar = Vec::new();
    let mut dphi = 0.0f64;
    for n in [9, 17, 33] {
        let hs = 1.0 / (n as f64 - 1.0);
        let p = FlowParams { stop_mnorm: 0.1 * hs * hs, ..FlowParams::default() };
        let h0 = bridges::radial_graph(n).map_err(|e| e.to_string())?;
        let (f, _) = bridges::flow_ma_potential(&h0, &p).map_err(|e| e.to_string())?;
        let r = bridges::torus_g2_fields(&f).map_err(|e| e.to_string())?;
        dphi = dphi.max(r.report().dphi_residual);
        dstar.push(f.grid.max_on_nested(&r.dstar, &coarse, 3).map_err(|e| e.to_string())?);
    }
    let orders: Vec<f64> = dstar.windows(2).map(|w| order(w[0], w[1])).collect();
    let ok = dphi <= 1e-13 && orders.iter().all(|&o| o >= 1.9);
    ensure(ok, format!("dphi {dphi:e}, d*phi {}, orders {orders:.3?}", sci(&dstar)))
}

fn c9_weierstrass() -> Outcome {
    let c = IsotropicCurve::q1_fixture();
    let rect = Rect { re0: -0.5, re1: 0.5, im0: -0.5, im1: 0.5 };
    let mut coarse = None;
    let (mut mc, mut cr, mut quadric) = (Vec::new(), Vec::new(), 0.0f64);
    for n in [17, 33, 65] {
        let s = bridges::weierstrass(&c, rect, n).map_err(|e| e.to_string())?;
        let coarse = coarse.get_or_insert_with(|| s.grid.clone());
        let m = sections::mean_curvature(&s).map_err(|e| e.to_string())?;
        mc.push(s.grid.max_on_nested(&m.norms, coarse, 1).map_err(|e| e.to_string())?);
        let f = bridges::gauss_cr_field(&s, 0).map_err(|e| e.to_string())?;
        cr.push(s.grid.max_on_nested(&f, coarse, 2).map_err(|e| e.to_string())?);
        quadric = quadric.max(bridges::gauss_map(&s).map_err(|e| e.to_string())?.quadric_residual);
    }
    let om: Vec<f64> = mc.windows(2).map(|w| order(w[0], w[1])).collect();
    let oc: Vec<f64> = cr.windows(2).map(|w| order(w[0], w[1])).collect();
    let ok = quadric <= 1e-10 && om.iter().chain(&oc).all(|&o| o >= 1.9);
    ensure(ok, format!("mean curvature orders {om:.3?}, CR orders {oc:.3?}, quadric {quadric:.1e}"))
}

fn ricci_family(seed: impl Fn(usize) -> adiabat::Result<SectionGrid>) -> Result<(bool, String), String> {
    let mut coarse = None;
    let (mut mins, mut hs, mut ratio) = (Vec::new(), Vec::new(), Vec::new());
    for n in [5, 9, 17] {
        let h0 = seed(n).map_err(|e| e.to_string())?;
        let step = h0.grid.hstep;
        let p = FlowParams { stop_mnorm: 1e-3 * step * step, ..FlowParams::default() };
        let r = flow::mcf_run(&h0, &p).map_err(|e| e.to_string())?;
        if r.status != FlowStatus::Converged {
            return Err(format!("flow ended with {:?} at n = {n}", r.status));
        }
        let h = r.state;
        let coarse = coarse.get_or_insert_with(|| h.grid.clone());
        let ric = curvature::induced_ricci(&h).map_err(|e| e.to_string())?;
        let q = curvature::gauss_route(&h).map_err(|e| e.to_string())?;
        let field = curvature::gauss_route_mismatch_field(&h.grid, &ric, &q);
        let mismatch = h.grid.max_on_nested(&field, coarse, 2).map_err(|e| e.to_string())?;
        mins.push(ric.min_eigenvalue);
        hs.push(step);
        ratio.push(mismatch / (step * step));
    }
    let (c, stable) = curvature::ricci_stability(&mins, &hs);
    let lo = ratio.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratio.iter().copied().fold(0.0, f64::max);
    let matched = hi <= 2.0 * lo;
    Ok((stable && matched, format!("C {}, mismatch/h^2 {}", sci(&c), sci(&ratio))))
}

fn c10_ricci() -> Outcome {
    let families: [(&str, Box<dyn Fn(usize) -> adiabat::Result<SectionGrid>>); 3] = [
        ("R33 [1,2]^3", Box::new(|n| fixtures::radial_seed(n, 0.1))),
        ("R33 [2,3]^3", Box::new(|n| fixtures::radial_seed_on(n, 2.0, 0.1))),
        ("II(3,19)", Box::new(|n| fixtures::lattice_radial_seed(n, 0.1))),
    ];
    let mut ok = true;
    let mut msgs = Vec::new();
    for (name, seed) in &families {
        let (pass, msg) = ricci_family(seed)?;
        ok &= pass;
        msgs.push(format!("{name}: {msg}"));
    }
    ensure(ok, msgs.join("; "))
}

fn c11_cayley() -> Outcome {
    checks(&suites::cayley_suite(&mut suites::rng(11), 10_000).map_err(|e| e.to_string())?)
}

fn c12_perp() -> Outcome {
    checks(&[suites::perp_suite(&mut suites::rng(12), 1000).map_err(|e| e.to_string())?])
}

fn c13_reproducible() -> Outcome {
    let dir = std::env::temp_dir().join(format!("adiabat-acceptance-{}", std::process::id()));
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.join(name);
        let st = Command::new(env!("CARGO_BIN_EXE_adiabat"))
            .args(["verify-algebra", "--seed", "1", "-o"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if st.status.code() != Some(0) {
            return Err(format!("exit {:?}: {}", st.status.code(), String::from_utf8_lossy(&st.stdout)));
        }
        std::fs::read(out.join("report.json")).map_err(|e| e.to_string())
    };
    let result = run("a").and_then(|a| run("b").map(|b| (a, b)));
    let _ = std::fs::remove_dir_all(&dir);
    let (a, b) = result?;
    ensure(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("theta/mu against the 7-d Hodge star", c1_theta_mu),
        ("model form", c2_model_form),
        ("closed-form identity order", c3_contraction_identity),
        ("S-map", c4_s_map),
        ("lattice", c5_lattice),
        ("maximal flow on 17^3", c6_maximal_flow),
        ("Monge-Ampere bridge", c7_ma_bridge),
        ("torus G2 assembly", c8_torus),
        ("Weierstrass surface", c9_weierstrass),
        ("Ricci non-negativity", c10_ricci),
        ("Cayley identity", c11_cayley),
        ("perp negativity", c12_perp),
        ("reproducible reports", c13_reproducible),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("PASS {:2} {name}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:2} {name}: {msg}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

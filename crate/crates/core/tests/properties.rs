//! Invariants checked over random inputs.

use adiabat::assoc::{self, MonodromyAtlas, PathParams, PathPolyline, PathStop, Wall};
use adiabat::bridges::{self, IsotropicCurve};
use adiabat::curvature;
use adiabat::fixtures;
use adiabat::flow;
use adiabat::forms::{self, AltForm, EuclideanStructure};
use adiabat::grid::{GridShape, ScalarGrid};
use adiabat::hyper::{self, HyperTriple};
use adiabat::lattice::{self, LatticeVector, ReflectionDatum};
use adiabat::sections::{self, SectionGrid, SignatureSpace};
use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn random_form(r: &mut ChaCha8Rng, dim: usize, degree: usize) -> AltForm {
    let c = (0..binom(dim, degree)).map(|_| r.random_range(-1.0..1.0)).collect();
    AltForm::from_coeffs(dim, degree, c).unwrap()
}

fn random_spd(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

/// `exp(X)` with `XᵀG + GX = 0`, an isometry of the diagonal form `G`.
fn random_isometry(r: &mut ChaCha8Rng, g: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    let n = g.nrows();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = r.random_range(-scale..scale);
            k[(i, j)] = v;
            k[(j, i)] = -v;
        }
    }
    // G is its own inverse for a diagonal ±1 form
    (g * k).exp()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn parity(p: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn permuted_indices_read_back_signed(seed in any::<u64>(), dim in 3usize..=8, degree in 1usize..=3) {
        let mut r = rng(seed);
        let mut idx: Vec<usize> = Vec::new();
        while idx.len() < degree {
            let i = r.random_range(0..dim);
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        let val = r.random_range(-2.0..2.0);
        let mut f = AltForm::zero(dim, degree);
        f.add_component(&idx, val);
        for p in permutations(degree) {
            let q: Vec<usize> = p.iter().map(|&k| idx[k]).collect();
            prop_assert_eq!(f.get(&q), parity(&p) * val);
        }
        let mut rep = idx.clone();
        if degree >= 2 {
            rep[1] = rep[0];
            prop_assert_eq!(f.get(&rep), 0.0);
        }
    }

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>(), dim in 2usize..=8, p in 0usize..=4, q in 0usize..=4) {
        prop_assume!(p + q <= dim);
        let mut r = rng(seed);
        let a = random_form(&mut r, dim, p);
        let b = random_form(&mut r, dim, q);
        let ab = forms::wedge(&a, &b).unwrap();
        let ba = forms::wedge(&b, &a).unwrap();
        let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((&ab - &(&ba * sign)).max_abs() <= 1e-12 * ab.max_abs().max(1.0));
    }

    #[test]
    fn gphi_is_cubic(seed in any::<u64>(), c in -3.0f64..3.0) {
        let mut r = rng(seed);
        let phi = random_form(&mut r, 7, 3);
        let g = forms::gphi(&phi).unwrap();
        let gc = forms::gphi(&(&phi * c)).unwrap();
        prop_assert!(max_abs(&(&gc - &g * c.powi(3))) <= 1e-12 * max_abs(&g).max(1.0) * c.abs().powi(3).max(1.0));
    }

    #[test]
    fn hodge_star_is_an_isometry(seed in any::<u64>(), dim in 2usize..=7, k in 0usize..=7) {
        prop_assume!(k <= dim);
        let mut r = rng(seed);
        let e = EuclideanStructure::new(random_spd(&mut r, dim)).unwrap();
        let a = random_form(&mut r, dim, k);
        let s = forms::hodge_star(&a, &e).unwrap();
        let (x, y) = (e.norm_sq(&a).unwrap(), e.norm_sq(&s).unwrap());
        prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0), "{} vs {}", x, y);
    }

    #[test]
    fn det13_weights(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = HyperTriple::standard().pullback(&DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.0 } + r.random_range(-0.3..0.3))).unwrap();
        let m: Matrix3<f64> = Matrix3::from_fn(|i, j| if i == j { 1.0 } else { 0.0 } + r.random_range(-0.4..0.4));
        prop_assume!(m.determinant() > 0.1);
        let base = hyper::det13(&t).unwrap().top();
        let sl = m / m.determinant().cbrt();
        prop_assert!((hyper::det13(&t.mix(&sl)).unwrap().top() - base).abs() <= 1e-12 * base);
        let gl = hyper::det13(&t.mix(&m)).unwrap().top();
        prop_assert!((gl - m.determinant().powf(2.0 / 3.0) * base).abs() <= 1e-12 * gl.abs());
    }

    #[test]
    fn conformal_structure_makes_triple_self_dual(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = adiabat::suites::random_hypersymplectic(&mut r);
        let e = hyper::conformal_structure(&t).unwrap();
        prop_assert!(hyper::self_duality_defect(&t, &e).unwrap() <= 1e-10);
    }

    #[test]
    fn reflections_are_integral_isometries(seed in any::<u64>()) {
        let mut r = rng(seed);
        let scan = scan1();
        let d = scan.vectors[r.random_range(0..scan.vectors.len())];
        let v = LatticeVector(std::array::from_fn(|_| r.random_range(-9..=9)));
        let w = LatticeVector(std::array::from_fn(|_| r.random_range(-9..=9)));
        let (tv, tw) = (lattice::reflect_int(&d, &v).unwrap(), lattice::reflect_int(&d, &w).unwrap());
        prop_assert_eq!(lattice::pairing_int(&tv, &tw), lattice::pairing_int(&v, &w));
        prop_assert_eq!(lattice::reflect_int(&d, &tv).unwrap(), v);
        // λ = 0 real reflection agrees with the integer one
        let real = lattice::reflect(&ReflectionDatum::new(d, 0.0).unwrap(), &v.to_real()).unwrap();
        prop_assert_eq!(real, tv.to_real());
    }

    #[test]
    fn reflection_preserves_truncated_minus_two_set(seed in any::<u64>()) {
        let mut r = rng(seed);
        let scan = scan1();
        let d = scan.vectors[r.random_range(0..scan.vectors.len())];
        for _ in 0..200 {
            let v = scan.vectors[r.random_range(0..scan.vectors.len())];
            let tv = lattice::reflect_int(&d, &v).unwrap();
            prop_assert_eq!(lattice::pairing_int(&tv, &tv), -2);
            if tv.height() <= 1 && in_scanned_domain(&tv) {
                prop_assert!(scan.vectors.binary_search(&tv).is_ok(), "{:?} missing", tv);
            }
        }
    }

    #[test]
    fn affine_sections_have_zero_mean_curvature(seed in any::<u64>(), q in 1usize..=4) {
        let mut r = rng(seed);
        let space = SignatureSpace::diagonal(3, q);
        let n = 3 + q;
        let b = DMatrix::from_fn(n, 3, |i, j| if i == j { 1.0 } else { 0.0 } + if i >= 3 { r.random_range(-0.3..0.3) } else { r.random_range(-0.1..0.1) });
        let c: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let h = SectionGrid::from_fn(GridShape::unit_box(3, 5).unwrap(), space, |t| {
            (0..n).map(|i| c[i] + (0..3).map(|j| b[(i, j)] * t[j]).sum::<f64>()).collect()
        }).unwrap();
        prop_assume!(sections::is_positive_section(&h).positive);
        prop_assert!(sections::mean_curvature(&h).unwrap().max_norm <= 1e-13);
    }

    #[test]
    fn isotropy_is_preserved_by_target_isometries(seed in any::<u64>(), q in 1usize..=3) {
        let mut r = rng(seed);
        // a (2, q) isotropic curve: (cos-like, sin-like, rest) built from the q = 1 fixture padded with zeros
        let base = IsotropicCurve::q1_fixture();
        let mut polys = base.polys.clone();
        polys.resize(q + 2, Vec::new());
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(q + 2, |i, _| if i < 2 { 1.0 } else { -1.0 }));
        let a = random_isometry(&mut r, &g, 0.5);
        let deg = polys.iter().map(|p| p.len()).max().unwrap_or(0);
        let mapped: Vec<Vec<Complex64>> = (0..q + 2)
            .map(|i| (0..deg).map(|d| (0..q + 2).map(|j| polys[j].get(d).copied().unwrap_or_default() * a[(i, j)]).sum()).collect())
            .collect();
        let scale = mapped.iter().flatten().fold(1.0f64, |m, z| m.max(z.norm()));
        prop_assert!(bridges::isotropy_residual_raw(q, &mapped) <= 1e-12 * scale * scale);
    }

    #[test]
    fn constant_rotated_cayley_data_is_valid(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rot = nalgebra::Rotation3::from_euler_angles(r.random_range(-3.0..3.0), r.random_range(-1.5..1.5), r.random_range(-3.0..3.0));
        let om = forms::standard_triple_forms();
        let frame: Vec<AltForm> = (0..3).map(|i| (0..3).fold(AltForm::zero(4, 2), |acc, j| &acc + &(&om[j] * rot[(i, j)]))).collect();
        let field = curvature::CayleyField::from_fn(GridShape::unit_box(4, 3).unwrap(), SignatureSpace::diagonal(3, 1), |_| {
            let mut v = frame.clone();
            v.push(AltForm::zero(4, 2));
            v
        }).unwrap();
        let rep = curvature::validate_adiabatic_cayley(&field).unwrap();
        prop_assert!(rep.max_self_duality <= 1e-12 && rep.max_isometry <= 1e-12 && rep.max_closed <= 1e-12, "{:?}", rep);
    }
}

fn scan1() -> &'static lattice::MinusTwoScan {
    static S: OnceLock<lattice::MinusTwoScan> = OnceLock::new();
    S.get_or_init(|| lattice::minus_two_classes(1))
}

/// The scan is exhaustive on the U blocks and covers `u + r` with `u` null in a single U
/// block and `r` a root of one E8 block; anything else is outside the enumerated domain.
fn in_scanned_domain(v: &LatticeVector) -> bool {
    let e8 = |k: usize| v.0[6 + 8 * k..14 + 8 * k].iter().any(|&c| c != 0);
    let u_blocks: Vec<usize> = (0..3).filter(|&i| v.0[2 * i] != 0 || v.0[2 * i + 1] != 0).collect();
    match (e8(0), e8(1)) {
        (false, false) => true,
        (true, true) => false,
        _ => match u_blocks.as_slice() {
            [] => true,
            [i] => v.0[2 * i] == 0 || v.0[2 * i + 1] == 0,
            _ => false,
        },
    }
}

fn curved_section(seed: u64, n: usize) -> SectionGrid {
    let mut r = rng(seed);
    let amp = r.random_range(0.02..0.15);
    let a = Matrix3::from_diagonal(&nalgebra::Vector3::new(r.random_range(0.8..2.0), r.random_range(0.8..2.0), r.random_range(0.8..2.0)));
    let base = fixtures::perturbed_quadratic_graph(n, &a, amp).unwrap();
    // extra curvature that is not a graph perturbation
    let k = r.random_range(-0.1..0.1);
    let g = base.grid.clone();
    let vals: Vec<f64> = (0..g.node_count())
        .flat_map(|id| {
            let t = g.coords(id);
            let mut v = base.value(id).to_vec();
            v[3] += k * t[1] * t[2];
            v[5] += k * t[0] * t[0];
            v
        })
        .collect();
    SectionGrid::new(g, base.space.clone(), vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn mean_curvature_is_normal(seed in any::<u64>()) {
        let h = curved_section(seed, 6);
        let m = sections::mean_curvature(&h).unwrap();
        let n = h.target_dim();
        for id in (0..h.grid.node_count()).filter(|&id| h.grid.is_interior(id)) {
            let mv = m.at(id, n);
            let mnorm = h.space.pair(mv, mv).abs().sqrt();
            for d in sections::derivatives(&h, id).unwrap() {
                let dn = h.space.pair(&d, &d).abs().sqrt();
                prop_assert!(h.space.pair(mv, &d).abs() <= 1e-12 * (mnorm * dn).max(1e-300) + 1e-15);
            }
        }
    }

    #[test]
    fn volume_and_mean_curvature_are_isometry_equivariant(seed in any::<u64>()) {
        let h = curved_section(seed, 6);
        let mut r = rng(seed ^ 0x5eed);
        let a = random_isometry(&mut r, &h.space.gram, 0.3);
        let ah = h.map_target(&a, h.space.clone()).unwrap();
        let (v, av) = (sections::volume3(&h).unwrap(), sections::volume3(&ah).unwrap());
        prop_assert!((v - av).abs() <= 1e-10 * v);
        let (m, am) = (sections::mean_curvature(&h).unwrap(), sections::mean_curvature(&ah).unwrap());
        let n = h.target_dim();
        for id in 0..h.grid.node_count() {
            let want = &a * nalgebra::DVector::from_column_slice(m.at(id, n));
            for i in 0..n {
                prop_assert!((want[i] - am.at(id, n)[i]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn euler_step_identity_and_fixed_boundary(seed in any::<u64>()) {
        let h = curved_section(seed, 6);
        let dt = 0.5 * flow::parabolic_limit(&h);
        let m = sections::mean_curvature(&h).unwrap();
        let mut next = flow::mcf_step(&h, dt).unwrap();
        for (k, ((x, y), mv)) in next.values.iter().zip(&h.values).zip(&m.values).enumerate() {
            prop_assert!(((x - y) - dt * mv).abs() <= 4.0 * f64::EPSILON * y.abs().max(1.0), "entry {}", k);
        }
        for _ in 0..5 {
            next = flow::mcf_step(&next, dt).unwrap();
        }
        let n = h.target_dim();
        for id in h.grid.boundary_nodes() {
            prop_assert_eq!(&next.values[id * n..(id + 1) * n], &h.values[id * n..(id + 1) * n]);
        }
    }

    #[test]
    fn volume_never_drops_on_random_starts(seed in any::<u64>()) {
        let h = curved_section(seed, 5);
        let p = flow::FlowParams { max_steps: 400, ..flow::FlowParams::default() };
        let r = flow::mcf_run(&h, &p).unwrap();
        prop_assert!(flow::volume_monotone(&r.trace), "worst drop {}", r.trace.worst_volume_drop);
    }

    #[test]
    fn ma_and_maximal_residuals_vanish_together(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = GridShape::unit_box(3, 9).unwrap();
        // dyadic entries and a dyadic step keep every stencil sum exact
        let mut dy = |lo: i32, hi: i32| r.random_range(lo..=hi) as f64 / 8.0;
        let mut a = Matrix3::from_fn(|_, _| dy(-2, 2));
        a = a + a.transpose();
        for i in 0..3 {
            a[(i, i)] = dy(12, 24);
        }
        let f = bridges::quadratic_potential(g.clone(), &a);
        let (ma, m) = bridges::ma_maximal_crosscheck(&f, a.determinant()).unwrap();
        prop_assert!(ma == 0.0 && m <= 1e-11, "{} {}", ma, m);
        let c = dy(2, 8);
        let pert = ScalarGrid::from_fn(g, |t| 0.5 * (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]) + c * t[0].powi(3));
        let (ma, m) = bridges::ma_maximal_crosscheck(&pert, 1.0).unwrap();
        prop_assert!(ma >= 1e-3 && m >= 1e-3, "{} {}", ma, m);
    }

    #[test]
    fn torus_dphi_is_exactly_zero(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c: Vec<f64> = (0..6).map(|_| r.random_range(-0.05..0.05)).collect();
        let f = ScalarGrid::from_fn(GridShape::unit_box(3, 8).unwrap(), |t| {
            0.5 * (t[0] * t[0] + t[1] * t[1] + t[2] * t[2])
                + c[0] * t[0].powi(3) + c[1] * t[0] * t[1] * t[2] + c[2] * (t[1] + t[2]).sin()
                + c[3] * t[2].powi(4) + c[4] * (t[0] * t[1]).exp() * 0.1 + c[5] * t[1] * t[1] * t[2]
        });
        prop_assert!(bridges::torus_g2_assemble(&f).unwrap().dphi_residual <= 1e-13);
    }

    #[test]
    fn gradient_paths_increase_and_refine(seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = radial9();
        let c: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
        let start: Vec<f64> = (0..3).map(|_| r.random_range(1.2..1.8)).collect();
        let p = assoc::gradient_path(h, &c, &start, &PathParams::default()).unwrap();
        let field = assoc::PathField::new(h, &c);
        for (k, w) in p.profile.windows(2).enumerate() {
            let grad_big = field.velocity(&p.nodes[k]).unwrap().is_some_and(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-8);
            if grad_big {
                prop_assert!(w[1] > w[0] - 1e-10, "node {}: {} -> {}", k, w[0], w[1]);
            }
        }
        let half = assoc::gradient_path(h, &c, &start, &PathParams { step: 5e-4, ..PathParams::default() }).unwrap();
        let (a, b) = (p.nodes.last().unwrap(), half.nodes.last().unwrap());
        let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!(d <= 1e-6, "end points differ by {}", d);
    }

    #[test]
    fn matching_is_symmetric_under_reversal(seed in any::<u64>(), walls in 1usize..4) {
        let mut r = rng(seed);
        let scan = scan1();
        let pick = |r: &mut ChaCha8Rng| scan.vectors[r.random_range(0..scan.vectors.len())];
        let atlas = MonodromyAtlas {
            walls: (0..walls)
                .map(|k| Wall { name: format!("w{k}"), axis: r.random_range(0..3), position: r.random_range(0.1..0.9), datum: ReflectionDatum::new(pick(&mut r), 0.0).unwrap() })
                .collect(),
        };
        let a = pick(&mut r);
        let nodes: Vec<Vec<f64>> = (0..=20).map(|k| {
            let s = k as f64 / 20.0;
            vec![0.05 + 0.9 * s, 0.05 + 0.9 * s * s, 0.95 - 0.9 * s]
        }).collect();
        let p = PathPolyline { profile: vec![0.0; nodes.len()], nodes, c: a.to_real(), stop: PathStop::Boundary, transverse_hessian: [vec![], vec![]] };
        let mut b = a;
        for w in atlas.crossings(&p) {
            b = lattice::reflect_int(&w.datum.delta, &b).unwrap();
        }
        let da = ReflectionDatum::new(a, 0.0).unwrap();
        let db = ReflectionDatum::new(b, 0.0).unwrap();
        prop_assert!(assoc::matching_check(&p, &da, &db, &atlas).unwrap());
        prop_assert!(assoc::matching_check(&assoc::reversed(&p, &b), &db, &da, &atlas).unwrap());
    }
}

fn radial9() -> &'static SectionGrid {
    static H: OnceLock<SectionGrid> = OnceLock::new();
    H.get_or_init(|| bridges::radial_graph(9).unwrap())
}

#[test]
fn flow_commutes_with_target_isometries() {
    let h = curved_section(11, 6);
    let mut r = rng(12);
    let a = random_isometry(&mut r, &h.space.gram, 0.3);
    let ah = h.map_target(&a, h.space.clone()).unwrap();
    let dt = 0.5 * flow::parabolic_limit(&h);
    let (mut x, mut y) = (h.clone(), ah);
    for _ in 0..100 {
        x = flow::mcf_step(&x, dt).unwrap();
        y = flow::mcf_step(&y, dt).unwrap();
    }
    let ax = x.map_target(&a, h.space.clone()).unwrap();
    assert!(ax.sup_distance(&y) <= 1e-9, "{}", ax.sup_distance(&y));
}

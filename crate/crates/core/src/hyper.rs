//! Pointwise hypersymplectic algebra on oriented 4-space.

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{
    basis::basis, contract, hodge_star, standard_triple_forms, wedge, AltForm, EuclideanStructure, T_COORDS,
    X_COORDS,
};
use crate::linalg;

/// Three 2-forms on oriented 4-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<AltForm>", into = "Vec<AltForm>")]
pub struct HyperTriple {
    pub omega: [AltForm; 3],
}

impl TryFrom<Vec<AltForm>> for HyperTriple {
    type Error = Error;
    fn try_from(v: Vec<AltForm>) -> Result<Self> {
        let arr: [AltForm; 3] = v
            .try_into()
            .map_err(|v: Vec<AltForm>| Error::DimensionMismatch { expected: 3, got: v.len() })?;
        HyperTriple::new(arr)
    }
}

impl From<HyperTriple> for Vec<AltForm> {
    fn from(t: HyperTriple) -> Self {
        t.omega.to_vec()
    }
}

impl HyperTriple {
    pub fn new(omega: [AltForm; 3]) -> Result<Self> {
        for w in &omega {
            if w.dim() != 4 {
                return Err(Error::DimensionMismatch { expected: 4, got: w.dim() });
            }
            if w.degree() != 2 {
                return Err(Error::InvalidDegree { dim: 4, degree: w.degree() });
            }
        }
        Ok(HyperTriple { omega })
    }

    /// `ω_i = dx0 dx_i + dx_j dx_k`.
    pub fn standard() -> Self {
        HyperTriple { omega: standard_triple_forms() }
    }

    /// `ω'_i = Σ_j m_ij ω_j`.
    pub fn mix(&self, m: &Matrix3<f64>) -> Self {
        let omega = std::array::from_fn(|i| {
            (0..3).fold(AltForm::zero(4, 2), |acc, j| &acc + &(&self.omega[j] * m[(i, j)]))
        });
        HyperTriple { omega }
    }

    /// Pullback of each form by a linear map of 4-space.
    pub fn pullback(&self, a: &DMatrix<f64>) -> Result<Self> {
        let omega = [self.omega[0].pullback(a)?, self.omega[1].pullback(a)?, self.omega[2].pullback(a)?];
        Ok(HyperTriple { omega })
    }

    /// Coefficient matrix of forms lying in the span: `Σ_j c_ij ω_j`.
    pub fn combine(&self, c: &Matrix3<f64>) -> [AltForm; 3] {
        self.mix(c).omega
    }
}

/// `ω_i ∧ ω_j = a_ij e^{0123}`.
pub fn wedge_gram(t: &HyperTriple) -> Matrix3<f64> {
    let mut a = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let v = wedge(&t.omega[i], &t.omega[j]).expect("2+2 on 4-space").top();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperCheck {
    pub hypersymplectic: bool,
    /// Smallest over largest eigenvalue of the wedge Gram matrix.
    pub margin: f64,
}

pub fn is_hypersymplectic(t: &HyperTriple) -> HyperCheck {
    let (lo, hi) = linalg::eig_range3(&wedge_gram(t));
    if hi <= 0.0 {
        return HyperCheck { hypersymplectic: false, margin: if hi == 0.0 { 0.0 } else { lo / hi.abs() } };
    }
    HyperCheck { hypersymplectic: lo > 0.0, margin: lo / hi }
}

/// `det(a)^{1/3} e^{0123}`.
pub fn det13(t: &HyperTriple) -> Result<AltForm> {
    let d = wedge_gram(t).determinant();
    if !(d > 0.0) {
        return Err(Error::NotHypersymplectic { margin: d });
    }
    Ok(AltForm::volume(4) * d.cbrt())
}

/// Θ as coefficients against ω, and μ as a multiple of `e^{0123}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaMu {
    pub theta: Matrix3<f64>,
    pub mu: f64,
}

impl ThetaMu {
    pub fn theta_forms(&self, t: &HyperTriple) -> [AltForm; 3] {
        t.combine(&self.theta)
    }

    pub fn mu_form(&self) -> AltForm {
        AltForm::volume(4) * self.mu
    }
}

fn require_hypersymplectic(t: &HyperTriple) -> Result<()> {
    let c = is_hypersymplectic(t);
    if !c.hypersymplectic {
        return Err(Error::NotHypersymplectic { margin: c.margin });
    }
    Ok(())
}

fn require_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// The fibre parts of `*φ` for `φ = Σ ω_i dt_i - λ dt1 dt2 dt3`.
///
/// Conventions are fixed by the 7-dimensional star under the orientation
/// `-dt1 dt2 dt3 dx0 dx1 dx2 dx3`: the (2,2) part is `Σ_cyclic Θ_i dt_j dt_k` with
/// `Θ_i ∧ ω_j = -δ_ij λ^{1/3} det^{1/3}`, and the (4,0) part is `μ e^{0123}` with
/// `μ = det^{1/3} λ^{-2/3} / 2`, which is positive on the fibre.
pub fn theta_mu(t: &HyperTriple, lambda: f64) -> Result<ThetaMu> {
    require_hypersymplectic(t)?;
    require_lambda(lambda)?;
    let a = wedge_gram(t);
    let d13 = a.determinant().cbrt();
    let inv = a.try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
    let theta = inv * (-lambda.cbrt() * d13);
    let mu = 0.5 * d13 * lambda.powf(-2.0 / 3.0);
    Ok(ThetaMu { theta, mu })
}

/// `φ = Σ ω_i dt_i - λ dt1 dt2 dt3` on `(x0..x3, t1..t3)`.
pub fn assemble_phi(t: &HyperTriple, lambda: f64) -> Result<AltForm> {
    require_hypersymplectic(t)?;
    require_lambda(lambda)?;
    let mut phi = AltForm::zero(7, 3);
    for i in 0..3 {
        let w = t.omega[i].embed(7, &X_COORDS);
        phi = &phi + &wedge(&w, &AltForm::monomial(7, &[T_COORDS[i]]))?;
    }
    phi.add_component(&T_COORDS, -lambda);
    let pos = crate::forms::is_positive(&phi)?;
    if !pos.positive {
        return Err(Error::NotPositive { margin: pos.margin });
    }
    Ok(phi)
}

/// Splits a 4-form on 7-space into `Σ_cyclic Θ_i dt_j dt_k` and a multiple of `e^{0123}`.
/// Returns the three fibre 2-forms, the volume coefficient, and the size of the
/// remaining (3,1) and (1,3) parts.
pub fn split_four_form(psi: &AltForm) -> Result<([AltForm; 3], f64, f64)> {
    if psi.dim() != 7 || psi.degree() != 4 {
        return Err(Error::InvalidDegree { dim: psi.dim(), degree: psi.degree() });
    }
    let mut theta = [AltForm::zero(4, 2), AltForm::zero(4, 2), AltForm::zero(4, 2)];
    let mut rest = 0.0f64;
    let mut mu = 0.0;
    for (mask, c) in psi.terms() {
        let tbits = (mask >> 4).count_ones();
        match tbits {
            0 => mu = c,
            2 => {
                let missing = (0..3).find(|&i| mask & (1 << (4 + i)) == 0).unwrap();
                let (j, k) = ((missing + 1) % 3, (missing + 2) % 3);
                let xs: Vec<usize> = (0..4).filter(|&b| mask & (1 << b) != 0).collect();
                // e^{ab t_j t_k} read as Θ_i[ab] with t-indices in cyclic order
                let val = psi.get(&[xs[0], xs[1], T_COORDS[j], T_COORDS[k]]);
                theta[missing].add_component(&xs, val);
            }
            _ => rest = rest.max(c.abs()),
        }
    }
    Ok((theta, mu, rest))
}

fn unit(i: usize) -> [f64; 4] {
    let mut e = [0.0; 4];
    e[i] = 1.0;
    e
}

fn hook(v: &[f64; 4], w: &AltForm) -> [f64; 4] {
    let c = contract(v, w).expect("vector matches 4-space");
    [c.coeffs()[0], c.coeffs()[1], c.coeffs()[2], c.coeffs()[3]]
}

fn sub4(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| a[i] - b[i])
}

/// `a_k = v_j ⌟ ω_i - v_i ⌟ ω_j` for `(i, j, k)` cyclic.
pub fn s_map(t: &HyperTriple, v: &[[f64; 4]; 3]) -> [[f64; 4]; 3] {
    let [w1, w2, w3] = &t.omega;
    [
        sub4(hook(&v[2], w2), hook(&v[1], w3)),
        sub4(hook(&v[0], w3), hook(&v[2], w1)),
        sub4(hook(&v[1], w1), hook(&v[0], w2)),
    ]
}

/// The 12×12 matrix of the S-map, columns indexed by `4 i + coordinate`.
pub fn s_matrix(t: &HyperTriple) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(12, 12);
    for col in 0..12 {
        let mut v = [[0.0; 4]; 3];
        v[col / 4] = unit(col % 4);
        let a = s_map(t, &v);
        for row in 0..12 {
            m[(row, col)] = a[row / 4][row % 4];
        }
    }
    m
}

/// Condition numbers above this are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Solves `s_map(t, v) = a` for `v`.
pub fn s_inverse(t: &HyperTriple, a: &[[f64; 4]; 3]) -> Result<[[f64; 4]; 3]> {
    let m = s_matrix(t);
    let cond = linalg::condition_number(&m);
    if !(cond < SINGULAR_CONDITION) {
        return Err(Error::Singular { condition: cond });
    }
    let rhs = DVector::from_iterator(12, a.iter().flatten().copied());
    let x = m.lu().solve(&rhs).ok_or(Error::Singular { condition: cond })?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|c| x[4 * i + c])))
}

/// `T = S + Sᵀ - (2/3) tr(S) I`.
pub fn sym0_project(s: &Matrix3<f64>) -> Matrix3<f64> {
    s + s.transpose() - Matrix3::identity() * (2.0 / 3.0 * s.trace())
}

/// `P(ψ) = Σ (*ψ_i) ∧ ω_i` for 3-forms `ψ_i` on 4-space.
pub fn p_contract(psi: &[AltForm; 3], t: &HyperTriple, e: &EuclideanStructure) -> Result<AltForm> {
    let mut out = AltForm::zero(4, 3);
    for i in 0..3 {
        if psi[i].dim() != 4 || psi[i].degree() != 3 {
            return Err(Error::InvalidDegree { dim: psi[i].dim(), degree: psi[i].degree() });
        }
        out = &out + &wedge(&hodge_star(&psi[i], e)?, &t.omega[i])?;
    }
    Ok(out)
}

/// The conformal structure making the triple self-dual, normalised to `det g = 1`.
///
/// Uses the Urbantke expression
/// `g_ab ∝ ε^{ijk} ω_{i,ac} ω_{j,bd} ω_{k,ef} ε^{cdef}`.
pub fn conformal_structure(t: &HyperTriple) -> Result<EuclideanStructure> {
    require_hypersymplectic(t)?;
    let mats: Vec<nalgebra::Matrix4<f64>> = t
        .omega
        .iter()
        .map(|w| nalgebra::Matrix4::from_fn(|a, b| if a == b { 0.0 } else { w.get(&[a, b]) }))
        .collect();
    let mut g = DMatrix::zeros(4, 4);
    for a in 0..4 {
        for b in 0..4 {
            let mut total = 0.0;
            for (i, j, k, s) in [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0), (0, 2, 1, -1.0), (2, 1, 0, -1.0), (1, 0, 2, -1.0)] {
                for c in 0..4 {
                    for d in 0..4 {
                        for e in 0..4 {
                            for f in 0..4 {
                                let eps = AltForm::monomial(4, &[c, d, e, f]).coeffs()[0];
                                if eps != 0.0 {
                                    total += s * eps * mats[i][(a, c)] * mats[j][(b, d)] * mats[k][(e, f)];
                                }
                            }
                        }
                    }
                }
            }
            g[(a, b)] = total;
        }
    }
    if g.trace() < 0.0 {
        g = -g;
    }
    let det = g.determinant();
    if !(det > 0.0) {
        return Err(Error::NonPositiveMetric);
    }
    EuclideanStructure::new(g / det.powf(0.25))
}

/// Self-duality defect `max_i ‖*ω_i - ω_i‖` under a structure on 4-space.
pub fn self_duality_defect(t: &HyperTriple, e: &EuclideanStructure) -> Result<f64> {
    let mut worst = 0.0f64;
    for w in &t.omega {
        worst = worst.max((&hodge_star(w, e)? - w).max_abs());
    }
    Ok(worst)
}

/// A fibre-constant check for a sampled family of triples: the spread of the wedge
/// Gram matrices relative to their size, and whether all are positive definite.
pub fn hyperkahler_spread(samples: &[HyperTriple]) -> (bool, f64) {
    let grams: Vec<Matrix3<f64>> = samples.iter().map(wedge_gram).collect();
    let positive = samples.iter().all(|t| is_hypersymplectic(t).hypersymplectic);
    let Some(first) = grams.first() else { return (false, 0.0) };
    let scale = first.abs().max().max(f64::MIN_POSITIVE);
    let spread = grams.iter().map(|g| (g - first).abs().max()).fold(0.0, f64::max) / scale;
    (positive, spread)
}

/// Number of 2-forms on 4-space (used for random sampling).
pub fn two_form_len() -> usize {
    basis(4, 2).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{metric_of, phi0};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mix(rng: &mut ChaCha8Rng, scale: f64) -> Matrix3<f64> {
        Matrix3::identity() + Matrix3::from_fn(|_, _| rng.random_range(-scale..scale))
    }

    #[test]
    fn standard_gram_is_twice_identity() {
        let t = HyperTriple::standard();
        assert_eq!(wedge_gram(&t), Matrix3::identity() * 2.0);
        let c = is_hypersymplectic(&t);
        assert!(c.hypersymplectic && c.margin == 1.0);
        assert_eq!(det13(&t).unwrap().top(), 2.0);
    }

    #[test]
    fn anti_self_dual_fails() {
        let mut t = HyperTriple::standard();
        t.omega[2] = AltForm::monomial(4, &[0, 1]) - AltForm::monomial(4, &[2, 3]);
        assert_eq!(wedge_gram(&t)[(2, 2)], -2.0);
        assert!(!is_hypersymplectic(&t).hypersymplectic);
    }

    #[test]
    fn gram_mixing_and_det13() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = HyperTriple::standard();
        let m = random_mix(&mut rng, 0.3);
        let mixed = t.mix(&m);
        assert!((wedge_gram(&mixed) - m * wedge_gram(&t) * m.transpose()).abs().max() < 1e-13);
        let sl = m / m.determinant().cbrt();
        assert!((det13(&t.mix(&sl)).unwrap().top() - 2.0).abs() < 1e-13);
        assert!((det13(&(t.mix(&(Matrix3::identity() * 3.0)))).unwrap().top() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn standard_theta_mu_matches_star() {
        let t = HyperTriple::standard();
        let tm = theta_mu(&t, 1.0).unwrap();
        assert!((tm.theta + Matrix3::identity()).abs().max() < 1e-15);
        let phi = assemble_phi(&t, 1.0).unwrap();
        assert_eq!(phi, phi0());
        let star = hodge_star(&phi, &metric_of(&phi).unwrap()).unwrap();
        let (theta, mu, rest) = split_four_form(&star).unwrap();
        assert!(rest < 1e-14);
        assert!((mu - tm.mu).abs() < 1e-13, "mu {mu} vs {}", tm.mu);
        for (a, b) in theta.iter().zip(tm.theta_forms(&t).iter()) {
            assert!((a - b).max_abs() < 1e-13);
        }
    }

    #[test]
    fn random_theta_mu_matches_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let a = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.0 } + rng.random_range(-0.4..0.4));
            let t = HyperTriple::standard().mix(&random_mix(&mut rng, 0.4)).pullback(&a).unwrap();
            if !is_hypersymplectic(&t).hypersymplectic {
                continue;
            }
            let lambda = rng.random_range(0.1..10.0);
            let tm = theta_mu(&t, lambda).unwrap();
            let phi = assemble_phi(&t, lambda).unwrap();
            let star = hodge_star(&phi, &metric_of(&phi).unwrap()).unwrap();
            let (theta, mu, rest) = split_four_form(&star).unwrap();
            assert!(rest < 1e-10);
            assert!((mu - tm.mu).abs() < 1e-10 * mu.abs());
            for (x, y) in theta.iter().zip(tm.theta_forms(&t).iter()) {
                assert!((x - y).max_abs() < 1e-10 * y.max_abs());
            }
        }
    }

    #[test]
    fn lambda_homogeneity() {
        let t = HyperTriple::standard();
        let a = theta_mu(&t, 2.0).unwrap();
        let b = theta_mu(&t, 16.0).unwrap();
        assert!((b.theta - a.theta * 2.0).abs().max() < 1e-14);
        assert!((b.mu - a.mu * 0.25).abs() < 1e-15);
    }

    #[test]
    fn standard_s_map_is_quaternionic() {
        // independent quaternion product, R⁴ = H via x0 + x1 i + x2 j + x3 k
        fn qmul(p: [f64; 4], q: [f64; 4]) -> [f64; 4] {
            [
                p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
                p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
                p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
                p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
            ]
        }
        let (i, j, k) = ([0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v: [[f64; 4]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
        let got = s_map(&HyperTriple::standard(), &v);
        let expected = [
            sub4(qmul(j, v[2]), qmul(k, v[1])),
            sub4(qmul(k, v[0]), qmul(i, v[2])),
            sub4(qmul(i, v[1]), qmul(j, v[0])),
        ];
        assert_eq!(got, expected);
    }

    #[test]
    fn s_inverse_round_trip_and_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = HyperTriple::standard();
        let v: [[f64; 4]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
        let back = s_inverse(&t, &s_map(&t, &v)).unwrap();
        for (a, b) in back.iter().flatten().zip(v.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut deg = t.clone();
        deg.omega[2] = AltForm::zero(4, 2);
        assert!(matches!(s_inverse(&deg, &v), Err(Error::Singular { .. })));
    }

    #[test]
    fn sym0_cases() {
        assert_eq!(sym0_project(&Matrix3::identity()), Matrix3::zeros());
        let anti = Matrix3::new(0.0, 1.0, 2.0, -1.0, 0.0, 3.0, -2.0, -3.0, 0.0);
        assert_eq!(sym0_project(&anti), Matrix3::zeros());
        let d = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 0.0));
        assert_eq!(sym0_project(&d), d * 2.0);
        // rank of the linear map on 3×3 matrices is 5
        let m = DMatrix::from_fn(9, 9, |r, c| {
            let mut e = Matrix3::zeros();
            e[(c / 3, c % 3)] = 1.0;
            sym0_project(&e)[(r / 3, r % 3)]
        });
        assert_eq!(m.rank(1e-12), 5);
    }

    #[test]
    fn p_contract_kernel_element() {
        let t = HyperTriple::standard();
        let e = EuclideanStructure::standard(4);
        // *ψ1 = dx0, *ψ2 = -dx3: dx0 ω1 - dx3 ω2 = dx0dx2dx3 - dx3dx0dx2 = 0
        let psi1 = hodge_star(&AltForm::monomial(4, &[0]), &e).unwrap();
        let psi2 = hodge_star(&(-AltForm::monomial(4, &[3])), &e).unwrap();
        // * on 1-forms in 4-space satisfies ** = -1, so undo with a sign
        let psi = [-psi1, -psi2, AltForm::zero(4, 3)];
        let p = p_contract(&psi, &t, &e).unwrap();
        assert!(p.max_abs() < 1e-15);
        // the kernel has dimension 12 - 4 = 8
        let m = DMatrix::from_fn(4, 12, |r, c| {
            let mut ps = [AltForm::zero(4, 3), AltForm::zero(4, 3), AltForm::zero(4, 3)];
            ps[c / 4].coeffs_mut()[c % 4] = 1.0;
            p_contract(&ps, &t, &e).unwrap().coeffs()[r]
        });
        assert_eq!(12 - m.rank(1e-12), 8);
    }

    #[test]
    fn conformal_structure_cases() {
        let t = HyperTriple::standard();
        let e = conformal_structure(&t).unwrap();
        assert!((&e.metric - DMatrix::identity(4, 4)).abs().max() < 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let t2 = t.pullback(&a).unwrap().mix(&random_mix(&mut rng, 0.3));
        if a.determinant() > 0.0 {
            let e2 = conformal_structure(&t2).unwrap();
            assert!(self_duality_defect(&t2, &e2).unwrap() < 1e-10);
            let expected = a.transpose() * &a;
            let expected = &expected / expected.determinant().powf(0.25);
            assert!((&e2.metric - expected).abs().max() < 1e-10);
        }
    }
}

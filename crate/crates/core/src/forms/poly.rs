//! Polynomial-coefficient forms with an exact exterior derivative.

use std::collections::BTreeMap;

use rand::Rng;

use super::basis::{basis, indices};
use super::{contract, hodge_star, is_positive, metric_of, wedge, AltForm};
use crate::error::{Error, Result};

/// Exponent vector, one slot per variable (up to 8).
pub type Exponents = [u8; 8];

/// Real polynomial in `nvars` variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponents, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= 8);
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term([0; 8], c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_term(&mut self, exps: Exponents, c: f64) {
        if c == 0.0 {
            return;
        }
        debug_assert!(exps[self.nvars..].iter().all(|&e| e == 0));
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&exps);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &f64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&x| x as usize).sum()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| c * x.iter().zip(e).map(|(xi, &k)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn partial(&self, var: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut f = *e;
                f[var] -= 1;
                out.add_term(f, c * e[var] as f64);
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Poly, s: f64) {
        for (e, c) in &other.terms {
            self.add_term(*e, s * c);
        }
    }
}

/// A k-form on `R^n` whose coefficients are polynomials in the coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyForm {
    dim: usize,
    degree: usize,
    coeffs: Vec<Poly>,
}

impl PolyForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        PolyForm { dim, degree, coeffs: vec![Poly::zero(dim); basis(dim, degree).len()] }
    }

    /// The constant field equal to `a`.
    pub fn constant(a: &AltForm) -> Self {
        let coeffs = a.coeffs().iter().map(|&c| Poly::constant(a.dim(), c)).collect();
        PolyForm { dim: a.dim(), degree: a.degree(), coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Poly] {
        &mut self.coeffs
    }

    pub fn poly_degree(&self) -> usize {
        self.coeffs.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> AltForm {
        let c = self.coeffs.iter().map(|p| p.eval(x)).collect();
        AltForm::from_coeffs(self.dim, self.degree, c).expect("finite polynomial values")
    }

    pub fn add(&self, other: &PolyForm) -> PolyForm {
        assert_eq!((self.dim, self.degree), (other.dim, other.degree));
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            a.add_scaled(b, 1.0);
        }
        out
    }

    /// Exact exterior derivative `Σ_i dx_i ∧ ∂_i a`.
    pub fn d(&self) -> PolyForm {
        let mut out = PolyForm::zero(self.dim, self.degree + 1);
        let out_basis = basis(self.dim, self.degree + 1);
        for (mask, p) in basis(self.dim, self.degree).masks.iter().zip(&self.coeffs) {
            for i in 0..self.dim {
                if mask & (1 << i) != 0 {
                    continue;
                }
                let dp = p.partial(i);
                if dp.terms.is_empty() {
                    continue;
                }
                let below = (mask & ((1u16 << i) - 1)).count_ones();
                let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                out.coeffs[out_basis.rank(mask | (1 << i))].add_scaled(&dp, sign);
            }
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(Poly::max_abs_coeff).fold(0.0, f64::max)
    }
}

/// Random polynomial k-form: each component gets `terms` monomials of total degree
/// at most `max_degree`, coefficients uniform in `[-amplitude, amplitude]`.
pub fn random_poly_form<R: Rng>(
    rng: &mut R,
    dim: usize,
    degree: usize,
    max_degree: usize,
    terms: usize,
    amplitude: f64,
) -> PolyForm {
    let mut f = PolyForm::zero(dim, degree);
    for p in f.coeffs.iter_mut() {
        for _ in 0..terms {
            let mut e = [0u8; 8];
            let total = rng.random_range(0..=max_degree);
            for _ in 0..total {
                e[rng.random_range(0..dim)] += 1;
            }
            p.add_term(e, rng.random_range(-amplitude..amplitude));
        }
    }
    f
}

/// `φ0 + dη` with η a random polynomial 2-form of degree ≤ 4, so the field is closed
/// with coefficients of degree ≤ 3.
pub fn random_closed_field<R: Rng>(rng: &mut R, amplitude: f64) -> PolyForm {
    let eta = random_poly_form(rng, 7, 2, 4, 4, amplitude);
    PolyForm::constant(&super::phi0()).add(&eta.d())
}

/// `|(v ⌟ φ) ∧ d*φ|` at `p`, with `d*φ` from central differences of step `h`.
/// The field must be closed (checked symbolically) and positive at `p`.
pub fn contraction_identity_residual(field: &PolyForm, v: &[f64], p: &[f64], h: f64) -> Result<f64> {
    if field.dim != 7 || field.degree != 3 {
        return Err(Error::InvalidDegree { dim: field.dim, degree: field.degree });
    }
    if v.len() != 7 || p.len() != 7 {
        return Err(Error::DimensionMismatch { expected: 7, got: v.len().min(p.len()) });
    }
    if !(h > 0.0) {
        return Err(Error::Invalid("step must be positive".into()));
    }
    let dphi = field.d();
    if dphi.max_abs_coeff() > 1e-12 * field.max_abs_coeff().max(1.0) {
        return Err(Error::Invalid("field is not closed".into()));
    }
    let phi_p = field.eval(p);
    let pos = is_positive(&phi_p)?;
    if !pos.positive {
        return Err(Error::NotPositive { margin: pos.margin });
    }
    let star_at = |x: &[f64]| -> Result<AltForm> {
        let phi = field.eval(x);
        hodge_star(&phi, &metric_of(&phi)?)
    };
    let mut dstar = AltForm::zero(7, 5);
    let mut x = p.to_vec();
    for i in 0..7 {
        x[i] = p[i] + h;
        let plus = star_at(&x)?;
        x[i] = p[i] - h;
        let minus = star_at(&x)?;
        x[i] = p[i];
        let deriv = (&plus - &minus) * (0.5 / h);
        dstar = &dstar + &wedge(&AltForm::monomial(7, &[i]), &deriv)?;
    }
    let top = wedge(&contract(v, &phi_p)?, &dstar)?;
    Ok(top.top().abs())
}

/// Iterator helper used by tests: components of a polynomial form as `(indices, poly)`.
pub fn components(f: &PolyForm) -> impl Iterator<Item = (Vec<usize>, &Poly)> {
    basis(f.dim, f.degree).masks.iter().zip(&f.coeffs).map(|(&m, p)| (indices(m).collect(), p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partials_and_eval() {
        let mut p = Poly::zero(2);
        p.add_term([2, 1, 0, 0, 0, 0, 0, 0], 3.0); // 3 x² y
        assert_eq!(p.eval(&[2.0, 5.0]), 60.0);
        assert_eq!(p.partial(0).eval(&[2.0, 5.0]), 60.0);
        assert_eq!(p.partial(1).eval(&[2.0, 5.0]), 12.0);
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn d_squared_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..5 {
            let f = random_poly_form(&mut rng, 7, k, 4, 5, 1.0);
            assert!(f.d().d().max_abs_coeff() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn d_of_coordinate_function() {
        let mut f = PolyForm::zero(3, 0);
        f.coeffs[0].add_term([0, 1, 0, 0, 0, 0, 0, 0], 1.0);
        let df = f.d();
        assert_eq!(df.eval(&[0.3, 0.1, 0.2]), AltForm::monomial(3, &[1]));
    }

    #[test]
    fn closed_fields_have_degree_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_closed_field(&mut rng, 0.05);
        assert!(f.poly_degree() <= 3);
        assert!(f.d().max_abs_coeff() < 1e-12);
    }

    #[test]
    fn constant_field_residual_vanishes() {
        let f = PolyForm::constant(&crate::forms::phi0());
        let r = contraction_identity_residual(&f, &[1.0, 0.5, 0.0, 0.0, 0.2, 0.0, 0.1], &[0.1; 7], 1e-2).unwrap();
        assert!(r < 1e-14);
    }

    #[test]
    fn rejects_nonclosed_and_nonpositive() {
        let mut f = PolyForm::constant(&crate::forms::phi0());
        f.coeffs[0].add_term([0, 0, 0, 1, 0, 0, 0, 0], 1.0); // x3 dx0dx1dx2
        assert!(contraction_identity_residual(&f, &[1.0; 7], &[0.0; 7], 1e-2).is_err());
        let z = PolyForm::zero(7, 3);
        assert!(matches!(contraction_identity_residual(&z, &[1.0; 7], &[0.0; 7], 1e-2), Err(Error::NotPositive { .. })));
    }
}

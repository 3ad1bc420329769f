//! Exterior algebra on oriented n-space (n ≤ 8) and positive 3-forms on 7-space.
//!
//! Forms store one coefficient per strictly increasing index tuple, ordered by
//! lexicographic (combinatorial) rank. Seven-space uses coordinates
//! `(x0, x1, x2, x3, t1, t2, t3)` and is oriented by `-dt1 dt2 dt3 dx0 dx1 dx2 dx3`,
//! which equals `-e^{0123456}`; every other dimension uses `e^{01..n-1}`.

pub mod basis;
pub mod poly;

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use basis::{basis, canonicalize, indices, merge_sign, MAX_DIM};

pub use poly::{contraction_identity_residual, Poly, PolyForm};

/// Alternating k-form on oriented n-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawForm")]
pub struct AltForm {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawForm {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<RawForm> for AltForm {
    type Error = Error;
    fn try_from(r: RawForm) -> Result<Self> {
        AltForm::from_coeffs(r.dim, r.degree, r.coeffs)
    }
}

fn check_shape(dim: usize, degree: usize) -> Result<()> {
    if dim > MAX_DIM || degree > dim {
        return Err(Error::InvalidDegree { dim, degree });
    }
    Ok(())
}

impl AltForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        check_shape(dim, degree).expect("form shape");
        AltForm { dim, degree, coeffs: vec![0.0; basis(dim, degree).len()] }
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_shape(dim, degree)?;
        let expected = basis(dim, degree).len();
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite coefficient".into()));
        }
        Ok(AltForm { dim, degree, coeffs })
    }

    /// The scalar 0-form.
    pub fn scalar(dim: usize, value: f64) -> Self {
        AltForm { dim, degree: 0, coeffs: vec![value] }
    }

    /// `dx_{i1} ∧ ... ∧ dx_{ik}` for an arbitrary index sequence (signed, possibly zero).
    pub fn monomial(dim: usize, idx: &[usize]) -> Self {
        let mut f = AltForm::zero(dim, idx.len());
        f.add_component(idx, 1.0);
        f
    }

    /// Standard volume form `e^{01..n-1}`.
    pub fn volume(dim: usize) -> Self {
        let idx: Vec<usize> = (0..dim).collect();
        AltForm::monomial(dim, &idx)
    }

    /// Sign of the standard orientation relative to `e^{01..n-1}`.
    pub fn orientation_sign(dim: usize) -> f64 {
        if dim == 7 {
            -1.0
        } else {
            1.0
        }
    }

    /// The orientation n-form of the module conventions.
    pub fn orientation(dim: usize) -> Self {
        AltForm::volume(dim) * AltForm::orientation_sign(dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Signed coefficient of an arbitrary index sequence.
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.degree);
        match canonicalize(idx) {
            Some((mask, sign)) => sign * self.coeffs[basis(self.dim, self.degree).rank(mask)],
            None => 0.0,
        }
    }

    /// Adds `value · dx_{idx}`; permuted indices are folded in with their sign.
    pub fn add_component(&mut self, idx: &[usize], value: f64) {
        assert_eq!(idx.len(), self.degree);
        assert!(idx.iter().all(|&i| i < self.dim), "index out of range");
        if let Some((mask, sign)) = canonicalize(idx) {
            let r = basis(self.dim, self.degree).rank(mask);
            self.coeffs[r] += sign * value;
        }
    }

    /// Iterates `(mask, coefficient)` over the canonical basis.
    pub fn terms(&self) -> impl Iterator<Item = (u16, f64)> + '_ {
        basis(self.dim, self.degree).masks.iter().copied().zip(self.coeffs.iter().copied())
    }

    /// Coefficient of the top-degree form `e^{01..n-1}`.
    pub fn top(&self) -> f64 {
        assert_eq!(self.degree, self.dim);
        self.coeffs[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn same_shape(&self, other: &AltForm) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.degree != other.degree {
            return Err(Error::InvalidDegree { dim: self.dim, degree: other.degree });
        }
        Ok(())
    }

    /// Evaluates the form on `degree` vectors.
    pub fn evaluate(&self, vectors: &[&[f64]]) -> f64 {
        assert_eq!(vectors.len(), self.degree);
        let k = self.degree;
        let mut total = 0.0;
        for (mask, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            let rows: Vec<usize> = indices(mask).collect();
            let m = DMatrix::from_fn(k, k, |r, s| vectors[s][rows[r]]);
            total += c * if k == 0 { 1.0 } else { m.determinant() };
        }
        total
    }

    /// Pullback under the linear map `a` (columns are images of basis vectors).
    pub fn pullback(&self, a: &DMatrix<f64>) -> Result<AltForm> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: a.nrows() });
        }
        let cols: Vec<Vec<f64>> = (0..self.dim).map(|j| a.column(j).iter().copied().collect()).collect();
        let mut out = AltForm::zero(self.dim, self.degree);
        for (r, &mask) in basis(self.dim, self.degree).masks.iter().enumerate() {
            let vs: Vec<&[f64]> = indices(mask).map(|j| cols[j].as_slice()).collect();
            out.coeffs[r] = self.evaluate(&vs);
        }
        Ok(out)
    }

    /// Re-indexes into a larger space, sending coordinate `i` to `map[i]`.
    pub fn embed(&self, dim: usize, map: &[usize]) -> AltForm {
        assert_eq!(map.len(), self.dim);
        let mut out = AltForm::zero(dim, self.degree);
        for (mask, c) in self.terms() {
            if c != 0.0 {
                let idx: Vec<usize> = indices(mask).map(|i| map[i]).collect();
                out.add_component(&idx, c);
            }
        }
        out
    }

    /// Restricts to the coordinates listed in `coords` (a pullback by inclusion).
    pub fn restrict(&self, coords: &[usize]) -> AltForm {
        let mut out = AltForm::zero(coords.len(), self.degree);
        for (r, &mask) in basis(coords.len(), self.degree).masks.iter().enumerate() {
            let idx: Vec<usize> = indices(mask).map(|i| coords[i]).collect();
            out.coeffs[r] = self.get(&idx);
        }
        out
    }
}

impl Add for &AltForm {
    type Output = AltForm;
    fn add(self, rhs: &AltForm) -> AltForm {
        self.same_shape(rhs).expect("form shapes");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        AltForm { dim: self.dim, degree: self.degree, coeffs }
    }
}

impl Add for AltForm {
    type Output = AltForm;
    fn add(self, rhs: AltForm) -> AltForm {
        &self + &rhs
    }
}

impl Sub for &AltForm {
    type Output = AltForm;
    fn sub(self, rhs: &AltForm) -> AltForm {
        self + &(-rhs)
    }
}

impl Sub for AltForm {
    type Output = AltForm;
    fn sub(self, rhs: AltForm) -> AltForm {
        &self - &rhs
    }
}

impl Neg for &AltForm {
    type Output = AltForm;
    fn neg(self) -> AltForm {
        self * -1.0
    }
}

impl Neg for AltForm {
    type Output = AltForm;
    fn neg(self) -> AltForm {
        &self * -1.0
    }
}

impl Mul<f64> for &AltForm {
    type Output = AltForm;
    fn mul(self, s: f64) -> AltForm {
        AltForm { dim: self.dim, degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }
}

impl Mul<f64> for AltForm {
    type Output = AltForm;
    fn mul(self, s: f64) -> AltForm {
        &self * s
    }
}

/// Exterior product.
pub fn wedge(a: &AltForm, b: &AltForm) -> Result<AltForm> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, got: b.dim });
    }
    let degree = a.degree + b.degree;
    if degree > a.dim {
        return Err(Error::InvalidDegree { dim: a.dim, degree });
    }
    let out_basis = basis(a.dim, degree);
    let mut coeffs = vec![0.0; out_basis.len()];
    for (ma, ca) in a.terms() {
        if ca == 0.0 {
            continue;
        }
        for (mb, cb) in b.terms() {
            if cb == 0.0 || ma & mb != 0 {
                continue;
            }
            coeffs[out_basis.rank(ma | mb)] += merge_sign(ma, mb) * ca * cb;
        }
    }
    Ok(AltForm { dim: a.dim, degree, coeffs })
}

/// Interior product `v ⌟ a`.
pub fn contract(v: &[f64], a: &AltForm) -> Result<AltForm> {
    if v.len() != a.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, got: v.len() });
    }
    if a.degree == 0 {
        return Err(Error::InvalidDegree { dim: a.dim, degree: 0 });
    }
    let out_basis = basis(a.dim, a.degree - 1);
    let mut coeffs = vec![0.0; out_basis.len()];
    for (mask, c) in a.terms() {
        if c == 0.0 {
            continue;
        }
        for i in indices(mask) {
            if v[i] == 0.0 {
                continue;
            }
            let below = (mask & ((1u16 << i) - 1)).count_ones();
            let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[out_basis.rank(mask & !(1 << i))] += sign * v[i] * c;
        }
    }
    Ok(AltForm { dim: a.dim, degree: a.degree - 1, coeffs })
}

/// A metric together with the positive multiple of the orientation form used as volume.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanStructure {
    pub metric: DMatrix<f64>,
    pub volume: f64,
}

impl EuclideanStructure {
    /// Riemannian structure whose volume is the metric volume `sqrt(det g)`.
    pub fn new(metric: DMatrix<f64>) -> Result<Self> {
        let s = Self::check(metric)?;
        let volume = s.determinant().sqrt();
        Ok(EuclideanStructure { metric: s, volume })
    }

    pub fn with_volume(metric: DMatrix<f64>, volume: f64) -> Result<Self> {
        if !(volume > 0.0) {
            return Err(Error::Invalid("volume must be positive".into()));
        }
        Ok(EuclideanStructure { metric: Self::check(metric)?, volume })
    }

    pub fn standard(dim: usize) -> Self {
        EuclideanStructure { metric: DMatrix::identity(dim, dim), volume: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    fn check(metric: DMatrix<f64>) -> Result<DMatrix<f64>> {
        if !metric.is_square() {
            return Err(Error::DimensionMismatch { expected: metric.nrows(), got: metric.ncols() });
        }
        let asym = (&metric - metric.transpose()).abs().max();
        if asym > 1e-12 * metric.abs().max().max(1.0) {
            return Err(Error::Invalid("metric is not symmetric".into()));
        }
        if linalg::min_eigenvalue(&metric) <= 0.0 {
            return Err(Error::NonPositiveMetric);
        }
        Ok(metric)
    }

    /// The k-th compound of the inverse metric, the Gram matrix of k-forms.
    pub fn form_gram(&self, k: usize) -> DMatrix<f64> {
        let n = self.dim();
        let inv = self.metric.clone().try_inverse().expect("positive metric is invertible");
        let b = basis(n, k);
        let sets: Vec<Vec<usize>> = b.masks.iter().map(|&m| indices(m).collect()).collect();
        DMatrix::from_fn(b.len(), b.len(), |r, s| {
            if k == 0 {
                return 1.0;
            }
            DMatrix::from_fn(k, k, |i, j| inv[(sets[r][i], sets[s][j])]).determinant()
        })
    }

    pub fn inner(&self, a: &AltForm, b: &AltForm) -> Result<f64> {
        a.same_shape(b)?;
        if a.dim != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: a.dim });
        }
        let g = self.form_gram(a.degree);
        let va = nalgebra::DVector::from_column_slice(&a.coeffs);
        let vb = nalgebra::DVector::from_column_slice(&b.coeffs);
        Ok(va.dot(&(&g * vb)))
    }

    pub fn norm_sq(&self, a: &AltForm) -> Result<f64> {
        self.inner(a, a)
    }

    /// The volume form `volume · orientation`.
    pub fn volume_form(&self) -> AltForm {
        AltForm::orientation(self.dim()) * self.volume
    }
}

/// Hodge star, characterised by `a ∧ *b = <a, b> vol`.
pub fn hodge_star(a: &AltForm, e: &EuclideanStructure) -> Result<AltForm> {
    let n = a.dim;
    if e.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: e.dim() });
    }
    let k = a.degree;
    let g = e.form_gram(k);
    let raised = &g * nalgebra::DVector::from_column_slice(&a.coeffs);
    let full: u16 = ((1u32 << n) - 1) as u16;
    let scale = e.volume * AltForm::orientation_sign(n);
    let out_basis = basis(n, n - k);
    let mut coeffs = vec![0.0; out_basis.len()];
    for (r, &mask) in basis(n, k).masks.iter().enumerate() {
        let comp = full & !mask;
        coeffs[out_basis.rank(comp)] += scale * merge_sign(mask, comp) * raised[r];
    }
    Ok(AltForm { dim: n, degree: n - k, coeffs })
}

fn check_three_form(phi: &AltForm) -> Result<()> {
    if phi.dim != 7 {
        return Err(Error::DimensionMismatch { expected: 7, got: phi.dim });
    }
    if phi.degree != 3 {
        return Err(Error::InvalidDegree { dim: 7, degree: phi.degree });
    }
    Ok(())
}

/// The 7-form valued quadratic form `G(v, w) Ω = (v⌟φ) ∧ (w⌟φ) ∧ φ`, read against the
/// orientation form `Ω`. Not normalised.
pub fn gphi(phi: &AltForm) -> Result<DMatrix<f64>> {
    check_three_form(phi)?;
    let hooks: Vec<AltForm> = (0..7)
        .map(|a| {
            let mut e = [0.0; 7];
            e[a] = 1.0;
            contract(&e, phi)
        })
        .collect::<Result<_>>()?;
    let sign = AltForm::orientation_sign(7);
    let mut g = DMatrix::zeros(7, 7);
    for a in 0..7 {
        for b in a..7 {
            let val = sign * wedge(&wedge(&hooks[a], &hooks[b])?, phi)?.top();
            g[(a, b)] = val;
            g[(b, a)] = val;
        }
    }
    Ok(g)
}

/// Positivity verdict with the smallest eigenvalue of `G / ‖G‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Positivity {
    pub positive: bool,
    pub margin: f64,
}

pub fn is_positive(phi: &AltForm) -> Result<Positivity> {
    let g = gphi(phi)?;
    let ev = linalg::sym_eigenvalues(&g);
    let scale = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Ok(Positivity { positive: false, margin: 0.0 });
    }
    let margin = ev[0] / scale;
    Ok(Positivity { positive: margin > 0.0, margin })
}

/// The metric of a positive 3-form, normalised so that `|φ|² = 7`.
pub fn metric_of(phi: &AltForm) -> Result<EuclideanStructure> {
    let g = gphi(phi)?;
    let margin = linalg::min_eigenvalue(&g);
    if margin <= 0.0 {
        return Err(Error::NotPositive { margin });
    }
    // Trial structure: G itself. A 3-form's squared norm scales like s^-3 under
    // g -> s g, so s = (|φ|²_G / 7)^(1/3) lands on |φ|² = 7.
    let trial = EuclideanStructure::new(g.clone())?;
    let norm_sq = trial.norm_sq(phi)?;
    let s = (norm_sq / 7.0).cbrt();
    EuclideanStructure::new(g * s)
}

/// A linear subspace given by a full-rank basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    pub fn new(ambient_dim: usize, basis: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(v) = basis.iter().find(|v| v.len() != ambient_dim) {
            return Err(Error::DimensionMismatch { expected: ambient_dim, got: v.len() });
        }
        let m = DMatrix::from_fn(ambient_dim, basis.len(), |i, j| basis[j][i]);
        let rank = m.rank(1e-12 * m.abs().max().max(f64::MIN_POSITIVE));
        if rank < basis.len() {
            return Err(Error::RankDeficient { rank, expected: basis.len() });
        }
        Ok(Subspace { ambient_dim, basis })
    }

    /// Span of coordinate axes.
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Result<Self> {
        let basis = axes
            .iter()
            .map(|&a| {
                let mut v = vec![0.0; ambient_dim];
                v[a] = 1.0;
                v
            })
            .collect();
        Subspace::new(ambient_dim, basis)
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoassociativeReport {
    pub coassociative: bool,
    pub residual: f64,
}

/// Checks that `φ` restricts to zero on a 4-dimensional subspace.
pub fn coassociative_check(phi: &AltForm, v: &Subspace) -> Result<CoassociativeReport> {
    check_three_form(phi)?;
    if v.basis.len() != 4 {
        return Err(Error::RankDeficient { rank: v.basis.len(), expected: 4 });
    }
    let mut residual = 0.0f64;
    for a in 0..4 {
        for b in a + 1..4 {
            for c in b + 1..4 {
                let val = phi.evaluate(&[&v.basis[a], &v.basis[b], &v.basis[c]]);
                residual = residual.max(val.abs());
            }
        }
    }
    let scale = phi.max_abs() * v.basis.iter().map(|b| b.iter().fold(0.0f64, |m, x| m.max(x.abs()))).fold(0.0, f64::max).powi(3);
    Ok(CoassociativeReport { coassociative: residual <= 1e-10 * scale.max(1e-300), residual })
}

/// The self-dual basis `ω_i = dx0 dx_i + dx_j dx_k` on 4-space, `(i, j, k)` cyclic.
pub fn standard_triple_forms() -> [AltForm; 3] {
    let om = |i: usize, j: usize, k: usize| {
        let mut w = AltForm::zero(4, 2);
        w.add_component(&[0, i], 1.0);
        w.add_component(&[j, k], 1.0);
        w
    };
    [om(1, 2, 3), om(2, 3, 1), om(3, 1, 2)]
}

/// Coordinate map of 4-space into `(x0..x3, t1, t2, t3)`.
pub const X_COORDS: [usize; 4] = [0, 1, 2, 3];
/// Indices of `t1, t2, t3` in seven-space.
pub const T_COORDS: [usize; 3] = [4, 5, 6];

/// The model form `φ0 = Σ ω_i dt_i - dt1 dt2 dt3`.
pub fn phi0() -> AltForm {
    let mut phi = AltForm::zero(7, 3);
    for (i, w) in standard_triple_forms().iter().enumerate() {
        let w7 = w.embed(7, &X_COORDS);
        phi = &phi + &wedge(&w7, &AltForm::monomial(7, &[T_COORDS[i]])).unwrap();
    }
    phi.add_component(&T_COORDS, -1.0);
    phi
}

//! The even unimodular lattice `II(3,19) = U³ ⊕ E8(-1)²`.
//!
//! Coordinates: `(e1, f1, e2, f2, e3, f3, a1..a8, b1..b8)` where each `U` block has
//! Gram `[[0,1],[1,0]]` and each E8 block is minus the Cartan matrix of the diagram
//! with chain `0-1-2-3-4-5-6` and node 7 attached to node 4.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub const RANK: usize = 22;

/// Integer class in the lattice basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(pub [i64; RANK]);

impl LatticeVector {
    pub fn zero() -> Self {
        LatticeVector([0; RANK])
    }

    pub fn unit(i: usize) -> Self {
        let mut v = [0; RANK];
        v[i] = 1;
        LatticeVector(v)
    }

    pub fn height(&self) -> i64 {
        self.0.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.0.iter().map(|&x| x as f64).collect()
    }

    pub fn neg(&self) -> Self {
        LatticeVector(self.0.map(|x| -x))
    }

    pub fn add(&self, o: &Self) -> Self {
        LatticeVector(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }

    pub fn scale(&self, s: i64) -> Self {
        LatticeVector(self.0.map(|x| s * x))
    }
}

/// A block of the orthogonal decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    U(usize),
    E8(usize),
}

impl Block {
    pub const ALL: [Block; 5] = [Block::U(0), Block::U(1), Block::U(2), Block::E8(0), Block::E8(1)];

    pub fn range(self) -> std::ops::Range<usize> {
        match self {
            Block::U(i) => 2 * i..2 * i + 2,
            Block::E8(i) => 6 + 8 * i..14 + 8 * i,
        }
    }
}

/// Cartan matrix of E8 (positive definite, even).
pub fn e8_cartan() -> [[i64; 8]; 8] {
    let mut c = [[0i64; 8]; 8];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = 2;
    }
    let mut link = |a: usize, b: usize| {
        c[a][b] = -1;
        c[b][a] = -1;
    };
    for i in 0..6 {
        link(i, i + 1);
    }
    link(4, 7);
    c
}

/// Integer Gram matrix of the full lattice.
pub fn gram() -> &'static [[i64; RANK]; RANK] {
    static G: OnceLock<[[i64; RANK]; RANK]> = OnceLock::new();
    G.get_or_init(|| {
        let mut g = [[0i64; RANK]; RANK];
        for u in 0..3 {
            g[2 * u][2 * u + 1] = 1;
            g[2 * u + 1][2 * u] = 1;
        }
        let c = e8_cartan();
        for f in 0..2 {
            let o = 6 + 8 * f;
            for i in 0..8 {
                for j in 0..8 {
                    g[o + i][o + j] = -c[i][j];
                }
            }
        }
        g
    })
}

pub fn gram_matrix() -> DMatrix<f64> {
    DMatrix::from_fn(RANK, RANK, |i, j| gram()[i][j] as f64)
}

/// Pairing of integer classes, exact.
pub fn pairing_int(v: &LatticeVector, w: &LatticeVector) -> i64 {
    let g = gram();
    let mut s = 0;
    for i in 0..RANK {
        if v.0[i] == 0 {
            continue;
        }
        for j in 0..RANK {
            s += v.0[i] * g[i][j] * w.0[j];
        }
    }
    s
}

fn check_len(v: &[f64]) -> Result<()> {
    if v.len() != RANK {
        return Err(Error::DimensionMismatch { expected: RANK, got: v.len() });
    }
    Ok(())
}

/// Pairing of real classes.
pub fn pairing(v: &[f64], w: &[f64]) -> Result<f64> {
    check_len(v)?;
    check_len(w)?;
    let g = gram();
    let mut s = 0.0;
    for i in 0..RANK {
        for j in 0..RANK {
            if g[i][j] != 0 {
                s += v[i] * g[i][j] as f64 * w[j];
            }
        }
    }
    Ok(s)
}

/// Signature `(positive, negative, zero)` by exact rational congruence diagonalisation.
pub fn exact_signature(m: &[Vec<i64>]) -> (usize, usize, usize) {
    let n = m.len();
    let mut a: Vec<Vec<Ratio<i128>>> =
        m.iter().map(|r| r.iter().map(|&x| Ratio::from_integer(x as i128)).collect()).collect();
    let zero = Ratio::from_integer(0);
    let (mut pos, mut neg) = (0, 0);
    let mut active: Vec<usize> = (0..n).collect();
    while let Some(&k0) = active.first() {
        let pivot = active.iter().copied().find(|&k| a[k][k] != zero);
        let k = match pivot {
            Some(k) => k,
            None => {
                // all diagonal zero: combine k0 with some j where a[k0][j] != 0
                match active.iter().copied().find(|&j| a[k0][j] != zero) {
                    Some(j) => {
                        // row/col k0 += row/col j
                        for c in 0..n {
                            let v = a[j][c];
                            a[k0][c] += v;
                        }
                        for r in 0..n {
                            let v = a[r][j];
                            a[r][k0] += v;
                        }
                        k0
                    }
                    None => {
                        active.retain(|&x| x != k0);
                        continue;
                    }
                }
            }
        };
        let p = a[k][k];
        if p > zero {
            pos += 1;
        } else {
            neg += 1;
        }
        active.retain(|&x| x != k);
        for &i in &active {
            let f = a[i][k] / p;
            if f == zero {
                continue;
            }
            for &j in &active {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
            a[i][k] = zero;
            a[k][i] = zero;
        }
    }
    (pos, neg, n - pos - neg)
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn exact_determinant(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

pub fn gram_rows() -> Vec<Vec<i64>> {
    gram().iter().map(|r| r.to_vec()).collect()
}

/// The 240 roots of E8 in simple-root coordinates, from the Weyl orbit of the simple roots.
pub fn e8_roots() -> &'static [[i64; 8]] {
    static R: OnceLock<Vec<[i64; 8]>> = OnceLock::new();
    R.get_or_init(|| {
        let c = e8_cartan();
        let mut seen: BTreeSet<[i64; 8]> = BTreeSet::new();
        let mut frontier: Vec<[i64; 8]> = (0..8)
            .map(|i| {
                let mut e = [0; 8];
                e[i] = 1;
                e
            })
            .collect();
        seen.extend(frontier.iter().copied());
        while let Some(x) = frontier.pop() {
            for i in 0..8 {
                let coef: i64 = (0..8).map(|j| x[j] * c[j][i]).sum();
                let mut y = x;
                y[i] -= coef;
                if seen.insert(y) {
                    frontier.push(y);
                }
            }
        }
        seen.into_iter().collect()
    })
}

/// Enumerates integer vectors with `xᵀ Q x ≤ bound` for positive definite `Q`, also
/// restricted to `|x_i| ≤ height`.
pub fn fincke_pohst(q: &DMatrix<f64>, bound: f64, height: i64) -> Result<Vec<Vec<i64>>> {
    let n = q.nrows();
    let chol = q.clone().cholesky().ok_or(Error::NonPositiveMetric)?;
    let r = chol.l().transpose();
    // Q(x) = Σ_i d_i (x_i + Σ_{j>i} u_ij x_j)²
    let d: Vec<f64> = (0..n).map(|i| r[(i, i)] * r[(i, i)]).collect();
    let u = DMatrix::from_fn(n, n, |i, j| if j > i { r[(i, j)] / r[(i, i)] } else { 0.0 });
    let slack = 1e-9 * bound.abs().max(1.0);
    let mut out = Vec::new();
    let mut x = vec![0i64; n];
    fn rec(
        i: usize,
        remaining: f64,
        x: &mut Vec<i64>,
        d: &[f64],
        u: &DMatrix<f64>,
        slack: f64,
        height: i64,
        out: &mut Vec<Vec<i64>>,
    ) {
        let n = d.len();
        let center: f64 = -(i + 1..n).map(|j| u[(i, j)] * x[j] as f64).sum::<f64>();
        let radius = ((remaining + slack).max(0.0) / d[i]).sqrt();
        let lo = ((center - radius).ceil() as i64).max(-height);
        let hi = ((center + radius).floor() as i64).min(height);
        for v in lo..=hi {
            x[i] = v;
            let t = v as f64 - center;
            let rem = remaining - d[i] * t * t;
            if rem < -slack {
                continue;
            }
            if i == 0 {
                out.push(x.clone());
            } else {
                rec(i - 1, rem, x, d, u, slack, height, out);
            }
        }
        x[i] = 0;
    }
    if n > 0 {
        rec(n - 1, bound, &mut x, &d, &u, slack, height, &mut out);
    }
    Ok(out)
}

/// A height-truncated list of −2 classes with a description of what was scanned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinusTwoScan {
    pub height_bound: i64,
    pub domain: String,
    pub vectors: Vec<LatticeVector>,
}

fn embed_block(block: Block, coords: &[i64]) -> LatticeVector {
    let mut v = LatticeVector::zero();
    for (slot, &c) in block.range().zip(coords) {
        v.0[slot] = c;
    }
    v
}

/// −2 classes supported on the listed blocks with height at most `height_bound`.
///
/// Scanned domain: every vector of the U-blocks with height ≤ bound (exhaustive),
/// the roots of each listed E8(−1) block, and `u + r` with `u` a nonzero null
/// vector of a single listed U block and `r` a root of a listed E8(−1) block.
pub fn minus_two_classes_in(blocks: &[Block], height_bound: i64) -> MinusTwoScan {
    let us: Vec<usize> = blocks.iter().filter_map(|b| if let Block::U(i) = b { Some(*i) } else { None }).collect();
    let es: Vec<usize> = blocks.iter().filter_map(|b| if let Block::E8(i) = b { Some(*i) } else { None }).collect();
    let domain = format!(
        "height<={height_bound}; exhaustive on U blocks {us:?}; roots of E8(-1) blocks {es:?}; single-U null + root"
    );
    let mut found: BTreeSet<LatticeVector> = BTreeSet::new();
    if height_bound >= 1 {
        let n = height_bound;
        let width = (2 * n + 1) as usize;
        let total = width.pow(2 * us.len() as u32);
        let u_hits: Vec<LatticeVector> = (0..total)
            .into_par_iter()
            .filter_map(|mut code| {
                let mut v = LatticeVector::zero();
                let mut q = 0;
                for &u in &us {
                    let e = (code % width) as i64 - n;
                    code /= width;
                    let f = (code % width) as i64 - n;
                    code /= width;
                    v.0[2 * u] = e;
                    v.0[2 * u + 1] = f;
                    q += 2 * e * f;
                }
                (q == -2).then_some(v)
            })
            .collect();
        found.extend(u_hits);
        let roots: Vec<LatticeVector> = es
            .iter()
            .flat_map(|&e| e8_roots().iter().map(move |r| embed_block(Block::E8(e), r)))
            .filter(|v| v.height() <= n)
            .collect();
        found.extend(roots.iter().copied());
        for &u in &us {
            for a in -n..=n {
                for (e, f) in [(a, 0), (0, a)] {
                    if a == 0 || (e == 0 && f == 0) {
                        continue;
                    }
                    let null = embed_block(Block::U(u), &[e, f]);
                    for r in &roots {
                        let v = null.add(r);
                        if v.height() <= n {
                            found.insert(v);
                        }
                    }
                }
            }
        }
    }
    MinusTwoScan { height_bound, domain, vectors: found.into_iter().collect() }
}

/// −2 classes over the whole lattice within the scanned domain.
pub fn minus_two_classes(height_bound: i64) -> MinusTwoScan {
    minus_two_classes_in(&Block::ALL, height_bound)
}

/// `τ(v) = v + (δ, v) δ + λ δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionDatum {
    pub delta: LatticeVector,
    pub shift: f64,
}

impl ReflectionDatum {
    pub fn new(delta: LatticeVector, shift: f64) -> Result<Self> {
        let s = pairing_int(&delta, &delta);
        if s != -2 {
            return Err(Error::NotMinusTwo(s));
        }
        Ok(ReflectionDatum { delta, shift })
    }

    fn validate(&self) -> Result<()> {
        let s = pairing_int(&self.delta, &self.delta);
        if s != -2 {
            return Err(Error::NotMinusTwo(s));
        }
        Ok(())
    }
}

pub fn reflect(r: &ReflectionDatum, v: &[f64]) -> Result<Vec<f64>> {
    r.validate()?;
    let d = r.delta.to_real();
    let c = pairing(&d, v)? + r.shift;
    Ok(v.iter().zip(&d).map(|(x, y)| x + c * y).collect())
}

/// Linear part of the reflection on integer classes, exact.
pub fn reflect_int(delta: &LatticeVector, v: &LatticeVector) -> Result<LatticeVector> {
    let s = pairing_int(delta, delta);
    if s != -2 {
        return Err(Error::NotMinusTwo(s));
    }
    Ok(v.add(&delta.scale(pairing_int(delta, v))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveCheck {
    pub positive: bool,
    /// Eigenvalues of the Gram matrix of the basis, ascending.
    pub eigenvalues: Vec<f64>,
}

pub fn basis_gram(basis: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let k = basis.len();
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let p = pairing(&basis[i], &basis[j])?;
            m[(i, j)] = p;
            m[(j, i)] = p;
        }
    }
    Ok(m)
}

pub fn positive_subspace_check(basis: &[Vec<f64>]) -> Result<PositiveCheck> {
    if basis.is_empty() || basis.len() > 3 {
        return Err(Error::RankDeficient { rank: basis.len(), expected: 3 });
    }
    for b in basis {
        check_len(b)?;
    }
    let m = DMatrix::from_fn(RANK, basis.len(), |i, j| basis[j][i]);
    let rank = m.rank(1e-12 * m.abs().max().max(f64::MIN_POSITIVE));
    if rank < basis.len() {
        return Err(Error::RankDeficient { rank, expected: basis.len() });
    }
    let eigenvalues = linalg::sym_eigenvalues(&basis_gram(basis)?);
    Ok(PositiveCheck { positive: eigenvalues[0] > 0.0, eigenvalues })
}

/// Default orthogonality tolerance for a basis: `1e-8` times its largest entry.
pub fn default_tolerance(basis: &[Vec<f64>]) -> f64 {
    1e-8 * basis.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0)
}

/// −2 classes of height ≤ bound with `|(δ, b_i)| ≤ tol` for each basis vector.
///
/// For a positive 3-plane and finite tol this is complete within the height bound:
/// the majorant `Q'(x) = -(x,x) + 2|p(x)|²`, `p` the projection to the plane, is
/// positive definite and bounded by `2 + 6 tol² / λ_min` on candidates, so a
/// short-vector enumeration finds them all. Otherwise the height-bounded list of
/// [`minus_two_classes`] is filtered.
pub fn orthogonal_roots(basis: &[Vec<f64>], height_bound: i64, tol: f64) -> Result<MinusTwoScan> {
    for b in basis {
        check_len(b)?;
    }
    let orth = |v: &LatticeVector| -> bool {
        let r = v.to_real();
        basis.iter().all(|b| pairing(&r, b).map(|p| p.abs() <= tol).unwrap_or(false))
    };
    let positive_plane = basis.len() == 3 && positive_subspace_check(basis).map(|c| c.positive).unwrap_or(false);
    if tol.is_finite() && positive_plane && height_bound >= 1 {
        let gm = gram_matrix();
        let bmat = DMatrix::from_fn(RANK, 3, |i, j| basis[j][i]);
        let m = basis_gram(basis)?;
        let minv = m.clone().try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
        let gb = &gm * &bmat;
        let major = -&gm + &gb * &minv * gb.transpose() * 2.0;
        let lam = linalg::min_eigenvalue(&m);
        let bound = 2.0 + 6.0 * tol * tol / lam;
        let cands = fincke_pohst(&major, bound, height_bound)?;
        let mut vectors: Vec<LatticeVector> = cands
            .into_iter()
            .map(|c| LatticeVector(c.try_into().expect("rank 22")))
            .filter(|v| pairing_int(v, v) == -2 && orth(v))
            .collect();
        vectors.sort();
        return Ok(MinusTwoScan {
            height_bound,
            domain: format!("height<={height_bound}; complete short-vector search, tol={tol:e}"),
            vectors,
        });
    }
    let scan = minus_two_classes(height_bound);
    let vectors = scan.vectors.into_iter().filter(|v| orth(v)).collect();
    Ok(MinusTwoScan { height_bound, domain: scan.domain, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_and_determinant() {
        let rows = gram_rows();
        assert_eq!(exact_signature(&rows), (3, 19, 0));
        assert_eq!(exact_determinant(&rows).abs(), 1);
        let c: Vec<Vec<i64>> = e8_cartan().iter().map(|r| r.to_vec()).collect();
        assert_eq!(exact_determinant(&c), 1);
        assert_eq!(exact_signature(&c), (8, 0, 0));
    }

    #[test]
    fn u_pairings() {
        let e = LatticeVector::unit(0);
        let f = LatticeVector::unit(1);
        assert_eq!(pairing_int(&e, &f), 1);
        let d = e.add(&f.neg());
        assert_eq!(pairing_int(&d, &d), -2);
    }

    #[test]
    fn e8_root_count_and_norm() {
        let roots = e8_roots();
        assert_eq!(roots.len(), 240);
        for r in roots {
            let v = embed_block(Block::E8(1), r);
            assert_eq!(pairing_int(&v, &v), -2);
        }
    }

    #[test]
    fn e8_roots_match_short_vector_search() {
        let c = DMatrix::from_fn(8, 8, |i, j| e8_cartan()[i][j] as f64);
        let short = fincke_pohst(&c, 2.0, i64::MAX / 4).unwrap();
        let nonzero: BTreeSet<Vec<i64>> = short.into_iter().filter(|x| x.iter().any(|&v| v != 0)).collect();
        let orbit: BTreeSet<Vec<i64>> = e8_roots().iter().map(|r| r.to_vec()).collect();
        assert_eq!(nonzero, orbit);
    }

    #[test]
    fn minus_two_small_cases() {
        let u = minus_two_classes_in(&[Block::U(0)], 1);
        let expected = vec![embed_block(Block::U(0), &[-1, 1]), embed_block(Block::U(0), &[1, -1])];
        assert_eq!(u.vectors, expected);
        assert!(minus_two_classes(0).vectors.is_empty());
        let e = minus_two_classes_in(&[Block::E8(0)], 100);
        assert_eq!(e.vectors.len(), 240);
    }

    #[test]
    fn reflection_properties() {
        let delta = embed_block(Block::U(0), &[1, -1]);
        let r = ReflectionDatum::new(delta, 0.0).unwrap();
        let d = delta.to_real();
        let img = reflect(&r, &d).unwrap();
        assert_eq!(img, delta.neg().to_real());
        let perp = LatticeVector::unit(2).to_real();
        assert_eq!(reflect(&r, &perp).unwrap(), perp);
        let shifted = ReflectionDatum::new(delta, 0.7).unwrap();
        let v: Vec<f64> = (0..RANK).map(|i| (i as f64 * 0.37).sin()).collect();
        let back = reflect(&shifted, &reflect(&shifted, &v).unwrap()).unwrap();
        assert!(back.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-14));
        assert!(matches!(ReflectionDatum::new(LatticeVector::unit(0), 0.0), Err(Error::NotMinusTwo(0))));
    }

    #[test]
    fn positive_checks() {
        let b: Vec<Vec<f64>> = (0..3).map(|u| embed_block(Block::U(u), &[1, 1]).to_real()).collect();
        let c = positive_subspace_check(&b).unwrap();
        assert!(c.positive);
        assert_eq!(c.eigenvalues, vec![2.0, 2.0, 2.0]);
        let root = embed_block(Block::E8(0), &e8_roots()[0]).to_real();
        assert!(!positive_subspace_check(&[b[0].clone(), root]).unwrap().positive);
        assert!(!positive_subspace_check(&[LatticeVector::unit(0).to_real()]).unwrap().positive);
        assert!(positive_subspace_check(&[b[0].clone(), b[0].clone()]).is_err());
    }

    #[test]
    fn orthogonal_roots_cases() {
        let b: Vec<Vec<f64>> = (0..3).map(|u| embed_block(Block::U(u), &[1, 1]).to_real()).collect();
        // the U³ positive plane is orthogonal to every E8 root
        let s = orthogonal_roots(&b, 1, 1e-8).unwrap();
        let roots_h1 = minus_two_classes_in(&[Block::E8(0), Block::E8(1)], 1);
        assert!(roots_h1.vectors.iter().all(|v| s.vectors.contains(v)));
        assert!(s.vectors.contains(&embed_block(Block::U(1), &[1, -1])));
        for v in &s.vectors {
            assert_eq!(pairing_int(v, v), -2);
            for u in 0..3 {
                assert_eq!(v.0[2 * u], -v.0[2 * u + 1]);
            }
        }
        // complete search contains the filtered scan
        let filtered = orthogonal_roots(&b, 1, f64::INFINITY).unwrap();
        assert_eq!(filtered.vectors.len(), minus_two_classes(1).vectors.len());
        let scan: Vec<LatticeVector> =
            minus_two_classes(1).vectors.into_iter().filter(|v| (0..3).all(|u| v.0[2 * u] == -v.0[2 * u + 1])).collect();
        assert!(scan.iter().all(|v| s.vectors.contains(v)));
    }
}

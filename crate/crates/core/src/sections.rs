//! Discrete sections `h: box → R^{p,q}` and their pseudo-Riemannian geometry.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::lattice::{self, LatticeVector};
use crate::linalg;

/// Target vector space with a symmetric bilinear form of signature `(p, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureSpace {
    pub p: usize,
    pub q: usize,
    pub gram: DMatrix<f64>,
}

impl SignatureSpace {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::DimensionMismatch { expected: gram.nrows(), got: gram.ncols() });
        }
        if (&gram - gram.transpose()).abs().max() > 0.0 {
            return Err(Error::Invalid("pairing must be symmetric".into()));
        }
        let ev = linalg::sym_eigenvalues(&gram);
        let scale = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if ev.iter().any(|x| x.abs() <= 1e-12 * scale) {
            return Err(Error::Invalid("pairing is degenerate".into()));
        }
        let p = ev.iter().filter(|&&x| x > 0.0).count();
        Ok(SignatureSpace { p, q: ev.len() - p, gram })
    }

    /// `diag(+1 × p, -1 × q)`.
    pub fn diagonal(p: usize, q: usize) -> Self {
        let gram = DMatrix::from_fn(p + q, p + q, |i, j| if i != j { 0.0 } else if i < p { 1.0 } else { -1.0 });
        SignatureSpace { p, q, gram }
    }

    /// `R^n ⊕ (R^n)*` with the dual pairing `((u,v),(u',v')) = u·v' + u'·v`.
    pub fn split(n: usize) -> Self {
        let gram = DMatrix::from_fn(2 * n, 2 * n, |i, j| if i + n == j || j + n == i { 1.0 } else { 0.0 });
        SignatureSpace { p: n, q: n, gram }
    }

    /// `II(3,19) ⊗ R` in the lattice basis.
    pub fn lattice() -> Self {
        SignatureSpace { p: 3, q: 19, gram: lattice::gram_matrix() }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn pair(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for j in 0..n {
                row += self.gram[(i, j)] * b[j];
            }
            s += a[i] * row;
        }
        s
    }

    /// `G v`.
    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.gram[(i, j)] * v[j]).sum()).collect()
    }
}

/// A sampled map from a 2- or 3-dimensional grid into a signature space.
/// Values are stored node-major with the target coordinate innermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionGrid {
    pub grid: GridShape,
    pub space: SignatureSpace,
    pub values: Vec<f64>,
}

/// Two-dimensional sections share the representation.
pub type SurfaceGrid = SectionGrid;

impl SectionGrid {
    pub fn new(grid: GridShape, space: SignatureSpace, values: Vec<f64>) -> Result<Self> {
        if grid.base_dim() > 3 {
            return Err(Error::Invalid(format!("sections need a 2- or 3-dimensional base, got {}", grid.base_dim())));
        }
        if space.dim() > MAX_TARGET {
            return Err(Error::Invalid(format!("target dimension {} exceeds {MAX_TARGET}", space.dim())));
        }
        let expected = grid.node_count() * space.dim();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite section value".into()));
        }
        Ok(SectionGrid { grid, space, values })
    }

    pub fn from_fn(grid: GridShape, space: SignatureSpace, f: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Result<Self> {
        let n = space.dim();
        let vals: Vec<Vec<f64>> = (0..grid.node_count()).into_par_iter().map(|i| f(&grid.coords(i))).collect();
        if let Some(v) = vals.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        SectionGrid::new(grid, space, vals.concat())
    }

    pub fn target_dim(&self) -> usize {
        self.space.dim()
    }

    pub fn base_dim(&self) -> usize {
        self.grid.base_dim()
    }

    pub fn value(&self, id: usize) -> &[f64] {
        let n = self.target_dim();
        &self.values[id * n..(id + 1) * n]
    }

    pub fn value_mut(&mut self, id: usize) -> &mut [f64] {
        let n = self.target_dim();
        &mut self.values[id * n..(id + 1) * n]
    }

    /// Applies a linear map of the target to every value and replaces the space.
    pub fn map_target(&self, a: &DMatrix<f64>, space: SignatureSpace) -> Result<Self> {
        let n = self.target_dim();
        if a.ncols() != n || a.nrows() != space.dim() {
            return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
        }
        let mut values = Vec::with_capacity(self.grid.node_count() * space.dim());
        for id in 0..self.grid.node_count() {
            let v = nalgebra::DVector::from_column_slice(self.value(id));
            values.extend((a * v).iter());
        }
        SectionGrid::new(self.grid.clone(), space, values)
    }

    /// Sup over nodes of the Euclidean coefficient distance.
    pub fn sup_distance(&self, other: &SectionGrid) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Largest target dimension handled by the stack-allocated stencils.
pub const MAX_TARGET: usize = 32;

type Vecn = [f64; MAX_TARGET];
type Sym3 = [[f64; 3]; 3];

/// Precomputed stencil data for one grid: strides and the nonzero pairing entries.
struct Kernel<'a> {
    h: &'a SectionGrid,
    n: usize,
    d: usize,
    hs: f64,
    strides: [usize; 3],
    gram: Vec<(usize, usize, f64)>,
}

impl<'a> Kernel<'a> {
    fn new(h: &'a SectionGrid) -> Self {
        let d = h.base_dim();
        let mut strides = [0; 3];
        for (a, s) in strides.iter_mut().enumerate().take(d) {
            *s = h.grid.stride(a);
        }
        let n = h.target_dim();
        let mut gram = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = h.space.gram[(i, j)];
                if v != 0.0 {
                    gram.push((i, j, v));
                }
            }
        }
        Kernel { h, n, d, hs: h.grid.hstep, strides, gram }
    }

    fn pair(&self, a: &Vecn, b: &Vecn) -> f64 {
        self.gram.iter().map(|&(i, j, v)| a[i] * v * b[j]).sum()
    }

    fn central(&self, id: usize, axis: usize, out: &mut Vecn) {
        let s = self.strides[axis];
        let inv = 0.5 / self.hs;
        let (p, m) = (self.h.value(id + s), self.h.value(id - s));
        for k in 0..self.n {
            out[k] = (p[k] - m[k]) * inv;
        }
    }

    fn gram_of(&self, der: &[Vecn; 3]) -> Sym3 {
        let mut g = [[0.0; 3]; 3];
        for i in 0..self.d {
            for j in i..self.d {
                let v = self.pair(&der[i], &der[j]);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        g
    }

    fn interior(&self, id: usize) -> bool {
        let grid = &self.h.grid;
        let mut rest = id;
        for a in (0..self.d).rev() {
            let i = rest % grid.shape[a];
            rest /= grid.shape[a];
            if i == 0 || i + 1 == grid.shape[a] {
                return false;
            }
        }
        true
    }
}

fn det_sym(g: &Sym3, d: usize) -> f64 {
    match d {
        2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
        _ => {
            g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
        }
    }
}

/// Sylvester criterion on leading minors.
fn positive_sym(g: &Sym3, d: usize) -> bool {
    g[0][0] > 0.0 && g[0][0] * g[1][1] - g[0][1] * g[1][0] > 0.0 && (d == 2 || det_sym(g, 3) > 0.0)
}

fn inverse_sym(g: &Sym3, d: usize) -> Sym3 {
    let det = det_sym(g, d);
    let mut inv = [[0.0; 3]; 3];
    if d == 2 {
        inv[0][0] = g[1][1] / det;
        inv[1][1] = g[0][0] / det;
        inv[0][1] = -g[0][1] / det;
        inv[1][0] = -g[1][0] / det;
        return inv;
    }
    for i in 0..3 {
        for j in 0..3 {
            let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
            let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (g[i1][j1] * g[i2][j2] - g[i1][j2] * g[i2][j1]) / det;
        }
    }
    inv
}

fn min_eig_sym(g: &Sym3, d: usize) -> f64 {
    if d == 2 {
        let (a, b, c) = (g[0][0], g[0][1], g[1][1]);
        let m = 0.5 * (a + c);
        return m - (0.25 * (a - c) * (a - c) + b * b).sqrt();
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| g[i][j]);
    m.symmetric_eigenvalues().min()
}

fn to_dmatrix(g: &Sym3, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| g[i][j])
}

fn central(h: &SectionGrid, id: usize, axis: usize) -> Vec<f64> {
    let s = h.grid.stride(axis);
    let inv = 0.5 / h.grid.hstep;
    h.value(id + s).iter().zip(h.value(id - s)).map(|(a, b)| (a - b) * inv).collect()
}

/// Central-difference derivatives at an interior node.
pub fn derivatives(h: &SectionGrid, node: usize) -> Result<Vec<Vec<f64>>> {
    if node >= h.grid.node_count() || !h.grid.is_interior(node) {
        return Err(Error::BoundaryNode(h.grid.multi(node.min(h.grid.node_count().saturating_sub(1)))));
    }
    Ok((0..h.base_dim()).map(|a| central(h, node, a)).collect())
}

fn tangent_gram(space: &SignatureSpace, d: &[Vec<f64>]) -> (DMatrix<f64>, Vec<Vec<f64>>) {
    let lowered: Vec<Vec<f64>> = d.iter().map(|v| space.lower(v)).collect();
    let k = d.len();
    let g = DMatrix::from_fn(k, k, |i, j| d[i].iter().zip(&lowered[j]).map(|(a, b)| a * b).sum());
    (g, lowered)
}

/// Induced metric `g_ij = (∂_i h, ∂_j h)` and `J = det g` at interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedMetric {
    pub nodes: Vec<usize>,
    pub g: Vec<DMatrix<f64>>,
    pub j: Vec<f64>,
}

fn node_grams(h: &SectionGrid) -> (Vec<usize>, Vec<Sym3>) {
    let k = Kernel::new(h);
    let nodes = h.grid.interior_nodes();
    let g = nodes
        .par_iter()
        .map(|&id| {
            let mut der = [[0.0; MAX_TARGET]; 3];
            for (a, da) in der.iter_mut().enumerate().take(k.d) {
                k.central(id, a, da);
            }
            k.gram_of(&der)
        })
        .collect();
    (nodes, g)
}

pub fn induced_metric(h: &SectionGrid) -> Result<InducedMetric> {
    let d = h.base_dim();
    let (nodes, g) = node_grams(h);
    let bad: Vec<usize> = nodes.iter().zip(&g).filter(|(_, m)| !positive_sym(m, d)).map(|(&n, _)| n).collect();
    if !bad.is_empty() {
        return Err(Error::NonPositiveSection { count: bad.len(), first: bad.into_iter().take(8).collect() });
    }
    let j = g.iter().map(|m| det_sym(m, d)).collect();
    Ok(InducedMetric { nodes, g: g.iter().map(|m| to_dmatrix(m, d)).collect(), j })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    pub positive: bool,
    /// Minimum over interior nodes of the smallest eigenvalue of `g`.
    pub margin: f64,
    pub offending: Vec<usize>,
}

pub fn is_positive_section(h: &SectionGrid) -> PositivityReport {
    let d = h.base_dim();
    let (nodes, g) = node_grams(h);
    let mins: Vec<f64> = g.iter().map(|m| min_eig_sym(m, d)).collect();
    let margin = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let offending: Vec<usize> = nodes.iter().zip(&mins).filter(|(_, &m)| m <= 0.0).map(|(&n, _)| n).collect();
    PositivityReport { positive: offending.is_empty() && !nodes.is_empty(), margin, offending }
}

/// Volume `∫ √J` by the cell-midpoint rule: at each cell centre the derivative along
/// an axis is the mean of the forward differences over the cell edges in that axis.
pub fn volume3(h: &SectionGrid) -> Result<f64> {
    let k = Kernel::new(h);
    let grid = &h.grid;
    let d = k.d;
    let hs = k.hs;
    let n = k.n;
    let cells: Vec<usize> =
        (0..grid.node_count()).filter(|&id| grid.multi(id).iter().zip(&grid.shape).all(|(&i, &n)| i + 1 < n)).collect();
    let corners: Vec<usize> =
        (0..1usize << d).map(|bits| (0..d).filter(|a| bits & (1 << a) != 0).map(|a| k.strides[a]).sum()).collect();
    let edges = (1usize << (d - 1)) as f64;
    let results: Vec<std::result::Result<f64, usize>> = cells
        .par_iter()
        .map(|&c| {
            let mut der = [[0.0; MAX_TARGET]; 3];
            for (a, da) in der.iter_mut().enumerate().take(d) {
                let sa = k.strides[a];
                for (bits, &off) in corners.iter().enumerate() {
                    if bits & (1 << a) != 0 {
                        continue;
                    }
                    let lo = h.value(c + off);
                    let hi = h.value(c + off + sa);
                    for q in 0..n {
                        da[q] += hi[q] - lo[q];
                    }
                }
                for x in da.iter_mut().take(n) {
                    *x /= edges * hs;
                }
            }
            let g = k.gram_of(&der);
            if positive_sym(&g, d) {
                Ok(det_sym(&g, d).sqrt())
            } else {
                Err(c)
            }
        })
        .collect();
    let bad: Vec<usize> = results.iter().filter_map(|r| r.err()).collect();
    if !bad.is_empty() {
        return Err(Error::NonPositiveSection { count: bad.len(), first: bad.into_iter().take(8).collect() });
    }
    let total = linalg::fsum(results.into_iter().map(|r| r.unwrap()));
    Ok(total * hs.powi(d as i32))
}

/// Normal mean curvature per node (zero on the boundary).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCurvature {
    pub values: Vec<f64>,
    pub norms: Vec<f64>,
    pub max_norm: f64,
    /// Smallest eigenvalue of the nodal induced metric over interior nodes.
    pub metric_floor: f64,
}

impl MeanCurvature {
    pub fn at(&self, id: usize, n: usize) -> &[f64] {
        &self.values[id * n..(id + 1) * n]
    }
}

/// `m = J^{-1/2} ∂_i (J^{1/2} g^{ij} ∂_j h)` projected to the normal space.
///
/// Fluxes `J^{1/2} g^{ij} ∂_j h` live on half-nodes between neighbours along axis `i`;
/// there the derivative along `i` is the neighbour difference and the others are the
/// mean of the two nodal central differences.
pub fn mean_curvature(h: &SectionGrid) -> Result<MeanCurvature> {
    let k = Kernel::new(h);
    let grid = &h.grid;
    let (d, n, hs) = (k.d, k.n, k.hs);
    let count = grid.node_count();
    let mut fluxes: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut bad: Vec<usize> = Vec::new();
    for i in 0..d {
        let si = k.strides[i];
        let mut flux = vec![0.0; count * n];
        let errs: Vec<usize> = flux
            .par_chunks_mut(n)
            .enumerate()
            .filter_map(|(p, out)| {
                let mut rest = p;
                for a in (0..d).rev() {
                    let m = rest % grid.shape[a];
                    rest /= grid.shape[a];
                    let ok = if a == i { m + 1 < grid.shape[a] } else { m > 0 && m + 1 < grid.shape[a] };
                    if !ok {
                        return None;
                    }
                }
                let q = p + si;
                let mut der = [[0.0; MAX_TARGET]; 3];
                let mut tmp = [0.0; MAX_TARGET];
                for (a, da) in der.iter_mut().enumerate().take(d) {
                    if a == i {
                        let (hq, hp) = (h.value(q), h.value(p));
                        for c in 0..n {
                            da[c] = (hq[c] - hp[c]) / hs;
                        }
                    } else {
                        k.central(p, a, da);
                        k.central(q, a, &mut tmp);
                        for c in 0..n {
                            da[c] = 0.5 * (da[c] + tmp[c]);
                        }
                    }
                }
                let g = k.gram_of(&der);
                if !positive_sym(&g, d) {
                    return Some(p);
                }
                let inv = inverse_sym(&g, d);
                let sj = det_sym(&g, d).sqrt();
                for (b, db) in der.iter().enumerate().take(d) {
                    let c = sj * inv[i][b];
                    for x in 0..n {
                        out[x] += c * db[x];
                    }
                }
                None
            })
            .collect();
        bad.extend(errs);
        fluxes.push(flux);
    }
    if !bad.is_empty() {
        bad.sort_unstable();
        bad.dedup();
        return Err(Error::NonPositiveSection { count: bad.len(), first: bad.into_iter().take(8).collect() });
    }
    let mut values = vec![0.0; count * n];
    let stats: Vec<(f64, f64)> = values
        .par_chunks_mut(n)
        .enumerate()
        .map(|(p, out)| {
            if !k.interior(p) {
                return (0.0, f64::INFINITY);
            }
            let mut m = [0.0; MAX_TARGET];
            for (i, flux) in fluxes.iter().enumerate() {
                let si = k.strides[i];
                for c in 0..n {
                    m[c] += (flux[p * n + c] - flux[(p - si) * n + c]) / hs;
                }
            }
            let mut der = [[0.0; MAX_TARGET]; 3];
            for (a, da) in der.iter_mut().enumerate().take(d) {
                k.central(p, a, da);
            }
            let g = k.gram_of(&der);
            let floor = min_eig_sym(&g, d);
            let inv = inverse_sym(&g, d);
            let scale = 1.0 / det_sym(&g, d).abs().sqrt();
            for x in m.iter_mut().take(n) {
                *x *= scale;
            }
            let mut proj = [0.0; 3];
            for (a, pa) in proj.iter_mut().enumerate().take(d) {
                *pa = k.pair(&der[a], &m);
            }
            for a in 0..d {
                for l in 0..d {
                    let c = inv[a][l] * proj[a];
                    for x in 0..n {
                        m[x] -= c * der[l][x];
                    }
                }
            }
            out.copy_from_slice(&m[..n]);
            (m[..n].iter().map(|x| x * x).sum::<f64>().sqrt(), floor)
        })
        .collect();
    let norms: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let metric_floor = stats.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok(MeanCurvature { values, norms, max_norm, metric_floor })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerpReport {
    pub negative: bool,
    /// Eigenvalues of the pairing on the orthogonal complement (in an orthonormal
    /// Euclidean basis of it), ascending.
    pub complement_eigenvalues: Vec<f64>,
}

/// Whether the pairing is negative definite on the orthogonal complement of a
/// positive 3-space.
pub fn perp_negativity(space: &SignatureSpace, basis: &[Vec<f64>]) -> Result<PerpReport> {
    if basis.len() != 3 {
        return Err(Error::RankDeficient { rank: basis.len(), expected: 3 });
    }
    let n = space.dim();
    if let Some(b) = basis.iter().find(|b| b.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let (g, lowered) = tangent_gram(space, basis);
    let lo = linalg::min_eigenvalue(&g);
    if lo <= 0.0 {
        return Err(Error::NotPositive { margin: lo });
    }
    // complement = kernel of v ↦ (b_i, v)
    let mut constraints = DMatrix::zeros(n, n);
    for i in 0..3 {
        for j in 0..n {
            constraints[(i, j)] = lowered[i][j];
        }
    }
    let full = constraints.svd(false, true);
    let vt_full = full.v_t.expect("requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| full.singular_values[a].partial_cmp(&full.singular_values[b]).unwrap());
    let comp: Vec<usize> = order.into_iter().take(n - 3).collect();
    let c = DMatrix::from_fn(n, n - 3, |i, j| vt_full[(comp[j], i)]);
    let restricted = c.transpose() * &space.gram * &c;
    let ev = linalg::sym_eigenvalues(&restricted);
    Ok(PerpReport { negative: ev.iter().all(|&x| x < 0.0), complement_eigenvalues: ev })
}

/// Per-node −2 classes orthogonal to the derivative frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvoidanceReport {
    pub height_bound: i64,
    pub tol: f64,
    pub domain: String,
    pub nodes_checked: usize,
    pub flagged: Vec<(usize, Vec<LatticeVector>)>,
}

impl AvoidanceReport {
    pub fn avoids(&self) -> bool {
        self.flagged.is_empty()
    }
}

pub fn avoids_minus_two(h: &SectionGrid, height_bound: i64, tol: f64) -> Result<AvoidanceReport> {
    if h.target_dim() != lattice::RANK {
        return Err(Error::DimensionMismatch { expected: lattice::RANK, got: h.target_dim() });
    }
    let nodes = h.grid.interior_nodes();
    let scans: Vec<Result<(usize, lattice::MinusTwoScan)>> = nodes
        .par_iter()
        .map(|&id| Ok((id, lattice::orthogonal_roots(&derivatives(h, id)?, height_bound, tol)?)))
        .collect();
    let mut domain = String::new();
    let mut flagged = Vec::new();
    for s in scans {
        let (id, scan) = s?;
        if domain.is_empty() {
            domain = scan.domain.clone();
        }
        if !scan.vectors.is_empty() {
            flagged.push((id, scan.vectors));
        }
    }
    Ok(AvoidanceReport { height_bound, tol, domain, nodes_checked: nodes.len(), flagged })
}

/// Jet data of a branched positive map at the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchJet {
    pub v0: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub delta: LatticeVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    pub delta_residual: f64,
    pub orthogonal_to_delta: bool,
    pub gram_eigenvalues: Vec<f64>,
    pub positive: bool,
    pub extra_roots: Vec<LatticeVector>,
    pub only_delta: bool,
    pub passes: bool,
}

pub fn branched_check(j: &BranchJet, height_bound: i64, tol: f64) -> Result<BranchReport> {
    let s = lattice::pairing_int(&j.delta, &j.delta);
    if s != -2 {
        return Err(Error::NotMinusTwo(s));
    }
    let d = j.delta.to_real();
    let basis = vec![j.v0.clone(), j.v1.clone(), j.v2.clone()];
    let mut delta_residual = 0.0f64;
    for b in &basis {
        delta_residual = delta_residual.max(lattice::pairing(b, &d)?.abs());
    }
    let gram = lattice::basis_gram(&basis)?;
    let gram_eigenvalues = linalg::sym_eigenvalues(&gram);
    let positive = gram_eigenvalues[0] > tol.max(0.0);
    let orthogonal_to_delta = delta_residual <= tol;
    let (extra_roots, only_delta) = if positive {
        let scan = lattice::orthogonal_roots(&basis, height_bound, tol)?;
        let extra: Vec<LatticeVector> =
            scan.vectors.into_iter().filter(|v| *v != j.delta && *v != j.delta.neg()).collect();
        let ok = extra.is_empty();
        (extra, ok)
    } else {
        (Vec::new(), false)
    };
    Ok(BranchReport {
        delta_residual,
        orthogonal_to_delta,
        gram_eigenvalues,
        positive,
        passes: orthogonal_to_delta && positive && only_delta,
        extra_roots,
        only_delta,
    })
}

//! Curvature verifiers: second fundamental form and induced Ricci curvature of
//! positive sections, the Gauss-map route to Ricci, the trace identity for
//! `Λ²₊ ⊗ Λ¹` on 4-space, and checks on adiabatic Cayley data.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{self, AltForm, EuclideanStructure};
use crate::grid::GridShape;
use crate::hyper::{self, HyperTriple};
use crate::linalg;
use crate::sections::{SectionGrid, SignatureSpace};

/// Per interior node, `s[a]` is the `d × d` symmetric matrix `S^a_ij` in orthonormal
/// tangent and normal frames (`⟨n_a, n_b⟩ = -δ_ab`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondFundamentalForm {
    pub nodes: Vec<usize>,
    pub s: Vec<Vec<DMatrix<f64>>>,
    /// Max over nodes and normals of `|Σ_j S^a_jj|`.
    pub max_trace: f64,
}

/// Local geometry at an interior node: derivative matrices and orthonormal frames.
struct NodeFrame {
    /// `d × d` lower factor with `g = C Cᵀ`; the orthonormal tangent frame is `C⁻¹ ∂h`.
    chol: DMatrix<f64>,
    first: Vec<DVector<f64>>,
    second: Vec<Vec<DVector<f64>>>,
    normals: Vec<DVector<f64>>,
}

fn second_derivatives(h: &SectionGrid, id: usize) -> (Vec<DVector<f64>>, Vec<Vec<DVector<f64>>>) {
    let g = &h.grid;
    let d = g.base_dim();
    let hs = g.hstep;
    let at = |off: &[isize]| {
        let k: isize = (0..d).map(|a| off[a] * g.stride(a) as isize).sum();
        DVector::from_column_slice(h.value((id as isize + k) as usize))
    };
    let unit = |a: usize, s: isize| {
        let mut o = vec![0isize; d];
        o[a] = s;
        o
    };
    let zero = vec![0isize; d];
    let first: Vec<DVector<f64>> = (0..d).map(|a| (at(&unit(a, 1)) - at(&unit(a, -1))) / (2.0 * hs)).collect();
    let mut second = vec![vec![DVector::zeros(h.target_dim()); d]; d];
    for i in 0..d {
        second[i][i] = (at(&unit(i, 1)) - at(&zero) * 2.0 + at(&unit(i, -1))) / (hs * hs);
        for j in i + 1..d {
            let o = |si: isize, sj: isize| {
                let mut v = vec![0isize; d];
                v[i] = si;
                v[j] = sj;
                v
            };
            let m = (at(&o(1, 1)) - at(&o(1, -1)) - at(&o(-1, 1)) + at(&o(-1, -1))) / (4.0 * hs * hs);
            second[i][j] = m.clone();
            second[j][i] = m;
        }
    }
    (first, second)
}

/// Normal frame by modified Gram-Schmidt with pivoting against `-⟨·,·⟩` on the
/// projections of the coordinate axes onto the normal space.
fn normal_frame(space: &SignatureSpace, first: &[DVector<f64>], ginv: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let n = space.dim();
    let d = first.len();
    let pair = |a: &DVector<f64>, b: &DVector<f64>| space.pair(a.as_slice(), b.as_slice());
    let project = |v: DVector<f64>| {
        let c: Vec<f64> = first.iter().map(|t| pair(t, &v)).collect();
        let mut out = v;
        for i in 0..d {
            for j in 0..d {
                out -= &first[i] * (ginv[(i, j)] * c[j]);
            }
        }
        out
    };
    let mut cands: Vec<DVector<f64>> = (0..n)
        .map(|k| {
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            project(e)
        })
        .collect();
    let want = n - d;
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(want);
    for _ in 0..want {
        let (best, score) = cands
            .iter()
            .enumerate()
            .map(|(k, v)| (k, -pair(v, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        if !(score > 1e-12) {
            return Err(Error::RankDeficient { rank: frame.len(), expected: want });
        }
        let v = cands.swap_remove(best) / score.sqrt();
        for c in cands.iter_mut() {
            // ⟨v, v⟩ = -1
            let k = pair(c, &v);
            *c += &v * k;
        }
        frame.push(v);
    }
    Ok(frame)
}

fn node_frame(h: &SectionGrid, id: usize) -> Result<NodeFrame> {
    let d = h.base_dim();
    let (first, second) = second_derivatives(h, id);
    let g = DMatrix::from_fn(d, d, |i, j| h.space.pair(first[i].as_slice(), first[j].as_slice()));
    let chol = g.clone().cholesky().ok_or(Error::NonPositiveSection { count: 1, first: vec![id] })?;
    let ginv = chol.inverse();
    let normals = normal_frame(&h.space, &first, &ginv)?;
    Ok(NodeFrame { chol: chol.l(), first, second, normals })
}

impl NodeFrame {
    fn sff(&self, space: &SignatureSpace) -> Vec<DMatrix<f64>> {
        let d = self.first.len();
        let linv = self.chol.clone().try_inverse().expect("cholesky factor is invertible");
        self.normals
            .iter()
            .map(|n| {
                let raw = DMatrix::from_fn(d, d, |i, j| -space.pair(self.second[i][j].as_slice(), n.as_slice()));
                &linv * raw * linv.transpose()
            })
            .collect()
    }
}

pub fn second_fundamental_form(h: &SectionGrid) -> Result<SecondFundamentalForm> {
    let nodes = h.grid.interior_nodes();
    let s: Vec<Vec<DMatrix<f64>>> =
        nodes.par_iter().map(|&id| node_frame(h, id).map(|f| f.sff(&h.space))).collect::<Result<_>>()?;
    let max_trace = s.iter().flat_map(|v| v.iter().map(|m| m.trace().abs())).fold(0.0, f64::max);
    Ok(SecondFundamentalForm { nodes, s, max_trace })
}

/// `R_ik = -Σ_{a,j} S^a_jj S^a_ik + Σ_{a,j} S^a_ij S^a_kj`.
pub fn ricci_from_sff(s: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = s.first().map(|m| m.nrows()).unwrap_or(0);
    let mut r = DMatrix::zeros(d, d);
    for m in s {
        r += m * m.transpose() - m * m.trace();
    }
    r
}

/// Ricci tensor in the orthonormal tangent frame at each interior node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciField {
    pub nodes: Vec<usize>,
    pub ricci: Vec<DMatrix<f64>>,
    pub min_eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
}

pub fn induced_ricci(h: &SectionGrid) -> Result<RicciField> {
    let sff = second_fundamental_form(h)?;
    let ricci: Vec<DMatrix<f64>> = sff.s.iter().map(|s| ricci_from_sff(s)).collect();
    let min_eigenvalues: Vec<f64> = ricci.iter().map(linalg::min_eigenvalue).collect();
    let min_eigenvalue = min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RicciField { nodes: sff.nodes, ricci, min_eigenvalues, min_eigenvalue })
}

/// Tangent projector `P = T g⁻¹ Tᵀ G` as an endomorphism of the target.
fn tangent_projector(space: &SignatureSpace, first: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let d = first.len();
    let t = DMatrix::from_columns(first);
    let g = DMatrix::from_fn(d, d, |i, j| space.pair(first[i].as_slice(), first[j].as_slice()));
    let ginv = g.try_inverse().ok_or(Error::NonPositiveMetric)?;
    Ok(&t * ginv * t.transpose() * &space.gram)
}

/// Squared Gauss-map derivative `Q(ξ, ξ) = -½ tr((∂_ξ P)²)` in the orthonormal tangent
/// frame, from central differences of the tangent projector, at nodes two layers in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussRoute {
    pub nodes: Vec<usize>,
    pub q: Vec<DMatrix<f64>>,
}

pub fn gauss_route(h: &SectionGrid) -> Result<GaussRoute> {
    let g = &h.grid;
    let d = g.base_dim();
    let nodes: Vec<usize> = (0..g.node_count())
        .filter(|&id| g.multi(id).iter().zip(&g.shape).all(|(&i, &n)| i >= 2 && i + 2 < n))
        .collect();
    let proj = |id: usize| -> Result<DMatrix<f64>> {
        let (first, _) = second_derivatives(h, id);
        tangent_projector(&h.space, &first)
    };
    let q = nodes
        .par_iter()
        .map(|&id| {
            let frame = node_frame(h, id)?;
            let dp: Vec<DMatrix<f64>> = (0..d)
                .map(|a| Ok((proj(id + g.stride(a))? - proj(id - g.stride(a))?) / (2.0 * g.hstep)))
                .collect::<Result<_>>()?;
            let raw = DMatrix::from_fn(d, d, |a, b| -0.5 * (&dp[a] * &dp[b]).trace());
            let linv = frame.chol.clone().try_inverse().ok_or(Error::NonPositiveMetric)?;
            Ok(&linv * raw * linv.transpose())
        })
        .collect::<Result<_>>()?;
    Ok(GaussRoute { nodes, q })
}

/// Max over common nodes of `‖Ric - Q‖` (max entry).
pub fn gauss_route_mismatch(ricci: &RicciField, route: &GaussRoute) -> f64 {
    let mut worst = 0.0f64;
    for (id, q) in route.nodes.iter().zip(&route.q) {
        if let Ok(k) = ricci.nodes.binary_search(id) {
            worst = worst.max((&ricci.ricci[k] - q).abs().max());
        }
    }
    worst
}

/// Per-node `‖Ric - Q‖` (max entry); 0 where the Gauss route is not evaluated.
pub fn gauss_route_mismatch_field(grid: &GridShape, ricci: &RicciField, route: &GaussRoute) -> Vec<f64> {
    let mut out = vec![0.0; grid.node_count()];
    for (id, q) in route.nodes.iter().zip(&route.q) {
        if let Ok(k) = ricci.nodes.binary_search(id) {
            out[*id] = (&ricci.ricci[k] - q).abs().max();
        }
    }
    out
}

/// Constants `C_k = max(0, -λ_min,k) / h_k²` and whether they agree within a factor 2
/// (all zero counts as agreement).
pub fn ricci_stability(min_eigenvalues: &[f64], hsteps: &[f64]) -> (Vec<f64>, bool) {
    let c: Vec<f64> = min_eigenvalues.iter().zip(hsteps).map(|(l, h)| (-l).max(0.0) / (h * h)).collect();
    let stable = if c.iter().all(|&x| x == 0.0) {
        true
    } else {
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(0.0, f64::max);
        lo > 0.0 && hi <= 2.0 * lo
    };
    (c, stable)
}

// ---------------------------------------------------------------------------
// Λ²₊ ⊗ Λ¹ algebra on 4-space

/// `s = Σ_i v_i ⊗ ω_i` with `v_i = t_i e0 + Σ_j s_ij e_j` in an oriented orthonormal
/// frame `(e0, e1, e2, e3)`, `e_k = e0 · u_k` (quaternion units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CayleySample {
    pub t: [f64; 3],
    pub s: Matrix3<f64>,
    pub e0: [f64; 4],
}

fn quat_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn one_form(v: [f64; 4]) -> AltForm {
    AltForm::from_coeffs(4, 1, v.to_vec()).expect("4-vector")
}

/// `⟨α, β⟩ = ½ Σ α_ab β_ab`, making `e01 + e23` a unit vector.
fn half_inner(a: &AltForm, b: &AltForm) -> f64 {
    0.5 * a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum::<f64>()
}

impl CayleySample {
    /// A sample in the kernel of `Λ¹ ⊗ Λ²₊ → Λ³`: `s` is made trace-free and
    /// `t_i = s_kj - s_jk` for `(i, j, k)` cyclic.
    pub fn kernel(s: Matrix3<f64>, e0: [f64; 4]) -> Self {
        let s = s - Matrix3::identity() * (s.trace() / 3.0);
        let t = std::array::from_fn(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            s[(k, j)] - s[(j, k)]
        });
        CayleySample { t, s, e0 }
    }

    pub fn frame(&self) -> Result<[[f64; 4]; 4]> {
        let n = self.e0.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("e0 must be a unit vector, norm {n}")));
        }
        let u = |k: usize| {
            let mut q = [0.0; 4];
            q[k] = 1.0;
            q
        };
        Ok(std::array::from_fn(|k| quat_mul(self.e0, u(k))))
    }

    fn vectors(&self, f: &[[f64; 4]; 4]) -> [AltForm; 3] {
        std::array::from_fn(|i| {
            let mut v = [0.0; 4];
            for c in 0..4 {
                v[c] = self.t[i] * f[0][c] + (0..3).map(|j| self.s[(i, j)] * f[j + 1][c]).sum::<f64>();
            }
            one_form(v)
        })
    }
}

/// `ω_i = f0 f_i + f_j f_k` and `η_i = f0 f_i - f_j f_k` for the frame `f`.
fn frame_two_forms(f: &[[f64; 4]; 4]) -> ([AltForm; 3], [AltForm; 3]) {
    let w = |a: usize, b: usize| forms::wedge(&one_form(f[a]), &one_form(f[b])).expect("1-forms");
    let pos = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3 + 1, (i + 2) % 3 + 1);
        &w(0, i + 1) + &w(j, k)
    });
    let neg = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3 + 1, (i + 2) % 3 + 1);
        &w(0, i + 1) - &w(j, k)
    });
    (pos, neg)
}

/// `‖Σ_i v_i ∧ ω_i‖_max`: zero exactly on the wedge kernel.
pub fn wedge_kernel_residual(x: &CayleySample) -> Result<f64> {
    let f = x.frame()?;
    let (om, _) = frame_two_forms(&f);
    let v = x.vectors(&f);
    let mut total = AltForm::zero(4, 3);
    for i in 0..3 {
        total = &total + &forms::wedge(&v[i], &om[i])?;
    }
    Ok(total.max_abs())
}

/// `(T_{e0}(q(s)), Σ_cyclic t_i (s_jk - s_kj))`.
///
/// `q(s) = ½ Σ_{ij} (v_i ∧ v_j) ⊗ (ω_i × ω_j)` with `ω_i × ω_j = ε_ijk ω_k`, and
/// `T_{e0}(α ⊗ β) = ⟨α₊, β⟩ + ⟨I⁻¹ α₋, β⟩` where `I(ω_i) = η_i`.
pub fn cayley_trace_identity(x: &CayleySample) -> Result<(f64, f64)> {
    let f = x.frame()?;
    let (om, eta) = frame_two_forms(&f);
    let v = x.vectors(&f);
    let mut lhs = 0.0;
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        // ½ (v_i∧v_j - v_j∧v_i) = v_i ∧ v_j
        let alpha = forms::wedge(&v[i], &v[j])?;
        let plus: f64 = half_inner(&alpha, &om[k]);
        let minus: f64 = half_inner(&alpha, &eta[k]);
        lhs += plus + minus;
    }
    let rhs = (0..3)
        .map(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            x.t[i] * (x.s[(j, k)] - x.s[(k, j)])
        })
        .sum();
    Ok((lhs, rhs))
}

// ---------------------------------------------------------------------------
// Adiabatic Cayley data

/// An `H`-valued 2-form on a 4-box: per node an `N × 6` block (row = component of `H`,
/// column = 2-form coefficient in rank order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CayleyField {
    pub grid: GridShape,
    pub space: SignatureSpace,
    pub values: Vec<f64>,
}

impl CayleyField {
    pub fn new(grid: GridShape, space: SignatureSpace, values: Vec<f64>) -> Result<Self> {
        if grid.base_dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, got: grid.base_dim() });
        }
        if space.p != 3 {
            return Err(Error::Invalid(format!("H must have signature (3, q), got ({}, {})", space.p, space.q)));
        }
        let expected = grid.node_count() * space.dim() * 6;
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        Ok(CayleyField { grid, space, values })
    }

    /// `f(x)` returns one 2-form on 4-space per component of `H`.
    pub fn from_fn(grid: GridShape, space: SignatureSpace, f: impl Fn(&[f64]) -> Vec<AltForm> + Sync) -> Result<Self> {
        let n = space.dim();
        let values: Vec<f64> = (0..grid.node_count())
            .into_par_iter()
            .flat_map_iter(|id| {
                let forms = f(&grid.coords(id));
                assert_eq!(forms.len(), n, "one 2-form per component");
                forms.into_iter().flat_map(|w| w.coeffs().to_vec()).collect::<Vec<_>>()
            })
            .collect();
        CayleyField::new(grid, space, values)
    }

    pub fn forms_at(&self, id: usize) -> Vec<AltForm> {
        let n = self.space.dim();
        let block = &self.values[id * n * 6..(id + 1) * n * 6];
        block.chunks(6).map(|c| AltForm::from_coeffs(4, 2, c.to_vec()).expect("2-form")).collect()
    }

    pub fn block(&self, id: usize) -> DMatrix<f64> {
        let n = self.space.dim();
        DMatrix::from_row_slice(n, 6, &self.values[id * n * 6..(id + 1) * n * 6])
    }
}

/// Components of `dΨ` at an interior node by central differences.
pub fn exterior_derivative(psi: &CayleyField, id: usize) -> Result<Vec<AltForm>> {
    let g = &psi.grid;
    if !g.is_interior(id) {
        return Err(Error::BoundaryNode(g.multi(id)));
    }
    let n = psi.space.dim();
    let mut out = vec![AltForm::zero(4, 3); n];
    for a in 0..4 {
        let s = g.stride(a);
        let (p, m) = (psi.forms_at(id + s), psi.forms_at(id - s));
        let da = AltForm::monomial(4, &[a]);
        for k in 0..n {
            let deriv = &(&p[k] - &m[k]) * (0.5 / g.hstep);
            out[k] = &out[k] + &forms::wedge(&da, &deriv)?;
        }
    }
    Ok(out)
}

/// Per-node residuals for the adiabatic Cayley conditions with the flat metric of the
/// box coordinates. `closed` is 0 on boundary nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CayleyReport {
    pub self_duality: Vec<f64>,
    pub isometry: Vec<f64>,
    pub closed: Vec<f64>,
    pub max_self_duality: f64,
    pub max_isometry: f64,
    pub max_closed: f64,
}

/// Images `Ψ(ω_i) = ⟨Ψ, ω_i⟩` of the standard self-dual frame.
fn frame_images(forms: &[AltForm]) -> [DVector<f64>; 3] {
    let om = forms::standard_triple_forms();
    std::array::from_fn(|i| DVector::from_iterator(forms.len(), forms.iter().map(|w| half_inner(w, &om[i]))))
}

pub fn validate_adiabatic_cayley(psi: &CayleyField) -> Result<CayleyReport> {
    let g = &psi.grid;
    let e = EuclideanStructure::standard(4);
    let per: Vec<(f64, f64, f64)> = (0..g.node_count())
        .into_par_iter()
        .map(|id| {
            let forms = psi.forms_at(id);
            let mut sd = 0.0f64;
            for w in &forms {
                let asd = &(w - &forms::hodge_star(w, &e)?) * 0.5;
                sd = sd.max(asd.euclidean_norm());
            }
            let h = frame_images(&forms);
            let m = Matrix3::from_fn(|i, j| psi.space.pair(h[i].as_slice(), h[j].as_slice()));
            let iso = (m - Matrix3::identity()).abs().max();
            let closed = if g.is_interior(id) {
                exterior_derivative(psi, id)?.iter().map(|f| f.euclidean_norm()).fold(0.0, f64::max)
            } else {
                0.0
            };
            Ok((sd, iso, closed))
        })
        .collect::<Result<_>>()?;
    let col = |k: usize| -> Vec<f64> { per.iter().map(|p| [p.0, p.1, p.2][k]).collect() };
    let (self_duality, isometry, closed) = (col(0), col(1), col(2));
    let mx = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(CayleyReport {
        max_self_duality: mx(&self_duality),
        max_isometry: mx(&isometry),
        max_closed: mx(&closed),
        self_duality,
        isometry,
        closed,
    })
}

/// Wedge pairing on 2-forms: `α ∧ β = B(α, β) e^{0123}`.
pub fn wedge_pairing() -> DMatrix<f64> {
    let basis: Vec<AltForm> = (0..6)
        .map(|k| {
            let mut c = vec![0.0; 6];
            c[k] = 1.0;
            AltForm::from_coeffs(4, 2, c).expect("2-form")
        })
        .collect();
    DMatrix::from_fn(6, 6, |i, j| forms::wedge(&basis[i], &basis[j]).expect("2-forms").top())
}

/// Output of [`special_normalize`]: per node the metric making `Ψ` adiabatic Cayley
/// data, and the images of an orthonormal self-dual frame (their Gram matrix in `H` is
/// the identity). The form itself is unchanged: rescaling is absorbed by the metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecialNormalized {
    pub metrics: Vec<Matrix4<f64>>,
    pub images: Vec<[DVector<f64>; 3]>,
    /// Max over nodes of `‖M / m - I‖` for the Gram matrix `M` of the frame images.
    pub special_residual: f64,
}

/// Tolerance on the relative deviation of `Ψ*Ψ` from a multiple of a projection.
pub const SPECIAL_TOL: f64 = 1e-8;

pub fn special_normalize_node(block: &DMatrix<f64>, space: &SignatureSpace) -> Result<(Matrix4<f64>, [DVector<f64>; 3], f64)> {
    let b = wedge_pairing();
    let svd = block.clone().svd(false, true);
    let vt = svd.v_t.as_ref().ok_or(Error::Invalid("svd failed".into()))?;
    let smax = svd.singular_values.max();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let rank = order.iter().filter(|&&k| svd.singular_values[k] > 1e-10 * smax).count();
    if rank != 3 || smax == 0.0 {
        return Err(Error::RankDeficient { rank, expected: 3 });
    }
    let w: Vec<DVector<f64>> = order[..3].iter().map(|&k| vt.row(k).transpose()).collect();
    let bw = DMatrix::from_fn(3, 3, |i, j| (w[i].transpose() * &b * &w[j])[0]);
    let chol = bw.clone().cholesky().ok_or(Error::NotPositive { margin: linalg::min_eigenvalue(&bw) })?;
    let linv = chol.l().try_inverse().ok_or(Error::NonPositiveMetric)?;
    // B-orthonormal basis u_i of the span
    let u: Vec<DVector<f64>> =
        (0..3).map(|i| (0..3).fold(DVector::zeros(6), |acc, j| acc + &w[j] * linv[(i, j)])).collect();
    let triple = HyperTriple {
        omega: std::array::from_fn(|i| AltForm::from_coeffs(4, 2, u[i].iter().copied().collect()).expect("2-form")),
    };
    let g0 = hyper::conformal_structure(&triple)?.metric;
    // with det g0 = 1 the orthonormal self-dual frame is √2 u_i and Ψ(α) = ½ B(Ψ, α)
    let images: [DVector<f64>; 3] = std::array::from_fn(|i| block * &b * &u[i] * std::f64::consts::FRAC_1_SQRT_2);
    let m = Matrix3::from_fn(|i, j| space.pair(images[i].as_slice(), images[j].as_slice()));
    let m0 = m.trace() / 3.0;
    if !(m0 > 0.0) {
        return Err(Error::NotPositive { margin: m0 });
    }
    let residual = (m / m0 - Matrix3::identity()).abs().max();
    if residual > SPECIAL_TOL {
        return Err(Error::Invalid(format!("form is not special (residual {residual:e})")));
    }
    // g = c² g0 scales the frame images by c⁻²
    let c2 = m0.sqrt();
    let metric = Matrix4::from_fn(|i, j| g0[(i, j)] * c2);
    let images = images.map(|v| v / c2);
    Ok((metric, images, residual))
}

pub fn special_normalize(psi: &CayleyField) -> Result<SpecialNormalized> {
    let per: Vec<(Matrix4<f64>, [DVector<f64>; 3], f64)> = (0..psi.grid.node_count())
        .into_par_iter()
        .map(|id| special_normalize_node(&psi.block(id), &psi.space))
        .collect::<Result<_>>()?;
    let special_residual = per.iter().map(|p| p.2).fold(0.0, f64::max);
    let (metrics, images) = per.into_iter().map(|p| (p.0, p.1)).unzip();
    Ok(SpecialNormalized { metrics, images, special_residual })
}

/// Self-dual frame `θ0θ_i + θ_jθ_k` of the metric `g = AᵀA` for the coframe `θ = A dx`.
pub fn self_dual_frame(a: &Matrix4<f64>) -> Result<[AltForm; 3]> {
    if a.determinant() <= 0.0 {
        return Err(Error::Invalid("coframe must be oriented".into()));
    }
    let theta: Vec<AltForm> = (0..4).map(|r| one_form([a[(r, 0)], a[(r, 1)], a[(r, 2)], a[(r, 3)]])).collect();
    let w = |x: usize, y: usize| forms::wedge(&theta[x], &theta[y]).expect("1-forms");
    Ok(std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3 + 1, (i + 2) % 3 + 1);
        &w(0, i + 1) + &w(j, k)
    }))
}

/// `Ω₀ = dvol₁ + Σ_a ω_a ∧ ω'_a + dvol₂` on `V1 ⊕ V2 = R⁸` (coordinates 0..3 and 4..7).
pub fn omega0() -> AltForm {
    let om = forms::standard_triple_forms();
    let v1 = [0, 1, 2, 3];
    let v2 = [4, 5, 6, 7];
    let mut total = &AltForm::volume(4).embed(8, &v1) + &AltForm::volume(4).embed(8, &v2);
    for w in &om {
        total = &total + &forms::wedge(&w.embed(8, &v1), &w.embed(8, &v2)).expect("2-forms");
    }
    total
}

/// `Ω_{2,2} = Σ_a ω_a ∧ ω'_a` for a base frame and the matching fibre triple.
pub fn omega22(base: &[AltForm; 3], fibre: &[AltForm; 3]) -> Result<AltForm> {
    let mut total = AltForm::zero(8, 4);
    for a in 0..3 {
        total = &total + &forms::wedge(&base[a].embed(8, &[0, 1, 2, 3]), &fibre[a].embed(8, &[4, 5, 6, 7]))?;
    }
    Ok(total)
}

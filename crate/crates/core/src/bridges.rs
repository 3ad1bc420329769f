//! Monge-Ampère graphs in `R^{3,3}`, torus-fibre G2 assembly, and Weierstrass
//! maximal surfaces in `R^{2,q}`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, FlowParams, FlowResult, FlowStatus};
use crate::forms::AltForm;
use crate::grid::{GridShape, ScalarGrid};
use crate::hyper::{self, HyperTriple};
use crate::linalg::fsum;
use crate::sections::{self, SectionGrid, SignatureSpace, SurfaceGrid};

fn require_3d(f: &ScalarGrid) -> Result<()> {
    if f.grid.base_dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: f.grid.base_dim() });
    }
    Ok(())
}

/// Gradient by central differences inside and one-sided second-order differences on
/// the boundary (both exact on quadratics).
pub fn gradient(f: &ScalarGrid, id: usize) -> Vec<f64> {
    let g = &f.grid;
    let m = g.multi(id);
    let h = g.hstep;
    (0..g.base_dim())
        .map(|a| {
            let s = g.stride(a);
            let n = g.shape[a];
            let v = |k: isize| f.values[(id as isize + k * s as isize) as usize];
            if m[a] == 0 {
                (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
            } else if m[a] + 1 == n {
                (3.0 * v(0) - 4.0 * v(-1) + v(-2)) / (2.0 * h)
            } else {
                (v(1) - v(-1)) / (2.0 * h)
            }
        })
        .collect()
}

/// `h(t) = (t, ∇F(t))` in `R³ ⊕ (R³)*` with the dual pairing.
pub fn graph_section(f: &ScalarGrid) -> Result<SectionGrid> {
    require_3d(f)?;
    let g = &f.grid;
    let values: Vec<f64> = (0..g.node_count())
        .into_par_iter()
        .flat_map_iter(|id| {
            let mut v = g.coords(id);
            v.extend(gradient(f, id));
            v
        })
        .collect();
    SectionGrid::new(g.clone(), SignatureSpace::split(3), values)
}

/// Compact Hessian: three-point second differences and four-point mixed differences.
pub fn hessian_compact(f: &ScalarGrid, id: usize) -> Matrix3<f64> {
    let g = &f.grid;
    let h2 = g.hstep * g.hstep;
    let v = |off: [isize; 3]| {
        let k: isize = (0..3).map(|a| off[a] * g.stride(a) as isize).sum();
        f.values[(id as isize + k) as usize]
    };
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let mut e = [0isize; 3];
        e[i] = 1;
        let ne = e.map(|x| -x);
        m[(i, i)] = (v(e) - 2.0 * v([0; 3]) + v(ne)) / h2;
        for j in i + 1..3 {
            let mut pp = [0isize; 3];
            pp[i] = 1;
            pp[j] = 1;
            let mut pm = pp;
            pm[j] = -1;
            let mp = pm.map(|x| -x);
            let mm = pp.map(|x| -x);
            let val = (v(pp) - v(pm) - v(mp) + v(mm)) / (4.0 * h2);
            m[(i, j)] = val;
            m[(j, i)] = val;
        }
    }
    m
}

/// `det(Hess F) - C` at interior nodes (zero on the boundary).
pub fn ma_residual(f: &ScalarGrid, c: f64) -> Result<Vec<f64>> {
    require_3d(f)?;
    let g = &f.grid;
    Ok((0..g.node_count())
        .into_par_iter()
        .map(|id| if g.is_interior(id) { hessian_compact(f, id).determinant() - c } else { 0.0 })
        .collect())
}

/// `(max |det Hess F - C|, max ‖m⊥‖ of the graph section)`.
pub fn ma_maximal_crosscheck(f: &ScalarGrid, c: f64) -> Result<(f64, f64)> {
    let ma = ma_residual(f, c)?.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let m = sections::mean_curvature(&graph_section(f)?)?.max_norm;
    Ok((ma, m))
}

/// A finite-difference stencil: offsets with weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil(pub Vec<([i32; 3], f64)>);

impl Stencil {
    /// Central first difference along `axis`.
    pub fn central(axis: usize, h: f64) -> Self {
        let mut p = [0; 3];
        p[axis] = 1;
        let w = 0.5 / h;
        Stencil(vec![(p, w), (p.map(|x| -x), -w)])
    }

    pub fn compose(&self, other: &Stencil) -> Stencil {
        let mut terms: Vec<([i32; 3], f64)> = Vec::new();
        for (a, wa) in &self.0 {
            for (b, wb) in &other.0 {
                terms.push(([a[0] + b[0], a[1] + b[1], a[2] + b[2]], wa * wb));
            }
        }
        terms.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        Stencil(terms)
    }

    pub fn reach(&self) -> i32 {
        self.0.iter().flat_map(|(o, _)| o.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    /// Exactly rounded application at `id`; the result depends only on the multiset of terms.
    pub fn apply(&self, f: &ScalarGrid, id: usize) -> f64 {
        let g = &f.grid;
        let s = [g.stride(0) as isize, g.stride(1) as isize, g.stride(2) as isize];
        fsum(self.0.iter().map(|(o, w)| {
            let k: isize = (0..3).map(|a| o[a] as isize * s[a]).sum();
            w * f.values[(id as isize + k) as usize]
        }))
    }
}

fn node_at_depth(g: &GridShape, id: usize, depth: usize) -> bool {
    g.multi(id).iter().zip(&g.shape).all(|(&i, &n)| i >= depth && i + depth < n)
}

/// Hessian from composed central differences `D_i D_k` (wide on the diagonal).
pub fn hessian_wide(f: &ScalarGrid, id: usize) -> Matrix3<f64> {
    let h = f.grid.hstep;
    Matrix3::from_fn(|i, k| Stencil::central(i, h).compose(&Stencil::central(k, h)).apply(f, id))
}

/// `β_i = dx0 dx_i`, `γ_j = dx_k dx_l` for `(j, k, l)` cyclic.
pub fn beta_gamma() -> ([AltForm; 3], [AltForm; 3]) {
    let beta = std::array::from_fn(|i| AltForm::monomial(4, &[0, i + 1]));
    let gamma = std::array::from_fn(|j| AltForm::monomial(4, &[(j + 1) % 3 + 1, (j + 2) % 3 + 1]));
    (beta, gamma)
}

/// `ω_i = β_i + Σ_j H_ij γ_j`.
pub fn torus_triple(hess: &Matrix3<f64>) -> HyperTriple {
    let (beta, gamma) = beta_gamma();
    let omega = std::array::from_fn(|i| {
        (0..3).fold(beta[i].clone(), |acc, j| &acc + &(&gamma[j] * hess[(i, j)]))
    });
    HyperTriple { omega }
}

/// λ making the fibre volume `μ` equal to 1.
pub fn unit_fibre_lambda(t: &HyperTriple) -> Result<f64> {
    let d = hyper::wedge_gram(t).determinant();
    if !(d > 0.0) {
        return Err(Error::NotHypersymplectic { margin: d });
    }
    // μ = ½ det^{1/3} λ^{-2/3} = 1
    Ok((0.5 * d.cbrt()).powf(1.5))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusG2Report {
    /// Max over nodes and pairs of `|∂_j ω_i - ∂_i ω_j|` coefficients.
    pub dphi_residual: f64,
    /// Max over nodes of `‖Σ_i ∂_i Θ_i‖`.
    pub dstar_residual: f64,
    /// Nodes where both residuals were evaluated (three layers in from the boundary).
    pub nodes: usize,
}

/// Per-node torsion residuals (dφ, d*φ); nodes closer than three layers to the boundary carry 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusG2Fields {
    pub dphi: Vec<f64>,
    pub dstar: Vec<f64>,
    pub nodes: usize,
}

impl TorusG2Fields {
    pub fn report(&self) -> TorusG2Report {
        TorusG2Report {
            dphi_residual: self.dphi.iter().copied().fold(0.0, f64::max),
            dstar_residual: self.dstar.iter().copied().fold(0.0, f64::max),
            nodes: self.nodes,
        }
    }
}

/// Assembles the fibre-constant G2 structure over the grid and reports torsion residuals.
pub fn torus_g2_assemble(f: &ScalarGrid) -> Result<TorusG2Report> {
    Ok(torus_g2_fields(f)?.report())
}

pub fn torus_g2_fields(f: &ScalarGrid) -> Result<TorusG2Fields> {
    require_3d(f)?;
    let g = &f.grid;
    let h = g.hstep;
    let d: Vec<Stencil> = (0..3).map(|a| Stencil::central(a, h)).collect();
    let third: Vec<Vec<Vec<Stencil>>> =
        (0..3).map(|j| (0..3).map(|i| (0..3).map(|k| d[j].compose(&d[i].compose(&d[k]))).collect()).collect()).collect();
    let depth2: Vec<usize> = (0..g.node_count()).filter(|&id| node_at_depth(g, id, 2)).collect();
    let thetas: Vec<Result<(usize, Vec<[f64; 6]>)>> = depth2
        .par_iter()
        .map(|&id| {
            let t = torus_triple(&hessian_wide(f, id));
            let lam = unit_fibre_lambda(&t)?;
            let tm = hyper::theta_mu(&t, lam)?;
            let forms = tm.theta_forms(&t);
            Ok((id, forms.iter().map(|w| std::array::from_fn(|c| w.coeffs()[c])).collect()))
        })
        .collect();
    let mut theta = vec![[[0.0; 6]; 3]; g.node_count()];
    for r in thetas {
        let (id, th) = r?;
        for i in 0..3 {
            theta[id][i] = th[i];
        }
    }
    let depth3: Vec<usize> = (0..g.node_count()).filter(|&id| node_at_depth(g, id, 3)).collect();
    let res: Vec<(f64, f64)> = depth3
        .par_iter()
        .map(|&id| {
            let mut dphi = 0.0f64;
            for i in 0..3 {
                for j in i + 1..3 {
                    for k in 0..3 {
                        let a = third[j][i][k].apply(f, id);
                        let b = third[i][j][k].apply(f, id);
                        dphi = dphi.max((a - b).abs());
                    }
                }
            }
            let mut div = [0.0; 6];
            for (i, di) in d.iter().enumerate() {
                for (o, w) in &di.0 {
                    let k: isize = (0..3).map(|a| o[a] as isize * g.stride(a) as isize).sum();
                    let q = (id as isize + k) as usize;
                    for c in 0..6 {
                        div[c] += w * theta[q][i][c];
                    }
                }
            }
            (dphi, div.iter().map(|x| x * x).sum::<f64>().sqrt())
        })
        .collect();
    let mut dphi = vec![0.0; g.node_count()];
    let mut dstar = vec![0.0; g.node_count()];
    for (&id, r) in depth3.iter().zip(&res) {
        dphi[id] = r.0;
        dstar[id] = r.1;
    }
    Ok(TorusG2Fields { dphi, dstar, nodes: depth3.len() })
}

/// Radial convex potential with `det Hess u = 1`: `u'(r) = (r³ + 1)^{1/3}`.
pub mod radial {
    /// `∇u(x) = u'(r) x / r`.
    pub fn gradient(x: &[f64]) -> [f64; 3] {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let s = (r * r * r + 1.0).cbrt() / r;
        [s * x[0], s * x[1], s * x[2]]
    }

    /// `u(r) = ∫_0^r (s³ + 1)^{1/3} ds` by adaptive Simpson quadrature.
    pub fn potential(x: &[f64]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let f = |s: f64| (s * s * s + 1.0).cbrt();
        simpson(&f, 0.0, r, 1e-14, 30)
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        rec(f, a, b, f(a), f(m), f(b), whole, tol, depth)
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Recovers a potential from the fibre part of a graph-like section by trapezoid
/// integration along axis paths from the first node (axis 0, then 1, then 2).
pub fn recover_potential(h: &SectionGrid) -> Result<ScalarGrid> {
    if h.target_dim() != 6 || h.base_dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 6, got: h.target_dim() });
    }
    let g = &h.grid;
    let hs = g.hstep;
    let mut vals = vec![0.0; g.node_count()];
    let v = |id: usize, a: usize| h.value(id)[3 + a];
    for i in 0..g.shape[0] {
        for j in 0..g.shape[1] {
            for k in 0..g.shape[2] {
                let id = g.index(&[i, j, k]);
                vals[id] = if k > 0 {
                    let p = g.index(&[i, j, k - 1]);
                    vals[p] + 0.5 * hs * (v(p, 2) + v(id, 2))
                } else if j > 0 {
                    let p = g.index(&[i, j - 1, 0]);
                    vals[p] + 0.5 * hs * (v(p, 1) + v(id, 1))
                } else if i > 0 {
                    let p = g.index(&[i - 1, 0, 0]);
                    vals[p] + 0.5 * hs * (v(p, 0) + v(id, 0))
                } else {
                    0.0
                };
            }
        }
    }
    ScalarGrid::new(g.clone(), vals)
}

/// Graph of the radial solution's gradient over the cube `[1, 2]³` with `n` nodes per side.
pub fn radial_graph(n: usize) -> Result<SectionGrid> {
    let g = GridShape::cube(3, n, 1.0, 1.0)?;
    SectionGrid::from_fn(g, SignatureSpace::split(3), |x| {
        let v = radial::gradient(x);
        vec![x[0], x[1], x[2], v[0], v[1], v[2]]
    })
}

/// Flows a graph-like section to a discrete maximal one and recovers its potential.
pub fn flow_ma_potential(h0: &SectionGrid, params: &FlowParams) -> Result<(ScalarGrid, FlowResult)> {
    let fr = flow::mcf_run(h0, params)?;
    if fr.status != FlowStatus::Converged {
        return Err(Error::Invalid(format!("flow ended with {:?}", fr.status)));
    }
    Ok((recover_potential(&fr.state)?, fr))
}

/// Polynomial map `z ↦ (f_0(z), …, f_{q+1}(z))` isotropic for `diag(+1, +1, -1 × q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct IsotropicCurve {
    pub q: usize,
    /// `polys[k][d]` is the coefficient of `z^d` in `f_k`.
    #[serde(with = "complex_pairs")]
    pub polys: Vec<Vec<Complex64>>,
}

#[derive(Deserialize)]
struct RawCurve {
    q: usize,
    #[serde(with = "complex_pairs")]
    polys: Vec<Vec<Complex64>>,
}

impl TryFrom<RawCurve> for IsotropicCurve {
    type Error = Error;
    fn try_from(r: RawCurve) -> Result<Self> {
        IsotropicCurve::new(r.q, r.polys)
    }
}

mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &[Vec<Complex64>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<Vec<(f64, f64)>> = p.iter().map(|c| c.iter().map(|z| (z.re, z.im)).collect()).collect();
        serde::Serialize::serialize(&v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Complex64>>, D::Error> {
        let v: Vec<Vec<(f64, f64)>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|c| c.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).collect())
    }
}

fn signs(q: usize) -> Vec<f64> {
    (0..q + 2).map(|k| if k < 2 { 1.0 } else { -1.0 }).collect()
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Max coefficient magnitude of `Q(f(z))`.
pub fn isotropy_residual_raw(q: usize, polys: &[Vec<Complex64>]) -> f64 {
    let s = signs(q);
    let mut total: Vec<Complex64> = Vec::new();
    for (k, f) in polys.iter().enumerate() {
        let sq = poly_mul(f, f);
        if total.len() < sq.len() {
            total.resize(sq.len(), Complex64::new(0.0, 0.0));
        }
        for (t, c) in total.iter_mut().zip(sq) {
            *t += c * s[k];
        }
    }
    total.iter().fold(0.0, |m, c| m.max(c.norm()))
}

impl IsotropicCurve {
    pub fn new(q: usize, polys: Vec<Vec<Complex64>>) -> Result<Self> {
        if polys.len() != q + 2 {
            return Err(Error::DimensionMismatch { expected: q + 2, got: polys.len() });
        }
        let r = isotropy_residual_raw(q, &polys);
        if r != 0.0 {
            return Err(Error::NotIsotropic(r));
        }
        Ok(IsotropicCurve { q, polys })
    }

    /// `(1 + z², i(1 - z²), 2z)` in `R^{2,1}`.
    pub fn q1_fixture() -> Self {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        IsotropicCurve::new(
            1,
            vec![
                vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
                vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, -1.0)],
                vec![c(0.0, 0.0), c(2.0, 0.0)],
            ],
        )
        .expect("fixture is isotropic")
    }

    pub fn space(&self) -> SignatureSpace {
        SignatureSpace::diagonal(2, self.q)
    }

    pub fn eval(&self, z: Complex64) -> Vec<Complex64> {
        self.polys.iter().map(|p| poly_eval(p, z)).collect()
    }

    /// Term-by-term antiderivatives with zero constant.
    pub fn antiderivative(&self) -> Vec<Vec<Complex64>> {
        self.polys
            .iter()
            .map(|p| {
                let mut out = vec![Complex64::new(0.0, 0.0)];
                out.extend(p.iter().enumerate().map(|(d, c)| c / (d as f64 + 1.0)));
                out
            })
            .collect()
    }
}

pub fn isotropy_residual(c: &IsotropicCurve) -> f64 {
    isotropy_residual_raw(c.q, &c.polys)
}

/// Rectangle `[re0, re1] × [im0, im1]` sampled with uniform spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

/// Samples `Re H(z)` with `H' = f`, `H(0) = 0`, on an `n_re × n_im` grid (equal spacing).
pub fn weierstrass(c: &IsotropicCurve, rect: Rect, n_re: usize) -> Result<SurfaceGrid> {
    let hs = (rect.re1 - rect.re0) / (n_re as f64 - 1.0);
    let n_im = ((rect.im1 - rect.im0) / hs).round() as usize + 1;
    let grid = GridShape::new(vec![n_re, n_im], hs, vec![rect.re0, rect.im0])?;
    let space = c.space();
    let anti = c.antiderivative();
    let mut bad = Vec::new();
    for id in 0..grid.node_count() {
        let x = grid.coords(id);
        let f = c.eval(Complex64::new(x[0], x[1]));
        let re: Vec<f64> = f.iter().map(|z| z.re).collect();
        let im: Vec<f64> = f.iter().map(|z| z.im).collect();
        let (a, b, ab) = (space.pair(&re, &re), space.pair(&im, &im), space.pair(&re, &im));
        if !(a > 0.0 && a * b - ab * ab > 0.0) {
            bad.push(id);
        }
    }
    if !bad.is_empty() {
        return Err(Error::NonPositiveGaussLift { count: bad.len(), first: bad.into_iter().take(8).collect() });
    }
    SectionGrid::from_fn(grid, space, |x| {
        let z = Complex64::new(x[0], x[1]);
        anti.iter().map(|p| poly_eval(p, z).re).collect()
    })
}

/// Orthonormal tangent frames and the quadric check at interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussMap {
    pub nodes: Vec<usize>,
    pub frames: Vec<(Vec<f64>, Vec<f64>)>,
    /// Max over nodes of `|Q(e1 + i e2)|`.
    pub quadric_residual: f64,
}

pub fn gauss_map(s: &SurfaceGrid) -> Result<GaussMap> {
    if s.base_dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: s.base_dim() });
    }
    let nodes = s.grid.interior_nodes();
    let mut frames = Vec::with_capacity(nodes.len());
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for &id in &nodes {
        let d = sections::derivatives(s, id)?;
        let a = s.space.pair(&d[0], &d[0]);
        if a <= 0.0 {
            bad.push(id);
            continue;
        }
        let e1: Vec<f64> = d[0].iter().map(|x| x / a.sqrt()).collect();
        let c = s.space.pair(&d[1], &e1);
        let w: Vec<f64> = d[1].iter().zip(&e1).map(|(x, y)| x - c * y).collect();
        let b = s.space.pair(&w, &w);
        if b <= 0.0 {
            bad.push(id);
            continue;
        }
        let e2: Vec<f64> = w.iter().map(|x| x / b.sqrt()).collect();
        let re = s.space.pair(&e1, &e1) - s.space.pair(&e2, &e2);
        let im = 2.0 * s.space.pair(&e1, &e2);
        worst = worst.max(re.hypot(im));
        frames.push((e1, e2));
    }
    if !bad.is_empty() {
        return Err(Error::NonPositiveGaussLift { count: bad.len(), first: bad.into_iter().take(8).collect() });
    }
    Ok(GaussMap { nodes, frames, quadric_residual: worst })
}

/// Per-node discrete Cauchy-Riemann residual `max_k |∂_x w_k + i ∂_y w_k|` of the Gauss
/// lift `ℓ = e1 - i e2` in the affine chart `w_k = ℓ_k / ℓ_chart`. Nodes closer than two
/// layers to the boundary carry 0.
pub fn gauss_cr_field(s: &SurfaceGrid, chart: usize) -> Result<Vec<f64>> {
    let gm = gauss_map(s)?;
    let g = &s.grid;
    let n = s.target_dim();
    if chart >= n {
        return Err(Error::DimensionMismatch { expected: n, got: chart });
    }
    let mut w: Vec<Option<Vec<Complex64>>> = vec![None; g.node_count()];
    for (id, (e1, e2)) in gm.nodes.iter().zip(&gm.frames) {
        let l: Vec<Complex64> = e1.iter().zip(e2).map(|(a, b)| Complex64::new(*a, -b)).collect();
        if l[chart].norm() == 0.0 {
            return Err(Error::Invalid("Gauss lift meets the chart's hyperplane".into()));
        }
        w[*id] = Some(l.iter().map(|x| x / l[chart]).collect());
    }
    let (sx, sy) = (g.stride(0), g.stride(1));
    let inv = 0.5 / g.hstep;
    let i = Complex64::new(0.0, 1.0);
    let mut out = vec![0.0f64; g.node_count()];
    for (id, o) in out.iter_mut().enumerate() {
        let (Some(xp), Some(xm), Some(yp), Some(ym)) =
            (w.get(id + sx).and_then(|v| v.as_ref()), id.checked_sub(sx).and_then(|k| w[k].as_ref()),
             w.get(id + sy).and_then(|v| v.as_ref()), id.checked_sub(sy).and_then(|k| w[k].as_ref()))
        else {
            continue;
        };
        let m = g.multi(id);
        if m[0] < 2 || m[1] < 2 || m[0] + 2 >= g.shape[0] || m[1] + 2 >= g.shape[1] {
            continue;
        }
        for k in 0..n {
            let dx = (xp[k] - xm[k]) * inv;
            let dy = (yp[k] - ym[k]) * inv;
            *o = f64::max(*o, (dx + i * dy).norm());
        }
    }
    Ok(out)
}

/// Max of [`gauss_cr_field`].
pub fn gauss_cr_residual(s: &SurfaceGrid, chart: usize) -> Result<f64> {
    Ok(gauss_cr_field(s, chart)?.into_iter().fold(0.0, f64::max))
}

/// Quadratic potential `½ tᵀ A t`.
pub fn quadratic_potential(grid: GridShape, a: &Matrix3<f64>) -> ScalarGrid {
    ScalarGrid::from_fn(grid, |t| {
        let v = Vector3::new(t[0], t[1], t[2]);
        0.5 * v.dot(&(a * v))
    })
}

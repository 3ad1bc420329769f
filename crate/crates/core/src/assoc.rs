//! Gradient paths of `t ↦ c·h(t)` in the metric induced by a positive section, and
//! homological matching of vanishing cycles along them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::lattice::{self, LatticeVector, ReflectionDatum};
use crate::linalg;
use crate::sections::SectionGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathParams {
    /// Fixed RK4 step in path time.
    pub step: f64,
    /// Stop once the Euclidean norm of `∇(c·h)` falls to this value.
    pub grad_tol: f64,
    pub max_steps: usize,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams { step: 1e-3, grad_tol: 1e-8, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathStop {
    Boundary,
    Critical,
    StepCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPolyline {
    pub nodes: Vec<Vec<f64>>,
    /// The tracked class as a vector in the target space.
    pub c: Vec<f64>,
    /// `c·h` interpolated at each node.
    pub profile: Vec<f64>,
    pub stop: PathStop,
    /// Eigenvalues of the Hessian of `c·h` on the complement of the path direction, at the
    /// grid nodes nearest the two ends (ascending).
    pub transverse_hessian: [Vec<f64>; 2],
}

/// Nodal fields feeding the path ODE: `c·h`, its gradient and `g⁻¹∇(c·h)` per node,
/// multilinearly interpolated between nodes.
pub struct PathField<'a> {
    grid: &'a GridShape,
    f: Vec<f64>,
    v: Vec<Vec<f64>>,
    grad: Vec<Vec<f64>>,
    positive: Vec<bool>,
}

fn nodal_derivative(h: &SectionGrid, id: usize, axis: usize) -> Vec<f64> {
    let g = &h.grid;
    let m = g.multi(id)[axis];
    let n = g.shape[axis];
    let s = g.stride(axis) as isize;
    let hs = g.hstep;
    let at = |k: isize| h.value((id as isize + k * s) as usize);
    let (a, b, c, w): (isize, isize, isize, [f64; 3]) = if m == 0 {
        (0, 1, 2, [-3.0, 4.0, -1.0])
    } else if m + 1 == n {
        (0, -1, -2, [3.0, -4.0, 1.0])
    } else {
        (-1, 0, 1, [-1.0, 0.0, 1.0])
    };
    let (va, vb, vc) = (at(a), at(b), at(c));
    (0..h.target_dim()).map(|k| (w[0] * va[k] + w[1] * vb[k] + w[2] * vc[k]) / (2.0 * hs)).collect()
}

impl<'a> PathField<'a> {
    pub fn new(h: &'a SectionGrid, c: &[f64]) -> Self {
        let g = &h.grid;
        let d = g.base_dim();
        let lc = h.space.lower(c);
        let dot = |x: &[f64]| x.iter().zip(&lc).map(|(a, b)| a * b).sum::<f64>();
        let mut f = Vec::with_capacity(g.node_count());
        let mut v = Vec::with_capacity(g.node_count());
        let mut grad = Vec::with_capacity(g.node_count());
        let mut positive = Vec::with_capacity(g.node_count());
        for id in 0..g.node_count() {
            f.push(dot(h.value(id)));
            let der: Vec<Vec<f64>> = (0..d).map(|a| nodal_derivative(h, id, a)).collect();
            let gm = DMatrix::from_fn(d, d, |i, j| h.space.pair(&der[i], &der[j]));
            let gr = DVector::from_iterator(d, der.iter().map(|x| dot(x)));
            let ok = linalg::min_eigenvalue(&gm) > 0.0;
            positive.push(ok);
            let sol = if ok { gm.cholesky().map(|ch| ch.solve(&gr)) } else { None };
            v.push(sol.map(|s| s.iter().copied().collect()).unwrap_or_else(|| vec![0.0; d]));
            grad.push(gr.iter().copied().collect());
        }
        PathField { grid: g, f, v, grad, positive }
    }

    /// Cell corner weights at `x`, or `None` outside the box.
    fn weights(&self, x: &[f64]) -> Option<Vec<(usize, f64)>> {
        let g = self.grid;
        let d = g.base_dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let s = (x[a] - g.origin[a]) / g.hstep;
            let top = (g.shape[a] - 1) as f64;
            if !(s >= -1e-12 && s <= top + 1e-12) {
                return None;
            }
            let i = (s.floor().max(0.0) as usize).min(g.shape[a] - 2);
            base[a] = i;
            frac[a] = (s - i as f64).clamp(0.0, 1.0);
        }
        let mut out = Vec::with_capacity(1 << d);
        for corner in 0..(1usize << d) {
            let mut m = base.clone();
            let mut w = 1.0;
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    m[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            out.push((g.index(&m), w));
        }
        Some(out)
    }

    fn interp(&self, w: &[(usize, f64)], field: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.base_dim()];
        for &(id, c) in w {
            for (o, x) in out.iter_mut().zip(&field[id]) {
                *o += c * x;
            }
        }
        out
    }

    /// Velocity at `x`; `Ok(None)` outside the box.
    pub fn velocity(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        let Some(w) = self.weights(x) else { return Ok(None) };
        if let Some(&(id, _)) = w.iter().find(|(id, _)| !self.positive[*id]) {
            return Err(Error::NonPositiveSection { count: 1, first: vec![id] });
        }
        Ok(Some(self.interp(&w, &self.v)))
    }

    /// Interpolated `c·h`; NaN outside the box.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.weights(x).map(|w| w.iter().map(|&(id, c)| c * self.f[id]).sum()).unwrap_or(f64::NAN)
    }

    fn grad_norm(&self, x: &[f64]) -> f64 {
        self.weights(x).map(|w| self.interp(&w, &self.grad).iter().map(|g| g * g).sum::<f64>().sqrt()).unwrap_or(0.0)
    }

    /// One classical RK4 step; `Ok(None)` if any stage leaves the box.
    pub fn rk4(&self, x: &[f64], dt: f64) -> Result<Option<Vec<f64>>> {
        let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
        let Some(k1) = self.velocity(x)? else { return Ok(None) };
        let Some(k2) = self.velocity(&add(x, &k1, 0.5 * dt))? else { return Ok(None) };
        let Some(k3) = self.velocity(&add(x, &k2, 0.5 * dt))? else { return Ok(None) };
        let Some(k4) = self.velocity(&add(x, &k3, dt))? else { return Ok(None) };
        let y: Vec<f64> =
            (0..x.len()).map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        Ok(self.weights(&y).map(|_| y))
    }

    fn transverse_hessian(&self, x: &[f64], dir: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let d = g.base_dim();
        let m: Vec<usize> = (0..d)
            .map(|a| (((x[a] - g.origin[a]) / g.hstep).round() as isize).clamp(1, g.shape[a] as isize - 2) as usize)
            .collect();
        let id = g.index(&m);
        let h2 = g.hstep * g.hstep;
        let f = |off: &[isize]| {
            let k: isize = (0..d).map(|a| off[a] * g.stride(a) as isize).sum();
            self.f[(id as isize + k) as usize]
        };
        let mut hess = DMatrix::zeros(d, d);
        for i in 0..d {
            let mut e = vec![0isize; d];
            e[i] = 1;
            let ne: Vec<isize> = e.iter().map(|x| -x).collect();
            hess[(i, i)] = (f(&e) - 2.0 * f(&vec![0; d]) + f(&ne)) / h2;
            for j in i + 1..d {
                let mut pp = vec![0isize; d];
                pp[i] = 1;
                pp[j] = 1;
                let mut pm = pp.clone();
                pm[j] = -1;
                let mp: Vec<isize> = pm.iter().map(|x| -x).collect();
                let mm: Vec<isize> = pp.iter().map(|x| -x).collect();
                let val = (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h2);
                hess[(i, j)] = val;
                hess[(j, i)] = val;
            }
        }
        let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return linalg::sym_eigenvalues(&hess);
        }
        let u = DVector::from_iterator(d, dir.iter().map(|x| x / n));
        // orthonormal complement of u
        let p = DMatrix::identity(d, d) - &u * u.transpose();
        let svd = p.clone().svd(true, false);
        let mut cols: Vec<(f64, DVector<f64>)> =
            (0..d).map(|k| (svd.singular_values[k], svd.u.as_ref().unwrap().column(k).into_owned())).collect();
        cols.sort_by(|a, b| b.0.total_cmp(&a.0));
        let basis = DMatrix::from_columns(&cols[..d - 1].iter().map(|c| c.1.clone()).collect::<Vec<_>>());
        linalg::sym_eigenvalues(&(basis.transpose() * hess * basis))
    }
}

/// Integrates `t' = g⁻¹ ∇(c·h)` from `start` with fixed-step RK4 on multilinearly
/// interpolated nodal fields. The last step before leaving the box is shortened by
/// bisection so the path ends on the boundary.
pub fn gradient_path(h: &SectionGrid, c: &[f64], start: &[f64], params: &PathParams) -> Result<PathPolyline> {
    if c.len() != h.target_dim() {
        return Err(Error::DimensionMismatch { expected: h.target_dim(), got: c.len() });
    }
    let g = &h.grid;
    let d = g.base_dim();
    if start.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: start.len() });
    }
    let strictly_inside = (0..d).all(|a| start[a] > g.origin[a] && start[a] < g.origin[a] + (g.shape[a] - 1) as f64 * g.hstep);
    if !strictly_inside {
        return Err(Error::Invalid("start point must lie inside the grid box".into()));
    }
    if !(params.step > 0.0 && params.grad_tol >= 0.0) {
        return Err(Error::Invalid("path step must be positive".into()));
    }
    let field = PathField::new(h, c);
    let mut x = start.to_vec();
    let mut nodes = vec![x.clone()];
    let mut stop = PathStop::StepCap;
    for _ in 0..params.max_steps {
        if field.grad_norm(&x) <= params.grad_tol {
            stop = PathStop::Critical;
            break;
        }
        match field.rk4(&x, params.step)? {
            Some(y) => x = y,
            None => {
                let (mut lo, mut hi) = (0.0, params.step);
                let mut best = x.clone();
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    match field.rk4(&x, mid)? {
                        Some(y) => {
                            lo = mid;
                            best = y;
                        }
                        None => hi = mid,
                    }
                }
                if best != x {
                    nodes.push(best);
                }
                stop = PathStop::Boundary;
                break;
            }
        }
        nodes.push(x.clone());
    }
    let profile = nodes.iter().map(|p| field.value(p)).collect();
    let dir_at = |p: &[f64]| field.velocity(p).ok().flatten().unwrap_or_else(|| vec![0.0; d]);
    let first = &nodes[0];
    let last = &nodes[nodes.len() - 1];
    let transverse_hessian =
        [field.transverse_hessian(first, &dir_at(first)), field.transverse_hessian(last, &dir_at(last))];
    Ok(PathPolyline { nodes, c: c.to_vec(), profile, stop, transverse_hessian })
}

/// A monodromy wall: the coordinate hyperplane `t[axis] = position`, crossing which
/// transports classes by the reflection in `datum.delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub name: String,
    pub axis: usize,
    pub position: f64,
    pub datum: ReflectionDatum,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonodromyAtlas {
    pub walls: Vec<Wall>,
}

impl MonodromyAtlas {
    /// Walls crossed by consecutive path nodes, in path order.
    pub fn crossings(&self, p: &PathPolyline) -> Vec<&Wall> {
        let mut out = Vec::new();
        for seg in p.nodes.windows(2) {
            let mut hits: Vec<(f64, &Wall)> = self
                .walls
                .iter()
                .filter_map(|w| {
                    let (a, b) = (seg[0][w.axis] - w.position, seg[1][w.axis] - w.position);
                    (a * b < 0.0).then(|| (a / (a - b), w))
                })
                .collect();
            hits.sort_by(|x, y| x.0.total_cmp(&y.0));
            out.extend(hits.into_iter().map(|h| h.1));
        }
        out
    }
}

/// Transports `endA.delta` along `p` through the atlas walls and compares it with
/// `endB.delta`. Classes are signed: `δ` and `-δ` do not match.
pub fn matching_check(
    p: &PathPolyline,
    end_a: &ReflectionDatum,
    end_b: &ReflectionDatum,
    atlas: &MonodromyAtlas,
) -> Result<bool> {
    if p.c != end_a.delta.to_real() {
        return Err(Error::PathClassMismatch);
    }
    let mut v = end_a.delta;
    for w in atlas.crossings(p) {
        v = lattice::reflect_int(&w.datum.delta, &v)?;
    }
    Ok(v == end_b.delta)
}

/// The path run backwards, tracking `c`.
pub fn reversed(p: &PathPolyline, c: &LatticeVector) -> PathPolyline {
    let mut q = p.clone();
    q.nodes.reverse();
    q.profile.reverse();
    q.transverse_hessian.reverse();
    q.c = c.to_real();
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sections::SignatureSpace;

    fn affine(n: usize) -> SectionGrid {
        let g = GridShape::unit_box(3, n).unwrap();
        SectionGrid::from_fn(g, SignatureSpace::split(3), |t| vec![t[0], t[1], t[2], t[0] + 0.5 * t[1], t[1], t[2] + 0.25 * t[0]])
            .unwrap()
    }

    #[test]
    fn affine_section_gives_straight_line() {
        let h = affine(5);
        let c = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let p = gradient_path(&h, &c, &[0.3, 0.4, 0.5], &PathParams { step: 1e-2, ..Default::default() }).unwrap();
        assert_eq!(p.stop, PathStop::Boundary);
        let (a, b) = (&p.nodes[0], &p.nodes[p.nodes.len() - 1]);
        let dir: Vec<f64> = (0..3).map(|i| b[i] - a[i]).collect();
        for q in &p.nodes {
            let w: Vec<f64> = (0..3).map(|i| q[i] - a[i]).collect();
            let cross = [w[1] * dir[2] - w[2] * dir[1], w[2] * dir[0] - w[0] * dir[2], w[0] * dir[1] - w[1] * dir[0]];
            assert!(cross.iter().all(|x| x.abs() < 1e-12));
        }
        assert!(p.profile.windows(2).all(|w| w[1] > w[0]));
        let on_boundary = b.iter().any(|&x| x.abs() < 1e-9 || (x - 1.0).abs() < 1e-9);
        assert!(on_boundary, "{b:?}");
    }

    #[test]
    fn constant_pairing_stops_immediately() {
        let h = affine(5);
        // (e1 - f1 direction) pairs with h to t0 - t0 = 0 except for the shear terms; use a null class
        let c = vec![0.0; 6];
        let p = gradient_path(&h, &c, &[0.5, 0.5, 0.5], &PathParams::default()).unwrap();
        assert_eq!(p.stop, PathStop::Critical);
        assert_eq!(p.nodes.len(), 1);
    }

    #[test]
    fn matching_basic() {
        let mut d = LatticeVector::zero();
        d.0[0] = 1;
        d.0[1] = -1;
        let a = ReflectionDatum::new(d, 0.0).unwrap();
        let p = PathPolyline {
            nodes: vec![vec![0.1, 0.1], vec![0.9, 0.1]],
            c: d.to_real(),
            profile: vec![0.0, 1.0],
            stop: PathStop::Boundary,
            transverse_hessian: [vec![], vec![]],
        };
        let atlas = MonodromyAtlas::default();
        assert!(matching_check(&p, &a, &a, &atlas).unwrap());
        let neg = ReflectionDatum::new(d.neg(), 0.0).unwrap();
        assert!(!matching_check(&p, &a, &neg, &atlas).unwrap());
        let mut other = LatticeVector::zero();
        other.0[2] = 1;
        other.0[3] = -1;
        let b = ReflectionDatum::new(other, 0.0).unwrap();
        assert_eq!(matching_check(&p, &b, &b, &atlas), Err(Error::PathClassMismatch));
    }
}

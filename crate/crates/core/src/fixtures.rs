//! Reproducible sections used by the examples, the CLI and the test suites.

use nalgebra::{DMatrix, Matrix3};
use std::f64::consts::PI;

use crate::bridges::radial;
use crate::error::Result;
use crate::grid::{GridShape, ScalarGrid};
use crate::lattice::{self, LatticeVector, RANK};
use crate::sections::{SectionGrid, SignatureSpace};

/// `Π_a sin(π (t_a - lo) / len)`, vanishing on the boundary of the cube.
pub fn bump(t: &[f64], lo: f64, len: f64) -> f64 {
    t.iter().map(|x| (PI * (x - lo) / len).sin()).product()
}

/// `diag(1, 2, 3)`: the quadratic potential used by the flow fixtures.
pub fn fixture_quadratic() -> Matrix3<f64> {
    Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 3.0))
}

/// `h(t) = (t, A t) + b(t) (v, -A v)` on the unit cube, `v = (1, 1, 1)`; equal to the
/// maximal graph of `∇(½ tᵀ A t)` on the boundary.
pub fn perturbed_quadratic_graph(n: usize, a: &Matrix3<f64>, amplitude: f64) -> Result<SectionGrid> {
    let g = GridShape::unit_box(3, n)?;
    let a = *a;
    SectionGrid::from_fn(g, SignatureSpace::split(3), move |t| {
        let b = amplitude * bump(t, 0.0, 1.0);
        let at = a * nalgebra::Vector3::new(t[0], t[1], t[2]);
        let av = a * nalgebra::Vector3::new(1.0, 1.0, 1.0);
        vec![t[0] + b, t[1] + b, t[2] + b, at[0] - b * av[0], at[1] - b * av[1], at[2] - b * av[2]]
    })
}

/// `½|t|² + 0.1 t_0³` on the unit cube: a convex potential that does not solve
/// `det Hess F = 1`.
pub fn non_ma_potential(n: usize) -> Result<ScalarGrid> {
    Ok(ScalarGrid::from_fn(GridShape::unit_box(3, n)?, |t| 0.5 * (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]) + 0.1 * t[0].powi(3)))
}

/// Spanning vectors `(e_i, A e_i)` of the graph of `A`.
pub fn quadratic_graph_span(a: &Matrix3<f64>) -> Vec<Vec<f64>> {
    (0..3)
        .map(|i| {
            let mut v = vec![0.0; 6];
            v[i] = 1.0;
            for j in 0..3 {
                v[3 + j] = a[(j, i)];
            }
            v
        })
        .collect()
}

/// Graph of the radial Monge-Ampère solution over `[1, 2]³` pushed off along
/// `(w, -w)`, `w = (1, 1, 1)/√3`, by `amplitude · bump`.
pub fn radial_seed(n: usize, amplitude: f64) -> Result<SectionGrid> {
    radial_seed_on(n, 1.0, amplitude)
}

/// As [`radial_seed`] over `[lo, lo + 1]³`, `lo > 0`.
pub fn radial_seed_on(n: usize, lo: f64, amplitude: f64) -> Result<SectionGrid> {
    let g = GridShape::cube(3, n, lo, 1.0)?;
    let w = 1.0 / 3f64.sqrt();
    SectionGrid::from_fn(g, SignatureSpace::split(3), move |t| {
        let b = amplitude * bump(t, lo, 1.0) * w;
        let v = radial::gradient(t);
        vec![t[0] + b, t[1] + b, t[2] + b, v[0] - b, v[1] - b, v[2] - b]
    })
}

/// The class `f1 + r` with `r` the first simple root of the first `E8(-1)` block.
pub fn fixture_delta() -> LatticeVector {
    let mut d = LatticeVector::unit(1);
    d.0[6] = 1;
    d
}

/// Isometric embedding `R^{3,3} → II(3,19) ⊗ R`, `(x, v) ↦ Σ x_u e_u + v_u f_u`,
/// followed by the reflection in [`fixture_delta`].
pub fn lattice_embedding() -> DMatrix<f64> {
    let mut m = DMatrix::zeros(RANK, 6);
    for u in 0..3 {
        m[(2 * u, u)] = 1.0;
        m[(2 * u + 1, 3 + u)] = 1.0;
    }
    let d = DMatrix::from_column_slice(RANK, 1, &fixture_delta().to_real());
    let gd = lattice::gram_matrix() * &d;
    let refl = DMatrix::identity(RANK, RANK) + &d * gd.transpose();
    refl * m
}

/// The radial seed embedded in the lattice space, with an extra push along the image
/// of a root of the second `E8(-1)` block (a negative direction).
pub fn lattice_radial_seed(n: usize, amplitude: f64) -> Result<SectionGrid> {
    let emb = lattice_embedding();
    let base = radial_seed(n, amplitude)?.map_target(&emb, SignatureSpace::lattice())?;
    let root = LatticeVector::unit(14).to_real();
    let grid = base.grid.clone();
    let values: Vec<f64> = (0..grid.node_count())
        .flat_map(|id| {
            let b = 0.5 * amplitude * bump(&grid.coords(id), 1.0, 1.0);
            base.value(id).iter().zip(&root).map(|(x, r)| x + b * r).collect::<Vec<_>>()
        })
        .collect();
    SectionGrid::new(grid, SignatureSpace::lattice(), values)
}

/// Exact radial graph (no perturbation) embedded in the lattice space.
pub fn lattice_radial_exact(n: usize) -> Result<SectionGrid> {
    radial_seed(n, 0.0)?.map_target(&lattice_embedding(), SignatureSpace::lattice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sections;

    #[test]
    fn embedding_is_isometric() {
        let m = lattice_embedding();
        let pulled = m.transpose() * lattice::gram_matrix() * &m;
        assert_eq!(pulled, SignatureSpace::split(3).gram);
    }

    #[test]
    fn seeds_are_positive_with_exact_boundary() {
        let a = fixture_quadratic();
        let h = perturbed_quadratic_graph(7, &a, 0.1).unwrap();
        assert!(sections::is_positive_section(&h).positive);
        let exact = perturbed_quadratic_graph(7, &a, 0.0).unwrap();
        for id in h.grid.boundary_nodes() {
            let d = h.value(id).iter().zip(exact.value(id)).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(d < 1e-16);
        }
        assert!(sections::is_positive_section(&lattice_radial_seed(5, 0.1).unwrap()).positive);
        assert!(sections::is_positive_section(&radial_seed(5, 0.1).unwrap()).positive);
    }
}

//! Uniform node grids over boxes in 2 or 3 dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node layout: `shape[a]` nodes along axis `a`, spacing `hstep`, first node at `origin`.
/// Flat node ids run with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub shape: Vec<usize>,
    pub hstep: f64,
    pub origin: Vec<f64>,
}

impl GridShape {
    pub fn new(shape: Vec<usize>, hstep: f64, origin: Vec<f64>) -> Result<Self> {
        if !(2..=4).contains(&shape.len()) {
            return Err(Error::Invalid(format!("grid must be 2-, 3- or 4-dimensional, got {}", shape.len())));
        }
        if shape.iter().any(|&n| n < 3) {
            return Err(Error::Invalid("grid needs at least 3 nodes per axis".into()));
        }
        if !(hstep > 0.0 && hstep.is_finite()) {
            return Err(Error::Invalid("hstep must be positive".into()));
        }
        if origin.len() != shape.len() || origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::DimensionMismatch { expected: shape.len(), got: origin.len() });
        }
        Ok(GridShape { shape, hstep, origin })
    }

    /// `n^d` nodes on the unit box `[0,1]^d`.
    pub fn unit_box(d: usize, n: usize) -> Result<Self> {
        GridShape::new(vec![n; d], 1.0 / (n as f64 - 1.0), vec![0.0; d])
    }

    /// `n^d` nodes on `[lo, lo + len]^d`.
    pub fn cube(d: usize, n: usize, lo: f64, len: f64) -> Result<Self> {
        GridShape::new(vec![n; d], len / (n as f64 - 1.0), vec![lo; d])
    }

    pub fn base_dim(&self) -> usize {
        self.shape.len()
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let d = self.shape.len();
        let mut s = vec![1; d];
        for a in (0..d - 1).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, mut id: usize) -> Vec<usize> {
        let mut m = vec![0; self.shape.len()];
        for a in (0..self.shape.len()).rev() {
            m[a] = id % self.shape[a];
            id /= self.shape[a];
        }
        m
    }

    pub fn coords(&self, id: usize) -> Vec<f64> {
        self.multi(id).iter().zip(&self.origin).map(|(&i, o)| o + i as f64 * self.hstep).collect()
    }

    pub fn is_interior(&self, id: usize) -> bool {
        self.multi(id).iter().zip(&self.shape).all(|(&i, &n)| i > 0 && i + 1 < n)
    }

    pub fn is_boundary(&self, id: usize) -> bool {
        !self.is_interior(id)
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.is_interior(i)).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.is_boundary(i)).collect()
    }

    /// Volume of the box spanned by the grid.
    pub fn box_volume(&self) -> f64 {
        self.shape.iter().map(|&n| (n - 1) as f64 * self.hstep).product()
    }

    /// Node of `self` coinciding with node `multi` of a coarser nested grid.
    pub fn nested_index(&self, coarse: &GridShape, multi: &[usize]) -> Result<usize> {
        let r = coarse.hstep / self.hstep;
        let ri = r.round();
        let aligned = (r - ri).abs() < 1e-9
            && coarse.shape.len() == self.shape.len()
            && coarse.origin.iter().zip(&self.origin).all(|(a, b)| (a - b).abs() < 1e-12 * (1.0 + a.abs()))
            && coarse.shape.iter().zip(&self.shape).all(|(&c, &f)| (c - 1) * ri as usize == f - 1);
        if !aligned {
            return Err(Error::Invalid("grids are not nested".into()));
        }
        let m: Vec<usize> = multi.iter().map(|&i| i * ri as usize).collect();
        Ok(self.index(&m))
    }

    /// Max of a per-node field of `self` over the nodes of a coarser nested grid lying at
    /// least `depth` layers inside it.
    pub fn max_on_nested(&self, values: &[f64], coarse: &GridShape, depth: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for id in 0..coarse.node_count() {
            let m = coarse.multi(id);
            if m.iter().zip(&coarse.shape).all(|(&i, &n)| i >= depth && i + depth < n) {
                worst = worst.max(values[self.nested_index(coarse, &m)?]);
            }
        }
        Ok(worst)
    }
}

/// One scalar per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGrid {
    pub grid: GridShape,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(grid: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::DimensionMismatch { expected: grid.node_count(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite grid value".into()));
        }
        Ok(ScalarGrid { grid, values })
    }

    pub fn from_fn(grid: GridShape, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(&grid.coords(i))).collect();
        ScalarGrid { grid, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = GridShape::new(vec![3, 4, 5], 0.5, vec![1.0, 0.0, -1.0]).unwrap();
        for id in 0..g.node_count() {
            assert_eq!(g.index(&g.multi(id)), id);
        }
        assert_eq!(g.coords(g.index(&[2, 3, 4])), vec![2.0, 1.5, 1.0]);
        assert_eq!(g.interior_nodes().len(), 1 * 2 * 3);
        assert_eq!(g.stride(0), 20);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(GridShape::new(vec![2, 3, 3], 0.1, vec![0.0; 3]).is_err());
        assert!(GridShape::new(vec![3, 3, 3], 0.0, vec![0.0; 3]).is_err());
        assert!(GridShape::new(vec![3], 0.1, vec![0.0]).is_err());
    }
}

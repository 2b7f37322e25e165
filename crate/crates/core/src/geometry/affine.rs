//! Affine maps `x -> M x + b` of `R^n`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{dot, Point};
use crate::geometry::polytope::Polytope;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Rows of `M`.
    pub matrix: Vec<Point>,
    pub offset: Point,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        let matrix = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { matrix, offset: vec![0.0; dim] }
    }

    pub fn linear(matrix: Vec<Point>) -> Self {
        let dim = matrix.len();
        Self { matrix, offset: vec![0.0; dim] }
    }

    pub fn translation(v: &[f64]) -> Self {
        Self { offset: v.to_vec(), ..Self::identity(v.len()) }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64]) -> Point {
        self.matrix.iter().zip(&self.offset).map(|(row, b)| dot(row, x) + b).collect()
    }

    pub fn apply_linear(&self, x: &[f64]) -> Point {
        self.matrix.iter().map(|row| dot(row, x)).collect()
    }

    fn nalgebra(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.matrix[i][j])
    }

    pub fn determinant(&self) -> f64 {
        self.nalgebra().determinant()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let m = self.nalgebra() * other.nalgebra();
        let n = self.dim();
        let matrix = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
        Self { matrix, offset: self.apply(&other.offset) }
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.dim();
        let inv = self
            .nalgebra()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("affine map is singular".into()))?;
        let b = -(&inv * DVector::from_column_slice(&self.offset));
        let matrix = (0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect();
        Ok(Self { matrix, offset: b.iter().copied().collect() })
    }

    /// Largest singular value of `M`.
    pub fn operator_norm(&self) -> f64 {
        self.nalgebra().singular_values().max()
    }

    pub fn map_polytope(&self, p: &Polytope) -> Result<Polytope> {
        p.map_affine(&self.matrix, &self.offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_compose() {
        let m = AffineMap { matrix: vec![vec![2.0, 1.0], vec![0.0, 3.0]], offset: vec![1.0, -1.0] };
        let inv = m.inverse().unwrap();
        let id = m.compose(&inv);
        let x = vec![0.3, -0.7];
        let y = id.apply(&x);
        assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
        assert!((m.determinant() - 6.0).abs() < 1e-12);
        assert!(AffineMap::linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).inverse().is_err());
    }

    #[test]
    fn polytope_image_volume() {
        let sq = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let m = AffineMap { matrix: vec![vec![2.0, 1.0], vec![0.0, 3.0]], offset: vec![5.0, 5.0] };
        let img = m.map_polytope(&sq).unwrap();
        assert!((img.volume() - 6.0).abs() < 1e-12);
        assert!(img.contains(&m.apply(&[0.5, 0.5]), 1e-12));
    }
}

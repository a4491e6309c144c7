//! Storage for cell-, face-, corner- and edge-located grid fields.

use crate::geometry::Grid;
use std::ops::{Deref, DerefMut};

fn l2(values: impl Iterator<Item = f64>, vol: f64) -> f64 {
    (values.map(|v| v * v).sum::<f64>() * vol).sqrt()
}

/// Scalar at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField(pub Vec<f64>);

impl CellField {
    pub fn zeros(grid: &Grid) -> Self {
        Self(vec![0.0; grid.num_cells()])
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self(vec![value; grid.num_cells()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self((0..grid.num_cells()).map(|i| f(grid.cell_center(i))).collect())
    }

    pub fn norm_l2(&self, grid: &Grid) -> f64 {
        l2(self.0.iter().copied(), grid.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Midpoint-rule integral over the torus.
    pub fn integral(&self, grid: &Grid) -> f64 {
        self.0.iter().sum::<f64>() * grid.cell_volume()
    }
}

impl Deref for CellField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for CellField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Vector field stored by normal component on cell faces.
///
/// `self.0[a][idx]` lives on the `+a` face of cell `idx`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField(pub Vec<Vec<f64>>);

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        Self(vec![vec![0.0; grid.num_cells()]; grid.dim()])
    }

    /// Samples component `a` of `f` at the centre of every `a`-face.
    pub fn from_fn(grid: &Grid, f: impl Fn(usize, [f64; 3]) -> f64) -> Self {
        Self(
            (0..grid.dim())
                .map(|a| {
                    (0..grid.num_cells())
                        .map(|i| f(a, grid.face_center(a, i)))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn comp(&self, a: usize) -> &[f64] {
        &self.0[a]
    }

    pub fn comp_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.0[a]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().flat_map(|c| c.iter().copied())
    }

    /// Plain Euclidean dot product over all face values.
    pub fn dot(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    /// Staggered midpoint L² norm: each component weighted by `h^d`.
    pub fn norm_l2(&self, grid: &Grid) -> f64 {
        l2(self.iter(), grid.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().flatten().for_each(|v| *v *= s);
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    /// Mean of each component over the torus.
    pub fn means(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }
}

/// Scalar at 2-D cell corners (`+½, +½` vertex of each cell).
#[derive(Debug, Clone, PartialEq)]
pub struct CornerField(pub Vec<f64>);

impl CornerField {
    pub fn zeros(grid: &Grid) -> Self {
        Self(vec![0.0; grid.num_cells()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self((0..grid.num_cells()).map(|i| f(grid.corner(i))).collect())
    }

    pub fn norm_l2(&self, grid: &Grid) -> f64 {
        l2(self.0.iter().copied(), grid.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Deref for CornerField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for CornerField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Vector field stored by tangential component on 3-D cell edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField(pub Vec<Vec<f64>>);

impl EdgeField {
    pub fn zeros(grid: &Grid) -> Self {
        Self(vec![vec![0.0; grid.num_cells()]; 3])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(usize, [f64; 3]) -> f64) -> Self {
        Self(
            (0..3)
                .map(|a| {
                    (0..grid.num_cells())
                        .map(|i| f(a, grid.edge_center(a, i)))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

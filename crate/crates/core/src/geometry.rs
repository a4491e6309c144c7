//! Periodic grid and the three-region decomposition of the torus.
//!
//! Cells are indexed lexicographically with axis 0 fastest. Staggered
//! quantities share the index of the cell they are attached to:
//!
//! - face `(a, idx)` sits on the `+a` side of cell `idx`,
//! - corner `idx` (2-D) sits at the `(+½, +½)` vertex of cell `idx`,
//! - edge `(a, idx)` (3-D) is parallel to axis `a` and sits at the `+½`
//!   vertex of cell `idx` in the two remaining axes.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Uniform periodic Cartesian grid on `[-L, L]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    half_len: f64,
    cells: usize,
    h: f64,
}

impl Grid {
    /// Builds a grid with `cells` cells per axis.
    pub fn new(dim: usize, half_len: f64, cells: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if !(half_len > 0.0) || !half_len.is_finite() {
            return Err(Error::InvalidGrid(format!("L must be positive, got {half_len}")));
        }
        if cells < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 cells per axis, got {cells}")));
        }
        if cells % 2 != 0 {
            return Err(Error::InvalidGrid(format!("odd resolution {cells}")));
        }
        Ok(Self {
            dim,
            half_len,
            cells,
            h: 2.0 * half_len / cells as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_len(&self) -> f64 {
        self.half_len
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_cells(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn num_faces(&self) -> usize {
        self.dim * self.num_cells()
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// `(2L)^d`.
    pub fn torus_volume(&self) -> f64 {
        (2.0 * self.half_len).powi(self.dim as i32)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.cells.pow(axis as u32)
    }

    /// Wraps a signed axis index onto `0..n`.
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.cells as isize) as usize
    }

    /// Linear index of the cell with (wrapped) axis indices `ijk`.
    pub fn index(&self, ijk: &[isize]) -> usize {
        debug_assert_eq!(ijk.len(), self.dim);
        ijk.iter()
            .enumerate()
            .map(|(a, &i)| self.wrap(i) * self.stride(a))
            .sum()
    }

    /// Axis indices of a linear cell index.
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.cells;
        let mut out = [0; 3];
        let mut rest = idx;
        for c in out.iter_mut().take(self.dim) {
            *c = rest % n;
            rest /= n;
        }
        out
    }

    /// Neighbour of `idx` shifted by `delta` cells along `axis`, periodically.
    #[inline]
    pub fn shift(&self, idx: usize, axis: usize, delta: isize) -> usize {
        let n = self.cells as isize;
        let stride = self.stride(axis);
        let c = ((idx / stride) % self.cells) as isize;
        let new = (c + delta).rem_euclid(n);
        (idx as isize + (new - c) * stride as isize) as usize
    }

    /// Coordinate of cell centre `i` along one axis.
    pub fn center_coord(&self, i: usize) -> f64 {
        -self.half_len + (i as f64 + 0.5) * self.h
    }

    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.center_coord(c[a]);
        }
        x
    }

    /// Centre of face `(axis, idx)`.
    pub fn face_center(&self, axis: usize, idx: usize) -> [f64; 3] {
        let mut x = self.cell_center(idx);
        x[axis] += 0.5 * self.h;
        x
    }

    /// 2-D corner location.
    pub fn corner(&self, idx: usize) -> [f64; 3] {
        let mut x = self.cell_center(idx);
        x[0] += 0.5 * self.h;
        x[1] += 0.5 * self.h;
        x
    }

    /// Midpoint of 3-D edge `(axis, idx)`.
    pub fn edge_center(&self, axis: usize, idx: usize) -> [f64; 3] {
        let mut x = self.cell_center(idx);
        for a in 0..3 {
            if a != axis {
                x[a] += 0.5 * self.h;
            }
        }
        x
    }
}

/// Region a cell centre falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Immersed solid `Ω_int`.
    Interior,
    /// Fluid annulus `Ω_F = Ω \ Ω̄_int`.
    Fluid,
    /// Exterior `T^d \ Ω̄`.
    Exterior,
}

impl Region {
    pub fn is_solid(self) -> bool {
        !matches!(self, Region::Fluid)
    }
}

/// Concentric balls centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub r_outer: f64,
    /// Zero disables the immersed solid.
    pub r_inner: f64,
}

impl Shape {
    pub fn new(r_outer: f64, r_inner: f64) -> Self {
        Self { r_outer, r_inner }
    }

    pub fn has_interior(&self) -> bool {
        self.r_inner > 0.0
    }
}

impl Default for Shape {
    fn default() -> Self {
        Self::new(0.7, 0.3)
    }
}

/// A quadrature point on a boundary sphere/circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub point: [f64; 3],
    /// Outward unit normal (pointing away from the origin).
    pub normal: [f64; 3],
    /// Arc length (2-D) or area (3-D) carried by this sample.
    pub weight: f64,
}

/// Cell labels, signed distances and boundary samples. Immutable once built.
#[derive(Debug, Clone)]
pub struct RegionMap {
    grid: Grid,
    shape: Shape,
    labels: Vec<Region>,
    /// `|x| - R_O`: negative inside `Ω`.
    dist_outer: Vec<f64>,
    /// `|x| - R_I`: negative inside `Ω_int`.
    dist_inner: Vec<f64>,
    outer_samples: Vec<BoundarySample>,
    inner_samples: Vec<BoundarySample>,
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn sphere_samples(dim: usize, radius: f64, spacing: f64) -> Vec<BoundarySample> {
    if radius <= 0.0 {
        return Vec::new();
    }
    if dim == 2 {
        let count = ((2.0 * PI * radius / spacing).ceil() as usize).max(8);
        let weight = 2.0 * PI * radius / count as f64;
        (0..count)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / count as f64;
                let normal = [theta.cos(), theta.sin(), 0.0];
                BoundarySample {
                    point: [radius * normal[0], radius * normal[1], 0.0],
                    normal,
                    weight,
                }
            })
            .collect()
    } else {
        // Fibonacci lattice: quasi-uniform with spacing ~ sqrt(area / count).
        let area = 4.0 * PI * radius * radius;
        let count = ((area / (spacing * spacing)).ceil() as usize).max(32);
        let golden = PI * (3.0 - 5f64.sqrt());
        let weight = area / count as f64;
        (0..count)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * k as f64;
                let mut normal = [rho * phi.cos(), rho * phi.sin(), z];
                let len = norm3(&normal);
                normal.iter_mut().for_each(|c| *c /= len);
                BoundarySample {
                    point: [radius * normal[0], radius * normal[1], radius * normal[2]],
                    normal,
                    weight,
                }
            })
            .collect()
    }
}

impl RegionMap {
    /// Labels every cell by its centre and samples `∂Ω`, `∂Ω_int` at spacing ≈ h.
    pub fn classify(grid: &Grid, shape: Shape) -> Result<Self> {
        let l = grid.half_len();
        if !(shape.r_outer > 0.0) || shape.r_outer >= l {
            return Err(Error::InvalidGeometry(format!(
                "outer radius {} must lie in (0, L = {l})",
                shape.r_outer
            )));
        }
        if shape.r_inner < 0.0 || shape.r_inner >= shape.r_outer {
            return Err(Error::InvalidGeometry(format!(
                "inner radius {} must lie in [0, R_outer = {})",
                shape.r_inner, shape.r_outer
            )));
        }
        let ncell = grid.num_cells();
        let mut labels = Vec::with_capacity(ncell);
        let mut dist_outer = Vec::with_capacity(ncell);
        let mut dist_inner = Vec::with_capacity(ncell);
        for idx in 0..ncell {
            let r = norm3(&grid.cell_center(idx));
            let d_out = r - shape.r_outer;
            let d_in = r - shape.r_inner;
            let label = if d_out >= 0.0 {
                Region::Exterior
            } else if shape.has_interior() && d_in < 0.0 {
                Region::Interior
            } else {
                Region::Fluid
            };
            labels.push(label);
            dist_outer.push(d_out);
            dist_inner.push(d_in);
        }
        // Ω̄ must stay clear of the periodic seam.
        let last = grid.cells_per_axis() - 1;
        for (idx, label) in labels.iter().enumerate() {
            if *label != Region::Exterior {
                let c = grid.coords(idx);
                if (0..grid.dim()).any(|a| c[a] == 0 || c[a] == last) {
                    return Err(Error::InvalidGeometry(format!(
                        "outer radius {} reaches the periodic seam at cell {idx}",
                        shape.r_outer
                    )));
                }
            }
        }
        let outer_samples = sphere_samples(grid.dim(), shape.r_outer, grid.h());
        let inner_samples = if shape.has_interior() {
            sphere_samples(grid.dim(), shape.r_inner, grid.h())
        } else {
            Vec::new()
        };
        Ok(Self {
            grid: grid.clone(),
            shape,
            labels,
            dist_outer,
            dist_inner,
            outer_samples,
            inner_samples,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> Region {
        self.labels[idx]
    }

    pub fn dist_outer(&self) -> &[f64] {
        &self.dist_outer
    }

    pub fn dist_inner(&self) -> &[f64] {
        &self.dist_inner
    }

    pub fn outer_samples(&self) -> &[BoundarySample] {
        &self.outer_samples
    }

    pub fn inner_samples(&self) -> &[BoundarySample] {
        &self.inner_samples
    }

    /// Measured volume of the cells carrying `region`.
    pub fn volume(&self, region: Region) -> f64 {
        self.labels.iter().filter(|&&l| l == region).count() as f64 * self.grid.cell_volume()
    }

    /// Distance from cell `idx` to the interface bounding its own region.
    ///
    /// Fluid cells report the distance to the nearer of the two boundaries.
    pub fn depth(&self, idx: usize) -> f64 {
        match self.labels[idx] {
            Region::Interior => -self.dist_inner[idx],
            Region::Exterior => self.dist_outer[idx],
            Region::Fluid => {
                let d = -self.dist_outer[idx];
                if self.shape.has_interior() {
                    d.min(self.dist_inner[idx])
                } else {
                    d
                }
            }
        }
    }

    /// True when cell `idx` lies in `region` at least `margin` away from its boundary.
    pub fn in_plateau(&self, idx: usize, region: Region, margin: f64) -> bool {
        self.labels[idx] == region && self.depth(idx) > margin
    }

    /// Mask of solid (`Ω_int ∪ Ω_ext`) cells deeper than `margin`.
    pub fn solid_plateau(&self, margin: f64) -> Vec<bool> {
        (0..self.labels.len())
            .map(|i| self.labels[i].is_solid() && self.depth(i) > margin)
            .collect()
    }

    pub fn plateau(&self, region: Region, margin: f64) -> Vec<bool> {
        (0..self.labels.len())
            .map(|i| self.in_plateau(i, region, margin))
            .collect()
    }

    /// Signed distance of an arbitrary point to `∂Ω` (negative inside).
    pub fn point_dist_outer(&self, x: &[f64; 3]) -> f64 {
        norm3(x) - self.shape.r_outer
    }

    /// Signed distance of an arbitrary point to `∂Ω_int` (negative inside).
    pub fn point_dist_inner(&self, x: &[f64; 3]) -> f64 {
        norm3(x) - self.shape.r_inner
    }
}

/// C¹ smoothstep of the signed distance `s` across a band of width `w`.
///
/// Returns 0 for `s ≤ -w/2`, 1 for `s ≥ w/2`, and `3t² - 2t³` in between.
pub fn mollifier(s: f64, w: f64) -> f64 {
    assert!(w > 0.0, "transition width must be positive");
    let t = ((s + 0.5 * w) / w).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Derivative of [`mollifier`] with respect to `s`.
pub fn mollifier_slope(s: f64, w: f64) -> f64 {
    assert!(w > 0.0, "transition width must be positive");
    let t = (s + 0.5 * w) / w;
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    6.0 * t * (1.0 - t) / w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = Grid::new(2, 1.0, 8).unwrap();
        assert_eq!(g.h(), 0.25);
        let g = Grid::new(2, PI, 64).unwrap();
        assert_eq!(g.h(), 2.0 * PI / 64.0);
        assert_eq!(g.num_faces(), 2 * 64 * 64);
        assert_eq!(g.num_cells(), 64 * 64);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(Grid::new(3, 1.0, 7), Err(Error::InvalidGrid(_))));
        assert!(Grid::new(2, 1.0, 6).is_err());
        assert!(Grid::new(2, 0.0, 16).is_err());
        assert!(Grid::new(2, -1.0, 16).is_err());
        assert!(Grid::new(4, 1.0, 16).is_err());
    }

    #[test]
    fn periodic_wrap() {
        let g = Grid::new(3, 1.0, 8).unwrap();
        assert_eq!(g.index(&[1, 2, 3]), g.index(&[9, 10, -5]));
        let idx = g.index(&[7, 0, 4]);
        assert_eq!(g.shift(idx, 0, 1), g.index(&[0, 0, 4]));
        assert_eq!(g.shift(idx, 1, -1), g.index(&[7, 7, 4]));
        assert_eq!(g.shift(idx, 2, 8), idx);
    }

    fn cell_at(g: &Grid, x: f64, y: f64) -> usize {
        let i = ((x + g.half_len()) / g.h()).floor() as isize;
        let j = ((y + g.half_len()) / g.h()).floor() as isize;
        g.index(&[i, j])
    }

    #[test]
    fn labels_by_radius() {
        let g = Grid::new(2, 1.0, 40).unwrap();
        let map = RegionMap::classify(&g, Shape::new(0.7, 0.3)).unwrap();
        assert_eq!(map.label(cell_at(&g, 0.0, 0.0)), Region::Interior);
        assert_eq!(map.label(cell_at(&g, 0.5, 0.0)), Region::Fluid);
        assert_eq!(map.label(cell_at(&g, 0.9, 0.0)), Region::Exterior);
    }

    #[test]
    fn rejects_bad_radii() {
        let g = Grid::new(2, 1.0, 32).unwrap();
        assert!(RegionMap::classify(&g, Shape::new(1.0, 0.3)).is_err());
        assert!(RegionMap::classify(&g, Shape::new(0.5, 0.5)).is_err());
        assert!(RegionMap::classify(&g, Shape::new(0.5, 0.6)).is_err());
        // Touches the seam cells even though R_O < L.
        assert!(RegionMap::classify(&g, Shape::new(0.99, 0.3)).is_err());
    }

    #[test]
    fn no_interior_when_inner_radius_zero() {
        let g = Grid::new(2, 1.0, 32).unwrap();
        let map = RegionMap::classify(&g, Shape::new(0.7, 0.0)).unwrap();
        assert_eq!(map.volume(Region::Interior), 0.0);
        assert!(map.inner_samples().is_empty());
    }

    #[test]
    fn samples_on_circle_with_radial_normals() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let map = RegionMap::classify(&g, Shape::new(0.7, 0.3)).unwrap();
        for (s, r) in map
            .outer_samples()
            .iter()
            .map(|s| (s, 0.7))
            .chain(map.inner_samples().iter().map(|s| (s, 0.3)))
        {
            assert!((norm3(&s.point) - r).abs() < 1e-12);
            assert!((norm3(&s.normal) - 1.0).abs() < 1e-12);
            let len = norm3(&s.point);
            for a in 0..3 {
                assert!((s.normal[a] - s.point[a] / len).abs() < 1e-15);
            }
        }
        let total: f64 = map.outer_samples().iter().map(|s| s.weight).sum();
        assert!((total - 2.0 * PI * 0.7).abs() < 1e-12);
        let spacing = map.outer_samples()[0].weight;
        assert!(spacing <= g.h() && spacing > 0.5 * g.h());
    }

    #[test]
    fn sphere_samples_3d() {
        let g = Grid::new(3, 1.0, 16).unwrap();
        let map = RegionMap::classify(&g, Shape::new(0.6, 0.25)).unwrap();
        let total: f64 = map.outer_samples().iter().map(|s| s.weight).sum();
        assert!((total - 4.0 * PI * 0.36).abs() < 1e-12);
        for s in map.outer_samples() {
            assert!((norm3(&s.normal) - 1.0).abs() < 1e-12);
            assert!((norm3(&s.point) - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn annulus_volume_converges_linearly() {
        let exact = PI * (0.7f64.powi(2) - 0.3f64.powi(2));
        let mut worst = 0.0f64;
        for n in [32, 64, 128] {
            let g = Grid::new(2, 1.0, n).unwrap();
            let map = RegionMap::classify(&g, Shape::new(0.7, 0.3)).unwrap();
            let err = (map.volume(Region::Fluid) - exact).abs();
            worst = worst.max(err / g.h());
        }
        // C·h with a modest C: the measured constant is well below 2.
        assert!(worst < 2.0, "C = {worst}");
    }

    #[test]
    fn labels_partition_cells() {
        let g = Grid::new(2, 1.0, 32).unwrap();
        let map = RegionMap::classify(&g, Shape::default()).unwrap();
        let total = map.volume(Region::Interior) + map.volume(Region::Fluid) + map.volume(Region::Exterior);
        assert!((total - g.torus_volume()).abs() < 1e-12);
    }

    #[test]
    fn mollifier_values() {
        let w = 0.3;
        assert_eq!(mollifier(-w, w), 0.0);
        assert_eq!(mollifier(0.0, w), 0.5);
        assert_eq!(mollifier(w, w), 1.0);
    }

    #[test]
    fn mollifier_is_c1_at_band_ends() {
        let w = 0.2;
        for fd in [1e-3, 1e-4, 1e-5] {
            for end in [-0.5 * w, 0.5 * w] {
                let inner = if end < 0.0 { end + fd } else { end - fd };
                let slope = (mollifier(inner, w) - mollifier(end, w)) / (inner - end);
                // One-sided slope is O(fd) since q' vanishes at the ends.
                assert!(slope.abs() <= 4.0 * fd / (w * w), "fd {fd}: {slope}");
            }
        }
    }

    #[test]
    fn mollifier_monotone() {
        let w = 1.0;
        let mut prev = -1.0;
        for k in 0..=200 {
            let s = -1.0 + 0.01 * k as f64;
            let q = mollifier(s, w);
            assert!(q >= prev);
            prev = q;
        }
    }
}

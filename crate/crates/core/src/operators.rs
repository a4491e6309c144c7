//! Second-order staggered difference operators on the periodic grid.
//!
//! Scalars live at cell centres, vector fields on faces, 2-D curls at
//! corners and 3-D curls on edges (Yee layout). Every pairing is built from
//! forward/backward differences so that `div ∘ curl` vanishes identically and
//! `grad` is the negative transpose of `div`.

use crate::eos::Tensor;
use crate::field::{CellField, CornerField, EdgeField, FaceField};
use crate::geometry::Grid;

/// Face gradient of a cell scalar.
pub fn grad(grid: &Grid, f: &CellField) -> FaceField {
    let inv_h = 1.0 / grid.h();
    let mut out = FaceField::zeros(grid);
    for a in 0..grid.dim() {
        let c = out.comp_mut(a);
        for (i, v) in c.iter_mut().enumerate() {
            *v = (f[grid.shift(i, a, 1)] - f[i]) * inv_h;
        }
    }
    out
}

/// Cell divergence of a face field.
pub fn div(grid: &Grid, f: &FaceField) -> CellField {
    let inv_h = 1.0 / grid.h();
    let mut out = CellField::zeros(grid);
    for a in 0..grid.dim() {
        let c = f.comp(a);
        for (i, v) in out.iter_mut().enumerate() {
            *v += (c[i] - c[grid.shift(i, a, -1)]) * inv_h;
        }
    }
    out
}

/// Five-point (seven-point in 3-D) Laplacian, equal to `div ∘ grad`.
pub fn laplacian(grid: &Grid, f: &CellField) -> CellField {
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut out = CellField::zeros(grid);
    for a in 0..grid.dim() {
        for (i, v) in out.iter_mut().enumerate() {
            *v += (f[grid.shift(i, a, 1)] - 2.0 * f[i] + f[grid.shift(i, a, -1)]) * inv_h2;
        }
    }
    out
}

/// 2-D scalar curl `∂x H_y - ∂y H_x` at corners.
pub fn curl2_vec(grid: &Grid, hf: &FaceField) -> CornerField {
    debug_assert_eq!(grid.dim(), 2);
    let inv_h = 1.0 / grid.h();
    let (hx, hy) = (hf.comp(0), hf.comp(1));
    let mut out = CornerField::zeros(grid);
    for (i, v) in out.iter_mut().enumerate() {
        *v = (hy[grid.shift(i, 0, 1)] - hy[i] - hx[grid.shift(i, 1, 1)] + hx[i]) * inv_h;
    }
    out
}

/// 2-D vector curl `(∂y ψ, -∂x ψ)` of a corner scalar, on faces.
///
/// This is the transpose of [`curl2_vec`].
pub fn curl2_scal(grid: &Grid, psi: &CornerField) -> FaceField {
    debug_assert_eq!(grid.dim(), 2);
    let inv_h = 1.0 / grid.h();
    let mut out = FaceField::zeros(grid);
    {
        let x = out.comp_mut(0);
        for (i, v) in x.iter_mut().enumerate() {
            *v = (psi[i] - psi[grid.shift(i, 1, -1)]) * inv_h;
        }
    }
    {
        let y = out.comp_mut(1);
        for (i, v) in y.iter_mut().enumerate() {
            *v = -(psi[i] - psi[grid.shift(i, 0, -1)]) * inv_h;
        }
    }
    out
}

const CYCLIC: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

/// 3-D curl of a face field onto edges (Yee layout).
pub fn curl3(grid: &Grid, hf: &FaceField) -> EdgeField {
    debug_assert_eq!(grid.dim(), 3);
    let inv_h = 1.0 / grid.h();
    let mut out = EdgeField::zeros(grid);
    for &(a, b, c) in &CYCLIC {
        let (hb, hc) = (hf.comp(b), hf.comp(c));
        for (i, v) in out.0[a].iter_mut().enumerate() {
            *v = (hc[grid.shift(i, b, 1)] - hc[i] - hb[grid.shift(i, c, 1)] + hb[i]) * inv_h;
        }
    }
    out
}

/// 3-D curl of an edge field onto faces; the transpose of [`curl3`].
pub fn curl3_adjoint(grid: &Grid, e: &EdgeField) -> FaceField {
    debug_assert_eq!(grid.dim(), 3);
    let inv_h = 1.0 / grid.h();
    let mut out = FaceField::zeros(grid);
    for &(a, b, c) in &CYCLIC {
        let (eb, ec) = (&e.0[b], &e.0[c]);
        for (i, v) in out.comp_mut(a).iter_mut().enumerate() {
            *v = (ec[i] - ec[grid.shift(i, b, -1)] - eb[i] + eb[grid.shift(i, c, -1)]) * inv_h;
        }
    }
    out
}

/// Symmetric gradient `½(∇u + ∇ᵗu)` at cell centres.
///
/// Diagonal entries are exact one-cell differences; off-diagonal entries
/// average the four surrounding corner (2-D) or edge (3-D) values.
pub fn sym_grad(grid: &Grid, u: &FaceField) -> Vec<Tensor> {
    let d = grid.dim();
    let inv_h = 1.0 / grid.h();
    let n = grid.num_cells();
    let mut out = vec![[[0.0; 3]; 3]; n];
    for a in 0..d {
        let ua = u.comp(a);
        for (i, t) in out.iter_mut().enumerate() {
            t[a][a] = (ua[i] - ua[grid.shift(i, a, -1)]) * inv_h;
        }
    }
    for a in 0..d {
        for b in (a + 1)..d {
            // ½(∂b u_a + ∂a u_b) at the (+½ a, +½ b) vertex of each cell.
            let (ua, ub) = (u.comp(a), u.comp(b));
            let vertex: Vec<f64> = (0..n)
                .map(|i| {
                    0.5 * ((ua[grid.shift(i, b, 1)] - ua[i]) + (ub[grid.shift(i, a, 1)] - ub[i])) * inv_h
                })
                .collect();
            for (i, t) in out.iter_mut().enumerate() {
                let ia = grid.shift(i, a, -1);
                let ib = grid.shift(i, b, -1);
                let iab = grid.shift(ia, b, -1);
                let v = 0.25 * (vertex[i] + vertex[ia] + vertex[ib] + vertex[iab]);
                t[a][b] = v;
                t[b][a] = v;
            }
        }
    }
    out
}

/// Squared discrete L² norm of the full gradient `∇h H` of a face field.
///
/// Every first difference `∂b H_a` is taken at its natural staggered location.
pub fn gradient_norm_sq(grid: &Grid, hf: &FaceField) -> f64 {
    let inv_h = 1.0 / grid.h();
    let mut sum = 0.0;
    for a in 0..grid.dim() {
        let ha = hf.comp(a);
        for b in 0..grid.dim() {
            for i in 0..grid.num_cells() {
                let d = (ha[grid.shift(i, b, 1)] - ha[i]) * inv_h;
                sum += d * d;
            }
        }
    }
    sum * grid.cell_volume()
}

/// `‖∇h H‖ / (‖H‖ + ‖curl H‖ + ‖div H‖)`; `None` for the zero field.
pub fn gaffney_ratio(grid: &Grid, hf: &FaceField) -> Option<f64> {
    let h_norm = hf.norm_l2(grid);
    if h_norm == 0.0 {
        return None;
    }
    let curl_norm = if grid.dim() == 2 {
        curl2_vec(grid, hf).norm_l2(grid)
    } else {
        let e = curl3(grid, hf);
        (e.dot(&e) * grid.cell_volume()).sqrt()
    };
    let div_norm = div(grid, hf).norm_l2(grid);
    Some(gradient_norm_sq(grid, hf).sqrt() / (h_norm + curl_norm + div_norm))
}

/// Averages a face field onto 2-D corners: component `a` is averaged along
/// the other axis.
pub fn face_to_corner(grid: &Grid, f: &FaceField) -> [CornerField; 2] {
    let mut ax = CornerField::zeros(grid);
    let mut ay = CornerField::zeros(grid);
    let (fx, fy) = (f.comp(0), f.comp(1));
    for i in 0..grid.num_cells() {
        ax[i] = 0.5 * (fx[i] + fx[grid.shift(i, 1, 1)]);
        ay[i] = 0.5 * (fy[i] + fy[grid.shift(i, 0, 1)]);
    }
    [ax, ay]
}

/// Averages a face field onto cell centres.
pub fn face_to_cell(grid: &Grid, f: &FaceField) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]; grid.num_cells()];
    for a in 0..grid.dim() {
        let c = f.comp(a);
        for (i, v) in out.iter_mut().enumerate() {
            v[a] = 0.5 * (c[i] + c[grid.shift(i, a, -1)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_cells(g: &Grid, rng: &mut ChaCha8Rng) -> CellField {
        CellField((0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn random_faces(g: &Grid, rng: &mut ChaCha8Rng) -> FaceField {
        FaceField(
            (0..g.dim())
                .map(|_| (0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
        )
    }

    #[test]
    fn grad_of_constant_vanishes() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let f = CellField::constant(&g, 3.5);
        assert_eq!(grad(&g, &f).max_abs(), 0.0);
        let f3 = CellField::constant(&Grid::new(3, 1.0, 8).unwrap(), -1.0);
        assert_eq!(grad(&Grid::new(3, 1.0, 8).unwrap(), &f3).max_abs(), 0.0);
    }

    #[test]
    fn grad_exact_on_linear_away_from_seam() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let f = CellField::from_fn(&g, |x| 2.0 * x[0] - 0.5 * x[1]);
        let gf = grad(&g, &f);
        for i in 0..g.num_cells() {
            let c = g.coords(i);
            if c[0] + 1 < 16 {
                assert!((gf.comp(0)[i] - 2.0).abs() < 1e-12);
            }
            if c[1] + 1 < 16 {
                assert!((gf.comp(1)[i] + 0.5).abs() < 1e-12);
            }
        }
    }

    fn grad_error(n: usize) -> f64 {
        let l = 1.0;
        let g = Grid::new(2, l, n).unwrap();
        let k = PI / l;
        let f = CellField::from_fn(&g, |x| (k * x[0]).sin());
        let gf = grad(&g, &f);
        (0..g.num_cells())
            .map(|i| (gf.comp(0)[i] - k * (k * g.face_center(0, i)[0]).cos()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grad_is_second_order() {
        let e128 = grad_error(128);
        assert!(e128 < 5.0 * (2.0 / 128.0f64).powi(2));
        let ratio = grad_error(64) / e128;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn div_of_constant_vanishes() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let f = FaceField::from_fn(&g, |a, _| 1.0 + a as f64);
        assert_eq!(div(&g, &f).max_abs(), 0.0);
    }

    #[test]
    fn div_grad_is_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [2, 3] {
            let g = Grid::new(dim, 1.0, 8).unwrap();
            let f = random_cells(&g, &mut rng);
            let a = div(&g, &grad(&g, &f));
            let b = laplacian(&g, &f);
            let scale = b.max_abs();
            for i in 0..g.num_cells() {
                assert!((a[i] - b[i]).abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn summation_by_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dim in [2, 3] {
            let g = Grid::new(dim, 1.0, 8).unwrap();
            for _ in 0..20 {
                let f = random_faces(&g, &mut rng);
                let p = random_cells(&g, &mut rng);
                let lhs: f64 = div(&g, &f).iter().zip(p.iter()).map(|(a, b)| a * b).sum();
                let rhs = -f.dot(&grad(&g, &p));
                assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(rhs.abs()).max(1.0));
            }
        }
    }

    #[test]
    fn div_curl2_vanishes_structurally() {
        // h = 1 so that the identity is tested at unit scale.
        let g = Grid::new(2, 8.0, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let psi = CornerField((0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            assert!(div(&g, &curl2_scal(&g, &psi)).max_abs() <= 1e-14);
        }
    }

    #[test]
    fn div_curl3_vanishes_structurally() {
        let g = Grid::new(3, 4.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let e = EdgeField(
                (0..3)
                    .map(|_| (0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect(),
            );
            assert!(div(&g, &curl3_adjoint(&g, &e)).max_abs() <= 1e-14);
            // curl of grad is zero as well
            let p = random_cells(&g, &mut rng);
            assert!(curl3(&g, &grad(&g, &p)).max_abs() <= 1e-14);
        }
    }

    #[test]
    fn curl_transposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = Grid::new(2, 1.0, 8).unwrap();
        let h = random_faces(&g, &mut rng);
        let psi = CornerField((0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let lhs: f64 = curl2_vec(&g, &h).iter().zip(psi.iter()).map(|(a, b)| a * b).sum();
        let rhs = curl2_scal(&g, &psi).dot(&h);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));

        let g = Grid::new(3, 1.0, 8).unwrap();
        let h = random_faces(&g, &mut rng);
        let e = EdgeField(
            (0..3)
                .map(|_| (0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
        );
        let lhs = curl3(&g, &h).dot(&e);
        let rhs = curl3_adjoint(&g, &e).dot(&h);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    fn curl2_error(n: usize) -> f64 {
        let g = Grid::new(2, PI, n).unwrap();
        let h = FaceField::from_fn(&g, |a, x| if a == 0 { -x[1].sin() } else { x[0].sin() });
        let c = curl2_vec(&g, &h);
        (0..g.num_cells())
            .map(|i| {
                let x = g.corner(i);
                (c[i] - (x[0].cos() + x[1].cos())).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn curl2_second_order() {
        let e = curl2_error(64);
        assert!(e < 2.0 * (2.0 * PI / 64.0f64).powi(2));
        let ratio = curl2_error(64) / curl2_error(128);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        let g = Grid::new(2, 1.0, 16).unwrap();
        let hc = FaceField::from_fn(&g, |a, _| 0.3 + a as f64);
        assert_eq!(curl2_vec(&g, &hc).max_abs(), 0.0);
    }

    #[test]
    fn curl3_matches_analytic() {
        let n = 32;
        let g = Grid::new(3, PI, n).unwrap();
        // H = (sin y, sin z, sin x): curl = (-cos z, -cos x, -cos y)
        let h = FaceField::from_fn(&g, |a, x| x[(a + 1) % 3].sin());
        let e = curl3(&g, &h);
        let mut err = 0.0f64;
        for a in 0..3 {
            for i in 0..g.num_cells() {
                let x = g.edge_center(a, i);
                let exact = -x[(a + 2) % 3].cos();
                err = err.max((e.0[a][i] - exact).abs());
            }
        }
        assert!(err < 2.0 * g.h() * g.h(), "{err}");
    }

    fn sym_grad_error(n: usize) -> f64 {
        let g = Grid::new(2, PI, n).unwrap();
        let u = FaceField::from_fn(&g, |a, x| if a == 0 { -x[1].sin() } else { x[0].sin() });
        let d = sym_grad(&g, &u);
        let mut err = 0.0f64;
        for (i, t) in d.iter().enumerate() {
            let x = g.cell_center(i);
            let off = 0.5 * (x[0].cos() - x[1].cos());
            err = err.max(t[0][0].abs()).max(t[1][1].abs());
            err = err.max((t[0][1] - off).abs()).max((t[1][0] - off).abs());
        }
        err
    }

    #[test]
    fn sym_grad_rotation() {
        let ratio = sym_grad_error(64) / sym_grad_error(128);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        assert!(sym_grad_error(64) < 2.0 * (2.0 * PI / 64.0f64).powi(2));
    }

    #[test]
    fn sym_grad_constant_and_linear() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let u = FaceField::from_fn(&g, |a, _| 1.0 - a as f64);
        assert!(sym_grad(&g, &u).iter().flatten().flatten().all(|v| *v == 0.0));
        let u = FaceField::from_fn(&g, |a, x| if a == 0 { x[0] } else { 0.0 });
        let d = sym_grad(&g, &u);
        for (i, t) in d.iter().enumerate() {
            if g.coords(i)[0] != 0 {
                assert!((t[0][0] - 1.0).abs() < 1e-12);
                assert_eq!(t[0][1], 0.0);
            }
        }
    }

    #[test]
    fn gaffney_cases() {
        let g = Grid::new(2, PI, 64).unwrap();
        assert!(gaffney_ratio(&g, &FaceField::zeros(&g)).is_none());
        let c = FaceField::from_fn(&g, |a, _| 1.0 + a as f64);
        assert_eq!(gaffney_ratio(&g, &c), Some(0.0));
        let f = CellField::from_fn(&g, |x| (x[0]).sin() * (2.0 * x[1]).cos());
        let r = gaffney_ratio(&g, &grad(&g, &f)).unwrap();
        assert!(r.is_finite() && r > 0.0 && r < 10.0, "{r}");
    }
}

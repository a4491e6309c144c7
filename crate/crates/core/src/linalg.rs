//! Linear solvers: preconditioned conjugate gradients and an exact FFT solver
//! for the constant-coefficient periodic Laplacian.

use crate::error::{Error, Result};
use crate::geometry::Grid;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `‖b - Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Restrict iterates to zero-mean vectors (singular periodic operators).
    pub zero_mean: bool,
}

impl CgOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            zero_mean: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned [`pcg_with`].
pub fn pcg(
    name: &'static str,
    apply: impl FnMut(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<CgReport> {
    let jacobi = |r: &[f64], z: &mut [f64]| {
        for ((z, r), d) in z.iter_mut().zip(r).zip(diag) {
            *z = r / d;
        }
    };
    pcg_with(name, apply, jacobi, b, x, opts)
}

/// Solves `A x = b` for symmetric positive (semi-)definite `A` given as a
/// matrix-free product, starting from the incoming `x`. `precond` must be a
/// fixed symmetric positive definite map.
pub fn pcg_with(
    name: &'static str,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<CgReport> {
    let n = b.len();
    let mut rhs = b.to_vec();
    if opts.zero_mean {
        remove_mean(&mut rhs);
        remove_mean(x);
    }
    let b_norm = dot(&rhs, &rhs).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    if opts.zero_mean {
        remove_mean(&mut r);
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    if opts.zero_mean {
        remove_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    let mut ap = vec![0.0; n];
    let mut it = 0;
    while res > opts.tol {
        if it >= opts.max_iter {
            return Err(Error::NoConvergence {
                solver: name,
                iterations: it,
                residual: res,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence {
                solver: name,
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        // Refresh the recursive residual now and then to stop drift.
        if it % 200 == 0 {
            apply(x, &mut ax);
            for i in 0..n {
                r[i] = rhs[i] - ax[i];
            }
        }
        if opts.zero_mean {
            remove_mean(&mut r);
        }
        res = dot(&r, &r).sqrt() / b_norm;
        precond(&r, &mut z);
        if opts.zero_mean {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgReport {
        iterations: it,
        residual: res,
    })
}

/// Exact inverse of the periodic `2d+1`-point Laplacian on zero-mean data.
pub struct PeriodicPoisson {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    symbol: Vec<f64>,
}

impl PeriodicPoisson {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.cells_per_axis();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let h2 = grid.h() * grid.h();
        let one_d: Vec<f64> = (0..n)
            .map(|k| -4.0 / h2 * (PI * k as f64 / n as f64).sin().powi(2))
            .collect();
        let symbol = (0..grid.num_cells())
            .map(|i| {
                let c = grid.coords(i);
                (0..grid.dim()).map(|a| one_d[c[a]]).sum()
            })
            .collect();
        Self {
            grid: grid.clone(),
            fwd,
            inv,
            symbol,
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.cells_per_axis();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for a in 0..self.grid.dim() {
            let stride = self.grid.stride(a);
            for start in 0..self.grid.num_cells() {
                if (start / stride) % n != 0 {
                    continue;
                }
                for k in 0..n {
                    line[k] = data[start + k * stride];
                }
                plan.process(&mut line);
                for k in 0..n {
                    data[start + k * stride] = line[k];
                }
            }
        }
    }

    /// Zero-mean solution of `Δh φ = f - mean(f)`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut data: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.fwd);
        for (v, s) in data.iter_mut().zip(&self.symbol) {
            *v = if *s == 0.0 { Complex64::new(0.0, 0.0) } else { *v / *s };
        }
        self.transform(&mut data, &self.inv);
        let scale = 1.0 / self.grid.num_cells() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::CellField;
    use crate::operators::laplacian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fft_poisson_inverts_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in [2, 3] {
            let g = Grid::new(dim, 1.0, 8).unwrap();
            let mut f: Vec<f64> = (0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            remove_mean(&mut f);
            let phi = self::PeriodicPoisson::new(&g).solve(&f);
            let lap = laplacian(&g, &CellField(phi));
            for (a, b) in lap.iter().zip(&f) {
                assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn cg_solves_shifted_laplacian() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let b: Vec<f64> = (0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            let lap = laplacian(&g, &CellField(x.to_vec()));
            for i in 0..x.len() {
                y[i] = x[i] - 0.01 * lap[i];
            }
        };
        let diag = vec![1.0 + 0.04 / (g.h() * g.h()); g.num_cells()];
        let mut x = vec![0.0; g.num_cells()];
        let rep = pcg("test", apply, &diag, &b, &mut x, CgOptions::new(1e-12, 500)).unwrap();
        assert!(rep.residual <= 1e-12);
        let mut y = vec![0.0; x.len()];
        apply(&x, &mut y);
        for i in 0..x.len() {
            assert!((y[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_reports_non_convergence() {
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                y[i] = (i + 1) as f64 * x[i];
            }
        };
        let b = vec![1.0; 50];
        let mut x = vec![0.0; 50];
        let err = pcg("diag", apply, &vec![1.0; 50], &b, &mut x, CgOptions::new(1e-14, 3)).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }));
    }

    #[test]
    fn cg_zero_rhs_is_zero() {
        let mut x = vec![1.0; 4];
        let rep = pcg("z", |x, y| y.copy_from_slice(x), &[1.0; 4], &[0.0; 4], &mut x, CgOptions::new(1e-12, 10)).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(x.iter().all(|v| *v == 0.0));
    }
}

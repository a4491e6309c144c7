//! Geometric multigrid V-cycle for the implicit solves on a periodic 2-D grid,
//! used as a conjugate-gradient preconditioner.
//!
//! Systems have the form `diag(mass) + s·K` with `K` fixed for a run. Coarse
//! operators are Galerkin products `Pᵀ A P`. Face unknowns use the
//! lowest-order Raviart–Thomas prolongation (linear along the normal,
//! constant along the tangent), which commutes with the discrete divergence;
//! together with smoothing on the four faces around each corner this keeps
//! the cycle robust when `K` has a large grad-div part. Corner unknowns use
//! bilinear prolongation and point smoothing.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, Dyn};
use sprs::{CsMat, TriMat};

pub(crate) type Sparse = CsMat<f64>;

/// Where the unknowns of a solve live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Layout {
    /// `[x-faces; y-faces]`, x-face `i` to the right of cell `i`.
    Faces,
    /// One unknown per corner, corner `i` at the upper right of cell `i`.
    Corners,
}

/// Coarsest grids stop at this many cells per side.
const MIN_CELLS: usize = 8;
/// Largest coarse system factored densely; bigger ones are smoothed instead.
const MAX_DENSE: usize = 3000;
const COARSE_SWEEPS: usize = 20;

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// 1-D weights of fine node `f` on a grid of `2·nc` nodes: staggered linear
/// (node `2I+1` sits on coarse node `I`) or piecewise constant.
fn weights_1d(f: usize, nc: usize, linear: bool) -> Vec<(usize, f64)> {
    if !linear {
        return vec![(f / 2, 1.0)];
    }
    let c = f / 2;
    if f % 2 == 1 {
        vec![(c, 1.0)]
    } else {
        vec![(wrap(c as isize - 1, nc), 0.5), (c, 0.5)]
    }
}

fn prolongation(layout: Layout, nc: usize) -> Sparse {
    let nf = 2 * nc;
    let (comps, axes): (usize, &[[bool; 2]]) = match layout {
        Layout::Faces => (2, &[[true, false], [false, true]]),
        Layout::Corners => (1, &[[true, true]]),
    };
    let (cf, cc) = (nf * nf, nc * nc);
    let mut t = TriMat::new((comps * cf, comps * cc));
    for (a, lin) in axes.iter().enumerate() {
        for j in 0..nf {
            let wy = weights_1d(j, nc, lin[1]);
            for i in 0..nf {
                for &(ci, wi) in &weights_1d(i, nc, lin[0]) {
                    for &(cj, wj) in &wy {
                        t.add_triplet(a * cf + i + nf * j, a * cc + ci + nc * cj, wi * wj);
                    }
                }
            }
        }
    }
    t.to_csr()
}

/// Flattened smoothing patches of size `patch_size(layout)`.
fn patches(layout: Layout, n: usize) -> Vec<usize> {
    let nn = n * n;
    let mut out = Vec::with_capacity(4 * nn);
    for j in 0..n {
        for i in 0..n {
            let k = i + n * j;
            match layout {
                Layout::Faces => out.extend([k, i + n * ((j + 1) % n), nn + k, nn + (i + 1) % n + n * j]),
                Layout::Corners => out.push(k),
            }
        }
    }
    out
}

fn patch_size(layout: Layout) -> usize {
    match layout {
        Layout::Faces => 4,
        Layout::Corners => 1,
    }
}

pub(crate) fn matvec(a: &Sparse, x: &[f64], y: &mut [f64]) {
    let (ptr, idx, val) = (a.indptr(), a.indices(), a.data());
    let ptr = ptr.raw_storage();
    for (r, y) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in ptr[r]..ptr[r + 1] {
            s += val[k] * x[idx[k]];
        }
        *y = s;
    }
}

fn diag_times(d: &[f64], p: &Sparse) -> Sparse {
    let mut out = p.clone();
    for (r, mut row) in out.outer_iterator_mut().enumerate() {
        for (_, v) in row.iter_mut() {
            *v *= d[r];
        }
    }
    out
}

fn diag_matrix(d: &[f64]) -> Sparse {
    let mut t = TriMat::new((d.len(), d.len()));
    for (i, v) in d.iter().enumerate() {
        t.add_triplet(i, i, *v);
    }
    t.to_csr()
}

/// Grid hierarchy with the Galerkin images of the fixed part `K`.
#[derive(Debug, Clone)]
pub(crate) struct Multigrid {
    layout: Layout,
    /// `prolong[l]` maps level `l+1` into level `l` (level 0 finest).
    prolong: Vec<Sparse>,
    restrict: Vec<Sparse>,
    stiffness: Vec<Sparse>,
    patches: Vec<Vec<usize>>,
}

impl Multigrid {
    pub fn new(layout: Layout, cells: usize, stiffness: Sparse) -> Self {
        let mut mg = Self {
            layout,
            prolong: Vec::new(),
            restrict: Vec::new(),
            stiffness: vec![stiffness],
            patches: vec![patches(layout, cells)],
        };
        let mut n = cells;
        while n % 2 == 0 && n / 2 >= MIN_CELLS {
            n /= 2;
            let p = prolongation(layout, n);
            let r: Sparse = p.transpose_view().to_csr();
            let k = mg.stiffness.last().unwrap();
            let kc: Sparse = &r * &(k * &p);
            mg.stiffness.push(kc);
            mg.prolong.push(p);
            mg.restrict.push(r);
            mg.patches.push(patches(layout, n));
        }
        mg
    }

    pub fn levels(&self) -> usize {
        self.stiffness.len()
    }

    /// Assembles `diag(mass) + s·K` on every level.
    pub fn cycle(&self, mass: &[f64], s: f64) -> Result<Cycle<'_>> {
        let mut m = diag_matrix(mass);
        let mut mats = Vec::with_capacity(self.levels());
        for l in 0..self.levels() {
            if l > 0 {
                m = &self.restrict[l - 1] * &diag_times_sparse(&m, &self.prolong[l - 1]);
            }
            let k = self.stiffness[l].map(|v| s * v);
            mats.push(&m + &k);
        }
        let ps = patch_size(self.layout);
        let blocks = mats
            .iter()
            .zip(&self.patches)
            .map(|(a, p)| patch_inverses(a, p, ps))
            .collect::<Result<Vec<_>>>()?;
        let last = mats.last().unwrap();
        let coarse = if last.rows() <= MAX_DENSE {
            let dense = DMatrix::from_fn(last.rows(), last.cols(), |i, j| *last.get(i, j).unwrap_or(&0.0));
            Some(Cholesky::new(dense).ok_or_else(|| Error::NoConvergence {
                solver: "multigrid coarse factorization",
                iterations: 0,
                residual: f64::NAN,
            })?)
        } else {
            None
        };
        Ok(Cycle {
            mg: self,
            mats,
            blocks,
            coarse,
        })
    }
}

/// `M P` for a sparse `M`: the mass stays sparse but is no longer diagonal on
/// coarse levels.
fn diag_times_sparse(m: &Sparse, p: &Sparse) -> Sparse {
    if is_diagonal(m) {
        let d: Vec<f64> = (0..m.rows()).map(|i| *m.get(i, i).unwrap_or(&0.0)).collect();
        diag_times(&d, p)
    } else {
        m * p
    }
}

fn is_diagonal(m: &Sparse) -> bool {
    m.outer_iterator().enumerate().all(|(r, row)| row.iter().all(|(c, _)| c == r))
}

fn patch_inverses(a: &Sparse, patches: &[usize], ps: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(patches.len() * ps);
    for p in patches.chunks(ps) {
        let local = DMatrix::from_fn(ps, ps, |i, j| *a.get(p[i], p[j]).unwrap_or(&0.0));
        let inv = Cholesky::new(local)
            .ok_or_else(|| Error::NoConvergence {
                solver: "multigrid smoother",
                iterations: 0,
                residual: f64::NAN,
            })?
            .inverse();
        out.extend(inv.iter());
    }
    Ok(out)
}

/// Level operators for one system; applies one symmetric V(1,1) cycle.
pub(crate) struct Cycle<'a> {
    mg: &'a Multigrid,
    mats: Vec<Sparse>,
    blocks: Vec<Vec<f64>>,
    coarse: Option<Cholesky<f64, Dyn>>,
}

impl Cycle<'_> {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        matvec(&self.mats[0], x, y);
    }

    /// `z ≈ A⁻¹ r` by one V-cycle from zero; symmetric positive definite.
    pub fn precondition(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        self.vcycle(0, r, z);
    }

    fn vcycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let a = &self.mats[l];
        if l + 1 == self.mats.len() {
            match &self.coarse {
                Some(ch) => {
                    let sol = ch.solve(&nalgebra::DVector::from_column_slice(b));
                    x.copy_from_slice(sol.as_slice());
                }
                None => {
                    for _ in 0..COARSE_SWEEPS {
                        self.smooth(l, b, x, false);
                    }
                    for _ in 0..COARSE_SWEEPS {
                        self.smooth(l, b, x, true);
                    }
                }
            }
            return;
        }
        self.smooth(l, b, x, false);
        let mut res = vec![0.0; b.len()];
        matvec(a, x, &mut res);
        for (r, b) in res.iter_mut().zip(b) {
            *r = b - *r;
        }
        let rc_mat = &self.mg.restrict[l];
        let mut bc = vec![0.0; rc_mat.rows()];
        matvec(rc_mat, &res, &mut bc);
        let mut xc = vec![0.0; bc.len()];
        self.vcycle(l + 1, &bc, &mut xc);
        let mut corr = vec![0.0; x.len()];
        matvec(&self.mg.prolong[l], &xc, &mut corr);
        for (x, c) in x.iter_mut().zip(&corr) {
            *x += c;
        }
        self.smooth(l, b, x, true);
    }

    /// One multiplicative block Gauss–Seidel sweep over the patches.
    fn smooth(&self, l: usize, b: &[f64], x: &mut [f64], backward: bool) {
        let a = &self.mats[l];
        let (ptr, idx, val) = (a.indptr(), a.indices(), a.data());
        let ptr = ptr.raw_storage();
        let ps = patch_size(self.mg.layout);
        let patches = &self.mg.patches[l];
        let blocks = &self.blocks[l];
        let np = patches.len() / ps;
        let mut r = [0.0; 4];
        for q in 0..np {
            let q = if backward { np - 1 - q } else { q };
            let dofs = &patches[q * ps..(q + 1) * ps];
            for (rl, &d) in r.iter_mut().zip(dofs) {
                let mut s = b[d];
                for k in ptr[d]..ptr[d + 1] {
                    s -= val[k] * x[idx[k]];
                }
                *rl = s;
            }
            let inv = &blocks[q * ps * ps..(q + 1) * ps * ps];
            // Column-major inverse.
            for (i, &d) in dofs.iter().enumerate() {
                let mut s = 0.0;
                for (j, rj) in r.iter().take(ps).enumerate() {
                    s += inv[i + ps * j] * rj;
                }
                x[d] += s;
            }
        }
    }
}

/// Assembles `Σ w gᵀg` from `(weight, [(dof, coefficient)])` terms.
pub(crate) fn assemble(n: usize, terms: impl Iterator<Item = (f64, Vec<(usize, f64)>)>) -> Sparse {
    let mut t = TriMat::new((n, n));
    for (w, g) in terms {
        if w == 0.0 {
            continue;
        }
        for &(i, gi) in &g {
            for &(j, gj) in &g {
                t.add_triplet(i, j, w * gi * gj);
            }
        }
    }
    t.to_csr()
}

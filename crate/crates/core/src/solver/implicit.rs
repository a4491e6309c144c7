//! Implicit θ-scheme sub-steps: friction, viscosity and resistivity.
//!
//! Each returns the dissipation `dt · a(w_θ, w_θ)` evaluated at the θ-level,
//! which bounds the energy decrease of the sub-step for every θ ≥ ½.

use super::{Neighbors, Setup, Solver, State};
use crate::coefficients::Coefficient;
use crate::error::Result;
use crate::linalg::{pcg_with, CgOptions};
use crate::multigrid::{assemble, Layout, Multigrid};

/// Hierarchy for `K u = -div S(Du)`, `K` the Hessian of `½ a(u, u)`.
pub(super) fn viscous_multigrid(setup: &Setup, nb: &Neighbors) -> Multigrid {
    let g = &setup.grid;
    let n = g.num_cells();
    let ih = 1.0 / g.h();
    let nu = setup.coeffs.cell(Coefficient::Nu);
    let lam = setup.coeffs.cell(Coefficient::Lambda);
    let nu_k = setup.coeffs.nu_corner();
    let mut terms = Vec::with_capacity(4 * n);
    for c in 0..n {
        let gxx = [(c, ih), (nb.m[0][c], -ih)];
        let gyy = [(n + c, ih), (n + nb.m[1][c], -ih)];
        terms.push((2.0 * nu[c], gxx.to_vec()));
        terms.push((2.0 * nu[c], gyy.to_vec()));
        terms.push((lam[c] - nu[c], [gxx, gyy].concat()));
        let hh = 0.5 * ih;
        terms.push((4.0 * nu_k[c], vec![(nb.p[1][c], hh), (c, -hh), (n + nb.p[0][c], hh), (n + c, -hh)]));
    }
    Multigrid::new(Layout::Faces, g.cells_per_axis(), assemble(2 * n, terms.into_iter()))
}

/// Hierarchy for `C M⁻¹ Cᵀ` on corner potentials.
pub(super) fn resistive_multigrid(setup: &Setup, nb: &Neighbors) -> Multigrid {
    let g = &setup.grid;
    let n = g.num_cells();
    let ih2 = 1.0 / (g.h() * g.h());
    let mu = setup.coeffs.mu_face();
    let terms = (0..n).flat_map(|k| {
        [
            (ih2 / mu.comp(0)[k], vec![(k, 1.0), (nb.m[1][k], -1.0)]),
            (ih2 / mu.comp(1)[k], vec![(k, 1.0), (nb.m[0][k], -1.0)]),
        ]
    });
    Multigrid::new(Layout::Corners, g.cells_per_axis(), assemble(n, terms))
}

impl Solver {
    /// Pointwise friction `m ← m (1 - (1-θ)k) / (1 + θk)`, `k = dt β / ρ_face`.
    pub(super) fn friction(&self, state: &mut State, dt: f64) -> f64 {
        let th = self.opts.theta;
        let beta = self.setup.coeffs.beta_face();
        let mut diss = 0.0;
        for a in 0..2 {
            let p = &self.nb.p[a];
            for (i, m) in state.m.0[a].iter_mut().enumerate() {
                let b = beta.0[a][i];
                if b == 0.0 {
                    continue;
                }
                let rf = 0.5 * (state.rho[i] + state.rho[p[i]]);
                let k = dt * b / rf;
                let new = *m * (1.0 - (1.0 - th) * k) / (1.0 + th * k);
                let u_th = (th * new + (1.0 - th) * *m) / rf;
                diss += dt * b * u_th * u_th;
                *m = new;
            }
        }
        diss * self.setup.grid.cell_volume()
    }

    /// Stress divergence `A u = -div S(Du)` for `u = [u_x; u_y]`; returns
    /// `a(u, u) = Σ S(Du):Du` (without the cell volume) when `energy` is set.
    pub(super) fn viscous_apply(&self, u: &[f64], out: &mut [f64], sig: &mut [Vec<f64>; 3], energy: bool) -> f64 {
        let g = &self.setup.grid;
        let n = g.num_cells();
        let inv_h = 1.0 / g.h();
        let nu = self.setup.coeffs.cell(Coefficient::Nu);
        let lam = self.setup.coeffs.cell(Coefficient::Lambda);
        let nu_k = self.setup.coeffs.nu_corner();
        let (xp, yp, xm, ym) = (&self.nb.p[0], &self.nb.p[1], &self.nb.m[0], &self.nb.m[1]);
        let (ux, uy) = u.split_at(n);
        let mut e = 0.0;
        for c in 0..n {
            let dxx = (ux[c] - ux[xm[c]]) * inv_h;
            let dyy = (uy[c] - uy[ym[c]]) * inv_h;
            let dv = dxx + dyy;
            let sxx = 2.0 * nu[c] * dxx + (lam[c] - nu[c]) * dv;
            let syy = 2.0 * nu[c] * dyy + (lam[c] - nu[c]) * dv;
            sig[0][c] = sxx;
            sig[1][c] = syy;
            if energy {
                e += sxx * dxx + syy * dyy;
            }
        }
        for k in 0..n {
            let dxy = 0.5 * ((ux[yp[k]] - ux[k]) + (uy[xp[k]] - uy[k])) * inv_h;
            let sxy = 2.0 * nu_k[k] * dxy;
            sig[2][k] = sxy;
            if energy {
                e += 2.0 * sxy * dxy;
            }
        }
        let (ox, oy) = out.split_at_mut(n);
        for i in 0..n {
            ox[i] = -((sig[0][xp[i]] - sig[0][i]) + (sig[2][i] - sig[2][ym[i]])) * inv_h;
            oy[i] = -((sig[2][i] - sig[2][xm[i]]) + (sig[1][yp[i]] - sig[1][i])) * inv_h;
        }
        e
    }

    /// θ-scheme for `ρ ∂t u = div S(Du)` at fixed density.
    pub(super) fn viscous(&mut self, state: &mut State, dt: f64) -> Result<f64> {
        let g = &self.setup.grid;
        let n = g.num_cells();
        let th = self.opts.theta;
        let mut rf = vec![0.0; 2 * n];
        for a in 0..2 {
            for i in 0..n {
                rf[a * n + i] = 0.5 * (state.rho[i] + state.rho[self.nb.p[a][i]]);
            }
        }
        let u0: Vec<f64> = (0..2 * n).map(|k| state.m.0[k / n][k % n] / rf[k]).collect();
        let mut sig = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut au = vec![0.0; 2 * n];
        let mut rhs: Vec<f64> = u0.iter().zip(&rf).map(|(u, r)| r * u).collect();
        if th < 1.0 {
            self.viscous_apply(&u0, &mut au, &mut sig, false);
            for k in 0..2 * n {
                rhs[k] -= (1.0 - th) * dt * au[k];
            }
        }
        let mut u = u0.clone();
        let cycle = self.viscous_mg.cycle(&rf, th * dt)?;
        let opts = CgOptions::new(self.opts.cg_tol, self.opts.cg_maxit);
        let rep = pcg_with("viscous solve", |x, y| cycle.apply(x, y), |r, z| cycle.precondition(r, z), &rhs, &mut u, opts)?;
        self.stats.viscous_iterations += rep.iterations;
        let u_th: Vec<f64> = u.iter().zip(&u0).map(|(a, b)| th * a + (1.0 - th) * b).collect();
        let e = self.viscous_apply(&u_th, &mut au, &mut sig, true);
        for k in 0..2 * n {
            state.m.0[k / n][k % n] = rf[k] * u[k];
        }
        Ok(dt * e * g.cell_volume())
    }

    /// θ-scheme for `∂t B = -curl(η curl(B/μ))` in constrained-transport form.
    ///
    /// Solves `(1/(dt η) + θ C M⁻¹ Cᵀ) Φ = -C M⁻¹ B` for a corner potential and
    /// sets `B ← B + curl Φ`, so `div B` is untouched whatever the CG accuracy.
    pub(super) fn resistive(&mut self, state: &mut State, dt: f64) -> Result<f64> {
        let g = &self.setup.grid;
        let n = g.num_cells();
        let th = self.opts.theta;
        let inv_h = 1.0 / g.h();
        let eta = self.setup.coeffs.eta_corner();
        let mu = self.setup.coeffs.mu_face();
        let (mux, muy) = (mu.comp(0), mu.comp(1));
        let (xp, yp, xm, ym) = (&self.nb.p[0], &self.nb.p[1], &self.nb.m[0], &self.nb.m[1]);
        let (bx, by) = (&state.b.0[0], &state.b.0[1]);
        let j0: Vec<f64> = (0..n)
            .map(|k| (by[xp[k]] / muy[xp[k]] - by[k] / muy[k] - bx[yp[k]] / mux[yp[k]] + bx[k] / mux[k]) * inv_h)
            .collect();
        if j0.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let rhs: Vec<f64> = j0.iter().map(|v| -v).collect();
        let shift: Vec<f64> = (0..n).map(|k| 1.0 / (dt * eta[k])).collect();
        let mut phi = std::mem::take(&mut self.phi_guess);
        phi.resize(n, 0.0);
        let cycle = self.resistive_mg.cycle(&shift, th)?;
        let opts = CgOptions::new(self.opts.cg_tol, self.opts.cg_maxit);
        let rep = pcg_with("resistive solve", |x, y| cycle.apply(x, y), |r, z| cycle.precondition(r, z), &rhs, &mut phi, opts)?;
        self.stats.resistive_iterations += rep.iterations;
        let mut diss = 0.0;
        for k in 0..n {
            diss += phi[k] * phi[k] * shift[k];
        }
        let mut bx = std::mem::take(&mut state.b.0[0]);
        let mut by = std::mem::take(&mut state.b.0[1]);
        for i in 0..n {
            bx[i] += (phi[i] - phi[ym[i]]) * inv_h;
            by[i] -= (phi[i] - phi[xm[i]]) * inv_h;
        }
        state.b.0[0] = bx;
        state.b.0[1] = by;
        self.phi_guess = phi;
        Ok(diss * g.cell_volume())
    }
}

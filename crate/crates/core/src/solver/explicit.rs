//! Explicit part: mass transport, momentum convection, pressure, Lorentz
//! force and induction by the flow, advanced with SSP-RK3.

use super::{Solver, Source, State};
use crate::error::Result;

/// Third-order upwind-biased interpolation to the interface between `c0`
/// and `c1`; `cm` precedes `c0` and `c2` follows `c1`.
#[inline]
fn upwind(cm: f64, c0: f64, c1: f64, c2: f64, dir: f64) -> f64 {
    if dir >= 0.0 {
        (-cm + 5.0 * c0 + 2.0 * c1) / 6.0
    } else {
        (-c2 + 5.0 * c1 + 2.0 * c0) / 6.0
    }
}

impl Solver {
    /// Right-hand side of the explicit subsystem at time `t`.
    pub(super) fn explicit_rate(&self, s: &State, t: f64, source: Option<&dyn Source>) -> State {
        let g = &self.setup.grid;
        let n = g.num_cells();
        let inv_h = 1.0 / g.h();
        let nb = &self.nb;
        let mu = self.setup.coeffs.mu_face();
        let eos = &self.setup.eos;
        let rho = &s.rho;

        let mut u = [vec![0.0; n], vec![0.0; n]];
        let mut flux = [vec![0.0; n], vec![0.0; n]];
        for a in 0..2 {
            let (p, m) = (&nb.p[a], &nb.m[a]);
            for i in 0..n {
                let ip = p[i];
                let v = s.m.0[a][i] / (0.5 * (rho[i] + rho[ip]));
                u[a][i] = v;
                let mut r = upwind(rho[m[i]], rho[i], rho[ip], rho[p[ip]], v);
                if r <= 0.0 {
                    r = if v >= 0.0 { rho[i] } else { rho[ip] };
                }
                flux[a][i] = v * r;
            }
        }

        let mut rate = State {
            t,
            rho: crate::field::CellField::zeros(g),
            m: crate::field::FaceField::zeros(g),
            b: crate::field::FaceField::zeros(g),
        };
        for a in 0..2 {
            let m = &nb.m[a];
            for i in 0..n {
                rate.rho[i] -= (flux[a][i] - flux[a][m[i]]) * inv_h;
            }
        }

        let p: Vec<f64> = rho.iter().map(|&r| eos.pressure_unchecked(r)).collect();

        // Corner averages of u and B, and the corner current J = curl(B/μ).
        let (xp, yp) = (&nb.p[0], &nb.p[1]);
        let mut ux_c = vec![0.0; n];
        let mut uy_c = vec![0.0; n];
        let mut bx_c = vec![0.0; n];
        let mut by_c = vec![0.0; n];
        let mut j = vec![0.0; n];
        let (bx, by) = (&s.b.0[0], &s.b.0[1]);
        let (mux, muy) = (mu.comp(0), mu.comp(1));
        for k in 0..n {
            ux_c[k] = 0.5 * (u[0][k] + u[0][yp[k]]);
            uy_c[k] = 0.5 * (u[1][k] + u[1][xp[k]]);
            bx_c[k] = 0.5 * (bx[k] + bx[yp[k]]);
            by_c[k] = 0.5 * (by[k] + by[xp[k]]);
            j[k] = (by[xp[k]] / muy[xp[k]] - by[k] / muy[k] - bx[yp[k]] / mux[yp[k]] + bx[k] / mux[k]) * inv_h;
        }

        // Momentum: convection in consistent-mass-flux form, pressure, J × B.
        let mut cell_flux = vec![0.0; n];
        let mut corner_flux = vec![0.0; n];
        for a in 0..2 {
            let b = 1 - a;
            let (pa, ma, pb, mb) = (&nb.p[a], &nb.m[a], &nb.p[b], &nb.m[b]);
            let ua = &u[a];
            for c in 0..n {
                let l = ma[c];
                let f = 0.5 * (flux[a][l] + flux[a][c]);
                cell_flux[c] = f * upwind(ua[ma[l]], ua[l], ua[c], ua[pa[c]], f);
            }
            for k in 0..n {
                let f = 0.5 * (flux[b][k] + flux[b][pa[k]]);
                let up = pb[k];
                corner_flux[k] = f * upwind(ua[mb[k]], ua[k], ua[up], ua[pb[up]], f);
            }
            let (jb, bc, sign) = if a == 0 { (&by_c, mb, -0.5) } else { (&bx_c, mb, 0.5) };
            let dm = &mut rate.m.0[a];
            for i in 0..n {
                let ip = pa[i];
                let conv = (cell_flux[ip] - cell_flux[i] + corner_flux[i] - corner_flux[mb[i]]) * inv_h;
                let grad_p = (p[ip] - p[i]) * inv_h;
                let lorentz = sign * (j[i] * jb[i] + j[bc[i]] * jb[bc[i]]);
                dm[i] = -conv - grad_p + lorentz;
            }
        }

        // Induction by the flow: dB = curl(G), G = (u × B)_z at corners.
        let gz: Vec<f64> = (0..n).map(|k| ux_c[k] * by_c[k] - uy_c[k] * bx_c[k]).collect();
        add_curl(&mut rate, &gz, nb, inv_h);

        if let Some(src) = source {
            src.add(g, t, &mut rate);
        }
        rate
    }

    /// SSP-RK3 step of the explicit subsystem; leaves `state.t` untouched.
    pub(super) fn explicit_step(&self, state: &mut State, dt: f64, source: Option<&dyn Source>) -> Result<()> {
        let t = state.t;
        let u0 = state.clone();
        let r0 = self.explicit_rate(&u0, t, source);
        let mut u1 = u0.clone();
        u1.combine(0.0, 1.0, &u0, dt, &r0);
        u1.check_density()?;
        let r1 = self.explicit_rate(&u1, t + dt, source);
        let mut u2 = u0.clone();
        u2.combine(0.75, 0.25, &u1, dt, &r1);
        u2.check_density()?;
        let r2 = self.explicit_rate(&u2, t + 0.5 * dt, source);
        state.combine(1.0 / 3.0, 2.0 / 3.0, &u2, dt, &r2);
        state.check_density()
    }
}

/// `rate.b += curl2_scal(psi)` using the neighbour tables.
pub(crate) fn add_curl(rate: &mut State, psi: &[f64], nb: &super::Neighbors, inv_h: f64) {
    let (xm, ym) = (&nb.m[0], &nb.m[1]);
    let (bx, by) = rate.b.0.split_at_mut(1);
    for i in 0..psi.len() {
        bx[0][i] += (psi[i] - psi[ym[i]]) * inv_h;
        by[0][i] -= (psi[i] - psi[xm[i]]) * inv_h;
    }
}

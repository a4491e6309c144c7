//! Initial data and the projection onto `div(μH) = 0`.

use super::{Setup, State};
use crate::coefficients::Coefficient;
use crate::error::{Error, Result};
use crate::field::{CellField, FaceField};
use crate::geometry::Grid;
use crate::linalg::{pcg, CgOptions, PeriodicPoisson};
use crate::operators::{div, grad};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Amplitudes of the built-in initial profiles.
///
/// Density is `rho0` everywhere. Velocity is a cellular vortex of amplitude
/// `velocity`, cut off outside the fluid annulus. The magnetic field is
/// `background` plus a band-limited field of amplitude `field`, damped by
/// `min(1, μ_F/μ)` and then projected onto `div(μH) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub rho0: f64,
    pub velocity: f64,
    pub field: f64,
    pub background: [f64; 2],
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            velocity: 0.5,
            field: 0.5,
            background: [0.6, 0.3],
        }
    }
}

impl InitialSpec {
    /// `ρ = 1`, `m = 0`, `H = 0`.
    pub fn zero() -> Self {
        Self {
            rho0: 1.0,
            velocity: 0.0,
            field: 0.0,
            background: [0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return Err(Error::Config(format!("rho0 must be positive, got {}", self.rho0)));
        }
        let finite = [self.velocity, self.field, self.background[0], self.background[1]];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial amplitudes must be finite".into()));
        }
        Ok(())
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Cutoff equal to one deep inside the fluid and zero outside it.
fn fluid_cutoff(setup: &Setup, x: &[f64; 3]) -> f64 {
    let w = setup.coeffs.width();
    let r_out = setup.region.point_dist_outer(x);
    let mut c = smoothstep(-r_out / w);
    if setup.region.shape().has_interior() {
        c *= smoothstep(setup.region.point_dist_inner(x) / w);
    }
    c
}

pub(super) fn make_initial_state(spec: &InitialSpec, setup: &Setup, tol: f64, maxit: usize) -> Result<State> {
    spec.validate()?;
    let g = &setup.grid;
    let k = PI / g.half_len();
    let rho = CellField::constant(g, spec.rho0);
    let vel = spec.velocity;
    let m = FaceField::from_fn(g, |a, x| {
        if vel == 0.0 || a > 1 {
            return 0.0;
        }
        let u = if a == 0 {
            (k * x[0]).sin() * (k * x[1]).cos()
        } else {
            -(k * x[0]).cos() * (k * x[1]).sin()
        };
        spec.rho0 * vel * u * fluid_cutoff(setup, &x)
    });
    let mu_f = setup.coeffs.scenario().mu_f;
    let amp = spec.field;
    let h = FaceField::from_fn(g, |a, x| {
        if a > 1 {
            return 0.0;
        }
        let wave = if a == 0 {
            (k * x[1]).sin() + 0.5 * (k * (x[0] + x[1])).cos()
        } else {
            (k * x[0]).cos() - 0.5 * (k * (x[0] + x[1])).cos()
        };
        let weight = (mu_f / setup.coeffs.eval(Coefficient::Mu, &x)).min(1.0);
        (spec.background[a] + amp * wave) * weight
    });
    let b = project_b(g, &h, setup.coeffs.mu_face(), tol, maxit)?;
    Ok(State { t: 0.0, rho, m, b })
}

/// `μ(H - grad φ)` with `div(μ(H - grad φ)) = 0`, followed by an exact
/// constant-coefficient clean-up of the remaining divergence.
fn project_b(grid: &Grid, h: &FaceField, mu: &FaceField, tol: f64, maxit: usize) -> Result<FaceField> {
    let mut b = h.clone();
    for (c, m) in b.0.iter_mut().zip(&mu.0) {
        for (v, m) in c.iter_mut().zip(m) {
            *v *= m;
        }
    }
    let rhs: Vec<f64> = div(grid, &b).iter().map(|v| -v).collect();
    if rhs.iter().any(|v| *v != 0.0) {
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        let diag: Vec<f64> = (0..grid.num_cells())
            .map(|i| {
                (0..grid.dim())
                    .map(|a| mu.comp(a)[i] + mu.comp(a)[grid.shift(i, a, -1)])
                    .sum::<f64>()
                    * inv_h2
            })
            .collect();
        // -div(μ grad ·), symmetric positive semi-definite with constants in the kernel.
        let apply = |x: &[f64], y: &mut [f64]| {
            let mut gphi = grad(grid, &CellField(x.to_vec()));
            for (c, m) in gphi.0.iter_mut().zip(&mu.0) {
                for (v, m) in c.iter_mut().zip(m) {
                    *v *= m;
                }
            }
            for (y, d) in y.iter_mut().zip(div(grid, &gphi).iter()) {
                *y = -d;
            }
        };
        let mut phi = vec![0.0; grid.num_cells()];
        let mut opts = CgOptions::new(tol, maxit);
        opts.zero_mean = true;
        pcg("divergence projection", apply, &diag, &rhs, &mut phi, opts)?;
        let gphi = grad(grid, &CellField(phi));
        for a in 0..grid.dim() {
            let m = mu.comp(a);
            let gp = gphi.comp(a);
            for (i, v) in b.comp_mut(a).iter_mut().enumerate() {
                *v -= m[i] * gp[i];
            }
        }
    }
    let psi = PeriodicPoisson::new(grid).solve(&div(grid, &b));
    let gpsi = grad(grid, &CellField(psi));
    b.axpy(-1.0, &gpsi);
    Ok(b)
}

/// Projects `H` onto `div(μH) = 0` with `μ` sampled on faces.
pub fn project_div_mu_h(grid: &Grid, h: &FaceField, mu_face: &FaceField, tol: f64, maxit: usize) -> Result<FaceField> {
    if mu_face.iter().any(|m| !(m > 0.0)) {
        return Err(Error::InvalidArgument("permeability must be positive".into()));
    }
    let mut out = project_b(grid, h, mu_face, tol, maxit)?;
    for (c, m) in out.0.iter_mut().zip(&mu_face.0) {
        for (v, m) in c.iter_mut().zip(m) {
            *v /= m;
        }
    }
    Ok(out)
}

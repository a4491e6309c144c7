//! Manufactured smooth solution with analytic forcing, used to measure the
//! convergence order of the scheme and of the weak-form certifier.
//!
//! Every field is a finite sum of plane waves `sin(k·x + ωt + φ)`, carried
//! together with its first derivatives in `(x, y, t)` and its spatial Hessian.
//! The magnetic field is `B = B₀ + curl(ψ ẑ)` so that `div B = 0`, and the
//! induction forcing is `curl(g ẑ)` for an explicit corner scalar `g`.

use crate::coefficients::{Scenario, ScenarioTag};
use crate::diagnostics::{weak_residual, Equation, PointForcing, TestFunctionFamily};
use crate::eos::EosParams;
use crate::error::Result;
use crate::field::{CellField, CornerField, FaceField};
use crate::geometry::Grid;
use crate::operators::curl2_scal;
use crate::solver::{RunConfig, Simulation, Source, State};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Value, gradient `(x, y, t)` and spatial Hessian at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, ..Self::default() }
    }

    /// `sin(kx x + ky y + w t + phase)`.
    pub fn wave(kx: f64, ky: f64, w: f64, phase: f64, x: &[f64; 3], t: f64) -> Self {
        let (s, c) = (kx * x[0] + ky * x[1] + w * t + phase).sin_cos();
        Self {
            v: s,
            dx: kx * c,
            dy: ky * c,
            dt: w * c,
            xx: -kx * kx * s,
            xy: -kx * ky * s,
            yy: -ky * ky * s,
        }
    }

    fn add_scaled(mut self, a: f64, o: Jet) -> Self {
        self.v += a * o.v;
        self.dx += a * o.dx;
        self.dy += a * o.dy;
        self.dt += a * o.dt;
        self.xx += a * o.xx;
        self.xy += a * o.xy;
        self.yy += a * o.yy;
        self
    }

    pub fn laplacian(&self) -> f64 {
        self.xx + self.yy
    }
}

/// Wave amplitudes `(a, kx, ky, w, phase)` with wavenumbers in units of `π/L`.
type Waves = &'static [(f64, f64, f64, f64, f64)];

const RHO: (f64, Waves) = (1.0, &[(0.15, 1.0, 0.0, -1.0, 0.0), (0.1, 1.0, 1.0, 0.5, 0.5 * PI)]);
const UX: (f64, Waves) = (0.3, &[(0.2, 0.0, 1.0, 1.0, 0.0), (0.1, 1.0, 1.0, -1.0, 0.4)]);
const UY: (f64, Waves) = (-0.1, &[(0.2, 1.0, 0.0, -1.0, 0.5 * PI), (0.1, 1.0, -1.0, 0.5, 1.0)]);
const PSI: (f64, Waves) = (0.0, &[(0.05, 1.0, 1.0, -0.5, 0.0), (0.025, 1.0, -1.0, 1.0, 0.3)]);
const B0: [f64; 2] = [0.4, 0.25];

/// Physical parameters of the manufactured problem (constant coefficients).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Manufactured {
    pub half_len: f64,
    pub eos: EosParams,
    pub nu: f64,
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
}

impl Default for Manufactured {
    fn default() -> Self {
        Self {
            half_len: 1.0,
            eos: EosParams::default_for(2),
            nu: 0.01,
            lambda: 0.0,
            mu: 1.0,
            eta: 0.01,
        }
    }
}

/// Fields of the exact solution at one point.
struct Point {
    rho: Jet,
    ux: Jet,
    uy: Jet,
    psi: Jet,
}

impl Manufactured {
    fn sum(&self, f: (f64, Waves), x: &[f64; 3], t: f64) -> Jet {
        let k = PI / self.half_len;
        f.1.iter().fold(Jet::constant(f.0), |acc, &(a, kx, ky, w, ph)| {
            acc.add_scaled(a, Jet::wave(kx * k, ky * k, w, ph, x, t))
        })
    }

    fn point(&self, x: &[f64; 3], t: f64) -> Point {
        Point {
            rho: self.sum(RHO, x, t),
            ux: self.sum(UX, x, t),
            uy: self.sum(UY, x, t),
            psi: self.sum(PSI, x, t),
        }
    }

    pub fn rho(&self, x: &[f64; 3], t: f64) -> f64 {
        self.sum(RHO, x, t).v
    }

    pub fn momentum(&self, a: usize, x: &[f64; 3], t: f64) -> f64 {
        let u = if a == 0 { UX } else { UY };
        self.sum(RHO, x, t).v * self.sum(u, x, t).v
    }

    /// Exact `B = μH`.
    pub fn induction(&self, a: usize, x: &[f64; 3], t: f64) -> f64 {
        let psi = self.sum(PSI, x, t);
        if a == 0 {
            B0[0] + psi.dy
        } else {
            B0[1] - psi.dx
        }
    }

    pub fn stream(&self, x: &[f64; 3], t: f64) -> f64 {
        self.sum(PSI, x, t).v
    }

    fn f_rho(p: &Point) -> f64 {
        p.rho.dt + p.rho.dx * p.ux.v + p.rho.v * p.ux.dx + p.rho.dy * p.uy.v + p.rho.v * p.uy.dy
    }

    /// Momentum forcing, component `a`.
    fn f_m(&self, p: &Point, a: usize) -> f64 {
        let ua = if a == 0 { &p.ux } else { &p.uy };
        let material = ua.dt + p.ux.v * ua.dx + p.uy.v * ua.dy;
        let rho_a = if a == 0 { p.rho.dx } else { p.rho.dy };
        let grad_p = self.eos.a * self.eos.gamma * p.rho.v.powf(self.eos.gamma - 1.0) * rho_a;
        let grad_div = if a == 0 {
            p.ux.xx + p.uy.xy
        } else {
            p.ux.xy + p.uy.yy
        };
        let visc = self.nu * ua.laplacian() + self.lambda * grad_div;
        let bx = B0[0] + p.psi.dy;
        let by = B0[1] - p.psi.dx;
        let j = -p.psi.laplacian() / self.mu;
        let lorentz = if a == 0 { -j * by } else { j * bx };
        p.rho.v * material + ua.v * Self::f_rho(p) + grad_p - visc - lorentz
    }

    /// Corner scalar `g = ψ_t - (u × B)_z + η J` of the induction forcing.
    fn g(&self, p: &Point) -> f64 {
        let bx = B0[0] + p.psi.dy;
        let by = B0[1] - p.psi.dx;
        let j = -p.psi.laplacian() / self.mu;
        p.psi.dt - (p.ux.v * by - p.uy.v * bx) + self.eta * j
    }

    /// Exact state sampled on the grid; `B` is the discrete curl of the
    /// sampled stream function so that `div B = 0` exactly.
    pub fn state(&self, grid: &Grid, t: f64) -> State {
        let psi = CornerField::from_fn(grid, |x| self.stream(&x, t));
        let mut b = curl2_scal(grid, &psi);
        for a in 0..2 {
            b.comp_mut(a).iter_mut().for_each(|v| *v += B0[a]);
        }
        State {
            t,
            rho: CellField::from_fn(grid, |x| self.rho(&x, t)),
            m: FaceField::from_fn(grid, |a, x| self.momentum(a, &x, t)),
            b,
        }
    }

    /// L² errors of `(ρ, m, B)` against point values at `state.t`.
    pub fn errors(&self, grid: &Grid, state: &State) -> [f64; 3] {
        let t = state.t;
        let vol = grid.cell_volume();
        let mut e = [0.0; 3];
        for i in 0..grid.num_cells() {
            e[0] += (state.rho[i] - self.rho(&grid.cell_center(i), t)).powi(2);
            for a in 0..2 {
                let x = grid.face_center(a, i);
                e[1] += (state.m.comp(a)[i] - self.momentum(a, &x, t)).powi(2);
                e[2] += (state.b.comp(a)[i] - self.induction(a, &x, t)).powi(2);
            }
        }
        e.map(|v| (v * vol).sqrt())
    }

    /// Run configuration of the manufactured problem on an `n × n` grid.
    pub fn config(&self, n: usize, t_final: f64) -> RunConfig {
        let mut c = RunConfig::new(ScenarioTag::None, 1.0);
        let mut s = Scenario::new(ScenarioTag::None);
        s.nu_f = self.nu;
        s.lambda_f = self.lambda;
        s.mu_f = self.mu;
        s.mu_int = self.mu;
        s.mu_ext = self.mu;
        s.eta_f = self.eta;
        s.eta_int = self.eta;
        s.eta_ext = self.eta;
        c.scenario = s;
        c.half_len = self.half_len;
        c.cells = n;
        c.eos = self.eos;
        c.t_final = t_final;
        c.cg_tol = 1e-12;
        c.snapshot_every_step = true;
        c
    }
}

impl Source for Manufactured {
    fn add(&self, grid: &Grid, t: f64, rate: &mut State) {
        let n = grid.num_cells();
        let inv_h = 1.0 / grid.h();
        let mut g = vec![0.0; n];
        for i in 0..n {
            rate.rho[i] += Self::f_rho(&self.point(&grid.cell_center(i), t));
            rate.m.0[0][i] += self.f_m(&self.point(&grid.face_center(0, i), t), 0);
            rate.m.0[1][i] += self.f_m(&self.point(&grid.face_center(1, i), t), 1);
            g[i] = self.g(&self.point(&grid.corner(i), t));
        }
        for i in 0..n {
            rate.b.0[0][i] += (g[i] - g[grid.shift(i, 1, -1)]) * inv_h;
            rate.b.0[1][i] -= (g[i] - g[grid.shift(i, 0, -1)]) * inv_h;
        }
    }
}

impl PointForcing for Manufactured {
    fn at(&self, x: &[f64; 3], t: f64) -> [f64; 4] {
        let p = self.point(x, t);
        [Self::f_rho(&p), self.f_m(&p, 0), self.f_m(&p, 1), self.g(&p)]
    }
}

/// Errors and weak residuals of one manufactured run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub cells: usize,
    pub steps: usize,
    /// L² errors of `ρ`, `m`, `B` at the final time.
    pub errors: [f64; 3],
    /// Weak residuals of continuity, renormalized continuity, momentum and induction over trigonometric test functions.
    pub weak: [f64; 4],
}

/// Convergence study over successively doubled grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// Observed orders between consecutive levels, `[ρ, m, B]`.
    pub orders: Vec<[f64; 3]>,
    /// Observed orders of the weak residuals, in the same order.
    pub weak_orders: Vec<[f64; 4]>,
}

pub const WEAK_EQUATIONS: [Equation; 4] = [Equation::Continuity, Equation::Renormalized, Equation::Momentum, Equation::Induction];

/// Runs one manufactured level.
pub fn run_level(case: &Manufactured, n: usize, t_final: f64) -> Result<ConvergenceLevel> {
    let cfg = case.config(n, t_final);
    let mut sim = Simulation::new(&cfg)?;
    let init = case.state(&sim.setup().grid, 0.0);
    let traj = sim.run_from(init, Some(case))?;
    let errors = case.errors(&traj.setup.grid, &traj.final_state);
    let mut weak = [0.0; 4];
    for (w, eq) in weak.iter_mut().zip(WEAK_EQUATIONS) {
        *w = weak_residual(&traj, TestFunctionFamily::TorusTrig, eq, Some(case))?;
    }
    Ok(ConvergenceLevel {
        cells: n,
        steps: traj.steps,
        errors,
        weak,
    })
}

/// `log2(coarse / fine)` for each pair of consecutive levels.
fn orders<const K: usize>(vals: &[[f64; K]]) -> Vec<[f64; K]> {
    vals.windows(2)
        .map(|w| {
            let mut o = [0.0; K];
            for k in 0..K {
                o[k] = (w[0][k] / w[1][k]).log2();
            }
            o
        })
        .collect()
}

/// Runs every level in `cells` (each double the previous) to `t_final`.
pub fn convergence_study(case: &Manufactured, cells: &[usize], t_final: f64) -> Result<ConvergenceReport> {
    let levels = cells
        .iter()
        .map(|&n| run_level(case, n, t_final))
        .collect::<Result<Vec<_>>>()?;
    let errs: Vec<[f64; 3]> = levels.iter().map(|l| l.errors).collect();
    let weak: Vec<[f64; 4]> = levels.iter().map(|l| l.weak).collect();
    Ok(ConvergenceReport {
        orders: orders(&errs),
        weak_orders: orders(&weak),
        levels,
    })
}

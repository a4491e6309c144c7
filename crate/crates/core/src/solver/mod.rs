//! IMEX time integration of the penalized compressible MHD system.
//!
//! The state lives on a 2-D staggered grid: density at cell centres, momentum
//! and magnetic induction `B = μH` on faces. One step is the symmetric
//! composition
//!
//! ```text
//! implicit(dt/2) ∘ explicit(dt) ∘ implicit(dt/2)
//! ```
//!
//! where the explicit part (SSP-RK3) carries transport, pressure, the Lorentz
//! force and induction by the flow, and the implicit part carries friction,
//! viscosity and resistivity with a θ-scheme. `B` only ever changes by discrete
//! curls of corner scalars, so `div B` is preserved to round-off.

mod explicit;
mod implicit;
mod initial;

pub use initial::{project_div_mu_h, InitialSpec};

use crate::coefficients::{Coefficient, CoefficientField, Scenario, ScenarioTag};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::eos::{EosParams, EnergyValue};
use crate::error::{Error, Result};
use crate::field::{CellField, FaceField};
use crate::geometry::{Grid, RegionMap, Shape};
use crate::multigrid::Multigrid;
use crate::operators::div;
use serde::{Deserialize, Serialize};

/// Density, momentum and magnetic induction at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub rho: CellField,
    pub m: FaceField,
    /// `μH` on faces.
    pub b: FaceField,
}

impl State {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            t: 0.0,
            rho: CellField::zeros(grid),
            m: FaceField::zeros(grid),
            b: FaceField::zeros(grid),
        }
    }

    /// `H = B / μ` on faces.
    pub fn magnetic_field(&self, mu_face: &FaceField) -> FaceField {
        let mut h = self.b.clone();
        for (c, mu) in h.0.iter_mut().zip(&mu_face.0) {
            for (v, m) in c.iter_mut().zip(mu) {
                *v /= m;
            }
        }
        h
    }

    /// `u = m / ρ_face` on faces; zero where the face density vanishes.
    pub fn velocity(&self, grid: &Grid) -> FaceField {
        let mut u = self.m.clone();
        for a in 0..grid.dim() {
            for (i, v) in u.comp_mut(a).iter_mut().enumerate() {
                let rf = 0.5 * (self.rho[i] + self.rho[grid.shift(i, a, 1)]);
                *v = if rf > 0.0 { *v / rf } else { 0.0 };
            }
        }
        u
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        self.rho.integral(grid)
    }

    /// `‖div B‖ / (‖B‖/h)`, zero for `B = 0`.
    pub fn div_b_relative(&self, grid: &Grid) -> f64 {
        let nb = self.b.norm_l2(grid);
        if nb == 0.0 {
            return 0.0;
        }
        div(grid, &self.b).norm_l2(grid) * grid.h() / nb
    }

    pub fn energy(&self, setup: &Setup) -> EnergyValue {
        let h = self.magnetic_field(setup.coeffs.mu_face());
        crate::eos::total_energy(&setup.grid, &setup.eos, &self.rho, &self.m, &h, setup.coeffs.mu_face())
    }

    /// `self = a·self + c·(other + dt·rate)`.
    fn combine(&mut self, a: f64, c: f64, other: &State, dt: f64, rate: &State) {
        let mix = |x: &mut [f64], y: &[f64], r: &[f64]| {
            for ((x, y), r) in x.iter_mut().zip(y).zip(r) {
                *x = a * *x + c * (y + dt * r);
            }
        };
        mix(&mut self.rho, &other.rho, &rate.rho);
        for k in 0..self.m.dim() {
            mix(&mut self.m.0[k], &other.m.0[k], &rate.m.0[k]);
            mix(&mut self.b.0[k], &other.b.0[k], &rate.b.0[k]);
        }
    }

    fn check_density(&self) -> Result<()> {
        match self.rho.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            Some((cell, &value)) => Err(Error::NegativeDensity { cell, value }),
            None => Ok(()),
        }
    }
}

/// Grid, regions, coefficient fields and pressure law of one run.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub region: RegionMap,
    pub coeffs: CoefficientField,
    pub eos: EosParams,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let grid = Grid::new(config.dim, config.half_len, config.cells)?;
        let region = RegionMap::classify(&grid, config.shape)?;
        let width = config.transition_cells * grid.h();
        let coeffs = CoefficientField::for_scenario(&region, config.scenario, config.epsilon, width)?;
        let eos = EosParams::new(config.eos.a, config.eos.gamma, config.dim)?;
        Ok(Self {
            grid,
            region,
            coeffs,
            eos,
        })
    }
}

/// Time-integrated dissipation `∫∫ S(Du):Du`, `∫∫ η|curl H|²`, `∫∫ β|u|²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Dissipation {
    pub viscous: f64,
    pub resistive: f64,
    pub friction: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.viscous + self.resistive + self.friction
    }

    fn add(&mut self, o: &Dissipation) {
        self.viscous += o.viscous;
        self.resistive += o.resistive;
        self.friction += o.friction;
    }
}

/// Extra right-hand side `(f_ρ, f_m, f_B)` added in every explicit stage.
pub trait Source {
    /// Adds the source at time `t` into `rate`, laid out like a [`State`].
    fn add(&self, grid: &Grid, t: f64, rate: &mut State);
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dim: usize,
    pub half_len: f64,
    pub cells: usize,
    pub r_outer: f64,
    pub r_inner: f64,
    /// Transition width in cells.
    pub transition_cells: f64,
    pub scenario: Scenario,
    pub epsilon: f64,
    pub eos: EosParams,
    pub t_final: f64,
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub cg_tol: f64,
    pub cg_maxit: usize,
    /// Implicitness of the dissipative sub-steps; `None` picks 1 for
    /// penalized scenarios and ½ for `NONE`.
    pub theta: Option<f64>,
    pub output_every: usize,
    pub snapshot_times: Vec<f64>,
    /// Keep the state after every step (needed by the weak-form certifier).
    pub snapshot_every_step: bool,
    pub initial: InitialSpec,
    #[serde(skip)]
    pub shape: Shape,
}

impl RunConfig {
    pub fn new(scenario: ScenarioTag, epsilon: f64) -> Self {
        Self {
            dim: 2,
            half_len: 1.0,
            cells: 128,
            r_outer: 0.7,
            r_inner: 0.3,
            transition_cells: 4.0,
            scenario: Scenario::new(scenario),
            epsilon,
            eos: EosParams::default_for(2),
            t_final: 0.5,
            cfl: 0.4,
            dt_min: 1e-9,
            dt_max: 0.05,
            cg_tol: 1e-10,
            cg_maxit: 20_000,
            theta: None,
            output_every: 1,
            snapshot_times: Vec::new(),
            snapshot_every_step: false,
            initial: InitialSpec::default(),
            shape: Shape::new(0.7, 0.3),
        }
    }

    /// Re-derives fields that mirror others and checks every invariant.
    pub fn validate(&mut self) -> Result<()> {
        self.shape = Shape::new(self.r_outer, self.r_inner);
        let bad = |m: String| Err(Error::Config(m));
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if !(self.t_final > 0.0) {
            return bad(format!("T must be positive, got {}", self.t_final));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if !(self.cg_tol > 0.0) || self.cg_maxit == 0 {
            return bad("cg_tol and cg_maxit must be positive".into());
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            return bad(format!("need 0 < dt_min <= dt_max, got {} and {}", self.dt_min, self.dt_max));
        }
        if let Some(th) = self.theta {
            if !(0.5..=1.0).contains(&th) {
                return bad(format!("theta must lie in [0.5, 1], got {th}"));
            }
        }
        if self.output_every == 0 {
            return bad("output_every must be at least 1".into());
        }
        if !(self.transition_cells >= 2.0) {
            return bad(format!("transition_cells must be at least 2, got {}", self.transition_cells));
        }
        let mut prev = 0.0;
        for &s in &self.snapshot_times {
            if !(s > prev && s <= self.t_final) {
                return bad(format!("snapshot times must increase within (0, T], got {s}"));
            }
            prev = s;
        }
        self.scenario.validate()?;
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        EosParams::new(self.eos.a, self.eos.gamma, self.dim)?;
        self.initial.validate()?;
        Ok(())
    }

    pub fn resolved_theta(&self) -> f64 {
        self.theta.unwrap_or(match self.scenario.tag {
            ScenarioTag::None => 0.5,
            _ => 1.0,
        })
    }
}

/// Precomputed periodic neighbour indices.
#[derive(Debug, Clone)]
pub(crate) struct Neighbors {
    pub p: [Vec<usize>; 2],
    pub m: [Vec<usize>; 2],
}

impl Neighbors {
    pub fn new(grid: &Grid) -> Self {
        let table = |a: usize, d: isize| (0..grid.num_cells()).map(|i| grid.shift(i, a, d)).collect();
        Self {
            p: [table(0, 1), table(1, 1)],
            m: [table(0, -1), table(1, -1)],
        }
    }
}

/// Linear-solver settings and the θ of the implicit sub-steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub cg_tol: f64,
    pub cg_maxit: usize,
    pub theta: f64,
}

/// Advances states of one [`Setup`].
pub struct Solver {
    setup: Setup,
    opts: SolverOptions,
    nb: Neighbors,
    viscous_mg: Multigrid,
    resistive_mg: Multigrid,
    /// Last corner potential of the resistive solve, used as a warm start.
    phi_guess: Vec<f64>,
    stats: SolverStats,
}

/// Cumulative linear-solver work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub steps: usize,
    pub viscous_iterations: usize,
    pub resistive_iterations: usize,
}

impl Solver {
    pub fn new(setup: Setup, opts: SolverOptions) -> Result<Self> {
        if setup.grid.dim() != 2 {
            return Err(Error::Unsupported(
                "time integration is implemented for d = 2 only".into(),
            ));
        }
        let nb = Neighbors::new(&setup.grid);
        let n = setup.grid.num_cells();
        Ok(Self {
            viscous_mg: implicit::viscous_multigrid(&setup, &nb),
            resistive_mg: implicit::resistive_multigrid(&setup, &nb),
            setup,
            opts,
            nb,
            phi_guess: vec![0.0; n],
            stats: SolverStats::default(),
        })
    }

    pub fn setup(&self) -> &Setup {
        &self.setup
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// `cfl · h / max(|u| + c + c_A)` clamped to `[dt_min, dt_max]`.
    pub fn cfl_dt(&self, state: &State, cfl: f64, dt_min: f64, dt_max: f64) -> f64 {
        let g = &self.setup.grid;
        let mu = self.setup.coeffs.cell(Coefficient::Mu);
        let mut smax = 0.0f64;
        for i in 0..g.num_cells() {
            let rho = state.rho[i];
            let (mut u2, mut h2) = (0.0, 0.0);
            for a in 0..2 {
                let j = self.nb.m[a][i];
                let rl = 0.5 * (state.rho[j] + rho);
                let rr = 0.5 * (rho + state.rho[self.nb.p[a][i]]);
                let ul = if rl > 0.0 { state.m.0[a][j] / rl } else { 0.0 };
                let ur = if rr > 0.0 { state.m.0[a][i] / rr } else { 0.0 };
                let uc = 0.5 * (ul + ur);
                u2 += uc * uc;
                let bc = 0.5 * (state.b.0[a][j] + state.b.0[a][i]) / mu[i];
                h2 += bc * bc;
            }
            let c = self.setup.eos.sound_speed(rho);
            let ca = if rho > 0.0 { (mu[i] * h2 / rho).sqrt() } else { 0.0 };
            smax = smax.max(u2.sqrt() + c + ca);
        }
        let dt = if smax > 0.0 { cfl * g.h() / smax } else { dt_max };
        dt.clamp(dt_min, dt_max)
    }

    /// One full step of length `dt`; returns the dissipation it produced.
    pub fn step(&mut self, state: &mut State, dt: f64, source: Option<&dyn Source>) -> Result<Dissipation> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let mut d = Dissipation::default();
        d.add(&self.implicit_half(state, 0.5 * dt, false)?);
        self.explicit_step(state, dt, source)?;
        d.add(&self.implicit_half(state, 0.5 * dt, true)?);
        state.t += dt;
        self.stats.steps += 1;
        Ok(d)
    }

    fn implicit_half(&mut self, state: &mut State, dt: f64, reversed: bool) -> Result<Dissipation> {
        let mut d = Dissipation::default();
        if reversed {
            d.resistive = self.resistive(state, dt)?;
            d.viscous = self.viscous(state, dt)?;
            d.friction = self.friction(state, dt);
        } else {
            d.friction = self.friction(state, dt);
            d.viscous = self.viscous(state, dt)?;
            d.resistive = self.resistive(state, dt)?;
        }
        Ok(d)
    }
}

/// Time series, snapshots and accumulated dissipation of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub setup: Setup,
    pub config: RunConfig,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<State>,
    pub dissipation: Dissipation,
    pub initial: State,
    pub final_state: State,
    pub steps: usize,
    pub stats: SolverStats,
}

/// A configured simulation: setup plus solver.
pub struct Simulation {
    pub config: RunConfig,
    solver: Solver,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let mut config = config.clone();
        config.validate()?;
        let setup = Setup::new(&config)?;
        let opts = SolverOptions {
            cg_tol: config.cg_tol,
            cg_maxit: config.cg_maxit,
            theta: config.resolved_theta(),
        };
        Ok(Self {
            solver: Solver::new(setup, opts)?,
            config,
        })
    }

    pub fn setup(&self) -> &Setup {
        self.solver.setup()
    }

    pub fn solver_mut(&mut self) -> &mut Solver {
        &mut self.solver
    }

    pub fn initial_state(&self) -> Result<State> {
        initial::make_initial_state(&self.config.initial, self.setup(), self.config.cg_tol, self.config.cg_maxit)
    }

    /// Advances `state` to `T`, recording diagnostics at the output cadence.
    pub fn run_from(&mut self, mut state: State, source: Option<&dyn Source>) -> Result<Trajectory> {
        let cfg = self.config.clone();
        let initial = state.clone();
        let mut total = Dissipation::default();
        let mut records = vec![diagnostics::record(self.setup(), &state, &total)];
        let mut snapshots = Vec::new();
        if cfg.snapshot_every_step {
            snapshots.push(state.clone());
        }
        let mut pending = cfg.snapshot_times.iter().copied().peekable();
        let mut steps = 0;
        let t_end = cfg.t_final;
        while state.t < t_end * (1.0 - 1e-14) {
            let target = pending.peek().copied().unwrap_or(t_end).min(t_end);
            let mut dt = self.solver.cfl_dt(&state, cfg.cfl, cfg.dt_min, cfg.dt_max);
            let hit = state.t + dt >= target * (1.0 - 1e-12);
            if hit {
                dt = target - state.t;
            }
            let t_next = if hit { target } else { state.t + dt };
            let d = self.solver.step(&mut state, dt, source)?;
            state.t = t_next;
            total.add(&d);
            steps += 1;
            let done = state.t >= t_end * (1.0 - 1e-14);
            if steps % cfg.output_every == 0 || done {
                records.push(diagnostics::record(self.setup(), &state, &total));
            }
            let reached = hit && pending.peek().is_some_and(|&s| s <= target);
            if reached {
                pending.next();
            }
            if cfg.snapshot_every_step || reached {
                snapshots.push(state.clone());
            }
        }
        Ok(Trajectory {
            setup: self.setup().clone(),
            config: cfg,
            records,
            snapshots,
            dissipation: total,
            initial,
            final_state: state,
            steps,
            stats: self.solver.stats(),
        })
    }
}

/// Builds the setup and initial data of `config` and runs to `T`.
pub fn run(config: &RunConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(config)?;
    let state = sim.initial_state()?;
    sim.run_from(state, None)
}

#[cfg(test)]
mod tests;

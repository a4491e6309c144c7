//! Energy budget, boundary traces, masked region norms, weak-form residuals
//! and ε-sweeps.

mod weak;

pub use weak::{weak_residual, Equation, PointForcing, TestFunctionFamily};

use crate::eos::EnergyValue;
use crate::error::{Error, Result};
use crate::field::FaceField;
use crate::geometry::{Grid, Region, RegionMap};
use crate::operators::{curl2_vec, face_to_cell, gaffney_ratio};
use crate::solver::{self, Dissipation, RunConfig, Setup, State, Trajectory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Boundary-L² norms on `∂Ω`.
///
/// In two dimensions `curl H = J ẑ` is normal to the plane, so `curl H · n`
/// vanishes identically and `|curl H × n| = |J|`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceNorms {
    pub h_cross_n: f64,
    pub h_dot_n: f64,
    pub curl_h_cross_n: f64,
    pub curl_h_dot_n: f64,
}

/// Discrete L² norms over plateau cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionNorms {
    /// `‖u‖` over `Ω_int ∪ Ω_ext`.
    pub u_solid: f64,
    pub div_u_solid: f64,
    pub h_ext: f64,
    pub curl_h_ext: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub energy: EnergyValue,
    /// Dissipation accumulated up to `time`.
    pub dissipation: Dissipation,
    pub mass: f64,
    pub trace: TraceNorms,
    pub region: RegionNorms,
    /// `‖div(μH)‖ / (‖μH‖/h)`.
    pub div_mu_h: f64,
    pub gaffney: Option<f64>,
}

/// Default plateau margin: twice the coefficient transition width.
pub fn default_margin(setup: &Setup) -> f64 {
    2.0 * setup.coeffs.width()
}

/// Full record of one state with the default plateau margin.
pub fn record(setup: &Setup, state: &State, dissipation: &Dissipation) -> DiagnosticsRecord {
    let h = state.magnetic_field(setup.coeffs.mu_face());
    DiagnosticsRecord {
        time: state.t,
        energy: state.energy(setup),
        dissipation: *dissipation,
        mass: state.mass(&setup.grid),
        trace: trace_norms(&setup.grid, &h, &setup.region),
        region: region_norms(setup, state, default_margin(setup)),
        div_mu_h: state.div_b_relative(&setup.grid),
        gaffney: gaffney_ratio(&setup.grid, &h),
    }
}

/// `max_k [E(t_k) + D(t_k) - E(0)] / E(0)`; the absolute excess when `E(0) = 0`.
pub fn energy_budget(records: &[DiagnosticsRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let e0 = first.energy.total;
    let worst = records
        .iter()
        .map(|r| r.energy.total + r.dissipation.total() - e0)
        .fold(f64::NEG_INFINITY, f64::max);
    if e0 > 0.0 {
        worst / e0
    } else {
        worst
    }
}

/// Bilinear periodic interpolation of a staggered 2-D field whose sample
/// `idx` sits at `-L + (coords + offset) h`.
pub fn interpolate(grid: &Grid, values: &[f64], offset: [f64; 2], x: &[f64; 3]) -> f64 {
    let h = grid.h();
    let mut base = [0isize; 2];
    let mut frac = [0.0; 2];
    for a in 0..2 {
        let s = (x[a] + grid.half_len()) / h - offset[a];
        let f = s.floor();
        base[a] = f as isize;
        frac[a] = s - f;
    }
    let mut out = 0.0;
    for (di, wx) in [(0, 1.0 - frac[0]), (1, frac[0])] {
        for (dj, wy) in [(0, 1.0 - frac[1]), (1, frac[1])] {
            out += wx * wy * values[grid.index(&[base[0] + di, base[1] + dj])];
        }
    }
    out
}

/// Trace norms of `H` and `curl H` on the outer boundary samples.
pub fn trace_norms(grid: &Grid, h: &FaceField, region: &RegionMap) -> TraceNorms {
    if grid.dim() != 2 {
        return TraceNorms::default();
    }
    let j = curl2_vec(grid, h);
    let mut acc = TraceNorms::default();
    for s in region.outer_samples() {
        let hx = interpolate(grid, h.comp(0), [1.0, 0.5], &s.point);
        let hy = interpolate(grid, h.comp(1), [0.5, 1.0], &s.point);
        let jz = interpolate(grid, &j, [1.0, 1.0], &s.point);
        let (nx, ny) = (s.normal[0], s.normal[1]);
        let cross = hx * ny - hy * nx;
        let dot = hx * nx + hy * ny;
        acc.h_cross_n += s.weight * cross * cross;
        acc.h_dot_n += s.weight * dot * dot;
        acc.curl_h_cross_n += s.weight * jz * jz;
    }
    TraceNorms {
        h_cross_n: acc.h_cross_n.sqrt(),
        h_dot_n: acc.h_dot_n.sqrt(),
        curl_h_cross_n: acc.curl_h_cross_n.sqrt(),
        curl_h_dot_n: 0.0,
    }
}

/// Masked norms of `u`, `div u`, `H` and `curl H` on plateau cells at least
/// `margin` inside their region.
pub fn region_norms(setup: &Setup, state: &State, margin: f64) -> RegionNorms {
    let g = &setup.grid;
    if g.dim() != 2 {
        return RegionNorms::default();
    }
    let solid = setup.region.solid_plateau(margin);
    let ext = setup.region.plateau(Region::Exterior, margin);
    let u = state.velocity(g);
    let uc = face_to_cell(g, &u);
    let divu = crate::operators::div(g, &u);
    let h = state.magnetic_field(setup.coeffs.mu_face());
    let hc = face_to_cell(g, &h);
    let j = curl2_vec(g, &h);
    let mut out = RegionNorms::default();
    for i in 0..g.num_cells() {
        if solid[i] {
            out.u_solid += uc[i][0] * uc[i][0] + uc[i][1] * uc[i][1];
            out.div_u_solid += divu[i] * divu[i];
        }
        if ext[i] {
            out.h_ext += hc[i][0] * hc[i][0] + hc[i][1] * hc[i][1];
            let xm = g.shift(i, 0, -1);
            let jc = 0.25 * (j[i] + j[xm] + j[g.shift(i, 1, -1)] + j[g.shift(xm, 1, -1)]);
            out.curl_h_ext += jc * jc;
        }
    }
    let vol = g.cell_volume();
    RegionNorms {
        u_solid: (out.u_solid * vol).sqrt(),
        div_u_solid: (out.div_u_solid * vol).sqrt(),
        h_ext: (out.h_ext * vol).sqrt(),
        curl_h_ext: (out.curl_h_ext * vol).sqrt(),
    }
}

/// `sqrt(∫ ‖u‖²_{L²(solid)} dt)` by the trapezoidal rule over the records.
pub fn time_integrated_solid_velocity(records: &[DiagnosticsRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| 0.5 * (w[1].time - w[0].time) * (w[0].region.u_solid.powi(2) + w[1].region.u_solid.powi(2)))
        .sum::<f64>()
        .sqrt()
}

/// Least-squares slope of `log(value)` against `log(ε)`.
pub fn estimate_rate(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate estimate needs at least 3 points, got {}",
            pairs.len()
        )));
    }
    if let Some((e, v)) = pairs.iter().find(|(e, v)| !(*e > 0.0) || !(*v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "rate estimate needs positive data, got ({e}, {v})"
        )));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate estimate needs distinct epsilons".into()));
    }
    Ok(sxy / sxx)
}

/// One ε of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub u_solid_time: f64,
    pub h_ext: f64,
    pub curl_h_ext: f64,
    pub trace: TraceNorms,
    pub energy_residual: f64,
    pub max_div_mu_h: f64,
    pub mass_drift: f64,
    /// `‖ρ(T) - ρ₀‖_{L¹}` over solid plateau cells.
    pub rho_solid_l1: f64,
    /// Constrained-family weak residuals keyed by equation name.
    pub weak: Vec<(String, f64)>,
    pub steps: usize,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(epsilon: f64, e: &Error) -> Self {
        Self {
            epsilon,
            u_solid_time: f64::NAN,
            h_ext: f64::NAN,
            curl_h_ext: f64::NAN,
            trace: TraceNorms {
                h_cross_n: f64::NAN,
                h_dot_n: f64::NAN,
                curl_h_cross_n: f64::NAN,
                curl_h_dot_n: f64::NAN,
            },
            energy_residual: f64::NAN,
            max_div_mu_h: f64::NAN,
            mass_drift: f64::NAN,
            rho_solid_l1: f64::NAN,
            weak: Vec::new(),
            steps: 0,
            error: Some(e.to_string()),
        }
    }
}

/// Summary of one finished trajectory as a sweep row.
pub fn summarize(traj: &Trajectory, weak_equations: &[Equation]) -> Result<SweepRow> {
    let setup = &traj.setup;
    let last = traj.records.last().expect("trajectory has records");
    let m0 = traj.records[0].mass;
    let margin = default_margin(setup);
    let solid = setup.region.solid_plateau(margin);
    let rho_solid_l1 = (0..setup.grid.num_cells())
        .filter(|&i| solid[i])
        .map(|i| (traj.final_state.rho[i] - traj.initial.rho[i]).abs())
        .sum::<f64>()
        * setup.grid.cell_volume();
    let mut weak = Vec::new();
    for &eq in weak_equations {
        weak.push((eq.name().to_string(), weak_residual(traj, eq.default_family(), eq, None)?));
    }
    Ok(SweepRow {
        epsilon: setup.coeffs.epsilon(),
        u_solid_time: time_integrated_solid_velocity(&traj.records),
        h_ext: last.region.h_ext,
        curl_h_ext: last.region.curl_h_ext,
        trace: last.trace,
        energy_residual: energy_budget(&traj.records),
        max_div_mu_h: traj.records.iter().map(|r| r.div_mu_h).fold(0.0, f64::max),
        mass_drift: traj.records.iter().map(|r| ((r.mass - m0) / m0).abs()).fold(0.0, f64::max),
        rho_solid_l1,
        weak,
        steps: traj.steps,
        error: None,
    })
}

/// Slopes of the sweep columns against ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRates {
    pub u_solid_time: Option<f64>,
    pub h_ext: Option<f64>,
    pub curl_h_ext: Option<f64>,
    pub h_dot_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub config: RunConfig,
    pub rows: Vec<SweepRow>,
    pub rates: SweepRates,
}

impl SweepTable {
    pub fn column(&self, f: impl Fn(&SweepRow) -> f64) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.epsilon, f(r))).collect()
    }

    /// True when `f` strictly decreases with decreasing ε along the rows.
    pub fn strictly_decreasing(&self, f: impl Fn(&SweepRow) -> f64) -> bool {
        self.rows.windows(2).all(|w| f(&w[1]) < f(&w[0]))
    }
}

/// Runs `base` once per ε (strictly decreasing) and tabulates the results.
pub fn sweep_table(base: &RunConfig, eps: &[f64], weak_equations: &[Equation]) -> Result<SweepTable> {
    if eps.len() < 2 || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("epsilon list must be strictly decreasing".into()));
    }
    let mut base = base.clone();
    if weak_equations.is_empty() {
        base.snapshot_every_step = false;
    } else {
        base.snapshot_every_step = true;
    }
    base.output_every = 1;
    let rows: Vec<SweepRow> = eps
        .par_iter()
        .map(|&e| {
            let mut cfg = base.clone();
            cfg.epsilon = e;
            match solver::run(&cfg).and_then(|t| summarize(&t, weak_equations)) {
                Ok(row) => row,
                Err(err) => SweepRow::failed(e, &err),
            }
        })
        .collect();
    let rate = |f: &dyn Fn(&SweepRow) -> f64| -> Option<f64> {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, f(r))).collect();
        estimate_rate(&pairs).ok()
    };
    let rates = SweepRates {
        u_solid_time: rate(&|r| r.u_solid_time),
        h_ext: rate(&|r| r.h_ext),
        curl_h_ext: rate(&|r| r.curl_h_ext),
        h_dot_n: rate(&|r| r.trace.h_dot_n),
    };
    Ok(SweepTable {
        config: base,
        rows,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::ScenarioTag;
    use crate::geometry::Shape;
    use std::f64::consts::PI;

    #[test]
    fn rate_examples() {
        let eps = [1e-1, 1e-2, 1e-3, 1e-4];
        let sq: Vec<_> = eps.iter().map(|&e: &f64| (e, e.sqrt())).collect();
        assert!((estimate_rate(&sq).unwrap() - 0.5).abs() < 1e-12);
        let c: Vec<_> = eps.iter().map(|&e| (e, 7.0)).collect();
        assert!(estimate_rate(&c).unwrap().abs() < 1e-12);
        let l: Vec<_> = eps.iter().map(|&e| (e, 3.0 * e)).collect();
        assert!((estimate_rate(&l).unwrap() - 1.0).abs() < 1e-12);
        assert!(estimate_rate(&[(0.1, 1.0), (0.01, 0.0), (0.001, 1.0)]).is_err());
        assert!(estimate_rate(&sq[..2]).is_err());
    }

    fn trace_error(n: usize, radial: bool) -> TraceNorms {
        let g = Grid::new(2, 1.0, n).unwrap();
        let r = RegionMap::classify(&g, Shape::default()).unwrap();
        let h = FaceField::from_fn(&g, |a, x| {
            if radial {
                x[a]
            } else if a == 0 {
                -x[1]
            } else {
                x[0]
            }
        });
        trace_norms(&g, &h, &r)
    }

    #[test]
    fn trace_of_radial_and_azimuthal_fields() {
        // Bilinear interpolation of linear fields is exact away from the seam.
        let t = trace_error(64, true);
        assert!(t.h_cross_n < 1e-12, "{}", t.h_cross_n);
        let exact = 0.7 * (2.0 * PI * 0.7f64).sqrt();
        assert!((t.h_dot_n - exact).abs() < 1e-3);
        let t = trace_error(64, false);
        assert!(t.h_dot_n < 1e-12);
        // curl (-y, x) = 2
        assert!((t.curl_h_cross_n - 2.0 * (2.0 * PI * 0.7f64).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn trace_of_zero_is_zero() {
        let g = Grid::new(2, 1.0, 32).unwrap();
        let r = RegionMap::classify(&g, Shape::default()).unwrap();
        assert_eq!(trace_norms(&g, &FaceField::zeros(&g), &r), TraceNorms::default());
    }

    #[test]
    fn interpolation_reproduces_bilinear_functions() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let f = |x: f64, y: f64| 0.3 + 0.5 * x - 0.25 * y + 0.1 * x * y;
        let vals: Vec<f64> = (0..g.num_cells())
            .map(|i| {
                let c = g.corner(i);
                f(c[0], c[1])
            })
            .collect();
        for p in [[0.1, -0.2, 0.0], [0.33, 0.41, 0.0], [-0.5, 0.05, 0.0]] {
            assert!((interpolate(&g, &vals, [1.0, 1.0], &p) - f(p[0], p[1])).abs() < 1e-13);
        }
    }

    fn annulus_setup(n: usize, tag: ScenarioTag) -> Setup {
        let mut cfg = RunConfig::new(tag, 0.1);
        cfg.cells = n;
        cfg.validate().unwrap();
        Setup::new(&cfg).unwrap()
    }

    #[test]
    fn uniform_field_exterior_norm_is_plateau_volume() {
        let setup = annulus_setup(64, ScenarioTag::None);
        let mut s = State::zeros(&setup.grid);
        s.rho.iter_mut().for_each(|r| *r = 1.0);
        s.b = FaceField::from_fn(&setup.grid, |a, _| if a == 0 { 1.0 } else { 0.0 });
        let margin = default_margin(&setup);
        let n = region_norms(&setup, &s, margin);
        let cells = setup.region.plateau(Region::Exterior, margin).iter().filter(|&&b| b).count();
        let vol = cells as f64 * setup.grid.cell_volume();
        assert!((n.h_ext * n.h_ext - vol).abs() < 1e-12 * vol);
        assert_eq!(n.u_solid, 0.0);
        assert_eq!(n.curl_h_ext, 0.0);
    }

    #[test]
    fn fluid_supported_velocity_has_no_solid_norm() {
        let setup = annulus_setup(64, ScenarioTag::Pec);
        let mut s = State::zeros(&setup.grid);
        s.rho.iter_mut().for_each(|r| *r = 1.0);
        s.m = FaceField::from_fn(&setup.grid, |_, x| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if (0.4..0.6).contains(&r) {
                1.0
            } else {
                0.0
            }
        });
        assert_eq!(region_norms(&setup, &s, default_margin(&setup)).u_solid, 0.0);
    }

    #[test]
    fn budget_of_constant_records_is_zero() {
        let setup = annulus_setup(32, ScenarioTag::None);
        let mut s = State::zeros(&setup.grid);
        s.rho.iter_mut().for_each(|r| *r = 1.0);
        let mut recs = vec![record(&setup, &s, &Dissipation::default())];
        s.t = 1.0;
        recs.push(record(&setup, &s, &Dissipation::default()));
        assert!(energy_budget(&recs).abs() <= 1e-14);
    }
}

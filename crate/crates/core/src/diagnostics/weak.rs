//! Weak-form residuals of the stored trajectory against analytic test
//! functions.
//!
//! Every identity is written as `A(τ) - A(0) = Σ_j ∫_0^τ T_j dt`. Spatial
//! integrals use the midpoint rule on cell centres with staggered quantities
//! averaged there; time integrals use the trapezoidal rule over the stored
//! snapshots. The residual at `τ` is `|A(τ) - A(0) - Σ_j C_j(τ)|` divided by
//! the largest of `|A(τ)|`, `|A(0)|`, `|C_j(τ)|`.

use crate::coefficients::Coefficient;
use crate::eos::{maxwell_tensor, viscous_stress};
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::operators::{curl2_vec, face_to_cell, sym_grad};
use crate::solver::{Setup, State, Trajectory};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Pointwise forcing `(f_ρ, f_m,x, f_m,y, g)` of a forced run, where the
/// induction forcing is `curl(g ẑ)`.
pub trait PointForcing: Sync {
    fn at(&self, x: &[f64; 3], t: f64) -> [f64; 4];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TestFunctionFamily {
    /// Trigonometric modes on the torus.
    TorusTrig,
    /// Modes multiplied by a bump vanishing with its gradient outside `Ω_F`.
    FluidBump,
    /// Gradients of periodic modes plus fluid bumps: `curl φ = 0` in `Ω_ext`.
    CurlFreeExt,
    /// Trigonometric modes integrated over `Ω` only.
    Closure,
}

/// Which integral identity to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equation {
    /// Continuity.
    Continuity,
    /// Renormalized continuity.
    Renormalized,
    /// Momentum.
    Momentum,
    /// Induction on the torus.
    Induction,
    /// Induction, perfect electric isolator limit.
    IsolatorLimit,
    /// Induction, perfect magnetic conductor limit.
    PmcLimit,
    /// Induction, perfect electric conductor limit.
    PecLimit,
    /// Induction, isolator-type limit.
    IsolatorTypeLimit,
}

impl Equation {
    pub const ALL: [Equation; 8] = [
        Equation::Continuity,
        Equation::Renormalized,
        Equation::Momentum,
        Equation::Induction,
        Equation::IsolatorLimit,
        Equation::PmcLimit,
        Equation::PecLimit,
        Equation::IsolatorTypeLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Equation::Continuity => "continuity",
            Equation::Renormalized => "renormalized",
            Equation::Momentum => "momentum",
            Equation::Induction => "induction",
            Equation::IsolatorLimit => "isolator_limit",
            Equation::PmcLimit => "pmc_limit",
            Equation::PecLimit => "pec_limit",
            Equation::IsolatorTypeLimit => "isolator_type_limit",
        }
    }

    pub fn default_family(self) -> TestFunctionFamily {
        match self {
            Equation::Continuity | Equation::Renormalized | Equation::Momentum | Equation::Induction => TestFunctionFamily::TorusTrig,
            Equation::IsolatorLimit => TestFunctionFamily::CurlFreeExt,
            Equation::PmcLimit | Equation::IsolatorTypeLimit => TestFunctionFamily::FluidBump,
            Equation::PecLimit => TestFunctionFamily::Closure,
        }
    }

    pub fn accepts(self, f: TestFunctionFamily) -> bool {
        use TestFunctionFamily::*;
        match self {
            Equation::Continuity | Equation::Renormalized | Equation::Induction => f == TorusTrig,
            Equation::Momentum => matches!(f, TorusTrig | FluidBump),
            Equation::IsolatorLimit => matches!(f, CurlFreeExt | FluidBump),
            Equation::PmcLimit | Equation::IsolatorTypeLimit => f == FluidBump,
            Equation::PecLimit => f == Closure,
        }
    }

    fn is_scalar(self) -> bool {
        matches!(self, Equation::Continuity | Equation::Renormalized)
    }
}

/// Periodic modes `cos(π(k·x)/L + phase)`.
const MODES: [(f64, f64, f64); 6] = [
    (0.0, 0.0, 0.0),
    (1.0, 0.0, 0.0),
    (0.0, 1.0, 0.5 * PI),
    (1.0, 1.0, 0.0),
    (1.0, -1.0, 0.5 * PI),
    (2.0, 1.0, 0.3),
];

/// Value, gradient and Hessian of one mode.
fn mode(m: usize, l: f64, x: &[f64; 3]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let (kx, ky, ph) = MODES[m];
    let k = [PI * kx / l, PI * ky / l];
    let arg = k[0] * x[0] + k[1] * x[1] + ph;
    let (s, c) = arg.sin_cos();
    (
        c,
        [-k[0] * s, -k[1] * s],
        [[-k[0] * k[0] * c, -k[0] * k[1] * c], [-k[1] * k[0] * c, -k[1] * k[1] * c]],
    )
}

/// A vector test function sampled at one point: `value[a]` and `grad[a][b] = ∂_b φ_a`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TestValue {
    pub value: [f64; 2],
    pub grad: [[f64; 2]; 2],
}

impl TestValue {
    pub fn curl(&self) -> f64 {
        self.grad[1][0] - self.grad[0][1]
    }

    pub fn div(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }
}

fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        (t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t))
    }
}

/// Radii between which the fluid bump may be nonzero.
fn bump_radii(setup: &Setup) -> (f64, f64) {
    let shape = setup.region.shape();
    let margin = 0.5 * setup.coeffs.width() + 2.0 * setup.grid.h();
    let r_lo = if shape.has_interior() { shape.r_inner + margin } else { 0.0 };
    (r_lo, shape.r_outer - margin)
}

/// Radial bump vanishing with its gradient outside the fluid, at least
/// `w/2 + 2h` away from both interfaces; `(value, gradient)`.
fn fluid_bump(setup: &Setup, x: &[f64; 3]) -> (f64, [f64; 2]) {
    let shape = setup.region.shape();
    let h = setup.grid.h();
    let (r_lo, r_hi) = bump_radii(setup);
    let ramp = (0.25 * (r_hi - r_lo)).max(h);
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let (o, od) = smoothstep((r_hi - r) / ramp);
    let (i, id) = if shape.has_interior() {
        smoothstep((r - r_lo) / ramp)
    } else {
        (1.0, 0.0)
    };
    let val = o * i;
    if val == 0.0 || r == 0.0 {
        return (val, [0.0, 0.0]);
    }
    let dr = (-od * i + o * id) / ramp;
    (val, [dr * x[0] / r, dr * x[1] / r])
}

impl TestFunctionFamily {
    /// Number of vector-valued members.
    pub fn len(self) -> usize {
        match self {
            TestFunctionFamily::CurlFreeExt => (MODES.len() - 1) + 2 * MODES.len(),
            _ => 2 * MODES.len(),
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Member `k` at `x`.
    pub fn eval(self, k: usize, setup: &Setup, x: &[f64; 3]) -> TestValue {
        let l = setup.grid.half_len();
        match self {
            TestFunctionFamily::TorusTrig | TestFunctionFamily::Closure => axis_mode(k, l, x),
            TestFunctionFamily::FluidBump => {
                let t = axis_mode(k, l, x);
                let (c, dc) = fluid_bump(setup, x);
                let a = k % 2;
                let v = t.value[a];
                let mut out = TestValue::default();
                out.value[a] = c * v;
                for b in 0..2 {
                    out.grad[a][b] = c * t.grad[a][b] + dc[b] * v;
                }
                out
            }
            TestFunctionFamily::CurlFreeExt => {
                let n_grad = MODES.len() - 1;
                if k < n_grad {
                    let (_, g, hess) = mode(k + 1, l, x);
                    TestValue { value: g, grad: hess }
                } else {
                    TestFunctionFamily::FluidBump.eval(k - n_grad, setup, x)
                }
            }
        }
    }

    /// Whether member `k` also serves as a scalar test function `φ = value[0]`.
    fn scalar_member(self, k: usize) -> bool {
        k % 2 == 0 && self != TestFunctionFamily::CurlFreeExt
    }
}

/// `e_{k mod 2}` times mode `k / 2`.
fn axis_mode(k: usize, l: f64, x: &[f64; 3]) -> TestValue {
    let (v, g, _) = mode(k / 2, l, x);
    let a = k % 2;
    let mut out = TestValue::default();
    out.value[a] = v;
    out.grad[a] = g;
    out
}

/// Cell-centred quantities of one snapshot.
struct CellData {
    t: f64,
    rho: Vec<f64>,
    m: Vec<[f64; 3]>,
    u: Vec<[f64; 3]>,
    b: Vec<[f64; 3]>,
    j: Vec<f64>,
    divu: Vec<f64>,
    stress: Vec<[[f64; 3]; 3]>,
    p: Vec<f64>,
}

fn cell_data(setup: &Setup, s: &State) -> CellData {
    let g = &setup.grid;
    let u_face = s.velocity(g);
    let h_face = s.magnetic_field(setup.coeffs.mu_face());
    let jc = curl2_vec(g, &h_face);
    let nu = setup.coeffs.cell(Coefficient::Nu);
    let lam = setup.coeffs.cell(Coefficient::Lambda);
    let du = sym_grad(g, &u_face);
    let n = g.num_cells();
    let j: Vec<f64> = (0..n)
        .map(|i| {
            let xm = g.shift(i, 0, -1);
            0.25 * (jc[i] + jc[xm] + jc[g.shift(i, 1, -1)] + jc[g.shift(xm, 1, -1)])
        })
        .collect();
    CellData {
        t: s.t,
        rho: s.rho.0.clone(),
        m: face_to_cell(g, &s.m),
        u: face_to_cell(g, &u_face),
        b: face_to_cell(g, &s.b),
        j,
        divu: crate::operators::div(g, &u_face).0,
        stress: (0..n).map(|i| viscous_stress(&du[i], nu[i], lam[i], 2)).collect(),
        p: s.rho.iter().map(|&r| setup.eos.pressure_unchecked(r.max(0.0))).collect(),
    }
}

/// Renormalizations with bounded `b'`: `ρ/(1+ρ)` and a smoothed `min(ρ, 1)`.
fn renormalize(which: usize, rho: f64) -> (f64, f64) {
    if which == 0 {
        (rho / (1.0 + rho), 1.0 / ((1.0 + rho) * (1.0 + rho)))
    } else {
        let k = 1.0;
        if rho <= k {
            (rho, 1.0)
        } else if rho >= 2.0 * k {
            (1.5 * k, 0.0)
        } else {
            let t = (rho - k) / k;
            (k + k * (t - t.powi(3) + 0.5 * t.powi(4)), 1.0 - t * t * (3.0 - 2.0 * t))
        }
    }
}

/// `A` and the integrands `T_j` of one identity for one test function and
/// one snapshot, integrated over the masked cells.
fn terms(
    eq: Equation,
    setup: &Setup,
    d: &CellData,
    phi: &[TestValue],
    mask: &[bool],
    forcing: Option<&[[f64; 4]]>,
    renorm: usize,
) -> (f64, [f64; 6]) {
    let mu = setup.coeffs.cell(Coefficient::Mu);
    let eta = setup.coeffs.cell(Coefficient::Eta);
    let beta = setup.coeffs.cell(Coefficient::Beta);
    let mut a = 0.0;
    let mut t = [0.0; 6];
    for i in 0..phi.len() {
        if !mask[i] {
            continue;
        }
        let f = &phi[i];
        let src = forcing.map(|fs| fs[i]).unwrap_or([0.0; 4]);
        match eq {
            Equation::Continuity => {
                a += d.rho[i] * f.value[0];
                t[0] += d.m[i][0] * f.grad[0][0] + d.m[i][1] * f.grad[0][1];
                t[1] += src[0] * f.value[0];
            }
            Equation::Renormalized => {
                let (b, db) = renormalize(renorm, d.rho[i]);
                a += b * f.value[0];
                t[0] += b * (d.u[i][0] * f.grad[0][0] + d.u[i][1] * f.grad[0][1]);
                t[1] += (b - db * d.rho[i]) * d.divu[i] * f.value[0];
                t[2] += db * src[0] * f.value[0];
            }
            Equation::Momentum => {
                a += d.m[i][0] * f.value[0] + d.m[i][1] * f.value[1];
                let hc = [d.b[i][0] / mu[i], d.b[i][1] / mu[i], 0.0];
                let mt = maxwell_tensor(&hc, mu[i], 2);
                let mut conv = 0.0;
                let mut visc = 0.0;
                let mut mag = 0.0;
                for x in 0..2 {
                    for y in 0..2 {
                        conv += d.m[i][x] * d.u[i][y] * f.grad[x][y];
                        visc += d.stress[i][x][y] * f.grad[x][y];
                        mag += mt[x][y] * f.grad[x][y];
                    }
                }
                t[0] += conv;
                t[1] += d.p[i] * f.div();
                t[2] -= visc;
                t[3] -= mag;
                t[4] -= beta[i] * (d.u[i][0] * f.value[0] + d.u[i][1] * f.value[1]);
                t[5] += src[1] * f.value[0] + src[2] * f.value[1];
            }
            _ => {
                a += d.b[i][0] * f.value[0] + d.b[i][1] * f.value[1];
                let curl = f.curl();
                let g = d.u[i][0] * d.b[i][1] - d.u[i][1] * d.b[i][0];
                t[0] += g * curl;
                t[1] -= eta[i] * d.j[i] * curl;
                t[2] += src[3] * curl;
            }
        }
    }
    let vol = setup.grid.cell_volume();
    (a * vol, t.map(|v| v * vol))
}

/// Largest defect `|A(τ) - A(0) - Σ_j ∫_0^τ T_j|` over the family members and
/// the snapshot times, divided by the largest `|A|` or `|∫ T_j|` seen over the
/// same members and times.
///
/// `forcing` supplies the source of a forced (manufactured) run.
pub fn weak_residual(
    traj: &Trajectory,
    family: TestFunctionFamily,
    eq: Equation,
    forcing: Option<&dyn PointForcing>,
) -> Result<f64> {
    if !eq.accepts(family) {
        return Err(Error::InvalidArgument(format!(
            "test family {family:?} does not apply to equation {}",
            eq.name()
        )));
    }
    let setup = &traj.setup;
    if setup.grid.dim() != 2 {
        return Err(Error::Unsupported("weak residuals are implemented for d = 2".into()));
    }
    if family == TestFunctionFamily::FluidBump {
        let (lo, hi) = bump_radii(setup);
        if hi <= lo {
            return Err(Error::InvalidArgument("fluid gap too thin for the bump family on this grid".into()));
        }
    }
    if traj.snapshots.len() < 2 {
        return Err(Error::InvalidArgument("weak residual needs at least two snapshots".into()));
    }
    let g = &setup.grid;
    let n = g.num_cells();
    let centres: Vec<[f64; 3]> = (0..n).map(|i| g.cell_center(i)).collect();
    let mask: Vec<bool> = match eq {
        Equation::PecLimit => setup.region.labels().iter().map(|&l| l != Region::Exterior).collect(),
        _ => vec![true; n],
    };
    let members: Vec<usize> = (0..family.len())
        .filter(|&k| !eq.is_scalar() || family.scalar_member(k))
        .collect();
    let phis: Vec<Vec<TestValue>> = members
        .iter()
        .map(|&k| centres.iter().map(|x| family.eval(k, setup, x)).collect())
        .collect();
    let variants = if eq == Equation::Renormalized { 2 } else { 1 };

    let mut cum = vec![[[0.0f64; 6]; 2]; phis.len()];
    let mut prev = vec![[[0.0f64; 6]; 2]; phis.len()];
    let mut a0 = vec![[0.0f64; 2]; phis.len()];
    let mut defect = 0.0f64;
    let mut scale = 0.0f64;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let d = cell_data(setup, snap);
        let src: Option<Vec<[f64; 4]>> = forcing.map(|f| centres.iter().map(|x| f.at(x, d.t)).collect());
        let dt = if k > 0 { d.t - traj.snapshots[k - 1].t } else { 0.0 };
        for (m, phi) in phis.iter().enumerate() {
            for v in 0..variants {
                let (a, t) = terms(eq, setup, &d, phi, &mask, src.as_deref(), v);
                if k == 0 {
                    a0[m][v] = a;
                } else {
                    for j in 0..6 {
                        cum[m][v][j] += 0.5 * dt * (prev[m][v][j] + t[j]);
                    }
                }
                prev[m][v] = t;
                if k > 0 {
                    let sum: f64 = cum[m][v].iter().sum();
                    defect = defect.max((a - a0[m][v] - sum).abs());
                }
                scale = cum[m][v].iter().map(|c| c.abs()).fold(scale.max(a.abs()), f64::max);
            }
        }
    }
    Ok(if scale > 0.0 { defect / scale } else { 0.0 })
}

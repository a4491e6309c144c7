//! Penalized transport coefficients `β, ν, λ, μ, η`.
//!
//! A [`Scenario`] plus the penalization dial `ε` fixes three plateau values
//! (fluid, interior solid, exterior) per coefficient; [`CoefficientField`]
//! blends them with the C¹ smoothstep across a band of width `w` centred on
//! each interface.

use crate::error::{Error, Result};
use crate::field::{CellField, CornerField, EdgeField, FaceField};
use crate::geometry::{mollifier, Grid, RegionMap, Shape};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which exterior material the penalization drives towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioTag {
    /// `η_ext → ∞`, `μ_ext` fixed.
    Isolator,
    /// `μ_ext → ∞`, `η_ext` fixed.
    Pmc,
    /// `μ_ext → 0`, `η_ext → 0`.
    Pec,
    /// `μ_ext → 0`, `η_ext → ∞`.
    IsolatorType,
    /// Constant coefficients, no penalization.
    None,
}

impl ScenarioTag {
    pub const PENALIZED: [ScenarioTag; 4] = [
        ScenarioTag::Isolator,
        ScenarioTag::Pmc,
        ScenarioTag::Pec,
        ScenarioTag::IsolatorType,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioTag::Isolator => "isolator",
            ScenarioTag::Pmc => "pmc",
            ScenarioTag::Pec => "pec",
            ScenarioTag::IsolatorType => "isolator_type",
            ScenarioTag::None => "none",
        }
    }
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "isolator" => Ok(ScenarioTag::Isolator),
            "pmc" => Ok(ScenarioTag::Pmc),
            "pec" => Ok(ScenarioTag::Pec),
            "isolator_type" => Ok(ScenarioTag::IsolatorType),
            "none" => Ok(ScenarioTag::None),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Scenario tag plus the ε-independent base values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub tag: ScenarioTag,
    pub nu_f: f64,
    pub lambda_f: f64,
    pub mu_f: f64,
    pub mu_int: f64,
    pub eta_f: f64,
    pub eta_int: f64,
    /// Exterior permeability when it is held fixed (isolator).
    pub mu_ext: f64,
    /// Exterior resistivity when it is held fixed (PMC).
    pub eta_ext: f64,
}

impl Scenario {
    pub fn new(tag: ScenarioTag) -> Self {
        Self {
            tag,
            nu_f: 0.05,
            lambda_f: 0.0,
            mu_f: 1.0,
            mu_int: 2.0,
            eta_f: 0.05,
            eta_int: 0.1,
            mu_ext: 1.0,
            eta_ext: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, strict: bool| {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidCoefficients(format!(
                    "{name} must be {}, got {v}",
                    if strict { "positive" } else { "non-negative" }
                )))
            }
        };
        check("nu_F", self.nu_f, true)?;
        check("lambda_F", self.lambda_f, false)?;
        check("mu_F", self.mu_f, true)?;
        check("mu_int", self.mu_int, true)?;
        check("eta_F", self.eta_f, true)?;
        check("eta_int", self.eta_int, true)?;
        check("mu_ext", self.mu_ext, true)?;
        check("eta_ext", self.eta_ext, true)
    }
}

/// The five transport coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coefficient {
    Beta,
    Nu,
    Lambda,
    Mu,
    Eta,
}

impl Coefficient {
    pub const ALL: [Coefficient; 5] = [
        Coefficient::Beta,
        Coefficient::Nu,
        Coefficient::Lambda,
        Coefficient::Mu,
        Coefficient::Eta,
    ];

    fn slot(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::Beta => "beta",
            Coefficient::Nu => "nu",
            Coefficient::Lambda => "lambda",
            Coefficient::Mu => "mu",
            Coefficient::Eta => "eta",
        }
    }

    /// Coefficients that must stay strictly positive.
    fn strictly_positive(self) -> bool {
        matches!(self, Coefficient::Nu | Coefficient::Mu | Coefficient::Eta)
    }
}

/// Plateau values of one coefficient at one ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTriple {
    pub fluid: f64,
    pub interior: f64,
    pub exterior: f64,
}

impl CoefficientTriple {
    pub fn new(fluid: f64, interior: f64, exterior: f64) -> Self {
        Self {
            fluid,
            interior,
            exterior,
        }
    }

    pub fn uniform(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn min(&self) -> f64 {
        self.fluid.min(self.interior).min(self.exterior)
    }

    pub fn max(&self) -> f64 {
        self.fluid.max(self.interior).max(self.exterior)
    }

    fn validate(&self, which: Coefficient) -> Result<()> {
        for v in [self.fluid, self.interior, self.exterior] {
            if !v.is_finite() || v < 0.0 || (which.strictly_positive() && v <= 0.0) {
                return Err(Error::InvalidCoefficients(format!(
                    "{} triple {:?} violates its bounds",
                    which.name(),
                    self
                )));
            }
        }
        Ok(())
    }
}

/// Plateau values of all five coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub beta: CoefficientTriple,
    pub nu: CoefficientTriple,
    pub lambda: CoefficientTriple,
    pub mu: CoefficientTriple,
    pub eta: CoefficientTriple,
}

impl Schedule {
    pub fn get(&self, c: Coefficient) -> CoefficientTriple {
        match c {
            Coefficient::Beta => self.beta,
            Coefficient::Nu => self.nu,
            Coefficient::Lambda => self.lambda,
            Coefficient::Mu => self.mu,
            Coefficient::Eta => self.eta,
        }
    }
}

/// Plateau values for `scenario` at penalization level `epsilon ∈ (0, 1]`.
///
/// Every diverging value is `1/ε` and every vanishing one is `ε`.
pub fn schedule(scenario: &Scenario, epsilon: f64, dim: usize) -> Result<Schedule> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidCoefficients(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    scenario.validate()?;
    let s = scenario;
    if s.tag == ScenarioTag::None {
        return Ok(Schedule {
            beta: CoefficientTriple::uniform(0.0),
            nu: CoefficientTriple::uniform(s.nu_f),
            lambda: CoefficientTriple::uniform(s.lambda_f),
            mu: CoefficientTriple::uniform(s.mu_f),
            eta: CoefficientTriple::uniform(s.eta_f),
        });
    }
    let big = 1.0 / epsilon;
    let small = epsilon;
    let (nu, lambda) = if dim == 3 {
        (
            CoefficientTriple::new(s.nu_f, big, big),
            CoefficientTriple::uniform(s.lambda_f),
        )
    } else {
        (
            CoefficientTriple::uniform(s.nu_f),
            CoefficientTriple::new(s.lambda_f, big, big),
        )
    };
    let (mu_ext, eta_ext) = match s.tag {
        ScenarioTag::Isolator => (s.mu_ext, big),
        ScenarioTag::Pmc => (big, s.eta_ext),
        ScenarioTag::Pec => (small, small),
        ScenarioTag::IsolatorType => (small, big),
        ScenarioTag::None => unreachable!(),
    };
    let out = Schedule {
        beta: CoefficientTriple::new(0.0, big, big),
        nu,
        lambda,
        mu: CoefficientTriple::new(s.mu_f, s.mu_int, mu_ext),
        eta: CoefficientTriple::new(s.eta_f, s.eta_int, eta_ext),
    };
    for c in Coefficient::ALL {
        out.get(c).validate(c)?;
    }
    Ok(out)
}

/// Pointwise blend of a triple across the two interface bands.
#[derive(Debug, Clone, Copy)]
struct Blend {
    shape: Shape,
    width: f64,
}

impl Blend {
    fn eval(&self, t: &CoefficientTriple, x: &[f64; 3]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let inner_side = self.shape.has_interior()
            && r < 0.5 * (self.shape.r_inner + self.shape.r_outer);
        if inner_side {
            let q = mollifier(r - self.shape.r_inner, self.width);
            t.interior + (t.fluid - t.interior) * q
        } else {
            let q = mollifier(r - self.shape.r_outer, self.width);
            t.fluid + (t.exterior - t.fluid) * q
        }
    }
}

/// Mollified coefficient fields on one grid, plus the staggered samples the
/// solver needs (`μ`, `β` on faces; `ν`, `η` on corners or edges).
#[derive(Debug, Clone)]
pub struct CoefficientField {
    scenario: Scenario,
    epsilon: f64,
    width: f64,
    schedule: Schedule,
    blend: Blend,
    cells: Vec<CellField>,
    mu_face: FaceField,
    beta_face: FaceField,
    eta_corner: CornerField,
    nu_corner: CornerField,
    eta_edge: Option<EdgeField>,
}

impl CoefficientField {
    /// Builds all fields from `schedule` with transition width `width ≥ 2h`.
    pub fn build(
        region: &RegionMap,
        scenario: Scenario,
        epsilon: f64,
        schedule: Schedule,
        width: f64,
    ) -> Result<Self> {
        let grid = region.grid();
        if !(width >= 2.0 * grid.h() * (1.0 - 1e-12)) {
            return Err(Error::InvalidCoefficients(format!(
                "transition width {width} below 2h = {}",
                2.0 * grid.h()
            )));
        }
        let shape = region.shape();
        if shape.has_interior() && shape.r_outer - shape.r_inner <= width {
            return Err(Error::InvalidCoefficients(format!(
                "fluid gap {} too thin for transition width {width}",
                shape.r_outer - shape.r_inner
            )));
        }
        for c in Coefficient::ALL {
            schedule.get(c).validate(c)?;
        }
        let blend = Blend { shape, width };
        let cells: Vec<CellField> = Coefficient::ALL
            .iter()
            .map(|&c| CellField::from_fn(grid, |x| blend.eval(&schedule.get(c), &x)))
            .collect();
        for c in [Coefficient::Mu, Coefficient::Eta, Coefficient::Nu] {
            if let Some((i, v)) = cells[c.slot()]
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v > 0.0))
            {
                return Err(Error::InvalidCoefficients(format!(
                    "{} = {v} at cell {i} is not positive",
                    c.name()
                )));
            }
        }
        let mu_face = FaceField::from_fn(grid, |_, x| blend.eval(&schedule.mu, &x));
        let beta_face = FaceField::from_fn(grid, |_, x| blend.eval(&schedule.beta, &x));
        let (eta_corner, nu_corner, eta_edge) = if grid.dim() == 2 {
            (
                CornerField::from_fn(grid, |x| blend.eval(&schedule.eta, &x)),
                CornerField::from_fn(grid, |x| blend.eval(&schedule.nu, &x)),
                None,
            )
        } else {
            (
                CornerField::zeros(grid),
                CornerField::zeros(grid),
                Some(EdgeField::from_fn(grid, |_, x| blend.eval(&schedule.eta, &x))),
            )
        };
        Ok(Self {
            scenario,
            epsilon,
            width,
            schedule,
            blend,
            cells,
            mu_face,
            beta_face,
            eta_corner,
            nu_corner,
            eta_edge,
        })
    }

    /// Schedules `scenario` at `epsilon` and builds the fields.
    pub fn for_scenario(
        region: &RegionMap,
        scenario: Scenario,
        epsilon: f64,
        width: f64,
    ) -> Result<Self> {
        let sched = schedule(&scenario, epsilon, region.grid().dim())?;
        Self::build(region, scenario, epsilon, sched, width)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn cell(&self, c: Coefficient) -> &CellField {
        &self.cells[c.slot()]
    }

    /// Coefficient value at an arbitrary point.
    pub fn eval(&self, c: Coefficient, x: &[f64; 3]) -> f64 {
        self.blend.eval(&self.schedule.get(c), x)
    }

    pub fn mu_face(&self) -> &FaceField {
        &self.mu_face
    }

    pub fn beta_face(&self) -> &FaceField {
        &self.beta_face
    }

    pub fn eta_corner(&self) -> &CornerField {
        &self.eta_corner
    }

    pub fn nu_corner(&self) -> &CornerField {
        &self.nu_corner
    }

    pub fn eta_edge(&self) -> Option<&EdgeField> {
        self.eta_edge.as_ref()
    }

    /// Default transition width for a grid: four cells.
    pub fn default_width(grid: &Grid) -> f64 {
        4.0 * grid.h()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mollifier_slope, Region};

    fn setup(n: usize) -> RegionMap {
        let g = Grid::new(2, 1.0, n).unwrap();
        RegionMap::classify(&g, Shape::new(0.7, 0.3)).unwrap()
    }

    #[test]
    fn pec_schedule() {
        let s = schedule(&Scenario::new(ScenarioTag::Pec), 0.01, 2).unwrap();
        assert_eq!(s.mu.exterior, 0.01);
        assert_eq!(s.eta.exterior, 0.01);
    }

    #[test]
    fn pmc_schedule() {
        let sc = Scenario::new(ScenarioTag::Pmc);
        let s = schedule(&sc, 0.1, 2).unwrap();
        assert!((s.mu.exterior - 10.0).abs() < 1e-12);
        assert_eq!(s.eta.exterior, sc.eta_ext);
    }

    #[test]
    fn brinkman_friction_schedule() {
        for tag in ScenarioTag::PENALIZED {
            let s = schedule(&Scenario::new(tag), 0.5, 2).unwrap();
            assert_eq!(s.beta, CoefficientTriple::new(0.0, 2.0, 2.0));
        }
    }

    #[test]
    fn viscosity_blowup_depends_on_dimension() {
        let sc = Scenario::new(ScenarioTag::Isolator);
        let s2 = schedule(&sc, 0.25, 2).unwrap();
        assert_eq!(s2.lambda.exterior, 4.0);
        assert_eq!(s2.nu.exterior, sc.nu_f);
        let s3 = schedule(&sc, 0.25, 3).unwrap();
        assert_eq!(s3.nu.interior, 4.0);
        assert_eq!(s3.lambda.interior, sc.lambda_f);
    }

    #[test]
    fn schedule_rejects_bad_epsilon() {
        let sc = Scenario::new(ScenarioTag::Pec);
        assert!(schedule(&sc, 0.0, 2).is_err());
        assert!(schedule(&sc, -0.1, 2).is_err());
        assert!(schedule(&sc, 1.5, 2).is_err());
        assert!(schedule(&sc, 1.0, 2).is_ok());
    }

    #[test]
    fn halving_epsilon_doubles_and_halves() {
        for tag in ScenarioTag::PENALIZED {
            let sc = Scenario::new(tag);
            let a = schedule(&sc, 0.125, 2).unwrap();
            let b = schedule(&sc, 0.0625, 2).unwrap();
            for c in Coefficient::ALL {
                let (ta, tb) = (a.get(c), b.get(c));
                for (va, vb) in [
                    (ta.fluid, tb.fluid),
                    (ta.interior, tb.interior),
                    (ta.exterior, tb.exterior),
                ] {
                    // Powers of two keep these comparisons exact.
                    let ok = vb == va || vb == 2.0 * va || vb == 0.5 * va;
                    assert!(ok, "{tag} {:?}: {va} -> {vb}", c);
                    if va == 8.0 {
                        assert_eq!(vb, 16.0);
                    }
                    if va == 0.125 {
                        assert_eq!(vb, 0.0625);
                    }
                }
            }
        }
    }

    #[test]
    fn none_ignores_epsilon() {
        let sc = Scenario::new(ScenarioTag::None);
        assert_eq!(schedule(&sc, 0.1, 2).unwrap(), schedule(&sc, 0.001, 2).unwrap());
    }

    #[test]
    fn plateaus_are_exact() {
        let map = setup(64);
        let w = CoefficientField::default_width(map.grid());
        let f = CoefficientField::for_scenario(&map, Scenario::new(ScenarioTag::Pmc), 0.1, w).unwrap();
        let sched = *f.schedule();
        for c in Coefficient::ALL {
            let t = sched.get(c);
            for i in 0..map.grid().num_cells() {
                let v = f.cell(c)[i];
                match map.label(i) {
                    Region::Interior if map.dist_inner()[i] < -2.0 * w => assert_eq!(v, t.interior),
                    Region::Exterior if map.dist_outer()[i] > 2.0 * w => assert_eq!(v, t.exterior),
                    Region::Fluid if map.depth(i) > 3.0 * w => assert_eq!(v, t.fluid),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn values_stay_within_triple_bounds() {
        let map = setup(64);
        let w = CoefficientField::default_width(map.grid());
        for tag in ScenarioTag::PENALIZED {
            let f = CoefficientField::for_scenario(&map, Scenario::new(tag), 0.01, w).unwrap();
            for c in Coefficient::ALL {
                let t = f.schedule().get(c);
                for &v in f.cell(c).iter() {
                    assert!(v >= t.min() && v <= t.max(), "{tag} {c:?} {v}");
                }
            }
        }
    }

    #[test]
    fn gradient_bounded_by_band_slope() {
        let map = setup(128);
        let g = map.grid();
        let w = CoefficientField::default_width(g);
        let f = CoefficientField::for_scenario(&map, Scenario::new(ScenarioTag::Isolator), 0.1, w).unwrap();
        let qmax = mollifier_slope(0.0, w);
        for c in Coefficient::ALL {
            let t = f.schedule().get(c);
            let jump = (t.fluid - t.interior).abs().max((t.exterior - t.fluid).abs());
            let field = f.cell(c);
            for i in 0..g.num_cells() {
                for a in 0..2 {
                    let d = (field[g.shift(i, a, 1)] - field[i]).abs() / g.h();
                    assert!(d <= jump * qmax * (1.0 + 1e-9), "{c:?}: {d}");
                }
            }
        }
    }

    #[test]
    fn rejects_narrow_width() {
        let map = setup(64);
        let h = map.grid().h();
        let sc = Scenario::new(ScenarioTag::Pec);
        assert!(CoefficientField::for_scenario(&map, sc, 0.1, 1.5 * h).is_err());
    }

    #[test]
    fn rejects_nonpositive_mu() {
        let map = setup(32);
        let mut sched = schedule(&Scenario::new(ScenarioTag::Pec), 0.1, 2).unwrap();
        sched.mu.exterior = 0.0;
        let w = CoefficientField::default_width(map.grid());
        assert!(CoefficientField::build(&map, Scenario::new(ScenarioTag::Pec), 0.1, sched, w).is_err());
    }

    #[test]
    fn scenario_parses() {
        assert_eq!("PEC".parse::<ScenarioTag>().unwrap(), ScenarioTag::Pec);
        assert_eq!("isolator-type".parse::<ScenarioTag>().unwrap(), ScenarioTag::IsolatorType);
        assert!("plasma".parse::<ScenarioTag>().is_err());
    }
}

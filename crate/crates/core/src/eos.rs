//! Barotropic pressure law, stresses and the total energy functional.

use crate::error::{Error, Result};
use crate::field::{CellField, FaceField};
use crate::geometry::Grid;
use serde::{Deserialize, Serialize};

/// `d × d` tensor; entries beyond `dim` are zero.
pub type Tensor = [[f64; 3]; 3];

/// Isentropic pressure `p(ρ) = a ρ^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EosParams {
    pub a: f64,
    pub gamma: f64,
}

impl EosParams {
    /// Validates `a > 0` and `γ > d/2`.
    pub fn new(a: f64, gamma: f64, dim: usize) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidEos(format!("a must be positive, got {a}")));
        }
        if !(gamma > dim as f64 / 2.0) || !gamma.is_finite() {
            return Err(Error::InvalidEos(format!(
                "gamma = {gamma} violates gamma > d/2 = {}",
                dim as f64 / 2.0
            )));
        }
        Ok(Self { a, gamma })
    }

    /// `γ = 1.4` in 2-D, `5/3` in 3-D, `a = 1`.
    pub fn default_for(dim: usize) -> Self {
        let gamma = if dim == 3 { 5.0 / 3.0 } else { 1.4 };
        Self { a: 1.0, gamma }
    }

    /// `p(ρ)`; rejects negative density.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        if rho < 0.0 {
            return Err(Error::InvalidState(format!("negative density {rho}")));
        }
        Ok(self.pressure_unchecked(rho))
    }

    #[inline]
    pub(crate) fn pressure_unchecked(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            0.0
        } else {
            self.a * rho.powf(self.gamma)
        }
    }

    /// `P(ρ) = a ρ^γ / (γ - 1)`, the solution of `P'ρ - P = p` with `P(0) = 0`.
    pub fn pressure_potential(&self, rho: f64) -> Result<f64> {
        if self.gamma == 1.0 {
            return Err(Error::InvalidEos("pressure potential undefined for gamma = 1".into()));
        }
        Ok(self.pressure(rho)? / (self.gamma - 1.0))
    }

    /// Sound speed `sqrt(p'(ρ)) = sqrt(a γ ρ^(γ-1))`.
    pub fn sound_speed(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        (self.a * self.gamma * rho.powf(self.gamma - 1.0)).sqrt()
    }
}

/// `μ (H ⊗ H - ½|H|² I)` in `dim` dimensions.
pub fn maxwell_tensor(h: &[f64], mu: f64, dim: usize) -> Tensor {
    let mut t = [[0.0; 3]; 3];
    let h2: f64 = h[..dim].iter().map(|v| v * v).sum();
    for i in 0..dim {
        for j in i..dim {
            t[i][j] = mu * (h[i] * h[j]);
            t[j][i] = t[i][j];
        }
        t[i][i] -= 0.5 * mu * h2;
    }
    t
}

/// Newtonian stress `ν(2Du - (2/d) tr(Du) I) + λ tr(Du) I`.
pub fn viscous_stress(du: &Tensor, nu: f64, lambda: f64, dim: usize) -> Tensor {
    let tr: f64 = (0..dim).map(|i| du[i][i]).sum();
    let mut s = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            s[i][j] = 2.0 * nu * du[i][j];
        }
        s[i][i] += (lambda - 2.0 * nu / dim as f64) * tr;
    }
    s
}

/// Energy split into its three parts, each integrated over the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub kinetic: f64,
    pub internal: f64,
    pub magnetic: f64,
    pub total: f64,
}

impl EnergyValue {
    /// False when some face carried momentum without mass.
    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// Energy density `½|m|²/ρ + P(ρ) + ½μ|H|²` at a point; `∞` outside the admissible set.
pub fn energy_density(eos: &EosParams, rho: f64, m: &[f64], h: &[f64], mu: f64) -> f64 {
    let m2: f64 = m.iter().map(|v| v * v).sum();
    let h2: f64 = h.iter().map(|v| v * v).sum();
    let kinetic = if rho > 0.0 {
        0.5 * m2 / rho
    } else if rho == 0.0 && m2 == 0.0 {
        0.0
    } else {
        return f64::INFINITY;
    };
    kinetic + eos.pressure_unchecked(rho) / (eos.gamma - 1.0) + 0.5 * mu * h2
}

/// Total energy of a staggered state.
///
/// `P(ρ)` is integrated at cell centres; the kinetic and magnetic parts are
/// integrated component-wise at their own faces with `ρ` averaged onto the face.
pub fn total_energy(
    grid: &Grid,
    eos: &EosParams,
    rho: &CellField,
    momentum: &FaceField,
    magnetic: &FaceField,
    mu_face: &FaceField,
) -> EnergyValue {
    let vol = grid.cell_volume();
    let mut internal = 0.0;
    let mut admissible = true;
    for &r in rho.iter() {
        if r < 0.0 {
            admissible = false;
        } else {
            internal += eos.pressure_unchecked(r) / (eos.gamma - 1.0);
        }
    }
    let mut kinetic = 0.0;
    let mut mag = 0.0;
    for a in 0..grid.dim() {
        let m = momentum.comp(a);
        let h = magnetic.comp(a);
        let mu = mu_face.comp(a);
        for i in 0..grid.num_cells() {
            let rf = 0.5 * (rho[i] + rho[grid.shift(i, a, 1)]);
            if rf > 0.0 {
                kinetic += 0.5 * m[i] * m[i] / rf;
            } else if m[i] != 0.0 {
                admissible = false;
            }
            mag += 0.5 * mu[i] * h[i] * h[i];
        }
    }
    if !admissible {
        return EnergyValue {
            kinetic: f64::INFINITY,
            internal: internal * vol,
            magnetic: mag * vol,
            total: f64::INFINITY,
        };
    }
    let (kinetic, internal, magnetic) = (kinetic * vol, internal * vol, mag * vol);
    EnergyValue {
        kinetic,
        internal,
        magnetic,
        total: kinetic + internal + magnetic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eos(a: f64, g: f64) -> EosParams {
        EosParams { a, gamma: g }
    }

    #[test]
    fn pressure_values() {
        assert_eq!(eos(1.0, 2.0).pressure(2.0).unwrap(), 4.0);
        assert_eq!(eos(3.0, 1.7).pressure(0.0).unwrap(), 0.0);
        assert_eq!(eos(2.0, 1.4).pressure(1.0).unwrap(), 2.0);
        assert!(eos(1.0, 2.0).pressure(-1.0).is_err());
    }

    #[test]
    fn pressure_is_increasing() {
        let e = eos(1.0, 1.4);
        let mut prev = -1.0;
        for k in 0..100 {
            let p = e.pressure(0.1 * k as f64).unwrap();
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn gamma_bound_by_dimension() {
        assert!(EosParams::new(1.0, 0.9, 2).is_err());
        assert!(EosParams::new(1.0, 1.0, 2).is_err());
        assert!(EosParams::new(1.0, 1.4, 3).is_err());
        assert!(EosParams::new(1.0, 5.0 / 3.0, 3).is_ok());
        assert!(EosParams::new(0.0, 1.4, 2).is_err());
    }

    #[test]
    fn potential_values() {
        let e = eos(1.0, 2.0);
        assert_eq!(e.pressure_potential(2.0).unwrap(), 4.0);
        assert_eq!(e.pressure_potential(0.0).unwrap(), 0.0);
        assert!(eos(1.0, 1.0).pressure_potential(1.0).is_err());
    }

    fn fd_identity_residual(e: &EosParams, rho: f64) -> f64 {
        let d = 1e-5 * rho.max(1e-3);
        let dp = (e.pressure_potential(rho + d).unwrap() - e.pressure_potential(rho - d).unwrap()) / (2.0 * d);
        (dp * rho - e.pressure_potential(rho).unwrap() - e.pressure(rho).unwrap()).abs()
    }

    #[test]
    fn potential_identity_by_finite_differences() {
        let e = eos(1.0, 2.0);
        assert!(fd_identity_residual(&e, 2.0) < 1e-8);
        assert!(fd_identity_residual(&eos(1.0, 1.4), 1.7) < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let rho = rng.gen_range(1e-3..10.0);
            let e = eos(rng.gen_range(0.5..2.0), rng.gen_range(1.1..3.0));
            assert!(fd_identity_residual(&e, rho) < 1e-8 * (1.0 + e.pressure(rho).unwrap()));
        }
    }

    #[test]
    fn maxwell_examples() {
        let t = maxwell_tensor(&[1.0, 0.0], 1.0, 2);
        assert_eq!([t[0][0], t[0][1], t[1][0], t[1][1]], [0.5, 0.0, 0.0, -0.5]);
        let t = maxwell_tensor(&[1.0, 1.0], 2.0, 2);
        assert_eq!([t[0][0], t[0][1], t[1][0], t[1][1]], [0.0, 2.0, 2.0, 0.0]);
        let t = maxwell_tensor(&[0.0, 0.0, 0.0], 3.0, 3);
        assert!(t.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn maxwell_symmetry_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let h: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mu = rng.gen_range(0.1..5.0);
            for dim in [2, 3] {
                let t = maxwell_tensor(&h, mu, dim);
                for i in 0..3 {
                    for j in 0..3 {
                        assert_eq!(t[i][j], t[j][i]);
                    }
                }
                let tr: f64 = (0..dim).map(|i| t[i][i]).sum();
                let h2: f64 = h[..dim].iter().map(|v| v * v).sum();
                let expect = if dim == 2 { 0.0 } else { -0.5 * mu * h2 };
                assert!((tr - expect).abs() < 1e-12 * (1.0 + mu * h2));
            }
        }
    }

    #[test]
    fn viscous_examples() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]];
        let s = viscous_stress(&id, 1.0, 0.0, 2);
        assert!(s.iter().flatten().all(|&v| v == 0.0));
        let s = viscous_stress(&id, 0.0, 3.0, 2);
        assert_eq!([s[0][0], s[0][1], s[1][0], s[1][1]], [6.0, 0.0, 0.0, 6.0]);
        let shear = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3]];
        let s = viscous_stress(&shear, 1.0, 5.0, 2);
        assert_eq!([s[0][0], s[0][1], s[1][0], s[1][1]], [0.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn energy_density_is_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = eos(1.0, 1.4);
        for _ in 0..1000 {
            let mut draw = || {
                let rho: f64 = rng.gen_range(0.05..5.0);
                let m = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let h = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                (rho, m, h)
            };
            let (r1, m1, h1) = draw();
            let (r2, m2, h2) = draw();
            let mu = 1.3;
            let rm = 0.5 * (r1 + r2);
            let mm = [0.5 * (m1[0] + m2[0]), 0.5 * (m1[1] + m2[1])];
            let hm = [0.5 * (h1[0] + h2[0]), 0.5 * (h1[1] + h2[1])];
            let mid = energy_density(&e, rm, &mm, &hm, mu);
            let avg = 0.5 * (energy_density(&e, r1, &m1, &h1, mu) + energy_density(&e, r2, &m2, &h2, mu));
            assert!(mid <= avg + 1e-12 * avg.abs().max(1.0), "{mid} > {avg}");
        }
    }

    fn grid() -> Grid {
        Grid::new(2, 1.0, 16).unwrap()
    }

    #[test]
    fn energy_of_constant_density() {
        let g = grid();
        let e = eos(1.0, 2.0);
        let rho = CellField::constant(&g, 1.0);
        let zero = FaceField::zeros(&g);
        let mu = FaceField::from_fn(&g, |_, _| 1.0);
        let en = total_energy(&g, &e, &rho, &zero, &zero, &mu);
        assert!((en.internal - 4.0).abs() < 1e-12);
        assert_eq!(en.kinetic, 0.0);
        assert_eq!(en.magnetic, 0.0);
        assert!((en.total - (en.kinetic + en.internal + en.magnetic)).abs() <= 1e-12 * en.total);
    }

    #[test]
    fn energy_of_vacuum_with_field() {
        let g = grid();
        let e = eos(1.0, 1.4);
        let rho = CellField::zeros(&g);
        let m = FaceField::zeros(&g);
        let h = FaceField::from_fn(&g, |a, _| if a == 0 { 1.0 } else { 0.0 });
        let mu = FaceField::from_fn(&g, |_, _| 1.0);
        let en = total_energy(&g, &e, &rho, &m, &h, &mu);
        assert!((en.total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_with_momentum_is_flagged() {
        let g = grid();
        let e = eos(1.0, 1.4);
        let rho = CellField::zeros(&g);
        let mut m = FaceField::zeros(&g);
        m.comp_mut(1)[5] = 0.1;
        let mu = FaceField::from_fn(&g, |_, _| 1.0);
        let en = total_energy(&g, &e, &rho, &m, &FaceField::zeros(&g), &mu);
        assert!(!en.is_finite());
    }
}

//! Randomized operator identity suite behind `verify-operators`.

use crate::field::{CellField, CornerField, EdgeField, FaceField};
use crate::geometry::Grid;
use crate::operators::{curl2_scal, curl3_adjoint, div, gaffney_ratio, grad};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSuite {
    /// Random fields per identity and dimension.
    pub identity_fields: usize,
    pub gaffney_fields: usize,
    /// Largest wavenumber (per axis, in units of `π/L`) of the band-limited fields.
    pub band: usize,
    pub cells_2d: usize,
    pub cells_3d: usize,
    pub seed: u64,
}

impl Default for OperatorSuite {
    fn default() -> Self {
        Self {
            identity_fields: 100,
            gaffney_fields: 200,
            band: 4,
            cells_2d: 32,
            cells_3d: 12,
            seed: 20240601,
        }
    }
}

/// Worst cases over the sampled fields.
///
/// `div_curl` is `max|div curl ψ| · h² / max|ψ|`; `adjoint` is
/// `|⟨div v, p⟩ + ⟨v, grad p⟩| / (‖v‖ ‖grad p‖)`. Both vanish up to round-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorReport {
    pub div_curl_2d: f64,
    pub div_curl_3d: f64,
    pub adjoint_2d: f64,
    pub adjoint_3d: f64,
    pub gaffney_max: f64,
    pub gaffney_finite: bool,
}

impl OperatorReport {
    pub fn identity_max(&self) -> f64 {
        [self.div_curl_2d, self.div_curl_3d, self.adjoint_2d, self.adjoint_3d]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("div_curl_2d = {:e}", self.div_curl_2d),
            format!("div_curl_3d = {:e}", self.div_curl_3d),
            format!("adjoint_2d = {:e}", self.adjoint_2d),
            format!("adjoint_3d = {:e}", self.adjoint_3d),
            format!("gaffney_max = {}", self.gaffney_max),
            format!("gaffney_finite = {}", self.gaffney_finite),
        ]
    }
}

fn uniform(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn adjoint_defect(g: &Grid, rng: &mut ChaCha8Rng) -> f64 {
    let n = g.num_cells();
    let v = FaceField((0..g.dim()).map(|_| uniform(rng, n)).collect());
    let p = CellField(uniform(rng, n));
    let gp = grad(g, &p);
    let lhs = dot(&div(g, &v), &p);
    let rhs = v.dot(&gp);
    (lhs + rhs).abs() / (v.dot(&v).sqrt() * gp.dot(&gp).sqrt())
}

/// Sum of random Fourier modes `|k_x|, |k_y| ≤ band` per component.
pub fn band_limited(g: &Grid, band: usize, rng: &mut ChaCha8Rng) -> FaceField {
    let k0 = PI / g.half_len();
    let b = band as i64;
    let mut modes = Vec::new();
    for kx in -b..=b {
        for ky in 0..=b {
            if ky == 0 && kx < 0 {
                continue;
            }
            modes.push((kx as f64 * k0, ky as f64 * k0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    FaceField::from_fn(g, |a, x| {
        modes
            .iter()
            .map(|&(kx, ky, c0, s0, c1, s1)| {
                let (s, c) = (kx * x[0] + ky * x[1]).sin_cos();
                if a == 0 {
                    c0 * c + s0 * s
                } else {
                    c1 * c + s1 * s
                }
            })
            .sum()
    })
}

/// Runs every identity on `identity_fields` random inputs and the Gaffney
/// ratio on `gaffney_fields` band-limited fields.
pub fn operator_suite(suite: &OperatorSuite) -> Result<OperatorReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
    let g2 = Grid::new(2, 1.0, suite.cells_2d)?;
    let g3 = Grid::new(3, 1.0, suite.cells_3d)?;
    let mut r = OperatorReport {
        div_curl_2d: 0.0,
        div_curl_3d: 0.0,
        adjoint_2d: 0.0,
        adjoint_3d: 0.0,
        gaffney_max: 0.0,
        gaffney_finite: true,
    };
    for _ in 0..suite.identity_fields {
        let psi = CornerField(uniform(&mut rng, g2.num_cells()));
        let d = div(&g2, &curl2_scal(&g2, &psi));
        r.div_curl_2d = r.div_curl_2d.max(max_abs(&d) * g2.h() * g2.h() / max_abs(&psi));

        let e = EdgeField((0..3).map(|_| uniform(&mut rng, g3.num_cells())).collect());
        let d = div(&g3, &curl3_adjoint(&g3, &e));
        let emax = e.0.iter().map(|c| max_abs(c)).fold(0.0, f64::max);
        r.div_curl_3d = r.div_curl_3d.max(max_abs(&d) * g3.h() * g3.h() / emax);

        r.adjoint_2d = r.adjoint_2d.max(adjoint_defect(&g2, &mut rng));
        r.adjoint_3d = r.adjoint_3d.max(adjoint_defect(&g3, &mut rng));
    }
    for _ in 0..suite.gaffney_fields {
        let h = band_limited(&g2, suite.band, &mut rng);
        match gaffney_ratio(&g2, &h) {
            Some(q) if q.is_finite() => r.gaffney_max = r.gaffney_max.max(q),
            _ => r.gaffney_finite = false,
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_limited_field_matches_its_modes() {
        // One component of a band-limited field has no energy above the band.
        let g = Grid::new(2, 1.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = band_limited(&g, 2, &mut rng);
        let hx = h.comp(0);
        let n = 32;
        let k0 = PI;
        for kx in 0..n / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in hx.iter().enumerate() {
                let x = g.face_center(0, i);
                let (s, c) = (kx as f64 * k0 * x[0]).sin_cos();
                re += v * c;
                im += v * s;
            }
            if kx > 2 {
                assert!(re.abs() + im.abs() < 1e-9, "mode {kx}");
            }
        }
    }

    #[test]
    fn small_suite_is_clean() {
        let suite = OperatorSuite {
            identity_fields: 5,
            gaffney_fields: 5,
            ..OperatorSuite::default()
        };
        let r = operator_suite(&suite).unwrap();
        assert!(r.identity_max() < 1e-14, "{r:?}");
        assert!(r.gaffney_finite && r.gaffney_max > 0.0);
    }
}

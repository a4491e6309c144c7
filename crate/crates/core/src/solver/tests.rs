use super::*;
use crate::coefficients::ScenarioTag;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_config(tag: ScenarioTag, eps: f64, cells: usize) -> RunConfig {
    let mut cfg = RunConfig::new(tag, eps);
    cfg.cells = cells;
    cfg.transition_cells = 2.0;
    cfg.t_final = 0.05;
    cfg
}

fn solver(cfg: &RunConfig) -> Solver {
    let mut cfg = cfg.clone();
    cfg.validate().unwrap();
    let opts = SolverOptions {
        cg_tol: 1e-12,
        cg_maxit: 500,
        theta: cfg.resolved_theta(),
    };
    Solver::new(Setup::new(&cfg).unwrap(), opts).unwrap()
}

fn uniform_state(grid: &Grid, rho: f64, b: [f64; 2]) -> State {
    let mut s = State::zeros(grid);
    s.rho.iter_mut().for_each(|r| *r = rho);
    for a in 0..2 {
        s.b.comp_mut(a).iter_mut().for_each(|v| *v = b[a]);
    }
    s
}

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn assembled_viscous_matrix_matches_stencil() {
    let sv = solver(&small_config(ScenarioTag::Isolator, 0.01, 16));
    let n = sv.setup.grid.num_cells();
    let u = random(2 * n, 1);
    let mut free = vec![0.0; 2 * n];
    let mut sig = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let e = sv.viscous_apply(&u, &mut free, &mut sig, true);
    let cycle = sv.viscous_mg.cycle(&vec![1.0; 2 * n], 1.0).unwrap();
    let mut assembled = vec![0.0; 2 * n];
    cycle.apply(&u, &mut assembled);
    let scale = free.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
    for k in 0..2 * n {
        assert!((assembled[k] - u[k] - free[k]).abs() <= 1e-10 * scale);
    }
    // a(u, u) = uᵀ A u.
    let uau: f64 = u.iter().zip(&free).map(|(a, b)| a * b).sum();
    assert!((uau - e).abs() <= 1e-10 * e.abs());
}

#[test]
fn assembled_resistive_matrix_matches_stencil() {
    let sv = solver(&small_config(ScenarioTag::Pmc, 0.01, 16));
    let g = &sv.setup.grid;
    let n = g.num_cells();
    let ih = 1.0 / g.h();
    let mu = sv.setup.coeffs.mu_face();
    let nb = &sv.nb;
    let x = random(n, 2);
    let hx: Vec<f64> = (0..n).map(|i| (x[i] - x[nb.m[1][i]]) * ih / mu.comp(0)[i]).collect();
    let hy: Vec<f64> = (0..n).map(|i| -(x[i] - x[nb.m[0][i]]) * ih / mu.comp(1)[i]).collect();
    let cycle = sv.resistive_mg.cycle(&vec![1.0; n], 1.0).unwrap();
    let mut y = vec![0.0; n];
    cycle.apply(&x, &mut y);
    for k in 0..n {
        let ck = (hy[nb.p[0][k]] - hy[k] - hx[nb.p[1][k]] + hx[k]) * ih;
        assert!((y[k] - x[k] - ck).abs() <= 1e-9 * ck.abs().max(1.0));
    }
}

#[test]
fn magnetostatic_rest_state_is_steady() {
    // Uniform H projected onto div(μH) = 0 is curl-free, so nothing moves.
    for tag in [ScenarioTag::Pec, ScenarioTag::Isolator, ScenarioTag::Pmc, ScenarioTag::None] {
        let mut sv = solver(&small_config(tag, 0.1, 16));
        let g = sv.setup.grid.clone();
        let mu = sv.setup.coeffs.mu_face().clone();
        let h0 = uniform_state(&g, 1.0, [0.4, -0.2]).b;
        let h = project_div_mu_h(&g, &h0, &mu, 1e-14, 5000).unwrap();
        let mut s0 = uniform_state(&g, 1.3, [0.0, 0.0]);
        for a in 0..2 {
            for (i, v) in s0.b.comp_mut(a).iter_mut().enumerate() {
                *v = mu.comp(a)[i] * h.comp(a)[i];
            }
        }
        let mut s = s0.clone();
        let d = sv.step(&mut s, 1e-3, None).unwrap();
        assert!(d.total() < 1e-20, "{tag:?}: {d:?}");
        for (a, b) in s.rho.iter().zip(s0.rho.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for a in 0..2 {
            assert!(s.m.comp(a).iter().all(|v| v.abs() < 1e-10), "{tag:?}");
            for (x, y) in s.b.comp(a).iter().zip(s0.b.comp(a)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!((s.t - 1e-3).abs() < 1e-18);
    }
}

#[test]
fn friction_matches_theta_formula() {
    let mut cfg = small_config(ScenarioTag::Pec, 0.01, 16);
    for theta in [0.5, 0.75, 1.0] {
        cfg.theta = Some(theta);
        let sv = solver(&cfg);
        let g = sv.setup.grid.clone();
        let mut s = uniform_state(&g, 2.0, [0.0, 0.0]);
        s.m.comp_mut(0).iter_mut().for_each(|v| *v = 0.6);
        let before = s.m.clone();
        let dt = 0.02;
        let d = sv.friction(&mut s, dt);
        let beta = sv.setup.coeffs.beta_face();
        let mut expect_d = 0.0;
        for i in 0..g.num_cells() {
            let k = dt * beta.comp(0)[i] / 2.0;
            let m = 0.6 * (1.0 - (1.0 - theta) * k) / (1.0 + theta * k);
            assert!((s.m.comp(0)[i] - m).abs() < 1e-15);
            let u = (theta * m + (1.0 - theta) * before.comp(0)[i]) / 2.0;
            expect_d += dt * beta.comp(0)[i] * u * u * g.cell_volume();
        }
        assert!((d - expect_d).abs() <= 1e-12 * expect_d);
        // Fluid faces untouched, solid faces damped.
        let solid = beta.comp(0).iter().position(|b| *b > 50.0).unwrap();
        let fluid = beta.comp(0).iter().position(|b| *b == 0.0).unwrap();
        assert_eq!(s.m.comp(0)[fluid], 0.6);
        assert!(s.m.comp(0)[solid].abs() < 0.6);
    }
}

#[test]
fn cfl_dt_from_sound_speed() {
    let cfg = small_config(ScenarioTag::None, 1.0, 16);
    let sv = solver(&cfg);
    let g = &sv.setup.grid;
    let s = uniform_state(g, 2.0, [0.0, 0.0]);
    let c = (cfg.eos.a * cfg.eos.gamma * 2.0f64.powf(cfg.eos.gamma - 1.0)).sqrt();
    let dt = sv.cfl_dt(&s, 0.4, 1e-9, 1.0);
    assert!((dt - 0.4 * g.h() / c).abs() < 1e-15);
    // Flow and Alfvén speeds add to the sound speed (μ = 1 here).
    let mut s2 = uniform_state(g, 2.0, [0.0, 0.6]);
    s2.m.comp_mut(0).iter_mut().for_each(|v| *v = 2.0 * 0.3);
    let ca = (0.36f64 / 2.0).sqrt();
    let dt2 = sv.cfl_dt(&s2, 0.4, 1e-9, 1.0);
    assert!((dt2 - 0.4 * g.h() / (0.3 + c + ca)).abs() < 1e-15);
    assert_eq!(sv.cfl_dt(&s, 0.4, 1e-9, 1e-4), 1e-4);
}

#[test]
fn step_rejects_bad_dt_and_3d() {
    let mut sv = solver(&small_config(ScenarioTag::Pec, 0.1, 16));
    let mut s = uniform_state(&sv.setup.grid, 1.0, [0.0, 0.0]);
    assert!(matches!(sv.step(&mut s, 0.0, None), Err(Error::InvalidArgument(_))));
    let mut cfg = small_config(ScenarioTag::Pec, 0.1, 16);
    cfg.dim = 3;
    cfg.eos = EosParams::default_for(3);
    let err = Simulation::new(&cfg).err();
    assert!(matches!(err, Some(Error::Unsupported(_))), "{err:?}");
}

#[test]
fn negative_density_is_reported() {
    let mut sv = solver(&small_config(ScenarioTag::None, 1.0, 16));
    let g = sv.setup.grid.clone();
    let mut s = uniform_state(&g, 1.0, [0.0, 0.0]);
    s.rho[5] = 1e-6;
    // A strong outflow from the nearly empty cell.
    s.m.comp_mut(0)[5] = 5.0;
    s.m.comp_mut(0)[g.shift(5, 0, -1)] = -5.0;
    assert!(matches!(sv.step(&mut s, 0.05, None), Err(Error::NegativeDensity { .. })));
}

fn perturbed(sv: &Solver, seed: u64, amp: f64) -> State {
    let g = &sv.setup.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = uniform_state(g, 1.0, [0.3, 0.1]);
    let phases: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let k = std::f64::consts::PI / g.half_len();
    for i in 0..g.num_cells() {
        let x = g.cell_center(i);
        s.rho[i] += 0.3 * amp * (k * x[0] + phases[0]).sin() * (k * x[1] + phases[1]).cos();
        s.m.comp_mut(0)[i] = amp * (k * x[1] + phases[2]).sin();
        s.m.comp_mut(1)[i] = amp * (k * x[0] + phases[3]).cos();
    }
    // Divergence-free magnetic perturbation from a corner potential.
    let psi: Vec<f64> = (0..g.num_cells())
        .map(|i| {
            let x = g.cell_center(i);
            amp * (k * x[0] + phases[4]).sin() * (k * x[1] + phases[5]).sin()
        })
        .collect();
    let mut b = State::zeros(g);
    explicit::add_curl(&mut b, &psi, &sv.nb, 1.0 / g.h());
    for a in 0..2 {
        for (v, d) in s.b.comp_mut(a).iter_mut().zip(b.b.comp(a)) {
            *v += d;
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn steps_conserve_mass_and_div_b(
        seed in 0u64..1000,
        amp in 0.05f64..0.5,
        tag_ix in 0usize..5,
        eps in 0.01f64..1.0,
    ) {
        let tags = [ScenarioTag::None, ScenarioTag::Isolator, ScenarioTag::Pmc, ScenarioTag::Pec, ScenarioTag::IsolatorType];
        let mut sv = solver(&small_config(tags[tag_ix], eps, 16));
        let g = sv.setup.grid.clone();
        let mut s = perturbed(&sv, seed, amp);
        let m0 = s.mass(&g);
        let div0 = div(&g, &s.b).norm_l2(&g);
        for _ in 0..3 {
            let dt = sv.cfl_dt(&s, 0.4, 1e-9, 0.05);
            let d = sv.step(&mut s, dt, None).unwrap();
            prop_assert!(d.viscous >= 0.0 && d.resistive >= 0.0 && d.friction >= 0.0);
        }
        prop_assert!((s.mass(&g) - m0).abs() <= 1e-13 * m0);
        let div1 = div(&g, &s.b).norm_l2(&g);
        prop_assert!(div0 < 1e-12 && div1 < 1e-12, "div B {div0:e} -> {div1:e}");
        prop_assert!(s.rho.iter().all(|r| *r > 0.0));
    }
}

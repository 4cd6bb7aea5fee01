use approx::assert_abs_diff_eq;
use dephasing_channel::RateMatrix;
use ftqec_linalg::{c, max_abs, CMat, RMat};
use lindblad_engine::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn random_rates(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> RateMatrix {
    let g = RMat::from_fn(n, n, |_, _| rng.random_range(0.0..scale));
    RateMatrix::from_matrix(g).unwrap()
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()) * c(scale / 2.0, 0.0)
}

/// Dense Liouvillian exponential, column-stacked vec(ρ).
fn exact(rho: &CMat, h: &CMat, g: &RateMatrix, t: f64) -> CMat {
    let n = rho.nrows();
    let id = CMat::identity(n, n);
    // vec(HX) = (I⊗H)vec X, vec(XH) = (Hᵀ⊗I)vec X
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * c(0.0, -1.0);
    for j in 0..n {
        for i in 0..n {
            l[(j * n + i, j * n + i)] -= c(g.gamma[(i, j)], 0.0);
        }
    }
    let prop = (l * c(t, 0.0)).exp();
    let v = CMat::from_column_slice(n * n, 1, rho.as_slice());
    let out = prop * v;
    CMat::from_column_slice(n, n, out.as_slice())
}

#[test]
fn no_drive_no_noise_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rho = random_state(&mut rng, 5);
    let seg = EvolutionSegment::new(CMat::zeros(5, 5), 1e-6, RateMatrix::zeros(5)).unwrap();
    let out = evolve_segment(&rho, &seg, &IntegratorConfig::default()).unwrap();
    assert!(max_abs(&(out - rho)) < 1e-15);
}

#[test]
fn pure_dephasing_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho = random_state(&mut rng, 6);
    let g = random_rates(&mut rng, 6, 1e6);
    let seg = EvolutionSegment::new(CMat::zeros(6, 6), 2e-6, g.clone()).unwrap();
    let out = evolve_segment(&rho, &seg, &IntegratorConfig::default()).unwrap();
    let closed = free_decay(&rho, &g, 2e-6).unwrap();
    assert!(max_abs(&(out - closed)) < 1e-8);
}

#[test]
fn pi_pulse_swaps_populations() {
    let mut h = CMat::zeros(3, 3);
    // (π/2)σ_x on levels 0, 2 → exp(−iH̃) is a full swap
    h[(0, 2)] = c(std::f64::consts::PI / 2.0, 0.0);
    h[(2, 0)] = c(std::f64::consts::PI / 2.0, 0.0);
    let tau = 50e-9;
    let seg = EvolutionSegment::from_generator(&h, tau, RateMatrix::zeros(3)).unwrap();
    let mut rho = CMat::zeros(3, 3);
    rho[(0, 0)] = c(1.0, 0.0);
    let out = evolve_segment(&rho, &seg, &IntegratorConfig::default()).unwrap();
    let u = ftqec_linalg::expm_herm(&h, 1.0);
    let want = &u * &rho * u.adjoint();
    let fid = (&want * &out).trace().re;
    assert!(fid > 1.0 - 1e-8, "{fid}");
    assert_abs_diff_eq!(out[(2, 2)].re, 1.0, epsilon = 1e-8);
}

#[test]
fn noiseless_segments_are_unitary_to_round_off() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = random_hermitian(&mut rng, 6, 3.0);
    let rho = random_state(&mut rng, 6);
    let seg = EvolutionSegment::from_generator(&h, 70e-9, RateMatrix::zeros(6)).unwrap();
    let out = evolve_segment(&rho, &seg, &IntegratorConfig::default()).unwrap();
    assert!(max_abs(&(&out - exact(&rho, &h, &RateMatrix::zeros(6), 1.0))) < 1e-12);

    let x = CMat::from_fn(3, 4, |i, j| c(i as f64, j as f64));
    let (ha, hb) = (random_hermitian(&mut rng, 3, 1e7), random_hermitian(&mut rng, 4, 1e7));
    let out = evolve_block(&x, &ha, &hb, &RMat::zeros(3, 4), 1e-7, &IntegratorConfig::default()).unwrap();
    let want = ftqec_linalg::expm_herm(&ha, 1e-7) * &x * ftqec_linalg::expm_herm(&hb, 1e-7).adjoint();
    assert!(max_abs(&(out - want)) < 1e-12);
}

#[test]
fn matches_dense_exponential_with_drive_and_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_state(&mut rng, 6);
    let h = random_hermitian(&mut rng, 6, 3e7);
    let g = random_rates(&mut rng, 6, 2e6);
    let t = 1e-7;
    let seg = EvolutionSegment::new(h.clone(), t, g.clone()).unwrap();
    let out = evolve_segment(&rho, &seg, &IntegratorConfig::default()).unwrap();
    let e = max_abs(&(out - exact(&rho, &h, &g, t)));
    assert!(e < 1e-8, "{e}");
}

#[test]
fn rk4_is_fourth_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rho = random_state(&mut rng, 8);
    let h = random_hermitian(&mut rng, 8, 1.0);
    let g = random_rates(&mut rng, 8, 0.3);
    let t = 2.0;
    let oracle = exact(&rho, &h, &g, t);
    let err = |n| max_abs(&(evolve_block_steps(&rho, &h, &h, &g.gamma, t, n) - &oracle));
    let (e1, e2) = (err(20), err(40));
    let ratio = e1 / e2;
    assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn integration_error_scales_with_dephasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let rho = random_state(&mut rng, 6);
    let h = random_hermitian(&mut rng, 6, 1.0);
    let g = random_rates(&mut rng, 6, 1.0);
    let t = 3.0;
    let err = |scale: f64| {
        let gs = g.scaled(scale);
        max_abs(&(evolve_block_steps(&rho, &h, &h, &gs.gamma, t, 30) - exact(&rho, &h, &gs, t)))
    };
    let (e1, e2, e3) = (err(1e-2), err(1e-3), err(1e-4));
    assert!(e1 < 1e-8, "{e1:e}");
    assert!((5.0..20.0).contains(&(e1 / e2)) && (5.0..20.0).contains(&(e2 / e3)), "{e1:e} {e2:e} {e3:e}");
    assert!(err(0.0) < 1e-13);
}

#[test]
fn commuting_drive_has_no_effect() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // ρ diagonal and H diagonal commute; dephasing leaves diagonals fixed
    let rho = CMat::from_diagonal(&nalgebra::DVector::from_fn(5, |i, _| c((i + 1) as f64 / 15.0, 0.0)));
    let h = CMat::from_diagonal(&nalgebra::DVector::from_fn(5, |i, _| c(1e7 * i as f64, 0.0)));
    let g = random_rates(&mut rng, 5, 1e6);
    let seg = EvolutionSegment::new(h, 3e-7, g.clone()).unwrap();
    let out = evolve_segment(&rho, &seg, &IntegratorConfig::default()).unwrap();
    assert!(max_abs(&(out - free_decay(&rho, &g, 3e-7).unwrap())) < 1e-12);
}

#[test]
fn block_evolution_matches_full_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // block-diagonal drive H = H_a ⊕ H_b on 3 + 2 levels
    let (ha, hb) = (random_hermitian(&mut rng, 3, 2e7), random_hermitian(&mut rng, 2, 2e7));
    let mut h = CMat::zeros(5, 5);
    h.view_mut((0, 0), (3, 3)).copy_from(&ha);
    h.view_mut((3, 3), (2, 2)).copy_from(&hb);
    let rho = random_state(&mut rng, 5);
    let g = random_rates(&mut rng, 5, 1e6);
    let t = 2e-7;
    let cfg = IntegratorConfig::default();
    let full = exact(&rho, &h, &g, t);
    let x = rho.view((0, 3), (3, 2)).into_owned();
    let gx = g.gamma.view((0, 3), (3, 2)).into_owned();
    let block = evolve_block(&x, &ha, &hb, &gx, t, &cfg).unwrap();
    assert!(max_abs(&(block - full.view((0, 3), (3, 2)))) < 1e-8);
}

#[test]
fn product_rates_add() {
    let ga = RateMatrix::two_level(3.0);
    let gb = uniform_rates(3, 0.5);
    let g = product_rates(&ga, &gb);
    assert_eq!(g.dim(), 6);
    assert_eq!(g.gamma[(0, 0)], 0.0);
    assert_eq!(g.gamma[(0, 1)], 2.0);
    assert_eq!(g.gamma[(0, 3)], 3.0);
    assert_eq!(g.gamma[(0, 4)], 5.0);
}

#[test]
fn errors_are_reported() {
    let cfg = IntegratorConfig { n_max: 10, ..Default::default() };
    let mut h = CMat::zeros(2, 2);
    h[(0, 1)] = c(1e9, 0.0);
    h[(1, 0)] = c(1e9, 0.0);
    let seg = EvolutionSegment::new(h, 1e-6, RateMatrix::two_level(1.0)).unwrap();
    assert!(matches!(evolve_segment(&(CMat::identity(2, 2) * c(0.5, 0.0)), &seg, &cfg), Err(LindbladError::TooManySteps { .. })));
    assert!(matches!(EvolutionSegment::new(CMat::zeros(2, 2), -1.0, RateMatrix::zeros(2)), Err(LindbladError::NegativeDuration(_))));
    assert!(matches!(EvolutionSegment::new(CMat::zeros(3, 3), 1.0, RateMatrix::zeros(2)), Err(LindbladError::Dimension(_))));
    assert!(free_decay(&CMat::zeros(2, 2), &RateMatrix::zeros(2), -1.0).is_err());
}

#[test]
fn config_json_round_trip() {
    let json = r#"{"dt_cap":0.05,"n_max":2000000,"tolerances":{"trace_drift":1e-9,"positivity":1e-8}}"#;
    let cfg: IntegratorConfig = serde_json::from_str(json).unwrap();
    assert_eq!(cfg, IntegratorConfig::default());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn output_is_a_valid_density_matrix(seed in 0u64..1_000_000, n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(&mut rng, n);
        let h = random_hermitian(&mut rng, n, 5e7);
        let g = random_rates(&mut rng, n, 5e6);
        let seg = EvolutionSegment::new(h, 2e-7, g).unwrap();
        let cfg = IntegratorConfig::default();
        let out = evolve_segment(&rho, &seg, &cfg).unwrap();
        prop_assert!(ftqec_linalg::hermiticity_residual(&out) < 1e-12);
        prop_assert!((out.trace().re - 1.0).abs() < 1e-9);
        prop_assert!(check_density(&out, &cfg).is_ok());
    }
}

mod common;

use approx::assert_abs_diff_eq;
use et_compiler::*;
use ftqec_linalg::{c, max_abs, CMat, CVec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

#[test]
fn embed_identity_and_z() {
    let b = common::ni7_basis(4);
    let v = embed_logical(&identity(2), &b).unwrap();
    assert!(max_abs(&(v - identity(4))) < 1e-12);

    let v = embed_logical(&pauli_z(), &b).unwrap();
    for k in 0..2 {
        assert!((&v * b.word(0, k) - b.word(0, k)).norm() < 1e-12);
        assert!((&v * b.word(1, k) + b.word(1, k)).norm() < 1e-12);
    }
    // d = 4 has no complement, so V is diagonal ±1 in the eigenbasis
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert!(v[(i, j)].norm() < 1e-12);
            }
        }
        assert_abs_diff_eq!(v[(i, i)].norm(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn embed_rotation_acts_as_g_tensor_identity() {
    let b = common::ni7_basis(4);
    let g = planar_rotation(PI / 2.0, PI);
    let v = embed_logical(&g, &b).unwrap();
    assert!(et_block_residual(&v, &g, &b) < 1e-12);
    assert!(ftqec_linalg::unitarity_residual(&v) < 1e-12);
    let bad = CMat::from_element(2, 2, c(1.0, 0.0));
    assert!(matches!(embed_logical(&bad, &b), Err(CompileError::NotUnitary(_))));
}

#[test]
fn embed_is_identity_on_the_complement() {
    let b = common::ni7_basis(8);
    let b6 = {
        // build a basis with K = 2 on d = 8 by truncating columns
        let mut v = CMat::zeros(8, 4);
        for l in 0..2 {
            for k in 0..2 {
                v.set_column(l * 2 + k, &b.word(l, k));
            }
        }
        code_synthesis::ErrorBasis { d: 8, k: 2, vectors: v }
    };
    let v = embed_logical(&planar_rotation(1.1, 0.3), &b6).unwrap();
    for l in 0..2 {
        for k in 2..4 {
            let w = b.word(l, k);
            assert!((&v * &w - &w).norm() < 1e-12);
        }
    }
}

#[test]
fn cu_mapping_and_zero_diagonal() {
    let b = common::ni7_basis(6);
    let kk = b.k;
    let v = cu_unitary(&b, kk).unwrap();
    assert!(ftqec_linalg::unitarity_residual(&v) < 1e-12);
    let anc = |w: &CVec, j: usize| {
        let mut e = CVec::zeros(kk);
        e[j] = c(1.0, 0.0);
        w.kronecker(&e)
    };
    for l in 0..2 {
        let w0 = b.word(l, 0);
        assert!((&v * anc(&w0, 0) - anc(&w0, 0)).norm() < 1e-12);
        for k in 1..kk {
            let w = b.word(l, k);
            assert!((&v * anc(&w, 0) - anc(&w, k)).norm() < 1e-12);
            assert!((&v * anc(&w, k) + anc(&w, 0)).norm() < 1e-12);
            assert!((&v * &v * anc(&w, 0) + anc(&w, 0)).norm() < 1e-12);
        }
    }
    let h = generator_of(&v).unwrap();
    assert!(h.max_diagonal() < 1e-9);
    let explicit = cu_generator(&b);
    assert!(explicit.max_diagonal() < 1e-15);
    assert!(max_abs(&(explicit.unitary() - &v)) < 1e-12);
    assert!(cu_unitary(&b, kk + 1).is_err());
}

#[test]
fn recovery_mapping_and_block_form() {
    let b = common::ni7_basis(6);
    let (id, flagged) = recovery_unitary(&b, 0).unwrap();
    assert!(flagged);
    assert_eq!(id, identity(6));
    for k in 1..b.k {
        let (v, flagged) = recovery_unitary(&b, k).unwrap();
        assert!(!flagged);
        for l in 0..2 {
            assert!((&v * b.word(l, k) - b.word(l, 0)).norm() < 1e-12);
            assert!((&v * b.word(l, 0) + b.word(l, k)).norm() < 1e-12);
        }
        // I₂ ⊗ R_k: no ℓ = 0 ↔ ℓ = 1 block
        let rep = in_error_basis(&v, &b);
        for i in 0..b.k {
            for j in 0..b.k {
                assert!(rep[(i, b.k + j)].norm() < 1e-13);
                assert!(rep[(b.k + i, j)].norm() < 1e-13);
            }
        }
        // support preservation: logical ℓ = 0 stays on S₀
        let out = &v * b.word(0, k);
        assert!((0..6).map(|i| out[i].norm_sqr()).sum::<f64>() > 1.0 - 1e-12);
        let g = recovery_generator(&b, k).unwrap();
        assert!(g.max_diagonal() < 1e-15);
        assert!(max_abs(&(g.unitary() - v)) < 1e-12);
    }
    assert!(matches!(recovery_unitary(&b, b.k), Err(CompileError::BadSyndrome { .. })));
}

#[test]
fn generator_of_examples() {
    let h = generator_of(&identity(3)).unwrap();
    assert!(max_abs(&h.h_tilde) < 1e-14);

    let z = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]));
    let h = generator_of(&z).unwrap();
    assert!(max_abs(&(h.h_tilde - CMat::from_diagonal(&CVec::from_vec(vec![c(0.0, 0.0), c(PI, 0.0)])))) < 1e-12);

    let b = common::ni7_basis(4);
    let v = embed_logical(&planar_rotation(2.0 * PI, 0.0), &b).unwrap();
    let h = generator_of(&v).unwrap();
    assert!(ftqec_linalg::frob(&(h.unitary() - v)) < 1e-9);

    let bad = CMat::from_element(2, 2, c(1.0, 0.0));
    assert!(matches!(generator_of(&bad), Err(CompileError::NotUnitary(_))));
}

#[test]
fn planar_generator_matches_log_and_has_zero_diagonal() {
    for d in [4, 6, 8] {
        let b = common::ni7_basis(d);
        for (theta, phi) in [(PI / 4.0, PI), (PI / 2.0, PI), (PI / 2.0, -PI / 2.0), (PI / 2.0, -PI / 4.0), (PI / 2.0, -PI / 8.0)] {
            let h = planar_generator(theta, phi, &b).unwrap();
            assert!(h.max_diagonal() < 1e-9);
            let g = planar_rotation(theta, phi);
            assert!(et_block_residual(&h.unitary(), &g, &b) < 1e-9);
            let v = embed_logical(&g, &b).unwrap();
            let from_log = generator_of(&v).unwrap();
            assert!(max_abs(&(from_log.h_tilde - &h.h_tilde)) < 1e-9);
        }
    }
    let b = common::ni7_basis(4);
    assert!(matches!(planar_generator(4.0 * PI, 0.0, &b), Err(CompileError::BadAngle(_))));
}

#[test]
fn universality_spot_check() {
    let b = common::ni7_basis(6);
    let seq = [(PI / 2.0, 0.0), (PI / 2.0, PI / 2.0), (PI / 2.0, 0.0)];
    let mut u = identity(6);
    let mut g = identity(2);
    for (t, p) in seq {
        u = planar_generator(t, p, &b).unwrap().unitary() * u;
        g = planar_rotation(t, p) * g;
    }
    let direct = embed_logical(&g, &b).unwrap();
    assert!(unitary_overlap(&u, &direct) > 1.0 - 1e-9);
}

#[test]
fn schedule_examples() {
    let zero = GeneratorMatrix::new(CMat::zeros(4, 4)).unwrap();
    let s = schedule_pulses(&zero, &[0.0, 1.0, 2.0, 3.0], 1e8, ScheduleOptions::default()).unwrap();
    assert!(s.pulses.is_empty());
    assert_eq!(s.duration, 0.0);

    let mut h = CMat::zeros(2, 2);
    h[(0, 1)] = c(0.0, PI / 4.0);
    h[(1, 0)] = c(0.0, -PI / 4.0);
    let s = schedule_pulses(&GeneratorMatrix::new(h).unwrap(), &[0.0, 1.5], 1e8, ScheduleOptions::default()).unwrap();
    assert_eq!(s.pulses.len(), 1);
    assert_abs_diff_eq!(s.pulses[0].area, PI / 2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(s.pulses[0].phase, PI / 2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(s.pulses[0].omega, 2.0 * PI * 1.5e9, epsilon = 1e-3);
    assert_abs_diff_eq!(s.duration, PI / 2.0 / 1e8, epsilon = 1e-20);

    // d = 4 rotation on a code with unequal amplitudes: every S₀ state is
    // coupled to every S₁ state
    let generic = d4_basis(0.3, 0.7);
    let h = planar_generator(PI / 2.0, PI, &generic).unwrap();
    let s = schedule_pulses(&h, &[0.0, 0.4, 1.1, 1.9], 1e8, ScheduleOptions::default()).unwrap();
    assert_eq!(s.pulses.len(), 4);
    for p in &s.pulses {
        assert!([0, 1].contains(&p.pair.0) && [2, 3].contains(&p.pair.1));
    }

    // the Ni₇ d = 4 code: four pulses, each joining S₀ to S₁
    let b = common::ni7_basis(4);
    let spectrum = common::spectrum();
    let h = planar_generator(PI / 2.0, PI, &b).unwrap();
    let s = schedule_pulses(&h, &spectrum.energies(4), 1e8, ScheduleOptions::default()).unwrap();
    assert_eq!(s.pulses.len(), 4);
    let s0: Vec<usize> = (0..4).filter(|&i| b.word(0, 0)[i].norm() > 1e-12 || b.word(0, 1)[i].norm() > 1e-12).collect();
    for p in &s.pulses {
        assert!(s0.contains(&p.pair.0) != s0.contains(&p.pair.1));
        assert!(p.area >= 0.0 && p.phase > -PI && p.phase <= PI);
    }
    assert!(s.report.min_gap_difference.is_some());

    let json = serde_json::to_string(&s).unwrap();
    let back: PulseSchedule = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s);

    assert!(matches!(schedule_pulses(&h, &spectrum.energies(4), 0.0, ScheduleOptions::default()), Err(CompileError::BadRabi(_))));
    let diag = GeneratorMatrix::new(identity(4)).unwrap();
    assert!(matches!(schedule_pulses(&diag, &spectrum.energies(4), 1.0, ScheduleOptions::default()), Err(CompileError::NonzeroDiagonal(_))));
}

/// K = 2 error basis on S₀ = {0,1}, S₁ = {2,3} with rotation angles `a0`, `a1`.
fn d4_basis(a0: f64, a1: f64) -> code_synthesis::ErrorBasis {
    let mut v = CMat::zeros(4, 4);
    for (l, a) in [(0, a0), (1, a1)] {
        let (i, j) = (2 * l, 2 * l + 1);
        v[(i, 2 * l)] = c(a.cos(), 0.0);
        v[(j, 2 * l)] = c(a.sin(), 0.0);
        v[(i, 2 * l + 1)] = c(a.sin(), 0.0);
        v[(j, 2 * l + 1)] = c(-a.cos(), 0.0);
    }
    code_synthesis::ErrorBasis { d: 4, k: 2, vectors: v }
}

#[test]
fn crowded_transitions_are_reported() {
    let mut h = CMat::zeros(3, 3);
    h[(0, 1)] = c(0.3, 0.0);
    h[(1, 0)] = c(0.3, 0.0);
    h[(1, 2)] = c(0.3, 0.0);
    h[(2, 1)] = c(0.3, 0.0);
    let g = GeneratorMatrix::new(h).unwrap();
    // equally spaced ladder: both transitions at 1 GHz
    let s = schedule_pulses(&g, &[0.0, 1.0, 2.0], 1e8, ScheduleOptions::default()).unwrap();
    assert!(!s.report.ok());
    let s = schedule_pulses(&g, &[0.0, 1.0, 2.5], 1e8, ScheduleOptions::default()).unwrap();
    assert!(s.report.ok());
}

#[test]
fn rabi_calibration_sets_duration() {
    let b = common::ni7_basis(4);
    let h = planar_generator(PI / 2.0, PI, &b).unwrap();
    let omega = calibrate_rabi(&h, 90e-9).unwrap();
    assert_abs_diff_eq!(h.duration(omega), 90e-9, epsilon = 1e-20);
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let h = (&a + a.adjoint()) * c(rng.random_range(0.5..3.0), 0.0);
    ftqec_linalg::expm_herm(&h, 1.0)
}

#[test]
fn random_unitaries_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..200 {
        let n = 2 + i % 11;
        let v = random_unitary(&mut rng, n);
        let h = generator_of(&v).unwrap();
        assert!(ftqec_linalg::hermiticity_residual(&h.h_tilde) < 1e-12);
        assert!(ftqec_linalg::frob(&(h.unitary() - &v)) < 1e-9);
        let (w, _) = ftqec_linalg::eigh(&h.h_tilde);
        assert!(w.iter().all(|&x| x > -PI - 1e-9 && x <= PI + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn compiled_planar_gates_are_error_transparent(theta in 0.0..(4.0 * PI - 1e-6), phi in -PI..PI) {
        let b = common::ni7_basis(6);
        let h = planar_generator(theta, phi, &b).unwrap();
        prop_assert!(h.max_diagonal() < 1e-9);
        prop_assert!(et_block_residual(&h.unitary(), &planar_rotation(theta, phi), &b) < 1e-9);
    }

    #[test]
    fn rotation_composition_adds_angles(t1 in 0.0..PI, t2 in 0.0..PI, phi in -PI..PI) {
        let a = planar_rotation(t1, phi) * planar_rotation(t2, phi);
        prop_assert!(max_abs(&(a - planar_rotation(t1 + t2, phi))) < 1e-12);
    }
}

mod common;

use approx::assert_abs_diff_eq;
use code_synthesis::*;
use dephasing_channel::*;
use ftqec_linalg::c;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kraus_from(ops: Vec<Vec<f64>>) -> KrausSet {
    let weights = ops.iter().map(|o| o.iter().map(|x| x * x).sum()).collect();
    KrausSet { ops: ops.into_iter().map(DVector::from_vec).collect(), weights, t_snapshot: 1.0 }
}

/// Exhaustive mesh over p⁰ = (x, 1−x), p¹ = (y, 1−y) for every d=4 partition.
fn mesh_oracle(kraus: &KrausSet, k: usize, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    let mut best = f64::INFINITY;
    for (s0, s1) in partitions(4) {
        for ix in 0..=n {
            for iy in 0..=n {
                let (x, y) = (ix as f64 * step, iy as f64 * step);
                let cw = CodeWords {
                    d: 4,
                    k,
                    support0: s0.clone(),
                    support1: s1.clone(),
                    amp0: vec![x.sqrt(), (1.0 - x).sqrt()],
                    amp1: vec![y.sqrt(), (1.0 - y).sqrt()],
                    kl_residual: 0.0,
                };
                best = best.min(kl_residual(&cw, kraus, k));
            }
        }
    }
    best
}

/// Exact oracle for d=4, K=2: per partition, the KL rows are linear in
/// (x, y); solve the 2-unknown least-squares problem in closed form and
/// keep feasible solutions.
fn analytic_oracle(kraus: &KrausSet) -> f64 {
    let mut best = f64::INFINITY;
    for (s0, s1) in partitions(4) {
        // residual rows r(x,y) = a x + b y + c
        let mut rows = vec![];
        for a in 0..2 {
            for b in a..2 {
                let m = kraus.ops[a].component_mul(&kraus.ops[b]);
                let (m0, m1, n0, n1) = (m[s0[0]], m[s0[1]], m[s1[0]], m[s1[1]]);
                // x m0 + (1−x) m1 − y n0 − (1−y) n1
                rows.push((m0 - m1, -(n0 - n1), m1 - n1));
            }
        }
        let (mut saa, mut sab, mut sbb, mut sac, mut sbc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(a, b, cc) in &rows {
            saa += a * a;
            sab += a * b;
            sbb += b * b;
            sac += a * cc;
            sbc += b * cc;
        }
        let det = saa * sbb - sab * sab;
        let candidates: Vec<(f64, f64)> = if det.abs() > 1e-300 {
            vec![((-sac * sbb + sbc * sab) / det, (-sbc * saa + sac * sab) / det)]
        } else {
            vec![]
        };
        for (x, y) in candidates {
            if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
                let r = rows.iter().map(|&(a, b, cc)| (a * x + b * y + cc).abs()).fold(0.0, f64::max);
                best = best.min(r);
            }
        }
    }
    best
}

#[test]
fn identity_channel_any_split_works() {
    let k = kraus_decompose(&RateMatrix::zeros(4), 1e-7, DEFAULT_KRAUS_CUTOFF).unwrap();
    let cw = solve_codewords(&k, 1, 4, SynthesisOptions::default()).unwrap();
    assert!(cw.kl_residual < 1e-12);
    assert_eq!(cw.support0, vec![0, 1]);
    assert_eq!(cw.support1, vec![2, 3]);
    assert_eq!(kl_residual(&cw, &k, 1), 0.0);
}

#[test]
fn embedded_two_level_pair_matches_mesh_oracle() {
    let e = (-0.37f64).exp();
    let (a0, a1) = (((1.0 + e) / 2.0).sqrt(), ((1.0 - e) / 2.0).sqrt());
    // embed diag(E[0], E[1]) twice along the 4 levels
    let k = kraus_from(vec![vec![a0, a0, a0, a0], vec![a1, -a1, a1, -a1]]);
    let cw = solve_codewords(&k, 2, 4, SynthesisOptions::default()).unwrap();
    assert!(cw.kl_residual < 1e-10);
    let mesh = mesh_oracle(&k, 2, 1e-3);
    assert!(mesh >= cw.kl_residual - 1e-6);
}

#[test]
fn ni7_d4_matches_analytic_and_mesh_oracles() {
    let g = common::ni7_rates(4, 10e-6);
    let k = kraus_decompose(&g, 90e-9, 0.0).unwrap();
    let cw = solve_codewords(&k, 2, 4, SynthesisOptions::default()).unwrap();
    assert!(cw.kl_residual < 1e-8, "{}", cw.kl_residual);
    let exact = analytic_oracle(&k);
    assert!(exact < 1e-8, "analytic oracle finds no feasible code: {exact}");
    assert!(mesh_oracle(&k, 2, 1e-2) >= cw.kl_residual - 1e-6);
}

#[test]
fn ni7_kl_suite_all_dimensions() {
    for d in [4, 6, 8, 10, 12] {
        let g = common::ni7_rates(d, 10e-6);
        let k = kraus_decompose(&g, 90e-9, 1e-40).unwrap();
        let cw = solve_codewords(&k, d / 2, d, SynthesisOptions::default()).unwrap();
        assert!(cw.kl_residual < 1e-8, "d={d}: {}", cw.kl_residual);
        // the off-diagonal KL conditions hold by construction
        let (w0, w1) = (cw.word(0), cw.word(1));
        for a in 0..d / 2 {
            for b in 0..d / 2 {
                let m = k.ops[a].component_mul(&k.ops[b]);
                let off: f64 = (0..d).map(|i| w0[i] * w1[i] * m[i]).sum();
                assert!(off.abs() < 1e-12);
            }
        }
        assert_abs_diff_eq!(kl_residual(&cw, &k, d / 2), cw.kl_residual, epsilon = 1e-12);
    }
}

#[test]
fn selected_codes_always_have_an_error_basis() {
    // near T₂ = 10 μs the lowest-residual d = 12 code can have linearly
    // dependent error images; selection must skip it
    for t2 in [9.999999999999999e-6, 9.999e-6, 1e-5, 2e-5] {
        let g = common::ni7_rates(12, t2);
        let k = kraus_decompose(&g, 90e-9, 1e-40).unwrap();
        let cw = match solve_codewords(&k, 6, 12, SynthesisOptions::default()) {
            Ok(cw) => cw,
            Err(SynthesisError::Approximate { codewords, .. }) => *codewords,
            Err(e) => panic!("{e}"),
        };
        assert!(build_error_basis(&cw, &k).is_ok(), "T2 = {t2}");
    }
}

#[test]
fn error_basis_examples() {
    let g = common::ni7_rates(4, 10e-6);
    let k = kraus_decompose(&g, 90e-9, 0.0).unwrap();
    let cw = solve_codewords(&k, 2, 4, SynthesisOptions::default()).unwrap();
    let b = build_error_basis(&cw, &k).unwrap();
    assert_eq!(b.vectors.ncols(), 4);
    assert!(b.orthonormality_residual() < 1e-10);

    // K = 1: the code words themselves
    let cw1 = solve_codewords(&k, 1, 4, SynthesisOptions::default()).unwrap();
    let b1 = build_error_basis(&cw1, &k).unwrap();
    for l in 0..2 {
        let w = cw1.word(l);
        for i in 0..4 {
            assert_abs_diff_eq!(b1.word(l, 0)[i].re, w[i], epsilon = 1e-12);
        }
    }

    // E_1 ∝ E_0 ⇒ collapse
    let dep = kraus_from(vec![vec![0.8; 4], vec![0.6; 4]]);
    let cw = CodeWords { d: 4, k: 2, support0: vec![0, 1], support1: vec![2, 3], amp0: vec![0.6, 0.8], amp1: vec![0.8, 0.6], kl_residual: 0.0 };
    assert!(matches!(build_error_basis(&cw, &dep), Err(SynthesisError::Collapse { l: 0, k: 1 })));
}

#[test]
fn error_basis_supports_are_disjoint_and_ordered() {
    for d in [4, 6, 8] {
        let g = common::ni7_rates(d, 10e-6);
        let k = kraus_decompose(&g, 90e-9, 1e-40).unwrap();
        let cw = solve_codewords(&k, d / 2, d, SynthesisOptions::default()).unwrap();
        let b = build_error_basis(&cw, &k).unwrap();
        assert!(b.orthonormality_residual() < 1e-10);
        for kk in 0..d / 2 {
            for &i in &cw.support1 {
                assert_eq!(b.word(0, kk)[i], c(0.0, 0.0));
            }
            for &i in &cw.support0 {
                assert_eq!(b.word(1, kk)[i], c(0.0, 0.0));
            }
        }
        // |ℓ,k⟩ ∈ span{E_k'|ℓ_L⟩ : k' ≤ k}: projecting E_k|ℓ⟩ out of the first k+1
        // columns leaves nothing
        for l in 0..2 {
            let w = cw.word(l);
            for kk in 0..d / 2 {
                let v = k.ops[kk].component_mul(&w).map(|x| c(x, 0.0));
                let mut r = v.clone();
                for j in 0..=kk {
                    let u = b.word(l, j);
                    r -= &u * u.dotc(&v);
                }
                assert!(r.norm() < 1e-9 * v.norm());
            }
        }
    }
}

#[test]
fn kl_residual_examples() {
    let id = kraus_decompose(&RateMatrix::zeros(4), 1e-7, DEFAULT_KRAUS_CUTOFF).unwrap();
    let cw = CodeWords { d: 4, k: 1, support0: vec![0, 2], support1: vec![1, 3], amp0: vec![0.6, 0.8], amp1: vec![1.0, 0.0], kl_residual: 0.0 };
    assert_eq!(kl_residual(&cw, &id, 1), 0.0);

    let g = common::ni7_rates(4, 10e-6);
    let k = kraus_decompose(&g, 90e-9, 0.0).unwrap();
    let best = solve_codewords(&k, 2, 4, SynthesisOptions::default()).unwrap();
    let mut swapped = best.clone();
    std::mem::swap(&mut swapped.support0, &mut swapped.support1);
    std::mem::swap(&mut swapped.amp0, &mut swapped.amp1);
    assert_abs_diff_eq!(kl_residual(&swapped, &k, 2), kl_residual(&best, &k, 2), epsilon = 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let mut rand_unit = || {
            let v: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        let cw = CodeWords { amp0: rand_unit(), amp1: rand_unit(), ..best.clone() };
        assert!(kl_residual(&cw, &k, 2) > best.kl_residual);
    }
}

#[test]
fn stabilizer_examples() {
    let g = common::ni7_rates(4, 10e-6);
    let k = kraus_decompose(&g, 90e-9, 0.0).unwrap();
    let cw1 = solve_codewords(&k, 1, 4, SynthesisOptions::default()).unwrap();
    let b1 = build_error_basis(&cw1, &k).unwrap();
    let s = stabilizer_observable(&b1, &[1.0]).unwrap();
    let p = &b1.vectors * b1.vectors.adjoint();
    assert!(ftqec_linalg::max_abs(&(s - p)) < 1e-14);

    let cw = solve_codewords(&k, 2, 4, SynthesisOptions::default()).unwrap();
    let b = build_error_basis(&cw, &k).unwrap();
    let s = stabilizer_observable(&b, &[0.0, 1.0]).unwrap();
    assert!(ftqec_linalg::max_abs(&(&s * &s - &s)) < 1e-12);

    // Born rule on normalised E_1|0_L⟩: outcome λ_1 with probability 1
    let v = k.ops[1].component_mul(&cw.word(0)).normalize().map(|x| c(x, 0.0));
    let p1 = b.word(0, 1).dotc(&v).norm_sqr() + b.word(1, 1).dotc(&v).norm_sqr();
    assert_abs_diff_eq!(p1, 1.0, epsilon = 1e-10);

    assert!(matches!(stabilizer_observable(&b, &[1.0, 1.0]), Err(SynthesisError::BadEigenvalues { .. })));
    assert!(matches!(stabilizer_observable(&b, &[1.0]), Err(SynthesisError::BadEigenvalues { .. })));
}

#[test]
fn deterministic_and_d12_partition_budget() {
    assert_eq!(partitions(12).len(), 462);
    let g = common::ni7_rates(12, 10e-6);
    let k = kraus_decompose(&g, 90e-9, 1e-40).unwrap();
    let t = std::time::Instant::now();
    let a = solve_codewords(&k, 6, 12, SynthesisOptions::default()).unwrap();
    assert!(t.elapsed().as_secs_f64() < 10.0);
    let b = solve_codewords(&k, 6, 12, SynthesisOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn invalid_requests_are_rejected() {
    let k = kraus_decompose(&RateMatrix::zeros(4), 1e-7, DEFAULT_KRAUS_CUTOFF).unwrap();
    assert!(matches!(solve_codewords(&k, 3, 4, SynthesisOptions::default()), Err(SynthesisError::TooManyErrors { .. })));
    assert!(matches!(solve_codewords(&k, 1, 6, SynthesisOptions::default()), Err(SynthesisError::DimensionMismatch { .. })));
    assert!(matches!(solve_codewords(&k, 1, 5, SynthesisOptions::default()), Err(SynthesisError::BadDimension(5))));
}

/// Best code found, whether or not it meets the acceptance threshold.
fn best_effort(kraus: &KrausSet, k: usize, d: usize) -> CodeWords {
    let opts = SynthesisOptions { threshold: 0.0, ..Default::default() };
    match solve_codewords(kraus, k, d, opts) {
        Ok(cw) => cw,
        Err(SynthesisError::Approximate { codewords, .. }) => *codewords,
        Err(e) => panic!("{e}"),
    }
}

fn random_channel(seed: u64, d: usize) -> (RateMatrix, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = nalgebra::DMatrix::from_fn(d, 3, |_, _| rng.random_range(-1.5..1.5));
    let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let spec = DephasingSpec::collective(&v, 1.0).unwrap();
    (compute_rates(&z, &spec).unwrap(), rng.random_range(1e-3..0.3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mesh_never_beats_solver_on_d4(seed in 0u64..100_000) {
        let (g, t) = random_channel(seed, 4);
        let k = kraus_decompose(&g, t, 0.0).unwrap();
        let cw = best_effort(&k, 2, 4);
        prop_assert!(mesh_oracle(&k, 2, 1e-2) >= cw.kl_residual - 1e-6);
    }

    #[test]
    fn off_diagonal_conditions_vanish_by_construction(seed in 0u64..100_000, half in 2usize..5) {
        let d = 2 * half;
        let (g, t) = random_channel(seed, d);
        let k = kraus_decompose(&g, t, 0.0).unwrap();
        let opts = SynthesisOptions { threshold: f64::INFINITY, ..Default::default() };
        let cw = solve_codewords(&k, half, d, opts).unwrap();
        let (w0, w1) = (cw.word(0), cw.word(1));
        prop_assert!((w0.norm() - 1.0).abs() < 1e-12 && (w1.norm() - 1.0).abs() < 1e-12);
        for a in 0..half.min(k.len()) {
            for b in 0..half.min(k.len()) {
                let m = k.ops[a].component_mul(&k.ops[b]);
                let off: f64 = (0..d).map(|i| w0[i] * w1[i] * m[i]).sum();
                prop_assert!(off.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stabilizer_is_hermitian_with_doubled_spectrum(seed in 0u64..100_000) {
        let (g, t) = random_channel(seed, 6);
        let k = kraus_decompose(&g, t, 0.0).unwrap();
        let opts = SynthesisOptions { threshold: f64::INFINITY, ..Default::default() };
        let cw = solve_codewords(&k, 3, 6, opts).unwrap();
        if let Ok(b) = build_error_basis(&cw, &k) {
            let s = stabilizer_observable(&b, &[0.5, -1.0, 2.0]).unwrap();
            prop_assert!(ftqec_linalg::hermiticity_residual(&s) < 1e-12);
            let (w, _) = ftqec_linalg::eigh(&s);
            let mut w = w.clone();
            w.sort_by(f64::total_cmp);
            let expect = [-1.0, -1.0, 0.5, 0.5, 2.0, 2.0];
            for (a, e) in w.iter().zip(expect) {
                prop_assert!((a - e).abs() < 1e-10);
            }
        }
    }
}


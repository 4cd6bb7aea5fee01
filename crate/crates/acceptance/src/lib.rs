//! End-to-end acceptance criteria for the logical-qudit pipeline. Each
//! criterion returns an [`Outcome`]; the `acceptance` test target prints one
//! PASS/FAIL line per criterion.

use code_synthesis::{kl_residual, CodeWords};
use dephasing_channel::{apply_dephasing, compute_rates, kraus_decompose, DephasingSpec, RateMatrix};
use et_compiler::{cu_generator, et_block_residual, generator_of, planar_generator, planar_rotation, recovery_generator};
use ftqec_linalg::{c, max_abs, CMat, RMat};
use qec_protocol::{binomial_majority_error, MeasurementModel, Pipeline, PipelineConfig, GATE_SET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};
use sweep_cli::{fit_dataset, run_sweep, Row, SweepPlan, T2Grid, XKind};
use two_qubit_switch::{crossover, ArchitectureFile, SwitchArchitecture};

/// Result of one criterion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:<24} ({:.1} s / {} s) {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

/// Run `f`, which returns `(pass, detail)`; a run over budget fails.
pub fn timed(name: &'static str, budget_s: u64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_s);
    let within = elapsed <= budget;
    let detail = if within { detail } else { format!("{detail}; over the runtime budget") };
    Outcome { name, pass: ok && within, detail, elapsed, budget }
}

/// Shared inputs: the Ni₇ pipeline and the worker count for sweeps.
pub struct Context {
    pub pipeline: Pipeline,
    pub workers: usize,
}

impl Context {
    pub fn new() -> Self {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self { pipeline: Pipeline::new(&PipelineConfig::ni7_default()).expect("bundled configuration builds"), workers }
    }
}

impl Default for Context {
    fn default() -> Self {
        Self::new()
    }
}

fn random_rates(rng: &mut ChaCha8Rng, d: usize) -> RateMatrix {
    // random Z profile and random positive semidefinite C ⇒ valid rates
    let n = rng.random_range(1..8);
    let z = RMat::from_fn(d, n, |_, _| rng.random_range(-1.5..1.5));
    let a = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let spec = DephasingSpec::new(&a * a.transpose() * rng.random_range(1e3..1e6), 1.0).expect("PSD by construction");
    compute_rates(&z, &spec).expect("valid profile")
}

/// Kraus completeness and Kraus-vs-closed-form agreement on 100 random
/// valid rate matrices, `d ≤ 12`.
pub fn channel_validity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(739);
    let (mut worst_complete, mut worst_channel) = (0.0f64, 0.0f64);
    for trial in 0..100 {
        let d = 2 + trial % 11;
        let g = random_rates(&mut rng, d);
        let t = rng.random_range(1e-9..1e-5);
        let kraus = kraus_decompose(&g, t, 0.0).expect("decomposes");
        worst_complete = worst_complete.max(kraus.completeness_residual());
        let a = CMat::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let rho = &a * a.adjoint();
        let rho = &rho / rho.trace();
        let closed = apply_dephasing(&rho, &g, t).expect("closed form");
        worst_channel = worst_channel.max(max_abs(&(kraus.apply(&rho) - closed)));
    }
    (worst_complete < 1e-10 && worst_channel < 1e-10, format!("100 channels: ‖ΣE†E − I‖ ≤ {worst_complete:.1e}, Kraus vs closed form ≤ {worst_channel:.1e}"))
}

/// Smallest KL residual over a 2-D amplitude mesh on every d = 4 partition.
fn mesh_oracle(kraus: &dephasing_channel::KrausSet, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    for (s0, s1) in code_synthesis::partitions(4) {
        for i in 0..=steps {
            let a = PI / 2.0 * i as f64 / steps as f64;
            for j in 0..=steps {
                let b = PI / 2.0 * j as f64 / steps as f64;
                let cw = CodeWords { d: 4, k: 2, support0: s0.clone(), support1: s1.clone(), amp0: vec![a.cos(), a.sin()], amp1: vec![b.cos(), b.sin()], kl_residual: 0.0 };
                best = best.min(kl_residual(&cw, kraus, 2));
            }
        }
    }
    best
}

/// Ni₇ channel at the snapshot time, `d ∈ {4,…,12}`, `K = d/2`.
pub fn kl_suite(ctx: &Context) -> (bool, String) {
    let mut ok = true;
    let mut parts = vec![];
    for d in [4, 6, 8, 10, 12] {
        let q = ctx.pipeline.qudit(d, ctx.pipeline.t2_ref()).expect("code synthesis");
        let res = kl_residual(&q.codewords, &q.kraus, d / 2);
        // off-diagonal ⟨0|E_a†E_b|1⟩ terms vanish by disjoint supports
        let (w0, w1) = (q.codewords.word(0), q.codewords.word(1));
        let mut cross: f64 = 0.0;
        for a in 0..(d / 2).min(q.kraus.len()) {
            for b in 0..(d / 2).min(q.kraus.len()) {
                let m = q.kraus.ops[a].component_mul(&q.kraus.ops[b]);
                cross = cross.max((0..d).map(|i| w0[i] * w1[i] * m[i]).sum::<f64>().abs());
            }
        }
        ok &= res < 1e-8 && cross < 1e-12 && !q.approximate;
        parts.push(format!("d{d} {res:.1e}"));
        if d == 4 {
            let mesh = mesh_oracle(&q.kraus, 300);
            ok &= mesh >= res - 1e-6;
            parts.push(format!("mesh {mesh:.1e}"));
        }
    }
    (ok, format!("residuals {}", parts.join(", ")))
}

/// Error transparency of the compiled gate set, CU and recovery.
pub fn et_compilation(ctx: &Context) -> (bool, String) {
    let (mut block, mut round, mut diag) = (0.0f64, 0.0f64, 0.0f64);
    for d in [4, 6, 8] {
        let q = ctx.pipeline.qudit(d, ctx.pipeline.t2_ref()).expect("code synthesis");
        for &(theta, phi) in &GATE_SET {
            let h = planar_generator(theta, phi, &q.basis).expect("compiles");
            let u = h.unitary();
            block = block.max(et_block_residual(&u, &planar_rotation(theta, phi), &q.basis));
            let back = generator_of(&u).expect("logarithm");
            round = round.max(max_abs(&(back.unitary() - &u)));
        }
        diag = diag.max(cu_generator(&q.basis).max_diagonal());
        for k in 0..q.k {
            diag = diag.max(recovery_generator(&q.basis, k).expect("recovery").max_diagonal());
        }
    }
    (block < 1e-9 && round < 1e-9 && diag < 1e-9, format!("off-block ≤ {block:.1e}, round trip ≤ {round:.1e}, CU/recovery diagonal ≤ {diag:.1e}"))
}

/// γ = 0 cycle for every gate, `d ∈ {4, 6, 8}`.
pub fn noiseless_pipeline(ctx: &Context) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for d in [4, 6, 8] {
        let q = ctx.pipeline.noiseless_qudit(d, ctx.pipeline.t2_ref()).expect("code synthesis");
        for &(theta, phi) in &GATE_SET {
            let r = q.entanglement_error(theta, phi, &MeasurementModel::ideal()).expect("cycle");
            worst = worst.max(r.e_e.abs());
        }
    }
    (worst < 1e-6, format!("max E_e = {worst:.1e}"))
}

/// Slope dataset: uncorrected baseline and d ∈ {4, 6, 8}, 6 points with
/// 1/T₂ ∈ [10³, 10⁶] s⁻¹, five-gate set.
pub fn slope_dataset(ctx: &Context) -> Vec<Row> {
    let plan = SweepPlan {
        config: None,
        d_list: vec![4, 6, 8],
        t2_grid: T2Grid::LogSpaced { min_s: 1e-6, max_s: 1e-3, points: 6 },
        gate_set: GATE_SET.to_vec(),
        circuit: sweep_cli::Circuit::SingleGateCycle,
        baseline: true,
        measurement: MeasurementModel::ideal(),
        noiseless: false,
        output: None,
    };
    let data = run_sweep(&plan, &ctx.pipeline, &ArchitectureFile::default(), ctx.workers).expect("valid plan");
    assert_eq!(data.failures, 0, "slope dataset has failed points");
    data.rows
}

/// Uncorrected slope 1 ± 0.15, d = 4 slope ≥ 1.5, slopes increasing in d.
pub fn slope_separation(rows: &[Row]) -> (bool, String) {
    let fits = fit_dataset(rows, XKind::InvT2);
    let slope = |circuit: &str, d: usize| fits.iter().find(|f| f.circuit == circuit && f.d == Some(d)).and_then(|f| f.fit).map_or(f64::NAN, |f| f.slope);
    let (b, s4, s6, s8) = (slope("baseline", 2), slope("single_gate_cycle", 4), slope("single_gate_cycle", 6), slope("single_gate_cycle", 8));
    let ok = (b - 1.0).abs() <= 0.15 && s4 >= 1.5 && s4 < s6 && s6 < s8;
    (ok, format!("slopes: uncorrected {b:.2}, d4 {s4:.2}, d6 {s6:.2}, d8 {s8:.2}"))
}

/// d = 4 crossover against the uncorrected spin in [0.5, 20] μs.
pub fn crossover_band(rows: &[Row]) -> (bool, String) {
    let fits = fit_dataset(rows, XKind::InvT2);
    match fits.iter().find(|f| f.circuit == "single_gate_cycle" && f.d == Some(4)).and_then(|f| f.crossover_us) {
        Some(x) => ((0.5..=20.0).contains(&x), format!("d4 crossover at T₂ = {x:.2} μs")),
        None => (false, "no d4 crossover on the grid".into()),
    }
}

/// `log₁₀E_e` vs `d` at T₂ = 10 μs: linear (r² > 0.9), decreasing, d = 12
/// below 1e-9.
pub fn scaling(ctx: &Context) -> (bool, String) {
    let plan = SweepPlan {
        config: None,
        d_list: vec![4, 6, 8, 10, 12],
        t2_grid: T2Grid::Values(vec![1e-5]),
        gate_set: GATE_SET.to_vec(),
        circuit: sweep_cli::Circuit::SingleGateCycle,
        baseline: false,
        measurement: MeasurementModel::ideal(),
        noiseless: false,
        output: None,
    };
    let data = run_sweep(&plan, &ctx.pipeline, &ArchitectureFile::default(), ctx.workers).expect("valid plan");
    let curve = sweep_cli::curves(&data.rows, XKind::Dim).remove(0);
    let es: Vec<f64> = curve.points.iter().map(|p| p.1).collect();
    let decreasing = es.windows(2).all(|w| w[1] < w[0]);
    let fit = sweep_cli::fit_slope(&curve.points, XKind::Dim);
    let r2 = fit.as_ref().map_or(f64::NAN, |f| f.r_squared);
    let e12 = *es.last().unwrap_or(&f64::NAN);
    let ok = data.failures == 0 && decreasing && r2 > 0.9 && e12 < 1e-9;
    let list = es.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(", ");
    (ok, format!("E_e(d=4..12) = [{list}], r² = {r2:.3}"))
}

/// p_m = 1 %, d = 4, T₂ = 10 μs (code-block metric): error falls with
/// n_rep = 1 → 3 → 5, and the measurement-induced excess follows the
/// binomial majority-vote failure probability within 20 %.
pub fn measurement_repetition(ctx: &Context) -> (bool, String) {
    let q = ctx.pipeline.qudit(4, 1e-5).expect("code synthesis");
    let e = |mm: MeasurementModel| q.gate_set_error(&GATE_SET, &mm).expect("cycle").e_e_code_block;
    let p = 0.01;
    let e0 = e(MeasurementModel::ideal());
    let en: Vec<f64> = [1, 3, 5].iter().map(|&n| e(MeasurementModel::new(p, n).expect("valid"))).collect();
    let pf: Vec<f64> = [1, 3, 5].iter().map(|&n| binomial_majority_error(p, n)).collect();
    let decreasing = en[0] > en[1] && en[1] > en[2];
    let mut worst: f64 = 0.0;
    for i in 1..3 {
        let predicted = (en[0] - e0) * pf[i] / pf[0];
        worst = worst.max(((en[i] - e0) / predicted - 1.0).abs());
    }
    (decreasing && worst <= 0.2, format!("E_cb(n=1,3,5) = {:.3e}, {:.3e}, {:.3e} (p_m = 0: {e0:.3e}); oracle deviation {:.1}%", en[0], en[1], en[2], 100.0 * worst))
}

/// Two-qubit C-π: d = 4 crossover in [2.5, 250] μs on a 5-point grid, d = 6
/// crossover at smaller T₂, noiseless conditional phase within 1e-2 rad.
pub fn two_qubit(ctx: &Context) -> (bool, String) {
    let p = &ctx.pipeline;
    let arch = ArchitectureFile::default();
    let t2s = T2Grid::LogSpaced { min_s: 1e-6, max_s: 1e-3, points: 5 }.values();
    let base: Vec<f64> = t2s.iter().map(|&t| SwitchArchitecture::uncorrected(p, &arch, t).expect("baseline").report().e_e).collect();
    let curve = |d: usize| -> Vec<f64> {
        let a = ArchitectureFile { unit_d: d, ..arch.clone() };
        t2s.iter().map(|&t| SwitchArchitecture::encoded(p, &a, t, &MeasurementModel::ideal(), false).expect("switch").report().e_e).collect()
    };
    let (e4, e6) = (curve(4), curve(6));
    let x4 = crossover(&t2s, &e4, &base);
    // a curve below the reference on the whole grid crosses below its start
    let below_all = |e: &[f64]| e.iter().zip(&base).all(|(a, b)| a < b);
    let x6 = crossover(&t2s, &e6, &base).or_else(|| below_all(&e6).then_some(t2s[0]));
    let phases = SwitchArchitecture::encoded(p, &arch, 1e-5, &MeasurementModel::ideal(), true).expect("switch").logical_phases();
    let wrap = |a: f64| (a + PI).rem_euclid(2.0 * PI) - PI;
    let phase_err = phases[1].abs().max(phases[2].abs()).max(wrap(phases[3] - PI).abs());
    let in_band = x4.is_some_and(|x| (2.5e-6..=250e-6).contains(&x));
    let ordered = match (x4, x6) {
        (Some(a), Some(b)) => b < a,
        _ => false,
    };
    let fmt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{:.2} μs", v * 1e6));
    let x6_text = if crossover(&t2s, &e6, &base).is_none() && x6.is_some() { "< 1 μs (below grid)".to_string() } else { fmt(x6) };
    (in_band && ordered && phase_err < 1e-2, format!("d4 crossover {}, d6 crossover {x6_text}, phase error {phase_err:.1e} rad", fmt(x4)))
}

//! The logical-qubit cycle: encode → logical gate → stabilize (CU + ancilla
//! measurement) → recover → decode, simulated at the density-matrix level
//! with dephasing acting during every step.
//!
//! Syndrome measurements are handled branch-exactly: every outcome is kept
//! with its Born weight (after the measurement-error channel), recovered,
//! and the branches are summed, so no sampling noise enters the metrics.

mod config;
mod measurement;

pub use config::{DecodeMode, PipelineConfig, ProtocolFile, SnapshotRule};
pub use measurement::{binomial_majority_error, MeasurementModel};

use code_synthesis::{build_error_basis, solve_codewords, CodeWords, ErrorBasis, SynthesisError, SynthesisOptions};
use dephasing_channel::{calibrate_to_t2, compute_rates, kraus_decompose, DephasingError, DephasingSpec, KrausSet, RateMatrix};
use et_compiler::{planar_generator, planar_rotation, CompileError, GeneratorMatrix};
use ftqec_linalg::{c, CMat, CVec, Complex64};
use lindblad_engine::{evolve_segment, product_rates, uniform_rates, EvolutionSegment, IntegratorConfig, LindbladError};
use serde::{Deserialize, Serialize};
use spin_model::{SpinModelError, SpinSpectrum, SpinTopology};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Spin(#[from] SpinModelError),
    #[error(transparent)]
    Dephasing(#[from] DephasingError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error("invalid measurement model: p_m = {p_m}, n_rep = {n_rep} (need 0 ≤ p_m < 1, odd n_rep)")]
    Measurement { p_m: f64, n_rep: usize },
    #[error("branch weights sum to {0}, expected 1")]
    BranchWeights(f64),
    #[error("preparation acceptance {0:.3e} below floor")]
    Acceptance(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// The 2-gate-parameter planar rotations averaged over in threshold plots.
pub const GATE_SET: [(f64, f64); 5] = [(PI / 4.0, PI), (PI / 2.0, PI), (PI / 2.0, -PI / 2.0), (PI / 2.0, -PI / 4.0), (PI / 2.0, -PI / 8.0)];

/// The six cardinal single-qubit states `0, 1, +, −, +i, −i`.
pub fn cardinal_states() -> [CVec; 6] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: Complex64, b: Complex64| CVec::from_vec(vec![a, b]);
    [
        v(c(1.0, 0.0), c(0.0, 0.0)),
        v(c(0.0, 0.0), c(1.0, 0.0)),
        v(c(s, 0.0), c(s, 0.0)),
        v(c(s, 0.0), c(-s, 0.0)),
        v(c(s, 0.0), c(0.0, s)),
        v(c(s, 0.0), c(0.0, -s)),
    ]
}

/// Persistent store for solved code words. Keys are canonical JSON
/// descriptions of every synthesis input (topology, noise model, `d`, `T₂`,
/// snapshot time, thresholds), so equal keys mean equal solutions.
pub trait CodeStore: Send + Sync + std::fmt::Debug {
    fn load(&self, key: &str) -> Option<CodeWords>;
    fn store(&self, key: &str, codewords: &CodeWords);
}

/// Shared, `T₂`-independent inputs: spectrum, calibrated noise model and
/// the global drive amplitude.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub spectrum: Arc<SpinSpectrum>,
    /// Dephasing spec calibrated so that its reference rate is `1/T₂_ref`.
    pub dephasing: DephasingSpec,
    pub protocol: ProtocolFile,
    pub integrator: IntegratorConfig,
    /// Drive amplitude `Ω` (rad/s).
    pub rabi: f64,
    /// Optional cache consulted before solving for code words.
    pub code_store: Option<Arc<dyn CodeStore>>,
    key_base: serde_json::Value,
}

impl Pipeline {
    pub fn new(cfg: &PipelineConfig) -> Result<Self, ProtocolError> {
        let topology = SpinTopology::from(cfg.topology.clone());
        let spectrum = Arc::new(SpinSpectrum::compute(&topology)?);
        Self::with_spectrum(spectrum, cfg)
    }

    /// Reuse an already diagonalised spectrum.
    pub fn with_spectrum(spectrum: Arc<SpinSpectrum>, cfg: &PipelineConfig) -> Result<Self, ProtocolError> {
        Self::with_store(spectrum, cfg, None)
    }

    /// Like [`Pipeline::with_spectrum`], reusing code words from `store`
    /// (also for the drive calibration).
    pub fn with_store(spectrum: Arc<SpinSpectrum>, cfg: &PipelineConfig, store: Option<Arc<dyn CodeStore>>) -> Result<Self, ProtocolError> {
        let spec = cfg.dephasing.into_spec(spectrum.topology.spins.len())?;
        let dephasing = calibrate_to_t2(&spec)?;
        let key_base = serde_json::json!({
            "topology": cfg.topology,
            "dephasing": cfg.dephasing,
            "kraus_cutoff": cfg.protocol.kraus_cutoff,
            "kl_threshold": cfg.protocol.kl_threshold,
        });
        let mut p = Self { spectrum, dephasing, protocol: cfg.protocol.clone(), integrator: cfg.integrator, rabi: 1.0, code_store: store, key_base };
        p.rabi = p.calibrate_rabi()?;
        Ok(p)
    }

    pub fn reference_gate(&self) -> f64 {
        self.protocol.reference_gate_ns * 1e-9
    }

    pub fn t2_ref(&self) -> f64 {
        self.dephasing.t2_ref
    }

    /// `Ω` such that `R(π/2, π)` on the d = 4 code (at `T₂_ref`, snapshot at
    /// the reference duration) lasts exactly the reference duration.
    fn calibrate_rabi(&self) -> Result<f64, ProtocolError> {
        let rates = self.rates(4, self.t2_ref())?;
        let (_, _, basis, _) = self.codes(&rates, 4, self.t2_ref(), self.reference_gate())?;
        let h = planar_generator(PI / 2.0, PI, &basis)?;
        Ok(et_compiler::calibrate_rabi(&h, self.reference_gate())?)
    }

    /// Calibrated eigenbasis rates of the lowest `d` levels at coherence time `t2`.
    pub fn rates(&self, d: usize, t2: f64) -> Result<RateMatrix, ProtocolError> {
        let z = self.spectrum.z_profile(d)?;
        let base = compute_rates(&z, &self.dephasing)?;
        Ok(base.scaled(self.t2_ref() / t2))
    }

    /// Cache key of the code words for `(d, T₂, t)`.
    pub fn code_key(&self, d: usize, t2: f64, t: f64) -> String {
        serde_json::json!({ "inputs": self.key_base, "d": d, "t2": t2, "t": t }).to_string()
    }

    fn codes(&self, rates: &RateMatrix, d: usize, t2: f64, t: f64) -> Result<(KrausSet, CodeWords, ErrorBasis, bool), ProtocolError> {
        let kraus = kraus_decompose(rates, t, self.protocol.kraus_cutoff)?;
        let key = self.code_store.as_ref().map(|_| self.code_key(d, t2, t));
        let cached = self.code_store.as_ref().zip(key.as_ref()).and_then(|(s, k)| s.load(k)).filter(|cw| cw.d == d && cw.k == d / 2);
        let cw = match cached {
            Some(cw) => cw,
            None => {
                let opts = SynthesisOptions { threshold: self.protocol.kl_threshold, ..Default::default() };
                let cw = match solve_codewords(&kraus, d / 2, d, opts) {
                    Ok(cw) => cw,
                    Err(SynthesisError::Approximate { codewords, .. }) => *codewords,
                    Err(e) => return Err(e.into()),
                };
                if let (Some(s), Some(k)) = (&self.code_store, &key) {
                    s.store(k, &cw);
                }
                cw
            }
        };
        let approximate = !(cw.kl_residual < self.protocol.kl_threshold);
        if approximate {
            log::warn!("d = {d}: best KL residual {:.2e} above threshold, using approximate code", cw.kl_residual);
        }
        let basis = build_error_basis(&cw, &kraus)?;
        Ok((kraus, cw, basis, approximate))
    }

    /// Build the logical qudit of dimension `d` at coherence time `t2`.
    pub fn qudit(&self, d: usize, t2: f64) -> Result<LogicalQudit, ProtocolError> {
        self.build_qudit(d, t2, false)
    }

    /// Same code words as [`Pipeline::qudit`] but every evolution is noiseless.
    pub fn noiseless_qudit(&self, d: usize, t2: f64) -> Result<LogicalQudit, ProtocolError> {
        self.build_qudit(d, t2, true)
    }

    fn build_qudit(&self, d: usize, t2: f64, noiseless: bool) -> Result<LogicalQudit, ProtocolError> {
        if !(t2 > 0.0) {
            return Err(ProtocolError::Config(format!("T₂ must be positive, got {t2}")));
        }
        let rates = self.rates(d, t2)?;
        let mut t = self.reference_gate();
        let mut built = self.codes(&rates, d, t2, t)?;
        if self.protocol.snapshot == SnapshotRule::ReferenceGate {
            for _ in 0..8 {
                let tau = planar_generator(PI / 2.0, PI, &built.2)?.duration(self.rabi);
                if (tau - t).abs() <= 1e-6 * t {
                    break;
                }
                t = tau;
                built = self.codes(&rates, d, t2, t)?;
            }
        }
        let (kraus, codewords, basis, approximate) = built;
        let t2_anc = self.protocol.t2_ancilla_us.map_or(t2, |u| u * 1e-6);
        let (evolution_rates, ancilla_rates) =
            if noiseless { (RateMatrix::zeros(d), RateMatrix::zeros(d / 2)) } else { (rates.clone(), uniform_rates(d / 2, t2_anc)) };
        Ok(LogicalQudit {
            d,
            k: d / 2,
            t2,
            energies: self.spectrum.energies(d),
            rates,
            evolution_rates,
            ancilla_rates,
            kraus,
            codewords,
            basis,
            approximate,
            snapshot: t,
            rabi: self.rabi,
            integrator: self.integrator,
            prune: self.protocol.prune,
            noisy_prep: self.protocol.noisy_prep,
            acceptance_floor: self.protocol.acceptance_floor,
        })
    }
}

/// A logical qubit embedded in the lowest `d` levels, with its code, error
/// basis and noise.
#[derive(Clone, Debug)]
pub struct LogicalQudit {
    pub d: usize,
    pub k: usize,
    pub t2: f64,
    /// Level energies (GHz).
    pub energies: Vec<f64>,
    /// Physical dephasing rates (used for code synthesis).
    pub rates: RateMatrix,
    /// Rates applied during evolution (zero in noiseless mode).
    pub evolution_rates: RateMatrix,
    pub ancilla_rates: RateMatrix,
    pub kraus: KrausSet,
    pub codewords: CodeWords,
    pub basis: ErrorBasis,
    /// Code words miss the KL threshold.
    pub approximate: bool,
    /// Kraus snapshot time (s).
    pub snapshot: f64,
    pub rabi: f64,
    pub integrator: IntegratorConfig,
    pub prune: f64,
    pub noisy_prep: bool,
    pub acceptance_floor: f64,
}

/// One reported syndrome branch after the ancilla measurement.
#[derive(Clone, Debug)]
pub struct Branch {
    /// Reported (majority-voted) syndrome.
    pub syndrome: usize,
    pub probability: f64,
    /// Unnormalised qudit state (trace = `probability`).
    pub state: CMat,
}

/// Logical read-out of a qudit state.
#[derive(Clone, Debug)]
pub struct Decoded {
    /// `⟨ℓ,0|ρ|ℓ',0⟩`.
    pub code_block: CMat,
    /// `Σ_k ⟨ℓ,k|ρ|ℓ',k⟩`.
    pub traced: CMat,
    /// `1 − tr(code_block)`.
    pub leakage: f64,
    /// Populations of the supports `S₀`, `S₁` (syndrome-independent read-out).
    pub support: [f64; 2],
}

impl Decoded {
    pub fn logical(&self, mode: DecodeMode) -> &CMat {
        match mode {
            DecodeMode::Traced => &self.traced,
            DecodeMode::CodeBlock => &self.code_block,
        }
    }
}

/// Per-cycle metrics. `f_e`/`e_e` use the traced logical state; the
/// `_code_block` variants use the code block only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub d: usize,
    pub t2: f64,
    pub theta: f64,
    pub phi: f64,
    /// Reported-syndrome probabilities, averaged over the input states.
    pub syndrome_distribution: Vec<f64>,
    pub fidelity_per_state: Vec<f64>,
    pub f_e: f64,
    pub e_e: f64,
    pub f_e_code_block: f64,
    pub e_e_code_block: f64,
    /// Mean population outside the code block.
    pub leakage: f64,
    pub acceptance_probability: f64,
    pub approximate_code: bool,
}

impl CycleReport {
    /// Average of several reports (e.g. over a gate set); `θ`, `φ` are NaN.
    pub fn average(reports: &[CycleReport]) -> CycleReport {
        let n = reports.len() as f64;
        let mean = |f: &dyn Fn(&CycleReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let kk = reports[0].syndrome_distribution.len();
        let ns = reports[0].fidelity_per_state.len();
        CycleReport {
            d: reports[0].d,
            t2: reports[0].t2,
            theta: f64::NAN,
            phi: f64::NAN,
            syndrome_distribution: (0..kk).map(|k| mean(&|r| r.syndrome_distribution[k])).collect(),
            fidelity_per_state: (0..ns).map(|s| mean(&|r| r.fidelity_per_state[s])).collect(),
            f_e: mean(&|r| r.f_e),
            e_e: mean(&|r| r.e_e),
            f_e_code_block: mean(&|r| r.f_e_code_block),
            e_e_code_block: mean(&|r| r.e_e_code_block),
            leakage: mean(&|r| r.leakage),
            acceptance_probability: mean(&|r| r.acceptance_probability),
            approximate_code: reports.iter().any(|r| r.approximate_code),
        }
    }
}

/// `|ψ⟩⟨ψ|`.
pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn state_fidelity(psi: &CVec, rho: &CMat) -> f64 {
    (psi.adjoint() * rho * psi)[(0, 0)].re
}

impl LogicalQudit {
    /// Encoded pure state `α|0,0⟩ + β|1,0⟩`.
    pub fn encode_ideal(&self, psi: &CVec) -> CMat {
        let v = self.basis.word(0, 0) * psi[0] + self.basis.word(1, 0) * psi[1];
        projector(&v)
    }

    /// Evolve for the duration of `h` at drive amplitude `Ω` under the given rates.
    fn drive(&self, rho: &CMat, h: &GeneratorMatrix, gamma: &RateMatrix) -> Result<CMat, ProtocolError> {
        let tau = h.duration(self.rabi);
        if tau == 0.0 {
            return Ok(rho.clone());
        }
        let seg = EvolutionSegment::from_generator(&h.h_tilde, tau, gamma.clone())?;
        Ok(evolve_segment(rho, &seg, &self.integrator)?)
    }

    /// Zero-diagonal generator rotating the ground eigenstate onto `|0,0⟩`.
    pub fn prep_generator(&self) -> GeneratorMatrix {
        let target = self.basis.word(0, 0);
        let mut ground = CVec::zeros(self.d);
        ground[0] = c(1.0, 0.0);
        let overlap = target[0].re.clamp(-1.0, 1.0);
        let alpha = overlap.acos();
        if alpha < 1e-15 {
            return GeneratorMatrix { h_tilde: CMat::zeros(self.d, self.d) };
        }
        let perp = (&target - &ground * c(overlap, 0.0)).normalize();
        // rotation by α in span{ground, perp}: ground ↦ cos α ground + sin α perp
        let h = et_compiler::pair_swap_generator(&ground, &perp) * c(alpha / (PI / 2.0), 0.0);
        GeneratorMatrix { h_tilde: h }
    }

    /// Noisy preparation of `|0_L⟩` from the ground state, post-selected on
    /// the logical outcome ℓ = 0 and then on syndrome k = 0.
    pub fn encode(&self) -> Result<(CMat, f64), ProtocolError> {
        let mut rho = CMat::zeros(self.d, self.d);
        rho[(0, 0)] = c(1.0, 0.0);
        let rho = self.drive(&rho, &self.prep_generator(), &self.evolution_rates)?;
        // logical measurement on the supports, keep ℓ = 0
        let p0 = self.codewords.support_projector(0).map(|x| c(x, 0.0));
        let p0 = CMat::from_diagonal(&p0);
        let kept = &p0 * &rho * &p0;
        let a_logical = kept.trace().re;
        let kept = kept / c(a_logical, 0.0);
        // stabilization, keep k = 0 with an ideal read-out
        let branches = self.stabilize_and_measure(&kept, &MeasurementModel::ideal())?;
        let zero = branches.into_iter().find(|b| b.syndrome == 0);
        let (state, a_stab) = match zero {
            Some(b) => {
                let p = b.probability;
                (b.state / c(p, 0.0), p)
            }
            None => (CMat::zeros(self.d, self.d), 0.0),
        };
        let acceptance = a_logical * a_stab;
        if acceptance < self.acceptance_floor {
            return Err(ProtocolError::Acceptance(acceptance));
        }
        Ok((state, acceptance))
    }

    /// Compiled planar rotation `R(θ, φ)` with concurrent dephasing.
    pub fn apply_logical_gate(&self, rho: &CMat, theta: f64, phi: f64) -> Result<CMat, ProtocolError> {
        let h = planar_generator(theta, phi, &self.basis)?;
        self.drive(rho, &h, &self.evolution_rates)
    }

    /// Gate duration of `R(θ, φ)` on this code (s).
    pub fn gate_duration(&self, theta: f64, phi: f64) -> Result<f64, ProtocolError> {
        Ok(planar_generator(theta, phi, &self.basis)?.duration(self.rabi))
    }

    /// Rates on qudit ⊗ ancilla.
    pub fn joint_rates(&self) -> RateMatrix {
        product_rates(&self.evolution_rates, &self.ancilla_rates)
    }

    /// CU with a fresh ancilla, then a branch-exact ancilla measurement.
    /// Returns one branch per reported syndrome (ancilla traced out).
    pub fn stabilize_and_measure(&self, rho: &CMat, mm: &MeasurementModel) -> Result<Vec<Branch>, ProtocolError> {
        mm.validate()?;
        let (d, kk) = (self.d, self.k);
        let mut anc = CMat::zeros(kk, kk);
        anc[(0, 0)] = c(1.0, 0.0);
        let joint = rho.kronecker(&anc);
        let h = et_compiler::cu_generator(&self.basis);
        let joint = self.drive(&joint, &h, &self.joint_rates())?;
        let true_branches: Vec<CMat> = (0..kk).map(|k| CMat::from_fn(d, d, |m, n| joint[(m * kk + k, n * kk + k)])).collect();
        let conf = mm.confusion(kk);
        let total = rho.trace().re;
        let mut out = vec![];
        let mut sum = 0.0;
        for j in 0..kk {
            let mut state = CMat::zeros(d, d);
            for (k, b) in true_branches.iter().enumerate() {
                if conf[(j, k)] != 0.0 {
                    state += b * c(conf[(j, k)], 0.0);
                }
            }
            let p = state.trace().re;
            sum += p;
            if p >= self.prune * total.abs().max(f64::MIN_POSITIVE) {
                out.push(Branch { syndrome: j, probability: p, state });
            }
        }
        if (sum - total).abs() > 1e-9 * total.abs().max(1.0) {
            return Err(ProtocolError::BranchWeights(sum / total));
        }
        Ok(out)
    }

    /// Recovery `R_k` with concurrent dephasing (`k = 0` is a no-op).
    pub fn recover(&self, rho: &CMat, k: usize) -> Result<CMat, ProtocolError> {
        let h = et_compiler::recovery_generator(&self.basis, k)?;
        self.drive(rho, &h, &self.evolution_rates)
    }

    pub fn decode(&self, rho: &CMat) -> Decoded {
        let b = &self.basis;
        let kk = self.k;
        let elem = |l: usize, lp: usize, k: usize| (b.word(l, k).adjoint() * rho * b.word(lp, k))[(0, 0)];
        let code_block = CMat::from_fn(2, 2, |l, lp| elem(l, lp, 0));
        let traced = CMat::from_fn(2, 2, |l, lp| (0..kk).map(|k| elem(l, lp, k)).sum());
        let leakage = 1.0 - code_block.trace().re;
        let support = [0, 1].map(|l| self.codewords.support(l).iter().map(|&i| rho[(i, i)].re).sum());
        Decoded { code_block, traced, leakage, support }
    }

    /// Gate, stabilization, measurement and recovery on one encoded state.
    /// Returns the branch-summed final state and the reported-syndrome
    /// distribution.
    pub fn run_cycle(&self, rho: &CMat, theta: f64, phi: f64, mm: &MeasurementModel) -> Result<(CMat, Vec<f64>), ProtocolError> {
        let rho = self.apply_logical_gate(rho, theta, phi)?;
        let branches = self.stabilize_and_measure(&rho, mm)?;
        let mut dist = vec![0.0; self.k];
        let mut out = CMat::zeros(self.d, self.d);
        for br in &branches {
            dist[br.syndrome] += br.probability;
            out += self.recover(&br.state, br.syndrome)?;
        }
        Ok((out, dist))
    }

    /// Starting state for the metric: ideal encoding, or the noisy
    /// preparation of `|0_L⟩` followed by an ideal logical unitary to `ψ`.
    fn initial_state(&self, psi: &CVec) -> Result<(CMat, f64), ProtocolError> {
        if !self.noisy_prep {
            return Ok((self.encode_ideal(psi), 1.0));
        }
        let (rho0, acc) = self.encode()?;
        // unitary sending |0⟩ to ψ
        let u = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (_, 0) => psi[i],
            (0, 1) => -psi[1].conj(),
            _ => psi[0].conj(),
        });
        let v = et_compiler::embed_logical(&u, &self.basis)?;
        Ok((&v * rho0 * v.adjoint(), acc))
    }

    /// Six-state entanglement fidelity of one `R(θ, φ)` + EC cycle.
    pub fn entanglement_error(&self, theta: f64, phi: f64, mm: &MeasurementModel) -> Result<CycleReport, ProtocolError> {
        let g = planar_rotation(theta, phi);
        let mut fid = vec![];
        let mut fid_cb = vec![];
        let mut leak = 0.0;
        let mut acc = 0.0;
        let mut dist = vec![0.0; self.k];
        let states = cardinal_states();
        for psi in &states {
            let (rho, a) = self.initial_state(psi)?;
            let (out, syn) = self.run_cycle(&rho, theta, phi, mm)?;
            let dec = self.decode(&out);
            let ideal = &g * psi;
            fid.push(state_fidelity(&ideal, &dec.traced));
            fid_cb.push(state_fidelity(&ideal, &dec.code_block));
            leak += dec.leakage;
            acc += a;
            for (x, y) in dist.iter_mut().zip(&syn) {
                *x += y;
            }
        }
        let n = states.len() as f64;
        let f_e = fid.iter().sum::<f64>() / n;
        let f_cb = fid_cb.iter().sum::<f64>() / n;
        Ok(CycleReport {
            d: self.d,
            t2: self.t2,
            theta,
            phi,
            syndrome_distribution: dist.iter().map(|x| x / n).collect(),
            fidelity_per_state: fid,
            f_e,
            e_e: 1.0 - f_e * f_e,
            f_e_code_block: f_cb,
            e_e_code_block: 1.0 - f_cb * f_cb,
            leakage: leak / n,
            acceptance_probability: acc / n,
            approximate_code: self.approximate,
        })
    }

    /// [`LogicalQudit::entanglement_error`] averaged over a gate set.
    pub fn gate_set_error(&self, gates: &[(f64, f64)], mm: &MeasurementModel) -> Result<CycleReport, ProtocolError> {
        let reports = gates.iter().map(|&(t, p)| self.entanglement_error(t, p, mm)).collect::<Result<Vec<_>, _>>()?;
        Ok(CycleReport::average(&reports))
    }
}

/// Uncorrected spin-1/2 under the same drive amplitude: `R(θ, φ)` lasting
/// `θ/Ω` with `γ₀₁ = 1/T₂`. Returns `E_e = 1 − F_e²` (six-state average).
pub fn uncorrected_baseline(theta: f64, phi: f64, t2: f64, rabi_max: f64, cfg: &IntegratorConfig) -> Result<f64, ProtocolError> {
    let gamma = if t2.is_infinite() { RateMatrix::zeros(2) } else { RateMatrix::two_level(1.0 / t2) };
    Ok(1.0 - baseline_fidelity(theta, phi, &gamma, rabi_max, cfg)?.powi(2))
}

/// Six-state mean fidelity of the uncorrected two-level rotation.
pub fn baseline_fidelity(theta: f64, phi: f64, gamma: &RateMatrix, rabi_max: f64, cfg: &IntegratorConfig) -> Result<f64, ProtocolError> {
    let h = et_compiler::planar_axis(phi) * c(theta / 2.0, 0.0);
    let tau = theta / rabi_max;
    let g = planar_rotation(theta, phi);
    let mut f = 0.0;
    let states = cardinal_states();
    for psi in &states {
        let rho = projector(psi);
        let out = if tau > 0.0 {
            let seg = EvolutionSegment::from_generator(&h, tau, gamma.clone())?;
            evolve_segment(&rho, &seg, cfg)?
        } else {
            rho
        };
        f += state_fidelity(&(&g * psi), &out);
    }
    Ok(f / states.len() as f64)
}

/// Gate-set average of [`uncorrected_baseline`].
pub fn baseline_gate_set(gates: &[(f64, f64)], t2: f64, rabi_max: f64, cfg: &IntegratorConfig) -> Result<f64, ProtocolError> {
    let mut s = 0.0;
    for &(t, p) in gates {
        s += uncorrected_baseline(t, p, t2, rabi_max, cfg)?;
    }
    Ok(s / gates.len() as f64)
}

//! Logical controlled-phase between two logical qubits `Q₁`, `Q₂` mediated
//! by an encoded switch `S`, followed by error correction on all three units.
//!
//! The units interact through a diagonal conditional shift
//! `λ · N₁ ⊗ P_exc ⊗ N₂`, where `N` projects a neighbour onto its ℓ = 1
//! support and `P_exc` projects the switch onto its ℓ = 1 support. Driving
//! the switch through a closed logical 2π loop that is (semi-)resonant only
//! in the `|1_L 1_L⟩` sector imprints the conditional phase.
//!
//! The neighbours are never driven, and dephasing is diagonal in every
//! unit's eigenbasis. So each `d × d` block of the joint density matrix
//! (fixed indices on the other two units) evolves independently under a
//! linear map that depends only on the logical sectors of those indices,
//! times a scalar idle-decay factor. The engine precomputes these maps and
//! applies them blockwise, which keeps the d = 6 three-unit simulation
//! cheap.

use et_compiler::{cu_generator, embed_logical_generator, pauli_x, recovery_generator, CompileError};
use ftqec_linalg::{c, CMat, CVec};
use dephasing_channel::RateMatrix;
use lindblad_engine::{evolve_block, product_rates, IntegratorConfig, LindbladError};
use qec_protocol::{cardinal_states, LogicalQudit, MeasurementModel, Pipeline, ProtocolError};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SwitchError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error("conditional phase {phi} is unreachable with λ = {lambda:.3e} rad/s, drive ≤ {omega_max:.3e} rad/s and n ≤ {n_max} loops")]
    Unreachable { phi: f64, lambda: f64, omega_max: f64, n_max: u32 },
    #[error("conditional shift λ = {lambda:.3e} rad/s is not resolved: (λ/2π)·T = {ratio:.2} < {min}")]
    Unresolved { lambda: f64, ratio: f64, min: f64 },
    #[error("invalid architecture: {0}")]
    Config(String),
}

/// Architecture section of the pipeline configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureFile {
    pub unit_d: usize,
    /// Conditional shift `λ/2π` (GHz).
    #[serde(rename = "lambda_GHz")]
    pub lambda_ghz: f64,
    /// Target conditional phase (rad).
    pub phi: f64,
    /// Drive amplitude bound (rad/s); defaults to the pipeline's calibrated `Ω`.
    pub rabi_max: Option<f64>,
    /// Largest number of loops allowed in the off-resonant sectors.
    pub n_max: u32,
    /// Minimum `(λ/2π)·T`: the shift in Hz over the drive linewidth `1/T`.
    pub min_resolution: f64,
}

impl Default for ArchitectureFile {
    fn default() -> Self {
        Self { unit_d: 4, lambda_ghz: 0.05, phi: PI, rabi_max: None, n_max: 256, min_resolution: 10.0 }
    }
}

impl ArchitectureFile {
    /// Parse the optional `architecture` value of a pipeline configuration.
    pub fn from_value(v: Option<&serde_json::Value>) -> Result<Self, SwitchError> {
        match v {
            None => Ok(Self::default()),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| SwitchError::Config(e.to_string())),
        }
    }

    pub fn lambda(&self) -> f64 {
        2.0 * PI * self.lambda_ghz * 1e9
    }
}

/// One unit (logical qudit or bare spin-1/2) as seen by the switch engine.
#[derive(Clone, Debug)]
pub struct Unit {
    pub d: usize,
    pub k: usize,
    /// Columns `|ℓ,k⟩`, index `ℓ·K + k`.
    pub words: CMat,
    /// Diagonal of the projector onto the ℓ = 1 support.
    pub excited: Vec<f64>,
    /// `X_L ⊗ I_K` in the eigenbasis.
    pub logical_x: CMat,
    /// Rates during evolution.
    pub rates: RateMatrix,
    /// Error correction, absent for bare spins.
    pub ec: Option<EcMaps>,
}

/// Stabilize–measure–recover on one unit as linear maps on its `d × d`
/// blocks: reported syndrome `j` contributes `e^{−g(τ_CU + τ_j)} L_j(X)`,
/// `g` being the idle decay rate of the block on the other units.
#[derive(Clone, Debug)]
pub struct EcMaps {
    pub cu_duration: f64,
    /// `(L_j, τ_j)` per reported syndrome.
    pub branches: Vec<(CMat, f64)>,
}

impl Unit {
    /// Logical qudit with its code and noise; error correction uses the
    /// measurement model `mm`.
    pub fn from_qudit(q: &LogicalQudit, mm: &MeasurementModel) -> Result<Self, SwitchError> {
        let d = q.d;
        let excited = q.codewords.support_projector(1).iter().copied().collect();
        let ec = ec_maps(q, mm)?;
        Ok(Self {
            d,
            k: q.k,
            words: q.basis.vectors.clone(),
            excited,
            logical_x: embed_logical_generator(&pauli_x(), &q.basis),
            rates: q.evolution_rates.clone(),
            ec: Some(ec),
        })
    }

    /// Uncorrected spin-1/2 with `γ₀₁ = 1/T₂` (no dephasing for infinite `T₂`).
    pub fn spin_half(t2: f64) -> Self {
        let rates = if t2.is_finite() { RateMatrix::two_level(1.0 / t2) } else { RateMatrix::zeros(2) };
        Self { d: 2, k: 1, words: CMat::identity(2, 2), excited: vec![0.0, 1.0], logical_x: pauli_x(), rates, ec: None }
    }

    /// `max |X̃_mn|`: the logical Rabi frequency is at most `Ω_max/κ`.
    pub fn kappa(&self) -> f64 {
        ftqec_linalg::max_abs(&self.logical_x)
    }

    fn sector(&self, i: usize) -> usize {
        (self.excited[i] > 0.5) as usize
    }
}

/// Linear map on `d × d` matrices as a `d² × d²` matrix on column-major `vec`.
fn build_map(d: usize, mut f: impl FnMut(&CMat) -> Result<CMat, SwitchError>) -> Result<CMat, SwitchError> {
    let mut m = CMat::zeros(d * d, d * d);
    for col in 0..d * d {
        let mut e = CMat::zeros(d, d);
        e[(col % d, col / d)] = c(1.0, 0.0);
        let out = f(&e)?;
        m.set_column(col, &CVec::from_column_slice(out.as_slice()));
    }
    Ok(m)
}

fn apply_map(m: &CMat, x: &CMat) -> CMat {
    let d = x.nrows();
    let v = m * CVec::from_column_slice(x.as_slice());
    CMat::from_column_slice(d, d, v.as_slice())
}

fn ec_maps(q: &LogicalQudit, mm: &MeasurementModel) -> Result<EcMaps, SwitchError> {
    let (d, kk) = (q.d, q.k);
    let cu = cu_generator(&q.basis);
    let cu_duration = cu.duration(q.rabi);
    let h_cu = &cu.h_tilde / c(cu_duration, 0.0);
    let g_joint = product_rates(&q.evolution_rates, &q.ancilla_rates).gamma;
    let conf = mm.confusion(kk);
    let mut anc = CMat::zeros(kk, kk);
    anc[(0, 0)] = c(1.0, 0.0);
    // CU then projection onto each true syndrome, for every matrix unit
    let mut true_maps: Vec<CMat> = vec![CMat::zeros(d * d, d * d); kk];
    for col in 0..d * d {
        let mut e = CMat::zeros(d, d);
        e[(col % d, col / d)] = c(1.0, 0.0);
        let joint = evolve_block(&e.kronecker(&anc), &h_cu, &h_cu, &g_joint, cu_duration, &q.integrator)?;
        for (k, m) in true_maps.iter_mut().enumerate() {
            let b = CMat::from_fn(d, d, |i, j| joint[(i * kk + k, j * kk + k)]);
            m.set_column(col, &CVec::from_column_slice(b.as_slice()));
        }
    }
    let mut branches = vec![];
    for j in 0..kk {
        let mut measured = CMat::zeros(d * d, d * d);
        for (k, m) in true_maps.iter().enumerate() {
            if conf[(j, k)] != 0.0 {
                measured += m * c(conf[(j, k)], 0.0);
            }
        }
        let r = recovery_generator(&q.basis, j)?;
        let tau = r.duration(q.rabi);
        let recovery = if tau == 0.0 {
            CMat::identity(d * d, d * d)
        } else {
            let h = &r.h_tilde / c(tau, 0.0);
            build_map(d, |x| Ok(evolve_block(x, &h, &h, &q.evolution_rates.gamma, tau, &q.integrator)?))?
        };
        branches.push((recovery * measured, tau));
    }
    Ok(EcMaps { cu_duration, branches })
}

/// Semi-resonant 2π loop of the switch.
///
/// With logical Rabi frequency `Ω` and detuning `Δ`, a two-level system
/// started in `|0⟩` returns after `T = 2π/Ω'` (`Ω' = √(Ω² + Δ²)`) with phase
/// `π − πΔ/Ω'`. The `|1_L 1_L⟩` sector is detuned by `δ = cΩ'`, the other
/// sectors by `δ − λ = (c − x)Ω'`. Requiring the latter to complete exactly
/// `n` loops gives `c = (x² − n² + 1)/2x`, and the conditional phase is
/// `π(1 − n − x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CPhaseSchedule {
    pub phi: f64,
    pub lambda: f64,
    /// Loops completed by the off-resonant sectors (0: no pulse).
    pub n: u32,
    /// `λ/Ω'`.
    pub x: f64,
    /// `δ/Ω'`.
    pub c: f64,
    /// Logical Rabi frequency `Ω` (rad/s).
    pub omega: f64,
    /// Detuning `δ` of the `|1_L 1_L⟩` sector (rad/s).
    pub delta: f64,
    pub duration: f64,
}

impl CPhaseSchedule {
    /// Fastest loop with `Ω ≤ omega_max`, `(λ/2π)T ≥ min_resolution` and at most
    /// `n_max` off-resonant loops. `φ ≡ 0` is the far-detuned limit (no pulse).
    pub fn semi_resonant(phi: f64, lambda: f64, omega_max: f64, n_max: u32, min_resolution: f64) -> Result<Self, SwitchError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(SwitchError::Unresolved { lambda, ratio: 0.0, min: min_resolution });
        }
        if !(omega_max > 0.0) || !phi.is_finite() {
            return Err(SwitchError::Config(format!("need a positive drive bound and a finite phase, got Ω = {omega_max}, φ = {phi}")));
        }
        let r = phi.rem_euclid(2.0 * PI);
        if r < 1e-12 || 2.0 * PI - r < 1e-12 {
            return Ok(Self { phi, lambda, n: 0, x: f64::INFINITY, c: 0.0, omega: 0.0, delta: 0.0, duration: 0.0 });
        }
        let mut best: Option<Self> = None;
        for n in 1..=n_max {
            let nf = n as f64;
            // x ≡ 1 − n − φ/π (mod 2), inside (n − 1, n + 1)
            let base = (1.0 - nf - r / PI).rem_euclid(2.0);
            let mut x = base + 2.0 * ((nf - 1.0 - base) / 2.0).floor();
            while x <= nf - 1.0 {
                x += 2.0;
            }
            while x < nf + 1.0 {
                if x > 0.0 {
                    let cc = (x * x - nf * nf + 1.0) / (2.0 * x);
                    let wp = lambda / x;
                    let omega = wp * (1.0 - cc * cc).max(0.0).sqrt();
                    let duration = 2.0 * PI / wp;
                    if cc.abs() < 1.0 && omega <= omega_max && lambda * duration / (2.0 * PI) >= min_resolution && best.as_ref().is_none_or(|b| duration < b.duration) {
                        best = Some(Self { phi, lambda, n, x, c: cc, omega, delta: cc * wp, duration });
                    }
                }
                x += 2.0;
            }
        }
        best.ok_or(SwitchError::Unreachable { phi, lambda, omega_max, n_max })
    }

    /// Switch Hamiltonian (rotating frame) in a given neighbour sector.
    pub fn switch_hamiltonian(&self, switch: &Unit, resonant: bool) -> CMat {
        let d = switch.d;
        if self.n == 0 {
            return CMat::zeros(d, d);
        }
        let det = if resonant { self.delta } else { self.delta - self.lambda };
        let mut h = &switch.logical_x * c(self.omega / 2.0, 0.0);
        for (i, &e) in switch.excited.iter().enumerate() {
            h[(i, i)] += c(det * e, 0.0);
        }
        h
    }

    /// Ideal logical gate `diag(1, 1, 1, e^{iφ})` on `Q₁ ⊗ Q₂`.
    pub fn ideal(&self) -> CMat {
        let mut u = CMat::identity(4, 4);
        u[(3, 3)] = c(0.0, self.phi).exp();
        u
    }
}

/// Static diagonal energies of three units plus the conditional shift
/// `λ N₁ ⊗ P_exc ⊗ N₂` (rad/s), index `(i₁·d_S + s)·d₂ + i₂`.
pub fn static_hamiltonian(units: [&Unit; 3], energies: [&[f64]; 3], lambda: f64) -> CMat {
    let [a, s, b] = units;
    let n = a.d * s.d * b.d;
    let mut h = CMat::zeros(n, n);
    for i in 0..a.d {
        for j in 0..s.d {
            for k in 0..b.d {
                let idx = (i * s.d + j) * b.d + k;
                let e = 2.0 * PI * 1e9 * (energies[0][i] + energies[1][j] + energies[2][k]);
                h[(idx, idx)] = c(e + lambda * a.excited[i] * s.excited[j] * b.excited[k], 0.0);
            }
        }
    }
    h
}

/// Drive Hamiltonian of the whole loop on the joint space (rotating frame).
pub fn joint_drive_hamiltonian(sched: &CPhaseSchedule, units: [&Unit; 3]) -> CMat {
    let [a, s, b] = units;
    let on = sched.switch_hamiltonian(s, true);
    let off = sched.switch_hamiltonian(s, false);
    let n = a.d * s.d * b.d;
    let mut h = CMat::zeros(n, n);
    for i in 0..a.d {
        for k in 0..b.d {
            let hs = if a.sector(i) == 1 && b.sector(k) == 1 { &on } else { &off };
            for p in 0..s.d {
                for q in 0..s.d {
                    h[((i * s.d + p) * b.d + k, (i * s.d + q) * b.d + k)] = hs[(p, q)];
                }
            }
        }
    }
    h
}

/// Apply `f(I, J, X)` to every nonzero `d_u × d_u` block of `ρ` on unit `u`,
/// `I`, `J` being the indices of the other two units (in order).
fn map_unit_blocks(rho: &CMat, dims: [usize; 3], u: usize, f: impl Fn([usize; 2], [usize; 2], &CMat) -> CMat) -> CMat {
    let du = dims[u];
    let others: Vec<usize> = (0..3).filter(|&v| v != u).collect();
    let (n0, n1) = (dims[others[0]], dims[others[1]]);
    let index = |o: [usize; 2], x: usize| {
        let mut idx = [0usize; 3];
        idx[others[0]] = o[0];
        idx[others[1]] = o[1];
        idx[u] = x;
        (idx[0] * dims[1] + idx[1]) * dims[2] + idx[2]
    };
    let mut out = CMat::zeros(rho.nrows(), rho.ncols());
    let pairs: Vec<[usize; 2]> = (0..n0).flat_map(|a| (0..n1).map(move |b| [a, b])).collect();
    for &oi in &pairs {
        for &oj in &pairs {
            let x = CMat::from_fn(du, du, |p, q| rho[(index(oi, p), index(oj, q))]);
            if x.iter().all(|z| *z == c(0.0, 0.0)) {
                continue;
            }
            let y = f(oi, oj, &x);
            for p in 0..du {
                for q in 0..du {
                    out[(index(oi, p), index(oj, q))] = y[(p, q)];
                }
            }
        }
    }
    out
}

/// Per-point report of the C-φ + EC cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitReport {
    /// Unit dimension (2 for the uncorrected spins).
    pub d: usize,
    pub t2: f64,
    pub phi: f64,
    pub gate_duration: f64,
    pub loops: u32,
    /// Fidelities for the 16 product states `{0,1,+,+i}⊗{0,1,+,+i}`.
    pub fidelity_per_state: Vec<f64>,
    pub f_e: f64,
    pub e_e: f64,
    pub f_e_code_block: f64,
    pub e_e_code_block: f64,
    /// Mean population outside the code blocks of the three units.
    pub leakage: f64,
    /// Mean population of the switch ℓ = 1 (traced) after the cycle.
    pub switch_excitation: f64,
    pub approximate_code: bool,
}

/// Three units and the compiled loop.
#[derive(Clone, Debug)]
pub struct SwitchArchitecture {
    pub unit: Unit,
    pub schedule: CPhaseSchedule,
    pub integrator: IntegratorConfig,
    pub t2: f64,
    pub approximate_code: bool,
    /// Gate maps indexed by `[resonant(I)][resonant(J)]`.
    gate_maps: [[CMat; 2]; 2],
}

impl SwitchArchitecture {
    /// Encoded architecture at coherence time `t2` (noiseless evolution if
    /// `noiseless`).
    pub fn encoded(pipeline: &Pipeline, arch: &ArchitectureFile, t2: f64, mm: &MeasurementModel, noiseless: bool) -> Result<Self, SwitchError> {
        if arch.unit_d < 4 || arch.unit_d % 2 != 0 {
            return Err(SwitchError::Config(format!("unit_d must be even and ≥ 4, got {}", arch.unit_d)));
        }
        let q = if noiseless { pipeline.noiseless_qudit(arch.unit_d, t2)? } else { pipeline.qudit(arch.unit_d, t2)? };
        let unit = Unit::from_qudit(&q, mm)?;
        let omega_max = arch.rabi_max.unwrap_or(pipeline.rabi);
        Self::build(unit, arch, omega_max, pipeline.integrator, t2, q.approximate)
    }

    /// Uncorrected reference: three spin-1/2 with `γ₀₁ = 1/T₂`, same drive bound.
    pub fn uncorrected(pipeline: &Pipeline, arch: &ArchitectureFile, t2: f64) -> Result<Self, SwitchError> {
        let omega_max = arch.rabi_max.unwrap_or(pipeline.rabi);
        Self::build(Unit::spin_half(t2), arch, omega_max, pipeline.integrator, t2, false)
    }

    pub fn build(unit: Unit, arch: &ArchitectureFile, omega_max: f64, integrator: IntegratorConfig, t2: f64, approximate_code: bool) -> Result<Self, SwitchError> {
        let schedule = CPhaseSchedule::semi_resonant(arch.phi, arch.lambda(), omega_max / unit.kappa(), arch.n_max, arch.min_resolution)?;
        let hs = [schedule.switch_hamiltonian(&unit, false), schedule.switch_hamiltonian(&unit, true)];
        let d = unit.d;
        let mut maps: Vec<CMat> = vec![];
        for a in 0..2 {
            for b in 0..2 {
                maps.push(build_map(d, |x| Ok(evolve_block(x, &hs[a], &hs[b], &unit.rates.gamma, schedule.duration, &integrator)?))?);
            }
        }
        let gate_maps = [[maps[0].clone(), maps[1].clone()], [maps[2].clone(), maps[3].clone()]];
        Ok(Self { unit, schedule, integrator, t2, approximate_code, gate_maps })
    }

    pub fn dim(&self) -> usize {
        self.unit.d.pow(3)
    }

    /// Ideal encoding of `|a⟩⟨b|` (two-qubit logical basis indices) with the
    /// switch in `|0_L⟩`.
    pub fn encode_operator(&self, a: usize, b: usize) -> CMat {
        let w = |l: usize| self.unit.words.column(l * self.unit.k).into_owned();
        let v = |x: usize| w(x >> 1).kronecker(&w(0)).kronecker(&w(x & 1));
        v(a) * v(b).adjoint()
    }

    /// The C-φ loop under dephasing (neighbours idle).
    pub fn apply_gate(&self, rho: &CMat) -> CMat {
        if self.schedule.n == 0 {
            return rho.clone();
        }
        let u = &self.unit;
        let g = &u.rates.gamma;
        let t = self.schedule.duration;
        map_unit_blocks(rho, [u.d; 3], 1, |i, j, x| {
            let ri = u.sector(i[0]) & u.sector(i[1]);
            let rj = u.sector(j[0]) & u.sector(j[1]);
            let idle = (-(g[(i[0], j[0])] + g[(i[1], j[1])]) * t).exp();
            apply_map(&self.gate_maps[ri][rj], x) * c(idle, 0.0)
        })
    }

    /// Stabilize, measure and recover unit `u` (others idle); branches summed.
    pub fn correct_unit(&self, rho: &CMat, u: usize) -> CMat {
        let unit = &self.unit;
        let Some(ec) = &unit.ec else { return rho.clone() };
        let g = &unit.rates.gamma;
        map_unit_blocks(rho, [unit.d; 3], u, |i, j, x| {
            let rate = g[(i[0], j[0])] + g[(i[1], j[1])];
            let mut y = CMat::zeros(x.nrows(), x.ncols());
            for (m, tau) in &ec.branches {
                y += apply_map(m, x) * c((-rate * (ec.cu_duration + tau)).exp(), 0.0);
            }
            y
        })
    }

    /// Gate then sequential correction of `Q₁`, `S`, `Q₂`.
    pub fn run_cycle(&self, rho: &CMat) -> CMat {
        let mut rho = self.apply_gate(rho);
        for u in 0..3 {
            rho = self.correct_unit(&rho, u);
        }
        rho
    }

    /// Logical three-qubit state `(Q₁, S, Q₂)`: traced over the syndromes,
    /// and restricted to the code blocks.
    pub fn decode(&self, rho: &CMat) -> (CMat, CMat) {
        let u = &self.unit;
        let kk = u.k;
        let w3 = u.words.kronecker(&u.words).kronecker(&u.words);
        let eb = w3.adjoint() * rho * &w3;
        let m = 2 * kk;
        let idx = |l: [usize; 3], k: [usize; 3]| ((l[0] * kk + k[0]) * m + l[1] * kk + k[1]) * m + l[2] * kk + k[2];
        let bits = |x: usize| [(x >> 2) & 1, (x >> 1) & 1, x & 1];
        let mut traced = CMat::zeros(8, 8);
        let mut block = CMat::zeros(8, 8);
        for a in 0..8 {
            for b in 0..8 {
                for k0 in 0..kk {
                    for k1 in 0..kk {
                        for k2 in 0..kk {
                            traced[(a, b)] += eb[(idx(bits(a), [k0, k1, k2]), idx(bits(b), [k0, k1, k2]))];
                        }
                    }
                }
                block[(a, b)] = eb[(idx(bits(a), [0; 3]), idx(bits(b), [0; 3]))];
            }
        }
        (traced, block)
    }

    /// The logical channel of one cycle on `Q₁ ⊗ Q₂` (switch in `|0_L⟩`):
    /// decoded outputs `(traced, code block)` for every `|a⟩⟨b|`.
    pub fn logical_outputs(&self) -> Vec<Vec<(CMat, CMat)>> {
        let mut out = vec![vec![(CMat::zeros(8, 8), CMat::zeros(8, 8)); 4]; 4];
        for a in 0..4 {
            for b in a..4 {
                let r = self.run_cycle(&self.encode_operator(a, b));
                let (t, k) = self.decode(&r);
                out[b][a] = (t.adjoint(), k.adjoint());
                out[a][b] = (t, k);
            }
        }
        out
    }

    /// Sixteen-state mean fidelity and `E_e = 1 − F_e²`.
    pub fn report(&self) -> TwoQubitReport {
        let outs = self.logical_outputs();
        let card = cardinal_states();
        let singles = [&card[0], &card[1], &card[2], &card[4]];
        let ideal = self.schedule.ideal();
        let mut fid = vec![];
        let (mut f_cb, mut leak, mut exc) = (0.0, 0.0, 0.0);
        for p in singles {
            for q in singles {
                let psi = p.kronecker(q);
                let target = &ideal * &psi;
                // |ψ⟩ on (Q₁, Q₂) ↦ |ψ₁, 0_S, ψ₂⟩
                let t3 = CVec::from_fn(8, |x, _| if (x >> 1) & 1 == 0 { target[((x >> 2) << 1) | (x & 1)] } else { c(0.0, 0.0) });
                let mut rt = CMat::zeros(8, 8);
                let mut rb = CMat::zeros(8, 8);
                for a in 0..4 {
                    for b in 0..4 {
                        let w = psi[a] * psi[b].conj();
                        rt += &outs[a][b].0 * w;
                        rb += &outs[a][b].1 * w;
                    }
                }
                fid.push((t3.adjoint() * &rt * &t3)[(0, 0)].re);
                f_cb += (t3.adjoint() * &rb * &t3)[(0, 0)].re;
                leak += 1.0 - rb.trace().re;
                exc += (0..8).filter(|x| (x >> 1) & 1 == 1).map(|x| rt[(x, x)].re).sum::<f64>();
            }
        }
        let n = fid.len() as f64;
        let f_e = fid.iter().sum::<f64>() / n;
        let f_cb = f_cb / n;
        TwoQubitReport {
            d: self.unit.d,
            t2: self.t2,
            phi: self.schedule.phi,
            gate_duration: self.schedule.duration,
            loops: self.schedule.n,
            fidelity_per_state: fid,
            f_e,
            e_e: 1.0 - f_e * f_e,
            f_e_code_block: f_cb,
            e_e_code_block: 1.0 - f_cb * f_cb,
            leakage: leak / n,
            switch_excitation: exc / n,
            approximate_code: self.approximate_code,
        }
    }

    /// Conditional phases `arg⟨ab|U|ab⟩` of the noiseless loop on the
    /// logical basis (switch projected on `|0_L⟩`), relative to `|00⟩`.
    pub fn logical_phases(&self) -> [f64; 4] {
        let outs = self.logical_outputs();
        // ⟨a 0_S|out(a,0)|0 0_S⟩ carries the phase of |a⟩ relative to |00⟩
        let embed = |x: usize| ((x >> 1) << 2) | (x & 1);
        std::array::from_fn(|a| outs[a][0].0[(embed(a), 0)].arg())
    }
}

/// Crossing of two error curves on a common `T₂` grid, interpolated
/// linearly in `(log T₂, log E)`. Returns the smallest `T₂` above which the
/// first curve stays below the second, if the curves cross on the grid.
pub fn crossover(t2: &[f64], corrected: &[f64], reference: &[f64]) -> Option<f64> {
    let diff: Vec<f64> = corrected.iter().zip(reference).map(|(a, b)| a.ln() - b.ln()).collect();
    let n = diff.len();
    if n < 2 || diff[n - 1] >= 0.0 {
        return None;
    }
    // last sign change from ≥ 0 to < 0
    let i = (0..n - 1).rev().find(|&i| diff[i] >= 0.0 && diff[i + 1] < 0.0)?;
    let (x0, x1) = (t2[i].ln(), t2[i + 1].ln());
    let s = diff[i] / (diff[i] - diff[i + 1]);
    Some((x0 + s * (x1 - x0)).exp())
}

/// Rates on `Q₁ ⊗ S ⊗ Q₂` (for dense cross-checks).
pub fn joint_rates(unit: &Unit) -> RateMatrix {
    product_rates(&product_rates(&unit.rates, &unit.rates), &unit.rates)
}


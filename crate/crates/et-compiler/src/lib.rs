//! Error-transparent (ET) compilation of logical operations.
//!
//! Every operation is realised in one step as `U = exp(−iH̃)` with a
//! Hermitian generator `H̃` whose off-diagonal entries (in the qudit
//! eigenbasis) become simultaneous resonant pulses. Logical gates act as
//! `G ⊗ I_K` on the error-basis span `{|ℓ,k⟩}`, so an error that strikes
//! mid-gate is carried along unchanged and can still be corrected.

use code_synthesis::ErrorBasis;
use ftqec_linalg::{c, CMat, CVec, Complex64, ZERO};
use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Off-diagonal entries below this magnitude are not driven.
pub const PULSE_AMPLITUDE_FLOOR: f64 = 1e-12;
/// Largest diagonal entry tolerated in a generator sent to [`schedule_pulses`].
pub const DIAGONAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CompileError {
    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),
    #[error("generator reconstruction failed: ‖exp(−iH̃) − V‖ = {0:.3e}")]
    Reconstruction(f64),
    #[error("generator has diagonal entry {0:.3e}; not realisable with resonant pulses alone")]
    NonzeroDiagonal(f64),
    #[error("generator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("Rabi frequency must be positive, got {0}")]
    BadRabi(f64),
    #[error("rotation angle θ = {0} outside [0, 4π)")]
    BadAngle(f64),
    #[error("syndrome index {k} out of range for K = {kk}")]
    BadSyndrome { k: usize, kk: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Logical operation to compile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogicalGateSpec {
    /// `R(θ, φ) = exp[−i(cosφ Y − sinφ X)θ/2]`.
    Planar { theta: f64, phi: f64 },
    /// Controlled map of error `k` onto ancilla level `k`.
    Cu,
    /// `|ℓ,k⟩ ↦ |ℓ,0⟩`.
    Recovery { k: usize },
}

/// Hermitian generator `H̃` (dimensionless pulse areas), `U = exp(−iH̃)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMatrix {
    pub h_tilde: CMat,
}

impl GeneratorMatrix {
    pub fn new(h_tilde: CMat) -> Result<Self, CompileError> {
        let scale = ftqec_linalg::frob(&h_tilde).max(1.0);
        let r = ftqec_linalg::hermiticity_residual(&h_tilde);
        if r > 1e-12 * scale {
            return Err(CompileError::NotHermitian(r));
        }
        let h = (&h_tilde + h_tilde.adjoint()) * c(0.5, 0.0);
        Ok(Self { h_tilde: h })
    }

    pub fn dim(&self) -> usize {
        self.h_tilde.nrows()
    }

    pub fn max_diagonal(&self) -> f64 {
        self.h_tilde.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `exp(−iH̃)`.
    pub fn unitary(&self) -> CMat {
        ftqec_linalg::expm_herm(&self.h_tilde, 1.0)
    }

    /// Largest single-pulse area `max 2|H̃_mn|`.
    pub fn max_area(&self) -> f64 {
        let n = self.dim();
        let mut best = 0.0f64;
        for m in 0..n {
            for k in m + 1..n {
                best = best.max(2.0 * self.h_tilde[(m, k)].norm());
            }
        }
        best
    }

    /// Duration at drive amplitude `rabi_max` (rad/s).
    pub fn duration(&self, rabi_max: f64) -> f64 {
        self.max_area() / rabi_max
    }
}

/// Pauli matrices in the logical `{0_L, 1_L}` basis.
pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, c(1.0, 0.0), c(1.0, 0.0), ZERO])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), ZERO, ZERO, c(-1.0, 0.0)])
}

/// Logical rotation axis `(cosφ Y − sinφ X)`.
pub fn planar_axis(phi: f64) -> CMat {
    pauli_y() * c(phi.cos(), 0.0) - pauli_x() * c(phi.sin(), 0.0)
}

/// The 2×2 rotation `R(θ, φ)`.
pub fn planar_rotation(theta: f64, phi: f64) -> CMat {
    // the axis squares to I, so exp(−iAθ/2) = cos(θ/2) I − i sin(θ/2) A
    let a = planar_axis(phi);
    CMat::identity(2, 2) * c((theta / 2.0).cos(), 0.0) - a * c(0.0, (theta / 2.0).sin())
}

/// Matrix `B` whose columns are the error words (`d × 2K`).
fn basis_matrix(basis: &ErrorBasis) -> &CMat {
    &basis.vectors
}

/// `V = B (G ⊗ I_K) B† + (I − BB†)`.
pub fn embed_logical(g: &CMat, basis: &ErrorBasis) -> Result<CMat, CompileError> {
    if g.nrows() != 2 || g.ncols() != 2 {
        return Err(CompileError::Dimension(format!("logical gate is {}×{}", g.nrows(), g.ncols())));
    }
    let r = ftqec_linalg::unitarity_residual(g);
    if r > 1e-12 {
        return Err(CompileError::NotUnitary(r));
    }
    let b = basis_matrix(basis);
    let gk = g.kronecker(&CMat::identity(basis.k, basis.k));
    let proj = b * b.adjoint();
    Ok(b * gk * b.adjoint() + CMat::identity(basis.d, basis.d) - proj)
}

/// Lift a logical-space operator `A` (2×2) to `B (A ⊗ I_K) B†`, zero on the complement.
pub fn embed_logical_generator(a: &CMat, basis: &ErrorBasis) -> CMat {
    let b = basis_matrix(basis);
    b * a.kronecker(&CMat::identity(basis.k, basis.k)) * b.adjoint()
}

/// Zero-diagonal generator of `R(θ, φ) ⊗ I_K` on the error span.
pub fn planar_generator(theta: f64, phi: f64, basis: &ErrorBasis) -> Result<GeneratorMatrix, CompileError> {
    if !(0.0..4.0 * PI).contains(&theta) {
        return Err(CompileError::BadAngle(theta));
    }
    GeneratorMatrix::new(embed_logical_generator(&(planar_axis(phi) * c(theta / 2.0, 0.0)), basis))
}

/// `(π/2)(i|b⟩⟨a| − i|a⟩⟨b|)` for orthonormal `a`, `b`: its exponential maps
/// `a ↦ b`, `b ↦ −a` and is the identity elsewhere.
pub fn pair_swap_generator(a: &CVec, b: &CVec) -> CMat {
    let ba = b * a.adjoint();
    let ab = a * b.adjoint();
    (ba * c(0.0, 1.0) - ab * c(0.0, 1.0)) * c(PI / 2.0, 0.0)
}

/// `|ℓ,k⟩ ⊗ |j⟩` on qudit ⊗ ancilla (ancilla index fastest).
fn with_ancilla(v: &CVec, j: usize, kk: usize) -> CVec {
    let mut e = CVec::zeros(kk);
    e[j] = c(1.0, 0.0);
    v.kronecker(&e)
}

/// Generator of the CU step on qudit ⊗ ancilla (ancilla has `K` levels).
pub fn cu_generator(basis: &ErrorBasis) -> GeneratorMatrix {
    let kk = basis.k;
    let n = basis.d * kk;
    let mut h = CMat::zeros(n, n);
    for l in 0..2 {
        for k in 1..kk {
            let w = basis.word(l, k);
            h += pair_swap_generator(&with_ancilla(&w, 0, kk), &with_ancilla(&w, k, kk));
        }
    }
    GeneratorMatrix { h_tilde: h }
}

/// CU: `|ℓ,k⟩|0⟩ ↦ |ℓ,k⟩|k⟩`, `|ℓ,k⟩|k⟩ ↦ −|ℓ,k⟩|0⟩`, identity otherwise.
pub fn cu_unitary(basis: &ErrorBasis, ancilla_dim: usize) -> Result<CMat, CompileError> {
    if ancilla_dim != basis.k {
        return Err(CompileError::Dimension(format!("ancilla has {ancilla_dim} levels, K = {}", basis.k)));
    }
    let kk = basis.k;
    let n = basis.d * kk;
    let mut v = CMat::identity(n, n);
    for l in 0..2 {
        for k in 1..kk {
            let w = basis.word(l, k);
            let a = with_ancilla(&w, 0, kk);
            let b = with_ancilla(&w, k, kk);
            // replace the identity on span{a, b} by a ↦ b, b ↦ −a
            v += &b * a.adjoint() - &a * b.adjoint() - &a * a.adjoint() - &b * b.adjoint();
        }
    }
    Ok(v)
}

/// Generator of the recovery `R_k`; zero matrix for `k = 0`.
pub fn recovery_generator(basis: &ErrorBasis, k: usize) -> Result<GeneratorMatrix, CompileError> {
    if k >= basis.k {
        return Err(CompileError::BadSyndrome { k, kk: basis.k });
    }
    let mut h = CMat::zeros(basis.d, basis.d);
    if k > 0 {
        for l in 0..2 {
            h += pair_swap_generator(&basis.word(l, k), &basis.word(l, 0));
        }
    }
    Ok(GeneratorMatrix { h_tilde: h })
}

/// Recovery `R_k`: `|ℓ,k⟩ ↦ |ℓ,0⟩`, `|ℓ,0⟩ ↦ −|ℓ,k⟩`, identity elsewhere.
/// Returns `(V, flagged)`; `k = 0` is the flagged identity.
pub fn recovery_unitary(basis: &ErrorBasis, k: usize) -> Result<(CMat, bool), CompileError> {
    if k >= basis.k {
        return Err(CompileError::BadSyndrome { k, kk: basis.k });
    }
    let mut v = CMat::identity(basis.d, basis.d);
    if k == 0 {
        return Ok((v, true));
    }
    for l in 0..2 {
        let a = basis.word(l, k);
        let b = basis.word(l, 0);
        v += &b * a.adjoint() - &a * b.adjoint() - &a * a.adjoint() - &b * b.adjoint();
    }
    Ok((v, false))
}

/// Generator of any supported logical operation (qudit-only for planar and
/// recovery, qudit ⊗ ancilla for CU).
pub fn compile(spec: LogicalGateSpec, basis: &ErrorBasis) -> Result<GeneratorMatrix, CompileError> {
    match spec {
        LogicalGateSpec::Planar { theta, phi } => planar_generator(theta, phi, basis),
        LogicalGateSpec::Cu => Ok(cu_generator(basis)),
        LogicalGateSpec::Recovery { k } => recovery_generator(basis, k),
    }
}

/// `H̃ = i log V` on the principal branch: eigenphases `φ` with
/// `exp(−iφ) = λ` taken in `(−π, π]`, eigenvalue `−1` ↦ `π`.
pub fn generator_of(v: &CMat) -> Result<GeneratorMatrix, CompileError> {
    let n = v.nrows();
    let r = ftqec_linalg::unitarity_residual(v);
    if r > 1e-10 * (n as f64).sqrt().max(1.0) {
        return Err(CompileError::NotUnitary(r));
    }
    let (phases, w) = unitary_eigh(v);
    let mut h = CMat::zeros(n, n);
    for (m, lam) in phases.iter().enumerate() {
        let mut phi = -lam.arg();
        // (−π, π] with values within round-off of −π sent to +π
        if phi <= -PI + 1e-9 {
            phi += 2.0 * PI;
        }
        let col = w.column(m);
        h += col * col.adjoint() * c(phi, 0.0);
    }
    let h = (&h + h.adjoint()) * c(0.5, 0.0);
    let back = ftqec_linalg::expm_herm(&h, 1.0);
    let err = ftqec_linalg::frob(&(back - v));
    if err > 1e-9 {
        return Err(CompileError::Reconstruction(err));
    }
    Ok(GeneratorMatrix { h_tilde: h })
}

/// Eigendecomposition of a unitary (normal) matrix through its commuting
/// Hermitian parts `A = (V + V†)/2`, `B = (V − V†)/2i`.
///
/// `A + αB` is diagonalised first; eigenvalue clusters of that combination
/// are then split by diagonalising `B` inside each cluster. Returns the
/// eigenvalues `w†Vw` and the orthonormal eigenvectors as columns.
fn unitary_eigh(v: &CMat) -> (Vec<Complex64>, CMat) {
    const ALPHA: f64 = 0.577_215_664_901_532_9;
    let n = v.nrows();
    let a = (v + v.adjoint()) * c(0.5, 0.0);
    let b = (v - v.adjoint()) * c(0.0, -0.5);
    let (w, q) = ftqec_linalg::eigh(&(&a + &b * c(ALPHA, 0.0)));
    let mut out = CMat::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && w[end] - w[end - 1] < 1e-8 {
            end += 1;
        }
        let block = q.columns(start, end - start).into_owned();
        if end - start == 1 {
            out.set_column(start, &block.column(0));
        } else {
            let (_, r) = ftqec_linalg::eigh(&(block.adjoint() * &b * &block));
            out.columns_mut(start, end - start).copy_from(&(&block * r));
        }
        start = end;
    }
    let lambdas = (0..n).map(|m| (out.column(m).adjoint() * v * out.column(m))[(0, 0)]).collect();
    (lambdas, out)
}

/// One simultaneous resonant pulse between eigenstates `m < n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub pair: (usize, usize),
    /// Pulse area `θ = 2|H̃_mn|` (rad).
    pub area: f64,
    /// Phase `arg H̃_mn` in `(−π, π]`.
    pub phase: f64,
    /// Transition frequency `(E_n − E_m)` (rad/s).
    pub omega: f64,
}

/// Spectral crowding among driven transitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishabilityReport {
    /// Smallest `| |ω_a| − |ω_b| |` between two driven transitions (rad/s);
    /// `None` with fewer than two pulses.
    pub min_gap_difference: Option<f64>,
    pub linewidth: f64,
    /// Pairs of pulse indices whose frequencies lie within the linewidth.
    pub crowded: Vec<(usize, usize)>,
}

impl DistinguishabilityReport {
    pub fn ok(&self) -> bool {
        self.crowded.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub pulses: Vec<Pulse>,
    /// `τ = max θ_j / Ω` (s).
    pub duration: f64,
    /// `Ω` (rad/s).
    pub rabi_max: f64,
    pub report: DistinguishabilityReport,
}

/// Options for [`schedule_pulses`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    /// Minimum resolvable frequency separation (rad/s).
    pub linewidth: f64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        // 1 MHz
        Self { linewidth: 2.0 * PI * 1e6 }
    }
}

/// Turn a zero-diagonal generator into simultaneous resonant pulses.
/// `energies_ghz` are the eigenenergies of the levels `H̃` acts on.
pub fn schedule_pulses(h: &GeneratorMatrix, energies_ghz: &[f64], rabi_max: f64, opts: ScheduleOptions) -> Result<PulseSchedule, CompileError> {
    if rabi_max.is_nan() || rabi_max <= 0.0 {
        return Err(CompileError::BadRabi(rabi_max));
    }
    let n = h.dim();
    if energies_ghz.len() != n {
        return Err(CompileError::Dimension(format!("{} energies for a {n}-level generator", energies_ghz.len())));
    }
    let diag = h.max_diagonal();
    if diag > DIAGONAL_TOLERANCE {
        return Err(CompileError::NonzeroDiagonal(diag));
    }
    let mut pulses = vec![];
    for m in 0..n {
        for k in m + 1..n {
            let z: Complex<f64> = h.h_tilde[(m, k)];
            if z.norm() > PULSE_AMPLITUDE_FLOOR {
                pulses.push(Pulse {
                    pair: (m, k),
                    area: 2.0 * z.norm(),
                    phase: z.arg(),
                    omega: 2.0 * PI * 1e9 * (energies_ghz[k] - energies_ghz[m]),
                });
            }
        }
    }
    let duration = pulses.iter().map(|p| p.area).fold(0.0, f64::max) / rabi_max;
    let mut min_gap: Option<f64> = None;
    let mut crowded = vec![];
    for a in 0..pulses.len() {
        for b in a + 1..pulses.len() {
            let diff = (pulses[a].omega.abs() - pulses[b].omega.abs()).abs();
            min_gap = Some(min_gap.map_or(diff, |g| g.min(diff)));
            if diff < opts.linewidth {
                crowded.push((a, b));
            }
        }
    }
    Ok(PulseSchedule {
        pulses,
        duration,
        rabi_max,
        report: DistinguishabilityReport { min_gap_difference: min_gap, linewidth: opts.linewidth, crowded },
    })
}

/// Drive amplitude `Ω` (rad/s) at which `reference` takes `duration` seconds.
pub fn calibrate_rabi(reference: &GeneratorMatrix, duration: f64) -> Result<f64, CompileError> {
    let area = reference.max_area();
    if area == 0.0 || duration <= 0.0 {
        return Err(CompileError::BadRabi(0.0));
    }
    Ok(area / duration)
}

/// Representation `B† U B` of an operator on the error span.
pub fn in_error_basis(u: &CMat, basis: &ErrorBasis) -> CMat {
    basis.vectors.adjoint() * u * &basis.vectors
}

/// Largest deviation of `B† U B` from `G ⊗ I_K`.
pub fn et_block_residual(u: &CMat, g: &CMat, basis: &ErrorBasis) -> f64 {
    let rep = in_error_basis(u, basis);
    ftqec_linalg::max_abs(&(rep - g.kronecker(&CMat::identity(basis.k, basis.k))))
}

/// `|tr(A†B)| / n`, the gate fidelity between two `n`-dimensional unitaries
/// up to a global phase.
pub fn unitary_overlap(a: &CMat, b: &CMat) -> f64 {
    (a.adjoint() * b).trace().norm() / a.nrows() as f64
}

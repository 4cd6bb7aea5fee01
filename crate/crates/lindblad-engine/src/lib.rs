//! Lindblad evolution under a piecewise-constant drive and pure dephasing:
//!
//! ```text
//! dρ/dt = −i[H, ρ] + D(ρ),   D(ρ)_ij = −γ_ij ρ_ij
//! ```
//!
//! The dissipator is defined in the static eigenbasis. Integration is RK4
//! in the interaction picture of the (piecewise-constant) drive, at a fixed
//! step chosen so that `dt·(2‖H‖∞ + max γ)` stays below `dt_cap`. The
//! factor 2 bounds the commutator superoperator: coherences rotate at
//! eigenvalue *differences* of `H`. Because the drive is propagated exactly,
//! the integration error scales with the dephasing rates. [`evolve_block`] integrates one block `X = ρ_ab` of a
//! larger density matrix whose drive is block-diagonal,
//! `dX/dt = −i(H_a X − X H_b) − Γ∘X`, which is how large composite systems
//! are evolved without forming the full state.

use dephasing_channel::{apply_dephasing, DephasingError, RateMatrix};
use ftqec_linalg::{c, CMat, RMat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LindbladError {
    #[error("step requirement needs {needed} steps, cap is {cap}")]
    TooManySteps { needed: u64, cap: u64 },
    #[error("relative trace drift {0:.3e} exceeds tolerance")]
    TraceDrift(f64),
    #[error("minimum eigenvalue {0:.3e} below positivity tolerance")]
    Positivity(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("negative duration {0}")]
    NegativeDuration(f64),
    #[error(transparent)]
    Dephasing(#[from] DephasingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Largest relative trace change that is silently renormalised.
    pub trace_drift: f64,
    /// Most negative eigenvalue tolerated in the output state.
    pub positivity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Upper bound on `dt·(2‖H‖∞ + max γ)`.
    pub dt_cap: f64,
    /// Maximum number of RK4 steps per segment.
    pub n_max: u64,
    pub tolerances: Tolerances,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt_cap: 0.05, n_max: 2_000_000, tolerances: Tolerances { trace_drift: 1e-9, positivity: 1e-8 } }
    }
}

/// Constant drive `H_eff = H̃/τ` (rad/s) with dephasing over `duration` s.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionSegment {
    pub h_eff: CMat,
    pub duration: f64,
    pub gamma: RateMatrix,
}

impl EvolutionSegment {
    pub fn new(h_eff: CMat, duration: f64, gamma: RateMatrix) -> Result<Self, LindbladError> {
        if duration < 0.0 {
            return Err(LindbladError::NegativeDuration(duration));
        }
        if h_eff.nrows() != gamma.dim() || h_eff.ncols() != gamma.dim() {
            return Err(LindbladError::Dimension(format!("H is {}×{}, γ is {}", h_eff.nrows(), h_eff.ncols(), gamma.dim())));
        }
        Ok(Self { h_eff, duration, gamma })
    }

    /// A segment whose pulse areas `H̃` are delivered over `duration`.
    pub fn from_generator(h_tilde: &CMat, duration: f64, gamma: RateMatrix) -> Result<Self, LindbladError> {
        let h = if duration > 0.0 { h_tilde * c(1.0 / duration, 0.0) } else { CMat::zeros(h_tilde.nrows(), h_tilde.ncols()) };
        Self::new(h, duration, gamma)
    }
}

/// Rates on a product space `A ⊗ B` (index `a·d_B + b`):
/// `γ[(m,a),(n,b)] = γ_A[m,n] + γ_B[a,b]`.
pub fn product_rates(ga: &RateMatrix, gb: &RateMatrix) -> RateMatrix {
    let (da, db) = (ga.dim(), gb.dim());
    let n = da * db;
    RateMatrix { gamma: RMat::from_fn(n, n, |i, j| ga.gamma[(i / db, j / db)] + gb.gamma[(i % db, j % db)]) }
}

/// Uniform rates `1/T₂` between every pair of `d` levels.
pub fn uniform_rates(d: usize, t2: f64) -> RateMatrix {
    RateMatrix { gamma: RMat::from_fn(d, d, |i, j| if i == j { 0.0 } else { 1.0 / t2 }) }
}

/// Number of RK4 steps needed for `duration` under the given rate scale.
pub fn steps_for(duration: f64, rate_scale: f64, cfg: &IntegratorConfig) -> Result<u64, LindbladError> {
    if duration == 0.0 || rate_scale == 0.0 {
        return Ok(0);
    }
    let needed = (duration * rate_scale / cfg.dt_cap).ceil().max(1.0);
    if needed > cfg.n_max as f64 {
        return Err(LindbladError::TooManySteps { needed: needed.min(u64::MAX as f64) as u64, cap: cfg.n_max });
    }
    Ok(needed as u64)
}

/// `−Γ∘X`.
fn dissipator(x: &CMat, gamma: &RMat) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| -x[(i, j)] * gamma[(i, j)])
}

/// RK4 in the interaction picture of the drive (RK4IP): the coherent part is
/// carried exactly by half-step propagators `exp(−iH dt/2)` and only the
/// dephasing term is integrated, with the frame anchored at each step's
/// midpoint. The truncation error is therefore proportional to `γ`: it
/// vanishes for closed systems instead of leaving a floor from the fast
/// coherent rotation.
fn rk4ip(x: &CMat, ha: &CMat, hb: &CMat, gamma: &RMat, duration: f64, n: u64, hermitian: bool) -> CMat {
    let mut x = x.clone();
    if n == 0 {
        return x;
    }
    let dt = duration / n as f64;
    let ua = ftqec_linalg::expm_herm(ha, dt / 2.0);
    let ub_adj = ftqec_linalg::expm_herm(hb, dt / 2.0).adjoint();
    let frame = |y: &CMat| &ua * y * &ub_adj;
    let (h2, h6) = (c(dt / 2.0, 0.0), c(dt / 6.0, 0.0));
    for _ in 0..n {
        let xi = frame(&x);
        let k1 = frame(&dissipator(&x, gamma));
        let k2 = dissipator(&(&xi + &k1 * h2), gamma);
        let k3 = dissipator(&(&xi + &k2 * h2), gamma);
        let k4 = dissipator(&frame(&(&xi + &k3 * c(dt, 0.0))), gamma);
        x = frame(&(xi + (k1 + (k2 + k3) * c(2.0, 0.0)) * h6)) + k4 * h6;
        if hermitian {
            x = (&x + x.adjoint()) * c(0.5, 0.0);
        }
    }
    x
}

/// Integrate the block `X` with a fixed number of (interaction-picture) RK4 steps.
pub fn evolve_block_steps(x: &CMat, ha: &CMat, hb: &CMat, gamma: &RMat, duration: f64, n_steps: u64) -> CMat {
    rk4ip(x, ha, hb, gamma, duration, n_steps, false)
}

/// Integrate one block `X = ρ_ab`: `dX/dt = −i(H_a X − X H_b) − Γ∘X`.
/// Without dephasing the block is propagated exactly.
pub fn evolve_block(x: &CMat, ha: &CMat, hb: &CMat, gamma: &RMat, duration: f64, cfg: &IntegratorConfig) -> Result<CMat, LindbladError> {
    if duration < 0.0 {
        return Err(LindbladError::NegativeDuration(duration));
    }
    if ha.nrows() != x.nrows() || hb.nrows() != x.ncols() || gamma.shape() != x.shape() {
        return Err(LindbladError::Dimension("block, drive and rate shapes disagree".into()));
    }
    if gamma.iter().all(|&g| g == 0.0) {
        let ua = ftqec_linalg::expm_herm(ha, duration);
        let ub = ftqec_linalg::expm_herm(hb, duration);
        return Ok(ua * x * ub.adjoint());
    }
    let scale = ftqec_linalg::inf_norm(ha) + ftqec_linalg::inf_norm(hb) + gamma.max().max(0.0);
    let n = steps_for(duration, scale, cfg)?;
    Ok(rk4ip(x, ha, hb, gamma, duration, n, false))
}

/// Integrate a full density matrix over one segment.
///
/// The trace (which the exact dynamics conserves) is restored if it drifts
/// by less than `tolerances.trace_drift` relative to the input, otherwise an
/// error is returned. Works for unnormalised (branch) states as well.
/// Segments without dephasing are propagated exactly, `U ρ U†`.
pub fn evolve_segment(rho: &CMat, seg: &EvolutionSegment, cfg: &IntegratorConfig) -> Result<CMat, LindbladError> {
    if rho.nrows() != seg.gamma.dim() || rho.ncols() != seg.gamma.dim() {
        return Err(LindbladError::Dimension(format!("ρ is {}×{}, segment is {}", rho.nrows(), rho.ncols(), seg.gamma.dim())));
    }
    let h = (&seg.h_eff + seg.h_eff.adjoint()) * c(0.5, 0.0);
    // closed-system segments are propagated exactly
    if seg.gamma.max_rate() == 0.0 {
        let u = ftqec_linalg::expm_herm(&h, seg.duration);
        return Ok(&u * rho * u.adjoint());
    }
    let scale = 2.0 * ftqec_linalg::inf_norm(&seg.h_eff) + seg.gamma.max_rate();
    let n = steps_for(seg.duration, scale, cfg)?;
    let out = rk4ip(rho, &h, &h, &seg.gamma.gamma, seg.duration, n, true);
    let t0 = rho.trace().re;
    let t1 = out.trace().re;
    let out = if t0 != 0.0 {
        let drift = ((t1 - t0) / t0).abs();
        if drift > cfg.tolerances.trace_drift {
            return Err(LindbladError::TraceDrift(drift));
        }
        out * c(t0 / t1, 0.0)
    } else {
        out
    };
    Ok(out)
}

/// Exact idle evolution `ρ_ij → ρ_ij e^{−γ_ij t}`.
pub fn free_decay(rho: &CMat, gamma: &RateMatrix, t: f64) -> Result<CMat, LindbladError> {
    Ok(apply_dephasing(rho, gamma, t)?)
}

/// Check the density-matrix invariants (Hermitian, unit trace, positive)
/// and return the smallest eigenvalue.
pub fn check_density(rho: &CMat, cfg: &IntegratorConfig) -> Result<f64, LindbladError> {
    let herm = ftqec_linalg::hermiticity_residual(rho);
    if herm > 1e-10 {
        return Err(LindbladError::Dimension(format!("not Hermitian ({herm:.2e})")));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-10 {
        return Err(LindbladError::TraceDrift((tr - 1.0).abs()));
    }
    let (w, _) = ftqec_linalg::eigh(rho);
    let min = w.first().copied().unwrap_or(0.0);
    if min < -cfg.tolerances.positivity {
        return Err(LindbladError::Positivity(min));
    }
    Ok(min)
}

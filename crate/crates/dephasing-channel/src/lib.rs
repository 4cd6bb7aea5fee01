//! Pure dephasing in the qudit eigenbasis.
//!
//! A bath coupled through `Σ_kk' C_kk' s_k^z s_k'^z` damps coherences at
//!
//! ```text
//! γ_ij = Σ_kk' C_kk' (Z_ik − Z_jk)(Z_ik' − Z_jk'),   ρ_ij(t) = ρ_ij(0) e^{−γ_ij t},
//! ```
//!
//! with `Z_ik = ⟨d_i|s_k^z|d_i⟩`. The channel at a fixed time has diagonal
//! Kraus operators obtained from the eigendecomposition of the decoherence
//! matrix `Λ_ij = e^{−γ_ij t}`, computed in double-double precision so that
//! the tiny high-order eigenvalues stay resolved.

use ftqec_linalg::dd::{exp_neg, jacobi_eigh, SymDD, DD};
use ftqec_linalg::{CMat, RMat};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DephasingError {
    #[error("C matrix is {rows}×{cols}, expected {n}×{n} over the sites")]
    Shape { rows: usize, cols: usize, n: usize },
    #[error("C matrix is not symmetric (asymmetry {0:.3e})")]
    Asymmetric(f64),
    #[error("negative rate γ[{i}][{j}] = {value:.3e}: C is unphysical for this Z profile")]
    NegativeRate { i: usize, j: usize, value: f64 },
    #[error("t2_ref must be positive, got {0}")]
    NonPositiveT2(f64),
    #[error("C produces no dephasing on the reference spin-1/2")]
    ZeroReferenceRate,
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("decoherence matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("Kraus completeness violated: ‖ΣE†E − I‖ = {0:.3e}")]
    Completeness(f64),
    #[error("Kraus channel deviates from closed-form decay by {0:.3e}")]
    ChannelMismatch(f64),
    #[error("unknown C_mode {0:?} (expected \"uniform\" or \"matrix\")")]
    UnknownMode(String),
    #[error("C_mode \"matrix\" requires a C matrix")]
    MissingMatrix,
}

/// Bath coupling `C_kk'` (rate units after calibration) and reference `T₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct DephasingSpec {
    pub c: RMat,
    /// Seconds.
    pub t2_ref: f64,
}

/// JSON form under the `dephasing` key.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DephasingFile {
    #[serde(rename = "C_mode", default = "default_mode")]
    pub c_mode: String,
    /// Full site×site matrix (`matrix` mode).
    #[serde(rename = "C", default)]
    pub c: Option<Vec<Vec<f64>>>,
    /// Homogeneous coefficient (`uniform` mode); only its ratio to the
    /// calibration matters.
    #[serde(default)]
    pub c_uniform: Option<f64>,
    pub t2_ref_us: f64,
}

fn default_mode() -> String {
    "uniform".into()
}

impl DephasingFile {
    pub fn into_spec(&self, n_sites: usize) -> Result<DephasingSpec, DephasingError> {
        let t2 = self.t2_ref_us * 1e-6;
        match self.c_mode.as_str() {
            "uniform" => DephasingSpec::uniform(n_sites, self.c_uniform.unwrap_or(1.0), t2),
            "matrix" => {
                let rows = self.c.as_ref().ok_or(DephasingError::MissingMatrix)?;
                let n = rows.len();
                let m = RMat::from_fn(n, n, |i, j| rows[i].get(j).copied().unwrap_or(f64::NAN));
                if rows.iter().any(|r| r.len() != n) || n != n_sites {
                    return Err(DephasingError::Shape { rows: n, cols: rows.first().map_or(0, |r| r.len()), n: n_sites });
                }
                DephasingSpec::new(m, t2)
            }
            other => Err(DephasingError::UnknownMode(other.into())),
        }
    }
}

impl DephasingSpec {
    pub fn new(c: RMat, t2_ref: f64) -> Result<Self, DephasingError> {
        if !c.is_square() {
            return Err(DephasingError::Shape { rows: c.nrows(), cols: c.ncols(), n: c.nrows() });
        }
        let asym = (&c - c.transpose()).abs().max();
        if asym > 1e-12 * c.abs().max().max(1.0) {
            return Err(DephasingError::Asymmetric(asym));
        }
        if !(t2_ref > 0.0) {
            return Err(DephasingError::NonPositiveT2(t2_ref));
        }
        Ok(Self { c: (&c + c.transpose()) * 0.5, t2_ref })
    }

    /// Site-independent diagonal bath `C = c·I`.
    pub fn uniform(n_sites: usize, c: f64, t2_ref: f64) -> Result<Self, DephasingError> {
        Self::new(RMat::identity(n_sites, n_sites) * c, t2_ref)
    }

    /// Rank-one collective bath `C = v vᵀ`.
    pub fn collective(v: &[f64], t2_ref: f64) -> Result<Self, DephasingError> {
        let v = DVector::from_column_slice(v);
        Self::new(&v * v.transpose(), t2_ref)
    }

    /// Dephasing rate of the reference spin-1/2 (`Z = ±1/2`) under this C
    /// contracted to a single site: the site-averaged on-site coefficient
    /// `tr(C)/n`.
    pub fn reference_rate(&self) -> f64 {
        self.c.trace() / self.c.nrows() as f64
    }

    /// Factor that `calibrate_to_t2` multiplies C by.
    pub fn calibration_factor(&self) -> Result<f64, DephasingError> {
        let r = self.reference_rate();
        if !(r > 0.0) {
            return Err(DephasingError::ZeroReferenceRate);
        }
        Ok(1.0 / (self.t2_ref * r))
    }
}

/// Rescale C so that the reference spin-1/2 has `γ_01 = 1/t2_ref` exactly.
pub fn calibrate_to_t2(spec: &DephasingSpec) -> Result<DephasingSpec, DephasingError> {
    let f = spec.calibration_factor()?;
    Ok(DephasingSpec { c: &spec.c * f, t2_ref: spec.t2_ref })
}

/// Symmetric, non-negative, zero-diagonal coherence decay rates (1/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    pub gamma: RMat,
}

impl RateMatrix {
    pub fn zeros(d: usize) -> Self {
        Self { gamma: RMat::zeros(d, d) }
    }

    /// Validate and symmetrise an explicit rate matrix.
    pub fn from_matrix(g: RMat) -> Result<Self, DephasingError> {
        let d = g.nrows();
        let scale = g.abs().max().max(f64::MIN_POSITIVE);
        let mut s = (&g + g.transpose()) * 0.5;
        for i in 0..d {
            s[(i, i)] = 0.0;
            for j in 0..d {
                if s[(i, j)] < -1e-12 * scale {
                    return Err(DephasingError::NegativeRate { i, j, value: s[(i, j)] });
                }
                s[(i, j)] = s[(i, j)].max(0.0);
            }
        }
        Ok(Self { gamma: s })
    }

    /// Homogeneous two-level rate matrix `γ_01 = rate`.
    pub fn two_level(rate: f64) -> Self {
        Self { gamma: RMat::from_row_slice(2, 2, &[0.0, rate, rate, 0.0]) }
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    /// All rates multiplied by `f` (e.g. `t2_ref / T₂`).
    pub fn scaled(&self, f: f64) -> Self {
        Self { gamma: &self.gamma * f }
    }

    /// Leading `d×d` block (the rates of the lowest `d` levels).
    pub fn truncated(&self, d: usize) -> Self {
        Self { gamma: self.gamma.view((0, 0), (d, d)).into_owned() }
    }

    pub fn max_rate(&self) -> f64 {
        self.gamma.max()
    }
}

/// `γ_ij = Σ_kk' C_kk' [Z_ik Z_ik' + Z_jk Z_jk' − 2 Z_ik Z_jk']`.
pub fn compute_rates(z: &RMat, spec: &DephasingSpec) -> Result<RateMatrix, DephasingError> {
    let n = z.ncols();
    if spec.c.nrows() != n {
        return Err(DephasingError::Shape { rows: spec.c.nrows(), cols: spec.c.ncols(), n });
    }
    let zc = z * &spec.c; // (d × n)
    let cross = &zc * z.transpose(); // cross[i][j] = z_iᵀ C z_j
    let d = z.nrows();
    let g = RMat::from_fn(d, d, |i, j| cross[(i, i)] + cross[(j, j)] - 2.0 * cross[(i, j)]);
    RateMatrix::from_matrix(g)
}

/// Exact free decay `ρ_ij → ρ_ij e^{−γ_ij t}`.
pub fn apply_dephasing(rho: &CMat, gamma: &RateMatrix, t: f64) -> Result<CMat, DephasingError> {
    if t < 0.0 {
        return Err(DephasingError::NegativeTime(t));
    }
    Ok(CMat::from_fn(rho.nrows(), rho.ncols(), |i, j| {
        if i == j {
            rho[(i, j)]
        } else {
            rho[(i, j)] * (-gamma.gamma[(i, j)] * t).exp()
        }
    }))
}

/// Default eigenvalue cutoff for Kraus truncation.
pub const DEFAULT_KRAUS_CUTOFF: f64 = 1e-14;

/// Ordered diagonal Kraus operators of the dephasing channel at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausSet {
    /// Diagonal of each `E_k` (real for pure dephasing), descending norm.
    pub ops: Vec<DVector<f64>>,
    /// Eigenvalues `λ_k = ‖E_k‖_F²` of the decoherence matrix.
    pub weights: Vec<f64>,
    /// Seconds.
    pub t_snapshot: f64,
}

impl KrausSet {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops.first().map_or(0, |e| e.len())
    }

    /// Hilbert–Schmidt norm of each operator.
    pub fn norms(&self) -> Vec<f64> {
        self.ops.iter().map(|e| e.norm()).collect()
    }

    /// `‖Σ_k E_k†E_k − I‖_max`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|i| (self.ops.iter().map(|e| e[i] * e[i]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ_k E_k ρ E_k†`.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = rho.nrows();
        CMat::from_fn(d, d, |i, j| rho[(i, j)] * self.ops.iter().map(|e| e[i] * e[j]).sum::<f64>())
    }

    /// Embed as full diagonal complex matrices.
    pub fn matrices(&self) -> Vec<CMat> {
        self.ops
            .iter()
            .map(|e| CMat::from_diagonal(&e.map(|x| ftqec_linalg::c(x, 0.0))))
            .collect()
    }
}

/// Diagonal Kraus operators of the dephasing channel at time `t`.
///
/// `Λ_ij = e^{−γ_ij t}` is eigendecomposed in double-double precision;
/// `E_m = √λ_m diag(v_m)` for every `λ_m ≥ cutoff`, sorted by descending
/// norm (eigenvalue). The result is checked for completeness and against
/// the closed-form decay to 1e-10.
pub fn kraus_decompose(gamma: &RateMatrix, t: f64, cutoff: f64) -> Result<KrausSet, DephasingError> {
    if t < 0.0 {
        return Err(DephasingError::NegativeTime(t));
    }
    let d = gamma.dim();
    let lam = SymDD::from_fn(d, |i, j| if i == j { DD::ONE } else { exp_neg(gamma.gamma[(i, j)] * t) });
    let (vals, vecs) = jacobi_eigh(&lam);
    let min = vals.iter().map(|v| v.to_f64()).fold(f64::INFINITY, f64::min);
    if min < -1e-10 {
        return Err(DephasingError::NotPsd(min));
    }
    let mut ops = vec![];
    let mut weights = vec![];
    for (val, vec) in vals.iter().zip(&vecs) {
        let w = val.to_f64();
        if w < cutoff || w <= 0.0 {
            continue;
        }
        let s = val.sqrt();
        ops.push(DVector::from_iterator(d, vec.iter().map(|x| (s * *x).to_f64())));
        weights.push(w);
    }
    let set = KrausSet { ops, weights, t_snapshot: t };
    let comp = set.completeness_residual();
    if comp > 1e-10 {
        return Err(DephasingError::Completeness(comp));
    }
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let via_kraus: f64 = set.ops.iter().map(|e| e[i] * e[j]).sum();
            let closed = if i == j { 1.0 } else { (-gamma.gamma[(i, j)] * t).exp() };
            worst = worst.max((via_kraus - closed).abs());
        }
    }
    if worst > 1e-10 {
        return Err(DephasingError::ChannelMismatch(worst));
    }
    Ok(set)
}

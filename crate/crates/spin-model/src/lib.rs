//! Molecular spin-cluster model.
//!
//! Builds the Hamiltonian
//!
//! ```text
//! H = Σ_ij J_ij s_i·s_j + Σ_ij D_ij (s_i × s_j)_z + μ_B B Σ_i g_i s_i^z
//! ```
//!
//! in the tensor-product basis (energies in GHz, field in tesla),
//! diagonalises it, selects the low-energy qudit subspace and exposes the
//! single-site `⟨d_i|s_k^z|d_i⟩` profile that drives pure dephasing.

mod topology;

pub use topology::{topology_json, Coupling, SpinTopology, TopologyFile, BOHR_MAGNETON_GHZ_PER_T, DEFAULT_DIM_CAP, NI7_DEFAULT_JSON};

use ftqec_linalg::{c, eigh, frob, CMat, RMat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpinModelError {
    #[error("Hilbert dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("malformed coupling ({i}, {j}): {reason}")]
    MalformedCoupling { i: usize, j: usize, reason: String },
    #[error("spin quantum number {0} is not a positive half-integer")]
    InvalidSpin(f64),
    #[error("g-factor list has {got} entries, expected {expected}")]
    GFactorCount { got: usize, expected: usize },
    #[error("qudit dimension {0} must be even and at least 4")]
    InvalidQuditDim(usize),
    #[error("qudit dimension {d} exceeds the Hilbert dimension {dim}")]
    QuditTooLarge { d: usize, dim: usize },
    #[error("spectral gap between states {lo} and {hi} is {gap:.3e} GHz, below the tolerance {tol:.3e} GHz")]
    GapViolation { lo: usize, hi: usize, gap: f64, tol: f64 },
    #[error("eigensolver residual {0:.3e} exceeds tolerance")]
    EigenResidual(f64),
    #[error("invalid topology file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Single-spin operators `(s^x, s^y, s^z)` in the basis `m = s, s−1, …, −s`.
pub fn spin_operators(s: f64) -> [CMat; 3] {
    let n = (2.0 * s).round() as usize + 1;
    let m: Vec<f64> = (0..n).map(|k| s - k as f64).collect();
    let mut sp = CMat::zeros(n, n);
    for i in 1..n {
        sp[(i - 1, i)] = c((s * (s + 1.0) - m[i] * (m[i] + 1.0)).sqrt(), 0.0);
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm) * c(0.5, 0.0);
    let sy = (&sp - &sm) * c(0.0, -0.5);
    let sz = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, m.iter().map(|&x| c(x, 0.0))));
    [sx, sy, sz]
}

/// Spin operators of every site embedded in the full product space.
pub struct SiteOperators {
    pub dims: Vec<usize>,
    /// `ops[i][a]` = component `a ∈ {x, y, z}` of site `i`.
    pub ops: Vec<[CMat; 3]>,
}

impl SiteOperators {
    pub fn new(spins: &[f64]) -> Self {
        let dims: Vec<usize> = spins.iter().map(|s| (2.0 * s).round() as usize + 1).collect();
        let ops = spins
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let local = spin_operators(s);
                local.map(|o| embed(&o, i, &dims))
            })
            .collect();
        Self { dims, ops }
    }

    /// Total spin squared `S² = Σ_a (Σ_i s_i^a)²`.
    pub fn total_spin_squared(&self) -> CMat {
        let n: usize = self.dims.iter().product();
        let mut s2 = CMat::zeros(n, n);
        for a in 0..3 {
            let mut sa = CMat::zeros(n, n);
            for o in &self.ops {
                sa += &o[a];
            }
            s2 += &sa * &sa;
        }
        s2
    }
}

fn embed(op: &CMat, site: usize, dims: &[usize]) -> CMat {
    let mut out = CMat::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        out = if k == site { out.kronecker(op) } else { out.kronecker(&CMat::identity(d, d)) };
    }
    out
}

/// Dense Hamiltonian (GHz) of a validated topology.
pub fn build_hamiltonian(topo: &SpinTopology) -> Result<CMat, SpinModelError> {
    topo.validate()?;
    let so = SiteOperators::new(&topo.spins);
    Ok(hamiltonian_from_ops(topo, &so))
}

fn hamiltonian_from_ops(topo: &SpinTopology, so: &SiteOperators) -> CMat {
    let n: usize = so.dims.iter().product();
    let mut h = CMat::zeros(n, n);
    for cp in &topo.heisenberg {
        for a in 0..3 {
            h += (&so.ops[cp.i][a] * &so.ops[cp.j][a]) * c(cp.value, 0.0);
        }
    }
    for cp in &topo.dm {
        let cross = &so.ops[cp.i][0] * &so.ops[cp.j][1] - &so.ops[cp.i][1] * &so.ops[cp.j][0];
        h += cross * c(cp.value, 0.0);
    }
    for (i, g) in topo.g_factors.iter().enumerate() {
        h += &so.ops[i][2] * c(topo.bohr_magneton * topo.field_b * g, 0.0);
    }
    // Exact Hermiticity: absorb round-off.
    (&h + h.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of the spin Hamiltonian.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// Ascending eigenvalues (GHz).
    pub energies: Vec<f64>,
    /// Columns are eigenvectors `|d_i⟩` in the product basis.
    pub vectors: CMat,
    pub dim: usize,
}

impl EigenSystem {
    /// `max_i ‖H v_i − E_i v_i‖`.
    pub fn residual(&self, h: &CMat) -> f64 {
        let hv = h * &self.vectors;
        (0..self.dim)
            .map(|i| {
                let r = hv.column(i) - self.vectors.column(i) * c(self.energies[i], 0.0);
                r.norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Diagonalise a Hermitian matrix; ascending energies, first non-negligible
/// eigenvector component real positive. Fails if `‖Hv − Ev‖ ≥ 1e-9‖H‖`.
pub fn diagonalize(h: &CMat) -> Result<EigenSystem, SpinModelError> {
    let (energies, vectors) = eigh(h);
    let es = EigenSystem { dim: h.nrows(), energies, vectors };
    let res = es.residual(h);
    let scale = frob(h).max(f64::MIN_POSITIVE);
    if res >= 1e-9 * scale {
        return Err(SpinModelError::EigenResidual(res / scale));
    }
    Ok(es)
}

/// Spectral-gap check applied when selecting the qudit subspace.
#[derive(Clone, Copy, Debug)]
pub enum GapCheck {
    Disabled,
    /// Fail if `E_d − E_{d−1}` is below this fraction of the mean adjacent
    /// spacing inside the selected set.
    RelativeToMeanSpacing(f64),
}

impl Default for GapCheck {
    fn default() -> Self {
        GapCheck::RelativeToMeanSpacing(0.1)
    }
}

/// The `d` eigenstates forming the qudit.
#[derive(Clone, Debug)]
pub struct QuditBasis {
    pub indices: Vec<usize>,
    pub d: usize,
    /// Total spin `S` inferred from `⟨S²⟩ = S(S+1)` per selected state.
    pub spin_labels: Vec<f64>,
}

fn check_gap(e: &[f64], d: usize, gap: GapCheck) -> Result<(), SpinModelError> {
    if let GapCheck::RelativeToMeanSpacing(frac) = gap {
        if d < e.len() {
            let mean = (e[d - 1] - e[0]) / (d - 1) as f64;
            let g = e[d] - e[d - 1];
            if g < frac * mean {
                return Err(SpinModelError::GapViolation { lo: d - 1, hi: d, gap: g, tol: frac * mean });
            }
        }
    }
    Ok(())
}

/// Select the lowest `d` eigenstates. `s2` is the total-spin-squared
/// operator used for the spin labels.
pub fn select_qudit_basis(
    eig: &EigenSystem,
    d: usize,
    s2: &CMat,
    gap: GapCheck,
) -> Result<QuditBasis, SpinModelError> {
    if d % 2 == 1 || d < 4 {
        return Err(SpinModelError::InvalidQuditDim(d));
    }
    if d > eig.dim {
        return Err(SpinModelError::QuditTooLarge { d, dim: eig.dim });
    }
    check_gap(&eig.energies, d, gap)?;
    let indices: Vec<usize> = (0..d).collect();
    let spin_labels = indices
        .iter()
        .map(|&i| {
            let v = eig.vectors.column(i);
            let x = (v.adjoint() * s2 * v)[(0, 0)].re;
            (-1.0 + (1.0 + 4.0 * x.max(0.0)).sqrt()) / 2.0
        })
        .collect();
    Ok(QuditBasis { indices, d, spin_labels })
}

/// `Z[i][k] = ⟨d_i| s_k^z |d_i⟩` for every selected state `i` and site `k`.
///
/// `s^z` is diagonal in the product basis, so this is a population-weighted
/// sum of the local `m_k` quantum numbers.
pub fn sz_diagonal_elements(eig: &EigenSystem, basis: &QuditBasis, spins: &[f64]) -> RMat {
    let dims: Vec<usize> = spins.iter().map(|s| (2.0 * s).round() as usize + 1).collect();
    let n: usize = dims.iter().product();
    // m-values of every site for every product-basis index
    let mut mvals = RMat::zeros(n, spins.len());
    for idx in 0..n {
        let mut rem = idx;
        for k in (0..spins.len()).rev() {
            let local = rem % dims[k];
            rem /= dims[k];
            mvals[(idx, k)] = spins[k] - local as f64;
        }
    }
    let mut z = RMat::zeros(basis.d, spins.len());
    for (row, &i) in basis.indices.iter().enumerate() {
        let v = eig.vectors.column(i);
        for idx in 0..n {
            let p = v[idx].norm_sqr();
            if p == 0.0 {
                continue;
            }
            for k in 0..spins.len() {
                z[(row, k)] += p * mvals[(idx, k)];
            }
        }
    }
    z
}

/// Everything downstream crates need from the spin model in one bundle.
#[derive(Clone, Debug)]
pub struct SpinSpectrum {
    pub topology: SpinTopology,
    pub eig: EigenSystem,
    /// `⟨S⟩` label per eigenstate.
    pub spin_labels: Vec<f64>,
}

impl SpinSpectrum {
    pub fn compute(topology: &SpinTopology) -> Result<Self, SpinModelError> {
        topology.validate()?;
        let so = SiteOperators::new(&topology.spins);
        let h = hamiltonian_from_ops(topology, &so);
        let eig = diagonalize(&h)?;
        let s2 = so.total_spin_squared();
        let basis = QuditBasis { indices: (0..eig.dim).collect(), d: eig.dim, spin_labels: vec![] };
        let spin_labels = basis
            .indices
            .iter()
            .map(|&i| {
                let v = eig.vectors.column(i);
                let x = (v.adjoint() * &s2 * v)[(0, 0)].re;
                (-1.0 + (1.0 + 4.0 * x.max(0.0)).sqrt()) / 2.0
            })
            .collect();
        Ok(Self { topology: topology.clone(), eig, spin_labels })
    }

    /// Qudit basis of the lowest `d` states with the default gap check.
    pub fn qudit(&self, d: usize) -> Result<QuditBasis, SpinModelError> {
        if d % 2 == 1 || d < 4 {
            return Err(SpinModelError::InvalidQuditDim(d));
        }
        if d > self.eig.dim {
            return Err(SpinModelError::QuditTooLarge { d, dim: self.eig.dim });
        }
        check_gap(&self.eig.energies, d, GapCheck::default())?;
        Ok(QuditBasis { indices: (0..d).collect(), d, spin_labels: self.spin_labels[..d].to_vec() })
    }

    /// `Z` profile of the lowest `d` states.
    pub fn z_profile(&self, d: usize) -> Result<RMat, SpinModelError> {
        let basis = self.qudit(d)?;
        Ok(sz_diagonal_elements(&self.eig, &basis, &self.topology.spins))
    }

    /// Energies (GHz) of the lowest `d` states.
    pub fn energies(&self, d: usize) -> Vec<f64> {
        self.eig.energies[..d].to_vec()
    }
}

use serde::{Deserialize, Serialize};

use crate::SpinModelError;

/// Bohr magneton in GHz per tesla (μ_B / h).
pub const BOHR_MAGNETON_GHZ_PER_T: f64 = 13.996_245_42;
/// Default cap on the product-space dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// One pair coupling `(i, j, value)`; the value is in GHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl From<(usize, usize, f64)> for Coupling {
    fn from((i, j, value): (usize, usize, f64)) -> Self {
        Self { i, j, value }
    }
}

impl From<Coupling> for (usize, usize, f64) {
    fn from(c: Coupling) -> Self {
        (c.i, c.j, c.value)
    }
}

/// Molecular spin cluster: sites, exchange couplings, g-factors and field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinTopology {
    /// Spin quantum number of each site.
    pub spins: Vec<f64>,
    /// Isotropic exchange `J_ij` (GHz).
    pub heisenberg: Vec<Coupling>,
    /// Axial antisymmetric exchange `D_ij` (GHz).
    pub dm: Vec<Coupling>,
    pub g_factors: Vec<f64>,
    /// Field along z (tesla).
    pub field_b: f64,
    /// GHz per tesla.
    pub bohr_magneton: f64,
    pub dim_cap: usize,
}

/// On-disk JSON form; unknown keys (other sections of a full config) are
/// ignored.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TopologyFile {
    pub sites: Vec<f64>,
    #[serde(rename = "J", default)]
    pub j: Vec<Coupling>,
    #[serde(rename = "D", default)]
    pub d: Vec<Coupling>,
    #[serde(default)]
    pub g: Option<Vec<f64>>,
    #[serde(rename = "B", default)]
    pub b: f64,
    #[serde(default)]
    pub bohr_magneton_ghz_per_t: Option<f64>,
    #[serde(default)]
    pub dim_cap: Option<usize>,
}

impl From<TopologyFile> for SpinTopology {
    fn from(f: TopologyFile) -> Self {
        let n = f.sites.len();
        SpinTopology {
            g_factors: f.g.unwrap_or_else(|| vec![2.0; n]),
            spins: f.sites,
            heisenberg: f.j,
            dm: f.d,
            field_b: f.b,
            bohr_magneton: f.bohr_magneton_ghz_per_t.unwrap_or(BOHR_MAGNETON_GHZ_PER_T),
            dim_cap: f.dim_cap.unwrap_or(DEFAULT_DIM_CAP),
        }
    }
}

impl From<&SpinTopology> for TopologyFile {
    fn from(t: &SpinTopology) -> Self {
        TopologyFile {
            sites: t.spins.clone(),
            j: t.heisenberg.clone(),
            d: t.dm.clone(),
            g: Some(t.g_factors.clone()),
            b: t.field_b,
            bohr_magneton_ghz_per_t: Some(t.bohr_magneton),
            dim_cap: Some(t.dim_cap),
        }
    }
}

/// The shipped Ni₇ parameter set (see `configs/ni7_default.json`).
pub const NI7_DEFAULT_JSON: &str = include_str!("../../../configs/ni7_default.json");

impl SpinTopology {
    /// Parse from a JSON document containing `sites`, `J`, `D`, `g`, `B`.
    pub fn from_json(text: &str) -> Result<Self, SpinModelError> {
        let f: TopologyFile = serde_json::from_str(text)?;
        let t = SpinTopology::from(f);
        t.validate()?;
        Ok(t)
    }

    /// Two corner-sharing tetrahedra: six spin-1/2 sites in two triangles,
    /// each site coupled to a central spin-3/2. Parameters tuned to give
    /// eight low-lying S = 1/2 doublets well separated from S = 3/2.
    pub fn ni7_default() -> Self {
        Self::from_json(NI7_DEFAULT_JSON).expect("shipped Ni7 parameter file is valid")
    }

    pub fn hilbert_dim(&self) -> usize {
        self.spins.iter().map(|s| (2.0 * s).round() as usize + 1).product()
    }

    pub fn validate(&self) -> Result<(), SpinModelError> {
        for &s in &self.spins {
            let two_s = 2.0 * s;
            if s <= 0.0 || (two_s - two_s.round()).abs() > 1e-12 {
                return Err(SpinModelError::InvalidSpin(s));
            }
        }
        if self.g_factors.len() != self.spins.len() {
            return Err(SpinModelError::GFactorCount { got: self.g_factors.len(), expected: self.spins.len() });
        }
        let dim = self.hilbert_dim();
        if dim > self.dim_cap {
            return Err(SpinModelError::DimensionCap { dim, cap: self.dim_cap });
        }
        for list in [&self.heisenberg, &self.dm] {
            let mut seen = std::collections::BTreeSet::new();
            for cp in list.iter() {
                let bad = |reason: &str| SpinModelError::MalformedCoupling { i: cp.i, j: cp.j, reason: reason.into() };
                if cp.i == cp.j {
                    return Err(bad("self-coupling"));
                }
                if cp.i >= self.spins.len() || cp.j >= self.spins.len() {
                    return Err(bad("site index out of range"));
                }
                if !cp.value.is_finite() {
                    return Err(bad("non-finite value"));
                }
                if !seen.insert((cp.i.min(cp.j), cp.i.max(cp.j))) {
                    return Err(bad("duplicate pair"));
                }
            }
        }
        Ok(())
    }
}

/// The shipped Ni₇ configuration document (topology plus the other
/// pipeline sections).
pub fn topology_json() -> &'static str {
    NI7_DEFAULT_JSON
}

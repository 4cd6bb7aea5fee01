use dephasing_channel::DephasingFile;
use lindblad_engine::IntegratorConfig;
use serde::{Deserialize, Serialize};
use spin_model::TopologyFile;

/// Snapshot time at which the dephasing channel is decomposed into Kraus
/// operators for code synthesis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotRule {
    /// Self-consistent: the duration of the reference gate `R(π/2, π)`
    /// compiled on the resulting code (iterated to a fixed point).
    ReferenceGate,
    /// Always the configured reference duration.
    Fixed,
}

/// Which logical block of the final state is compared with the ideal one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// `Σ_k ⟨ℓ,k|ρ|ℓ',k⟩`: residual correctable errors count as corrected.
    Traced,
    /// `⟨ℓ,0|ρ|ℓ',0⟩`: anything outside the code block counts as error.
    CodeBlock,
}

/// `protocol` section of a pipeline configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolFile {
    /// Duration of the d = 4 reference gate `R(π/2, π)` at `T₂_ref` (ns);
    /// fixes the global drive amplitude.
    pub reference_gate_ns: f64,
    pub kraus_cutoff: f64,
    pub kl_threshold: f64,
    pub snapshot: SnapshotRule,
    /// Ancilla coherence time; `None` means "same as the qudit".
    pub t2_ancilla_us: Option<f64>,
    /// Branches lighter than this are dropped after measurements.
    pub prune: f64,
    /// Simulate the preparation with noise instead of starting from ideal
    /// encoded states.
    pub noisy_prep: bool,
    /// Probability below which `encode` reports a broken preparation.
    pub acceptance_floor: f64,
}

impl Default for ProtocolFile {
    fn default() -> Self {
        Self {
            reference_gate_ns: 90.0,
            kraus_cutoff: 1e-40,
            kl_threshold: 1e-8,
            snapshot: SnapshotRule::ReferenceGate,
            t2_ancilla_us: None,
            prune: 1e-12,
            noisy_prep: false,
            acceptance_floor: 0.5,
        }
    }
}

/// Full pipeline configuration file: topology fields at the top level,
/// then `dephasing`, `integrator`, `protocol` and (optionally)
/// `architecture` sections.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub topology: TopologyFile,
    pub dephasing: DephasingFile,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub protocol: ProtocolFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<serde_json::Value>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The shipped Ni₇ configuration.
    pub fn ni7_default() -> Self {
        Self::from_json(spin_model::NI7_DEFAULT_JSON).expect("bundled configuration parses")
    }
}

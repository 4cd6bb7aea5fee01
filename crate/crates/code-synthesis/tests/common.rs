#![allow(dead_code)]
use dephasing_channel::*;
use spin_model::{SpinSpectrum, SpinTopology};
use std::sync::OnceLock;

pub fn spectrum() -> &'static SpinSpectrum {
    static S: OnceLock<SpinSpectrum> = OnceLock::new();
    S.get_or_init(|| SpinSpectrum::compute(&SpinTopology::ni7_default()).unwrap())
}

/// Calibrated Ni₇ rates of the lowest `d` states at `T₂ = t2` seconds.
pub fn ni7_rates(d: usize, t2: f64) -> RateMatrix {
    let v: serde_json::Value = serde_json::from_str(spin_model::NI7_DEFAULT_JSON).unwrap();
    let f: DephasingFile = serde_json::from_value(v["dephasing"].clone()).unwrap();
    let mut spec = f.into_spec(7).unwrap();
    spec.t2_ref = t2;
    let spec = calibrate_to_t2(&spec).unwrap();
    compute_rates(&spectrum().z_profile(d).unwrap(), &spec).unwrap()
}

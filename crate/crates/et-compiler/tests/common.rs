#![allow(dead_code)]
use code_synthesis::*;
use dephasing_channel::*;
use spin_model::{SpinSpectrum, SpinTopology};
use std::sync::OnceLock;

pub fn spectrum() -> &'static SpinSpectrum {
    static S: OnceLock<SpinSpectrum> = OnceLock::new();
    S.get_or_init(|| SpinSpectrum::compute(&SpinTopology::ni7_default()).unwrap())
}

/// Ni₇ error basis at dimension `d` (`K = d/2`, `T₂ = 10 μs`, 90 ns snapshot).
pub fn ni7_basis(d: usize) -> ErrorBasis {
    static CACHE: OnceLock<std::sync::Mutex<std::collections::HashMap<usize, ErrorBasis>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.lock().unwrap().get(&d) {
        return b.clone();
    }
    let b = build(d);
    cache.lock().unwrap().insert(d, b.clone());
    b
}

fn build(d: usize) -> ErrorBasis {
    let v: serde_json::Value = serde_json::from_str(spin_model::NI7_DEFAULT_JSON).unwrap();
    let f: DephasingFile = serde_json::from_value(v["dephasing"].clone()).unwrap();
    let spec = calibrate_to_t2(&f.into_spec(7).unwrap()).unwrap();
    let g = compute_rates(&spectrum().z_profile(d).unwrap(), &spec).unwrap();
    let k = kraus_decompose(&g, 90e-9, 1e-40).unwrap();
    let cw = solve_codewords(&k, d / 2, d, SynthesisOptions::default()).unwrap();
    build_error_basis(&cw, &k).unwrap()
}

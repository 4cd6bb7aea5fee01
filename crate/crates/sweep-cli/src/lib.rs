//! Sweep driver for the logical-qudit pipeline: parameter plans, parallel
//! evaluation, CSV export/import, log-log slope fits and an on-disk cache of
//! solved code words.
//!
//! Every number written here comes from a library call
//! ([`qec_protocol::LogicalQudit::entanglement_error`],
//! [`qec_protocol::uncorrected_baseline`],
//! [`two_qubit_switch::SwitchArchitecture::report`]); this crate only
//! orchestrates.

use code_synthesis::CodeWords;
use qec_protocol::{uncorrected_baseline, MeasurementModel, Pipeline, PipelineConfig, ProtocolError, GATE_SET};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spin_model::{SpinSpectrum, SpinTopology};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;
use two_qubit_switch::{ArchitectureFile, SwitchArchitecture, SwitchError};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "QUDIT_FTQEC_CACHE";

/// Results below this are numerical zero and excluded from fits.
pub const FIT_FLOOR: f64 = 1e-14;

/// Fixed leading CSV columns; `syndrome_0 … syndrome_{K−1}` follow.
pub const CSV_COLUMNS: [&str; 9] = ["d", "t2_us", "theta", "phi", "circuit", "E_e", "F_e", "leakage", "acceptance"];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: malformed row {row}: {reason}")]
    Row { path: PathBuf, row: usize, reason: String },
    #[error("fit needs at least 4 points above {FIT_FLOOR:e}, got {0}")]
    InsufficientPoints(usize),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Switch(#[from] SwitchError),
    #[error(transparent)]
    Spin(#[from] spin_model::SpinModelError),
}

/// Which cycle a plan evaluates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Circuit {
    /// Logical `R(θ, φ)` + one EC round on one qudit.
    #[default]
    SingleGateCycle,
    /// C-φ through the switch + EC on all three units.
    TwoQubitCycle,
    /// Only the uncorrected spin-1/2 rows.
    Baseline,
}

/// `T₂` values in seconds: explicit, or log-spaced between two bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum T2Grid {
    Values(Vec<f64>),
    LogSpaced { min_s: f64, max_s: f64, points: usize },
}

impl T2Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            T2Grid::Values(ref v) => v.clone(),
            T2Grid::LogSpaced { min_s, max_s, points } => match points {
                0 => vec![],
                1 => vec![min_s],
                n => (0..n).map(|i| min_s * (max_s / min_s).powf(i as f64 / (n - 1) as f64)).collect(),
            },
        }
    }
}

fn default_gates() -> Vec<(f64, f64)> {
    GATE_SET.to_vec()
}

/// A sweep over `d × T₂ × gate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    /// Pipeline configuration file (relative to the plan file); the bundled
    /// Ni₇ configuration when absent.
    #[serde(default)]
    pub config: Option<PathBuf>,
    #[serde(default)]
    pub d_list: Vec<usize>,
    pub t2_grid: T2Grid,
    /// `(θ, φ)` pairs; defaults to the five-gate set.
    #[serde(default = "default_gates")]
    pub gate_set: Vec<(f64, f64)>,
    #[serde(default)]
    pub circuit: Circuit,
    /// Add uncorrected rows (`d = 2`) for every `T₂`.
    #[serde(default)]
    pub baseline: bool,
    #[serde(default)]
    pub measurement: MeasurementModel,
    /// Evolve without dephasing (code words still solved at each `T₂`).
    #[serde(default)]
    pub noiseless: bool,
    /// Default output path when none is given on the command line.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepPlan {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = read(path)?;
        let mut plan = Self::from_json(&text).map_err(|source| SweepError::Json { path: path.into(), source })?;
        if let (Some(cfg), Some(dir)) = (&plan.config, path.parent()) {
            if cfg.is_relative() {
                plan.config = Some(dir.join(cfg));
            }
        }
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::Plan(m));
        let t2 = self.t2_grid.values();
        if t2.is_empty() {
            return bad("T₂ grid is empty".into());
        }
        if let Some(x) = t2.iter().find(|t| !(**t > 0.0)) {
            return bad(format!("T₂ must be positive, got {x}"));
        }
        if self.circuit != Circuit::Baseline && self.d_list.is_empty() {
            return bad("d_list is empty".into());
        }
        if let Some(d) = self.d_list.iter().find(|&&d| d < 4 || d % 2 == 1) {
            return bad(format!("d must be even and ≥ 4, got {d}"));
        }
        if self.circuit == Circuit::SingleGateCycle || self.circuit == Circuit::Baseline {
            if self.gate_set.is_empty() {
                return bad("gate set is empty".into());
            }
        }
        self.measurement.validate().map_err(|e| SweepError::Plan(e.to_string()))?;
        Ok(())
    }

    /// The pipeline configuration the plan refers to.
    pub fn pipeline_config(&self) -> Result<PipelineConfig, SweepError> {
        match &self.config {
            None => Ok(PipelineConfig::ni7_default()),
            Some(p) => load_config(p),
        }
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, SweepError> {
    PipelineConfig::from_json(&read(path)?).map_err(|source| SweepError::Json { path: path.into(), source })
}

fn read(path: &Path) -> Result<String, SweepError> {
    std::fs::read_to_string(path).map_err(|source| SweepError::Io { path: path.into(), source })
}

/// One CSV row. Failed points carry NaN metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Qudit dimension; 2 for the uncorrected spin rows.
    pub d: usize,
    pub t2_us: f64,
    pub theta: f64,
    pub phi: f64,
    pub circuit: String,
    pub e_e: f64,
    pub f_e: f64,
    pub leakage: f64,
    pub acceptance: f64,
    pub syndromes: Vec<f64>,
}

impl Row {
    fn failed(d: usize, t2: f64, theta: f64, phi: f64, circuit: &str) -> Self {
        let nan = f64::NAN;
        Row { d, t2_us: t2 * 1e6, theta, phi, circuit: circuit.into(), e_e: nan, f_e: nan, leakage: nan, acceptance: nan, syndromes: vec![] }
    }

    pub fn is_error(&self) -> bool {
        self.e_e.is_nan()
    }
}

/// Rows in plan order plus the number of failed points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Row>,
    pub failures: usize,
}

/// One independently evaluated unit of work.
#[derive(Clone, Copy, Debug)]
enum Unit {
    Qudit { d: usize, t2: f64 },
    Baseline { t2: f64 },
    Switch { d: usize, t2: f64 },
    SwitchBaseline { t2: f64 },
}

impl Unit {
    fn label(&self) -> String {
        match *self {
            Unit::Qudit { d, t2 } => format!("d = {d}, T₂ = {} μs", t2 * 1e6),
            Unit::Baseline { t2 } => format!("uncorrected, T₂ = {} μs", t2 * 1e6),
            Unit::Switch { d, t2 } => format!("C-φ d = {d}, T₂ = {} μs", t2 * 1e6),
            Unit::SwitchBaseline { t2 } => format!("C-φ uncorrected, T₂ = {} μs", t2 * 1e6),
        }
    }
}

fn units(plan: &SweepPlan) -> Vec<Unit> {
    let mut t2 = plan.t2_grid.values();
    t2.sort_by(f64::total_cmp);
    let mut ds = plan.d_list.clone();
    ds.sort_unstable();
    ds.dedup();
    let mut out = vec![];
    let two = plan.circuit == Circuit::TwoQubitCycle;
    if plan.baseline || plan.circuit == Circuit::Baseline {
        out.extend(t2.iter().map(|&t2| if two { Unit::SwitchBaseline { t2 } } else { Unit::Baseline { t2 } }));
    }
    if plan.circuit != Circuit::Baseline {
        for &d in &ds {
            out.extend(t2.iter().map(|&t2| if two { Unit::Switch { d, t2 } } else { Unit::Qudit { d, t2 } }));
        }
    }
    out
}

/// Evaluate a plan with `jobs` worker threads (`arch` is used by
/// two-qubit plans, with `unit_d` taken from the plan). Rows come out sorted by
/// `(d, T₂, gate order)` whatever the completion order; failures are
/// logged and recorded as NaN rows.
pub fn run_sweep(plan: &SweepPlan, pipeline: &Pipeline, arch: &ArchitectureFile, jobs: usize) -> Result<Dataset, SweepError> {
    plan.validate()?;
    let work = units(plan);
    let total = work.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SweepError::Plan(format!("cannot start {jobs} workers: {e}")))?;
    let results: Vec<(Vec<Row>, bool)> = pool.install(|| {
        work.par_iter()
            .map(|u| {
                let out = match evaluate(u, plan, pipeline, arch) {
                    Ok(rows) => (rows, false),
                    Err(e) => {
                        log::error!("{}: {e}", u.label());
                        (failed_rows(u, plan, arch), true)
                    }
                };
                let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                log::info!("[{n}/{total}] {}", u.label());
                out
            })
            .collect()
    });
    let failures = results.iter().filter(|r| r.1).count();
    Ok(Dataset { rows: results.into_iter().flat_map(|r| r.0).collect(), failures })
}

fn evaluate(u: &Unit, plan: &SweepPlan, p: &Pipeline, arch: &ArchitectureFile) -> Result<Vec<Row>, SweepError> {
    let t2_eff = |t2: f64| if plan.noiseless { f64::INFINITY } else { t2 };
    match *u {
        Unit::Qudit { d, t2 } => {
            let q = if plan.noiseless { p.noiseless_qudit(d, t2)? } else { p.qudit(d, t2)? };
            plan.gate_set
                .iter()
                .map(|&(theta, phi)| {
                    let r = q.entanglement_error(theta, phi, &plan.measurement)?;
                    Ok(Row {
                        d,
                        t2_us: t2 * 1e6,
                        theta,
                        phi,
                        circuit: "single_gate_cycle".into(),
                        e_e: r.e_e,
                        f_e: r.f_e,
                        leakage: r.leakage,
                        acceptance: r.acceptance_probability,
                        syndromes: r.syndrome_distribution,
                    })
                })
                .collect()
        }
        Unit::Baseline { t2 } => plan
            .gate_set
            .iter()
            .map(|&(theta, phi)| {
                let e = uncorrected_baseline(theta, phi, t2_eff(t2), p.rabi, &p.integrator)?;
                Ok(Row { d: 2, t2_us: t2 * 1e6, theta, phi, circuit: "baseline".into(), e_e: e, f_e: (1.0 - e).sqrt(), leakage: 0.0, acceptance: 1.0, syndromes: vec![] })
            })
            .collect(),
        Unit::Switch { d, t2 } => {
            let a = ArchitectureFile { unit_d: d, ..arch.clone() };
            let r = SwitchArchitecture::encoded(p, &a, t2, &plan.measurement, plan.noiseless)?.report();
            Ok(vec![switch_row(d, t2, "cphase", &r)])
        }
        Unit::SwitchBaseline { t2 } => {
            let r = SwitchArchitecture::uncorrected(p, arch, t2_eff(t2))?.report();
            Ok(vec![switch_row(2, t2, "cphase_baseline", &r)])
        }
    }
}

fn switch_row(d: usize, t2: f64, circuit: &str, r: &two_qubit_switch::TwoQubitReport) -> Row {
    Row { d, t2_us: t2 * 1e6, theta: f64::NAN, phi: r.phi, circuit: circuit.into(), e_e: r.e_e, f_e: r.f_e, leakage: r.leakage, acceptance: 1.0, syndromes: vec![] }
}

fn failed_rows(u: &Unit, plan: &SweepPlan, arch: &ArchitectureFile) -> Vec<Row> {
    match *u {
        Unit::Qudit { d, t2 } => plan.gate_set.iter().map(|&(th, ph)| Row::failed(d, t2, th, ph, "single_gate_cycle")).collect(),
        Unit::Baseline { t2 } => plan.gate_set.iter().map(|&(th, ph)| Row::failed(2, t2, th, ph, "baseline")).collect(),
        Unit::Switch { d, t2 } => vec![Row::failed(d, t2, f64::NAN, arch.phi, "cphase")],
        Unit::SwitchBaseline { t2 } => vec![Row::failed(2, t2, f64::NAN, arch.phi, "cphase_baseline")],
    }
}

/// Header for rows with up to `syndromes` syndrome columns.
pub fn csv_header(syndromes: usize) -> Vec<String> {
    CSV_COLUMNS.iter().map(|s| s.to_string()).chain((0..syndromes).map(|k| format!("syndrome_{k}"))).collect()
}

/// Write rows as CSV (shortest round-trip float formatting, so equal
/// datasets give identical bytes).
pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), csv::Error> {
    let width = rows.iter().map(|r| r.syndromes.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(out);
    w.write_record(csv_header(width))?;
    for r in rows {
        let mut rec = vec![
            r.d.to_string(),
            r.t2_us.to_string(),
            r.theta.to_string(),
            r.phi.to_string(),
            r.circuit.clone(),
            r.e_e.to_string(),
            r.f_e.to_string(),
            r.leakage.to_string(),
            r.acceptance.to_string(),
        ];
        rec.extend((0..width).map(|k| r.syndromes.get(k).map_or(String::new(), |x| x.to_string())));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Write rows to `path`, creating parent directories.
pub fn export(rows: &[Row], path: &Path) -> Result<(), SweepError> {
    let io = |source| SweepError::Io { path: path.into(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let f = std::fs::File::create(path).map_err(io)?;
    write_csv(rows, std::io::BufWriter::new(f)).map_err(|source| SweepError::Csv { path: path.into(), source })
}

/// Parse a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<Row>, SweepError> {
    let text = read(path)?;
    parse_csv(&text, path)
}

pub fn parse_csv(text: &str, path: &Path) -> Result<Vec<Row>, SweepError> {
    let csv_err = |source| SweepError::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < CSV_COLUMNS.len() || header.iter().zip(CSV_COLUMNS).any(|(a, b)| a != b) {
        return Err(SweepError::Row { path: path.into(), row: 0, reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()) });
    }
    let mut rows = vec![];
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |reason: String| SweepError::Row { path: path.into(), row: i + 1, reason };
        let num = |j: usize| rec[j].parse::<f64>().map_err(|e| bad(format!("column {}: {e}", CSV_COLUMNS[j])));
        rows.push(Row {
            d: rec[0].parse().map_err(|e| bad(format!("column d: {e}")))?,
            t2_us: num(1)?,
            theta: num(2)?,
            phi: num(3)?,
            circuit: rec[4].to_string(),
            e_e: num(5)?,
            f_e: num(6)?,
            leakage: num(7)?,
            acceptance: num(8)?,
            syndromes: rec.iter().skip(CSV_COLUMNS.len()).take_while(|s| !s.is_empty()).map(|s| s.parse::<f64>().map_err(|e| bad(format!("syndrome: {e}")))).collect::<Result<_, _>>()?,
        });
    }
    Ok(rows)
}

/// Independent variable of a log-log (or semilog) fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum XKind {
    /// `log₁₀(1/T₂)` vs `log₁₀ E_e`.
    InvT2,
    /// `d` vs `log₁₀ E_e`.
    Dim,
}

/// Ordinary least squares result on the log axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fit `(x, E)` pairs: `x` is `1/T₂` (s⁻¹, log axis) or `d` (linear axis).
/// Non-finite errors and values below [`FIT_FLOOR`] are excluded.
pub fn fit_slope(points: &[(f64, f64)], x_kind: XKind) -> Result<FitResult, SweepError> {
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|&(x, e)| x.is_finite() && e.is_finite() && e >= FIT_FLOOR).collect();
    if kept.len() < 4 {
        return Err(SweepError::InsufficientPoints(kept.len()));
    }
    let xs: Vec<f64> = kept
        .iter()
        .map(|&(x, _)| match x_kind {
            XKind::InvT2 => x.log10(),
            XKind::Dim => x,
        })
        .collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, e)| e.log10()).collect();
    let (slope, intercept, r2) = ftqec_linalg::linear_fit(&xs, &ys);
    Ok(FitResult { slope, intercept, r_squared: r2.clamp(0.0, 1.0), points: kept.len() })
}

/// A curve of gate-averaged errors: `(circuit, d)` over `T₂`
/// ([`XKind::InvT2`]) or `(circuit, T₂)` over `d` ([`XKind::Dim`]).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub circuit: String,
    /// Fixed `d` (inverse-T₂ curves) or `None`.
    pub d: Option<usize>,
    /// Fixed `T₂` in μs (dimension curves) or `None`.
    pub t2_us: Option<f64>,
    /// `(x, mean E_e)`; `x` is `1/T₂` in s⁻¹ or `d`.
    pub points: Vec<(f64, f64)>,
}

/// Group rows into curves, averaging `E_e` over the gates at each point.
/// A point with any failed gate is NaN (and so dropped by the fit).
pub fn curves(rows: &[Row], x_kind: XKind) -> Vec<Curve> {
    let mut groups: BTreeMap<(String, u64, u64), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let key = match x_kind {
            XKind::InvT2 => (r.circuit.clone(), r.d as u64, r.t2_us.to_bits()),
            XKind::Dim => (r.circuit.clone(), r.t2_us.to_bits(), r.d as u64),
        };
        groups.entry(key).or_default().push(r.e_e);
    }
    let mut out: Vec<Curve> = vec![];
    for ((circuit, a, b), es) in groups {
        let mean = es.iter().sum::<f64>() / es.len() as f64;
        let (d, t2_us, x) = match x_kind {
            XKind::InvT2 => (Some(a as usize), None, 1e6 / f64::from_bits(b)),
            XKind::Dim => (None, Some(f64::from_bits(a)), b as f64),
        };
        match out.last_mut() {
            Some(c) if c.circuit == circuit && c.d == d && c.t2_us.map(f64::to_bits) == t2_us.map(f64::to_bits) => c.points.push((x, mean)),
            _ => out.push(Curve { circuit, d, t2_us, points: vec![(x, mean)] }),
        }
    }
    for c in &mut out {
        c.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// Fit of one curve, with the crossover `T₂` against the matching
/// uncorrected curve when there is one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveFit {
    pub circuit: String,
    pub d: Option<usize>,
    pub t2_us: Option<f64>,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
    /// `T₂` (μs) above which this curve stays below the uncorrected one.
    pub crossover_us: Option<f64>,
}

/// Fit every curve of a dataset.
pub fn fit_dataset(rows: &[Row], x_kind: XKind) -> Vec<CurveFit> {
    let cs = curves(rows, x_kind);
    let reference = |circuit: &str| -> Option<&Curve> {
        let base = match circuit {
            "single_gate_cycle" => "baseline",
            "cphase" => "cphase_baseline",
            _ => return None,
        };
        cs.iter().find(|c| c.circuit == base)
    };
    cs.iter()
        .map(|c| {
            let (fit, error) = match fit_slope(&c.points, x_kind) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let crossover_us = match (x_kind, reference(&c.circuit)) {
                (XKind::InvT2, Some(base)) => crossover_on_grid(c, base),
                _ => None,
            };
            CurveFit { circuit: c.circuit.clone(), d: c.d, t2_us: c.t2_us, fit, error, crossover_us }
        })
        .collect()
}

fn crossover_on_grid(curve: &Curve, base: &Curve) -> Option<f64> {
    // both on the same T₂ points, ascending T₂
    let mut t2 = vec![];
    let mut a = vec![];
    let mut b = vec![];
    for &(x, e) in curve.points.iter().rev() {
        if let Some(&(_, eb)) = base.points.iter().find(|p| p.0.to_bits() == x.to_bits()) {
            t2.push(1e6 / x);
            a.push(e);
            b.push(eb);
        }
    }
    two_qubit_switch::crossover(&t2, &a, &b)
}

/// Code words cached as JSON files named by the SHA-256 of their key.
#[derive(Clone, Debug)]
pub struct FileCodeStore {
    pub dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct StoredCode {
    key: String,
    codewords: CodeWords,
}

impl FileCodeStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Store in `$QUDIT_FTQEC_CACHE`, if set and non-empty.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(Self::new)
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join("codewords").join(format!("{}.json", hex::encode(Sha256::digest(key.as_bytes()))))
    }

    fn write(&self, key: &str, cw: &CodeWords) -> std::io::Result<()> {
        let path = self.path(key);
        let dir = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer(&mut tmp, &StoredCode { key: key.into(), codewords: cw.clone() })?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(())
    }
}

impl qec_protocol::CodeStore for FileCodeStore {
    fn load(&self, key: &str) -> Option<CodeWords> {
        let text = std::fs::read_to_string(self.path(key)).ok()?;
        match serde_json::from_str::<StoredCode>(&text) {
            Ok(s) if s.key == key => Some(s.codewords),
            Ok(_) => None,
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", self.path(key).display());
                None
            }
        }
    }

    fn store(&self, key: &str, codewords: &CodeWords) {
        if let Err(e) = self.write(key, codewords) {
            log::warn!("cannot write cache entry under {}: {e}", self.dir.display());
        }
    }
}

/// Build a pipeline, backed by `store` when given.
pub fn build_pipeline(cfg: &PipelineConfig, store: Option<FileCodeStore>) -> Result<Pipeline, SweepError> {
    let spectrum = Arc::new(SpinSpectrum::compute(&SpinTopology::from(cfg.topology.clone()))?);
    let store = store.map(|s| Arc::new(s) as Arc<dyn qec_protocol::CodeStore>);
    Ok(Pipeline::with_store(spectrum, cfg, store)?)
}

/// One eigenstate of the spin cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub index: usize,
    pub energy_ghz: f64,
    /// Total spin `S` from `⟨S²⟩`.
    pub spin: f64,
}

/// The lowest `levels` eigenstates.
pub fn spectrum_report(spectrum: &SpinSpectrum, levels: usize) -> Vec<Level> {
    (0..levels.min(spectrum.eig.dim)).map(|i| Level { index: i, energy_ghz: spectrum.eig.energies[i], spin: spectrum.spin_labels[i] }).collect()
}

/// Rates and Kraus decomposition of the lowest `d` levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KrausReport {
    pub d: usize,
    pub t2: f64,
    pub rates: dephasing_channel::RateMatrix,
    pub kraus: dephasing_channel::KrausSet,
    pub completeness_residual: f64,
}

pub fn kraus_report(p: &Pipeline, d: usize, t2: f64, t: f64) -> Result<KrausReport, SweepError> {
    let rates = p.rates(d, t2)?;
    let kraus = dephasing_channel::kraus_decompose(&rates, t, p.protocol.kraus_cutoff).map_err(ProtocolError::from)?;
    Ok(KrausReport { d, t2, completeness_residual: kraus.completeness_residual(), rates, kraus })
}

/// Code words as used by the pipeline at `(d, T₂)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodeReport {
    pub codewords: CodeWords,
    /// Kraus snapshot time (s).
    pub snapshot: f64,
    pub approximate: bool,
}

pub fn code_report(p: &Pipeline, d: usize, t2: f64) -> Result<CodeReport, SweepError> {
    let q = p.qudit(d, t2)?;
    Ok(CodeReport { codewords: q.codewords, snapshot: q.snapshot, approximate: q.approximate })
}

/// Pulse schedule of the logical `R(θ, φ)` on the `(d, T₂)` code.
pub fn compile_report(p: &Pipeline, d: usize, t2: f64, theta: f64, phi: f64) -> Result<et_compiler::PulseSchedule, SweepError> {
    let q = p.qudit(d, t2)?;
    let h = et_compiler::planar_generator(theta, phi, &q.basis).map_err(ProtocolError::from)?;
    Ok(et_compiler::schedule_pulses(&h, &q.energies, p.rabi, et_compiler::ScheduleOptions::default()).map_err(ProtocolError::from)?)
}

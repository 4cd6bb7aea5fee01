use clap::{Args, Parser, Subcommand};
use qec_protocol::{MeasurementModel, PipelineConfig};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use sweep_cli::*;
use two_qubit_switch::{ArchitectureFile, SwitchArchitecture};

/// Error-transparent logical qudits in molecular spin clusters: spectra,
/// codes, compiled gates and error-correction cycle sweeps.
#[derive(Parser)]
#[command(name = "qudit-ftqec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Point {
    /// Pipeline configuration (defaults to the bundled Ni₇ file).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Qudit dimension.
    #[arg(long, default_value_t = 4)]
    d: usize,
    /// Coherence time in μs.
    #[arg(long, default_value_t = 10.0)]
    t2_us: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenstates of the spin cluster (JSON).
    Spectrum {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        levels: usize,
    },
    /// Dephasing rates and Kraus operators of the lowest d levels (JSON).
    Kraus {
        #[command(flatten)]
        point: Point,
        /// Snapshot time in ns (defaults to the reference gate duration).
        #[arg(long)]
        t_ns: Option<f64>,
    },
    /// Code words used at (d, T₂) (JSON).
    Codewords {
        #[command(flatten)]
        point: Point,
    },
    /// Pulse schedule of the logical R(θ, φ) (JSON).
    Compile {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
        phi: f64,
    },
    /// One gate + error-correction cycle (JSON report).
    Cycle {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
        phi: f64,
        /// Syndrome misassignment probability per repetition.
        #[arg(long, default_value_t = 0.0)]
        p_m: f64,
        /// Syndrome repetitions (odd).
        #[arg(long, default_value_t = 1)]
        n_rep: usize,
        /// Evaluate the switch-mediated C-φ cycle instead (φ from the
        /// configuration's architecture section).
        #[arg(long)]
        two_qubit: bool,
    },
    /// Run a sweep plan and write CSV.
    Sweep {
        /// Plan JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV (defaults to the plan's `output`, else stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Fit log-log slopes (and crossovers) of a sweep CSV (JSON).
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = XKind::InvT2)]
        x: XKind,
    },
}

/// Failure class, mapped to the exit code.
enum Failure {
    /// Bad arguments or configuration: exit 1.
    Config(String),
    /// A requested point could not be computed: exit 2.
    Point(String),
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Protocol(_) | SweepError::Switch(_) | SweepError::InsufficientPoints(_) => Failure::Point(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn emit<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn config(path: &Option<PathBuf>) -> Result<PipelineConfig, Failure> {
    Ok(match path {
        Some(p) => load_config(p)?,
        None => PipelineConfig::ni7_default(),
    })
}

fn pipeline(cfg: &PipelineConfig) -> Result<qec_protocol::Pipeline, Failure> {
    build_pipeline(cfg, FileCodeStore::from_env()).map_err(|e| Failure::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Spectrum { config: c, levels } => {
            let cfg = config(&c)?;
            let spectrum = spin_model::SpinSpectrum::compute(&cfg.topology.clone().into()).map_err(|e| Failure::Config(e.to_string()))?;
            emit(&spectrum_report(&spectrum, levels))
        }
        Command::Kraus { point, t_ns } => {
            let p = pipeline(&config(&point.config)?)?;
            let t = t_ns.map_or(p.reference_gate(), |t| t * 1e-9);
            emit(&kraus_report(&p, point.d, point.t2_us * 1e-6, t)?)
        }
        Command::Codewords { point } => {
            let p = pipeline(&config(&point.config)?)?;
            emit(&code_report(&p, point.d, point.t2_us * 1e-6)?)
        }
        Command::Compile { point, theta, phi } => {
            let p = pipeline(&config(&point.config)?)?;
            emit(&compile_report(&p, point.d, point.t2_us * 1e-6, theta, phi)?)
        }
        Command::Cycle { point, theta, phi, p_m, n_rep, two_qubit } => {
            let cfg = config(&point.config)?;
            let mm = MeasurementModel::new(p_m, n_rep).map_err(|e| Failure::Config(e.to_string()))?;
            let p = pipeline(&cfg)?;
            let t2 = point.t2_us * 1e-6;
            if two_qubit {
                let arch = ArchitectureFile::from_value(cfg.architecture.as_ref()).map_err(|e| Failure::Config(e.to_string()))?;
                let arch = ArchitectureFile { unit_d: point.d, ..arch };
                let a = SwitchArchitecture::encoded(&p, &arch, t2, &mm, false).map_err(|e| Failure::Point(e.to_string()))?;
                emit(&a.report())
            } else {
                let q = p.qudit(point.d, t2).map_err(|e| Failure::Point(e.to_string()))?;
                emit(&q.entanglement_error(theta, phi, &mm).map_err(|e| Failure::Point(e.to_string()))?)
            }
        }
        Command::Sweep { config: plan_path, out, jobs } => {
            let plan = SweepPlan::load(&plan_path)?;
            plan.validate()?;
            let cfg = plan.pipeline_config()?;
            let arch = ArchitectureFile::from_value(cfg.architecture.as_ref()).map_err(|e| Failure::Config(e.to_string()))?;
            let p = pipeline(&cfg)?;
            let data = run_sweep(&plan, &p, &arch, jobs)?;
            match out.or(plan.output.clone()) {
                Some(path) => export(&data.rows, &path)?,
                None => write_csv(&data.rows, std::io::stdout().lock()).map_err(|e| Failure::Config(e.to_string()))?,
            }
            if data.failures > 0 {
                return Err(Failure::Point(format!("{} of the sweep's points failed", data.failures)));
            }
            Ok(())
        }
        Command::Fit { input, x } => {
            let rows = read_csv(&input)?;
            let fits = fit_dataset(&rows, x);
            emit(&fits)?;
            if fits.iter().any(|f| f.fit.is_none()) {
                return Err(Failure::Point("some curves could not be fitted".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Point(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

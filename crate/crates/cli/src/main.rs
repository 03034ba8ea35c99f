use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use equikernel::audit::{check_equivariance, check_oracle, ORACLE_MAX_DEGREE};
use equikernel::bench::{run_benchmark, Kernel, MIN_REPS};
use equikernel::graph::{parse_xyz, AtomicStructure};
use equikernel::model::{load_checkpoint, Model, ModelConfig};
use equikernel::relax::{relax, RelaxOptions, DEFAULT_FMAX, DEFAULT_MAX_STEPS, DEFAULT_STEP_SIZE};
use equikernel::Error;
use serde::Serialize;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "equikernel", version, about = "Equivariance audits, kernel benchmarks and structure prediction")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "EQUIKERNEL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rotate-commute audit of every layer and of the full model.
    CheckEquivariance(EquivarianceArgs),
    /// Compare the SO(2) convolution against the Clebsch-Gordan tensor product.
    CheckOracle(OracleArgs),
    /// Time both convolution kernels over a range of L_max.
    Bench(BenchArgs),
    /// Energy and forces of a structure as JSON.
    Predict(PredictArgs),
    /// Steepest-descent relaxation driven by the predicted forces.
    Relax(RelaxArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Model configuration as JSON.
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,

    /// Built-in configuration: tiny or base.
    #[arg(long)]
    profile: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> equikernel::Result<Option<ModelConfig>> {
        match (&self.config, &self.profile) {
            (Some(path), _) => ModelConfig::load(path).map(Some),
            (None, Some(name)) => ModelConfig::profile(name).map(Some),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("weights").required(true).args(["checkpoint", "random_seed"])))]
struct ModelArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Trained weights; the configuration stored with them is used.
    #[arg(long)]
    checkpoint: Option<PathBuf>,

    /// Random weights from this seed.
    #[arg(long)]
    random_seed: Option<u64>,
}

impl ModelArgs {
    fn load(&self) -> equikernel::Result<Model> {
        let config = self.config.resolve()?;
        match (&self.checkpoint, self.random_seed) {
            (Some(path), _) => {
                let model = load_checkpoint(path)?;
                if let Some(c) = config {
                    if &c != model.config() {
                        return Err(Error::Config(format!(
                            "{} was saved with a different configuration",
                            path.display()
                        )));
                    }
                }
                Ok(model)
            }
            (None, Some(seed)) => Model::random(&config.unwrap_or_else(ModelConfig::tiny), seed),
            (None, None) => Err(Error::Argument("either --checkpoint or --random-seed is required".into())),
        }
    }
}

#[derive(Args)]
struct EquivarianceArgs {
    #[command(flatten)]
    config: ConfigArgs,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 5)]
    trials: usize,

    /// Perturb the coupling coefficients; the audit is expected to fail.
    #[arg(long)]
    corrupt_cg: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = ORACLE_MAX_DEGREE)]
    lmax: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 20)]
    edges: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated L_max values.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 6, 8])]
    lmax: Vec<usize>,

    /// SO(2) order cutoff; defaults to L_max.
    #[arg(long)]
    mmax: Option<usize>,

    #[arg(long, default_value_t = 4)]
    channels: usize,

    #[arg(long, default_value_t = 5)]
    reps: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    xyz: PathBuf,

    #[command(flatten)]
    model: ModelArgs,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RelaxArgs {
    xyz: PathBuf,

    #[command(flatten)]
    model: ModelArgs,

    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,

    /// Force threshold in eV/Å.
    #[arg(long, default_value_t = DEFAULT_FMAX)]
    fmax: f64,

    /// Å² per eV.
    #[arg(long, default_value_t = DEFAULT_STEP_SIZE)]
    step_size: f64,

    /// Trace CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Final geometry destination; stderr when absent.
    #[arg(long)]
    final_xyz: Option<PathBuf>,
}

#[derive(Serialize)]
struct PredictionJson {
    energy: f64,
    forces: Vec<[f64; 3]>,
    units: Units,
}

#[derive(Serialize)]
struct Units {
    energy: &'static str,
    forces: &'static str,
}

enum Failure {
    Usage(String),
    Fail(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Argument(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Fail(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Fail(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_structure(path: &Path) -> Result<AtomicStructure, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Fail(format!("{}: {e}", path.display())))?;
    parse_xyz(&text).map_err(|e| Failure::Fail(format!("{}: {e}", path.display())))
}

fn cmd_check_equivariance(args: &EquivarianceArgs) -> Outcome {
    let config = args.config.resolve()?.unwrap_or_else(ModelConfig::tiny);
    let report = check_equivariance(&config, args.seed, args.trials, args.corrupt_cg)?;
    print!("{}", report.to_text());
    if report.passed() {
        println!("all {} checks passed", report.entries.len());
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|e| e.name).collect();
        Err(Failure::Fail(format!("equivariance violated by: {}", names.join(", "))))
    }
}

fn cmd_check_oracle(args: &OracleArgs) -> Outcome {
    let report = check_oracle(args.lmax, args.seed, args.edges)?;
    println!(
        "L_max={} edges={} max_error={:e} tolerance={:e} {}",
        report.l_max,
        report.n_edges,
        report.max_error,
        report.tolerance,
        if report.passed() { "PASS" } else { "FAIL" }
    );
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Fail("eSCN and tensor product disagree".into()))
    }
}

fn cmd_bench(args: &BenchArgs) -> Outcome {
    if args.reps < MIN_REPS {
        return Err(Failure::Usage(format!("--reps must be at least {MIN_REPS}")));
    }
    let report = run_benchmark(&args.lmax, args.mmax, args.channels, args.reps, args.seed)?;
    emit(args.out.as_deref(), &report.to_csv())?;
    let fmt = |s: Option<f64>| s.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
    for kernel in Kernel::ALL {
        eprintln!("slope {} {}", kernel.name(), fmt(report.slope(kernel)));
    }
    eprintln!("slope gap {}", fmt(report.slope_gap()));
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Outcome {
    let structure = read_structure(&args.xyz)?;
    let model = args.model.load()?;
    let p = model.predict(&structure)?;
    let json = PredictionJson {
        energy: p.energy,
        forces: p.forces.iter().map(|f| [f.x, f.y, f.z]).collect(),
        units: Units {
            energy: "eV",
            forces: "eV/Å",
        },
    };
    let mut text = serde_json::to_string_pretty(&json).map_err(|e| Failure::Fail(e.to_string()))?;
    text.push('\n');
    emit(args.out.as_deref(), &text)
}

fn cmd_relax(args: &RelaxArgs) -> Outcome {
    let structure = read_structure(&args.xyz)?;
    let model = args.model.load()?;
    let options = RelaxOptions {
        max_steps: args.max_steps,
        fmax: args.fmax,
        step_size: args.step_size,
        ..RelaxOptions::default()
    };
    options.validate()?;
    let (trace, last) = match relax(&model, &structure, &options) {
        Ok(done) => done,
        Err(e) => {
            emit(args.out.as_deref(), &e.trace.to_csv())?;
            if let Some(step) = e.trace.last() {
                eprintln!("last good step {}: energy {:e} eV, F_max {:e} eV/Å", step.step, step.energy, step.fmax);
            }
            return Err(Failure::Fail(e.to_string()));
        }
    };
    emit(args.out.as_deref(), &trace.to_csv())?;
    let step = trace.last().expect("relaxation records at least one step");
    eprintln!(
        "{} after {} steps: energy {:e} eV, F_max {:e} eV/Å",
        if trace.converged { "converged" } else { "step limit reached" },
        trace.len(),
        step.energy,
        step.fmax
    );
    match &args.final_xyz {
        Some(path) => fs::write(path, last.to_xyz())?,
        None => eprint!("{}", last.to_xyz()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    }
    let outcome = match &cli.command {
        Command::CheckEquivariance(a) => cmd_check_equivariance(a),
        Command::CheckOracle(a) => cmd_check_oracle(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Relax(a) => cmd_relax(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Fail(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

//! `fsskit` command-line driver.
//!
//! Exit status: 0 success, 1 a certificate failed, 2 invalid configuration, 3 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fsskit::scenario::Scenario;
use fsskit::{catalog, Error};

#[derive(Parser)]
#[command(name = "fsskit", version, about = "Asymptotic fundamental systems of perturbed first-order systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long, short)]
    config: String,
    /// Worker threads (default: all cores).
    #[arg(long, short)]
    jobs: Option<usize>,
    /// Output directory (default: the scenario's `output`, else `out/<name>`).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Overrides a named tolerance; repeatable.
    #[arg(long = "tol-override", value_name = "KEY=VAL")]
    tol_override: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sector and large-sector geometry.
    Sectors(Common),
    /// Fundamental systems at every planned lambda.
    Fss(Common),
    /// Systems of the planned large sectors.
    Largesector(Common),
    /// Fundamental systems of the second-order pencil.
    Sturm(Common),
    /// Tabulates a kernel quantity over the sampling plan.
    SweepTheta {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "theta")]
        quantity: Quantity,
    },
    /// Certificates and empirical checks; exit status reflects the certificates.
    Verify(Common),
    /// Lists the bundled scenarios.
    List,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Theta,
    Gamma,
    ResidualSup,
    L2Partial,
}

/// Reason for a nonzero exit.
#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Certificate(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Certificate(_) => 1,
            Failure::Schema(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BelowThreshold { .. } => Failure::Certificate(format!("threshold: {e}")),
            Error::InvalidCoefficient(_) | Error::InvalidSystem(_) | Error::NotSummable(_) | Error::Unsupported(_) => {
                Failure::Schema(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Numerical(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Numerical(format!("json: {e}"))
    }
}

pub type Outcome = std::result::Result<(), Failure>;

/// A loaded scenario and where its results go.
pub struct Run {
    pub scenario: Scenario,
    pub out: PathBuf,
}

fn load(common: &Common) -> Result<Run, Failure> {
    let json = if std::path::Path::new(&common.config).is_file() {
        std::fs::read_to_string(&common.config).map_err(|e| Failure::Schema(format!("{}: {e}", common.config)))?
    } else if let Some(src) = catalog::source(&common.config) {
        src.to_string()
    } else {
        return Err(Failure::Schema(format!(
            "'{}' is neither a file nor a bundled scenario ({})",
            common.config,
            catalog::names().collect::<Vec<_>>().join(", ")
        )));
    };
    let mut scenario = catalog::parse(&json).map_err(|e| Failure::Schema(e.to_string()))?;
    for kv in &common.tol_override {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Schema(format!("--tol-override expects KEY=VAL, got '{kv}'")))?;
        let v: f64 = v.trim().parse().map_err(|_| Failure::Schema(format!("--tol-override {k}: '{v}' is not a number")))?;
        scenario.tolerances.insert(k.trim().to_string(), v);
    }
    commands::check_tolerance_keys(&scenario)?;
    let out = common
        .out
        .clone()
        .or_else(|| scenario.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));
    std::fs::create_dir_all(&out)?;
    Ok(Run { scenario, out })
}

fn dispatch(cmd: Command) -> Outcome {
    let (common, f): (Common, Box<dyn FnOnce(&Run) -> Outcome + Send>) = match cmd {
        Command::List => {
            for n in catalog::names() {
                let s = catalog::load(n).map_err(Failure::from)?;
                println!("{n:<16} {}", s.description);
            }
            return Ok(());
        }
        Command::Sectors(c) => (c, Box::new(commands::sectors)),
        Command::Fss(c) => (c, Box::new(commands::fss)),
        Command::Largesector(c) => (c, Box::new(commands::largesector)),
        Command::Sturm(c) => (c, Box::new(commands::sturm)),
        Command::SweepTheta { common, quantity } => (common, Box::new(move |r| commands::sweep(r, quantity))),
        Command::Verify(c) => (c, Box::new(commands::verify)),
    };
    let run = load(&common)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = common.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(|e| Failure::Numerical(format!("thread pool: {e}")))?;
    pool.install(|| f(&run))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Schema(m) => eprintln!("configuration error: {m}"),
                Failure::Certificate(m) => eprintln!("certificate failed: {m}"),
                Failure::Numerical(m) => eprintln!("numerical failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

//! Command-line front end. Every run writes its artifacts and a
//! `manifest.json` with SHA-256 checksums to the output directory.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::rng::DEFAULT_SEED;
use crate::scenarios::{params_map, run, Bundle, Params, Request, ScenarioName, SystemConfig};

/// Environment variable that replaces the default seed.
pub const SEED_ENV: &str = "SWEEP_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "proxsweep",
    version,
    about = "Sweeping processes with prox-regular moving sets: simulation and stability certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate(Options),
    /// Evaluate the stability certificate.
    Certify(Options),
    /// Run two trajectories and check the exponential envelope of their gap.
    Contract(Options),
    /// Find the periodic orbit by iterating the period map.
    Periodic(Options),
    /// Compare analytic projections with the brute-force oracle.
    ProjectTest(Options),
    /// Approximate the global solution by runs started ever earlier.
    Pullback(Options),
    /// Simulate the two-disk crowd model.
    Crowd(Options),
}

impl Command {
    fn parts(&self) -> (&'static str, Request, &Options) {
        match self {
            Command::Simulate(o) => ("simulate", Request::Simulate, o),
            Command::Certify(o) => ("certify", Request::Certify, o),
            Command::Contract(o) => ("contract", Request::Contract, o),
            Command::Periodic(o) => ("periodic", Request::Periodic, o),
            Command::ProjectTest(o) => ("project-test", Request::ProjectTest, o),
            Command::Pullback(o) => ("pullback", Request::Pullback, o),
            Command::Crowd(o) => ("crowd", Request::Simulate, o),
        }
    }
}

/// Flags mirror the configuration keys one to one.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Configuration file of `key = value` lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for artifacts and the manifest.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub period: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    #[arg(long = "box", allow_hyphen_values = true)]
    pub box_bound: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<String>,
    #[arg(long)]
    pub max_iter: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub horizons: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_eval: Option<String>,
    #[arg(long)]
    pub queries: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub resolution: Option<String>,
    #[arg(long)]
    pub refine: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub slack: Option<String>,
}

impl Options {
    fn flag_params(&self) -> Result<Params, Error> {
        let pairs = [
            ("scenario", &self.scenario),
            ("beta", &self.beta),
            ("delta", &self.delta),
            ("period", &self.period),
            ("alpha", &self.alpha),
            ("r", &self.r),
            ("box", &self.box_bound),
            ("h", &self.h),
            ("seed", &self.seed),
            ("t0", &self.t0),
            ("t1", &self.t1),
            ("x0", &self.x0),
            ("x0b", &self.x0b),
            ("tol", &self.tol),
            ("max-iter", &self.max_iter),
            ("horizons", &self.horizons),
            ("t-eval", &self.t_eval),
            ("queries", &self.queries),
            ("resolution", &self.resolution),
            ("refine", &self.refine),
            ("slack", &self.slack),
        ];
        let mut p = Params::default();
        for (key, value) in pairs {
            if let Some(v) = value {
                p.set(key, v)?;
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    options: std::collections::BTreeMap<String, String>,
    seed: u64,
    artifacts: Vec<ManifestEntry>,
}

enum Failure {
    Invalid(String),
    Numeric(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Resolves parameters: config file, then flags, then the seed fallback
/// (`SWEEP_SEED`, else the built-in default).
fn resolve(name: &str, opts: &Options, env_seed: Option<&str>) -> Result<Params, Failure> {
    let mut params = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
            Params::parse(&text)?
        }
        None => Params::default(),
    };
    params = params.merged(&opts.flag_params()?);
    if name == "crowd" {
        match params.scenario {
            None | Some(ScenarioName::Crowd) => params.scenario = Some(ScenarioName::Crowd),
            Some(ScenarioName::Example) => {
                return Err(Failure::Invalid("the crowd command needs scenario = crowd".into()))
            }
        }
    }
    if params.seed.is_none() {
        let seed = match env_seed {
            Some(v) => {
                let mut p = Params::default();
                p.set("seed", v)
                    .map_err(|e| Failure::Invalid(format!("{SEED_ENV}: {e}")))?;
                p.seed.expect("seed was set")
            }
            None => DEFAULT_SEED,
        };
        params.seed = Some(seed);
    }
    Ok(params)
}

fn write_bundle(out_dir: &Path, name: &str, params: &Params, bundle: &Bundle) -> Result<PathBuf, Failure> {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", out_dir.display()));
    fs::create_dir_all(out_dir).map_err(io)?;
    let mut entries = Vec::new();
    for a in &bundle.artifacts {
        fs::write(out_dir.join(&a.name), &a.bytes).map_err(io)?;
        entries.push(ManifestEntry {
            name: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len(),
        });
    }
    let manifest = Manifest {
        command: name.to_string(),
        options: params_map(params),
        seed: params.seed.unwrap_or(DEFAULT_SEED),
        artifacts: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    let path = out_dir.join("manifest.json");
    fs::write(&path, text).map_err(io)?;
    Ok(path)
}

fn execute(cli: &Cli, env_seed: Option<&str>) -> Result<(), Failure> {
    let (name, request, opts) = cli.command.parts();
    let params = resolve(name, opts, env_seed)?;
    let config = SystemConfig::from_params(&params)?;
    let bundle = run(&config, request, &params)?;
    let manifest = write_bundle(&opts.out_dir, name, &params, &bundle)?;
    if let Some(report) = bundle.artifacts.iter().find(|a| a.name.ends_with(".json")) {
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(&report.bytes);
    }
    eprintln!(
        "{name}: wrote {} artifact(s) and {}",
        bundle.artifacts.len(),
        manifest.display()
    );
    Ok(())
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I, env_seed: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, env_seed) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            EXIT_NUMERIC
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            EXIT_IO
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_cover_every_key() {
        let cmd = Cli::command();
        let sim = cmd.find_subcommand("simulate").unwrap();
        for (key, _) in crate::scenarios::KEYS {
            assert!(
                sim.get_arguments().any(|a| a.get_long() == Some(key)),
                "missing flag --{key}"
            );
        }
    }

    #[test]
    fn env_seed_only_replaces_default() {
        let cli = Cli::try_parse_from(["proxsweep", "certify"]).unwrap();
        let (_, _, o) = cli.command.parts();
        assert_eq!(resolve("certify", o, Some("17")).ok().unwrap().seed, Some(17));
        assert_eq!(resolve("certify", o, None).ok().unwrap().seed, Some(DEFAULT_SEED));
        let cli = Cli::try_parse_from(["proxsweep", "certify", "--seed", "5"]).unwrap();
        let (_, _, o) = cli.command.parts();
        assert_eq!(resolve("certify", o, Some("17")).ok().unwrap().seed, Some(5));
        assert!(resolve("certify", o, Some("x")).is_ok());
        let cli = Cli::try_parse_from(["proxsweep", "certify"]).unwrap();
        let (_, _, o) = cli.command.parts();
        assert!(resolve("certify", o, Some("not-a-seed")).is_err());
    }

    #[test]
    fn unknown_flag_is_a_validation_error() {
        assert_eq!(
            main_with_args(["proxsweep", "certify", "--colour", "red"], None),
            EXIT_INVALID
        );
    }
}

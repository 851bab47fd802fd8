use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaussnet::cluster::{builtin_graph, EsConfig};
use gaussnet::io::{parse_json, GraphJson, NetworkJson, ResourceJson, UsqzJson};
use gaussnet::resource::{paper_profile, SqueezingProfile, DETECTION_LOSS, SHIPPED_LEADING_DB};
use gaussnet::secret::{db_grid, SharingNetwork};
use gaussnet::Error;

mod run;

use run::{execute_into, Format, Manifest, RunError, RunSpec, SecretMode};

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(
    name = "gaussnet",
    version,
    about = "Gaussian multimode network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON input for the command.
    #[arg(long)]
    input: Option<PathBuf>,
    /// `shipped`, `shipped:<leading dB>`, `vacuum`, `vacuum:<modes>` or a JSON
    /// file with `profile_db` (and optionally `leading_db`).
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Seed for the optimizer; other commands are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Uniform loss fraction.
    #[arg(long)]
    loss: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Pixel covariance of the resource, its eigenmodes and a phase sweep.
    Resource {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 201)]
        sweep_points: usize,
    },
    /// Optimized cluster state and its nullifier variances.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Builtin graph as `name:n`, used when no `--input` is given.
        #[arg(long, default_value = "diagonal_square:4")]
        graph: String,
        /// Optimizer configuration JSON.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Secret-sharing fidelities for every access party, or a squeezing sweep.
    Secret {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SecretMode::Run)]
        mode: SecretMode,
        /// Sweep grid as `start:end:points` in dB.
        #[arg(long, default_value = "0:-15:31")]
        grid: String,
    },
    /// Re-runs the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

enum Failure {
    Input(String),
    Solver(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularSystem { .. } | Error::NotPositiveDefinite(_) => {
                Failure::Solver(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Model(e) => e.into(),
            RunError::Io(path, e) => Failure::Io(format!("{path}: {e}")),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    Ok(parse_json(&read(path)?, &path.display().to_string())?)
}

fn parse_number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, Failure> {
    s.trim()
        .parse()
        .map_err(|_| Failure::Input(format!("cannot read {what} from `{s}`")))
}

fn resolve_profile(arg: Option<&str>) -> Result<Option<SqueezingProfile>, Failure> {
    let Some(arg) = arg else { return Ok(None) };
    let (head, tail) = match arg.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (arg, None),
    };
    let profile = match (head, tail) {
        ("shipped", None) => paper_profile(SHIPPED_LEADING_DB)?,
        ("shipped", Some(db)) => paper_profile(parse_number(db, "a leading dB level")?)?,
        ("vacuum", None) => SqueezingProfile::vacuum(16),
        ("vacuum", Some(n)) => SqueezingProfile::vacuum(parse_number(n, "a mode count")?),
        _ => load::<ResourceJson>(Path::new(arg))?.profile()?,
    };
    Ok(Some(profile))
}

fn default_profile() -> SqueezingProfile {
    paper_profile(SHIPPED_LEADING_DB).expect("shipped profile is valid")
}

fn build_spec(command: Command) -> Result<(RunSpec, PathBuf), Failure> {
    match command {
        Command::Resource {
            common,
            sweep_points,
        } => {
            let res: ResourceJson = match &common.input {
                Some(p) => load(p)?,
                None => ResourceJson::default(),
            };
            let profile = match resolve_profile(common.profile.as_deref())? {
                Some(p) => p,
                None => res.profile()?,
            };
            let n = profile.len();
            let loss = match common.loss {
                Some(l) => vec![l; n],
                None => res.loss.expand(n),
            };
            if sweep_points == 0 {
                return Err(Failure::Input("--sweep-points must be positive".into()));
            }
            let u_sqz = match res.u_sqz {
                UsqzJson::Matrix(m) if m.project => {
                    UsqzJson::Matrix(gaussnet::io::UnitaryJson::from_unitary(&m.to_unitary()?))
                }
                other => other,
            };
            Ok((
                RunSpec::Resource {
                    profile_variances: profile.variances().to_vec(),
                    u_sqz,
                    loss,
                    dark_noise: res.dark_noise,
                    sweep_points,
                    format: common.format,
                },
                common.out_dir,
            ))
        }
        Command::Cluster {
            common,
            graph,
            config,
        } => {
            let graph = match &common.input {
                Some(p) => load::<GraphJson>(p)?,
                None => {
                    let (name, n) = graph.split_once(':').ok_or_else(|| {
                        Failure::Input(format!("--graph expects name:n, got `{graph}`"))
                    })?;
                    GraphJson::from_graph(&builtin_graph(name, parse_number(n, "a node count")?)?)
                }
            };
            graph.to_graph()?;
            let mut config: EsConfig = match &config {
                Some(p) => load(p)?,
                None => EsConfig::default(),
            };
            if let Some(seed) = common.seed {
                config.seed = seed;
            }
            config.validate()?;
            let profile =
                resolve_profile(common.profile.as_deref())?.unwrap_or_else(default_profile);
            Ok((
                RunSpec::Cluster {
                    graph,
                    profile_variances: profile.variances().to_vec(),
                    loss: common.loss.unwrap_or(DETECTION_LOSS),
                    config,
                    format: common.format,
                },
                common.out_dir,
            ))
        }
        Command::Secret { common, mode, grid } => {
            let net = match &common.input {
                Some(p) => load::<NetworkJson>(p)?.to_network()?,
                None => SharingNetwork::standard(),
            };
            let parts: Vec<&str> = grid.split(':').collect();
            let grid = match parts.as_slice() {
                [a, b, n] => db_grid(
                    parse_number(a, "a grid start")?,
                    parse_number(b, "a grid end")?,
                    parse_number(n, "a grid size")?,
                ),
                _ => {
                    return Err(Failure::Input(format!(
                        "--grid expects start:end:points, got `{grid}`"
                    )))
                }
            };
            if let Some(bad) = grid.iter().find(|d| **d > 0.0) {
                return Err(Failure::Input(format!(
                    "grid level {bad} dB is above shot noise"
                )));
            }
            let profile =
                resolve_profile(common.profile.as_deref())?.unwrap_or_else(default_profile);
            Ok((
                RunSpec::Secret {
                    network: NetworkJson::from_network(&net),
                    profile_variances: profile.variances().to_vec(),
                    loss: common.loss.unwrap_or(0.0),
                    mode,
                    grid,
                    format: common.format,
                },
                common.out_dir,
            ))
        }
        Command::Replay { manifest, out_dir } => {
            let m: Manifest = load(&manifest)?;
            Ok((m.run, out_dir))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_spec(cli.command).and_then(|(spec, out)| Ok(execute_into(&spec, &out)?));
    match result {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}

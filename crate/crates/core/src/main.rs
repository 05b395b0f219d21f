use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use torus_lp::bilinear::{apply_direct, expand, BilinearSymbol, ParaproductConfig};
use torus_lp::grid_field::{random_band_limited, FieldJson};
use torus_lp::harness::{
    run_leibniz, run_lemma_suite, run_nikolskij, run_norm_bench, run_scattering, ExperimentKind, ExperimentSpec,
};
use torus_lp::littlewood_paley::{make_lp_family, TransitionProfile};
use torus_lp::spaces::{norm, SpaceSpec};
use torus_lp::{Error, Field, Grid};

#[derive(Parser)]
#[command(name = "torus-lp", version, about = "Littlewood-Paley experiments on the periodic grid")]
struct Cli {
    /// Experiment description (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Samples per axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Directory for reports; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Leibniz-type ratio campaign.
    VerifyLeibniz,
    /// Nikol'skij assembly ratios.
    VerifyNikolskij,
    /// Scattering decay tables and estimate ratios.
    Scatter,
    /// Constants of the auxiliary lemmas.
    Lemmas,
    /// Norm of a field (from JSON, or random) in the space given by `--space`.
    Norm {
        /// Space descriptor as inline TOML, e.g. `family = "tl"; p = 2; q = 2; s = 1`.
        #[arg(long)]
        space: Option<String>,
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Apply a bilinear symbol to two fields.
    Apply {
        #[arg(long, default_value = "one")]
        symbol: String,
        #[arg(long)]
        f: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
    },
    /// Paraproduct coefficient tables for a symbol.
    Coeffs {
        #[arg(long, default_value = "one")]
        symbol: String,
        #[arg(long, default_value_t = 4)]
        a_max: usize,
    },
}

enum Failure {
    Assertion(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Precondition(_) | Error::Unsupported(_) => Failure::Config(e.to_string()),
            _ => Failure::Assertion(e.to_string()),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("{secs}")
}

fn load_spec(cli: &Cli, expected: &[ExperimentKind], fallback: Option<&str>) -> Result<ExperimentSpec, Failure> {
    let text = match (&cli.config, fallback) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?,
        (None, Some(text)) => text.to_string(),
        (None, None) => return Err(Failure::Config("--config is required for this command".into())),
    };
    let mut spec: ExperimentSpec = toml::from_str(&text).map_err(config_err)?;
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(n) = cli.grid {
        spec.grid = n;
    }
    if let Some(d) = cli.dim {
        spec.dim = d;
    }
    if !expected.contains(&spec.kind) {
        return Err(Failure::Config(format!("config kind {:?} does not fit this command (expected one of {expected:?})", spec.kind)));
    }
    spec.validate()?;
    Ok(spec)
}

fn emit(cli: &Cli, name: &str, json: String, csv: Option<String>) -> Result<(), Failure> {
    let (body, ext) = match (cli.format, csv) {
        (Format::Csv, Some(c)) => (c, "csv"),
        _ => (json, "json"),
    };
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(config_err)?;
            let path = Path::new(dir).join(format!("{name}.{ext}"));
            std::fs::write(&path, body).map_err(config_err)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            let nl = if body.ends_with('\n') { "" } else { "\n" };
            match write!(out, "{body}{nl}").and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(config_err(e)),
                _ => {}
            }
        }
    }
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Assertion(e.to_string()))
}

fn read_field(path: &Path) -> Result<Field, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let fj: FieldJson = serde_json::from_str(&text).map_err(config_err)?;
    Ok(fj.to_field()?)
}

fn grid_of(cli: &Cli) -> Result<Grid, Failure> {
    Ok(Grid::new(cli.dim.unwrap_or(1), cli.grid.unwrap_or(128))?)
}

fn random_pair(cli: &Cli, grid: Grid) -> Result<(Field, Field), Failure> {
    let seed = cli.seed.unwrap_or(0);
    let hi = (grid.n() / 4) as f64;
    Ok((random_band_limited(grid, 1.0, hi, seed, true)?, random_band_limited(grid, 1.0, hi, seed ^ 0x5555_5555, true)?))
}

const LEMMA_DEFAULT: &str = "kind = \"lemma_suite\"\n";

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::VerifyLeibniz => {
            let spec = load_spec(cli, &[ExperimentKind::Leibniz, ExperimentKind::LeibnizCm, ExperimentKind::HardyLeibniz, ExperimentKind::NormBench], None)?;
            let mut rep = if spec.kind == ExperimentKind::NormBench { run_norm_bench(&spec)? } else { run_leibniz(&spec)? };
            rep.timestamp = Some(timestamp());
            emit(cli, "leibniz", rep.to_json()?, Some(rep.to_csv()?))?;
            eprintln!("max ratio {:.6e}, median {:.6e}, skipped {}", rep.max_ratio, rep.median_ratio, rep.skipped);
            if !rep.all_finite() {
                return Err(Failure::Assertion("non-finite or vanishing ratio".into()));
            }
        }
        Command::VerifyNikolskij => {
            let spec = load_spec(cli, &[ExperimentKind::Nikolskij], None)?;
            let mut rep = run_nikolskij(&spec)?;
            rep.timestamp = Some(timestamp());
            emit(cli, "nikolskij", rep.to_json()?, Some(rep.to_csv()?))?;
            eprintln!("max ratio {:.6e}", rep.max_ratio);
            if !rep.all_finite() {
                return Err(Failure::Assertion("non-finite or vanishing ratio".into()));
            }
        }
        Command::Scatter => {
            let spec = load_spec(cli, &[ExperimentKind::Scattering], None)?;
            let mut rep = run_scattering(&spec)?;
            rep.timestamp = Some(timestamp());
            emit(cli, "scattering", json(&rep)?, Some(rep.to_csv()?))?;
            for t in &rep.tables {
                eprintln!(
                    "gamma {}: lambda_min {}, decay rate {:?}, max ratio {:.6e}, budget {:?}",
                    t.gamma, t.lambda_min, t.decay_rate, t.max_ratio, t.gamma_budget
                );
            }
            if !rep.passed() {
                return Err(Failure::Assertion("scattering checks failed".into()));
            }
        }
        Command::Lemmas => {
            let spec = load_spec(cli, &[ExperimentKind::LemmaSuite], Some(LEMMA_DEFAULT))?;
            let rep = run_lemma_suite(&spec)?;
            emit(cli, "lemmas", json(&rep)?, None)?;
            if !rep.passed() {
                return Err(Failure::Assertion(format!("lemma checks failed: {:?}", rep.failures)));
            }
        }
        Command::Norm { space, field } => {
            let space = space.as_deref().ok_or_else(|| Failure::Config("--space is required".into()))?;
            let spec: SpaceSpec = toml::from_str(&space.replace(';', "\n")).map_err(config_err)?;
            let f = match field {
                Some(p) => read_field(p)?,
                None => random_pair(cli, grid_of(cli)?)?.0,
            };
            let fam = make_lp_family(TransitionProfile::default(), f.grid())?;
            let v = norm(&f, &spec, &fam)?;
            emit(cli, "norm", json(&serde_json::json!({ "space": spec, "norm": v }))?, None)?;
        }
        Command::Apply { symbol, f, g } => {
            let sigma = BilinearSymbol::parse(symbol).map_err(config_err)?;
            let (f, g) = match (f, g) {
                (Some(a), Some(b)) => (read_field(a)?, read_field(b)?),
                (None, None) => random_pair(cli, grid_of(cli)?)?,
                _ => return Err(Failure::Config("give both --f and --g or neither".into())),
            };
            let out = apply_direct(&sigma, &f, &g)?;
            emit(cli, "apply", json(&FieldJson::from_field(&out))?, None)?;
        }
        Command::Coeffs { symbol, a_max } => {
            let sigma = BilinearSymbol::parse(symbol).map_err(config_err)?;
            let grid = grid_of(cli)?;
            let fam = make_lp_family(TransitionProfile::default(), grid)?;
            let cfg = ParaproductConfig::new(grid.dim(), *a_max);
            let exp = expand(&sigma, &fam, &cfg)?;
            emit(cli, "coeffs", exp.to_json()?, None)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(m)) => {
            eprintln!("assertion failure: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(2)
        }
    }
}

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use schurblock::stinespring::{build_lambda, build_rho, build_sigma, kronecker_block_product};
use schurblock::suite::MAX_DENSE_DIM;
use schurblock::verify::flip_positive_projection;
use schurblock::{
    run_suite, Ensemble, Error as CoreError, InstanceFile, Operator, PropertyId, PropertyResult,
    StinespringSystem, TrialConfig,
};

mod exit {
    pub const VERIFICATION_FAILED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const IO: u8 = 3;
    pub const INSTANCE: u8 = 4;
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: invalid instance: {message}")]
    Instance { path: PathBuf, message: String },
    #[error("checker error: {0}")]
    Checker(CoreError),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Instance { .. } => exit::INSTANCE,
            CliError::Checker(_) => exit::VERIFICATION_FAILED,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "schurblock",
    version,
    about = "Schur block products and their Stinespring factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the randomized verification suite.
    Verify(VerifyArgs),
    /// Run one checker on a saved instance file.
    Replay(ReplayArgs),
    /// Dump V, F, Q, P (and representations of a stored pair) as JSON matrices.
    EmitSystem(EmitArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ReplayFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Matrix level for the complete boundedness check.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Base seed; SCHURBLOCK_SEED overrides it when set.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// ginibre_complex, hermitian_gaussian or unitary_haar_approx.
    #[arg(long, default_value = "ginibre_complex")]
    ensemble: String,
    /// Comma-separated property ids (default: all).
    #[arg(long, value_delimiter = ',')]
    properties: Vec<String>,
    #[command(flatten)]
    tol: ToleranceArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct ToleranceArgs {
    #[arg(long = "tol.factorization", value_name = "TOL")]
    factorization: Option<f64>,
    #[arg(long = "tol.structure", value_name = "TOL")]
    structure: Option<f64>,
    #[arg(long = "tol.livshits", value_name = "TOL")]
    livshits: Option<f64>,
    #[arg(long = "tol.sharpness", value_name = "TOL")]
    sharpness: Option<f64>,
    #[arg(long = "tol.sandwich", value_name = "TOL")]
    sandwich: Option<f64>,
    #[arg(long = "tol.cauchy_schwarz", value_name = "TOL")]
    cauchy_schwarz: Option<f64>,
    #[arg(long = "tol.decomposition", value_name = "TOL")]
    decomposition: Option<f64>,
    #[arg(long = "tol.cb_level", value_name = "TOL")]
    cb_level: Option<f64>,
    #[arg(long = "tol.lemma_norms", value_name = "TOL")]
    lemma_norms: Option<f64>,
    #[arg(long = "tol.lemma_diag", value_name = "TOL")]
    lemma_diag: Option<f64>,
}

impl ToleranceArgs {
    fn overrides(&self) -> BTreeMap<PropertyId, f64> {
        use PropertyId::*;
        [
            (Factorization, self.factorization),
            (Structure, self.structure),
            (Livshits, self.livshits),
            (Sharpness, self.sharpness),
            (Sandwich, self.sandwich),
            (CauchySchwarz, self.cauchy_schwarz),
            (Decomposition, self.decomposition),
            (CbLevel, self.cb_level),
            (LemmaNorms, self.lemma_norms),
            (LemmaDiag, self.lemma_diag),
        ]
        .into_iter()
        .filter_map(|(id, tol)| tol.map(|t| (id, t)))
        .collect()
    }
}

#[derive(Args, Debug)]
struct ReplayArgs {
    instance: PathBuf,
    #[arg(long)]
    property: String,
    /// Defaults to the property's suite tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = ReplayFormat::Text)]
    format: ReplayFormat,
}

#[derive(Args, Debug)]
struct EmitArgs {
    /// Instance file; its A and B fix n and d and add their representations to the output.
    #[arg(long, conflicts_with_all = ["n", "d"])]
    instance: Option<PathBuf>,
    #[arg(long, required_unless_present = "instance")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "instance")]
    d: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(args) => verify(args),
        Command::Replay(args) => replay(args),
        Command::EmitSystem(args) => emit_system(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(exit::VERIFICATION_FAILED),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}

fn parse_property(id: &str) -> Result<PropertyId, CliError> {
    id.trim()
        .parse()
        .map_err(|e: CoreError| CliError::Config(e.to_string()))
}

fn seed_override(flag: u64) -> Result<u64, CliError> {
    match std::env::var("SCHURBLOCK_SEED") {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("SCHURBLOCK_SEED is not a u64: {raw:?}"))),
        Err(_) => Ok(flag),
    }
}

fn build_config(args: &VerifyArgs) -> Result<TrialConfig, CliError> {
    let ensemble: Ensemble = args.ensemble.parse().map_err(CliError::Config)?;
    let properties = if args.properties.is_empty() {
        PropertyId::ALL.to_vec()
    } else {
        let mut ids = Vec::new();
        for raw in &args.properties {
            let id = parse_property(raw)?;
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        ids
    };
    let config = TrialConfig {
        n: args.n,
        d: args.d,
        k: args.k,
        trials: args.trials,
        seed: seed_override(args.seed)?,
        ensemble,
        tolerances: args.tol.overrides(),
        properties,
    };
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn verify(args: VerifyArgs) -> Result<bool, CliError> {
    let config = build_config(&args)?;
    let report = run_suite(&config).map_err(|e| CliError::Config(e.to_string()))?;
    let mut text = match args.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    write_output(args.out.as_deref(), &text)?;
    for r in &report.results {
        eprintln!(
            "{:<15} {:>4}  failures {}/{}  worst residual {:.3e}",
            r.property_id,
            if r.passed() { "ok" } else { "FAIL" },
            r.failures,
            r.trials,
            r.worst_residual
        );
    }
    Ok(report.pass)
}

fn load_instance(path: &Path) -> Result<InstanceFile, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Instance {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn replay(args: ReplayArgs) -> Result<bool, CliError> {
    let property = parse_property(&args.property)?;
    let tol = args.tol.unwrap_or_else(|| property.default_tolerance());
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Config(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let instance = load_instance(&args.instance)?;
    let result = instance.check(property, tol).map_err(|e| match e {
        CoreError::Config(msg) => CliError::Config(msg),
        e @ (CoreError::Shape { .. }
        | CoreError::InvalidShape(_)
        | CoreError::NonFinite { .. }
        | CoreError::IndexOutOfRange { .. }) => CliError::Instance {
            path: args.instance.clone(),
            message: e.to_string(),
        },
        e => CliError::Checker(e),
    })?;
    let text = match args.format {
        ReplayFormat::Json => {
            serde_json::to_string_pretty(&result).expect("result serializes") + "\n"
        }
        ReplayFormat::Text => describe(&result),
    };
    write_output(None, &text)?;
    Ok(result.passed())
}

fn describe(r: &PropertyResult) -> String {
    let mut s = format!(
        "{:<14} {}\n{:<14} {:e}\n{:<14} {:e}\n",
        "property", r.property_id, "residual", r.worst_residual, "tolerance", r.tolerance_used
    );
    for (name, value) in &r.diagnostics {
        s += &format!("{name:<14} {value}\n");
    }
    s += if r.passed() {
        "status         pass\n"
    } else {
        "status         fail\n"
    };
    s
}

#[derive(Serialize)]
struct EmittedSystem<'a> {
    n: usize,
    d: usize,
    #[serde(rename = "V")]
    isometry: &'a Operator,
    #[serde(rename = "F")]
    flip: &'a Operator,
    #[serde(rename = "Q")]
    projection: &'a Operator,
    #[serde(rename = "P")]
    flip_positive: Operator,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    representations: BTreeMap<&'static str, Operator>,
}

fn emit_system(args: EmitArgs) -> Result<bool, CliError> {
    let instance = args.instance.as_deref().map(load_instance).transpose()?;
    let (n, d) = match &instance {
        Some(inst) => {
            if (inst.a.n(), inst.a.d()) != (inst.b.n(), inst.b.d()) {
                return Err(CliError::Instance {
                    path: args.instance.clone().unwrap_or_default(),
                    message: format!(
                        "A is {}x{} blocks of size {}, B is {}x{} blocks of size {}",
                        inst.a.n(),
                        inst.a.n(),
                        inst.a.d(),
                        inst.b.n(),
                        inst.b.n(),
                        inst.b.d()
                    ),
                });
            }
            (inst.a.n(), inst.a.d())
        }
        None => (args.n.unwrap_or(0), args.d.unwrap_or(0)),
    };
    if n == 0 || d == 0 {
        return Err(CliError::Config("n and d must be positive".into()));
    }
    match n.checked_mul(d).and_then(|x| x.checked_mul(n)) {
        Some(dim) if dim <= MAX_DENSE_DIM => {}
        _ => {
            return Err(CliError::Config(format!(
                "n*d*n must not exceed {MAX_DENSE_DIM} for dense output"
            )))
        }
    }
    let system = StinespringSystem::new(n, d);
    let mut representations = BTreeMap::new();
    if let Some(inst) = &instance {
        let (a, b) = (&inst.a, &inst.b);
        representations.insert("lambda_A", build_lambda(a));
        representations.insert("lambda_B", build_lambda(b));
        representations.insert("rho_A", build_rho(a));
        representations.insert("rho_B", build_rho(b));
        representations.insert("sigma_A", build_sigma(a));
        representations.insert("sigma_B", build_sigma(b));
        let kb = kronecker_block_product(a, b).map_err(CliError::Checker)?;
        representations.insert("kronecker_block_AB", kb);
    }
    let emitted = EmittedSystem {
        n,
        d,
        isometry: system.isometry(),
        flip: system.flip(),
        projection: system.projection(),
        flip_positive: flip_positive_projection(n, d),
        representations,
    };
    let text = serde_json::to_string(&emitted).expect("system serializes") + "\n";
    write_output(args.out.as_deref(), &text)?;
    Ok(true)
}

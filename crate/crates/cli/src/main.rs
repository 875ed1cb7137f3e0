//! `entropy-sentry`: generate check-in data, precompute sensitivity tables,
//! publish private location entropies and evaluate them.

mod manifest;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entropy_sentry::dataio::{
    generate_synthetic, read_checkins, read_publication, write_atomic, write_checkins, write_publication,
    GeneratorConfig,
};
use entropy_sentry::sensitivity::{bound_curve, write_curve};
use entropy_sentry::{
    count_visits, evaluate, precompute_smooth_sensitivity, publish, run_sweep, Error, Mechanism, MetricMode,
    NoiseMode, PrivacyParams, SensitivityParams, SensitivityTable, SweepParam, SweepSpec,
};
use serde_json::json;

use manifest::{manifest_path, RunManifest};

const THREADS_ENV: &str = "ENTROPY_SENTRY_THREADS";

#[derive(Parser, Debug)]
#[command(name = "entropy-sentry", version, about = "Differentially private location entropy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic Zipf check-in file.
    Generate(GenerateArgs),
    /// Precompute a smooth-sensitivity table and its bound curve.
    Sensitivity(SensitivityArgs),
    /// Publish noisy location entropies from a check-in file.
    Publish(PublishArgs),
    /// Score a publication file against the raw check-ins.
    Eval(EvalArgs),
    /// Run a mechanism over a parameter grid with repetitions.
    Sweep(SweepArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    SparseScaled,
    DenseScaled,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    locations: Option<u64>,
    #[arg(long)]
    users: Option<u64>,
    #[arg(long)]
    visits: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SensitivityArgs {
    /// Visit cap per user per location.
    #[arg(long = "C")]
    c: u64,
    #[arg(long, default_value_t = 5.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-8)]
    delta: f64,
    #[arg(long, default_value_t = 1e-3)]
    xi: f64,
    /// Largest location size to tabulate.
    #[arg(long = "N", default_value_t = 100_000)]
    n: u64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
    /// Bound-curve file; defaults to the output path with a `.curve.csv` extension.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MechanismArgs {
    #[arg(long, default_value = "limit", value_parser = parse_mechanism)]
    mechanism: Mechanism,
    #[arg(long, default_value_t = 5.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-8)]
    delta: f64,
    #[arg(long, default_value_t = 1e-3)]
    xi: f64,
    #[arg(long = "C", default_value_t = 5)]
    c: u64,
    #[arg(long = "M", default_value_t = 5)]
    m: u64,
    #[arg(long, default_value_t = 50)]
    k: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `off` publishes exact entropies. Not private; for audits only.
    #[arg(long, default_value = "on", value_parser = parse_noise)]
    noise: NoiseMode,
}

impl MechanismArgs {
    fn params(&self, eligibility_k: u64) -> PrivacyParams {
        PrivacyParams {
            epsilon: self.epsilon,
            delta: self.delta,
            xi: self.xi,
            c: self.c,
            m: self.m,
            k: self.k,
            eligibility_k,
            mechanism: self.mechanism,
            seed: self.seed,
            noise: self.noise,
        }
    }
}

#[derive(Args, Debug)]
struct PublishArgs {
    #[arg(short = 'i', long = "input")]
    input: PathBuf,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
    #[command(flatten)]
    mech: MechanismArgs,
    /// Smooth-sensitivity table from `sensitivity`; required for limit-ss.
    #[arg(long)]
    ss_table: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Raw check-in file the publication was computed from.
    #[arg(long)]
    actual: PathBuf,
    #[arg(long)]
    published: PathBuf,
    /// Score only published locations.
    #[arg(long)]
    throwaway: bool,
    #[arg(long = "eligibility-K", default_value_t = 20)]
    eligibility_k: u64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(short = 'i', long = "input")]
    input: PathBuf,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
    #[arg(long, value_parser = parse_sweep_param)]
    param: SweepParam,
    /// Comma-separated values, e.g. `0.1,0.5,1,5,10`.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    reps: u32,
    #[arg(long)]
    throwaway: bool,
    #[arg(long = "eligibility-K", default_value_t = 20)]
    eligibility_k: u64,
    #[command(flatten)]
    mech: MechanismArgs,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    manifest: PathBuf,
}

fn parse_mechanism(s: &str) -> Result<Mechanism, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_noise(s: &str) -> Result<NoiseMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sweep_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with the exit code and the `error[kind]` tag it is reported with.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                Error::InvalidRecord { .. } => "invalid-record",
                Error::Parse { .. } => "parse",
                Error::EmptyCounts | Error::EmptiedLocation { .. } => "empty-location",
                Error::InvalidParameter(_) => "invalid-parameter",
                Error::CrowdBlendCondition { .. } => "crowd-blend-condition",
                Error::TableTooSmall { .. } => "table-too-small",
                Error::TableMismatch(_) => "table-mismatch",
                Error::InstanceTooLarge(_) => "instance-too-large",
                Error::NoMass => "no-mass",
                Error::InfiniteDivergence { .. } => "infinite-divergence",
                Error::EmptyLocationSet => "empty-location-set",
                Error::NoEligibleLocations { .. } => "no-eligible-locations",
                Error::Misaligned(_) => "misaligned",
                Error::Io(_) => "io",
            },
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Core(Error::InvalidParameter(_))
            | CliError::Core(Error::CrowdBlendCondition { .. }) => 2,
            CliError::Core(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            for line in rendered.lines().skip(1).filter(|l| !l.trim().is_empty()) {
                eprintln!("  {line}");
            }
            return ExitCode::from(2);
        }
    };
    let result = configure_threads().and_then(|()| run(cli.command, &argv[1..]));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    // Fails only if a pool already exists, which keeps the earlier setting.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn run(command: Command, argv: &[String]) -> CliResult<()> {
    match command {
        Command::Generate(a) => cmd_generate(a, argv),
        Command::Sensitivity(a) => cmd_sensitivity(a, argv),
        Command::Publish(a) => cmd_publish(a, argv),
        Command::Eval(a) => cmd_eval(a, argv),
        Command::Sweep(a) => cmd_sweep(a, argv),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn write_manifest(output: &Path, manifest: &RunManifest) -> CliResult<()> {
    let text = manifest.to_json();
    write_atomic(manifest_path(output), |w| Ok(w.write_all(text.as_bytes())?))?;
    Ok(())
}

fn cmd_generate(a: GenerateArgs, argv: &[String]) -> CliResult<()> {
    let base = match a.preset {
        Some(Preset::SparseScaled) => Some(GeneratorConfig::sparse_scaled(a.seed)),
        Some(Preset::DenseScaled) => Some(GeneratorConfig::dense_scaled(a.seed)),
        None => None,
    };
    let config = match (base, a.locations, a.users, a.visits) {
        (Some(p), l, u, v) => GeneratorConfig {
            num_locations: l.unwrap_or(p.num_locations),
            num_users: u.unwrap_or(p.num_users),
            total_visits: v.unwrap_or(p.total_visits),
            seed: a.seed,
        },
        (None, Some(l), Some(u), Some(v)) => GeneratorConfig {
            num_locations: l,
            num_users: u,
            total_visits: v,
            seed: a.seed,
        },
        (None, ..) => {
            return Err(CliError::Usage(
                "without --preset, --locations, --users and --visits are all required".into(),
            ))
        }
    };
    let log = generate_synthetic(&config)?;
    write_atomic(&a.output, |w| write_checkins(&log, w))?;
    let params = json!({
        "preset": a.preset.map(|p| format!("{p:?}")),
        "num_locations": config.num_locations,
        "num_users": config.num_users,
        "total_visits": config.total_visits,
        "seed": config.seed,
    });
    let manifest = RunManifest::new("generate", argv, Some(a.seed), params).output(&a.output);
    write_manifest(&a.output, &manifest)
}

fn cmd_sensitivity(a: SensitivityArgs, argv: &[String]) -> CliResult<()> {
    if a.c < 2 {
        return Err(Error::InvalidParameter(format!(
            "smooth-sensitivity precomputation needs C >= 2, got {}",
            a.c
        ))
        .into());
    }
    let params = SensitivityParams::new(a.c, a.n, a.epsilon, a.delta, a.xi)?;
    let table = precompute_smooth_sensitivity(&params)?;
    let curve_path = a.curve.clone().unwrap_or_else(|| a.output.with_extension("curve.csv"));
    write_atomic(&a.output, |w| table.write_to(w))?;
    write_atomic(&curve_path, |w| write_curve(&bound_curve(&table), w))?;
    let manifest = RunManifest::new(
        "sensitivity",
        argv,
        None,
        json!({
            "C": a.c,
            "epsilon": a.epsilon,
            "delta": a.delta,
            "xi": a.xi,
            "N": a.n,
            "beta": params.beta(),
            "floor_from": table.floor_from(),
        }),
    )
    .output(&a.output)
    .output(&curve_path);
    write_manifest(&a.output, &manifest)
}

fn mechanism_json(p: &PrivacyParams) -> serde_json::Value {
    json!({
        "mechanism": p.mechanism.to_string(),
        "epsilon": p.epsilon,
        "delta": p.delta,
        "xi": p.xi,
        "C": p.c,
        "M": p.m,
        "k": p.k,
        "eligibility_K": p.eligibility_k,
        "seed": p.seed,
        "noise": p.noise.to_string(),
    })
}

fn warn_if_noiseless(noise: NoiseMode) {
    if noise == NoiseMode::Off {
        eprintln!("WARNING: --noise off: published entropies are EXACT and NOT differentially private");
    }
}

fn cmd_publish(a: PublishArgs, argv: &[String]) -> CliResult<()> {
    let params = a.mech.params(PrivacyParams::default().eligibility_k);
    params.validate()?;
    let ss = match (params.mechanism, &a.ss_table) {
        (Mechanism::LimitSs, None) => {
            return Err(CliError::Usage("--mechanism limit-ss requires --ss-table".into()));
        }
        (Mechanism::LimitSs, Some(path)) => Some(SensitivityTable::read_from(BufReader::new(File::open(path)?))?),
        _ => None,
    };
    warn_if_noiseless(params.noise);
    let log = read_checkins(&a.input)?;
    let records = publish(&log, &params, ss.as_ref())?;
    write_publication(&records, &a.output)?;

    let mut manifest = RunManifest::new("publish", argv, Some(params.seed), mechanism_json(&params)).input(&a.input);
    if let (Mechanism::LimitSs, Some(path)) = (params.mechanism, &a.ss_table) {
        manifest = manifest.input(path);
    }
    write_manifest(&a.output, &manifest.output(&a.output))
}

fn cmd_eval(a: EvalArgs, argv: &[String]) -> CliResult<()> {
    let raw = count_visits(&read_checkins(&a.actual)?);
    let records = read_publication(&a.published)?;
    let mode = if a.throwaway {
        MetricMode::Throwaway
    } else {
        MetricMode::Default
    };
    let report = evaluate(&raw, &records, mode, a.eligibility_k)?;
    let body = json!({
        "kl_divergence": report.kl_divergence,
        "mse": report.mse,
        "published_ratio": report.published_ratio,
        "num_locations": report.num_locations,
        "throwaway_mode": report.throwaway_mode,
    });
    let mut text = serde_json::to_string_pretty(&body).expect("report serializes");
    text.push('\n');
    write_atomic(&a.output, |w| Ok(w.write_all(text.as_bytes())?))?;
    print!("{text}");
    let manifest = RunManifest::new(
        "eval",
        argv,
        None,
        json!({"throwaway": a.throwaway, "eligibility_K": a.eligibility_k}),
    )
    .input(&a.actual)
    .input(&a.published)
    .output(&a.output);
    write_manifest(&a.output, &manifest)
}

fn cmd_sweep(a: SweepArgs, argv: &[String]) -> CliResult<()> {
    let params = a.mech.params(a.eligibility_k);
    params.validate()?;
    warn_if_noiseless(params.noise);
    let spec = SweepSpec {
        param: a.param,
        values: a.grid.clone(),
        reps: a.reps,
        mode: if a.throwaway {
            MetricMode::Throwaway
        } else {
            MetricMode::Default
        },
    };
    let log = read_checkins(&a.input)?;
    let table = run_sweep(&log, &params, &spec)?;
    write_atomic(&a.output, |w| table.write_csv(w))?;
    let mut resolved = mechanism_json(&params);
    resolved["sweep"] = json!({
        "param": a.param.to_string(),
        "grid": a.grid,
        "reps": a.reps,
        "throwaway": a.throwaway,
    });
    let manifest = RunManifest::new("sweep", argv, Some(params.seed), resolved)
        .input(&a.input)
        .output(&a.output);
    write_manifest(&a.output, &manifest)
}

fn cmd_replay(a: ReplayArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.manifest)?;
    let manifest = RunManifest::from_json(&text)
        .map_err(|e| Error::Parse {
            line: e.line(),
            reason: e.to_string(),
        })?;
    if manifest.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest was written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let argv: Vec<String> = std::iter::once("entropy-sentry".to_owned())
        .chain(manifest.argv.iter().cloned())
        .collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot replay another manifest".into()));
    }
    run(cli.command, &manifest.argv)
}

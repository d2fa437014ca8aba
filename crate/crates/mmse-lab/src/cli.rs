//! Command-line front end: flag parsing, experiment orchestration, and
//! deterministic serialization of results for external plotting.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    ber_sweep_with, empirical_norm_prob, instrumented_count, moment_mc_detailed,
    multiplication_count, theorem1_bound, BoundQuery, MomentKind, SweepRecord,
};
use crate::detector::{DetectorConfig, Method, NpiMode};
use crate::fxp::FxpPipelineConfig;
use crate::txchain::{Modulation, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn cfg_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn run_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "mmse-lab",
    version,
    about = "Monte-Carlo simulator for soft-output linear MMSE detection in large-scale MIMO SC-FDMA uplinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Uncoded-BER sweep over an SNR grid.
    Sweep(SweepArgs),
    /// Convergence-probability bound vs Monte-Carlo estimate.
    Bound(BoundArgs),
    /// Closed-form vs instrumented preprocessing operation counts.
    Count(CountArgs),
    /// Monte-Carlo validation of the fourth-moment lemmata.
    Moments(MomentsArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    bs_antennas: Option<usize>,
    #[arg(long)]
    subcarriers: Option<usize>,
    #[arg(long = "mod")]
    modulation: Option<String>,
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    npi: Option<String>,
    /// Grid as a:b:step (inclusive of b when the step lands on it).
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    /// Run the quantized pipeline with the reference word lengths.
    #[arg(long)]
    fxp: bool,
    /// csv (default) or json.
    #[arg(long)]
    format: Option<String>,
    /// Optional JSON file mirroring the flags; flags take precedence.
    #[arg(long)]
    config: Option<String>,
    #[arg(long, env = "MMSE_LAB_THREADS")]
    threads: Option<usize>,
}

/// File-backed defaults for `sweep`; any missing key falls back to the
/// built-in default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFileConfig {
    users: Option<usize>,
    bs_antennas: Option<usize>,
    subcarriers: Option<usize>,
    #[serde(rename = "mod")]
    modulation: Option<String>,
    detector: Option<String>,
    npi: Option<String>,
    snr: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<String>,
    fxp: Option<bool>,
    format: Option<String>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    bs_antennas: usize,
    #[arg(long, default_value_t = 1)]
    terms: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "MMSE_LAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct CountArgs {
    /// Inclusive user range a:b.
    #[arg(long)]
    users_range: String,
    #[arg(long)]
    bs_antennas: usize,
    /// Comma-separated: mf,neumann:K,cholesky.
    #[arg(long)]
    methods: String,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, env = "MMSE_LAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[arg(long)]
    lemma: u8,
    #[arg(long)]
    bs_antennas: usize,
    #[arg(long, default_value_t = 1_000_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "MMSE_LAB_THREADS")]
    threads: Option<usize>,
}

/// Lossless 17-significant-digit rendering used for every serialized float.
fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_modulation(s: &str) -> Result<Modulation, CliError> {
    match s {
        "bpsk" => Ok(Modulation::Bpsk),
        "qpsk" => Ok(Modulation::Qpsk),
        "qam16" => Ok(Modulation::Qam16),
        "qam64" => Ok(Modulation::Qam64),
        other => Err(CliError::Config(format!(
            "unknown modulation '{other}' (expected bpsk|qpsk|qam16|qam64)"
        ))),
    }
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    if s == "mf" {
        return Ok(Method::MatchedFilter);
    }
    if s == "cholesky" {
        return Ok(Method::Cholesky);
    }
    if let Some(k) = s.strip_prefix("neumann:") {
        let k: usize = k
            .parse()
            .map_err(|_| CliError::Config(format!("bad term count in '{s}'")))?;
        if k == 0 {
            return Err(CliError::Config("neumann term count must be >= 1".into()));
        }
        return Ok(Method::Neumann(k));
    }
    Err(CliError::Config(format!(
        "unknown detector '{s}' (expected mf|neumann:K|cholesky)"
    )))
}

fn parse_npi(s: &str) -> Result<NpiMode, CliError> {
    match s {
        "exact" => Ok(NpiMode::ExactMmse),
        "neumann-exact" => Ok(NpiMode::NeumannExact),
        "k1" => Ok(NpiMode::K1),
        "low" => Ok(NpiMode::LowComplexity),
        other => Err(CliError::Config(format!(
            "unknown npi mode '{other}' (expected exact|neumann-exact|k1|low)"
        ))),
    }
}

fn parse_snr_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "bad snr grid '{s}' (expected a:b:step)"
        )));
    }
    let a: f64 = parts[0].parse().map_err(cfg_err)?;
    let b: f64 = parts[1].parse().map_err(cfg_err)?;
    let step: f64 = parts[2].parse().map_err(cfg_err)?;
    if !(step > 0.0) || b < a {
        return Err(CliError::Config(format!(
            "bad snr grid '{s}': need step > 0 and b >= a"
        )));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| a + i as f64 * step).collect())
}

fn parse_user_range(s: &str) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!(
            "bad user range '{s}' (expected a:b)"
        )));
    }
    let a: usize = parts[0].parse().map_err(cfg_err)?;
    let b: usize = parts[1].parse().map_err(cfg_err)?;
    if a == 0 || b < a {
        return Err(CliError::Config(format!(
            "bad user range '{s}': need 1 <= a <= b"
        )));
    }
    Ok((a..=b).collect())
}

/// Provenance record written alongside every result set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    pub wall_time_s: f64,
}

pub fn config_digest<T: Serialize>(config: &T) -> String {
    let canon = serde_json::to_string(config).expect("serializable config");
    let mut hasher = Sha256::new();
    hasher.update(canon.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

fn manifest_json(m: &RunManifest) -> String {
    format!(
        "{{\"command\":{},\"config_digest\":\"{}\",\"seed\":{},\"tool_version\":\"{}\",\"wall_time_s\":{}}}\n",
        serde_json::to_string(&m.command).unwrap(),
        m.config_digest,
        m.seed,
        m.tool_version,
        fmt_f(m.wall_time_s),
    )
}

fn with_pool<T>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError>
where
    T: Send,
{
    match threads {
        None => f(),
        Some(n) => {
            if n == 0 {
                return Err(CliError::Config("--threads must be >= 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(run_err)?;
            pool.install(f)
        }
    }
}

fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("snr_db,method,npi,ber,bit_errors,trials,seed\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f(r.snr_db),
            r.method,
            r.npi,
            fmt_f(r.ber),
            r.bit_errors,
            r.trials,
            r.seed
        )
        .unwrap();
    }
    out
}

fn sweep_json(records: &[SweepRecord]) -> String {
    let mut out = String::from("[\n");
    for (i, r) in records.iter().enumerate() {
        write!(
            out,
            "  {{\"snr_db\":{},\"method\":\"{}\",\"npi\":\"{}\",\"ber\":{},\"bit_errors\":{},\"trials\":{},\"seed\":{}}}",
            fmt_f(r.snr_db), r.method, r.npi, fmt_f(r.ber), r.bit_errors, r.trials, r.seed
        )
        .unwrap();
        out.push_str(if i + 1 < records.len() { ",\n" } else { "\n" });
    }
    out.push_str("]\n");
    out
}

#[derive(Serialize)]
struct SweepResolved {
    sim: SimConfig,
    det: DetectorConfig,
    snr: String,
    fxp: bool,
    format: String,
}

fn cmd_sweep(args: &SweepArgs, out: &mut impl Write) -> Result<(), CliError> {
    let file: SweepFileConfig = match &args.config {
        None => SweepFileConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config '{path}': {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad config '{path}': {e}")))?
        }
    };
    let users = args.users.or(file.users).ok_or(CliError::Config("--users is required".into()))?;
    let b = args
        .bs_antennas
        .or(file.bs_antennas)
        .ok_or(CliError::Config("--bs-antennas is required".into()))?;
    let l = args.subcarriers.or(file.subcarriers).unwrap_or(12);
    let modulation =
        parse_modulation(args.modulation.as_deref().or(file.modulation.as_deref()).unwrap_or("qpsk"))?;
    let method = parse_method(args.detector.as_deref().or(file.detector.as_deref()).unwrap_or("cholesky"))?;
    let npi = parse_npi(args.npi.as_deref().or(file.npi.as_deref()).unwrap_or(
        if method == Method::Cholesky { "exact" } else { "low" },
    ))?;
    let snr_spec = args
        .snr
        .clone()
        .or(file.snr)
        .ok_or(CliError::Config("--snr is required".into()))?;
    let snr_grid = parse_snr_grid(&snr_spec)?;
    let trials = args.trials.or(file.trials).unwrap_or(100);
    let seed = args.seed.or(file.seed).unwrap_or(1);
    let out_path = args
        .out
        .clone()
        .or(file.out)
        .ok_or(CliError::Config("--out is required".into()))?;
    let fxp = args.fxp || file.fxp.unwrap_or(false);
    let format = args
        .format
        .clone()
        .or(file.format)
        .unwrap_or_else(|| "csv".into());
    if format != "csv" && format != "json" {
        return Err(CliError::Config(format!(
            "unknown format '{format}' (expected csv|json)"
        )));
    }

    let sim = SimConfig {
        b,
        u: users,
        l,
        modulation,
        es: 1.0,
        snr_db: snr_grid[0],
        seed,
        trials,
    };
    sim.validate().map_err(cfg_err)?;
    let det = DetectorConfig { method, npi_mode: npi, modulation };
    det.validate().map_err(cfg_err)?;
    if fxp && method == Method::MatchedFilter {
        return Err(CliError::Config(
            "--fxp supports neumann:K and cholesky detectors only".into(),
        ));
    }

    let resolved = SweepResolved {
        sim: sim.clone(),
        det,
        snr: snr_spec,
        fxp,
        format: format.clone(),
    };
    let digest = config_digest(&resolved);

    let started = Instant::now();
    let fxp_cfg = fxp.then(FxpPipelineConfig::paper);
    let records = ber_sweep_with(&sim, &det, &snr_grid, fxp_cfg.as_ref()).map_err(run_err)?;
    for r in &records {
        writeln!(out, "snr {:>6.2} dB: ber {:.3e} ({} trials)", r.snr_db, r.ber, r.trials)
            .map_err(run_err)?;
    }

    let body = if format == "csv" { sweep_csv(&records) } else { sweep_json(&records) };
    std::fs::write(&out_path, body).map_err(run_err)?;

    let manifest = RunManifest {
        command: "sweep".into(),
        config_digest: digest,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    std::fs::write(format!("{out_path}.manifest.json"), manifest_json(&manifest))
        .map_err(run_err)?;
    Ok(())
}

fn cmd_bound(args: &BoundArgs, out: &mut impl Write) -> Result<(), CliError> {
    let q = BoundQuery {
        u: args.users,
        b: args.bs_antennas,
        k: args.terms,
        alpha: args.alpha,
    };
    let started = Instant::now();
    let bound = theorem1_bound(q).map_err(cfg_err)?;
    let empirical = empirical_norm_prob(q, args.trials, args.seed).map_err(cfg_err)?;
    writeln!(
        out,
        "{{\"users\":{},\"bs_antennas\":{},\"terms\":{},\"alpha\":{},\"bound\":{},\"vacuous\":{},\"empirical\":{},\"trials\":{},\"seed\":{}}}",
        q.u,
        q.b,
        q.k,
        fmt_f(q.alpha),
        fmt_f(bound),
        bound < 0.0,
        fmt_f(empirical),
        args.trials,
        args.seed
    )
    .map_err(run_err)?;
    let manifest = RunManifest {
        command: "bound".into(),
        config_digest: config_digest(&q),
        seed: args.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    eprint!("{}", manifest_json(&manifest));
    Ok(())
}

fn cmd_count(args: &CountArgs, out: &mut impl Write) -> Result<(), CliError> {
    let users = parse_user_range(&args.users_range)?;
    let methods: Vec<Method> = args
        .methods
        .split(',')
        .map(|m| parse_method(m.trim()))
        .collect::<Result<_, _>>()?;
    if args.bs_antennas == 0 {
        return Err(CliError::Config("--bs-antennas must be >= 1".into()));
    }
    let started = Instant::now();
    let mut body = String::from(
        "u,method,closed_mults,instrumented_mults,closed_adds,instrumented_adds,closed_divs,instrumented_divs\n",
    );
    for &u in &users {
        if u > args.bs_antennas {
            return Err(CliError::Config(format!(
                "user count {u} exceeds --bs-antennas {}",
                args.bs_antennas
            )));
        }
        for &method in &methods {
            let closed = multiplication_count(method, u, args.bs_antennas);
            let measured = instrumented_count(method, u, args.bs_antennas, 1).map_err(run_err)?;
            writeln!(
                body,
                "{},{},{},{},{},{},{},{}",
                u,
                method.label(),
                closed.real_mults,
                measured.real_mults,
                closed.real_adds,
                measured.real_adds,
                closed.real_divs,
                measured.real_divs
            )
            .unwrap();
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, &body).map_err(run_err)?,
        None => out.write_all(body.as_bytes()).map_err(run_err)?,
    }
    let manifest = RunManifest {
        command: "count".into(),
        config_digest: config_digest(&(&args.users_range, args.bs_antennas, &args.methods)),
        seed: 0,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    eprint!("{}", manifest_json(&manifest));
    Ok(())
}

fn cmd_moments(args: &MomentsArgs, out: &mut impl Write) -> Result<(), CliError> {
    let kind = match args.lemma {
        1 => MomentKind::Lemma1,
        2 => MomentKind::Lemma2,
        other => {
            return Err(CliError::Config(format!(
                "unknown lemma {other} (expected 1 or 2)"
            )))
        }
    };
    let started = Instant::now();
    let detail =
        moment_mc_detailed(kind, args.bs_antennas, args.trials, args.seed).map_err(cfg_err)?;
    writeln!(
        out,
        "{{\"lemma\":{},\"bs_antennas\":{},\"trials\":{},\"seed\":{},\"estimate\":{},\"target\":{},\"relative_std_error\":{}}}",
        args.lemma,
        args.bs_antennas,
        args.trials,
        args.seed,
        fmt_f(detail.estimate),
        fmt_f(detail.target),
        fmt_f(detail.relative_std_error)
    )
    .map_err(run_err)?;
    let manifest = RunManifest {
        command: "moments".into(),
        config_digest: config_digest(&(args.lemma, args.bs_antennas, args.trials, args.seed)),
        seed: args.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    eprint!("{}", manifest_json(&manifest));
    Ok(())
}

/// Parses and runs a full command line (excluding the binary name is fine;
/// clap only needs a program name in position 0). Returns the exit code.
pub fn run_with_args<I, S>(args: I, out: &mut (impl Write + Send)) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successful exits
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Sweep(a) => with_pool(a.threads, || cmd_sweep(a, out)),
        Command::Bound(a) => with_pool(a.threads, || cmd_bound(a, out)),
        Command::Count(a) => with_pool(a.threads, || cmd_count(a, out)),
        Command::Moments(a) => with_pool(a.threads, || cmd_moments(a, out)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

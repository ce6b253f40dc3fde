//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 design did not converge
//! (or the arms are span-deficient), 3 some replica rows failed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use crate::design::{frank_wolfe_design, kw_certificate, write_design, FrankWolfeConfig, StopRule};
use crate::error::{OdpoError, Result};
use crate::evaluation::{
    format_decimal, run_experiment, verify_hypercube_lower_bound, verify_online_lower_bound, write_aggregate_csv,
    write_regret_csv, ExperimentConfig, InstanceGenerator, LowerBoundAlgorithm, RegretReport,
};
use crate::instance::{make_random_instance, parse_instance, write_instance};
use crate::pipeline::{Algorithm, OdpoConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONVERGENCE: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "ODPO_SEED";

#[derive(Debug, Parser)]
#[command(name = "odpo", version, about = "Optimal-design selection of preference pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance file.
    GenInstance(GenInstanceArgs),
    /// Compute a near-optimal design over an instance's difference arms.
    Design(DesignArgs),
    /// Run replicated regret experiments and write CSV reports.
    Run(RunArgs),
    /// Run one of the lower-bound constructions.
    LowerBound(LowerBoundArgs),
}

#[derive(Debug, Args)]
pub struct GenInstanceArgs {
    /// Number of contexts N.
    #[arg(long, default_value_t = 50)]
    pub contexts: usize,
    /// Arms per context K.
    #[arg(long, default_value_t = 4)]
    pub arms: usize,
    /// Embedding dimension d.
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    /// Generator seed (ODPO_SEED overrides the default).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output instance file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopRuleArg {
    /// g <= (1+eps) d
    OnePlusEps,
    /// g <= sqrt(1+eps) d
    SqrtOnePlusEps,
}

impl From<StopRuleArg> for StopRule {
    fn from(s: StopRuleArg) -> Self {
        match s {
            StopRuleArg::OnePlusEps => StopRule::OnePlusEpsilon,
            StopRuleArg::SqrtOnePlusEps => StopRule::SqrtOnePlusEpsilon,
        }
    }
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Instance file (`N K d` header, N blocks of K arms, then theta*).
    #[arg(long)]
    pub instance: PathBuf,
    /// Ridge added to the design matrix.
    #[arg(long, default_value_t = 1e-6)]
    pub lambda: f64,
    /// Approximation slack: stop once g <= (1+eps) d.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Frank-Wolfe iteration budget.
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// Stopping rule.
    #[arg(long, value_enum, default_value_t = StopRuleArg::OnePlusEps)]
    pub stop_rule: StopRuleArg,
    /// Output design file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Flags of `run`. Every flag can also be given in the `--config` file as
/// `key = value` with the flag name (dashes or underscores); flags win.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated algorithms: odpo, uniform, greedy.
    #[arg(long, default_value = "odpo")]
    pub algorithms: String,
    /// Comma-separated `d:T` grid points.
    #[arg(long, default_value = "4:16,4:64")]
    pub grid: String,
    /// Instance generator: random or anisotropic.
    #[arg(long, default_value = "random")]
    pub generator: String,
    /// Contexts N per instance.
    #[arg(long, default_value = "50")]
    pub contexts: String,
    /// Arms K per context (random generator).
    #[arg(long, default_value = "4")]
    pub arms: String,
    /// Weight of theta* on the rare direction (anisotropic generator).
    #[arg(long, default_value = "0.5")]
    pub rare_weight: String,
    /// Replicas per grid point.
    #[arg(long, default_value = "20")]
    pub replicas: String,
    /// Master seed (ODPO_SEED overrides the config file).
    #[arg(long, default_value = "0")]
    pub seed: String,
    /// Ridge of the design stage.
    #[arg(long, default_value = "1e-6")]
    pub lambda_design: String,
    /// Ridge of the estimation stage; `auto` means 1/d.
    #[arg(long, default_value = "auto")]
    pub lambda_est: String,
    /// Design approximation slack.
    #[arg(long, default_value = "0.5")]
    pub epsilon: String,
    /// Confidence level for the reported bounds.
    #[arg(long, default_value = "0.05")]
    pub delta: String,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, default_value = "0")]
    pub jobs: String,
    /// Output directory for regret.csv, aggregate.csv and runs.jsonl.
    #[arg(long, default_value = "odpo-out")]
    pub out: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LowerBoundKind {
    Online,
    Hypercube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LowerBoundAlgorithmArg {
    Odpo,
    Uniform,
}

#[derive(Debug, Args)]
pub struct LowerBoundArgs {
    /// Which construction to run.
    #[arg(long, value_enum)]
    pub kind: LowerBoundKind,
    /// Horizon T.
    #[arg(long, default_value_t = 64)]
    pub horizon: usize,
    /// Dimension d (hypercube only).
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    /// Replicas (per environment for the online construction).
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    /// Algorithm under test.
    #[arg(long, value_enum, default_value_t = LowerBoundAlgorithmArg::Odpo)]
    pub algorithm: LowerBoundAlgorithmArg,
    /// Master seed (ODPO_SEED overrides the default).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Output JSON report.
    #[arg(long)]
    pub out: PathBuf,
}

/// Resolved parameters of `odpo run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithms: Vec<Algorithm>,
    pub grid: Vec<(usize, usize)>,
    pub generator: String,
    pub contexts: usize,
    pub arms: usize,
    pub rare_weight: f64,
    pub replicas: usize,
    pub seed: u64,
    pub lambda_design: f64,
    /// `None` means `1/d`.
    pub lambda_est: Option<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Odpo],
            grid: vec![(4, 16), (4, 64)],
            generator: "random".into(),
            contexts: 50,
            arms: 4,
            rare_weight: 0.5,
            replicas: 20,
            seed: 0,
            lambda_design: 1e-6,
            lambda_est: None,
            epsilon: 0.5,
            delta: 0.05,
            jobs: 0,
            out: PathBuf::from("odpo-out"),
        }
    }
}

/// Keys accepted by [`RunConfig::set`], as clap argument ids.
const RUN_KEYS: [&str; 14] = [
    "algorithms",
    "grid",
    "generator",
    "contexts",
    "arms",
    "rare_weight",
    "replicas",
    "seed",
    "lambda_design",
    "lambda_est",
    "epsilon",
    "delta",
    "jobs",
    "out",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "algorithms" => {
                self.algorithms = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<Algorithm>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?;
            }
            "grid" => {
                self.grid = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|p| {
                        let (d, t) = p
                            .split_once(':')
                            .ok_or_else(|| format!("grid point `{p}` must be `d:T`"))?;
                        Ok((parse_num("grid", d)?, parse_num("grid", t)?))
                    })
                    .collect::<std::result::Result<_, String>>()?;
            }
            "generator" => match v {
                "random" | "anisotropic" => self.generator = v.to_string(),
                _ => return Err(format!("unknown generator `{v}` (expected random or anisotropic)")),
            },
            "contexts" => self.contexts = parse_num(&key, v)?,
            "arms" => self.arms = parse_num(&key, v)?,
            "rare_weight" => self.rare_weight = parse_num(&key, v)?,
            "replicas" => self.replicas = parse_num(&key, v)?,
            "seed" => self.seed = parse_num(&key, v)?,
            "lambda_design" => self.lambda_design = parse_num(&key, v)?,
            "lambda_est" => {
                self.lambda_est = if v == "auto" { None } else { Some(parse_num(&key, v)?) };
            }
            "epsilon" => self.epsilon = parse_num(&key, v)?,
            "delta" => self.delta = parse_num(&key, v)?,
            "jobs" => self.jobs = parse_num(&key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file; `#` starts a comment line.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(OdpoError::Parse {
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            self.set(k, v).map_err(|msg| OdpoError::Parse { line: i + 1, msg })?;
        }
        Ok(())
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let generator = match self.generator.as_str() {
            "random" => InstanceGenerator::Random {
                n: self.contexts,
                k: self.arms,
            },
            _ => InstanceGenerator::Anisotropic {
                n: self.contexts,
                rare_weight: self.rare_weight,
            },
        };
        let cfg = ExperimentConfig {
            generator,
            algorithms: self.algorithms.clone(),
            grid: self.grid.clone(),
            replicas: self.replicas,
            master_seed: self.seed,
            odpo: OdpoConfig {
                lambda_design: self.lambda_design,
                lambda_est: self.lambda_est,
                epsilon: self.epsilon,
                delta: self.delta,
                seed: self.seed,
                ..OdpoConfig::default()
            },
            keep_records: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn env_seed() -> std::result::Result<Option<u64>, String> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| format!("{SEED_ENV}=`{v}` is not a non-negative integer")),
        Err(_) => Ok(None),
    }
}

fn from_command_line(matches: &ArgMatches, id: &str) -> bool {
    matches.value_source(id) == Some(ValueSource::CommandLine)
}

/// Flags > `ODPO_SEED` (seed only) > config file > defaults.
pub fn resolve_run_config(args: &RunArgs, matches: &ArgMatches) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| OdpoError::Io(format!("{}: {e}", path.display())))?;
        cfg.apply_file(&text)?;
    }
    if let Some(seed) = env_seed().map_err(OdpoError::InvalidArgument)? {
        cfg.seed = seed;
    }
    let values: [(&str, &String); 14] = [
        ("algorithms", &args.algorithms),
        ("grid", &args.grid),
        ("generator", &args.generator),
        ("contexts", &args.contexts),
        ("arms", &args.arms),
        ("rare_weight", &args.rare_weight),
        ("replicas", &args.replicas),
        ("seed", &args.seed),
        ("lambda_design", &args.lambda_design),
        ("lambda_est", &args.lambda_est),
        ("epsilon", &args.epsilon),
        ("delta", &args.delta),
        ("jobs", &args.jobs),
        ("out", &args.out),
    ];
    debug_assert!(values.iter().zip(RUN_KEYS).all(|((k, _), key)| *k == key));
    for (key, value) in values {
        if from_command_line(matches, key) {
            cfg.set(key, value).map_err(OdpoError::InvalidArgument)?;
        }
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents).map_err(|e| OdpoError::Io(format!("{}: {e}", path.display())))
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| OdpoError::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn cmd_gen_instance(args: &GenInstanceArgs, matches: &ArgMatches) -> Result<i32> {
    if args.contexts == 0 || args.arms == 0 || args.dim == 0 {
        return Err(OdpoError::InvalidArgument("contexts, arms and dim must be >= 1".into()));
    }
    let mut seed = args.seed;
    if !from_command_line(matches, "seed") {
        if let Some(s) = env_seed().map_err(OdpoError::InvalidArgument)? {
            seed = s;
        }
    }
    let inst = make_random_instance(args.contexts, args.arms, args.dim, seed);
    write_file(&args.out, &write_instance(&inst)?)?;
    println!(
        "wrote {} (N={} K={} d={} L={} spans={})",
        args.out.display(),
        inst.n_contexts(),
        args.arms,
        inst.dimension,
        inst.diff_arms.len(),
        inst.spans
    );
    Ok(EXIT_OK)
}

fn cmd_design(args: &DesignArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.instance)
        .map_err(|e| OdpoError::Io(format!("{}: {e}", args.instance.display())))?;
    let inst = parse_instance(&text)?;
    if !(args.lambda > 0.0) || !(args.epsilon > 0.0) {
        return Err(OdpoError::InvalidArgument("lambda and epsilon must be > 0".into()));
    }
    if inst.diff_arms.is_empty() {
        eprintln!("warning: SpanDeficient: the instance has no non-zero difference arms");
        return Ok(EXIT_CONVERGENCE);
    }
    let arms = inst.arm_vectors();
    let config = FrankWolfeConfig {
        lambda: args.lambda,
        epsilon: args.epsilon,
        max_iters: args.max_iters,
        stop_rule: args.stop_rule.into(),
        ..FrankWolfeConfig::default()
    };
    let res = frank_wolfe_design(&arms, &config)?;
    let cert = kw_certificate(&res.design, &arms, args.lambda)?;
    write_file(&args.out, &write_design(&res, args.lambda, args.epsilon, &cert))?;
    println!(
        "design: iterations={} g={} threshold={} support={} logdet={}",
        res.iterations, cert.g, res.threshold, cert.support_size, cert.logdet
    );
    if cert.support_exceeds_kw_bound() {
        eprintln!(
            "note: support size {} exceeds d(d+1)/2 = {} (allowed for approximate designs)",
            cert.support_size,
            cert.kw_support_bound()
        );
    }
    let mut code = EXIT_OK;
    if res.span_deficient {
        eprintln!(
            "warning: SpanDeficient: difference arms do not span R^{}; the design only covers their span",
            inst.dimension
        );
        code = EXIT_CONVERGENCE;
    }
    if !res.converged {
        eprintln!(
            "warning: MaxIters: g = {} above threshold {} after {} iterations; best iterate written",
            res.final_g, res.threshold, res.iterations
        );
        code = EXIT_CONVERGENCE;
    }
    Ok(code)
}

fn aggregate_table(report: &RegretReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>4} {:>7} {:>6} {:>12} {:>12} {:>12} {:>8}",
        "algo", "d", "T", "ok", "mean_regret", "std_error", "q95", "eff_T"
    );
    for a in &report.aggregates {
        let _ = writeln!(
            out,
            "{:<8} {:>4} {:>7} {:>6} {:>12.6} {:>12.6} {:>12.6} {:>8.1}",
            a.algorithm.tag(),
            a.d,
            a.t,
            format!("{}/{}", a.ok, a.replicas),
            a.mean,
            a.std_error,
            a.q95,
            a.mean_effective_t
        );
    }
    out
}

fn cmd_run(args: &RunArgs, matches: &ArgMatches) -> Result<i32> {
    let cfg = resolve_run_config(args, matches)?;
    let experiment = cfg.experiment()?;
    let report = with_pool(cfg.jobs, || run_experiment(&experiment))??;

    fs::create_dir_all(&cfg.out)?;
    write_file(&cfg.out.join("regret.csv"), &write_regret_csv(&report))?;
    write_file(&cfg.out.join("aggregate.csv"), &write_aggregate_csv(&report))?;
    let mut records = String::new();
    for row in &report.rows {
        let line = match &row.record {
            Some(rec) => serde_json::to_string(rec),
            None => serde_json::to_string(row),
        }
        .map_err(|e| OdpoError::Io(e.to_string()))?;
        records.push_str(&line);
        records.push('\n');
    }
    write_file(&cfg.out.join("runs.jsonl"), &records)?;
    print!("{}", aggregate_table(&report));
    if report.has_errors() {
        let failed = report.rows.iter().filter(|r| !r.is_ok()).count();
        eprintln!("warning: {failed} replica rows failed; see the status column");
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

fn cmd_lower_bound(args: &LowerBoundArgs, matches: &ArgMatches) -> Result<i32> {
    let mut seed = args.seed;
    if !from_command_line(matches, "seed") {
        if let Some(s) = env_seed().map_err(OdpoError::InvalidArgument)? {
            seed = s;
        }
    }
    let algorithm = match args.algorithm {
        LowerBoundAlgorithmArg::Odpo => LowerBoundAlgorithm::Odpo,
        LowerBoundAlgorithmArg::Uniform => LowerBoundAlgorithm::Uniform,
    };
    let json = match args.kind {
        LowerBoundKind::Online => {
            let rep = with_pool(args.jobs, || {
                verify_online_lower_bound(args.horizon, algorithm, args.replicas, seed)
            })??;
            println!(
                "online T={}: p_err sum = {} (se {}), floor e^-c/2 = {} with c = {}; floor by T: {}",
                rep.horizon,
                format_decimal(rep.p_err_sum),
                format_decimal(rep.std_error),
                format_decimal(rep.floor),
                format_decimal(rep.c),
                rep.floor_by_horizon
                    .iter()
                    .map(|(t, f)| format!("{t}:{}", format_decimal(*f)))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            serde_json::to_string_pretty(&rep)
        }
        LowerBoundKind::Hypercube => {
            let rep = with_pool(args.jobs, || {
                verify_hypercube_lower_bound(args.dim, args.horizon, algorithm, args.replicas, seed)
            })??;
            if !rep.formal_regime {
                eprintln!("note: d = {}, T = {} is below the d >= 16, T >= d^2 regime", rep.d, rep.horizon);
            }
            println!(
                "hypercube d={} T={}: mean regret = {} (se {}), floor = {}, corollary bound = {}, max KL = {}",
                rep.d,
                rep.horizon,
                format_decimal(rep.mean_regret),
                format_decimal(rep.regret_std_error),
                format_decimal(rep.floor),
                format_decimal(rep.corollary_expected_bound),
                format_decimal(rep.max_kl)
            );
            serde_json::to_string_pretty(&rep)
        }
    }
    .map_err(|e| OdpoError::Io(e.to_string()))?;
    write_file(&args.out, &(json + "\n"))?;
    Ok(EXIT_OK)
}

/// Usage line of the subcommand named in `args`, or of the whole tool.
fn usage_for(args: &[OsString]) -> String {
    let mut cmd = Cli::command();
    let name = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| cmd.find_subcommand(a).is_some())
        .map(str::to_owned);
    match name.and_then(|n| cmd.find_subcommand_mut(&n).cloned()) {
        Some(sub) => {
            let bin = format!("odpo {}", sub.get_name());
            sub.bin_name(bin).render_usage().to_string()
        }
        None => cmd.render_usage().to_string(),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let matches = match Cli::command().try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_OK;
            }
            eprintln!("\n{}", usage_for(&args));
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    let sub = matches.subcommand().map(|(_, m)| m).expect("subcommand is required");
    let result = match &cli.command {
        Command::GenInstance(a) => cmd_gen_instance(a, sub),
        Command::Design(a) => cmd_design(a),
        Command::Run(a) => cmd_run(a, sub),
        Command::LowerBound(a) => cmd_lower_bound(a, sub),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

/// Default value of every `run` flag as rendered in `--help`.
pub fn run_flag_defaults() -> BTreeMap<String, String> {
    Cli::command()
        .find_subcommand("run")
        .expect("run subcommand")
        .get_arguments()
        .filter_map(|a| {
            let d = a.get_default_values().first()?;
            Some((a.get_id().to_string(), d.to_string_lossy().into_owned()))
        })
        .collect()
}

//! `collabpac`: generate instances, run seeded trials, predict sample counts.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use collabpac::harness::{self, sample_budget};
use collabpac::instances::{self, DEFAULT_EPS_INST};
use collabpac::report::{write_report, write_report_to};
use collabpac::{
    verify, Algorithm, Error, Instance64, Preset, ReportFormat, ReportRow, RunConfig,
    SampleSizeConfig,
};

/// Environment fallback for `--seed`.
const SEED_ENV: &str = "COLLABPAC_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "collabpac",
    version,
    about = "Collaborative PAC learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated instance as JSON.
    GenInstance(GenArgs),
    /// Run seeded trials of one algorithm on an instance file.
    Run(RunArgs),
    /// Run seeded trials over a grid of player counts.
    Sweep(SweepArgs),
    /// Print the closed-form sample count of a run.
    Predict(PredictArgs),
    /// Run the built-in property suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Realizable,
    Hard,
    Noisy,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Paper,
    Desk,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::Paper => Preset::Paper,
            PresetArg::Desk => Preset::Desk,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args, Debug)]
struct InstanceShape {
    /// Instance family.
    #[arg(long, value_enum, default_value = "realizable")]
    kind: Kind,
    /// Number of players.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// VC dimension of the cube class (ignored by `hard`, which uses d = k).
    #[arg(long, default_value_t = 4)]
    d: u32,
    /// Label-noise rate of the noisy family.
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    /// Mass each player puts off the shared point is 2 * eps-inst.
    #[arg(long, default_value_t = DEFAULT_EPS_INST)]
    eps_inst: f64,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    shape: InstanceShape,
    /// Generator seed [default: $COLLABPAC_SEED, else 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

/// Learning parameters. Unset flags fall back to `--config`, then to the
/// listed defaults.
#[derive(Args, Debug, Default)]
struct Params {
    /// JSON file with any of: eps, delta, alpha, preset, trials, seed,
    /// c_real, c_agn, max_rounds, jobs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target error [default: 0.2].
    #[arg(long)]
    eps: Option<f64>,
    /// Failure probability [default: 0.1].
    #[arg(long)]
    delta: Option<f64>,
    /// Approximation slack of the non-realizable learners [default: 0.5].
    #[arg(long)]
    alpha: Option<f64>,
    /// Constant set [default: paper].
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Constant of the realizable sample size [default: 1].
    #[arg(long)]
    c_real: Option<f64>,
    /// Constant of the agnostic sample size [default: 1].
    #[arg(long)]
    c_agn: Option<f64>,
    /// Round cap of the non-realizable learners [default: per preset].
    #[arg(long)]
    max_rounds: Option<usize>,
}

#[derive(Args, Debug)]
struct TrialArgs {
    /// Number of trials [default: 10].
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial i uses seed + i [default: $COLLABPAC_SEED, else 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Report file; without it the report goes to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Worker threads [default: 1].
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Algorithm: r1, r2, nr1, nr2, nr1-avg, nr2-avg or naive.
    #[arg(long)]
    alg: Algorithm,
    /// Instance file written by gen-instance.
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    params: Params,
    #[command(flatten)]
    trials: TrialArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', required = true)]
    alg: Vec<Algorithm>,
    /// Comma-separated player counts.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    k_list: Vec<usize>,
    #[command(flatten)]
    shape: InstanceShape,
    /// Seed of the generated instances.
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
    #[command(flatten)]
    params: Params,
    #[command(flatten)]
    trials: TrialArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    alg: Algorithm,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: u32,
    #[command(flatten)]
    params: Params,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Seed of the property suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    eps: Option<f64>,
    delta: Option<f64>,
    alpha: Option<f64>,
    preset: Option<Preset>,
    trials: Option<usize>,
    seed: Option<u64>,
    c_real: Option<f64>,
    c_agn: Option<f64>,
    max_rounds: Option<usize>,
    jobs: Option<usize>,
}

fn read_file_config(path: Option<&Path>) -> Result<FileConfig, Error> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn env_seed() -> Result<Option<u64>, Error> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{s}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

struct Resolved {
    cfg: RunConfig,
    trials: usize,
    seed: u64,
    jobs: usize,
}

fn resolve(params: &Params, trials: Option<&TrialArgs>) -> Result<Resolved, Error> {
    let file = read_file_config(params.config.as_deref())?;
    let base = RunConfig::default();
    let sample = SampleSizeConfig {
        c_real: params.c_real.or(file.c_real).unwrap_or(base.sample.c_real),
        c_agn: params.c_agn.or(file.c_agn).unwrap_or(base.sample.c_agn),
    };
    let cfg = RunConfig {
        eps: params.eps.or(file.eps).unwrap_or(base.eps),
        delta: params.delta.or(file.delta).unwrap_or(base.delta),
        alpha: params.alpha.or(file.alpha).unwrap_or(base.alpha),
        preset: params
            .preset
            .map(Preset::from)
            .or(file.preset)
            .unwrap_or(base.preset),
        sample,
        max_rounds: params.max_rounds.or(file.max_rounds),
    };
    let flag_seed = trials.and_then(|t| t.seed);
    let seed = match flag_seed.or(file.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    Ok(Resolved {
        cfg,
        trials: trials.and_then(|t| t.trials).or(file.trials).unwrap_or(10),
        seed,
        jobs: trials
            .and_then(|t| t.jobs)
            .or(file.jobs)
            .unwrap_or(1)
            .max(1),
    })
}

fn build_instance(shape: &InstanceShape, k: usize, seed: u64) -> Result<Instance64, Error> {
    match shape.kind {
        Kind::Realizable => {
            instances::make_realizable_instance_with(k, shape.d, shape.eps_inst, seed)
        }
        Kind::Hard => instances::make_hard_instance(k, shape.eps_inst),
        Kind::Noisy => {
            instances::make_noisy_instance_with(k, shape.d, shape.eta, shape.eps_inst, seed)
        }
    }
}

fn emit(rows: &[ReportRow], args: &TrialArgs) -> Result<(), Error> {
    let format = args.format.into();
    match &args.report {
        Some(path) => {
            write_report(rows, format, path)?;
            println!("wrote {} row(s) to {}", rows.len(), path.display());
            Ok(())
        }
        None => write_report_to(rows, format, io::stdout().lock()),
    }
}

fn gen_instance(args: &GenArgs) -> Result<ExitCode, Error> {
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let inst = build_instance(&args.shape, args.shape.k, seed)?;
    inst.save_json(&args.out)?;
    println!(
        "wrote {} instance (k = {}, d = {}, opt = {}) to {}",
        inst.kind(),
        inst.k(),
        inst.class().vc_dim(),
        inst.opt(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run(args: &RunArgs) -> Result<ExitCode, Error> {
    let r = resolve(&args.params, Some(&args.trials))?;
    r.cfg.validate(args.alg)?;
    let inst = Instance64::load_json(&args.instance)?;
    let stats = harness::run_trials_with_jobs(args.alg, &inst, &r.cfg, r.trials, r.seed, r.jobs)?;
    emit(&[ReportRow::from_stats(&stats)], &args.trials)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: &SweepArgs) -> Result<ExitCode, Error> {
    let r = resolve(&args.params, Some(&args.trials))?;
    for &alg in &args.alg {
        r.cfg.validate(alg)?;
    }
    let mut rows = Vec::new();
    for &k in &args.k_list {
        let inst = build_instance(&args.shape, k, args.instance_seed)?;
        for &alg in &args.alg {
            let stats =
                harness::run_trials_with_jobs(alg, &inst, &r.cfg, r.trials, r.seed, r.jobs)?;
            rows.push(ReportRow::from_stats(&stats));
        }
    }
    emit(&rows, &args.trials)?;
    Ok(ExitCode::SUCCESS)
}

fn predict(args: &PredictArgs) -> Result<ExitCode, Error> {
    let r = resolve(&args.params, None)?;
    r.cfg.validate(args.alg)?;
    let b = sample_budget(args.alg, &r.cfg, args.k, args.d)?;
    let mut out = io::stdout().lock();
    let lines = [
        ("algorithm", args.alg.to_string()),
        ("k", args.k.to_string()),
        ("d", args.d.to_string()),
        ("rounds", b.rounds.to_string()),
        ("learn_per_round", b.learn_per_round.to_string()),
        ("test_per_player", b.test_per_player.to_string()),
        ("learn_total", b.learn_total.to_string()),
        ("test_total", b.test_total.to_string()),
        ("total", b.total.to_string()),
    ];
    for (name, value) in lines {
        writeln!(out, "{name:<16} {value}").map_err(stdout_error)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_all(args: &VerifyArgs) -> Result<ExitCode, Error> {
    let results = verify::run_all(args.seed)?;
    let mut out = io::stdout().lock();
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {}: {}", r.name, r.detail).map_err(stdout_error)?;
    }
    Ok(if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn stdout_error(source: io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version and 2 for usage errors.
            e.exit();
        }
    };
    let result = match &cli.command {
        Command::GenInstance(a) => gen_instance(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Predict(a) => predict(a),
        Command::Verify(a) => verify_all(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

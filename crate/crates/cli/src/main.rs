//! `skg`: run the key-generation protocol and reproduce its reference curves.

mod scenario;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use skg_core::estimation::{self, EveBranch, Interval};
use skg_core::gaussmodel::ChannelParams;
use skg_core::protocol::{self, RunRecord, Status};
use skg_core::secbounds::{self, Criterion};

const EXIT_ABORT: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "skg", version, about = "Secret key generation over a noisy wireless channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol once per seed and print a summary CSV.
    Simulate(SimulateArgs),
    /// Same as `simulate --emit-keys`.
    Keygen(SimulateArgs),
    /// Asymptotic key rate of the symmetric example channel.
    RateCurve(RateArgs),
    /// Leaked-information bound exponent against the optimization variable.
    BoundCurve(BoundArgs),
    /// Estimation report for a CSV of `(a, b)` samples.
    Estimate(EstimateArgs),
    /// Write simulated `(a, b)` samples as CSV.
    Sample(SampleArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Directory for `summary.csv` and `records.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Include raw keys in the records.
    #[arg(long)]
    emit_keys: bool,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, default_value_t = 0.0)]
    x_min: f64,
    #[arg(long, default_value_t = 2.0)]
    x_max: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    D,
    Iprime,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    s_min: f64,
    #[arg(long, default_value_t = 0.5)]
    s_max: f64,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    /// Sacrifice length; defaults to the smallest one meeting the scenario target.
    #[arg(long)]
    m1: Option<usize>,
    /// Stand-in for `v̂_AB`; defaults to `2a_B² + Var(B)`.
    #[arg(long)]
    v_ab: Option<f64>,
    #[arg(long, value_enum, default_value_t = CriterionArg::D)]
    criterion: CriterionArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV with header `a,b`. The first half feeds the moment estimates,
    /// the second half the residual distribution.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Channel constants for the branch choice; the typical channel if absent.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(String),
    Abort(String),
}

impl From<skg_core::Error> for Failure {
    fn from(e: skg_core::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate(a, false),
        Command::Keygen(a) => simulate(a, true),
        Command::RateCurve(a) => rate_curve(a),
        Command::BoundCurve(a) => bound_curve(a),
        Command::Estimate(a) => estimate(a),
        Command::Sample(a) => sample(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Abort(msg)) => {
            eprintln!("aborted: {msg}");
            ExitCode::from(EXIT_ABORT)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn status_label(s: &Status) -> String {
    match s {
        Status::Success => "success".into(),
        Status::VerificationFailed => "verification_failed".into(),
        Status::UndetectedMismatch => "undetected_mismatch".into(),
        Status::Aborted(r) => {
            let v = serde_json::to_value(r).unwrap_or_default();
            let reason = v.get("reason").and_then(|r| r.as_str()).unwrap_or("unknown");
            format!("aborted:{reason}")
        }
    }
}

fn simulate(args: SimulateArgs, force_keys: bool) -> Result<(), Failure> {
    let sc = scenario::load(&args.scenario).map_err(Failure::Config)?;
    if args.runs == 0 {
        return Err(Failure::Config("--runs must be >= 1".into()));
    }
    let code = sc.config.code.load()?;
    let emit_keys = args.emit_keys || force_keys;
    let base = args.seed.unwrap_or(sc.seed);
    let records: Vec<RunRecord> = (0..args.runs)
        .into_par_iter()
        .map(|i| {
            let seed = base.wrapping_add(i as u64);
            protocol::run_seeded(&sc.params, &sc.noise, &sc.config, &code, seed)
                .map(|o| RunRecord::new(seed, &sc.config, &o, emit_keys))
        })
        .collect::<Result<_, _>>()?;

    let mut summary = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut summary);
        w.write_record(["seed", "status", "key_len", "d_bound_log2", "iprime_bound_log2"])
            .map_err(|e| Failure::Config(e.to_string()))?;
        for r in &records {
            let (d, ip) = match &r.certificates {
                Some(c) => (
                    c.variational_distance.log2_bound.to_string(),
                    c.modified_mutual_info.log2_bound.to_string(),
                ),
                None => (String::new(), String::new()),
            };
            w.write_record([r.seed.to_string(), status_label(&r.status), r.key_len.to_string(), d, ip])
                .map_err(|e| Failure::Config(e.to_string()))?;
        }
        w.flush()?;
    }
    io::stdout().write_all(&summary)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.csv"), &summary)?;
        let json = serde_json::to_vec_pretty(&records).map_err(|e| Failure::Config(e.to_string()))?;
        fs::write(dir.join("records.json"), json)?;
    }

    let ok = records.iter().filter(|r| r.status == Status::Success).count();
    eprintln!("success rate: {ok}/{} = {:.3}", records.len(), ok as f64 / records.len() as f64);
    if ok == 0 {
        return Err(Failure::Abort("no run produced a key".into()));
    }
    Ok(())
}

fn rate_curve(args: RateArgs) -> Result<(), Failure> {
    if !(args.x_min >= 0.0 && args.x_min < args.x_max && args.x_max.is_finite()) {
        return Err(Failure::Config("need 0 <= x_min < x_max".into()));
    }
    if args.steps == 0 {
        return Err(Failure::Config("--steps must be >= 1".into()));
    }
    let rows = (0..=args.steps)
        .map(|i| {
            let x = args.x_min + (args.x_max - args.x_min) * i as f64 / args.steps as f64;
            secbounds::key_rate_typical(x)
        })
        .collect::<Result<Vec<_>, _>>()?;
    secbounds::write_rate_csv(output(args.out.as_deref())?, &rows)?;
    Ok(())
}

fn bound_curve(args: BoundArgs) -> Result<(), Failure> {
    let sc = scenario::load(&args.scenario).map_err(Failure::Config)?;
    if !(0.0 < args.s_min && args.s_min < args.s_max && args.s_max < 1.0) {
        return Err(Failure::Config("need 0 < s_min < s_max < 1".into()));
    }
    if args.steps == 0 {
        return Err(Failure::Config("--steps must be >= 1".into()));
    }
    let v_y = sc.noise.variance();
    let v_ab = args.v_ab.unwrap_or_else(|| secbounds::reference_v_ab(&sc.params, v_y));
    let cfg = &sc.config;
    let exponent = secbounds::expected_exponent(&sc.params, v_y, cfg.l, cfg.epsilon, v_ab)?;
    let f = |t: f64| exponent.at(t);
    let m1 = match args.m1 {
        Some(m) => m,
        None => secbounds::sacrifice_length(&f, cfg.n, cfg.security_target_log2)
            .map_err(|e| Failure::Abort(e.to_string()))?,
    };
    if m1 > cfg.n {
        return Err(Failure::Config(format!("--m1 must not exceed n = {}", cfg.n)));
    }
    let criterion = match args.criterion {
        CriterionArg::D => Criterion::VariationalDistance,
        CriterionArg::Iprime => Criterion::ModifiedMutualInfo,
    };
    let grid: Vec<f64> = (0..=args.steps)
        .map(|i| args.s_min + (args.s_max - args.s_min) * i as f64 / args.steps as f64)
        .collect();
    let rows = secbounds::bound_curve(&f, cfg.n, m1, criterion, &grid);
    secbounds::write_bound_csv(output(args.out.as_deref())?, &rows)?;
    let (s_grid, v_grid) = rows
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is nonempty");
    let cert = secbounds::minimize_exponent(&f, cfg.n, m1, criterion)?;
    eprintln!("m1 = {m1}, v_ab = {v_ab}");
    eprintln!("grid argmin: s = {s_grid:.4}, log2 bound = {v_grid:.3}");
    eprintln!("minimizer:   s = {:.4}, log2 bound = {:.3}", cert.s_star, cert.log2_bound);
    Ok(())
}

#[derive(Serialize)]
struct EstimateReport {
    samples: usize,
    l: usize,
    epsilon: f64,
    e_hat: f64,
    v_hat: f64,
    c_hat: f64,
    v_ab_hat: f64,
    w_hat: f64,
    e_interval: Interval,
    v_interval: Interval,
    c_interval: Interval,
    c_lower: f64,
    branch: EveBranch,
    smoothing_stdev: f64,
    /// Absent when `ĉ = 0`.
    ks_error_bound: Option<f64>,
    residuals: usize,
}

fn estimate(args: EstimateArgs) -> Result<(), Failure> {
    let file = File::open(&args.samples).map_err(|e| Failure::Config(format!("{}: {e}", args.samples.display())))?;
    let samples = skg_core::csvio::read_samples(file)?;
    if samples.len() < 4 {
        return Err(Failure::Config(format!("need at least 4 samples, got {}", samples.len())));
    }
    let params = match &args.scenario {
        Some(p) => scenario::load(p).map_err(Failure::Config)?.params,
        None => ChannelParams::typical(1.0),
    };
    let (first, second) = samples.split_at(samples.len() / 2);
    let bundle = estimation::residuals(second, estimation::estimate_moments(first, args.epsilon)?)?;
    let eve = estimation::estimate_eve_cdf(&bundle, &params)?;
    let report = EstimateReport {
        samples: samples.len(),
        l: bundle.l,
        epsilon: bundle.epsilon,
        e_hat: bundle.e_hat,
        v_hat: bundle.v_hat,
        c_hat: bundle.c_hat,
        v_ab_hat: bundle.v_ab_hat,
        w_hat: bundle.w_hat,
        e_interval: bundle.e_interval(),
        v_interval: bundle.v_interval(),
        c_interval: bundle.c_interval(),
        c_lower: bundle.c_lower(),
        branch: eve.branch,
        smoothing_stdev: eve.smoothing_stdev,
        ks_error_bound: estimation::ks_error_bound(&bundle, args.epsilon).ok(),
        residuals: bundle.residuals.len(),
    };
    let mut w = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| Failure::Config(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn sample(args: SampleArgs) -> Result<(), Failure> {
    let sc = scenario::load(&args.scenario).map_err(Failure::Config)?;
    let pairs = protocol::sample_pairs(&sc.params, &sc.noise, args.count, args.seed.unwrap_or(sc.seed))?;
    skg_core::csvio::write_samples(output(args.out.as_deref())?, &pairs)?;
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qidlab::counterexample::{build_counterexample, fixed_phase_failure, random_phase_detection, sample_detections, Detection};
use qidlab::harness::{
    exit_code_for, init_threads_from_env, load_code, run_pipeline, sweep, sweep_exit_code, ChannelSpec, ExperimentConfig,
    SweepGrid, EXIT_BOUND_VIOLATION, EXIT_OK,
};
use qidlab::idcode::{build_loeber_code, build_zero_entropy_code, check_size_bounds, verify_id_code, IdCode, PhasePolicy, PhaseSearch};
use qidlab::io::{read_json, to_json_string, write_json};
use qidlab::orthogonalize::orthogonalize_code;
use qidlab::subsets::{generate_family, FamilyMode, FamilyParams, SubsetFamily};
use qidlab::transmission::{random_code, CodeKind, CodeOptions, DecoderKind};
use qidlab::Result;

#[derive(Parser)]
#[command(name = "qidlab", version, about = "Finite-block identification codes over quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelKind {
    Identity,
    Extended,
    Depolarizing,
    Dephasing,
    AmplitudeDamping,
    RandomNearIdentity,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Loeber,
    ZeroEntropy,
}

#[derive(Subcommand)]
enum Command {
    /// Write a Kraus channel as JSON.
    GenChannel {
        #[arg(long, value_enum)]
        kind: ChannelKind,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        dim_c: usize,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        kraus: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a seeded transmission code over `n` uses of a channel.
    GenCode {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        messages: usize,
        #[arg(long, default_value = "basis")]
        kind: CodeKind,
        #[arg(long)]
        decoder: Option<DecoderKind>,
        #[arg(long)]
        mix: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a code into a pure orthogonal code.
    Orthogonalize {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Subsets of size ⌊εM⌋ with pairwise intersections at most λ⌊εM⌋.
    GenFamily {
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        max_attempts: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an ID code from an orthogonal code and a family.
    BuildId {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value = "uniform")]
        policy: PhasePolicy,
        #[arg(long)]
        out: PathBuf,
        /// Where to write thresholds and per-message rejection counts.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Evaluate both error kinds of an ID code.
    VerifyId {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Dimension used in the size bound; defaults to the codeword dimension.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Fixed-phase failure and random-phase detection.
    Counterexample {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "M")]
        m: usize,
        #[arg(long, value_delimiter = ',', conflicts_with = "samples")]
        phases: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Full pipeline from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timings: bool,
    },
    /// Run a grid of pipelines into one CSV.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timings: bool,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            print!("{}", to_json_string(value)?);
            Ok(())
        }
    }
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct CounterexampleRecord {
    K: usize,
    M: usize,
    fixed_phase_failure: f64,
    successes: Vec<f64>,
    completeness_deviation: f64,
    detections: Vec<Detection>,
    mean_detection: Option<f64>,
    expected_mean: f64,
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::GenChannel { kind, dim, dim_c, p, kraus, seed, out } => {
            let spec = match kind {
                ChannelKind::Identity => ChannelSpec::Identity { dim },
                ChannelKind::Extended => ChannelSpec::Extended { dim_a: dim, dim_c },
                ChannelKind::Depolarizing => ChannelSpec::Depolarizing { dim, p },
                ChannelKind::Dephasing => ChannelSpec::Dephasing { p },
                ChannelKind::AmplitudeDamping => ChannelSpec::AmplitudeDamping { gamma: p },
                ChannelKind::RandomNearIdentity => ChannelSpec::RandomNearIdentity { dim, p },
                ChannelKind::Random => ChannelSpec::Random { in_dim: dim, out_dim: dim, kraus },
            };
            emit(&spec.build(seed)?, out.as_ref())?;
        }
        Command::GenCode { channel, n, messages, kind, decoder, mix, seed, out } => {
            let ch = read_json(&channel)?;
            let mut opts = CodeOptions::new(kind);
            opts.decoder = decoder;
            if let Some(m) = mix {
                opts.mix = m;
            }
            let code = random_code(&ch, n, messages, seed, opts)?;
            emit(&code, out.as_ref())?;
            eprintln!("avg_error {} max_error {}", code.avg_error()?, code.max_error()?);
        }
        Command::Orthogonalize { code, out, report } => {
            let code = load_code(&code)?;
            let result = orthogonalize_code(&code)?;
            write_json(&out, &result.code)?;
            emit(&result.report, report.as_ref())?;
            if result.report.delta_out > result.report.bound_delta + 1e-9 {
                return Ok(EXIT_BOUND_VIOLATION);
            }
        }
        Command::GenFamily { m, eps, lambda, count, seed, exhaustive, max_attempts, out } => {
            let mut p = FamilyParams::new(m, eps, lambda, count, seed);
            p.max_attempts = max_attempts;
            if exhaustive {
                p.mode = FamilyMode::Exhaustive;
            }
            let g = generate_family(&p)?;
            for w in &g.warnings {
                eprintln!("warning: {w}");
            }
            emit(&g.family, out.as_ref())?;
        }
        Command::BuildId { mode, code, family, seed, trials, policy, out, stats } => {
            let ocode = load_code(&code)?;
            let family: SubsetFamily = read_json(&family)?;
            match mode {
                Mode::Loeber => write_json(&out, &build_loeber_code(&ocode, &family)?)?,
                Mode::ZeroEntropy => {
                    let b = build_zero_entropy_code(&ocode, &family, &PhaseSearch { policy, seed, trials })?;
                    write_json(&out, &b.code)?;
                    let record = serde_json::json!({
                        "delta": b.delta,
                        "threshold_first": b.threshold_first,
                        "threshold_second": b.threshold_second,
                        "rejections": b.rejections,
                        "total_rejections": b.total_rejections(),
                        "analytic_n_prime": b.analytic_n_prime,
                        "phases": b.phases,
                    });
                    emit(&record, stats.as_ref())?;
                }
            }
        }
        Command::VerifyId { code, report, dim } => {
            let code: IdCode = read_json(&code)?;
            let r = verify_id_code(&code)?;
            let bounds = check_size_bounds(&code, &r, dim);
            let record = serde_json::json!({
                "lambda1_max": r.lambda1_max,
                "lambda2_max": r.lambda2_max,
                "zero_entropy": code.is_zero_entropy(),
                "witness_deviation": code.witness_deviation(),
                "size_bounds": bounds.as_ref().ok(),
                "report": r,
            });
            emit(&record, report.as_ref())?;
            if bounds.is_ok_and(|b| !b.satisfied) {
                return Ok(EXIT_BOUND_VIOLATION);
            }
        }
        Command::Counterexample { k, m, phases, samples, seed } => {
            let inst = build_counterexample(k, m)?;
            let detections = match (phases, samples) {
                (Some(p), _) => vec![random_phase_detection(&inst, &p)?],
                (None, Some(s)) => sample_detections(&inst, s, seed).into_iter().map(|(_, d)| d).collect(),
                (None, None) => Vec::new(),
            };
            let mean_detection =
                (!detections.is_empty()).then(|| detections.iter().map(|d| d.detection).sum::<f64>() / detections.len() as f64);
            let total = inst.povm.total();
            let record = CounterexampleRecord {
                K: k,
                M: m,
                fixed_phase_failure: fixed_phase_failure(&inst),
                successes: inst.success_probabilities(),
                completeness_deviation: qidlab::linalg::identity_deviation(total.as_matrix()),
                detections,
                mean_detection,
                expected_mean: 1.0 - 1.0 / k as f64,
            };
            emit(&record, None)?;
        }
        Command::Pipeline { config, out, timings } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            cfg.timings |= timings;
            let run = run_pipeline(&cfg)?;
            if cfg.output_dir.is_none() {
                emit(&run.report, None)?;
            }
            for c in run.report.bound_checks.iter().filter(|c| !c.ok) {
                eprintln!("bound violated: {} = {} > {}", c.name, c.value, c.bound);
            }
            return Ok(run.report.exit_code());
        }
        Command::Sweep { grid, out, timings } => {
            let grid = SweepGrid::load(&grid)?;
            let (csv, rows) = sweep(&grid, timings)?;
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            return Ok(sweep_exit_code(&rows));
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads_from_env().and_then(|_| run(cli));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}

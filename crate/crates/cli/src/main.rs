//! `relaybp`: build decoding problems, decode syndromes and run benchmarks.
//!
//! Exit status: 0 on success, 1 when `decode` does not converge, 2 on usage
//! or input errors.

mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qldpc_relay::bench::{sample_error, shot_rng, write_csv, write_json, BenchRecord, RECORD_VERSION};
use qldpc_relay::oracle::brute_force_min_weight;
use qldpc_relay::problem::{
    build_bivariate_bicycle, build_repetition, build_surface_phenomenological, code_dimensions, load_problem,
    parse_polynomial, save_problem, BicycleParams,
};
use qldpc_relay::relay::Preset;
use qldpc_relay::{BitVector, DecodingProblem, Ensembling, RelayDecoder, RelaySchedule};
use serde::Serialize;

use manifest::{CompareMode, Job, ProblemIdentity, RunManifest, MANIFEST_VERSION};

#[derive(Parser)]
#[command(name = "relaybp", version, about = "Relay belief-propagation decoding for quantum LDPC problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a decoding problem and write it in interchange format.
    Build {
        #[command(subcommand)]
        code: BuildCode,
    },
    /// Split a typed problem into its X- and Z-decoding halves (compressed).
    Split(SplitArgs),
    /// Merge identical columns of a problem.
    Compress {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode one syndrome.
    Decode(DecodeArgs),
    /// Estimate the logical error rate of one schedule.
    Bench {
        problem: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated list of maximum leg counts, one output row each.
        #[arg(long = "vary-R", value_delimiter = ',')]
        vary_r: Vec<usize>,
    },
    /// Estimate logical error rates over a grid of memory-strength intervals.
    Sweep {
        problem: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Interval centers as start:stop:step (inclusive).
        #[arg(long, value_parser = parse_range)]
        centers: GridAxis,
        /// Interval widths as start:stop:step (inclusive).
        #[arg(long, value_parser = parse_range)]
        widths: GridAxis,
    },
    /// Relay against independent ensembling on identical shots.
    Compare {
        problem: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = CompareMode::Both)]
        mode: CompareMode,
    },
    /// Regenerate the output described by a run manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum BuildCode {
    /// Repetition code memory.
    Repetition {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Also merge identical columns before writing.
        #[arg(long)]
        compress: bool,
    },
    /// Rotated surface code memory.
    Surface {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Bivariate bicycle code memory.
    Bb {
        /// TOML file with fields l, m, a, b.
        #[arg(long, conflicts_with_all = ["l", "m", "a", "b"])]
        params: Option<PathBuf>,
        #[arg(long, requires_all = ["m", "a", "b"])]
        l: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Polynomial such as "x^3 + y + y^2".
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[command(flatten)]
        noise: NoiseArgs,
    },
}

#[derive(Args)]
struct NoiseArgs {
    /// Total measurement rounds; the last one is noiseless.
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Data error probability per round.
    #[arg(long)]
    p: f64,
    /// Measurement error probability; defaults to `--p`.
    #[arg(long)]
    p_meas: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    input: PathBuf,
    /// Split by X/Z row type (the only supported split).
    #[arg(long, required = true)]
    xz: bool,
    #[arg(long)]
    out_x: PathBuf,
    #[arg(long)]
    out_z: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    problem: PathBuf,
    /// Syndrome as a 0/1 string.
    #[arg(long, group = "input")]
    syndrome: Option<String>,
    /// File holding the syndrome as one 0/1 line.
    #[arg(long, group = "input")]
    syndrome_file: Option<PathBuf>,
    /// Sample an error and decode its syndrome.
    #[arg(long, group = "input")]
    sample: bool,
    /// Seed for `--sample`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shot index for `--sample`.
    #[arg(long, default_value_t = 0)]
    shot: u64,
    /// Compare the result with the exhaustive minimum-weight decoder.
    #[arg(long)]
    verify_oracle: bool,
    #[command(flatten)]
    schedule: ScheduleArgs,
}

/// Defaults are the Relay-BP-1 schedule: R = 301, T0 = 80,
/// T = 60, and the preset's first-leg strength and interval.
#[derive(Args, Clone)]
struct ScheduleArgs {
    #[arg(long, value_enum, default_value_t = PresetArg::Gross)]
    preset: PresetArg,
    /// Solutions sought.
    #[arg(long = "S")]
    s: Option<usize>,
    /// Maximum number of legs.
    #[arg(long = "R")]
    r: Option<usize>,
    /// Iteration cap of the first leg.
    #[arg(long = "T0")]
    t0: Option<usize>,
    /// Iteration cap of every later leg.
    #[arg(long = "T")]
    t: Option<usize>,
    /// Uniform memory strength of the first leg.
    #[arg(long, allow_hyphen_values = true)]
    gamma0: Option<f64>,
    /// Center of the memory-strength interval of later legs.
    #[arg(long, allow_hyphen_values = true)]
    center: Option<f64>,
    /// Width of the memory-strength interval of later legs.
    #[arg(long)]
    width: Option<f64>,
    /// Seed of the per-leg memory strengths.
    #[arg(long, default_value_t = 0)]
    schedule_seed: u64,
    #[arg(long, value_enum, default_value_t = EnsemblingArg::Relay)]
    ensembling: EnsemblingArg,
    /// Saturation bound for messages and marginals.
    #[arg(long)]
    saturation: Option<f64>,
    /// Plain min-sum BP: one leg without memory, T0 defaulting to 10000.
    #[arg(long)]
    standard_bp: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Gross,
    TwoGross,
    Surface,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsemblingArg {
    Relay,
    Independent,
}

impl ScheduleArgs {
    fn schedule(&self) -> Result<RelaySchedule> {
        let mut s = if self.standard_bp {
            RelaySchedule::standard_bp(self.t0.unwrap_or(10_000))
        } else {
            let preset = match self.preset {
                PresetArg::Gross => Preset::Gross,
                PresetArg::TwoGross => Preset::TwoGross,
                PresetArg::Surface => Preset::Surface,
            };
            RelaySchedule::preset(preset)
        };
        s.solutions_sought = self.s.unwrap_or(s.solutions_sought);
        s.max_legs = self.r.unwrap_or(s.max_legs);
        s.first_leg_iterations = self.t0.unwrap_or(s.first_leg_iterations);
        s.leg_iterations = self.t.unwrap_or(s.leg_iterations);
        s.first_leg_gamma = self.gamma0.unwrap_or(s.first_leg_gamma);
        s.gamma_center = self.center.unwrap_or(s.gamma_center);
        s.gamma_width = self.width.unwrap_or(s.gamma_width);
        s.saturation = self.saturation.unwrap_or(s.saturation);
        s.rng_seed = self.schedule_seed;
        s.ensembling = match self.ensembling {
            EnsemblingArg::Relay => Ensembling::Relay,
            EnsemblingArg::Independent => Ensembling::Independent,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value_t = 10_000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all available cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Multiply every error probability by this factor.
    #[arg(long, default_value_t = 1.0)]
    p_scale: f64,
    /// Report twice the measured logical error rate (one sector of a CSS code
    /// standing in for both).
    #[arg(long)]
    double_css: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Manifest path; defaults to `<out>.manifest.json` when `--out` is given.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
struct GridAxis(Vec<f64>);

fn parse_range(s: &str) -> std::result::Result<GridAxis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [v] => Ok(GridAxis(vec![num(v)?])),
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err("range needs start <= stop and a positive step".into());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // rounding keeps 0.1 steps printing as 0.3 rather than 0.30000000000000004
            Ok(GridAxis((0..count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect()))
        }
        _ => Err("expected start:stop:step or a single value".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Build { code } => build(code)?,
        Command::Split(args) => split(args)?,
        Command::Compress { input, out } => {
            let problem = load_problem(&input)?;
            let c = problem.compress()?;
            save_problem(&c.problem, &out)?;
            println!(
                "{}: {} columns -> {} ({} dropped)",
                problem.name(),
                problem.num_errors(),
                c.problem.num_errors(),
                c.dropped.len()
            );
        }
        Command::Decode(args) => return decode(args),
        Command::Bench { problem, schedule, run, vary_r } => {
            execute(&problem, &schedule, &run, Job::Bench { vary_r })?;
        }
        Command::Sweep { problem, schedule, run, centers, widths } => {
            execute(&problem, &schedule, &run, Job::Sweep { centers: centers.0, widths: widths.0 })?;
        }
        Command::Compare { problem, schedule, run, mode } => {
            execute(&problem, &schedule, &run, Job::Compare { mode })?;
        }
        Command::Rerun { manifest, out, format } => {
            let m = RunManifest::read(&manifest)?;
            let problem = m.load_problem()?;
            let rows = m.run(&problem)?;
            emit(&rows, out.as_deref(), format)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn describe(problem: &DecodingProblem) {
    println!(
        "{}: M={} N={} K={}",
        problem.name(),
        problem.num_checks(),
        problem.num_errors(),
        problem.num_actions()
    );
    match problem.compress() {
        Ok(c) => println!(
            "compression: {} -> {} columns ({} in merged groups, {} dropped)",
            problem.num_errors(),
            c.problem.num_errors(),
            c.groups.iter().filter(|g| g.len() > 1).map(Vec::len).sum::<usize>(),
            c.dropped.len()
        ),
        Err(e) => println!("compression: not applicable ({e})"),
    }
}

fn build(code: BuildCode) -> Result<()> {
    let (problem, out) = match code {
        BuildCode::Repetition { n, noise, compress } => {
            let p = build_repetition(n, noise.p, noise.p_meas.unwrap_or(noise.p), noise.rounds)?;
            let p = if compress { p.compress_columns()? } else { p };
            (p, noise.out)
        }
        BuildCode::Surface { d, noise } => (
            build_surface_phenomenological(d, noise.rounds, noise.p, noise.p_meas.unwrap_or(noise.p))?,
            noise.out,
        ),
        BuildCode::Bb { params, l, m, a, b, noise } => {
            let params = match params {
                Some(path) => {
                    let text =
                        std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
                    BicycleParams::from_toml_str(&text)?
                }
                None => {
                    let (Some(l), Some(m), Some(a), Some(b)) = (l, m, a, b) else {
                        bail!("give either --params or all of --l, --m, --a, --b");
                    };
                    BicycleParams {
                        l,
                        m,
                        a_terms: parse_polynomial(&a)?,
                        b_terms: parse_polynomial(&b)?,
                    }
                }
            };
            let (n, k) = code_dimensions(&params)?;
            println!("[[{n},{k}]] bivariate bicycle code, H_X H_Z^T = 0");
            (build_bivariate_bicycle(&params, noise.p, noise.p_meas.unwrap_or(noise.p), noise.rounds)?, noise.out)
        }
    };
    describe(&problem);
    save_problem(&problem, &out)?;
    Ok(())
}

fn split(args: SplitArgs) -> Result<()> {
    let problem = load_problem(&args.input)?;
    let (x, z) = problem.xz_split()?;
    for (half, path) in [(x, &args.out_x), (z, &args.out_z)] {
        let c = half.compress()?;
        println!(
            "{}: M={} N={} K={} ({} columns before compression, {} dropped)",
            c.problem.name(),
            c.problem.num_checks(),
            c.problem.num_errors(),
            c.problem.num_actions(),
            half.num_errors(),
            c.dropped.len()
        );
        save_problem(&c.problem, path)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleCheck {
    min_weight: f64,
    weight_matches: bool,
    degenerate: bool,
}

#[derive(Serialize)]
struct DecodeRecord {
    problem: String,
    syndrome: BitVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled_error: Option<BitVector>,
    success: bool,
    correction: BitVector,
    weight: f64,
    solutions_found: usize,
    total_iterations: usize,
    legs_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    logical_failure: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
    schedule: RelaySchedule,
}

fn decode(args: DecodeArgs) -> Result<ExitCode> {
    let problem = load_problem(&args.problem)?;
    let schedule = args.schedule.schedule()?;
    let (syndrome, sampled) = if let Some(s) = &args.syndrome {
        (s.parse::<BitVector>()?, None)
    } else if let Some(path) = &args.syndrome_file {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        (text.parse::<BitVector>()?, None)
    } else if args.sample {
        let e = sample_error(&problem, &mut shot_rng(args.seed, args.shot));
        (problem.syndrome(&e)?, Some(e))
    } else {
        bail!("give one of --syndrome, --syndrome-file or --sample");
    };
    if syndrome.len() != problem.num_checks() {
        bail!("syndrome has {} bits, problem has {} detectors", syndrome.len(), problem.num_checks());
    }
    let result = RelayDecoder::new(&problem, schedule.clone())?.decode(&syndrome)?;
    let oracle = if args.verify_oracle {
        let o = brute_force_min_weight(&problem, &syndrome)?;
        Some(OracleCheck {
            min_weight: o.min_weight,
            weight_matches: result.success && (result.weight - o.min_weight).abs() <= 1e-9 * (1.0 + o.min_weight.abs()),
            degenerate: o.degenerate,
        })
    } else {
        None
    };
    let logical_failure = match &sampled {
        Some(e) => Some(qldpc_relay::oracle::logical_failure(&problem, e, &result.correction)?),
        None => None,
    };
    let record = DecodeRecord {
        problem: problem.name().to_string(),
        syndrome,
        sampled_error: sampled,
        success: result.success,
        correction: result.correction,
        weight: result.weight,
        solutions_found: result.solutions_found,
        total_iterations: result.total_iterations,
        legs_used: result.legs_used,
        logical_failure,
        oracle,
        schedule,
    };
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(if result.success { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn execute(problem_path: &Path, schedule: &ScheduleArgs, run: &RunArgs, job: Job) -> Result<()> {
    let problem = load_problem(problem_path)?;
    let manifest = RunManifest {
        manifest_version: MANIFEST_VERSION,
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        record_version: RECORD_VERSION,
        problem: ProblemIdentity::new(problem_path, &problem)?,
        p_scale: run.p_scale,
        schedule: schedule.schedule()?,
        shots: run.shots,
        seed: run.seed,
        workers: run.workers,
        double_css: run.double_css,
        job,
    };
    let rows = manifest.run(&problem)?;
    emit(&rows, run.out.as_deref(), run.format)?;
    let manifest_path = run.manifest.clone().or_else(|| {
        run.out.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = manifest_path {
        manifest.write(&path)?;
    }
    Ok(())
}

fn emit(rows: &[BenchRecord], out: Option<&Path>, format: Format) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_csv(rows, &mut buf)?,
        Format::Json => {
            write_json(rows, &mut buf)?;
            buf.push(b'\n');
        }
    }
    match out {
        Some(path) => std::fs::write(path, &buf).with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

//! Monte Carlo logical error rates, memory-strength sweeps and the
//! relay-versus-independent comparison.
//!
//! Shot `k` of a run seeded with `seed` draws its error from ChaCha8 stream
//! `k` of `seed`, so any shot can be replayed alone and results do not depend
//! on how shots are spread over workers. Tallies are integers and merge
//! exactly.

use std::io::Write;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::oracle::logical_failure;
use crate::problem::DecodingProblem;
use crate::relay::{Ensembling, RelayDecoder, RelaySchedule, RelayWorkspace};

const CHUNK: u64 = 256;

/// What the harness needs from a decoder.
pub trait ShotDecoder: Sync {
    type Workspace: Send;

    fn workspace(&self) -> Self::Workspace;

    fn decode_shot(&self, syndrome: &BitVector, workspace: &mut Self::Workspace) -> Result<ShotOutcome>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShotOutcome {
    pub success: bool,
    pub correction: BitVector,
    pub iterations: usize,
    pub legs: usize,
}

impl ShotDecoder for RelayDecoder {
    type Workspace = RelayWorkspace;

    fn workspace(&self) -> RelayWorkspace {
        RelayDecoder::workspace(self)
    }

    fn decode_shot(&self, syndrome: &BitVector, ws: &mut RelayWorkspace) -> Result<ShotOutcome> {
        let r = self.decode_with(syndrome, ws)?;
        Ok(ShotOutcome { success: r.success, correction: r.correction, iterations: r.total_iterations, legs: r.legs_used })
    }
}

/// Generator for shot `shot` of a run seeded with `seed`.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Draws `e_j = 1` with probability `p_j`, independently.
pub fn sample_error<R: Rng + ?Sized>(problem: &DecodingProblem, rng: &mut R) -> BitVector {
    let p = problem.probabilities();
    let support = p.iter().enumerate().filter(|&(_, &pj)| rng.random::<f64>() < pj).map(|(j, _)| j).collect();
    BitVector::from_support(p.len(), support).expect("increasing support")
}

/// Sampling parameters of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub shots: u64,
    pub seed: u64,
    /// Worker threads; `0` uses the available parallelism.
    pub workers: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Tally {
    shots: u64,
    failures: u64,
    iterations: u64,
    iterations_sq: u128,
    legs: u64,
}

impl Tally {
    fn record(&mut self, failed: bool, out: &ShotOutcome) {
        let it = out.iterations as u64;
        self.shots += 1;
        self.failures += failed as u64;
        self.iterations += it;
        self.iterations_sq += (it as u128) * (it as u128);
        self.legs += out.legs as u64;
    }

    fn merge(self, o: Tally) -> Tally {
        Tally {
            shots: self.shots + o.shots,
            failures: self.failures + o.failures,
            iterations: self.iterations + o.iterations,
            iterations_sq: self.iterations_sq + o.iterations_sq,
            legs: self.legs + o.legs,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct PairedTally {
    a: Tally,
    b: Tally,
    // Σ (it_a − it_b) and Σ (it_a − it_b)²
    diff: i128,
    diff_sq: u128,
}

impl PairedTally {
    fn merge(self, o: PairedTally) -> PairedTally {
        PairedTally {
            a: self.a.merge(o.a),
            b: self.b.merge(o.b),
            diff: self.diff + o.diff,
            diff_sq: self.diff_sq + o.diff_sq,
        }
    }
}

fn mean_stderr(n: u64, sum: f64, sum_sq: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Aggregated results of one configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub shots: u64,
    pub failures: u64,
    pub logical_error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_iterations: f64,
    pub iter_stderr: f64,
    pub mean_legs: f64,
}

impl BenchStats {
    fn from_tally(t: &Tally) -> Self {
        let (ci_low, ci_high) = clopper_pearson(t.failures, t.shots, 0.95);
        let (mean_iterations, iter_stderr) = mean_stderr(t.shots, t.iterations as f64, t.iterations_sq as f64);
        BenchStats {
            shots: t.shots,
            failures: t.failures,
            logical_error_rate: if t.shots == 0 { 0.0 } else { t.failures as f64 / t.shots as f64 },
            ci_low,
            ci_high,
            mean_iterations,
            iter_stderr,
            mean_legs: if t.shots == 0 { 0.0 } else { t.legs as f64 / t.shots as f64 },
        }
    }

    /// Error rate and interval doubled (capped at 1), for reporting one sector
    /// of a CSS code as an estimate of both.
    pub fn doubled(&self) -> Self {
        BenchStats {
            logical_error_rate: (2.0 * self.logical_error_rate).min(1.0),
            ci_low: (2.0 * self.ci_low).min(1.0),
            ci_high: (2.0 * self.ci_high).min(1.0),
            ..*self
        }
    }

    /// Whether the two confidence intervals are disjoint.
    pub fn separated_from(&self, other: &BenchStats) -> bool {
        self.ci_high < other.ci_low || other.ci_high < self.ci_low
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

fn beta_quantile(q: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if statrs::function::beta::beta_reg(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided binomial interval for `failures` out of `shots`.
pub fn clopper_pearson(failures: u64, shots: u64, confidence: f64) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 1.0);
    }
    let (x, n) = (failures as f64, shots as f64);
    let tail = (1.0 - confidence) / 2.0;
    let low = match failures {
        0 => 0.0,
        f if f == shots => tail.powf(1.0 / n),
        _ => beta_quantile(tail, x, n - x + 1.0),
    };
    let high = match failures {
        f if f == shots => 1.0,
        0 => 1.0 - tail.powf(1.0 / n),
        _ => beta_quantile(1.0 - tail, x + 1.0, n - x),
    };
    (low, high)
}

fn decode_and_check<D: ShotDecoder>(
    problem: &DecodingProblem,
    decoder: &D,
    ws: &mut D::Workspace,
    error: &BitVector,
    syndrome: &BitVector,
) -> Result<(bool, ShotOutcome)> {
    let out = decoder.decode_shot(syndrome, ws)?;
    let failed = !out.success || logical_failure(problem, error, &out.correction)?;
    Ok((failed, out))
}

fn over_chunks<T, F>(shots: u64, workers: usize, per_chunk: F, merge: fn(T, T) -> T) -> Result<T>
where
    T: Default + Send,
    F: Fn(Range<u64>) -> Result<T> + Sync,
{
    let chunks = shots.div_ceil(CHUNK);
    let range = |c: u64| c * CHUNK..((c + 1) * CHUNK).min(shots);
    if workers == 1 {
        let mut acc = T::default();
        for c in 0..chunks {
            acc = merge(acc, per_chunk(range(c))?);
        }
        return Ok(acc);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| per_chunk(range(c)))
            .try_reduce(T::default, |a, b| Ok(merge(a, b)))
    })
}

/// Samples `config.shots` errors, decodes each syndrome and counts logical
/// failures. Unconverged decodes count as failures.
pub fn run_monte_carlo<D: ShotDecoder>(problem: &DecodingProblem, decoder: &D, config: RunConfig) -> Result<BenchStats> {
    if config.shots == 0 {
        return Err(Error::InvalidParameter("at least one shot is required".into()));
    }
    let h = problem.check_matrix();
    let tally = over_chunks(
        config.shots,
        config.workers,
        |shots| {
            let mut ws = decoder.workspace();
            let mut t = Tally::default();
            for shot in shots {
                let e = sample_error(problem, &mut shot_rng(config.seed, shot));
                let s = h.matvec(&e)?;
                let (failed, out) = decode_and_check(problem, decoder, &mut ws, &e, &s)?;
                t.record(failed, &out);
            }
            Ok(t)
        },
        Tally::merge,
    )?;
    Ok(BenchStats::from_tally(&tally))
}

/// Two decoders on an identical shot stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedStats {
    pub first: BenchStats,
    pub second: BenchStats,
    /// Mean of `iterations(first) − iterations(second)` per shot.
    pub mean_iteration_difference: f64,
    pub iteration_difference_stderr: f64,
}

impl PairedStats {
    /// Whether the first decoder needs fewer iterations on average, at the
    /// given two-sided normal quantile (1.96 for 95%).
    pub fn first_uses_fewer_iterations(&self, z: f64) -> bool {
        self.mean_iteration_difference + z * self.iteration_difference_stderr < 0.0
    }
}

pub fn run_paired<A: ShotDecoder, B: ShotDecoder>(
    problem: &DecodingProblem,
    first: &A,
    second: &B,
    config: RunConfig,
) -> Result<PairedStats> {
    if config.shots == 0 {
        return Err(Error::InvalidParameter("at least one shot is required".into()));
    }
    let h = problem.check_matrix();
    let tally = over_chunks(
        config.shots,
        config.workers,
        |shots| {
            let mut wa = first.workspace();
            let mut wb = second.workspace();
            let mut t = PairedTally::default();
            for shot in shots {
                let e = sample_error(problem, &mut shot_rng(config.seed, shot));
                let s = h.matvec(&e)?;
                let (fa, oa) = decode_and_check(problem, first, &mut wa, &e, &s)?;
                let (fb, ob) = decode_and_check(problem, second, &mut wb, &e, &s)?;
                t.a.record(fa, &oa);
                t.b.record(fb, &ob);
                let d = oa.iterations as i128 - ob.iterations as i128;
                t.diff += d;
                t.diff_sq += (d * d) as u128;
            }
            Ok(t)
        },
        PairedTally::merge,
    )?;
    let (mean_iteration_difference, iteration_difference_stderr) =
        mean_stderr(tally.a.shots, tally.diff as f64, tally.diff_sq as f64);
    Ok(PairedStats {
        first: BenchStats::from_tally(&tally.a),
        second: BenchStats::from_tally(&tally.b),
        mean_iteration_difference,
        iteration_difference_stderr,
    })
}

/// Relay mode (`first`) against independent legs (`second`) with otherwise
/// identical schedules, gamma draws and shots.
pub fn compare_ensembling(problem: &DecodingProblem, schedule: &RelaySchedule, config: RunConfig) -> Result<PairedStats> {
    let relay = RelayDecoder::new(problem, RelaySchedule { ensembling: Ensembling::Relay, ..schedule.clone() })?;
    let independent =
        RelayDecoder::new(problem, RelaySchedule { ensembling: Ensembling::Independent, ..schedule.clone() })?;
    run_paired(problem, &relay, &independent, config)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce5_e4b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of grid cell `index` in a sweep seeded with `seed`.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(index as u64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub gamma_center: f64,
    pub gamma_width: f64,
    pub negative_gammas: bool,
    /// Seed for both shots and memory strengths of this cell.
    pub seed: u64,
    pub stats: BenchStats,
}

/// Row-major grid: one row per center, one column per width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, center: usize, width: usize) -> &SweepCell {
        &self.cells[center * self.widths.len() + width]
    }
}

/// Runs `base` at every `(center, width)` pair. Each cell gets its own seed
/// derived from `config.seed`.
pub fn sweep_memory_strengths(
    problem: &DecodingProblem,
    base: &RelaySchedule,
    centers: &[f64],
    widths: &[f64],
    config: RunConfig,
) -> Result<SweepGrid> {
    if centers.is_empty() || widths.is_empty() {
        return Err(Error::InvalidParameter("sweep grid must be non-empty".into()));
    }
    let mut cells = Vec::with_capacity(centers.len() * widths.len());
    for &gamma_center in centers {
        for &gamma_width in widths {
            let seed = cell_seed(config.seed, cells.len());
            let schedule = RelaySchedule { gamma_center, gamma_width, rng_seed: seed, ..base.clone() };
            let decoder = RelayDecoder::new(problem, schedule.clone())?;
            let stats = run_monte_carlo(problem, &decoder, RunConfig { seed, ..config })?;
            cells.push(SweepCell {
                gamma_center,
                gamma_width,
                negative_gammas: schedule.has_negative_gammas(),
                seed,
                stats,
            });
        }
    }
    Ok(SweepGrid { centers: centers.to_vec(), widths: widths.to_vec(), cells })
}

/// Version of the CSV and JSON record layout.
pub const RECORD_VERSION: u32 = 1;

/// One output row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub problem: String,
    pub mode: Ensembling,
    #[serde(rename = "S")]
    pub solutions_sought: usize,
    #[serde(rename = "R")]
    pub max_legs: usize,
    #[serde(rename = "T0")]
    pub first_leg_iterations: usize,
    #[serde(rename = "T")]
    pub leg_iterations: usize,
    pub gamma0: f64,
    pub gamma_center: f64,
    pub gamma_width: f64,
    pub negative_gammas: bool,
    pub p_scale: f64,
    pub shots: u64,
    pub failures: u64,
    pub ler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_iterations: f64,
    pub iter_stderr: f64,
    pub mean_legs: f64,
    pub seed: u64,
    /// Whether `ler` and its interval were doubled for reporting.
    pub doubled: bool,
}

impl BenchRecord {
    pub fn new(
        problem: &str,
        schedule: &RelaySchedule,
        p_scale: f64,
        seed: u64,
        stats: &BenchStats,
        doubled: bool,
    ) -> Self {
        let s = if doubled { stats.doubled() } else { *stats };
        BenchRecord {
            problem: problem.to_string(),
            mode: schedule.ensembling,
            solutions_sought: schedule.solutions_sought,
            max_legs: schedule.max_legs,
            first_leg_iterations: schedule.first_leg_iterations,
            leg_iterations: schedule.leg_iterations,
            gamma0: schedule.first_leg_gamma,
            gamma_center: schedule.gamma_center,
            gamma_width: schedule.gamma_width,
            negative_gammas: schedule.has_negative_gammas(),
            p_scale,
            shots: s.shots,
            failures: s.failures,
            ler: s.logical_error_rate,
            ci_low: s.ci_low,
            ci_high: s.ci_high,
            mean_iterations: s.mean_iterations,
            iter_stderr: s.iter_stderr,
            mean_legs: s.mean_legs,
            seed,
            doubled,
        }
    }
}

/// Writes records as CSV with a header row.
pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Writes records as a JSON array.
pub fn write_json<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, records)
        .map_err(|e| Error::InvalidParameter(format!("cannot serialise records: {e}")))
}

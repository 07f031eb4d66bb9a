//! Run manifests: everything needed to regenerate a bench, sweep or compare
//! output bit for bit.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qldpc_relay::bench::{
    compare_ensembling, run_monte_carlo, sweep_memory_strengths, BenchRecord, BenchStats, RunConfig,
};
use qldpc_relay::problem::{load_problem, write_problem};
use qldpc_relay::{DecodingProblem, Ensembling, RelayDecoder, RelaySchedule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemIdentity {
    pub path: PathBuf,
    pub name: String,
    /// SHA-256 of the problem in canonical interchange form, before scaling.
    pub sha256: String,
    pub checks: usize,
    pub errors: usize,
}

impl ProblemIdentity {
    pub fn new(path: &Path, problem: &DecodingProblem) -> Result<Self> {
        Ok(ProblemIdentity {
            path: path.to_path_buf(),
            name: problem.name().to_string(),
            sha256: problem_hash(problem)?,
            checks: problem.num_checks(),
            errors: problem.num_errors(),
        })
    }
}

pub fn problem_hash(problem: &DecodingProblem) -> Result<String> {
    let mut bytes = Vec::new();
    write_problem(problem, &mut bytes)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CompareMode {
    Relay,
    Independent,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Job {
    Bench {
        /// One row per value; empty means a single row at `schedule.max_legs`.
        vary_r: Vec<usize>,
    },
    Sweep {
        centers: Vec<f64>,
        widths: Vec<f64>,
    },
    Compare {
        mode: CompareMode,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub record_version: u32,
    pub problem: ProblemIdentity,
    pub p_scale: f64,
    pub schedule: RelaySchedule,
    pub shots: u64,
    pub seed: u64,
    /// Recorded for reference; results do not depend on it.
    pub workers: usize,
    pub double_css: bool,
    pub job: Job,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("malformed manifest {}", path.display()))?;
        if m.manifest_version != MANIFEST_VERSION {
            bail!("manifest version {} is not supported", m.manifest_version);
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("cannot write manifest {}", path.display()))
    }

    /// Loads the referenced problem and checks it against the recorded hash.
    pub fn load_problem(&self) -> Result<DecodingProblem> {
        let problem = load_problem(&self.problem.path)?;
        let hash = problem_hash(&problem)?;
        if hash != self.problem.sha256 {
            bail!(
                "problem {} has hash {hash}, manifest records {}",
                self.problem.path.display(),
                self.problem.sha256
            );
        }
        Ok(problem)
    }

    /// Runs the job on `problem` (unscaled) and returns its output rows.
    pub fn run(&self, problem: &DecodingProblem) -> Result<Vec<BenchRecord>> {
        let scaled = problem.scaled(self.p_scale)?;
        let config = RunConfig { shots: self.shots, seed: self.seed, workers: self.workers };
        let name = problem.name();
        let record = |schedule: &RelaySchedule, stats: &BenchStats, seed: u64| {
            BenchRecord::new(name, schedule, self.p_scale, seed, stats, self.double_css)
        };
        let mut rows = Vec::new();
        match &self.job {
            Job::Bench { vary_r } => {
                let legs = if vary_r.is_empty() { vec![self.schedule.max_legs] } else { vary_r.clone() };
                for r in legs {
                    let schedule = RelaySchedule { max_legs: r, ..self.schedule.clone() };
                    let decoder = RelayDecoder::new(&scaled, schedule.clone())?;
                    let stats = run_monte_carlo(&scaled, &decoder, config)?;
                    rows.push(record(&schedule, &stats, self.seed));
                }
            }
            Job::Sweep { centers, widths } => {
                let grid = sweep_memory_strengths(&scaled, &self.schedule, centers, widths, config)?;
                for cell in &grid.cells {
                    let schedule = RelaySchedule {
                        gamma_center: cell.gamma_center,
                        gamma_width: cell.gamma_width,
                        rng_seed: cell.seed,
                        ..self.schedule.clone()
                    };
                    rows.push(record(&schedule, &cell.stats, cell.seed));
                }
            }
            Job::Compare { mode: CompareMode::Both } => {
                let paired = compare_ensembling(&scaled, &self.schedule, config)?;
                let relay = RelaySchedule { ensembling: Ensembling::Relay, ..self.schedule.clone() };
                let independent = RelaySchedule { ensembling: Ensembling::Independent, ..self.schedule.clone() };
                rows.push(record(&relay, &paired.first, self.seed));
                rows.push(record(&independent, &paired.second, self.seed));
            }
            Job::Compare { mode } => {
                let ensembling = if *mode == CompareMode::Relay { Ensembling::Relay } else { Ensembling::Independent };
                let schedule = RelaySchedule { ensembling, ..self.schedule.clone() };
                let decoder = RelayDecoder::new(&scaled, schedule.clone())?;
                let stats = run_monte_carlo(&scaled, &decoder, config)?;
                rows.push(record(&schedule, &stats, self.seed));
            }
        }
        Ok(rows)
    }
}

//! Relay-BP-S: sequential DMem-BP legs chained through their marginals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bp::{BeliefState, MinSumBp, DEFAULT_SATURATION};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::problem::DecodingProblem;

/// Where legs after the first take their initial marginals from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensembling {
    /// Each leg starts from the previous leg's final marginals.
    Relay,
    /// Each leg restarts from the priors.
    Independent,
}

impl std::fmt::Display for Ensembling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ensembling::Relay => "relay",
            Ensembling::Independent => "independent",
        })
    }
}

impl std::str::FromStr for Ensembling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relay" => Ok(Ensembling::Relay),
            "independent" => Ok(Ensembling::Independent),
            other => Err(Error::InvalidParameter(format!("unknown ensembling mode `{other}`"))),
        }
    }
}

/// Published parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `[[144,12,12]]` gross code: γ₀ = 0.125, legs drawn from [−0.24, 0.66].
    Gross,
    /// `[[288,12,18]]` two-gross code: γ₀ = 0.125, legs drawn from [−0.161, 0.815].
    TwoGross,
    /// Rotated surface code: γ₀ = 0.35, legs drawn from [−0.25, 0.85].
    Surface,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gross" => Ok(Preset::Gross),
            "two-gross" | "two_gross" => Ok(Preset::TwoGross),
            "surface" => Ok(Preset::Surface),
            other => Err(Error::InvalidParameter(format!("unknown preset `{other}`"))),
        }
    }
}

/// Complete Relay-BP-S configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaySchedule {
    /// `S`: stop once this many legs have converged.
    pub solutions_sought: usize,
    /// `R`: maximum number of legs, including the first.
    pub max_legs: usize,
    /// `T_0`: iteration cap of the first leg.
    pub first_leg_iterations: usize,
    /// `T_r` for every later leg.
    pub leg_iterations: usize,
    /// Uniform memory strength of the first leg.
    pub first_leg_gamma: f64,
    pub gamma_center: f64,
    pub gamma_width: f64,
    pub rng_seed: u64,
    pub ensembling: Ensembling,
    /// Saturation bound `C` for all messages.
    pub saturation: f64,
}

impl Default for RelaySchedule {
    fn default() -> Self {
        RelaySchedule::preset(Preset::Gross)
    }
}

fn interval(lo: f64, hi: f64) -> (f64, f64) {
    ((lo + hi) / 2.0, hi - lo)
}

impl RelaySchedule {
    /// Relay-BP-1 with `R = 301`, `T_0 = 80`, `T = 60`.
    pub fn preset(preset: Preset) -> Self {
        let (first_leg_gamma, (gamma_center, gamma_width)) = match preset {
            Preset::Gross => (0.125, interval(-0.24, 0.66)),
            Preset::TwoGross => (0.125, interval(-0.161, 0.815)),
            Preset::Surface => (0.35, interval(-0.25, 0.85)),
        };
        RelaySchedule {
            solutions_sought: 1,
            max_legs: 301,
            first_leg_iterations: 80,
            leg_iterations: 60,
            first_leg_gamma,
            gamma_center,
            gamma_width,
            rng_seed: 0,
            ensembling: Ensembling::Relay,
            saturation: DEFAULT_SATURATION,
        }
    }

    /// Relay-BP-5 with `R = 601`.
    pub fn preset_five(preset: Preset) -> Self {
        RelaySchedule { solutions_sought: 5, max_legs: 601, ..Self::preset(preset) }
    }

    /// Plain min-sum BP: a single leg, no memory.
    pub fn standard_bp(max_iterations: usize) -> Self {
        Self::mem_bp(0.0, max_iterations)
    }

    /// Mem-BP: a single leg with uniform memory strength `gamma`.
    pub fn mem_bp(gamma: f64, max_iterations: usize) -> Self {
        RelaySchedule {
            solutions_sought: 1,
            max_legs: 1,
            first_leg_iterations: max_iterations,
            leg_iterations: max_iterations,
            first_leg_gamma: gamma,
            gamma_center: gamma,
            gamma_width: 0.0,
            rng_seed: 0,
            ensembling: Ensembling::Relay,
            saturation: DEFAULT_SATURATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.solutions_sought == 0 {
            return bad("solutions sought must be at least 1");
        }
        if self.max_legs == 0 {
            return bad("maximum legs must be at least 1");
        }
        if self.solutions_sought > self.max_legs {
            return bad("solutions sought cannot exceed maximum legs");
        }
        if !self.first_leg_gamma.is_finite() || !self.gamma_center.is_finite() {
            return bad("memory strengths must be finite");
        }
        if !(self.gamma_width.is_finite() && self.gamma_width >= 0.0) {
            return bad("memory strength interval width must be finite and non-negative");
        }
        if !(self.saturation.is_finite() && self.saturation > 0.0) {
            return bad("saturation bound must be positive");
        }
        Ok(())
    }

    /// Iteration cap of leg `r`.
    pub fn iteration_cap(&self, leg: usize) -> usize {
        if leg == 0 {
            self.first_leg_iterations
        } else {
            self.leg_iterations
        }
    }

    /// Closed interval from which later legs draw their memory strengths.
    pub fn gamma_interval(&self) -> (f64, f64) {
        let half = self.gamma_width / 2.0;
        (self.gamma_center - half, self.gamma_center + half)
    }

    /// Whether later legs can draw negative memory strengths.
    pub fn has_negative_gammas(&self) -> bool {
        self.gamma_interval().0 < 0.0
    }

    /// Total iteration budget over all legs.
    pub fn iteration_budget(&self) -> usize {
        self.first_leg_iterations + (self.max_legs - 1) * self.leg_iterations
    }
}

/// Memory strengths of leg `leg ≥ 1`, written into `out`.
///
/// Leg `r` uses ChaCha8 stream `r` of `schedule.rng_seed`, so any leg can be
/// regenerated on its own.
pub fn fill_gammas(schedule: &RelaySchedule, leg: usize, out: &mut [f64]) {
    let (lo, _) = schedule.gamma_interval();
    let width = schedule.gamma_width;
    if width == 0.0 {
        out.fill(schedule.gamma_center);
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.rng_seed);
    rng.set_stream(leg as u64);
    for g in out.iter_mut() {
        *g = lo + width * rng.random::<f64>();
    }
}

/// Memory strengths of leg `leg ≥ 1` for `n` error mechanisms.
pub fn sample_gammas(schedule: &RelaySchedule, leg: usize, n: usize) -> crate::bp::GammaVector {
    assert!(leg >= 1, "leg 0 uses the uniform first-leg memory strength");
    let mut out = vec![0.0; n];
    fill_gammas(schedule, leg, &mut out);
    crate::bp::GammaVector::from_vec(out).expect("finite interval gives finite samples")
}

/// `w(ê) = Σ_j ê_j λ_j`.
pub fn weight(correction: &BitVector, priors: &[f64]) -> Result<f64> {
    if correction.len() != priors.len() {
        return Err(Error::dimension("correction length", priors.len(), correction.len()));
    }
    Ok(correction.support().iter().map(|&j| priors[j]).fold(0.0, |acc, w| acc + w))
}

/// A converged leg.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub correction: BitVector,
    pub weight: f64,
    pub found_on_leg: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub success: bool,
    /// Lowest-weight solution, or the final hard decision when no leg converged.
    pub correction: BitVector,
    /// Weight of `correction`.
    pub weight: f64,
    pub solutions_found: usize,
    pub total_iterations: usize,
    pub legs_used: usize,
    pub solutions: Vec<Solution>,
}

impl DecodeResult {
    pub fn best(&self) -> Option<&Solution> {
        self.solutions
            .iter()
            .fold(None, |best: Option<&Solution>, s| match best {
                Some(b) if b.weight <= s.weight => Some(b),
                _ => Some(s),
            })
    }
}

/// Buffers reused across decodes.
#[derive(Clone, Debug)]
pub struct RelayWorkspace {
    state: BeliefState,
    gammas: Vec<f64>,
}

impl RelayWorkspace {
    /// Belief state as left by the last leg of the last decode.
    pub fn state(&self) -> &BeliefState {
        &self.state
    }
}

/// Relay-BP-S decoder bound to one problem.
#[derive(Clone, Debug)]
pub struct RelayDecoder {
    bp: MinSumBp,
    priors: Vec<f64>,
    schedule: RelaySchedule,
}

impl RelayDecoder {
    pub fn new(problem: &DecodingProblem, schedule: RelaySchedule) -> Result<Self> {
        schedule.validate()?;
        Ok(RelayDecoder {
            bp: MinSumBp::with_saturation(problem, schedule.saturation),
            priors: problem.priors().to_vec(),
            schedule,
        })
    }

    pub fn schedule(&self) -> &RelaySchedule {
        &self.schedule
    }

    pub fn kernel(&self) -> &MinSumBp {
        &self.bp
    }

    pub fn workspace(&self) -> RelayWorkspace {
        RelayWorkspace { state: self.bp.new_state(), gammas: vec![0.0; self.priors.len()] }
    }

    pub fn decode(&self, syndrome: &BitVector) -> Result<DecodeResult> {
        self.decode_with(syndrome, &mut self.workspace())
    }

    pub fn decode_with(&self, syndrome: &BitVector, ws: &mut RelayWorkspace) -> Result<DecodeResult> {
        let sched = &self.schedule;
        self.bp.init_leg(&mut ws.state, syndrome, self.bp.priors())?;
        let mut solutions: Vec<Solution> = Vec::new();
        let mut best: Option<usize> = None;
        let mut total_iterations = 0;
        let mut legs_used = 0;
        for leg in 0..sched.max_legs {
            if leg == 0 {
                ws.gammas.fill(sched.first_leg_gamma);
            } else {
                self.bp.restart_leg(&mut ws.state, sched.ensembling == Ensembling::Relay);
                fill_gammas(sched, leg, &mut ws.gammas);
            }
            let (converged, used) = self.bp.run(&mut ws.state, &ws.gammas, sched.iteration_cap(leg));
            total_iterations += used;
            legs_used = leg + 1;
            if converged {
                let correction = ws.state.correction();
                let w = weight(&correction, &self.priors)?;
                if best.is_none_or(|b: usize| w < solutions[b].weight) {
                    best = Some(solutions.len());
                }
                solutions.push(Solution { correction, weight: w, found_on_leg: leg });
                if solutions.len() == sched.solutions_sought {
                    break;
                }
            }
        }
        let (correction, w) = match best {
            Some(b) => (solutions[b].correction.clone(), solutions[b].weight),
            None => {
                let c = ws.state.correction();
                let w = weight(&c, &self.priors)?;
                (c, w)
            }
        };
        Ok(DecodeResult {
            success: best.is_some(),
            correction,
            weight: w,
            solutions_found: solutions.len(),
            total_iterations,
            legs_used,
            solutions,
        })
    }
}

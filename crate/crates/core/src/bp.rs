//! One leg of disordered-memory min-sum BP.
//!
//! Messages live on the edges of the Tanner graph of `H`: `mu` carries
//! check-to-error messages and `nu` error-to-check messages, both indexed by
//! edge id (edges are numbered row-major through `H`). An iteration runs, in
//! order: the bias update `Λ_j(t) = (1 − γ_j) Λ_j(0) + γ_j M_j(t − 1)`, all
//! check-to-error messages from the previous `nu`, all error-to-check
//! messages, the marginals `M_j(t)` and the hard decision, then the
//! convergence test `H ê(t) = σ`. Every phase reads only values produced by
//! the previous phase (flooding schedule).
//!
//! Conventions:
//! - `sgn(0) = +1`, so a zero marginal decides "no error" and a zero
//!   incoming message counts as positive in the sign product.
//! - A check of degree one sends the saturation bound: the minimum over an
//!   empty set is taken to be `C`.
//! - Every stored message, bias and marginal is clamped to `[−C, C]`.
//!
//! With `γ = 0` and initial marginals equal to the priors this is textbook
//! min-sum; a constant `γ ∈ (0, 1)` gives Mem-BP.

use crate::error::{Error, Result};
use crate::gf2::{BitVector, SparseBinaryMatrix};
use crate::problem::DecodingProblem;

/// Default saturation bound `C` for messages, biases and marginals.
pub const DEFAULT_SATURATION: f64 = 1024.0;

/// Edge-indexed adjacency of a check matrix.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    num_checks: usize,
    num_errors: usize,
    check_ptr: Vec<usize>,
    edge_error: Vec<u32>,
    error_ptr: Vec<usize>,
    error_edges: Vec<u32>,
    error_checks: Vec<u32>,
}

impl TannerGraph {
    pub fn new(h: &SparseBinaryMatrix) -> Self {
        let mut check_ptr = Vec::with_capacity(h.rows() + 1);
        let mut edge_error = Vec::with_capacity(h.nnz());
        check_ptr.push(0);
        for r in 0..h.rows() {
            edge_error.extend(h.row(r).iter().map(|&c| c as u32));
            check_ptr.push(edge_error.len());
        }
        let mut error_ptr = Vec::with_capacity(h.cols() + 1);
        error_ptr.push(0);
        for c in 0..h.cols() {
            error_ptr.push(error_ptr.last().unwrap() + h.col(c).len());
        }
        let mut fill = error_ptr[..h.cols()].to_vec();
        let mut error_edges = vec![0u32; edge_error.len()];
        let mut error_checks = vec![0u32; edge_error.len()];
        // Walking rows in order keeps each error's edges sorted by check.
        for r in 0..h.rows() {
            for e in check_ptr[r]..check_ptr[r + 1] {
                let j = edge_error[e] as usize;
                error_edges[fill[j]] = e as u32;
                error_checks[fill[j]] = r as u32;
                fill[j] += 1;
            }
        }
        TannerGraph {
            num_checks: h.rows(),
            num_errors: h.cols(),
            check_ptr,
            edge_error,
            error_ptr,
            error_edges,
            error_checks,
        }
    }

    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    pub fn num_errors(&self) -> usize {
        self.num_errors
    }

    pub fn num_edges(&self) -> usize {
        self.edge_error.len()
    }

    /// Edge ids of check `i`, in increasing error order.
    pub fn check_edges(&self, i: usize) -> std::ops::Range<usize> {
        self.check_ptr[i]..self.check_ptr[i + 1]
    }

    /// Error endpoint of edge `e`.
    pub fn edge_error(&self, e: usize) -> usize {
        self.edge_error[e] as usize
    }

    /// Edge ids of error `j`, in increasing check order.
    pub fn error_edges(&self, j: usize) -> &[u32] {
        &self.error_edges[self.error_ptr[j]..self.error_ptr[j + 1]]
    }

    /// Checks adjacent to error `j`, in increasing order.
    pub fn error_checks(&self, j: usize) -> &[u32] {
        &self.error_checks[self.error_ptr[j]..self.error_ptr[j + 1]]
    }
}

/// Per-error memory strengths `γ_j`. Any finite value is allowed, including
/// negative ones.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaVector(Vec<f64>);

impl GammaVector {
    pub fn uniform(n: usize, gamma: f64) -> Self {
        GammaVector(vec![gamma; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter(format!("memory strength {j} is not finite")));
        }
        Ok(GammaVector(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for GammaVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Mutable state of one leg.
#[derive(Clone, Debug)]
pub struct BeliefState {
    mu: Vec<f64>,
    nu: Vec<f64>,
    lambda0: Vec<f64>,
    lambda: Vec<f64>,
    marginal: Vec<f64>,
    hard_decision: Vec<u8>,
    syndrome: Vec<u8>,
    iteration: usize,
    parity: Vec<u8>,
    snapshot_nu: Vec<f64>,
    snapshot_marginal: Vec<f64>,
}

impl BeliefState {
    fn new(graph: &TannerGraph) -> Self {
        BeliefState {
            mu: vec![0.0; graph.num_edges()],
            nu: vec![0.0; graph.num_edges()],
            lambda0: vec![0.0; graph.num_errors()],
            lambda: vec![0.0; graph.num_errors()],
            marginal: vec![0.0; graph.num_errors()],
            hard_decision: vec![0; graph.num_errors()],
            syndrome: vec![0; graph.num_checks()],
            iteration: 0,
            parity: vec![0; graph.num_checks()],
            snapshot_nu: Vec::new(),
            snapshot_marginal: Vec::new(),
        }
    }

    /// Check-to-error messages, by edge.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Error-to-check messages, by edge.
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn lambda0(&self) -> &[f64] {
        &self.lambda0
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn hard_decision(&self) -> &[u8] {
        &self.hard_decision
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn correction(&self) -> BitVector {
        BitVector::from_bits(&self.hard_decision)
    }
}

/// Result of a complete leg.
#[derive(Clone, Debug, PartialEq)]
pub struct LegOutcome {
    pub converged: bool,
    pub correction: BitVector,
    pub iterations_used: usize,
    pub final_marginals: Vec<f64>,
}

#[inline]
fn clamp(x: f64, bound: f64) -> f64 {
    x.clamp(-bound, bound)
}

/// Min-sum kernel bound to one check matrix and prior vector.
#[derive(Clone, Debug)]
pub struct MinSumBp {
    graph: TannerGraph,
    priors: Vec<f64>,
    saturation: f64,
}

impl MinSumBp {
    pub fn new(problem: &DecodingProblem) -> Self {
        Self::with_saturation(problem, DEFAULT_SATURATION)
    }

    pub fn with_saturation(problem: &DecodingProblem, saturation: f64) -> Self {
        Self::from_parts(problem.check_matrix(), &problem.priors(), saturation)
    }

    /// Kernel for matrix `h` and log-likelihood priors `priors`.
    pub fn from_parts(h: &SparseBinaryMatrix, priors: &[f64], saturation: f64) -> Self {
        assert_eq!(h.cols(), priors.len(), "one prior per column");
        assert!(saturation > 0.0, "saturation bound must be positive");
        MinSumBp {
            graph: TannerGraph::new(h),
            priors: priors.iter().map(|&l| clamp(l, saturation)).collect(),
            saturation,
        }
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    /// Clamped log-likelihood priors `λ_j`.
    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn saturation(&self) -> f64 {
        self.saturation
    }

    pub fn new_state(&self) -> BeliefState {
        BeliefState::new(&self.graph)
    }

    /// Loads a syndrome and starts a leg from `initial_marginals`:
    /// `ν_{j→i}(0) = Λ_j(0) = λ_j`, `M_j(0) = initial_marginals[j]`, `t = 0`.
    pub fn init_leg(&self, state: &mut BeliefState, syndrome: &BitVector, initial_marginals: &[f64]) -> Result<()> {
        if syndrome.len() != self.graph.num_checks {
            return Err(Error::dimension("syndrome length", self.graph.num_checks, syndrome.len()));
        }
        if initial_marginals.len() != self.graph.num_errors {
            return Err(Error::dimension("initial marginals length", self.graph.num_errors, initial_marginals.len()));
        }
        state.syndrome.fill(0);
        for &i in syndrome.support() {
            state.syndrome[i] = 1;
        }
        for (m, &x) in state.marginal.iter_mut().zip(initial_marginals) {
            *m = clamp(x, self.saturation);
        }
        self.reset_messages(state);
        Ok(())
    }

    /// Starts the next leg on the already loaded syndrome. The current
    /// marginals become `M(0)` when `carry_marginals` is set; otherwise the
    /// leg restarts from the priors.
    pub fn restart_leg(&self, state: &mut BeliefState, carry_marginals: bool) {
        if !carry_marginals {
            state.marginal.copy_from_slice(&self.priors);
        }
        self.reset_messages(state);
    }

    fn reset_messages(&self, state: &mut BeliefState) {
        for (e, nu) in state.nu.iter_mut().enumerate() {
            *nu = self.priors[self.graph.edge_error[e] as usize];
        }
        state.lambda0.copy_from_slice(&self.priors);
        state.lambda.copy_from_slice(&self.priors);
        for (hd, &m) in state.hard_decision.iter_mut().zip(&state.marginal) {
            *hd = (m < 0.0) as u8;
        }
        state.iteration = 0;
    }

    /// `Λ_j(t) = (1 − γ_j) Λ_j(0) + γ_j M_j(t − 1)`.
    pub fn update_bias(&self, state: &mut BeliefState, gamma: &[f64]) {
        debug_assert_eq!(gamma.len(), self.graph.num_errors);
        let c = self.saturation;
        for (((l, &l0), &m), &g) in state.lambda.iter_mut().zip(&state.lambda0).zip(&state.marginal).zip(gamma) {
            *l = clamp((1.0 - g) * l0 + g * m, c);
        }
    }

    /// `μ_{i→j}(t) = κ_{i,j} (−1)^{σ_i} min_{j' ≠ j} |ν_{j'→i}(t − 1)|`.
    pub fn check_to_error(&self, state: &mut BeliefState) {
        let c = self.saturation;
        let nu = &state.nu;
        let mu = &mut state.mu;
        for i in 0..self.graph.num_checks {
            let (start, end) = (self.graph.check_ptr[i], self.graph.check_ptr[i + 1]);
            let flip = state.syndrome[i] != 0;
            match end - start {
                0 => continue,
                1 => {
                    mu[start] = if flip { -c } else { c };
                    continue;
                }
                _ => {}
            }
            let mut min1 = f64::INFINITY;
            let mut min2 = f64::INFINITY;
            let mut argmin = start;
            let mut negative = flip;
            for (e, &v) in nu[start..end].iter().enumerate() {
                let a = v.abs();
                negative ^= v < 0.0;
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    argmin = start + e;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for e in start..end {
                let mag = if e == argmin { min2 } else { min1 }.min(c);
                mu[e] = if negative ^ (nu[e] < 0.0) { -mag } else { mag };
            }
        }
    }

    /// `ν_{j→i}(t) = Λ_j(t) + Σ_{i' ≠ i} μ_{i'→j}(t)`, summed in increasing
    /// check order.
    pub fn error_to_check(&self, state: &mut BeliefState) {
        let c = self.saturation;
        for j in 0..self.graph.num_errors {
            let edges = self.graph.error_edges(j);
            let base = state.lambda[j];
            for (k, &ek) in edges.iter().enumerate() {
                let mut s = base;
                for (p, &ep) in edges.iter().enumerate() {
                    if p != k {
                        s += state.mu[ep as usize];
                    }
                }
                state.nu[ek as usize] = clamp(s, c);
            }
        }
    }

    /// `M_j(t) = Λ_j(t) + Σ_i μ_{i→j}(t)` and `ê_j(t) = HD(M_j(t))`.
    pub fn compute_marginals(&self, state: &mut BeliefState) {
        let c = self.saturation;
        for j in 0..self.graph.num_errors {
            let mut s = state.lambda[j];
            for &e in self.graph.error_edges(j) {
                s += state.mu[e as usize];
            }
            let m = clamp(s, c);
            state.marginal[j] = m;
            state.hard_decision[j] = (m < 0.0) as u8;
        }
    }

    /// Whether the current hard decision reproduces the loaded syndrome.
    pub fn satisfies_syndrome(&self, state: &mut BeliefState) -> bool {
        state.parity.fill(0);
        for (j, &b) in state.hard_decision.iter().enumerate() {
            if b != 0 {
                for &i in self.graph.error_checks(j) {
                    state.parity[i as usize] ^= 1;
                }
            }
        }
        state.parity == state.syndrome
    }

    /// One full iteration followed by the convergence test.
    pub fn iterate(&self, state: &mut BeliefState, gamma: &[f64]) -> bool {
        state.iteration += 1;
        self.update_bias(state, gamma);
        self.check_to_error(state);
        self.error_to_check(state);
        self.compute_marginals(state);
        self.satisfies_syndrome(state)
    }

    /// Runs the current leg from its initial state for at most `max_iterations`
    /// iterations and returns `(converged, iterations_used)`. A zero budget
    /// leaves the hard decision of the initial marginals and reports no
    /// convergence.
    ///
    /// Within a leg, `(ν, M)` determines every later iteration. Once that pair
    /// repeats exactly (found with Brent's cycle search), the leg cannot
    /// converge, so the remaining full periods are skipped. The result is
    /// identical to running out the budget.
    pub fn run(&self, state: &mut BeliefState, gamma: &[f64], max_iterations: usize) -> (bool, usize) {
        let mut power = 1usize;
        let mut since = 0usize;
        let mut have_snapshot = false;
        for t in 1..=max_iterations {
            if self.iterate(state, gamma) {
                return (true, t);
            }
            if t == max_iterations {
                break;
            }
            if have_snapshot && state.nu == state.snapshot_nu && state.marginal == state.snapshot_marginal {
                for _ in 0..(max_iterations - t) % since {
                    let converged = self.iterate(state, gamma);
                    debug_assert!(!converged);
                }
                state.iteration = max_iterations;
                return (false, max_iterations);
            }
            if !have_snapshot || since == power {
                state.snapshot_nu.clone_from(&state.nu);
                state.snapshot_marginal.clone_from(&state.marginal);
                have_snapshot = true;
                power *= 2;
                since = 0;
            }
            since += 1;
        }
        (false, max_iterations)
    }

    /// [`run`](Self::run) without the cycle shortcut.
    pub fn run_plain(&self, state: &mut BeliefState, gamma: &[f64], max_iterations: usize) -> (bool, usize) {
        for t in 1..=max_iterations {
            if self.iterate(state, gamma) {
                return (true, t);
            }
        }
        (false, max_iterations)
    }

    /// Complete leg with a fresh state.
    pub fn run_leg(
        &self,
        syndrome: &BitVector,
        gamma: &[f64],
        initial_marginals: &[f64],
        max_iterations: usize,
    ) -> Result<LegOutcome> {
        if gamma.len() != self.graph.num_errors {
            return Err(Error::dimension("memory strength vector length", self.graph.num_errors, gamma.len()));
        }
        let mut state = self.new_state();
        self.init_leg(&mut state, syndrome, initial_marginals)?;
        let (converged, iterations_used) = self.run(&mut state, gamma, max_iterations);
        Ok(LegOutcome {
            converged,
            correction: state.correction(),
            iterations_used,
            final_marginals: state.marginal,
        })
    }
}

//! Exact reference decoding by exhaustive enumeration. Test use only.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::problem::DecodingProblem;

/// Largest number of error mechanisms [`brute_force_min_weight`] accepts.
pub const MAX_ORACLE_COLUMNS: usize = 24;

// Relative tolerance under which two weights count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// Most probable error consistent with the syndrome. Among ties, the
    /// lexicographically smallest string `e_0 e_1 …`.
    pub min_weight_correction: BitVector,
    pub min_weight: f64,
    /// `Pr(e_j = 1 | σ)`.
    pub bitwise_marginals: Vec<f64>,
    /// More than one correction attains the minimum weight.
    pub degenerate: bool,
    /// `Pr(σ)` under the prior.
    pub syndrome_probability: f64,
}

fn lex_less(a: u32, b: u32) -> bool {
    // Bit j of a mask is e_j; the first differing position decides.
    let diff = a ^ b;
    diff != 0 && (a >> diff.trailing_zeros()) & 1 == 0
}

fn exact_weight(mask: u32, priors: &[f64]) -> f64 {
    let mut w = 0.0;
    for (j, &l) in priors.iter().enumerate() {
        if mask >> j & 1 == 1 {
            w += l;
        }
    }
    w
}

/// Enumerates all `2^N` error vectors in Gray-code order.
pub fn brute_force_min_weight(problem: &DecodingProblem, syndrome: &BitVector) -> Result<OracleResult> {
    let n = problem.num_errors();
    if n > MAX_ORACLE_COLUMNS {
        return Err(Error::OracleCap { cols: n, cap: MAX_ORACLE_COLUMNS });
    }
    let h = problem.check_matrix();
    if syndrome.len() != h.rows() {
        return Err(Error::dimension("syndrome length", h.rows(), syndrome.len()));
    }
    let words = h.rows().div_ceil(64).max(1);
    let mut columns = vec![0u64; n * words];
    for j in 0..n {
        for &i in h.col(j) {
            columns[j * words + i / 64] |= 1 << (i % 64);
        }
    }
    let mut target = vec![0u64; words];
    for &i in syndrome.support() {
        target[i / 64] |= 1 << (i % 64);
    }
    let priors = problem.priors();

    // Pass 1: smallest accumulated weight. Pass 2 reuses the same sequence of
    // additions, so the accumulated values match bit for bit.
    let wmin_running = gray_walk(n, &columns, words, &target, &priors, |_, _| {});
    let Some(wmin_running) = wmin_running else {
        return Err(Error::InconsistentSyndrome);
    };

    let slack = 1e-6 * (1.0 + wmin_running.abs());
    let mut mass = 0.0;
    let mut bit_mass = vec![0.0; n];
    let mut best: Option<(u32, f64)> = None;
    let mut candidates = Vec::new();
    gray_walk(n, &columns, words, &target, &priors, |mask, w| {
        let m = (-(w - wmin_running)).exp();
        mass += m;
        let mut rest = mask;
        while rest != 0 {
            bit_mass[rest.trailing_zeros() as usize] += m;
            rest &= rest - 1;
        }
        if w <= wmin_running + slack {
            candidates.push(mask);
        }
    });
    for &mask in &candidates {
        let w = exact_weight(mask, &priors);
        best = match best {
            None => Some((mask, w)),
            Some((bm, bw)) => match w.partial_cmp(&bw).unwrap_or(Ordering::Equal) {
                Ordering::Less => Some((mask, w)),
                _ => Some((bm, bw)),
            },
        };
    }
    let (_, wmin) = best.expect("at least one candidate");
    let tol = TIE_TOLERANCE * (1.0 + wmin.abs());
    let ties: Vec<u32> = candidates
        .iter()
        .copied()
        .filter(|&mask| (exact_weight(mask, &priors) - wmin).abs() <= tol)
        .collect();
    let chosen = ties.iter().copied().fold(ties[0], |a, b| if lex_less(b, a) { b } else { a });
    let log_norm: f64 = problem.probabilities().iter().map(|&p| (-p).ln_1p()).sum();
    Ok(OracleResult {
        min_weight_correction: BitVector::from_support(n, (0..n).filter(|&j| chosen >> j & 1 == 1).collect())?,
        min_weight: exact_weight(chosen, &priors),
        bitwise_marginals: bit_mass.iter().map(|&b| (b / mass).clamp(0.0, 1.0)).collect(),
        degenerate: ties.len() > 1,
        syndrome_probability: (log_norm - wmin_running).exp() * mass,
    })
}

// Visits every mask matching the target with its running weight; returns the
// smallest running weight seen, if any mask matched.
fn gray_walk(
    n: usize,
    columns: &[u64],
    words: usize,
    target: &[u64],
    priors: &[f64],
    mut visit: impl FnMut(u32, f64),
) -> Option<f64> {
    let mut syn = vec![0u64; words];
    let mut mask = 0u32;
    let mut w = 0.0f64;
    let mut best: Option<f64> = None;
    let total: u64 = 1 << n;
    for step in 0..total {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            mask ^= 1 << j;
            if mask >> j & 1 == 1 {
                w += priors[j];
            } else {
                w -= priors[j];
            }
            for (s, c) in syn.iter_mut().zip(&columns[j * words..(j + 1) * words]) {
                *s ^= c;
            }
        }
        if syn == target {
            visit(mask, w);
            best = Some(best.map_or(w, |b: f64| b.min(w)));
        }
    }
    best
}

/// Whether `correction` fails on `true_error`: it either misses the syndrome
/// or differs from the true error by a nontrivial logical action.
pub fn logical_failure(problem: &DecodingProblem, true_error: &BitVector, correction: &BitVector) -> Result<bool> {
    let n = problem.num_errors();
    if true_error.len() != n {
        return Err(Error::dimension("true error length", n, true_error.len()));
    }
    if correction.len() != n {
        return Err(Error::dimension("correction length", n, correction.len()));
    }
    let residual = true_error.xor(correction)?;
    Ok(!problem.check_matrix().matvec(&residual)?.is_zero() || !problem.action_matrix().matvec(&residual)?.is_zero())
}

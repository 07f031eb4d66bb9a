//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{HashMap, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use qldpc_relay::bench::{
    compare_ensembling, read_csv, run_monte_carlo, run_paired, sweep_memory_strengths, write_csv, BenchRecord, BenchStats,
    RunConfig,
};
use qldpc_relay::bp::{MinSumBp, DEFAULT_SATURATION};
use qldpc_relay::oracle::brute_force_min_weight;
use qldpc_relay::problem::{
    build_bivariate_bicycle, build_repetition, build_surface_phenomenological, odd_parity_probability, BicycleParams,
};
use qldpc_relay::relay::{Preset, RelayDecoder, RelaySchedule};
use qldpc_relay::{BitVector, DecodingProblem, SparseBinaryMatrix};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const LARGE_SATURATION: f64 = (1u64 << 20) as f64;
const TREE_PROBLEMS: usize = 120;
const DESK_P: f64 = 0.03;
const DESK_SHOTS: u64 = 100_000;
const ENSEMBLING_SHOTS: u64 = 20_000;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bits_of(mask: u64, n: usize) -> BitVector {
    BitVector::from_support(n, (0..n).filter(|&j| mask >> j & 1 == 1).collect()).unwrap()
}

/// d = 5 rotated surface code, 5 noisy rounds plus a perfect one, X side.
fn desk_problem() -> DecodingProblem {
    build_surface_phenomenological(5, 6, DESK_P, DESK_P).unwrap().xz_split().unwrap().0.compress_columns().unwrap()
}

fn gf2_rank(rows: &[u64]) -> usize {
    let mut rows = rows.to_vec();
    let mut rank = 0;
    for bit in 0..64 {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] >> bit & 1 == 1) else { continue };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r] >> bit & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

struct Tree {
    problem: DecodingProblem,
    diameter: usize,
}

// Random bipartite tree with full-rank H, grown by attaching nodes to
// existing nodes of the other kind.
fn random_tree(rng: &mut ChaCha8Rng) -> Tree {
    loop {
        let n = rng.random_range(3..=13usize);
        let m = rng.random_range(1..=n.min(22 - n));
        // node ids: errors 0..n, checks n..n+m
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
        let link = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
            adj[a].push(b);
            adj[b].push(a);
        };
        link(0, n, &mut adj);
        let mut errors = vec![0];
        let mut checks = vec![n];
        let mut pending: Vec<usize> = (1..n).chain(n + 1..n + m).collect();
        for k in (1..pending.len()).rev() {
            pending.swap(k, rng.random_range(0..=k));
        }
        for node in pending {
            if node < n {
                let &c = checks.choose(rng).unwrap();
                link(node, c, &mut adj);
                errors.push(node);
            } else {
                let &e = errors.choose(rng).unwrap();
                link(node, e, &mut adj);
                checks.push(node);
            }
        }
        let rows: Vec<Vec<usize>> = (0..m)
            .map(|i| {
                let mut r = adj[n + i].clone();
                r.sort_unstable();
                r
            })
            .collect();
        let masks: Vec<u64> = rows.iter().map(|r| r.iter().fold(0u64, |acc, &j| acc | 1 << j)).collect();
        if gf2_rank(&masks) < m {
            continue;
        }
        let bfs = |start: usize| -> (usize, usize) {
            let mut dist = vec![usize::MAX; n + m];
            dist[start] = 0;
            let mut q = VecDeque::from([start]);
            let mut far = (start, 0);
            while let Some(u) = q.pop_front() {
                if dist[u] > far.1 {
                    far = (u, dist[u]);
                }
                for &v in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            far
        };
        let diameter = bfs(bfs(0).0).1;
        let h = SparseBinaryMatrix::from_rows(n, &rows).unwrap();
        let a = SparseBinaryMatrix::from_rows(n, &[vec![0]]).unwrap();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.3)).collect();
        let problem = DecodingProblem::new("tree", h, a, p).unwrap();
        return Tree { problem, diameter };
    }
}

fn trees() -> Vec<Tree> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7ee5);
    (0..TREE_PROBLEMS).map(|_| random_tree(&mut rng)).collect()
}

// Returns (syndromes checked, degenerate syndromes where BP differed).
fn tree_exactness(trees: &[Tree], saturation: f64) -> Result<(usize, usize), String> {
    let mut checked = 0;
    let mut excused = 0;
    for (k, tree) in trees.iter().enumerate() {
        let prob = &tree.problem;
        let bp = MinSumBp::from_parts(prob.check_matrix(), &prob.priors(), saturation);
        let gamma = vec![0.0; prob.num_errors()];
        let mut state = bp.new_state();
        for mask in 0..1u64 << prob.num_checks() {
            let s = bits_of(mask, prob.num_checks());
            let oracle = brute_force_min_weight(prob, &s).map_err(|e| format!("tree {k}: {e}"))?;
            bp.init_leg(&mut state, &s, bp.priors()).unwrap();
            for _ in 0..tree.diameter {
                bp.iterate(&mut state, &gamma);
            }
            checked += 1;
            if state.correction() != oracle.min_weight_correction {
                ensure(oracle.degenerate, || {
                    format!(
                        "tree {k} (N={}, M={}), syndrome {s}: BP {} vs oracle {}",
                        prob.num_errors(),
                        prob.num_checks(),
                        state.correction(),
                        oracle.min_weight_correction
                    )
                })?;
                excused += 1;
            }
        }
    }
    Ok((checked, excused))
}

fn criterion_1() -> Outcome {
    let trees = trees();
    let (checked, excused) = tree_exactness(&trees, DEFAULT_SATURATION)?;
    Ok(format!("{} trees, {checked} syndromes, {excused} differing only on degenerate ties", trees.len()))
}

// Textbook flooding min-sum on dense per-(check, error) message tables.
struct Textbook {
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    lambda: Vec<f64>,
    syndrome: Vec<bool>,
    c: f64,
    mu: HashMap<(usize, usize), f64>,
    nu: HashMap<(usize, usize), f64>,
    marginal: Vec<f64>,
}

impl Textbook {
    fn new(h: &SparseBinaryMatrix, lambda: &[f64], syndrome: &BitVector, c: f64) -> Self {
        let rows: Vec<Vec<usize>> = (0..h.rows()).map(|i| h.row(i).to_vec()).collect();
        let mut cols = vec![Vec::new(); h.cols()];
        for (i, r) in rows.iter().enumerate() {
            for &j in r {
                cols[j].push(i);
            }
        }
        let lambda: Vec<f64> = lambda.iter().map(|l| l.clamp(-c, c)).collect();
        let mut nu = HashMap::new();
        for (i, r) in rows.iter().enumerate() {
            for &j in r {
                nu.insert((i, j), lambda[j]);
            }
        }
        Textbook {
            syndrome: (0..h.rows()).map(|i| syndrome.get(i)).collect(),
            marginal: lambda.clone(),
            rows,
            cols,
            lambda,
            c,
            mu: HashMap::new(),
            nu,
        }
    }

    fn iterate(&mut self) -> Vec<u8> {
        for (i, r) in self.rows.iter().enumerate() {
            for &j in r {
                let mut sign = if self.syndrome[i] { -1.0 } else { 1.0 };
                let mut mag = self.c;
                for &k in r {
                    if k != j {
                        let v = self.nu[&(i, k)];
                        if v < 0.0 {
                            sign = -sign;
                        }
                        mag = mag.min(v.abs());
                    }
                }
                self.mu.insert((i, j), sign * mag);
            }
        }
        for (j, col) in self.cols.iter().enumerate() {
            for &i in col {
                let mut s = self.lambda[j];
                for &k in col {
                    if k != i {
                        s += self.mu[&(k, j)];
                    }
                }
                self.nu.insert((i, j), s.clamp(-self.c, self.c));
            }
            let mut m = self.lambda[j];
            for &k in col {
                m += self.mu[&(k, j)];
            }
            self.marginal[j] = m.clamp(-self.c, self.c);
        }
        self.marginal.iter().map(|&m| (m < 0.0) as u8).collect()
    }
}

fn random_sparse_problem(rng: &mut ChaCha8Rng) -> DecodingProblem {
    let m = rng.random_range(3..=25usize);
    let n = rng.random_range(m..=60usize);
    let rows: Vec<Vec<usize>> = {
        let mut rows = vec![Vec::new(); m];
        for j in 0..n {
            let w = rng.random_range(1..=3usize.min(m));
            let mut picked = HashSet::new();
            while picked.len() < w {
                picked.insert(rng.random_range(0..m));
            }
            for i in picked {
                rows[i].push(j);
            }
        }
        rows
    };
    let h = SparseBinaryMatrix::from_rows(n, &rows).unwrap();
    let a = SparseBinaryMatrix::from_rows(n, &[vec![0]]).unwrap();
    let p = (0..n).map(|_| rng.random_range(0.001..0.4)).collect();
    DecodingProblem::new("random", h, a, p).unwrap()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2ed0);
    let iterations = 20;
    let mut runs_compared = 0;
    for k in 0..100 {
        let prob = random_sparse_problem(&mut rng);
        let s = if k % 2 == 0 {
            let e = BitVector::from_bools(&prob.probabilities().iter().map(|&p| rng.random::<f64>() < p).collect::<Vec<_>>());
            prob.syndrome(&e).unwrap()
        } else {
            BitVector::from_bools(&(0..prob.num_checks()).map(|_| rng.random::<bool>()).collect::<Vec<_>>())
        };
        let schedule = RelaySchedule { max_legs: 1, ..RelaySchedule::standard_bp(iterations) };
        let relay = RelayDecoder::new(&prob, schedule).unwrap();
        let bp = relay.kernel();
        let graph = bp.graph();

        // every iteration, no early stop
        let mut text = Textbook::new(prob.check_matrix(), &prob.priors(), &s, DEFAULT_SATURATION);
        let mut state = bp.new_state();
        bp.init_leg(&mut state, &s, bp.priors()).unwrap();
        let gamma = vec![0.0; prob.num_errors()];
        let mut first_converged = None;
        for t in 1..=iterations {
            let converged = bp.iterate(&mut state, &gamma);
            let hard = text.iterate();
            if converged && first_converged.is_none() {
                first_converged = Some((t, hard.clone()));
            }
            for i in 0..graph.num_checks() {
                for e in graph.check_edges(i) {
                    let j = graph.edge_error(e);
                    ensure(state.mu()[e].to_bits() == text.mu[&(i, j)].to_bits(), || {
                        format!("problem {k}, iteration {t}: μ[{i}→{j}] {} vs {}", state.mu()[e], text.mu[&(i, j)])
                    })?;
                    ensure(state.nu()[e].to_bits() == text.nu[&(i, j)].to_bits(), || {
                        format!("problem {k}, iteration {t}: ν[{j}→{i}] {} vs {}", state.nu()[e], text.nu[&(i, j)])
                    })?;
                }
            }
            ensure(state.marginal().iter().zip(&text.marginal).all(|(a, b)| a.to_bits() == b.to_bits()), || {
                format!("problem {k}, iteration {t}: marginals differ")
            })?;
            ensure(state.hard_decision() == &hard[..], || format!("problem {k}, iteration {t}: hard decisions differ"))?;
        }

        // the relay driver itself, which stops at convergence
        let mut ws = relay.workspace();
        let r = relay.decode_with(&s, &mut ws).unwrap();
        let mut text = Textbook::new(prob.check_matrix(), &prob.priors(), &s, DEFAULT_SATURATION);
        let mut used = iterations;
        for t in 1..=iterations {
            let hard = text.iterate();
            if prob.syndrome(&BitVector::from_bits(&hard)).unwrap() == s {
                used = t;
                break;
            }
        }
        ensure(r.total_iterations == used, || format!("problem {k}: relay used {} iterations, textbook {used}", r.total_iterations))?;
        ensure(r.success == first_converged.is_some(), || format!("problem {k}: convergence flags differ"))?;
        ensure(ws.state().marginal().iter().zip(&text.marginal).all(|(a, b)| a.to_bits() == b.to_bits()), || {
            format!("problem {k}: relay final marginals differ")
        })?;
        ensure(r.correction.to_bits() == text.marginal.iter().map(|&m| (m < 0.0) as u8).collect::<Vec<_>>(), || {
            format!("problem {k}: relay correction differs")
        })?;
        runs_compared += 1;
    }
    Ok(format!("{runs_compared} problems × {iterations} iterations, μ/ν/M bit-identical"))
}

fn criterion_3() -> Outcome {
    let toy: BicycleParams = BicycleParams { l: 6, m: 6, ..BicycleParams::from_toml_str(include_str!("../../../data/bb/gross.toml")).unwrap() };
    let mut problems: Vec<(DecodingProblem, f64)> = vec![
        (build_repetition(9, 0.05, 0.05, 4).unwrap(), 1.0),
        (build_repetition(5, 0.2, 0.1, 1).unwrap(), 1.0),
    ];
    for (d, rounds, p) in [(3, 4, 0.04), (5, 6, 0.03), (7, 1, 0.08)] {
        let (x, z) = build_surface_phenomenological(d, rounds, p, p).unwrap().xz_split().unwrap();
        problems.push((x.compress_columns().unwrap(), 1.0));
        problems.push((z.compress_columns().unwrap(), 1.5));
    }
    let (x, z) = build_bivariate_bicycle(&toy, 0.04, 0.04, 1).unwrap().xz_split().unwrap();
    problems.push((x.compress_columns().unwrap(), 1.0));
    problems.push((z.compress_columns().unwrap(), 2.0));
    let (x, _) = build_bivariate_bicycle(&toy, 0.01, 0.01, 3).unwrap().xz_split().unwrap();
    problems.push((x.compress_columns().unwrap(), 1.0));

    let schedules = [
        RelaySchedule { max_legs: 20, ..RelaySchedule::preset(Preset::Surface) },
        RelaySchedule { max_legs: 30, ..RelaySchedule::preset_five(Preset::Gross) },
        RelaySchedule::standard_bp(50),
        RelaySchedule::mem_bp(0.5, 40),
        RelaySchedule {
            max_legs: 10,
            first_leg_iterations: 5,
            leg_iterations: 3,
            ensembling: qldpc_relay::Ensembling::Independent,
            ..RelaySchedule::preset(Preset::TwoGross)
        },
    ];
    let total = 100_000u64;
    let per_pair = total.div_ceil((problems.len() * schedules.len()) as u64);
    let (mut decodes, mut successes, mut violations) = (0u64, 0u64, 0u64);
    let mut rng = ChaCha8Rng::seed_from_u64(0x3c0);
    for (pi, (prob, scale)) in problems.iter().enumerate() {
        let prob = prob.scaled(*scale).unwrap();
        for (si, sched) in schedules.iter().enumerate() {
            let dec = RelayDecoder::new(&prob, RelaySchedule { rng_seed: (pi * 31 + si) as u64, ..sched.clone() }).unwrap();
            let mut ws = dec.workspace();
            for _ in 0..per_pair {
                let e = BitVector::from_bools(&prob.probabilities().iter().map(|&p| rng.random::<f64>() < p).collect::<Vec<_>>());
                let s = prob.syndrome(&e).unwrap();
                let r = dec.decode_with(&s, &mut ws).unwrap();
                decodes += 1;
                if r.success {
                    successes += 1;
                    if prob.syndrome(&r.correction).unwrap() != s {
                        violations += 1;
                    }
                    for sol in &r.solutions {
                        if prob.syndrome(&sol.correction).unwrap() != s {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    ensure(violations == 0, || format!("{violations} successful decodes violate Hê = σ"))?;
    ensure(successes < decodes, || "no unconverged decodes; the check is vacuous".into())?;
    Ok(format!("{decodes} decodes over {} problems, {successes} successes, 0 violations", problems.len()))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc011);
    let mut max_p_err = 0.0f64;
    let mut syndromes = 0;
    let cases = 60;
    for k in 0..cases {
        // distinct base columns, then planted copies
        let m = rng.random_range(2..=5usize);
        let base = rng.random_range(2..=6usize.min((1 << m) - 1));
        let mut patterns: Vec<u64> = Vec::new();
        while patterns.len() < base {
            let c = rng.random_range(1..1u64 << m);
            if !patterns.contains(&c) {
                patterns.push(c);
            }
        }
        let action_of: Vec<bool> = (0..base).map(|_| rng.random()).collect();
        let mut columns: Vec<usize> = (0..base).collect();
        while columns.len() < 13 && (columns.len() < base + 2 || rng.random_bool(0.6)) {
            columns.push(rng.random_range(0..base));
        }
        for q in (1..columns.len()).rev() {
            columns.swap(q, rng.random_range(0..=q));
        }
        let n = columns.len();
        let rows: Vec<Vec<usize>> =
            (0..m).map(|i| (0..n).filter(|&j| patterns[columns[j]] >> i & 1 == 1).collect()).collect();
        let h = SparseBinaryMatrix::from_rows(n, &rows).unwrap();
        let a = SparseBinaryMatrix::from_rows(n, &[(0..n).filter(|&j| action_of[columns[j]]).collect::<Vec<_>>()]).unwrap();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.45)).collect();
        let prob = DecodingProblem::new("planted", h, a, p.clone()).unwrap();
        let comp = prob.compress().map_err(|e| format!("case {k}: {e}"))?;
        let cp = &comp.problem;
        ensure(cp.num_errors() == base, || format!("case {k}: {} groups, planted {base}", cp.num_errors()))?;

        // representative mapping: group g is represented by its smallest member
        for (g, group) in comp.groups.iter().enumerate() {
            ensure(group.iter().all(|&c| columns[c] == columns[group[0]]), || format!("case {k}: mixed group"))?;
            ensure(group[0] == *group.iter().min().unwrap(), || format!("case {k}: representative not smallest"))?;
            ensure(cp.check_matrix().col(g) == prob.check_matrix().col(group[0]), || format!("case {k}: column moved"))?;
            // odd-parity probability by explicit subset enumeration
            let mut odd = 0.0;
            for mask in 0u64..1 << group.len() {
                if mask.count_ones() % 2 == 1 {
                    odd += (0..group.len())
                        .map(|b| if mask >> b & 1 == 1 { p[group[b]] } else { 1.0 - p[group[b]] })
                        .product::<f64>();
                }
            }
            let pc = cp.probabilities()[g];
            max_p_err = max_p_err.max((pc - odd).abs());
            ensure((pc - odd).abs() <= 1e-12, || format!("case {k}: p' {pc} vs enumeration {odd}"))?;
            let gp: Vec<f64> = group.iter().map(|&c| p[c]).collect();
            ensure((odd_parity_probability(gp) - pc).abs() <= 1e-12, || format!("case {k}: parity helper"))?;
        }

        // uncompressed mass aggregated per compressed pattern
        let mut mass: HashMap<u64, f64> = HashMap::new();
        let mut syndrome_mass: HashMap<u64, f64> = HashMap::new();
        for mask in 0u64..1 << n {
            let e = bits_of(mask, n);
            let pr: f64 = (0..n).map(|j| if mask >> j & 1 == 1 { p[j] } else { 1.0 - p[j] }).product();
            let x = comp.map_error(&e);
            let xm = x.support().iter().fold(0u64, |acc, &g| acc | 1 << g);
            *mass.entry(xm).or_default() += pr;
            let s = prob.syndrome(&e).unwrap();
            ensure(cp.syndrome(&x).unwrap() == s, || format!("case {k}: syndrome not preserved by mapping"))?;
            *syndrome_mass.entry(s.support().iter().fold(0u64, |acc, &i| acc | 1 << i)).or_default() += pr;
        }
        let compressed_syndromes: HashSet<u64> = (0u64..1 << base)
            .map(|xm| cp.syndrome(&bits_of(xm, base)).unwrap().support().iter().fold(0u64, |acc, &i| acc | 1 << i))
            .collect();
        let uncompressed_syndromes: HashSet<u64> = syndrome_mass.keys().copied().collect();
        ensure(compressed_syndromes == uncompressed_syndromes, || format!("case {k}: syndrome sets differ"))?;

        for &sm in &uncompressed_syndromes {
            let s = bits_of(sm, m);
            let o_c = brute_force_min_weight(cp, &s).unwrap();
            let o_u = brute_force_min_weight(&prob, &s).unwrap();
            let best_mass = (0u64..1 << base)
                .filter(|&xm| cp.syndrome(&bits_of(xm, base)).unwrap() == s)
                .map(|xm| mass[&xm])
                .fold(0.0f64, f64::max);
            let xm = o_c.min_weight_correction.support().iter().fold(0u64, |acc, &g| acc | 1 << g);
            ensure((mass[&xm] - best_mass).abs() <= 1e-9 * best_mass, || {
                format!("case {k}, syndrome {s}: compressed min-weight is not the most probable pattern")
            })?;
            let log_norm: f64 = cp.probabilities().iter().map(|&q| (1.0 - q).ln()).sum();
            let implied_weight = log_norm - best_mass.ln();
            ensure((o_c.min_weight - implied_weight).abs() <= 1e-9 * (1.0 + implied_weight.abs()), || {
                format!("case {k}, syndrome {s}: weight {} vs aggregated {implied_weight}", o_c.min_weight)
            })?;
            let ps = syndrome_mass[&sm];
            ensure(
                (o_c.syndrome_probability - ps).abs() <= 1e-12 && (o_u.syndrome_probability - ps).abs() <= 1e-12,
                || format!("case {k}, syndrome {s}: Pr(σ) differs"),
            )?;
            syndromes += 1;
        }
    }
    Ok(format!("{cases} planted problems, {syndromes} syndromes, max |p' − enumeration| = {max_p_err:.1e}"))
}

fn desk_comparison(saturation: f64) -> Result<(BenchStats, BenchStats), String> {
    let prob = desk_problem();
    let relay = RelayDecoder::new(&prob, RelaySchedule { saturation, ..RelaySchedule::preset(Preset::Surface) }).unwrap();
    let bp = RelayDecoder::new(&prob, RelaySchedule { saturation, ..RelaySchedule::standard_bp(10_000) }).unwrap();
    let p = run_paired(&prob, &relay, &bp, RunConfig { shots: DESK_SHOTS, seed: 5, workers: 0 }).map_err(|e| e.to_string())?;
    Ok((p.first, p.second))
}

fn describe(s: &BenchStats) -> String {
    format!("{:.4} [{:.4}, {:.4}]", s.logical_error_rate, s.ci_low, s.ci_high)
}

fn criterion_5(baseline: &Result<(BenchStats, BenchStats), String>) -> Outcome {
    let (relay, bp) = baseline.clone()?;
    ensure(relay.logical_error_rate < bp.logical_error_rate && relay.ci_high < bp.ci_low, || {
        format!("relay {} vs BP {}", describe(&relay), describe(&bp))
    })?;
    Ok(format!("{DESK_SHOTS} shots: Relay-BP-1 {} < BP {}", describe(&relay), describe(&bp)))
}

fn criterion_6() -> Outcome {
    let prob = desk_problem();
    let sched = RelaySchedule { rng_seed: 6, ..RelaySchedule::preset_five(Preset::Surface) };
    let p = compare_ensembling(&prob, &sched, RunConfig { shots: ENSEMBLING_SHOTS, seed: 6, workers: 0 })
        .map_err(|e| e.to_string())?;
    let detail = format!(
        "{ENSEMBLING_SHOTS} paired shots, Relay-BP-5: relay {:.2} vs independent {:.2} iterations, difference {:.2} ± {:.2}",
        p.first.mean_iterations, p.second.mean_iterations, p.mean_iteration_difference, p.iteration_difference_stderr
    );
    ensure(p.first_uses_fewer_iterations(1.96), || detail.clone())?;
    Ok(detail)
}

fn criterion_7() -> Outcome {
    let prob = desk_problem();
    let dec = RelayDecoder::new(&prob, RelaySchedule { rng_seed: 3, ..RelaySchedule::preset(Preset::Surface) }).unwrap();
    let run = |workers| run_monte_carlo(&prob, &dec, RunConfig { shots: 5_000, seed: 77, workers }).unwrap();
    let one = run(1);
    for w in [4, 16] {
        let other = run(w);
        ensure(other == one, || format!("{w} workers: {other:?} vs 1 worker: {one:?}"))?;
    }
    Ok(format!("5000 shots identical for 1, 4, 16 workers (LER {:.4}, mean iterations {:.3})", one.logical_error_rate, one.mean_iterations))
}

fn within(a: &BenchStats, b: &BenchStats) -> bool {
    b.ci_low <= a.logical_error_rate && a.logical_error_rate <= b.ci_high
}

fn criterion_8(baseline: &Result<(BenchStats, BenchStats), String>) -> Outcome {
    let (checked, excused) = tree_exactness(&trees(), LARGE_SATURATION)?;
    let (relay, bp) = baseline.clone()?;
    let (relay_big, bp_big) = desk_comparison(LARGE_SATURATION)?;
    ensure(within(&relay_big, &relay) && within(&relay, &relay_big), || {
        format!("relay LER moved: C=1024 {} vs C=2^20 {}", describe(&relay), describe(&relay_big))
    })?;
    ensure(within(&bp_big, &bp) && within(&bp, &bp_big), || {
        format!("BP LER moved: C=1024 {} vs C=2^20 {}", describe(&bp), describe(&bp_big))
    })?;
    ensure(relay_big.ci_high < bp_big.ci_low, || "separation lost at C=2^20".into())?;
    Ok(format!(
        "C=2^20: trees exact on {checked} syndromes ({excused} degenerate), relay {} BP {}",
        describe(&relay_big),
        describe(&bp_big)
    ))
}

fn criterion_9() -> Outcome {
    let prob = desk_problem();
    let centers = [0.0, 0.2, 0.4, 0.6, 0.8];
    let widths = [0.0, 0.3, 0.6, 0.9, 1.2];
    let base = RelaySchedule::preset(Preset::Surface);
    let grid = sweep_memory_strengths(&prob, &base, &centers, &widths, RunConfig { shots: 2_000, seed: 9, workers: 0 })
        .map_err(|e| e.to_string())?;
    let records: Vec<BenchRecord> = grid
        .cells
        .iter()
        .map(|c| {
            let sched = RelaySchedule { gamma_center: c.gamma_center, gamma_width: c.gamma_width, rng_seed: c.seed, ..base.clone() };
            BenchRecord::new(prob.name(), &sched, 1.0, c.seed, &c.stats, false)
        })
        .collect();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("sweep.csv");
    write_csv(&records, std::fs::File::create(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;

    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    for col in ["problem", "S", "R", "gamma_center", "gamma_width", "p_scale", "shots", "failures", "ler", "ci_low", "ci_high", "mean_iterations", "iter_stderr", "mean_legs", "seed"] {
        ensure(header.iter().any(|h| h == col), || format!("CSV lacks column {col}"))?;
    }
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        ensure(rec.len() == header.len(), || format!("row {rows} has {} fields", rec.len()))?;
        rows += 1;
    }
    ensure(rows == 25, || format!("{rows} rows, expected 25"))?;
    let back = read_csv(text.as_bytes()).map_err(|e| e.to_string())?;
    ensure(back == records, || "CSV does not round-trip".into())?;

    let cells = &grid.cells;
    let mut best: Option<(f64, usize, usize)> = None;
    for a in 0..cells.len() {
        for b in 0..cells.len() {
            let (sa, sb) = (&cells[a].stats, &cells[b].stats);
            let margin = (sa.logical_error_rate - sb.logical_error_rate).abs() - (sa.half_width() + sb.half_width());
            if best.is_none_or(|(m, _, _)| margin > m) {
                best = Some((margin, a, b));
            }
        }
    }
    let (margin, a, b) = best.unwrap();
    ensure(margin > 0.0, || "no pair of cells differs beyond their intervals".into())?;
    let cell = |i: usize| format!("(c={}, w={}) LER {:.4}", cells[i].gamma_center, cells[i].gamma_width, cells[i].stats.logical_error_rate);
    Ok(format!("25 cells × 2000 shots, CSV well-formed; {} vs {}", cell(a), cell(b)))
}

fn main() {
    let start = Instant::now();
    let baseline = catch_unwind(desk_comparison_default).unwrap_or_else(|_| Err("desk comparison panicked".into()));
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 tree exactness", Box::new(criterion_1)),
        ("2 reduction identities", Box::new(criterion_2)),
        ("3 convergence soundness", Box::new(criterion_3)),
        ("4 column compression", Box::new(criterion_4)),
        ("5 relay beats plain BP", Box::new(|| criterion_5(&baseline))),
        ("6 relay vs independent ensembling", Box::new(criterion_6)),
        ("7 determinism and parallel invariance", Box::new(criterion_7)),
        ("8 clamp insensitivity", Box::new(|| criterion_8(&baseline))),
        ("9 sweep machinery", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({:.1}s)", t.elapsed().as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} ({:.1}s)", t.elapsed().as_secs_f64());
            }
        }
    }
    println!("acceptance: {} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn desk_comparison_default() -> Result<(BenchStats, BenchStats), String> {
    desk_comparison(DEFAULT_SATURATION)
}

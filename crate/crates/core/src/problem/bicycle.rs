//! Bivariate bicycle codes.
//!
//! Over the group `Z_l × Z_m`, `x` and `y` are the cyclic shifts of the two
//! factors. Polynomials `A`, `B` in `x, y` give commuting `lm × lm`
//! matrices and the CSS checks `H_X = [A | B]`, `H_Z = [Bᵀ | Aᵀ]`.
//! Logical operators are found once at build time by dense elimination.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gf2::SparseBinaryMatrix;
use crate::problem::builders::{check_probability, MemoryLayout, Sector};
use crate::problem::{DecodingProblem, RowType};

/// The monomial `x^x y^y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub x: usize,
    pub y: usize,
}

impl Monomial {
    pub fn new(x: usize, y: usize) -> Self {
        Monomial { x, y }
    }
}

/// Parses a sum of monomials such as `x^3 + y + y^2` or `x3+y1+y2`.
pub fn parse_polynomial(s: &str) -> Result<Vec<Monomial>> {
    let mut terms = Vec::new();
    for raw in s.split('+') {
        let term: String = raw.chars().filter(|c| !c.is_whitespace() && *c != '^' && *c != '*').collect();
        if term.is_empty() {
            return Err(Error::InvalidParameter(format!("empty term in polynomial {s:?}")));
        }
        let mut mono = Monomial::new(0, 0);
        if term != "1" {
            let mut chars = term.chars().peekable();
            while let Some(var) = chars.next() {
                let mut digits = String::new();
                while let Some(c) = chars.peek().copied().filter(char::is_ascii_digit) {
                    digits.push(c);
                    chars.next();
                }
                let exp: usize = if digits.is_empty() {
                    1
                } else {
                    digits.parse().map_err(|_| {
                        Error::InvalidParameter(format!("bad exponent in term {raw:?}"))
                    })?
                };
                match var {
                    'x' => mono.x += exp,
                    'y' => mono.y += exp,
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "unexpected symbol {var:?} in term {raw:?}"
                        )))
                    }
                }
            }
        }
        terms.push(mono);
    }
    Ok(terms)
}

/// Code parameters, as stored in the shipped `data/bb/*.toml` files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BicycleParams {
    pub l: usize,
    pub m: usize,
    pub a_terms: Vec<Monomial>,
    pub b_terms: Vec<Monomial>,
}

#[derive(Deserialize)]
struct BicycleFile {
    l: usize,
    m: usize,
    a: String,
    b: String,
}

impl BicycleParams {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: BicycleFile =
            toml::from_str(text).map_err(|e| Error::parse(0, format!("code parameter file: {e}")))?;
        Ok(BicycleParams {
            l: file.l,
            m: file.m,
            a_terms: parse_polynomial(&file.a)?,
            b_terms: parse_polynomial(&file.b)?,
        })
    }

    /// The `lm × lm` matrix of a polynomial over the torus group.
    fn circulant(&self, terms: &[Monomial]) -> Result<Vec<Vec<usize>>> {
        let (l, m) = (self.l, self.m);
        let mut reduced: Vec<Monomial> = terms.iter().map(|t| Monomial::new(t.x % l, t.y % m)).collect();
        reduced.sort_unstable();
        if let Some(w) = reduced.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "polynomial term x^{} y^{} repeats modulo (l, m) = ({l}, {m})",
                w[0].x, w[0].y
            )));
        }
        let mut rows = vec![Vec::with_capacity(terms.len()); l * m];
        for u in 0..l {
            for v in 0..m {
                for t in &reduced {
                    let row = ((u + t.x) % l) * m + (v + t.y) % m;
                    rows[row].push(u * m + v);
                }
            }
        }
        for row in &mut rows {
            row.sort_unstable();
        }
        Ok(rows)
    }

    /// `(H_X, H_Z)` as per-row supports over `2lm` qubits.
    pub fn check_matrices(&self) -> Result<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
        if self.l == 0 || self.m == 0 {
            return Err(Error::InvalidParameter("l and m must be positive".into()));
        }
        if self.a_terms.is_empty() || self.b_terms.is_empty() {
            return Err(Error::InvalidParameter("both polynomials need at least one term".into()));
        }
        let n2 = self.l * self.m;
        let a = self.circulant(&self.a_terms)?;
        let b = self.circulant(&self.b_terms)?;
        let transpose = |rows: &[Vec<usize>]| {
            let mut t = vec![Vec::new(); n2];
            for (r, row) in rows.iter().enumerate() {
                for &c in row {
                    t[c].push(r);
                }
            }
            t
        };
        let (at, bt) = (transpose(&a), transpose(&b));
        let join = |left: &[Vec<usize>], right: &[Vec<usize>]| -> Vec<Vec<usize>> {
            left.iter()
                .zip(right)
                .map(|(l, r)| l.iter().copied().chain(r.iter().map(|&c| c + n2)).collect())
                .collect()
        };
        Ok((join(&a, &b), join(&bt, &at)))
    }
}

/// Dense GF(2) rows packed into 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn from_support(n: usize, support: &[usize]) -> Self {
        let mut words = vec![0u64; n.div_ceil(64)];
        for &i in support {
            words[i / 64] ^= 1 << (i % 64);
        }
        BitRow(words)
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    fn first_one(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    fn support(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|&i| self.get(i)).collect()
    }
}

/// Incrementally built echelon basis.
struct Echelon {
    rows: Vec<(usize, BitRow)>,
}

impl Echelon {
    fn new() -> Self {
        Echelon { rows: Vec::new() }
    }

    /// Adds `v` if it is independent of the basis; reports whether it was.
    fn insert(&mut self, mut v: BitRow) -> bool {
        for (pivot, row) in &self.rows {
            if v.get(*pivot) {
                v.xor_assign(row);
            }
        }
        match v.first_one() {
            Some(pivot) => {
                for (_, row) in &mut self.rows {
                    if row.get(pivot) {
                        row.xor_assign(&v);
                    }
                }
                self.rows.push((pivot, v));
                true
            }
            None => false,
        }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// Basis of `{v : H v = 0}` for `H` given as row supports over `n` columns.
fn kernel_basis(rows: &[Vec<usize>], n: usize) -> Vec<BitRow> {
    let mut ech = Echelon::new();
    for r in rows {
        ech.insert(BitRow::from_support(n, r));
    }
    // Each nonpivot column f yields the kernel vector e_f + Σ_{pivot p with row_p[f]} e_p.
    let pivots: Vec<usize> = ech.rows.iter().map(|(p, _)| *p).collect();
    let is_pivot = {
        let mut v = vec![false; n];
        for &p in &pivots {
            v[p] = true;
        }
        v
    };
    let mut basis = Vec::new();
    for f in (0..n).filter(|&c| !is_pivot[c]) {
        let mut support = vec![f];
        for (p, row) in &ech.rows {
            if row.get(f) {
                support.push(*p);
            }
        }
        basis.push(BitRow::from_support(n, &support));
    }
    basis
}

/// Logical operators of one type: kernel vectors of `commute_with` that are
/// independent of the row space of `stabilizers`.
fn logical_operators(commute_with: &[Vec<usize>], stabilizers: &[Vec<usize>], n: usize) -> Vec<Vec<usize>> {
    let mut ech = Echelon::new();
    for s in stabilizers {
        ech.insert(BitRow::from_support(n, s));
    }
    kernel_basis(commute_with, n)
        .into_iter()
        .filter_map(|v| ech.insert(v.clone()).then(|| v.support(n)))
        .collect()
}

fn rank(rows: &[Vec<usize>], n: usize) -> usize {
    let mut ech = Echelon::new();
    for r in rows {
        ech.insert(BitRow::from_support(n, r));
    }
    ech.rank()
}

/// Bivariate bicycle memory problem with phenomenological noise.
///
/// Action rows are `k` X logicals (tagged X) followed by `k` Z logicals
/// (tagged Z), where `k = 2lm − rank H_X − rank H_Z`.
pub fn build_bivariate_bicycle(
    params: &BicycleParams,
    p_data: f64,
    p_meas: f64,
    rounds: usize,
) -> Result<DecodingProblem> {
    if rounds < 1 {
        return Err(Error::InvalidParameter("at least one round is required".into()));
    }
    check_probability("p_data", p_data)?;
    check_probability("p_meas", p_meas)?;
    let (hx, hz) = params.check_matrices()?;
    let n = 2 * params.l * params.m;

    let hx_m = SparseBinaryMatrix::from_rows(n, &hx)?;
    let hz_m = SparseBinaryMatrix::from_rows(n, &hz)?;
    if hx_m.mul_transpose(&hz_m)?.nnz() != 0 {
        return Err(Error::InvalidParameter("H_X · H_Zᵀ ≠ 0; polynomials do not commute".into()));
    }

    let x_logicals = logical_operators(&hz, &hx, n);
    let z_logicals = logical_operators(&hx, &hz, n);
    let k = x_logicals.len();
    debug_assert_eq!(k, n - rank(&hx, n) - rank(&hz, n));
    debug_assert_eq!(z_logicals.len(), k);

    let mut toggles_x = vec![Vec::new(); n];
    for (l, op) in x_logicals.iter().enumerate() {
        for &q in op {
            toggles_x[q].push(l);
        }
    }
    let mut toggles_z = vec![Vec::new(); n];
    for (l, op) in z_logicals.iter().enumerate() {
        for &q in op {
            toggles_z[q].push(k + l);
        }
    }
    let mut logical_types = vec![RowType::X; k];
    logical_types.extend(std::iter::repeat_n(RowType::Z, k));

    let layout = MemoryLayout {
        num_qubits: n,
        sectors: vec![
            Sector {
                stabilizers: &hx,
                row_type: RowType::X,
            },
            Sector {
                stabilizers: &hz,
                row_type: RowType::Z,
            },
        ],
        data_types: vec![(1, toggles_z), (0, toggles_x)],
        logical_types,
        rounds,
        p_data,
        p_meas,
    };
    let (l, m) = (params.l, params.m);
    Ok(layout
        .build(format!("bb_l{l}_m{m}_r{rounds}"))?
        .with_description(format!(
            "phenomenological bivariate bicycle code [[{n},{k}]] l={l} m={m} rounds={rounds} p_data={p_data:e} p_meas={p_meas:e}"
        )))
}

/// `(n, k)` of the code defined by `params`.
pub fn code_dimensions(params: &BicycleParams) -> Result<(usize, usize)> {
    let (hx, hz) = params.check_matrices()?;
    let n = 2 * params.l * params.m;
    Ok((n, n - rank(&hx, n) - rank(&hz, n)))
}

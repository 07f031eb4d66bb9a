//! Decoding problems `(H, A, p)` and the transforms applied to them before
//! decoding.

mod bicycle;
mod builders;
mod io;

use serde::{Deserialize, Serialize};

pub use bicycle::{build_bivariate_bicycle, code_dimensions, parse_polynomial, BicycleParams, Monomial};
pub use builders::{build_repetition, build_surface_phenomenological};
pub use io::{load_problem, parse_problem, save_problem, write_problem, FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::gf2::{BitVector, SparseBinaryMatrix};

/// Pauli type of a detector row or logical action row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowType {
    X,
    Z,
    Untyped,
}

impl RowType {
    pub fn as_char(self) -> char {
        match self {
            RowType::X => 'X',
            RowType::Z => 'Z',
            RowType::Untyped => '.',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'X' => Some(RowType::X),
            'Z' => Some(RowType::Z),
            '.' => Some(RowType::Untyped),
            _ => None,
        }
    }
}

/// Log-likelihood priors `λ_j = ln((1 − p_j) / p_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorVector(Vec<f64>);

impl PriorVector {
    pub fn from_probabilities(p: &[f64]) -> Self {
        PriorVector(p.iter().map(|&pj| log_prior(pj)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for PriorVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn log_prior(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

/// A validated decoding instance.
///
/// Invariants: `H` and `A` have the same column count as `p`, every `p_j`
/// lies in the open interval (0, 1), and every column of `H` is nonempty.
/// The type tags, when present, have one entry per row of `H` and `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodingProblem {
    name: String,
    description: String,
    check: SparseBinaryMatrix,
    action: SparseBinaryMatrix,
    p: Vec<f64>,
    check_types: Vec<RowType>,
    action_types: Vec<RowType>,
}

impl DecodingProblem {
    /// Validates and builds a problem with untyped rows.
    pub fn new(
        name: impl Into<String>,
        check: SparseBinaryMatrix,
        action: SparseBinaryMatrix,
        p: Vec<f64>,
    ) -> Result<Self> {
        let check_types = vec![RowType::Untyped; check.rows()];
        let action_types = vec![RowType::Untyped; action.rows()];
        Self::with_types(name, check, action, p, check_types, action_types)
    }

    pub fn with_types(
        name: impl Into<String>,
        check: SparseBinaryMatrix,
        action: SparseBinaryMatrix,
        p: Vec<f64>,
        check_types: Vec<RowType>,
        action_types: Vec<RowType>,
    ) -> Result<Self> {
        let problem = Self::unchecked(name, check, action, p, check_types, action_types)?;
        problem.validate()?;
        Ok(problem)
    }

    // Shape checks only; empty columns and priors are not inspected.
    fn unchecked(
        name: impl Into<String>,
        check: SparseBinaryMatrix,
        action: SparseBinaryMatrix,
        p: Vec<f64>,
        check_types: Vec<RowType>,
        action_types: Vec<RowType>,
    ) -> Result<Self> {
        if action.cols() != check.cols() {
            return Err(Error::dimension("action matrix column count", check.cols(), action.cols()));
        }
        if p.len() != check.cols() {
            return Err(Error::dimension("prior vector length", check.cols(), p.len()));
        }
        if check_types.len() != check.rows() {
            return Err(Error::dimension("check row tags", check.rows(), check_types.len()));
        }
        if action_types.len() != action.rows() {
            return Err(Error::dimension("action row tags", action.rows(), action_types.len()));
        }
        Ok(DecodingProblem {
            name: name.into(),
            description: String::new(),
            check,
            action,
            p,
            check_types,
            action_types,
        })
    }

    fn validate(&self) -> Result<()> {
        for (col, &value) in self.p.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::PriorOutOfRange { col, value });
            }
        }
        if let Some(col) = (0..self.check.cols()).find(|&c| self.check.col(c).is_empty()) {
            return Err(Error::EmptyColumn { col });
        }
        Ok(())
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn check_matrix(&self) -> &SparseBinaryMatrix {
        &self.check
    }

    pub fn action_matrix(&self) -> &SparseBinaryMatrix {
        &self.action
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn priors(&self) -> PriorVector {
        PriorVector::from_probabilities(&self.p)
    }

    pub fn check_types(&self) -> &[RowType] {
        &self.check_types
    }

    pub fn action_types(&self) -> &[RowType] {
        &self.action_types
    }

    /// Number of detectors `M`.
    pub fn num_checks(&self) -> usize {
        self.check.rows()
    }

    /// Number of error mechanisms `N`.
    pub fn num_errors(&self) -> usize {
        self.check.cols()
    }

    /// Number of logical action rows `K`.
    pub fn num_actions(&self) -> usize {
        self.action.rows()
    }

    /// True for a split half that received no detector rows.
    pub fn is_degenerate(&self) -> bool {
        self.check.rows() == 0
    }

    pub fn syndrome(&self, error: &BitVector) -> Result<BitVector> {
        self.check.matvec(error)
    }

    /// Copy of the problem with every probability multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise scale must be positive, got {scale}")));
        }
        let mut out = self.clone();
        out.p = self.p.iter().map(|&p| p * scale).collect();
        out.validate()?;
        Ok(out)
    }

    /// Splits a fully typed problem into its X-decoding and Z-decoding halves.
    ///
    /// The X-decoding half keeps the Z-type detector rows and the Z-type
    /// action rows (the ones that see X errors); the Z-decoding half keeps the
    /// X-type rows. Both halves keep every column and the original `p`, so a
    /// half can contain columns that flip none of its detectors. Follow with
    /// [`compress_columns`](Self::compress_columns) before decoding or saving.
    pub fn xz_split(&self) -> Result<(DecodingProblem, DecodingProblem)> {
        if let Some(row) = self.check_types.iter().position(|&t| t == RowType::Untyped) {
            return Err(Error::UntypedRow { row });
        }
        if let Some(row) = self.action_types.iter().position(|&t| t == RowType::Untyped) {
            return Err(Error::UntypedRow { row: self.check.rows() + row });
        }
        let half = |keep: RowType, suffix: &str| -> Result<DecodingProblem> {
            let check_rows: Vec<usize> = rows_of_type(&self.check_types, keep);
            let action_rows: Vec<usize> = rows_of_type(&self.action_types, keep);
            let mut out = Self::unchecked(
                format!("{}{suffix}", self.name),
                self.check.select_rows(&check_rows),
                self.action.select_rows(&action_rows),
                self.p.clone(),
                vec![keep; check_rows.len()],
                vec![keep; action_rows.len()],
            )?;
            out.description = self.description.clone();
            Ok(out)
        };
        Ok((half(RowType::Z, "_x")?, half(RowType::X, "_z")?))
    }

    /// Merges identical check-matrix columns; see [`compress`](Self::compress).
    pub fn compress_columns(&self) -> Result<DecodingProblem> {
        Ok(self.compress()?.problem)
    }

    /// Merges groups of identical check-matrix columns into one column each.
    ///
    /// The representative of a group is its smallest column index and carries
    /// the probability that an odd number of the group's errors occur. Every
    /// group must also be identical in the action matrix. Columns that flip no
    /// detector are dropped when their action is trivial; otherwise the
    /// problem has an undetectable logical error and is rejected.
    pub fn compress(&self) -> Result<Compression> {
        let groups = self.check.identical_column_groups();
        let mut kept = Vec::with_capacity(groups.len());
        let mut kept_groups = Vec::with_capacity(groups.len());
        let mut p = Vec::with_capacity(groups.len());
        let mut dropped = Vec::new();
        for group in groups {
            let rep = group[0];
            let action_col = self.action.col(rep);
            if group[1..].iter().any(|&c| self.action.col(c) != action_col) {
                return Err(Error::ActionMismatch { group });
            }
            if self.check.col(rep).is_empty() {
                if !action_col.is_empty() {
                    return Err(Error::UndetectableLogical { cols: group });
                }
                dropped = group;
                continue;
            }
            let merged = if group.len() == 1 {
                self.p[rep]
            } else {
                odd_parity_probability(group.iter().map(|&c| self.p[c]))
            };
            kept.push(rep);
            p.push(merged);
            kept_groups.push(group);
        }
        let mut problem = Self::unchecked(
            self.name.clone(),
            self.check.select_cols(&kept),
            self.action.select_cols(&kept),
            p,
            self.check_types.clone(),
            self.action_types.clone(),
        )?;
        problem.description = self.description.clone();
        problem.validate()?;
        Ok(Compression {
            problem,
            groups: kept_groups,
            dropped,
        })
    }
}

fn rows_of_type(types: &[RowType], keep: RowType) -> Vec<usize> {
    types
        .iter()
        .enumerate()
        .filter(|(_, &t)| t == keep)
        .map(|(r, _)| r)
        .collect()
}

/// Probability that an odd number of independent events occur.
///
/// Folds `q ← q(1 − p) + p(1 − q)`, which equals `(1 − ∏(1 − 2p)) / 2` but
/// keeps full relative precision for tiny probabilities.
pub fn odd_parity_probability<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs
        .into_iter()
        .fold(0.0, |q, p| q * (1.0 - p) + p * (1.0 - q))
}

/// Result of [`DecodingProblem::compress`].
#[derive(Clone, Debug)]
pub struct Compression {
    pub problem: DecodingProblem,
    /// For each compressed column, the original columns merged into it.
    pub groups: Vec<Vec<usize>>,
    /// Original columns removed because they flip no detector.
    pub dropped: Vec<usize>,
}

impl Compression {
    /// Maps an error on the original problem to the compressed columns by
    /// taking the parity of each group.
    pub fn map_error(&self, error: &BitVector) -> BitVector {
        let bits: Vec<u8> = self
            .groups
            .iter()
            .map(|g| g.iter().filter(|&&c| error.get(c)).count() as u8 & 1)
            .collect();
        BitVector::from_bits(&bits)
    }
}

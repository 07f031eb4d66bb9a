//! Desk-scale phenomenological memory problems.
//!
//! Every builder follows the same layout. There are `rounds` measurement
//! rounds and the last one is noiseless. Before each round every data qubit
//! may flip (`p_data`); the outcome of every noisy round may flip
//! (`p_meas`). Detector `(s, t)` is the parity of stabilizer `s` between
//! rounds `t − 1` and `t` (round −1 is the deterministic preparation), so
//! `M = rounds × (stabilizer count)`. A data flip before round `t` fires the
//! detectors of its stabilizers in layer `t`; a measurement flip in round `t`
//! fires layers `t` and `t + 1`. Measurement-error columns of the final round
//! would never exist under a noiseless final round, so each stabilizer gets
//! `rounds − 1` of them.
//!
//! Columns are ordered round by round: data errors of round `t`, then the
//! measurement errors of round `t`.

use crate::error::{Error, Result};
use crate::gf2::SparseBinaryMatrix;
use crate::problem::{DecodingProblem, RowType};

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {p}")))
    }
}

/// One Pauli sector of a memory experiment: a stabilizer family detecting a
/// set of data-error columns.
pub(crate) struct Sector<'a> {
    pub stabilizers: &'a [Vec<usize>],
    pub row_type: RowType,
}

/// Round-repeated check and action matrices for a code given by stabilizer
/// sectors and data error types.
pub(crate) struct MemoryLayout<'a> {
    pub num_qubits: usize,
    pub sectors: Vec<Sector<'a>>,
    /// `(detecting sector, per-qubit logical rows toggled)` for each data
    /// error type.
    pub data_types: Vec<(usize, Vec<Vec<usize>>)>,
    pub logical_types: Vec<RowType>,
    pub rounds: usize,
    pub p_data: f64,
    pub p_meas: f64,
}

impl MemoryLayout<'_> {
    pub fn build(&self, name: String) -> Result<DecodingProblem> {
        let per_layer: usize = self.sectors.iter().map(|s| s.stabilizers.len()).sum();
        let offsets: Vec<usize> = self
            .sectors
            .iter()
            .scan(0, |acc, s| {
                let o = *acc;
                *acc += s.stabilizers.len();
                Some(o)
            })
            .collect();
        // qubit -> stabilizers containing it, per sector
        let mut touching: Vec<Vec<Vec<usize>>> = Vec::with_capacity(self.sectors.len());
        for sector in &self.sectors {
            let mut t = vec![Vec::new(); self.num_qubits];
            for (s, support) in sector.stabilizers.iter().enumerate() {
                for &q in support {
                    t[q].push(s);
                }
            }
            touching.push(t);
        }

        let mut check_entries = Vec::new();
        let mut action_entries = Vec::new();
        let mut p = Vec::new();
        let mut col = 0usize;
        for t in 0..self.rounds {
            let layer = t * per_layer;
            for (sector, logicals) in &self.data_types {
                for q in 0..self.num_qubits {
                    for &s in &touching[*sector][q] {
                        check_entries.push((layer + offsets[*sector] + s, col));
                    }
                    for &l in &logicals[q] {
                        action_entries.push((l, col));
                    }
                    p.push(self.p_data);
                    col += 1;
                }
            }
            if t + 1 < self.rounds {
                for (k, sector) in self.sectors.iter().enumerate() {
                    for s in 0..sector.stabilizers.len() {
                        check_entries.push((layer + offsets[k] + s, col));
                        check_entries.push((layer + per_layer + offsets[k] + s, col));
                        p.push(self.p_meas);
                        col += 1;
                    }
                }
            }
        }
        let rows = per_layer * self.rounds;
        let check = SparseBinaryMatrix::from_entries(rows, col, check_entries)?;
        let action = SparseBinaryMatrix::from_entries(self.logical_types.len(), col, action_entries)?;
        let mut check_types = Vec::with_capacity(rows);
        for _ in 0..self.rounds {
            for sector in &self.sectors {
                check_types.extend(std::iter::repeat_n(sector.row_type, sector.stabilizers.len()));
            }
        }
        DecodingProblem::with_types(name, check, action, p, check_types, self.logical_types.clone())
    }
}

/// Repetition-code memory: `n` data bits, `n − 1` neighbour parity checks per
/// round, and one logical row marking every data flip of bit 0.
///
/// Dimensions: `M = (n − 1)·rounds`, `N = n·rounds + (n − 1)·(rounds − 1)`.
pub fn build_repetition(n: usize, p_data: f64, p_meas: f64, rounds: usize) -> Result<DecodingProblem> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("repetition length must be at least 2, got {n}")));
    }
    if rounds < 1 {
        return Err(Error::InvalidParameter("at least one round is required".into()));
    }
    check_probability("p_data", p_data)?;
    check_probability("p_meas", p_meas)?;
    let checks: Vec<Vec<usize>> = (0..n - 1).map(|i| vec![i, i + 1]).collect();
    let mut logicals = vec![Vec::new(); n];
    logicals[0].push(0);
    let layout = MemoryLayout {
        num_qubits: n,
        sectors: vec![Sector {
            stabilizers: &checks,
            row_type: RowType::Untyped,
        }],
        data_types: vec![(0, logicals)],
        logical_types: vec![RowType::Untyped],
        rounds,
        p_data,
        p_meas,
    };
    Ok(layout
        .build(format!("repetition_n{n}_r{rounds}"))?
        .with_description(format!(
            "phenomenological repetition code n={n} rounds={rounds} p_data={p_data:e} p_meas={p_meas:e}"
        )))
}

/// Stabilizer supports of the distance-`d` rotated surface code, as
/// `(x_stabilizers, z_stabilizers)` over qubits `r·d + c`.
///
/// Weight-two X stabilizers sit on the top and bottom boundaries, weight-two
/// Z stabilizers on the left and right.
pub fn rotated_surface_stabilizers(d: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let di = d as i64;
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for r in -1..di {
        for c in -1..di {
            let is_x = (r + c).rem_euclid(2) == 0;
            let bulk_r = (0..di - 1).contains(&r);
            let bulk_c = (0..di - 1).contains(&c);
            let keep = match (bulk_r, bulk_c) {
                (true, true) => true,
                (false, true) => is_x,
                (true, false) => !is_x,
                (false, false) => false,
            };
            if !keep {
                continue;
            }
            let mut support = Vec::with_capacity(4);
            for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let (qr, qc) = (r + dr, c + dc);
                if (0..di).contains(&qr) && (0..di).contains(&qc) {
                    support.push((qr * di + qc) as usize);
                }
            }
            if is_x {
                xs.push(support);
            } else {
                zs.push(support);
            }
        }
    }
    (xs, zs)
}

/// Logical representatives `(x_logical, z_logical)` matching
/// [`rotated_surface_stabilizers`]: X along the first column, Z along the
/// first row.
pub fn rotated_surface_logicals(d: usize) -> (Vec<usize>, Vec<usize>) {
    ((0..d).map(|r| r * d).collect(), (0..d).collect())
}

/// Rotated surface-code memory with independent X and Z data flips and
/// measurement flips on both stabilizer types.
///
/// Detector rows of each round are the X stabilizers followed by the Z
/// stabilizers and carry their type tag. Action row 0 is the X logical
/// (tagged X, toggled by Z data errors) and row 1 the Z logical (tagged Z,
/// toggled by X data errors), so [`DecodingProblem::xz_split`] applies.
/// With `rounds == 1` this is the code-capacity problem.
pub fn build_surface_phenomenological(
    d: usize,
    rounds: usize,
    p_data: f64,
    p_meas: f64,
) -> Result<DecodingProblem> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("surface distance must be odd and at least 3, got {d}")));
    }
    if rounds < 1 {
        return Err(Error::InvalidParameter("at least one round is required".into()));
    }
    check_probability("p_data", p_data)?;
    check_probability("p_meas", p_meas)?;
    let (xs, zs) = rotated_surface_stabilizers(d);
    let (x_logical, z_logical) = rotated_surface_logicals(d);
    let n = d * d;
    let mut toggles_x_logical = vec![Vec::new(); n];
    for &q in &x_logical {
        toggles_x_logical[q].push(0);
    }
    let mut toggles_z_logical = vec![Vec::new(); n];
    for &q in &z_logical {
        toggles_z_logical[q].push(1);
    }
    let layout = MemoryLayout {
        num_qubits: n,
        sectors: vec![
            Sector {
                stabilizers: &xs,
                row_type: RowType::X,
            },
            Sector {
                stabilizers: &zs,
                row_type: RowType::Z,
            },
        ],
        // X data errors are seen by Z stabilizers and flip the Z logical;
        // Z data errors by X stabilizers and the X logical.
        data_types: vec![(1, toggles_z_logical), (0, toggles_x_logical)],
        logical_types: vec![RowType::X, RowType::Z],
        rounds,
        p_data,
        p_meas,
    };
    Ok(layout
        .build(format!("surface_d{d}_r{rounds}"))?
        .with_description(format!(
            "phenomenological rotated surface code d={d} rounds={rounds} p_data={p_data:e} p_meas={p_meas:e}"
        )))
}

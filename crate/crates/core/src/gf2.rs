//! Sparse GF(2) vectors and matrices.
//!
//! Matrices are immutable once built and keep both a row view and a column
//! view of the same entry set, in compressed (offset + index) form. Message
//! passing walks neighbourhoods in both directions, so both views are built
//! once up front.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A binary vector stored as the sorted list of its one positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    support: Vec<usize>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            support: Vec::new(),
        }
    }

    /// Builds a vector from a strictly increasing list of one positions.
    pub fn from_support(len: usize, support: Vec<usize>) -> Result<Self> {
        for (k, w) in support.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(Error::UnsortedSupport { position: k + 1 });
            }
        }
        if let Some(&last) = support.last() {
            if last >= len {
                return Err(Error::IndexOutOfRange { index: last, len });
            }
        }
        Ok(BitVector { len, support })
    }

    /// Builds a vector from any iterator of positions; duplicates cancel in pairs.
    pub fn from_positions<I: IntoIterator<Item = usize>>(len: usize, positions: I) -> Result<Self> {
        let mut pos: Vec<usize> = positions.into_iter().collect();
        pos.sort_unstable();
        let mut support = Vec::with_capacity(pos.len());
        let mut k = 0;
        while k < pos.len() {
            let mut run = 1;
            while k + run < pos.len() && pos[k + run] == pos[k] {
                run += 1;
            }
            if run % 2 == 1 {
                support.push(pos[k]);
            }
            k += run;
        }
        BitVector::from_support(len, support)
    }

    pub fn from_bits<T: Copy + Into<u8>>(bits: &[T]) -> Self {
        let support = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b.into() != 0)
            .map(|(i, _)| i)
            .collect();
        BitVector {
            len: bits.len(),
            support,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let support = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect();
        BitVector {
            len: bits.len(),
            support,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, index: usize) -> bool {
        self.support.binary_search(&index).is_ok()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        let mut bits = vec![0u8; self.len];
        for &i in &self.support {
            bits[i] = 1;
        }
        bits
    }

    /// Symmetric difference of the supports.
    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len != other.len {
            return Err(Error::dimension("xor operand length", self.len, other.len));
        }
        let (a, b) = (&self.support, &other.support);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(BitVector {
            len: self.len,
            support: out,
        })
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut next = self.support.iter().peekable();
        for i in 0..self.len {
            if next.peek() == Some(&&i) {
                next.next();
                f.write_str("1")?;
            } else {
                f.write_str("0")?;
            }
        }
        Ok(())
    }
}

impl FromStr for BitVector {
    type Err = Error;

    /// Parses a string of `0`/`1` characters; surrounding whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut support = Vec::new();
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => support.push(i),
                other => {
                    return Err(Error::parse(
                        1,
                        format!("unexpected character {other:?} at position {i} in bit string"),
                    ))
                }
            }
        }
        Ok(BitVector {
            len: s.chars().count(),
            support,
        })
    }
}

// Serialised as the same 0/1 string as `Display`.
impl serde::Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BitVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sparse binary matrix with consistent row and column adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparseBinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseBinaryMatrix {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            row_idx: Vec::new(),
            col_ptr: vec![0; cols + 1],
            col_idx: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col)` coordinates. Entries may come in any
    /// order; a repeated coordinate is rejected.
    pub fn from_entries<I>(rows: usize, cols: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut per_row: Vec<Vec<usize>> = vec![Vec::new(); rows];
        for (r, c) in entries {
            if r >= rows {
                return Err(Error::IndexOutOfRange { index: r, len: rows });
            }
            if c >= cols {
                return Err(Error::IndexOutOfRange { index: c, len: cols });
            }
            per_row[r].push(c);
        }
        for (r, row) in per_row.iter_mut().enumerate() {
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEntry { row: r, col: w[0] });
            }
        }
        Ok(Self::from_sorted_rows(cols, &per_row))
    }

    /// Builds a matrix from per-row column lists.
    pub fn from_rows(cols: usize, rows: &[Vec<usize>]) -> Result<Self> {
        let entries = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&c| (r, c)));
        Self::from_entries(rows.len(), cols, entries)
    }

    /// Builds a matrix from a dense 0/1 row-major table.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut lists = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != cols {
                return Err(Error::dimension("dense row length", cols, row.len()));
            }
            lists.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &b)| b != 0)
                    .map(|(c, _)| c)
                    .collect::<Vec<_>>(),
            );
        }
        Ok(Self::from_sorted_rows(cols, &lists))
    }

    // Rows must already be sorted and duplicate free.
    fn from_sorted_rows(cols: usize, rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut row_idx = Vec::new();
        let mut col_count = vec![0usize; cols];
        row_ptr.push(0);
        for row in rows {
            for &c in row {
                col_count[c] += 1;
            }
            row_idx.extend_from_slice(row);
            row_ptr.push(row_idx.len());
        }
        let mut col_ptr = Vec::with_capacity(cols + 1);
        col_ptr.push(0);
        for &n in &col_count {
            col_ptr.push(col_ptr.last().unwrap() + n);
        }
        let mut fill = col_ptr[..cols].to_vec();
        let mut col_idx = vec![0usize; row_idx.len()];
        for (r, row) in rows.iter().enumerate() {
            for &c in row {
                col_idx[fill[c]] = r;
                fill[c] += 1;
            }
        }
        SparseBinaryMatrix {
            rows: rows.len(),
            cols,
            row_ptr,
            row_idx,
            col_ptr,
            col_idx,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Sorted column indices of row `r`.
    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    /// Sorted row indices of column `c`.
    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_idx[self.col_ptr[c]..self.col_ptr[c + 1]]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row(r).binary_search(&c).is_ok()
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).iter().map(move |&c| (r, c)))
    }

    /// Entries in column-major order.
    pub fn entries_by_col(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.cols).flat_map(move |c| self.col(c).iter().map(move |&r| (r, c)))
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut out = vec![vec![0u8; self.cols]; self.rows];
        for (r, c) in self.entries() {
            out[r][c] = 1;
        }
        out
    }

    /// `M·v` over GF(2), accumulated through the column view of `v`'s support.
    pub fn matvec(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.cols {
            return Err(Error::dimension("matvec vector length", self.cols, v.len()));
        }
        let mut acc = vec![0u8; self.rows];
        for &c in v.support() {
            for &r in self.col(c) {
                acc[r] ^= 1;
            }
        }
        Ok(BitVector::from_bits(&acc))
    }

    pub fn transpose(&self) -> SparseBinaryMatrix {
        SparseBinaryMatrix {
            rows: self.cols,
            cols: self.rows,
            row_ptr: self.col_ptr.clone(),
            row_idx: self.col_idx.clone(),
            col_ptr: self.row_ptr.clone(),
            col_idx: self.row_idx.clone(),
        }
    }

    /// `self · otherᵀ` over GF(2).
    pub fn mul_transpose(&self, other: &SparseBinaryMatrix) -> Result<SparseBinaryMatrix> {
        if self.cols != other.cols {
            return Err(Error::dimension("mul_transpose column count", self.cols, other.cols));
        }
        let mut rows = Vec::with_capacity(self.rows);
        let mut acc = vec![0u8; other.rows];
        for r in 0..self.rows {
            let mut touched = Vec::new();
            for &c in self.row(r) {
                for &o in other.col(c) {
                    if acc[o] == 0 {
                        touched.push(o);
                    }
                    acc[o] ^= 1;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let row: Vec<usize> = touched.iter().copied().filter(|&o| acc[o] == 1).collect();
            for &o in &touched {
                acc[o] = 0;
            }
            rows.push(row);
        }
        Ok(Self::from_sorted_rows(other.rows, &rows))
    }

    /// Sub-matrix keeping the listed rows, in the listed order.
    pub fn select_rows(&self, keep: &[usize]) -> SparseBinaryMatrix {
        let rows: Vec<Vec<usize>> = keep.iter().map(|&r| self.row(r).to_vec()).collect();
        Self::from_sorted_rows(self.cols, &rows)
    }

    /// Sub-matrix keeping the listed columns (which must be increasing),
    /// renumbered `0..keep.len()`.
    pub fn select_cols(&self, keep: &[usize]) -> SparseBinaryMatrix {
        let mut new_index = vec![usize::MAX; self.cols];
        for (k, &c) in keep.iter().enumerate() {
            new_index[c] = k;
        }
        let rows: Vec<Vec<usize>> = (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .filter_map(|&c| (new_index[c] != usize::MAX).then_some(new_index[c]))
                    .collect()
            })
            .collect();
        Self::from_sorted_rows(keep.len(), &rows)
    }

    /// Partition of the columns into maximal groups of identical columns,
    /// ordered by each group's smallest index. Columns are compared by their
    /// exact sorted row lists.
    pub fn identical_column_groups(&self) -> Vec<Vec<usize>> {
        let mut by_pattern: HashMap<&[usize], usize> = HashMap::with_capacity(self.cols);
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for c in 0..self.cols {
            let g = *by_pattern.entry(self.col(c)).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(c);
        }
        groups
    }

    pub fn max_row_weight(&self) -> usize {
        (0..self.rows).map(|r| self.row(r).len()).max().unwrap_or(0)
    }

    pub fn max_col_weight(&self) -> usize {
        (0..self.cols).map(|c| self.col(c).len()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv(bits: &[u8]) -> BitVector {
        BitVector::from_bits(bits)
    }

    fn rep3() -> SparseBinaryMatrix {
        SparseBinaryMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap()
    }

    #[test]
    fn matvec_hand_examples() {
        let h = rep3();
        assert_eq!(h.matvec(&bv(&[1, 0, 0])).unwrap(), bv(&[1, 0]));
        assert_eq!(h.matvec(&bv(&[1, 1, 1])).unwrap(), bv(&[0, 0]));
        assert_eq!(h.matvec(&BitVector::zeros(3)).unwrap(), BitVector::zeros(2));
    }

    #[test]
    fn matvec_rejects_wrong_length() {
        assert!(matches!(
            rep3().matvec(&BitVector::zeros(4)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn xor_examples() {
        let a = bv(&[1, 0, 1]);
        assert_eq!(a.xor(&bv(&[1, 1, 0])).unwrap(), bv(&[0, 1, 1]));
        assert!(a.xor(&a).unwrap().is_zero());
        assert_eq!(a.xor(&BitVector::zeros(3)).unwrap(), a);
        assert!(a.xor(&BitVector::zeros(2)).is_err());
    }

    #[test]
    fn support_must_be_sorted_and_in_range() {
        assert!(BitVector::from_support(4, vec![0, 2]).is_ok());
        assert!(BitVector::from_support(4, vec![2, 2]).is_err());
        assert!(BitVector::from_support(4, vec![3, 1]).is_err());
        assert!(BitVector::from_support(4, vec![4]).is_err());
        assert_eq!(
            BitVector::from_positions(5, [3, 1, 3, 3, 0, 0]).unwrap().support(),
            &[1, 3]
        );
    }

    #[test]
    fn bit_string_round_trip() {
        let v: BitVector = "01101".parse().unwrap();
        assert_eq!(v.support(), &[1, 2, 4]);
        assert_eq!(v.to_string(), "01101");
        assert!("01x".parse::<BitVector>().is_err());
    }

    #[test]
    fn duplicate_entries_rejected() {
        let err = SparseBinaryMatrix::from_entries(2, 2, [(0, 1), (1, 0), (0, 1)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEntry { row: 0, col: 1 }));
    }

    #[test]
    fn column_groups_examples() {
        let m = SparseBinaryMatrix::from_dense(&[vec![1, 1], vec![0, 0]]).unwrap();
        assert_eq!(m.identical_column_groups(), vec![vec![0, 1]]);

        let eye = SparseBinaryMatrix::from_rows(3, &[vec![0], vec![1], vec![2]]).unwrap();
        assert_eq!(eye.identical_column_groups(), vec![vec![0], vec![1], vec![2]]);

        let m = SparseBinaryMatrix::from_dense(&[vec![1, 0, 1], vec![1, 1, 1]]).unwrap();
        assert_eq!(m.identical_column_groups(), vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn transpose_and_product() {
        let h = rep3();
        let t = h.transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.row(1), &[0, 1]);
        let p = h.mul_transpose(&h).unwrap();
        // [[1,1,0],[0,1,1]] · itself^T = [[0,1],[1,0]]
        assert_eq!(p.to_dense(), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn select_rows_and_cols() {
        let m = SparseBinaryMatrix::from_dense(&[vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 0]]).unwrap();
        assert_eq!(m.select_rows(&[2, 0]).to_dense(), vec![vec![1, 1, 0], vec![1, 0, 1]]);
        assert_eq!(
            m.select_cols(&[0, 2]).to_dense(),
            vec![vec![1, 1], vec![0, 1], vec![1, 0]]
        );
    }

    fn arb_matrix() -> impl Strategy<Value = Vec<Vec<u8>>> {
        (1usize..8, 1usize..10).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, c), r)
        })
    }

    proptest! {
        #[test]
        fn matvec_is_linear(dense in arb_matrix(), seed_a in any::<u64>(), seed_b in any::<u64>()) {
            let m = SparseBinaryMatrix::from_dense(&dense).unwrap();
            let n = m.cols();
            let pick = |seed: u64| BitVector::from_bits(
                &(0..n).map(|j| ((seed >> (j % 64)) & 1) as u8).collect::<Vec<_>>());
            let (a, b) = (pick(seed_a), pick(seed_b));
            let lhs = m.matvec(&a.xor(&b).unwrap()).unwrap();
            let rhs = m.matvec(&a).unwrap().xor(&m.matvec(&b).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn row_and_column_views_agree(dense in arb_matrix()) {
            let m = SparseBinaryMatrix::from_dense(&dense).unwrap();
            let mut by_rows: Vec<_> = m.entries().collect();
            let mut by_cols: Vec<_> = m.entries_by_col().collect();
            by_rows.sort_unstable();
            by_cols.sort_unstable();
            prop_assert_eq!(by_rows, by_cols);
            for (r, row) in dense.iter().enumerate() {
                for (c, &b) in row.iter().enumerate() {
                    prop_assert_eq!(m.get(r, c), b == 1);
                }
            }
        }

        #[test]
        fn column_groups_form_a_partition(dense in arb_matrix()) {
            let m = SparseBinaryMatrix::from_dense(&dense).unwrap();
            let groups = m.identical_column_groups();
            let mut seen = vec![false; m.cols()];
            for g in &groups {
                for &c in g {
                    prop_assert!(!seen[c]);
                    seen[c] = true;
                    prop_assert_eq!(m.col(c), m.col(g[0]));
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
            for w in groups.windows(2) {
                prop_assert!(w[0][0] < w[1][0]);
            }
            for (a, ga) in groups.iter().enumerate() {
                for gb in &groups[a + 1..] {
                    prop_assert_ne!(m.col(ga[0]), m.col(gb[0]));
                }
            }
        }
    }
}

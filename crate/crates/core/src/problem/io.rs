//! Problem interchange format.
//!
//! A problem file is UTF-8 text made of tagged sections, each introduced by
//! a line starting with `@`:
//!
//! ```text
//! %%DecodingProblem 1
//! @header
//! name = "surface_d5_r6_x"
//! description = "..."
//! rows = 72
//! cols = 210
//! actions = 1
//! check_types = "ZZZ…"      # one of X, Z, . per check row (optional)
//! action_types = "Z"        # one of X, Z, . per action row (optional)
//! @check_matrix
//! %%MatrixMarket matrix coordinate pattern general
//! 72 210 420
//! 1 1
//! …
//! @action_matrix
//! %%MatrixMarket matrix coordinate pattern general
//! 1 210 5
//! …
//! @priors
//! 210
//! 3e-2
//! …
//! @end
//! ```
//!
//! The header is TOML. Both matrices are Matrix Market coordinate pattern
//! blocks with 1-based indices, written in row-major order; `%` lines inside
//! a block are comments. Priors are one decimal per line, written in the
//! shortest form that parses back to the same `f64`, so a save/load round
//! trip is bit-exact.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::SparseBinaryMatrix;
use crate::problem::{DecodingProblem, RowType};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "%%DecodingProblem";
const MM_BANNER: &str = "%%MatrixMarket matrix coordinate pattern general";

#[derive(Serialize, Deserialize)]
struct Header {
    name: String,
    #[serde(default)]
    description: String,
    rows: usize,
    cols: usize,
    actions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    check_types: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_types: Option<String>,
}

fn type_string(types: &[RowType]) -> Option<String> {
    if types.iter().all(|&t| t == RowType::Untyped) {
        None
    } else {
        Some(types.iter().map(|t| t.as_char()).collect())
    }
}

pub fn write_problem<W: Write>(problem: &DecodingProblem, out: &mut W) -> std::io::Result<()> {
    let header = Header {
        name: problem.name().to_string(),
        description: problem.description().to_string(),
        rows: problem.num_checks(),
        cols: problem.num_errors(),
        actions: problem.num_actions(),
        check_types: type_string(problem.check_types()),
        action_types: type_string(problem.action_types()),
    };
    let header = toml::to_string(&header).map_err(std::io::Error::other)?;
    writeln!(out, "{MAGIC} {FORMAT_VERSION}")?;
    writeln!(out, "@header")?;
    out.write_all(header.as_bytes())?;
    writeln!(out, "@check_matrix")?;
    write_matrix(problem.check_matrix(), out)?;
    writeln!(out, "@action_matrix")?;
    write_matrix(problem.action_matrix(), out)?;
    writeln!(out, "@priors")?;
    writeln!(out, "{}", problem.num_errors())?;
    let mut line = String::new();
    for p in problem.probabilities() {
        line.clear();
        write!(line, "{p:e}").expect("formatting into a String");
        writeln!(out, "{line}")?;
    }
    writeln!(out, "@end")
}

fn write_matrix<W: Write>(m: &SparseBinaryMatrix, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{MM_BANNER}")?;
    writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (r, c) in m.entries() {
        writeln!(out, "{} {}", r + 1, c + 1)?;
    }
    Ok(())
}

pub fn save_problem(problem: &DecodingProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write_problem(problem, &mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<DecodingProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problem(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        let (i, l) = self.inner.next()?;
        self.last = i + 1;
        Some((i + 1, l))
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.last;
        self.next_line()
            .ok_or_else(|| Error::parse(last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn expect_section(&mut self, tag: &str) -> Result<()> {
        let (n, line) = self.expect_line(tag)?;
        if line.trim() != tag {
            return Err(Error::parse(n, format!("expected section {tag}, found {line:?}")));
        }
        Ok(())
    }

    /// Next line that is neither blank nor a `%` comment.
    fn next_data(&mut self, what: &str) -> Result<(usize, &'a str)> {
        loop {
            let (n, line) = self.expect_line(what)?;
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('%') {
                return Ok((n, t));
            }
        }
    }
}

fn parse_numbers<const K: usize>(line: &str, n: usize) -> Result<[usize; K]> {
    let mut out = [0usize; K];
    let mut it = line.split_whitespace();
    for slot in &mut out {
        *slot = it
            .next()
            .ok_or_else(|| Error::parse(n, format!("expected {K} integers")))?
            .parse()
            .map_err(|e| Error::parse(n, format!("bad integer: {e}")))?;
    }
    if it.next().is_some() {
        return Err(Error::parse(n, format!("expected exactly {K} integers")));
    }
    Ok(out)
}

fn parse_matrix(lines: &mut Lines<'_>, rows: usize, cols: usize, what: &str) -> Result<SparseBinaryMatrix> {
    let (n, banner) = lines.expect_line("Matrix Market banner")?;
    let banner_words: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    let expected: Vec<String> = MM_BANNER.split_whitespace().map(str::to_ascii_lowercase).collect();
    if banner_words != expected {
        return Err(Error::parse(n, format!("{what}: expected {MM_BANNER:?}")));
    }
    let (n, size) = lines.next_data("matrix size line")?;
    let [r, c, nnz] = parse_numbers::<3>(size, n)?;
    if r != rows || c != cols {
        return Err(Error::parse(
            n,
            format!("{what} is {r}×{c} but the header declares {rows}×{cols}"),
        ));
    }
    let mut entries = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let (n, line) = lines.next_data("matrix entry")?;
        let [i, j] = parse_numbers::<2>(line, n)?;
        if i == 0 || i > rows || j == 0 || j > cols {
            return Err(Error::parse(n, format!("{what} entry ({i}, {j}) outside {rows}×{cols}")));
        }
        entries.push((i - 1, j - 1));
    }
    SparseBinaryMatrix::from_entries(rows, cols, entries).map_err(|e| match e {
        Error::DuplicateEntry { row, col } => Error::parse(
            lines.last,
            format!("{what} has a duplicate entry at row {}, column {}", row + 1, col + 1),
        ),
        other => other,
    })
}

fn parse_types(s: Option<&str>, len: usize, n: usize, what: &str) -> Result<Vec<RowType>> {
    match s {
        None => Ok(vec![RowType::Untyped; len]),
        Some(s) => {
            let types = s
                .chars()
                .enumerate()
                .map(|(i, c)| {
                    RowType::from_char(c)
                        .ok_or_else(|| Error::parse(n, format!("{what}: bad type tag {c:?} for row {i}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if types.len() != len {
                return Err(Error::parse(n, format!("{what} has {} tags for {len} rows", types.len())));
            }
            Ok(types)
        }
    }
}

pub fn parse_problem(text: &str) -> Result<DecodingProblem> {
    let mut lines = Lines::new(text);
    let (n, magic) = lines.expect_line("file banner")?;
    let mut words = magic.split_whitespace();
    if words.next() != Some(MAGIC) {
        return Err(Error::parse(n, format!("missing {MAGIC} banner")));
    }
    match words.next().and_then(|v| v.parse::<u32>().ok()) {
        Some(FORMAT_VERSION) => {}
        other => return Err(Error::parse(n, format!("unsupported format version {other:?}"))),
    }

    lines.expect_section("@header")?;
    let header_start = lines.last + 1;
    let mut header_text = String::new();
    loop {
        let (n, line) = lines.expect_line("@check_matrix")?;
        if line.trim() == "@check_matrix" {
            break;
        }
        if line.starts_with('@') {
            return Err(Error::parse(n, format!("expected @check_matrix, found {line:?}")));
        }
        header_text.push_str(line);
        header_text.push('\n');
    }
    let header: Header =
        toml::from_str(&header_text).map_err(|e| Error::parse(header_start, format!("header: {e}")))?;
    let check = parse_matrix(&mut lines, header.rows, header.cols, "check matrix")?;
    lines.expect_section("@action_matrix")?;
    let action = parse_matrix(&mut lines, header.actions, header.cols, "action matrix")?;
    lines.expect_section("@priors")?;
    let (n, count) = lines.next_data("prior count")?;
    let [count] = parse_numbers::<1>(count, n)?;
    if count != header.cols {
        return Err(Error::parse(
            n,
            format!("{count} priors for {} columns", header.cols),
        ));
    }
    let mut p = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, line) = lines.next_data("prior value")?;
        let v: f64 = line
            .parse()
            .map_err(|e| Error::parse(n, format!("bad probability {line:?}: {e}")))?;
        p.push(v);
    }
    lines.expect_section("@end")?;

    let check_types = parse_types(header.check_types.as_deref(), header.rows, header_start, "check_types")?;
    let action_types = parse_types(header.action_types.as_deref(), header.actions, header_start, "action_types")?;
    Ok(
        DecodingProblem::with_types(header.name, check, action, p, check_types, action_types)?
            .with_description(header.description),
    )
}

//! Matrix Market reader and writer.
//!
//! Supported: `matrix coordinate {real|integer|pattern} {general|symmetric|skew-symmetric}`
//! and `matrix array {real|integer} {general|symmetric|skew-symmetric}`.
//! Header tokens are case-insensitive. Coordinate entries at a repeated
//! position are summed; pattern entries have value 1.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;

/// Largest dimension accepted from a file. Row pointers alone cost `8 d` bytes.
pub const MAX_DIM: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixMarketHeader {
    pub format: Format,
    pub field: Field,
    pub symmetry: Symmetry,
}

impl MatrixMarketHeader {
    pub fn parse(line: &str) -> Result<Self> {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some(b) if b.eq_ignore_ascii_case("%%MatrixMarket") => {}
            _ => return Err(Error::parse(1, "missing %%MatrixMarket banner")),
        }
        let mut next = |what: &str| {
            tok.next()
                .map(|t| t.to_ascii_lowercase())
                .ok_or_else(|| Error::parse(1, format!("banner is missing the {what}")))
        };
        let object = next("object")?;
        if object != "matrix" {
            return Err(Error::parse(1, format!("unsupported object '{object}'")));
        }
        let format = match next("format")?.as_str() {
            "coordinate" => Format::Coordinate,
            "array" => Format::Array,
            other => return Err(Error::parse(1, format!("unknown format '{other}'"))),
        };
        let field = match next("field")?.as_str() {
            "real" | "double" => Field::Real,
            "integer" => Field::Integer,
            "pattern" => Field::Pattern,
            "complex" => return Err(Error::UnsupportedField("complex".into())),
            other => return Err(Error::parse(1, format!("unknown field '{other}'"))),
        };
        let symmetry = match next("symmetry")?.as_str() {
            "general" => Symmetry::General,
            "symmetric" => Symmetry::Symmetric,
            "skew-symmetric" => Symmetry::SkewSymmetric,
            "hermitian" => return Err(Error::UnsupportedField("hermitian".into())),
            other => return Err(Error::parse(1, format!("unknown symmetry '{other}'"))),
        };
        if format == Format::Array && field == Field::Pattern {
            return Err(Error::parse(1, "pattern field is not valid for array format"));
        }
        Ok(Self {
            format,
            field,
            symmetry,
        })
    }
}

struct Lines<R> {
    inner: R,
    buf: String,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next line that is neither blank nor a `%` comment.
    fn next_data(&mut self) -> Result<Option<(usize, &str)>> {
        loop {
            self.buf.clear();
            if self.inner.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let t = self.buf.trim();
            if !t.is_empty() && !t.starts_with('%') {
                break;
            }
        }
        Ok(Some((self.line_no, self.buf.trim())))
    }

    fn size_line(&mut self) -> Result<(usize, String)> {
        match self.next_data()? {
            Some((line, text)) => Ok((line, text.to_owned())),
            None => Err(Error::parse(self.line_no + 1, "missing size line")),
        }
    }
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let t = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    t.parse::<usize>()
        .map_err(|_| Error::parse(line, format!("invalid {what} '{t}'")))
}

fn parse_value(tok: Option<&str>, line: usize, field: Field) -> Result<f64> {
    let t = tok.ok_or_else(|| Error::parse(line, "missing value"))?;
    let v = match field {
        Field::Integer => t
            .parse::<i64>()
            .map(|v| v as f64)
            .map_err(|_| Error::parse(line, format!("invalid integer value '{t}'")))?,
        _ => t
            .parse::<f64>()
            .map_err(|_| Error::parse(line, format!("invalid real value '{t}'")))?,
    };
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value '{t}'")));
    }
    Ok(v)
}

fn check_square(rows: usize, cols: usize) -> Result<usize> {
    if rows != cols {
        return Err(Error::UnsupportedShape { rows, cols });
    }
    if rows == 0 || rows > MAX_DIM {
        return Err(Error::invalid(format!(
            "matrix dimension {rows} outside supported range 1..={MAX_DIM}"
        )));
    }
    Ok(rows)
}

/// Reads a square matrix. Coordinate files produce sparse storage, array files dense.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<MatrixHandle> {
    let mut lines = Lines {
        inner: reader,
        buf: String::new(),
        line_no: 0,
    };
    lines.buf.clear();
    if lines.inner.read_line(&mut lines.buf)? == 0 {
        return Err(Error::parse(1, "empty input"));
    }
    lines.line_no = 1;
    let header = MatrixMarketHeader::parse(&lines.buf)?;
    match header.format {
        Format::Coordinate => read_coordinate(&mut lines, header),
        Format::Array => read_array(&mut lines, header),
    }
}

fn read_coordinate<R: BufRead>(lines: &mut Lines<R>, header: MatrixMarketHeader) -> Result<MatrixHandle> {
    let (line, size) = lines.size_line()?;
    let mut tok = size.split_whitespace();
    let rows = parse_usize(tok.next(), line, "row count")?;
    let cols = parse_usize(tok.next(), line, "column count")?;
    let nnz = parse_usize(tok.next(), line, "entry count")?;
    if tok.next().is_some() {
        return Err(Error::parse(line, "unexpected token on size line"));
    }
    let d = check_square(rows, cols)?;

    let mut triplets = Vec::with_capacity(nnz.min(1 << 20));
    let mut seen = 0usize;
    while let Some((line, text)) = lines.next_data()? {
        if seen == nnz {
            return Err(Error::parse(line, format!("more than the declared {nnz} entries")));
        }
        let mut tok = text.split_whitespace();
        let i = parse_usize(tok.next(), line, "row index")?;
        let j = parse_usize(tok.next(), line, "column index")?;
        if i == 0 || j == 0 || i > d || j > d {
            return Err(Error::parse(line, format!("index ({i}, {j}) outside 1..={d}")));
        }
        let v = match header.field {
            Field::Pattern => 1.0,
            f => parse_value(tok.next(), line, f)?,
        };
        if tok.next().is_some() {
            return Err(Error::parse(line, "unexpected trailing token"));
        }
        let (i, j) = (i - 1, j - 1);
        triplets.push((i, j, v));
        if i != j {
            match header.symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((j, i, v)),
                Symmetry::SkewSymmetric => triplets.push((j, i, -v)),
            }
        } else if header.symmetry == Symmetry::SkewSymmetric {
            return Err(Error::parse(line, "skew-symmetric matrix with a diagonal entry"));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::parse(
            lines.line_no,
            format!("expected {nnz} entries, found {seen}"),
        ));
    }
    MatrixHandle::from_triplets(d, triplets)
}

fn read_array<R: BufRead>(lines: &mut Lines<R>, header: MatrixMarketHeader) -> Result<MatrixHandle> {
    let (line, size) = lines.size_line()?;
    let mut tok = size.split_whitespace();
    let rows = parse_usize(tok.next(), line, "row count")?;
    let cols = parse_usize(tok.next(), line, "column count")?;
    if tok.next().is_some() {
        return Err(Error::parse(line, "unexpected token on size line"));
    }
    let d = check_square(rows, cols)?;

    // Column-major; symmetric variants list only the lower triangle
    // (strictly lower for skew-symmetric).
    let positions: Box<dyn Iterator<Item = (usize, usize)>> = match header.symmetry {
        Symmetry::General => Box::new((0..d).flat_map(move |j| (0..d).map(move |i| (i, j)))),
        Symmetry::Symmetric => Box::new((0..d).flat_map(move |j| (j..d).map(move |i| (i, j)))),
        Symmetry::SkewSymmetric => Box::new((0..d).flat_map(move |j| (j + 1..d).map(move |i| (i, j)))),
    };
    let mut triplets = Vec::new();
    let mut positions = positions.peekable();
    while let Some((line, text)) = lines.next_data()? {
        let (i, j) = positions
            .next()
            .ok_or_else(|| Error::parse(line, "more values than the matrix holds"))?;
        let mut tok = text.split_whitespace();
        let v = parse_value(tok.next(), line, header.field)?;
        if tok.next().is_some() {
            return Err(Error::parse(line, "expected one value per line"));
        }
        triplets.push((i, j, v));
        if i != j {
            match header.symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((j, i, v)),
                Symmetry::SkewSymmetric => triplets.push((j, i, -v)),
            }
        }
    }
    if positions.peek().is_some() {
        return Err(Error::parse(lines.line_no, "fewer values than the matrix holds"));
    }
    Ok(MatrixHandle::from_triplets(d, triplets)?.to_dense())
}

pub fn parse_matrix_market(bytes: &[u8]) -> Result<MatrixHandle> {
    read_matrix_market(bytes)
}

pub fn read_matrix_market_path(path: impl AsRef<Path>) -> Result<MatrixHandle> {
    let file = File::open(path)?;
    read_matrix_market(BufReader::new(file))
}

/// Writes `coordinate real general` with every stored entry (explicit zeros
/// included) and values at 17 significant digits, which round-trips exactly.
pub fn write_matrix_market<W: Write>(m: &MatrixHandle, mut out: W) -> Result<()> {
    let d = m.dim();
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    let mut entries = Vec::with_capacity(m.stored_entries());
    m.for_each_entry(|i, j, v| {
        if m.is_sparse() || v != 0.0 {
            entries.push((i, j, v));
        }
    });
    writeln!(out, "{d} {d} {}", entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

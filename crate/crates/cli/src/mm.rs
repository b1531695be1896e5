//! Matrix Market exchange format: dense reading and writing of
//! `coordinate` and `array` files with `real`, `complex` or `integer` fields.
//!
//! Symmetric and Hermitian storage is expanded to the full matrix on load.

use std::fmt::Write as _;
use std::str::FromStr;

use jd_diag::{DenseMatrix, LinalgError, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MmError {
    #[error("invalid banner: {0}")]
    Banner(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: index ({row}, {col}) outside a {rows}x{cols} matrix")]
    IndexOutOfRange {
        line: usize,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("line {line}: entry ({row}, {col}) given more than once")]
    Duplicate { line: usize, row: usize, col: usize },
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error("{symmetry} storage requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        symmetry: Symmetry,
        rows: usize,
        cols: usize,
    },
    #[error(transparent)]
    Matrix(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    General,
    Symmetric,
    Hermitian,
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Coordinate => "coordinate",
            Self::Array => "array",
        })
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Real => "real",
            Self::Complex => "complex",
            Self::Integer => "integer",
        })
    }
}

impl std::fmt::Display for Symmetry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::General => "general",
            Self::Symmetric => "symmetric",
            Self::Hermitian => "hermitian",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub layout: Layout,
    pub field: Field,
    pub symmetry: Symmetry,
}

impl Header {
    pub fn banner(&self) -> String {
        format!("%%MatrixMarket matrix {} {} {}", self.layout, self.field, self.symmetry)
    }
}

/// A loaded file: the header as written and the expanded matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub header: Header,
    pub matrix: DenseMatrix,
}

fn parse_banner(line: &str) -> Result<Header, MmError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let bad = |msg: &str| Err(MmError::Banner(msg.to_string()));
    if tokens.len() != 5 {
        return bad("expected `%%MatrixMarket matrix <layout> <field> <symmetry>`");
    }
    if tokens[0] != "%%MatrixMarket" {
        return bad("first line must start with %%MatrixMarket");
    }
    if !tokens[1].eq_ignore_ascii_case("matrix") {
        return bad("only the `matrix` object is supported");
    }
    let layout = match tokens[2].to_ascii_lowercase().as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(MmError::Banner(format!("unsupported layout `{other}`"))),
    };
    let field = match tokens[3].to_ascii_lowercase().as_str() {
        "real" => Field::Real,
        "complex" => Field::Complex,
        "integer" => Field::Integer,
        other => return Err(MmError::Banner(format!("unsupported field `{other}`"))),
    };
    let symmetry = match tokens[4].to_ascii_lowercase().as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(MmError::Banner(format!("unsupported symmetry `{other}`"))),
    };
    if symmetry == Symmetry::Hermitian && field != Field::Complex {
        return bad("hermitian storage requires the complex field");
    }
    Ok(Header {
        layout,
        field,
        symmetry,
    })
}

fn number<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MmError> {
    let tok = tok.ok_or_else(|| MmError::Syntax {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| MmError::Syntax {
        line,
        msg: format!("cannot parse {what} `{tok}`"),
    })
}

fn value<'a>(tokens: &mut impl Iterator<Item = &'a str>, field: Field, line: usize) -> Result<C64, MmError> {
    let z = match field {
        Field::Real => C64::new(number(tokens.next(), line, "value")?, 0.0),
        Field::Integer => C64::new(number::<i64>(tokens.next(), line, "integer value")? as f64, 0.0),
        Field::Complex => C64::new(
            number(tokens.next(), line, "real part")?,
            number(tokens.next(), line, "imaginary part")?,
        ),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(MmError::Syntax {
            line,
            msg: "non-finite value".into(),
        });
    }
    Ok(z)
}

fn mirror(z: C64, symmetry: Symmetry) -> C64 {
    match symmetry {
        Symmetry::Hermitian => z.conj(),
        _ => z,
    }
}

/// Parses a Matrix Market document.
pub fn parse(text: &str) -> Result<MatrixFile, MmError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or_else(|| MmError::Banner("empty input".into()))?;
    let header = parse_banner(first)?;
    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or(MmError::Syntax {
        line: 1,
        msg: "missing size line".into(),
    })?;
    let mut tok = size.split_whitespace();
    let rows: usize = number(tok.next(), size_line, "row count")?;
    let cols: usize = number(tok.next(), size_line, "column count")?;
    let nnz = match header.layout {
        Layout::Coordinate => Some(number::<usize>(tok.next(), size_line, "entry count")?),
        Layout::Array => None,
    };
    if tok.next().is_some() {
        return Err(MmError::Syntax {
            line: size_line,
            msg: "trailing tokens on size line".into(),
        });
    }
    let symmetric = header.symmetry != Symmetry::General;
    if symmetric && rows != cols {
        return Err(MmError::NotSquare {
            symmetry: header.symmetry,
            rows,
            cols,
        });
    }
    if rows == 0 || cols == 0 {
        return Err(LinalgError::EmptyMatrix.into());
    }

    let mut out = vec![C64::new(0.0, 0.0); rows * cols];
    let mut seen = vec![false; rows * cols];
    let mut count = 0;
    let expected = match (header.layout, nnz) {
        (Layout::Coordinate, Some(n)) => n,
        _ if symmetric => rows * (rows + 1) / 2,
        _ => rows * cols,
    };

    for (line, text) in data {
        if count == expected {
            return Err(MmError::EntryCount {
                expected,
                found: count + 1,
            });
        }
        let mut tok = text.split_whitespace();
        let (i, j) = match header.layout {
            Layout::Coordinate => {
                let i: usize = number(tok.next(), line, "row index")?;
                let j: usize = number(tok.next(), line, "column index")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(MmError::IndexOutOfRange {
                        line,
                        row: i,
                        col: j,
                        rows,
                        cols,
                    });
                }
                (i - 1, j - 1)
            }
            Layout::Array => array_position(count, rows, symmetric),
        };
        let z = value(&mut tok, header.field, line)?;
        if tok.next().is_some() {
            return Err(MmError::Syntax {
                line,
                msg: "trailing tokens after entry".into(),
            });
        }
        if header.symmetry == Symmetry::Hermitian && i == j && z.im != 0.0 {
            return Err(MmError::Syntax {
                line,
                msg: "hermitian diagonal entries must be real".into(),
            });
        }
        let mut place = |r: usize, c: usize, z: C64| -> Result<(), MmError> {
            if std::mem::replace(&mut seen[c * rows + r], true) {
                return Err(MmError::Duplicate {
                    line,
                    row: r + 1,
                    col: c + 1,
                });
            }
            out[c * rows + r] = z;
            Ok(())
        };
        place(i, j, z)?;
        if symmetric && i != j {
            place(j, i, mirror(z, header.symmetry))?;
        }
        count += 1;
    }
    if count != expected {
        return Err(MmError::EntryCount { expected, found: count });
    }
    Ok(MatrixFile {
        header,
        matrix: DenseMatrix::new(rows, cols, out)?,
    })
}

/// Row and column of the `k`-th stored entry in column-major array order;
/// symmetric storage lists the lower triangle only.
fn array_position(k: usize, n: usize, symmetric: bool) -> (usize, usize) {
    if !symmetric {
        return (k % n, k / n);
    }
    let mut j = 0;
    let mut left = k;
    while left >= n - j {
        left -= n - j;
        j += 1;
    }
    (j + left, j)
}

/// Serializes `m` with general symmetry. The field is `real` when every
/// entry has a zero imaginary part, `complex` otherwise. Values are printed
/// in shortest round-trip form, so array files reload bit-for-bit.
pub fn write(m: &DenseMatrix, layout: Layout) -> String {
    let complex = m.as_slice().iter().any(|z| z.im != 0.0 || z.im.is_sign_negative());
    let header = Header {
        layout,
        field: if complex { Field::Complex } else { Field::Real },
        symmetry: Symmetry::General,
    };
    let mut s = header.banner();
    s.push('\n');
    let entry = |s: &mut String, z: C64| {
        if complex {
            let _ = write!(s, "{:?} {:?}", z.re, z.im);
        } else {
            let _ = write!(s, "{:?}", z.re);
        }
    };
    match layout {
        Layout::Array => {
            let _ = writeln!(s, "{} {}", m.rows(), m.cols());
            for z in m.as_slice() {
                entry(&mut s, *z);
                s.push('\n');
            }
        }
        Layout::Coordinate => {
            let nz: Vec<(usize, usize, C64)> = (0..m.cols())
                .flat_map(|j| (0..m.rows()).map(move |i| (i, j)))
                .map(|(i, j)| (i, j, m[(i, j)]))
                .filter(|(_, _, z)| *z != C64::new(0.0, 0.0))
                .collect();
            let _ = writeln!(s, "{} {} {}", m.rows(), m.cols(), nz.len());
            for (i, j, z) in nz {
                let _ = write!(s, "{} {} ", i + 1, j + 1);
                entry(&mut s, z);
                s.push('\n');
            }
        }
    }
    s
}

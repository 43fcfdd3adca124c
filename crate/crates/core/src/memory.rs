//! Unsorted HoloGN storage and associative recall.
//!
//! Stored vectors form an `l x d` bit matrix kept row-major in one packed
//! buffer. Two engines compute the distance from a query to every row:
//!
//! * [`Engine::Xor`] XORs packed words and popcounts them.
//! * [`Engine::Complex`] maps bit 0 to `i` and bit 1 to `1`, multiplies the
//!   matrix by the query as a complex matrix-vector product and reads the
//!   mismatch count off the imaginary part of each entry (`1 * i = i`,
//!   while `1 * 1 = 1` and `i * i = -1` are real).
//!
//! Both report exact integer mismatch counts and must agree row for row.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;

use crate::bsc::{mismatch_count, words_for, Distance, HDVector};
use crate::error::{Error, Result};

/// Rows per rayon task in batch scans.
const MIN_ROWS_PER_TASK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Xor,
    Complex,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xor" => Ok(Engine::Xor),
            "complex" => Ok(Engine::Complex),
            other => Err(Error::Config(format!("unknown engine {other:?} (expected xor or complex)"))),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Xor => "xor",
            Engine::Complex => "complex",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub row: usize,
    pub label: String,
    pub distance: Distance,
}

/// Hits in ascending distance, ties by row index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QueryResult {
    pub hits: Vec<Hit>,
}

impl QueryResult {
    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn first(&self) -> Option<&Hit> {
        self.hits.first()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternStore {
    dim: usize,
    stride: usize,
    labels: Vec<String>,
    bits: Vec<u64>,
}

impl PatternStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            stride: words_for(dim),
            labels: Vec::new(),
            bits: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> Option<&str> {
        self.labels.get(row).map(String::as_str)
    }

    pub fn vector(&self, row: usize) -> Option<HDVector> {
        (row < self.len()).then(|| {
            HDVector::from_words(self.dim, self.row_words(row).to_vec())
                .expect("stored rows have zero padding")
        })
    }

    fn row_words(&self, row: usize) -> &[u64] {
        &self.bits[row * self.stride..(row + 1) * self.stride]
    }

    fn check(&self, v: &HDVector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.dim(),
            });
        }
        Ok(())
    }

    /// Appends a row and returns its index.
    pub fn insert(&mut self, label: impl Into<String>, v: &HDVector) -> Result<usize> {
        self.check(v)?;
        let label = label.into();
        if label.contains(['\n', '\r', '\t']) {
            return Err(Error::Domain("labels may not contain tabs or newlines".into()));
        }
        self.bits.extend_from_slice(v.words());
        self.labels.push(label);
        Ok(self.labels.len() - 1)
    }

    /// Exact mismatch count per row via XOR and popcount.
    pub fn mismatches_xor(&self, q: &HDVector) -> Result<Vec<usize>> {
        self.check(q)?;
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let qw = q.words();
        Ok(self
            .bits
            .par_chunks(self.stride)
            .with_min_len(MIN_ROWS_PER_TASK)
            .map(|row| mismatch_count(row, qw))
            .collect())
    }

    /// Exact mismatch count per row via the complex matrix-vector product.
    pub fn mismatches_complex(&self, q: &HDVector) -> Result<Vec<usize>> {
        self.check(q)?;
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let query = to_complex(q.words(), self.dim);
        Ok(self
            .bits
            .par_chunks(self.stride)
            .with_min_len(MIN_ROWS_PER_TASK)
            .map_init(
                || vec![Complex::new(0.0, 0.0); self.dim],
                |row_buf, row| {
                    expand_into(row, self.dim, row_buf);
                    let product = dot(row_buf, &query);
                    // Each term contributes exactly 0 or 1 to the imaginary
                    // part, so the f64 sum is an exact integer.
                    debug_assert_eq!(product.im.fract(), 0.0);
                    product.im as usize
                },
            )
            .collect())
    }

    pub fn mismatches(&self, q: &HDVector, engine: Engine) -> Result<Vec<usize>> {
        match engine {
            Engine::Xor => self.mismatches_xor(q),
            Engine::Complex => self.mismatches_complex(q),
        }
    }

    pub fn batch_distances_xor(&self, q: &HDVector) -> Result<Vec<f64>> {
        Ok(self.to_fractions(self.mismatches_xor(q)?))
    }

    pub fn batch_distances_complex(&self, q: &HDVector) -> Result<Vec<f64>> {
        Ok(self.to_fractions(self.mismatches_complex(q)?))
    }

    fn to_fractions(&self, counts: Vec<usize>) -> Vec<f64> {
        counts
            .into_iter()
            .map(|m| Distance { mismatches: m, dim: self.dim }.as_f64())
            .collect()
    }

    fn hit(&self, row: usize, mismatches: usize) -> Hit {
        Hit {
            row,
            label: self.labels[row].clone(),
            distance: Distance {
                mismatches,
                dim: self.dim,
            },
        }
    }

    /// Row with the smallest distance; the lowest index wins ties.
    pub fn best_match(&self, q: &HDVector, engine: Engine) -> Result<QueryResult> {
        self.check(q)?;
        if self.is_empty() {
            return Err(Error::EmptyStore);
        }
        let counts = self.mismatches(q, engine)?;
        let (row, &m) = counts
            .iter()
            .enumerate()
            .min_by_key(|&(i, &m)| (m, i))
            .expect("non-empty store");
        Ok(QueryResult {
            hits: vec![self.hit(row, m)],
        })
    }

    /// All rows within normalized distance `xi`, nearest first.
    pub fn recall_xi(&self, q: &HDVector, xi: f64, engine: Engine) -> Result<QueryResult> {
        if !(0.0..0.5).contains(&xi) {
            return Err(Error::XiOutOfRange(xi));
        }
        let counts = self.mismatches(q, engine)?;
        let mut hits: Vec<Hit> = counts
            .iter()
            .enumerate()
            .filter(|&(_, &m)| Distance { mismatches: m, dim: self.dim }.as_f64() <= xi)
            .map(|(i, &m)| self.hit(i, m))
            .collect();
        hits.sort_by_key(|h| (h.distance.mismatches, h.row));
        Ok(QueryResult { hits })
    }

    /// Store file: `HOLOGN-STORE v1 d=<d> l=<l>` then `label<TAB>hex` per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("HOLOGN-STORE v1 d={} l={}\n", self.dim, self.len());
        for row in 0..self.len() {
            s.push_str(&self.labels[row]);
            s.push('\t');
            for w in self.row_words(row) {
                s.push_str(&format!("{w:016x}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, 1, "empty store file"))?;
        let (dim, rows) = parse_header(header)?;
        let mut store = PatternStore::new(dim);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.is_empty() {
                continue;
            }
            let tab = line
                .find('\t')
                .ok_or_else(|| Error::parse(lineno, 1, "expected label<TAB>hex"))?;
            let v = HDVector::from_hex_at(dim, &line[tab + 1..], lineno, tab + 2)?;
            store.insert(&line[..tab], &v)?;
        }
        if store.len() != rows {
            return Err(Error::parse(
                1,
                1,
                format!("header declares l={rows} but {} rows follow", store.len()),
            ));
        }
        Ok(store)
    }
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 4 || fields[0] != "HOLOGN-STORE" || fields[1] != "v1" {
        return Err(Error::parse(1, 1, "expected header `HOLOGN-STORE v1 d=<d> l=<l>`"));
    }
    let field = |idx: usize, key: &str| -> Result<usize> {
        let col = fields[..idx].iter().map(|f| f.len() + 1).sum::<usize>() + 1;
        fields[idx]
            .strip_prefix(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(1, col, format!("expected {key}<integer>")))
    };
    let dim = field(2, "d=")?;
    if dim == 0 {
        return Err(Error::parse(1, 17, "dimension must be positive"));
    }
    Ok((dim, field(3, "l=")?))
}

fn to_complex(words: &[u64], dim: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); dim];
    expand_into(words, dim, &mut out);
    out
}

/// Bit 1 becomes `1`, bit 0 becomes `i`.
fn expand_into(words: &[u64], dim: usize, out: &mut [Complex<f64>]) {
    const ONE: Complex<f64> = Complex::new(1.0, 0.0);
    const I: Complex<f64> = Complex::new(0.0, 1.0);
    for (k, slot) in out.iter_mut().enumerate().take(dim) {
        *slot = if (words[k / 64] >> (k % 64)) & 1 == 1 { ONE } else { I };
    }
}

fn dot(a: &[Complex<f64>], b: &[Complex<f64>]) -> Complex<f64> {
    a.iter().zip(b).fold(Complex::new(0.0, 0.0), |acc, (x, y)| acc + x * y)
}

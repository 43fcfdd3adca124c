//! Binary Spatter Code hypervectors.
//!
//! An [`HDVector`] is a fixed-length bit string packed into `u64` words,
//! least significant bit first: bit `k` lives in word `k / 64` at bit
//! position `k % 64`. Bits past the dimension in the last word are always
//! zero, so popcounts over whole words give exact densities and distances.

use std::fmt;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::seed::Seed;

/// Smallest dimension accepted by [`HDVector::random`].
pub const MIN_DIMENSION: usize = 64;

const WORD: usize = 64;

#[inline]
pub(crate) fn words_for(dim: usize) -> usize {
    dim.div_ceil(WORD)
}

#[inline]
fn tail_mask(dim: usize) -> u64 {
    match dim % WORD {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Exact normalized Hamming distance, kept as a mismatch count over the
/// dimension until it is converted at the API edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Distance {
    pub mismatches: usize,
    pub dim: usize,
}

impl Distance {
    pub fn as_f64(self) -> f64 {
        self.mismatches as f64 / self.dim as f64
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HDVector {
    dim: usize,
    words: Vec<u64>,
}

impl fmt::Debug for HDVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HDVector")
            .field("dim", &self.dim)
            .field("density", &self.density())
            .finish()
    }
}

impl HDVector {
    /// All-zero vector. Any positive dimension is allowed here; the
    /// minimum only applies to random generation.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            words: vec![0; words_for(dim)],
        }
    }

    pub fn ones(dim: usize) -> Self {
        let mut v = Self {
            dim,
            words: vec![u64::MAX; words_for(dim)],
        };
        v.clear_padding();
        v
    }

    /// Builds a vector from packed words. Padding bits must already be zero.
    pub fn from_words(dim: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != words_for(dim) {
            return Err(Error::DimensionMismatch {
                expected: words_for(dim),
                got: words.len(),
            });
        }
        if let Some(&last) = words.last() {
            if last & !tail_mask(dim) != 0 {
                return Err(Error::Domain("padding bits beyond the dimension are set".into()));
            }
        }
        Ok(Self { dim, words })
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (k, &b) in bits.iter().enumerate() {
            if b {
                v.words[k / WORD] |= 1 << (k % WORD);
            }
        }
        v
    }

    /// Independent fair coin per bit, fully determined by `(dim, seed)`.
    pub fn random(dim: usize, seed: Seed) -> Result<Self> {
        if dim < MIN_DIMENSION {
            return Err(Error::DimensionTooSmall(dim));
        }
        let mut rng = seed.rng();
        let mut words = vec![0u64; words_for(dim)];
        for w in words.iter_mut() {
            *w = rng.next_u64();
        }
        let mut v = Self { dim, words };
        v.clear_padding();
        Ok(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn bit(&self, k: usize) -> bool {
        assert!(k < self.dim, "bit index {k} out of range for dimension {}", self.dim);
        (self.words[k / WORD] >> (k % WORD)) & 1 == 1
    }

    pub fn set_bit(&mut self, k: usize, value: bool) {
        assert!(k < self.dim, "bit index {k} out of range for dimension {}", self.dim);
        let mask = 1u64 << (k % WORD);
        if value {
            self.words[k / WORD] |= mask;
        } else {
            self.words[k / WORD] &= !mask;
        }
    }

    pub fn iter_bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.dim).map(move |k| (self.words[k / WORD] >> (k % WORD)) & 1 == 1)
    }

    /// Number of one-bits.
    pub fn density(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn clear_padding(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.dim);
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    /// Bitwise complement. Test-construction helper.
    pub fn complement(&self) -> Self {
        let mut v = Self {
            dim: self.dim,
            words: self.words.iter().map(|w| !w).collect(),
        };
        v.clear_padding();
        v
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// Count of differing positions.
    pub fn mismatches(&self, other: &Self) -> Result<usize> {
        self.check_dim(other)?;
        Ok(mismatch_count(&self.words, &other.words))
    }

    pub fn distance(&self, other: &Self) -> Result<Distance> {
        Ok(Distance {
            mismatches: self.mismatches(other)?,
            dim: self.dim,
        })
    }

    /// Normalized Hamming distance in `[0, 1]`.
    pub fn hamming(&self, other: &Self) -> Result<f64> {
        Ok(self.distance(other)?.as_f64())
    }

    /// Cyclic shift by `i` positions: bit `k` of the input lands at
    /// `(k + i) mod d`. Negative amounts shift the other way.
    pub fn shift(&self, i: i64) -> Self {
        let d = self.dim;
        if d == 0 {
            return self.clone();
        }
        let s = i.rem_euclid(d as i64) as usize;
        if s == 0 {
            return self.clone();
        }
        let mut out = vec![0u64; self.words.len()];
        for (w, slot) in out.iter_mut().enumerate() {
            let start = w * WORD;
            let len = WORD.min(d - start);
            // Output bits [start, start+len) come from source bits starting at start - s.
            let src = (start + d - s) % d;
            *slot = if src + len <= d {
                read_bits(&self.words, src, len)
            } else {
                let first = d - src;
                read_bits(&self.words, src, first) | (read_bits(&self.words, 0, len - first) << first)
            };
        }
        Self { dim: d, words: out }
    }

    /// Serialized form: the dimension in decimal, a newline, then each packed
    /// word as 16 lowercase hex digits, word 0 first, and a trailing newline.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.dim);
        s.push_str(&self.to_hex());
        s.push('\n');
        s
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.words.len() * 16);
        for w in &self.words {
            s.push_str(&format!("{w:016x}"));
        }
        s
    }

    pub fn from_hex(dim: usize, hex: &str) -> Result<Self> {
        Self::from_hex_at(dim, hex, 1, 1)
    }

    pub(crate) fn from_hex_at(dim: usize, hex: &str, line: usize, col0: usize) -> Result<Self> {
        let n = words_for(dim);
        if hex.len() != n * 16 {
            return Err(Error::parse(
                line,
                col0,
                format!("expected {} hex digits for dimension {dim}, found {}", n * 16, hex.len()),
            ));
        }
        if let Some(pos) = hex.bytes().position(|b| !matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(Error::parse(line, col0 + pos, "expected a lowercase hex digit"));
        }
        let words = (0..n)
            .map(|i| u64::from_str_radix(&hex[i * 16..(i + 1) * 16], 16).expect("validated hex"))
            .collect();
        Self::from_words(dim, words).map_err(|_| {
            Error::parse(line, col0 + (n - 1) * 16, "padding bits beyond the dimension are set")
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, 1, "empty input"))?;
        let dim: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, 1, format!("invalid dimension header {header:?}")))?;
        if dim == 0 {
            return Err(Error::parse(1, 1, "dimension must be positive"));
        }
        let hex = lines
            .next()
            .ok_or_else(|| Error::parse(2, 1, "missing hex payload"))?;
        let v = Self::from_hex_at(dim, hex.trim_end(), 2, 1)?;
        if let Some((i, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(i + 3, 1, format!("unexpected trailing content {extra:?}")));
        }
        Ok(v)
    }
}

/// Reads `len <= 64` bits starting at `pos`; requires `pos + len <= d`.
#[inline]
fn read_bits(words: &[u64], pos: usize, len: usize) -> u64 {
    debug_assert!(len > 0 && len <= WORD);
    let w = pos / WORD;
    let off = pos % WORD;
    let mut x = words[w] >> off;
    if off != 0 && off + len > WORD {
        x |= words[w + 1] << (WORD - off);
    }
    if len == WORD {
        x
    } else {
        x & ((1u64 << len) - 1)
    }
}

#[inline]
pub(crate) fn mismatch_count(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

/// Bit-sliced per-position counter used for majority sums.
///
/// `planes[b]` holds bit `b` of every position's count, so adding a vector
/// is a ripple-carry over a handful of words instead of `d` increments.
#[derive(Debug, Clone)]
pub struct BitAccumulator {
    dim: usize,
    count: usize,
    planes: Vec<Vec<u64>>,
}

impl BitAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            count: 0,
            planes: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vectors added so far.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn add(&mut self, v: &HDVector) -> Result<()> {
        if v.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.dim,
            });
        }
        self.add_words(&v.words);
        Ok(())
    }

    pub(crate) fn add_words(&mut self, words: &[u64]) {
        self.count += 1;
        let needed = (usize::BITS - self.count.leading_zeros()) as usize;
        while self.planes.len() < needed {
            self.planes.push(vec![0; words.len()]);
        }
        for (w, &x) in words.iter().enumerate() {
            let mut carry = x;
            for plane in self.planes.iter_mut() {
                if carry == 0 {
                    break;
                }
                let p = plane[w];
                plane[w] = p ^ carry;
                carry &= p;
            }
        }
    }

    /// Count of ones at position `k`.
    pub fn count_at(&self, k: usize) -> usize {
        self.planes
            .iter()
            .enumerate()
            .map(|(b, p)| (((p[k / WORD] >> (k % WORD)) & 1) as usize) << b)
            .sum()
    }

    /// Thresholds the counts: 1 where strictly more than half the inputs are
    /// 1, 0 where strictly fewer. Exact ties (even count only) copy the bit of
    /// `tiebreak`.
    pub fn majority(&self, tiebreak: &HDVector) -> Result<HDVector> {
        if self.count == 0 {
            return Err(Error::EmptyBundle);
        }
        if tiebreak.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: tiebreak.dim,
            });
        }
        let half = self.count / 2;
        let even = self.count.is_multiple_of(2);
        let mut out = vec![0u64; words_for(self.dim)];
        for (w, slot) in out.iter_mut().enumerate() {
            let mut gt = 0u64;
            let mut eq = u64::MAX;
            for b in (0..self.planes.len()).rev() {
                let p = self.planes[b][w];
                if (half >> b) & 1 == 1 {
                    eq &= p;
                } else {
                    gt |= eq & p;
                    eq &= !p;
                }
            }
            *slot = if even {
                gt | (eq & tiebreak.words[w])
            } else {
                gt
            };
        }
        let mut v = HDVector {
            dim: self.dim,
            words: out,
        };
        v.clear_padding();
        Ok(v)
    }
}

/// Majority sum of `vs`. The tie-break vector for even-length lists is
/// `HDVector::random(d, tiebreak)`; it is only generated when needed.
pub fn majority_bundle(vs: &[HDVector], tiebreak: Seed) -> Result<HDVector> {
    let first = vs.first().ok_or(Error::EmptyBundle)?;
    let mut acc = BitAccumulator::new(first.dim);
    for v in vs {
        acc.add(v)?;
    }
    finish_bundle(&acc, tiebreak)
}

pub(crate) fn finish_bundle(acc: &BitAccumulator, tiebreak: Seed) -> Result<HDVector> {
    if acc.len() % 2 == 1 {
        acc.majority(&HDVector::zeros(acc.dim()))
    } else {
        let tb = tie_vector(acc.dim(), tiebreak);
        acc.majority(&tb)
    }
}

fn tie_vector(dim: usize, seed: Seed) -> HDVector {
    // Small dimensions are legal for bundling but not for `random`.
    let mut rng = seed.rng();
    let mut words = vec![0u64; words_for(dim)];
    for w in words.iter_mut() {
        *w = rng.next_u64();
    }
    let mut v = HDVector { dim, words };
    v.clear_padding();
    v
}

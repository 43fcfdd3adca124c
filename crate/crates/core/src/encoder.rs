//! HoloGN encoding of Graph Neuron array activations.
//!
//! Neuron `j` owns an initialization vector `IV_j`; the code of symbol `i`
//! at that neuron is `IV_j` cyclically shifted by `i`. A whole pattern is
//! the majority sum of the codes of the activated symbols, one per neuron.

use crate::bsc::{finish_bundle, BitAccumulator, HDVector};
use crate::error::{Error, Result};
use crate::seed::Seed;

/// Stream tags for the tie-break vectors of the two bundling stages.
const TAG_PATTERN_TIE: u64 = 0x5041_5454_4945; // "PATTIE"
const TAG_CLASS_TIE: u64 = 0x434c_5354_4945; // "CLSTIE"

/// Above this many (neuron, symbol) pairs the codebook shifts on demand
/// instead of caching every element code.
const CACHE_LIMIT: usize = 1 << 14;

/// Geometry of a flat GN array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GnArraySpec {
    /// Number of neurons, i.e. pattern length.
    pub n: usize,
    /// Symbols each neuron can recognize.
    pub alphabet_size: usize,
    pub d: usize,
    pub master_seed: u64,
}

impl GnArraySpec {
    pub fn new(n: usize, alphabet_size: usize, d: usize, master_seed: u64) -> Result<Self> {
        let spec = Self {
            n,
            alphabet_size,
            d,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1".into()));
        }
        if self.alphabet_size < 2 {
            return Err(Error::InvalidSpec("alphabet size must be at least 2".into()));
        }
        if self.d < crate::bsc::MIN_DIMENSION {
            return Err(Error::DimensionTooSmall(self.d));
        }
        if self.alphabet_size > self.d {
            return Err(Error::InvalidSpec(format!(
                "alphabet size {} exceeds dimension {}; shift offsets would alias",
                self.alphabet_size, self.d
            )));
        }
        Ok(())
    }

    pub fn seed(&self) -> Seed {
        Seed::from_master(self.master_seed)
    }

    /// Seed for the tie-break vector of pattern encodings with even `n`.
    pub fn pattern_tie_seed(&self) -> Seed {
        self.seed().child(TAG_PATTERN_TIE)
    }

    /// Seed for the tie-break vector of class bundles.
    pub fn class_tie_seed(&self) -> Seed {
        self.seed().child(TAG_CLASS_TIE)
    }
}

/// One symbol per neuron.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolPattern(pub Vec<usize>);

impl SymbolPattern {
    pub fn new(symbols: Vec<usize>) -> Self {
        Self(symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses either comma/whitespace separated integers (`"0, 3, 1"`) or,
    /// when no separator is present, one digit per symbol (`"0110"`).
    pub fn parse(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Err(Error::parse(1, 1, "empty symbol string"));
        }
        let separated = trimmed.contains(|c: char| c == ',' || c.is_whitespace());
        let mut out = Vec::new();
        if separated {
            let mut col = 1;
            for tok in trimmed.split(|c: char| c == ',' || c.is_whitespace()) {
                if !tok.is_empty() {
                    let v = tok
                        .parse()
                        .map_err(|_| Error::parse(1, col, format!("invalid symbol {tok:?}")))?;
                    out.push(v);
                }
                col += tok.len() + 1;
            }
        } else {
            for (i, c) in trimmed.chars().enumerate() {
                let v = c
                    .to_digit(10)
                    .ok_or_else(|| Error::parse(1, i + 1, format!("invalid symbol {c:?}")))?;
                out.push(v as usize);
            }
        }
        Ok(Self(out))
    }

    pub fn check(&self, spec: &GnArraySpec) -> Result<()> {
        if self.0.len() != spec.n {
            return Err(Error::PatternMismatch(format!(
                "pattern has {} symbols, array has {} neurons",
                self.0.len(),
                spec.n
            )));
        }
        if let Some((j, &s)) = self.0.iter().enumerate().find(|(_, &s)| s >= spec.alphabet_size) {
            return Err(Error::PatternMismatch(format!(
                "symbol {s} at neuron {j} outside alphabet of size {}",
                spec.alphabet_size
            )));
        }
        Ok(())
    }
}

/// Per-neuron initialization vectors and derived element codes.
#[derive(Debug, Clone)]
pub struct Codebook {
    spec: GnArraySpec,
    iv: Vec<HDVector>,
    /// `codes[j * alphabet_size + i]`, present when small enough to cache.
    codes: Option<Vec<HDVector>>,
}

impl Codebook {
    pub fn new(spec: GnArraySpec) -> Result<Self> {
        spec.validate()?;
        let seed = spec.seed();
        let iv = (0..spec.n)
            .map(|j| HDVector::random(spec.d, seed.with_stream(j as u64)))
            .collect::<Result<Vec<_>>>()?;
        let codes = (spec.n * spec.alphabet_size <= CACHE_LIMIT).then(|| {
            iv.iter()
                .flat_map(|v| (0..spec.alphabet_size).map(move |i| v.shift(i as i64)))
                .collect()
        });
        Ok(Self { spec, iv, codes })
    }

    pub fn spec(&self) -> &GnArraySpec {
        &self.spec
    }

    pub fn iv(&self, j: usize) -> Result<&HDVector> {
        self.iv.get(j).ok_or(Error::IndexOutOfRange {
            what: "neuron",
            index: j,
            limit: self.spec.n,
        })
    }

    /// Code of symbol `i` at neuron `j`: `IV_j` shifted by `i`.
    pub fn element_code(&self, j: usize, i: usize) -> Result<HDVector> {
        self.check_index(j, i)?;
        Ok(match &self.codes {
            Some(codes) => codes[j * self.spec.alphabet_size + i].clone(),
            None => self.iv[j].shift(i as i64),
        })
    }

    fn check_index(&self, j: usize, i: usize) -> Result<()> {
        if j >= self.spec.n {
            return Err(Error::IndexOutOfRange {
                what: "neuron",
                index: j,
                limit: self.spec.n,
            });
        }
        if i >= self.spec.alphabet_size {
            return Err(Error::IndexOutOfRange {
                what: "symbol",
                index: i,
                limit: self.spec.alphabet_size,
            });
        }
        Ok(())
    }

    /// Majority sum of the activated element codes.
    pub fn encode(&self, pattern: &SymbolPattern) -> Result<HDVector> {
        pattern.check(&self.spec)?;
        let mut acc = BitAccumulator::new(self.spec.d);
        for (j, &i) in pattern.symbols().iter().enumerate() {
            match &self.codes {
                Some(codes) => acc.add_words(codes[j * self.spec.alphabet_size + i].words()),
                None => acc.add_words(self.iv[j].shift(i as i64).words()),
            }
        }
        finish_bundle(&acc, self.spec.pattern_tie_seed())
    }

    /// Encodes a binary bitmap, one neuron per cell, with symbol 1 for a set
    /// cell. Requires a binary alphabet and `n == bits.len()`.
    pub fn encode_bits(&self, bits: &[bool]) -> Result<HDVector> {
        self.encode(&SymbolPattern(bits.iter().map(|&b| b as usize).collect()))
    }

    /// Class representative: majority sum of per-example encodings, ties
    /// broken by the codebook's class tie seed.
    pub fn bundle_class(&self, encodings: &[HDVector]) -> Result<HDVector> {
        bundle_class(encodings, self.spec.class_tie_seed())
    }
}

/// Majority sum of example encodings into one class vector.
pub fn bundle_class(encodings: &[HDVector], seed: Seed) -> Result<HDVector> {
    crate::bsc::majority_bundle(encodings, seed)
}

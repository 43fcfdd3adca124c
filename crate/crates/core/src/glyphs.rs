//! 7x5 letter bitmaps.
//!
//! File format: 26 blocks, each a label line `:A` followed by 7 lines of 5
//! characters, `#` for a set (black) cell and `.` for a clear one. Blank
//! lines between blocks are ignored.

use std::fmt;

use crate::error::{Error, Result};

pub const ROWS: usize = 7;
pub const COLS: usize = 5;
pub const CELLS: usize = ROWS * COLS;

/// Public-domain 5x7 dot-matrix capitals in the classic character-ROM style.
pub const BUILTIN_GLYPHS: &str = include_str!("../data/glyphs_5x7.txt");

/// Row-major 7x5 binary image; `true` is a black cell.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bitmap(pub [bool; CELLS]);

impl Bitmap {
    pub fn cells(&self) -> &[bool; CELLS] {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.0[row * COLS + col]
    }

    /// Number of differing cells.
    pub fn hamming(&self, other: &Bitmap) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn complement(&self) -> Bitmap {
        Bitmap(self.0.map(|b| !b))
    }
}

impl fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f)?;
        for r in 0..ROWS {
            for c in 0..COLS {
                f.write_str(if self.get(r, c) { "#" } else { "." })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph {
    pub label: char,
    pub bitmap: Bitmap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphSet {
    glyphs: Vec<Glyph>,
    source: String,
}

impl GlyphSet {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_GLYPHS, "builtin-5x7").expect("bundled glyph file is valid")
    }

    pub fn glyphs(&self) -> &[Glyph] {
        &self.glyphs
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn get(&self, label: char) -> Option<&Glyph> {
        self.glyphs.iter().find(|g| g.label == label)
    }

    pub fn parse(text: &str, source: impl Into<String>) -> Result<Self> {
        let mut glyphs: Vec<Glyph> = Vec::new();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((i, line)) = lines.next() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let label = parse_label(line, lineno)?;
            if glyphs.iter().any(|g| g.label == label) {
                return Err(Error::parse(lineno, 2, format!("duplicate glyph {label}")));
            }
            let mut cells = [false; CELLS];
            for r in 0..ROWS {
                let (j, row) = lines.next().ok_or_else(|| {
                    Error::parse(lineno + r + 1, 1, format!("glyph {label} ends after {r} rows"))
                })?;
                let row = row.trim_end_matches('\r');
                let chars: Vec<char> = row.chars().collect();
                if chars.len() != COLS {
                    return Err(Error::parse(
                        j + 1,
                        chars.len().min(COLS) + 1,
                        format!("expected {COLS} cells, found {}", chars.len()),
                    ));
                }
                for (c, ch) in chars.into_iter().enumerate() {
                    cells[r * COLS + c] = match ch {
                        '#' => true,
                        '.' => false,
                        other => {
                            return Err(Error::parse(j + 1, c + 1, format!("unexpected {other:?}, expected '#' or '.'")))
                        }
                    };
                }
            }
            glyphs.push(Glyph {
                label,
                bitmap: Bitmap(cells),
            });
        }
        if glyphs.len() != 26 {
            return Err(Error::parse(
                text.lines().count().max(1),
                1,
                format!("expected 26 glyphs, found {}", glyphs.len()),
            ));
        }
        let mut labels: Vec<char> = glyphs.iter().map(|g| g.label).collect();
        labels.sort_unstable();
        if labels != ('A'..='Z').collect::<Vec<_>>() {
            return Err(Error::parse(1, 1, "glyphs must be labeled A through Z"));
        }
        Ok(Self {
            glyphs,
            source: source.into(),
        })
    }
}

fn parse_label(line: &str, lineno: usize) -> Result<char> {
    let mut chars = line.trim_end().chars();
    if chars.next() != Some(':') {
        return Err(Error::parse(lineno, 1, "expected a label line `:X`"));
    }
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_uppercase() => Ok(c),
        _ => Err(Error::parse(lineno, 2, "label must be a single letter A-Z")),
    }
}

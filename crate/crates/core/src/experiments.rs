//! Desk-scale reproductions of the letter-recognition, timing and
//! analytic-curve studies.
//!
//! Every random draw comes from a seed derived from the master seed and the
//! trial's coordinates (phase, letter, distortion, index), so a run produces
//! the same tables whether its trials execute serially or on a thread pool.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::analysis::{capacity, overlap_distance, sensitivity, PmfMethod};
use crate::bsc::{finish_bundle, BitAccumulator, HDVector};
use crate::encoder::{Codebook, GnArraySpec};
use crate::error::{Error, Result};
use crate::glyphs::{Bitmap, GlyphSet, CELLS};
use crate::memory::{Engine, PatternStore};
use crate::seed::{Seed, DEFAULT_MASTER};

const PHASE_ONESHOT: u64 = 1;
const PHASE_TRAIN: u64 = 2;
const PHASE_TEST: u64 = 3;
const PHASE_TIMING: u64 = 4;
const PHASE_OVERLAP: u64 = 5;
const PHASE_CLASS_TIE: u64 = 6;

/// Number of flipped cells in a 35-cell bitmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DistortionSpec {
    pub flip_bits: usize,
}

impl DistortionSpec {
    pub fn new(flip_bits: usize) -> Result<Self> {
        if flip_bits > CELLS {
            return Err(Error::Config(format!("cannot flip {flip_bits} of {CELLS} cells")));
        }
        Ok(Self { flip_bits })
    }

    /// Fraction of the bitmap that is flipped.
    pub fn rate(&self) -> f64 {
        self.flip_bits as f64 / CELLS as f64
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.rate()
    }
}

/// Flips exactly `flip_bits` distinct cells, chosen uniformly.
pub fn distort(bitmap: &Bitmap, flip_bits: usize, seed: Seed) -> Result<Bitmap> {
    DistortionSpec::new(flip_bits)?;
    let mut out = *bitmap;
    let mut rng = seed.rng();
    for idx in sample(&mut rng, CELLS, flip_bits) {
        out.0[idx] = !out.0[idx];
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub master_seed: u64,
    /// Query trials per (letter, distortion).
    pub trials: usize,
    /// Inclusive range of flipped cells.
    pub min_bits: usize,
    pub max_bits: usize,
    /// Training examples per class for the distortion sweep.
    pub examples: usize,
    /// Example counts for the convergence sweep.
    pub example_grid: Vec<usize>,
    /// Distortion used for the convergence sweep.
    pub sweep_bits: usize,
    pub engine: Engine,
    /// Store sizes for the timing ladder.
    pub timing_ladder: Vec<usize>,
    pub timing_reps: usize,
    pub timing_engines: Vec<Engine>,
    /// Pattern size and trial count for the empirical overlap curve.
    pub overlap_size: usize,
    pub overlap_trials: usize,
    pub capacity_dims: Vec<usize>,
    pub sensitivity_sizes: Vec<usize>,
    pub thr: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 10_000,
            master_seed: DEFAULT_MASTER,
            trials: 1000,
            min_bits: 0,
            max_bits: 5,
            examples: 501,
            example_grid: vec![1, 5, 25, 101, 251, 501],
            sweep_bits: 5,
            engine: Engine::Xor,
            timing_ladder: vec![625, 1250, 2500, 5000, 10_000, 20_000],
            timing_reps: 7,
            timing_engines: vec![Engine::Xor, Engine::Complex],
            overlap_size: 15,
            overlap_trials: 200,
            capacity_dims: (1..=20).map(|k| k * 1000).collect(),
            sensitivity_sizes: vec![15, 55, 105, 155, 205, 255, 305, 355, 405, 455, 505],
            thr: 1e-6,
        }
    }
}

impl ExperimentConfig {
    /// Settings for the supervised study: 1..15 flipped cells, 500 test
    /// patterns per letter and level.
    pub fn supervised() -> Self {
        Self {
            trials: 500,
            min_bits: 1,
            max_bits: 15,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.examples == 0 || self.example_grid.contains(&0) {
            return Err(Error::Config("example counts must be at least 1".into()));
        }
        if self.min_bits > self.max_bits || self.max_bits > CELLS || self.sweep_bits > CELLS {
            return Err(Error::Config(format!(
                "distortion range {}..={} must lie within 0..={CELLS}",
                self.min_bits, self.max_bits
            )));
        }
        if self.d < crate::bsc::MIN_DIMENSION {
            return Err(Error::DimensionTooSmall(self.d));
        }
        if self.timing_reps == 0 {
            return Err(Error::Config("timing repetitions must be at least 1".into()));
        }
        if self.overlap_size == 0 || self.overlap_trials == 0 {
            return Err(Error::Config("overlap size and trials must be at least 1".into()));
        }
        Ok(())
    }

    fn seed(&self) -> Seed {
        Seed::from_master(self.master_seed)
    }

    fn codebook(&self) -> Result<Codebook> {
        Codebook::new(GnArraySpec::new(CELLS, 2, self.d, self.master_seed)?)
    }
}

fn pct(correct: usize, total: usize) -> f64 {
    100.0 * correct as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneshotRow {
    pub letter: char,
    pub flip_bits: usize,
    pub trials: usize,
    pub correct: usize,
}

impl OneshotRow {
    pub fn accuracy(&self) -> f64 {
        pct(self.correct, self.trials)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneshotTable {
    pub rows: Vec<OneshotRow>,
}

impl OneshotTable {
    /// Mean accuracy over the alphabet at one distortion level, in percent.
    pub fn mean_accuracy(&self, flip_bits: usize) -> Option<f64> {
        let rows: Vec<_> = self.rows.iter().filter(|r| r.flip_bits == flip_bits).collect();
        if rows.is_empty() {
            return None;
        }
        let correct: usize = rows.iter().map(|r| r.correct).sum();
        let total: usize = rows.iter().map(|r| r.trials).sum();
        Some(pct(correct, total))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("letter,flip_bits,distortion_pct,trials,correct,accuracy_pct\n");
        for r in &self.rows {
            let dist = DistortionSpec { flip_bits: r.flip_bits };
            writeln!(
                s,
                "{},{},{:.1},{},{},{:.2}",
                r.letter,
                r.flip_bits,
                dist.percent(),
                r.trials,
                r.correct,
                r.accuracy()
            )
            .unwrap();
        }
        s
    }
}

/// One-shot best-match recall: memorize the clean letters, query distorted
/// copies, count how often the nearest stored pattern is the right letter.
pub fn run_oneshot(cfg: &ExperimentConfig, glyphs: &GlyphSet) -> Result<OneshotTable> {
    cfg.validate()?;
    let cb = cfg.codebook()?;
    let mut store = PatternStore::new(cfg.d);
    for g in glyphs.glyphs() {
        store.insert(g.label.to_string(), &cb.encode_bits(&g.bitmap.0)?)?;
    }
    let seed = cfg.seed().child(PHASE_ONESHOT);
    let mut rows = Vec::new();
    for bits in cfg.min_bits..=cfg.max_bits {
        for g in glyphs.glyphs() {
            let label = g.label.to_string();
            let correct = (0..cfg.trials)
                .into_par_iter()
                .map(|t| -> Result<usize> {
                    let s = seed.derive(&[g.label as u64, bits as u64, t as u64]);
                    let q = cb.encode_bits(&distort(&g.bitmap, bits, s)?.0)?;
                    let hit = store.best_match(&q, cfg.engine)?;
                    Ok((hit.hits[0].label == label) as usize)
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            rows.push(OneshotRow {
                letter: g.label,
                flip_bits: bits,
                trials: cfg.trials,
                correct,
            });
        }
    }
    Ok(OneshotTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Distortion,
    Examples,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedRow {
    pub sweep: Sweep,
    pub flip_bits: usize,
    pub examples: usize,
    pub trials: usize,
    pub correct: usize,
}

impl SupervisedRow {
    pub fn accuracy(&self) -> f64 {
        pct(self.correct, self.trials)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedReport {
    pub rows: Vec<SupervisedRow>,
}

impl SupervisedReport {
    pub fn accuracy(&self, sweep: Sweep, flip_bits: usize, examples: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.sweep == sweep && r.flip_bits == flip_bits && r.examples == examples)
            .map(SupervisedRow::accuracy)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("sweep,flip_bits,distortion_pct,examples,trials,correct,accuracy_pct\n");
        for r in &self.rows {
            let sweep = match r.sweep {
                Sweep::Distortion => "distortion",
                Sweep::Examples => "examples",
            };
            writeln!(
                s,
                "{sweep},{},{:.1},{},{},{},{:.2}",
                r.flip_bits,
                DistortionSpec { flip_bits: r.flip_bits }.percent(),
                r.examples,
                r.trials,
                r.correct,
                r.accuracy()
            )
            .unwrap();
        }
        s
    }
}

/// Which parts of the supervised study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupervisedParts {
    pub distortion_sweep: bool,
    pub example_sweep: bool,
}

impl Default for SupervisedParts {
    fn default() -> Self {
        Self {
            distortion_sweep: true,
            example_sweep: true,
        }
    }
}

/// Supervised recall: each letter's class vector bundles `e` noisy
/// encodings; recall is tested on fresh distortions drawn from a disjoint
/// seed phase.
pub fn run_supervised(cfg: &ExperimentConfig, glyphs: &GlyphSet) -> Result<SupervisedReport> {
    run_supervised_parts(cfg, glyphs, SupervisedParts::default())
}

pub fn run_supervised_parts(
    cfg: &ExperimentConfig,
    glyphs: &GlyphSet,
    parts: SupervisedParts,
) -> Result<SupervisedReport> {
    cfg.validate()?;
    let cb = cfg.codebook()?;
    let mut rows = Vec::new();
    if parts.distortion_sweep {
        for bits in cfg.min_bits..=cfg.max_bits {
            let classes = train_classes(cfg, &cb, glyphs, bits, &[cfg.examples])?;
            let correct = test_classes(cfg, &cb, glyphs, bits, &classes[0])?;
            rows.push(SupervisedRow {
                sweep: Sweep::Distortion,
                flip_bits: bits,
                examples: cfg.examples,
                trials: cfg.trials * glyphs.glyphs().len(),
                correct,
            });
        }
    }
    if parts.example_sweep {
        let bits = cfg.sweep_bits;
        let classes = train_classes(cfg, &cb, glyphs, bits, &cfg.example_grid)?;
        for (store, &e) in classes.iter().zip(&cfg.example_grid) {
            rows.push(SupervisedRow {
                sweep: Sweep::Examples,
                flip_bits: bits,
                examples: e,
                trials: cfg.trials * glyphs.glyphs().len(),
                correct: test_classes(cfg, &cb, glyphs, bits, store)?,
            });
        }
    }
    Ok(SupervisedReport { rows })
}

/// Builds one class store per requested example count. Example `i` of a
/// letter is the same draw for every count, so smaller counts are prefixes
/// of larger ones.
fn train_classes(
    cfg: &ExperimentConfig,
    cb: &Codebook,
    glyphs: &GlyphSet,
    bits: usize,
    counts: &[usize],
) -> Result<Vec<PatternStore>> {
    let max = counts.iter().copied().max().unwrap_or(0);
    let seed = cfg.seed().child(PHASE_TRAIN);
    let tie = cfg.seed().child(PHASE_CLASS_TIE);
    let per_letter: Vec<Vec<HDVector>> = glyphs
        .glyphs()
        .par_iter()
        .map(|g| -> Result<Vec<HDVector>> {
            let mut acc = BitAccumulator::new(cfg.d);
            let mut out = Vec::with_capacity(counts.len());
            let mut snapshots: Vec<(usize, HDVector)> = Vec::new();
            for i in 0..max {
                let s = seed.derive(&[g.label as u64, bits as u64, i as u64]);
                acc.add(&cb.encode_bits(&distort(&g.bitmap, bits, s)?.0)?)?;
                if counts.contains(&(i + 1)) {
                    let class = finish_bundle(&acc, tie.child(g.label as u64))?;
                    snapshots.push((i + 1, class));
                }
            }
            for &c in counts {
                let v = snapshots
                    .iter()
                    .find(|(n, _)| *n == c)
                    .map(|(_, v)| v.clone())
                    .expect("snapshot taken for every count");
                out.push(v);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut stores = Vec::with_capacity(counts.len());
    for k in 0..counts.len() {
        let mut store = PatternStore::new(cfg.d);
        for (g, classes) in glyphs.glyphs().iter().zip(&per_letter) {
            store.insert(g.label.to_string(), &classes[k])?;
        }
        stores.push(store);
    }
    Ok(stores)
}

fn test_classes(
    cfg: &ExperimentConfig,
    cb: &Codebook,
    glyphs: &GlyphSet,
    bits: usize,
    store: &PatternStore,
) -> Result<usize> {
    let seed = cfg.seed().child(PHASE_TEST);
    let mut correct = 0;
    for g in glyphs.glyphs() {
        let label = g.label.to_string();
        correct += (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<usize> {
                let s = seed.derive(&[g.label as u64, bits as u64, t as u64]);
                let q = cb.encode_bits(&distort(&g.bitmap, bits, s)?.0)?;
                Ok((store.best_match(&q, cfg.engine)?.hits[0].label == label) as usize)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
    }
    Ok(correct)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub l: usize,
    pub engine: Engine,
    pub median_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
    /// Whether every engine returned the same distances on every timed query.
    pub engines_agree: bool,
}

impl TimingTable {
    pub fn series(&self, engine: Engine) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.engine == engine)
            .map(|r| (r.l, r.median_ms))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,engine,median_ms\n");
        for r in &self.rows {
            writeln!(s, "{},{},{:.4}", r.l, r.engine, r.median_ms).unwrap();
        }
        s
    }
}

/// Least-squares line through `points`: `(slope, intercept, r_squared)`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Times a single batch-distance query against stores of increasing size.
/// Wall-clock numbers are the one output that is not reproducible.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<TimingTable> {
    cfg.validate()?;
    let seed = cfg.seed().child(PHASE_TIMING);
    let max_l = cfg.timing_ladder.iter().copied().max().unwrap_or(0);
    let vectors: Vec<HDVector> = (0..max_l)
        .into_par_iter()
        .map(|i| HDVector::random(cfg.d, seed.child(i as u64)))
        .collect::<Result<_>>()?;
    let query = HDVector::random(cfg.d, seed.child(u64::MAX))?;
    let mut rows = Vec::new();
    let mut engines_agree = true;
    for &l in &cfg.timing_ladder {
        let mut store = PatternStore::new(cfg.d);
        for (i, v) in vectors[..l].iter().enumerate() {
            store.insert(i.to_string(), v)?;
        }
        let mut reference: Option<Vec<usize>> = None;
        for &engine in &cfg.timing_engines {
            let mut times = Vec::with_capacity(cfg.timing_reps);
            let mut last = Vec::new();
            // One untimed warm-up pass.
            store.mismatches(&query, engine)?;
            for _ in 0..cfg.timing_reps {
                let start = Instant::now();
                last = store.mismatches(&query, engine)?;
                times.push(start.elapsed().as_secs_f64() * 1e3);
            }
            match &reference {
                Some(r) => engines_agree &= *r == last,
                None => reference = Some(last),
            }
            times.sort_by(f64::total_cmp);
            rows.push(TimingRow {
                l,
                engine,
                median_ms: times[times.len() / 2],
            });
        }
    }
    Ok(TimingTable { rows, engines_agree })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisCurves {
    pub capacity: Vec<(usize, usize)>,
    /// `(c, predicted, empirical)`
    pub overlap: Vec<(usize, f64, f64)>,
    pub sensitivity: Vec<(usize, usize)>,
}

impl AnalysisCurves {
    pub fn capacity_csv(&self) -> String {
        capacity_csv(&self.capacity)
    }

    pub fn overlap_csv(&self) -> String {
        overlap_csv(&self.overlap)
    }

    pub fn sensitivity_csv(&self) -> String {
        sensitivity_csv(&self.sensitivity)
    }
}

pub fn capacity_csv(rows: &[(usize, usize)]) -> String {
    let mut s = String::from("d,capacity\n");
    for (d, c) in rows {
        writeln!(s, "{d},{c}").unwrap();
    }
    s
}

pub fn overlap_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut s = String::from("c,predicted_distance,empirical_distance\n");
    for (c, p, e) in rows {
        writeln!(s, "{c},{p:.6},{e:.6}").unwrap();
    }
    s
}

pub fn sensitivity_csv(rows: &[(usize, usize)]) -> String {
    let mut s = String::from("pattern_size,sensitivity\n");
    for (m, c) in rows {
        writeln!(s, "{m},{c}").unwrap();
    }
    s
}

/// Mean distance between bundles of `m` and `n` random components sharing
/// `c` of them, over `trials` independent draws. Each bundle gets its own
/// tie-break vector.
pub fn empirical_overlap(d: usize, c: usize, m: usize, n: usize, trials: usize, seed: Seed) -> Result<f64> {
    if c > m.min(n) {
        return Err(Error::Domain(format!("common count {c} exceeds min({m}, {n})")));
    }
    let total: usize = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<usize> {
            let s = seed.derive(&[c as u64, m as u64, n as u64, t as u64]);
            let mut a = BitAccumulator::new(d);
            let mut b = BitAccumulator::new(d);
            for i in 0..c {
                let v = HDVector::random(d, s.child(i as u64))?;
                a.add(&v)?;
                b.add(&v)?;
            }
            for i in c..m {
                a.add(&HDVector::random(d, s.child(i as u64))?)?;
            }
            for i in c..n {
                b.add(&HDVector::random(d, s.child((1 << 32) + i as u64))?)?;
            }
            let va = finish_bundle(&a, s.child(u64::MAX - 1))?;
            let vb = finish_bundle(&b, s.child(u64::MAX - 2))?;
            va.mismatches(&vb)
        })
        .try_reduce(|| 0, |x, y| Ok(x + y))?;
    Ok(total as f64 / (trials * d) as f64)
}

/// Capacity at each dimension in `cfg.capacity_dims`.
pub fn capacity_curve(cfg: &ExperimentConfig) -> Result<Vec<(usize, usize)>> {
    cfg.capacity_dims
        .iter()
        .map(|&d| Ok((d, capacity(d, cfg.thr, PmfMethod::Approx)?)))
        .collect()
}

/// Predicted and measured distance for every shared count `c` between two
/// bundles of `cfg.overlap_size` components.
pub fn overlap_curve(cfg: &ExperimentConfig) -> Result<Vec<(usize, f64, f64)>> {
    cfg.validate()?;
    let size = cfg.overlap_size;
    let seed = cfg.seed().child(PHASE_OVERLAP);
    (0..=size)
        .map(|c| {
            Ok((
                c,
                overlap_distance(c, size, size)?,
                empirical_overlap(cfg.d, c, size, size, cfg.overlap_trials, seed)?,
            ))
        })
        .collect()
}

/// Sensitivity for equal-size patterns at `cfg.d`.
pub fn sensitivity_curve(cfg: &ExperimentConfig) -> Result<Vec<(usize, usize)>> {
    cfg.sensitivity_sizes
        .iter()
        .map(|&m| Ok((m, sensitivity(cfg.d, cfg.thr, m, m, PmfMethod::Approx)?)))
        .collect()
}

pub fn run_analysis_curves(cfg: &ExperimentConfig) -> Result<AnalysisCurves> {
    cfg.validate()?;
    Ok(AnalysisCurves {
        capacity: capacity_curve(cfg)?,
        overlap: overlap_curve(cfg)?,
        sensitivity: sensitivity_curve(cfg)?,
    })
}

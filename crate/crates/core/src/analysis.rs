//! Closed-form statistics of bundled hypervectors.
//!
//! Densities of random vectors follow `Binomial(d, p)`. A density `k` is
//! treated as negligible when its probability mass is at most `thr`; the
//! nearest such densities below and above the mean bound the interval a
//! vector's density will fall in. Capacity and sensitivity both ask when
//! the upper bound of one distribution stays below the lower bound of the
//! random (`p = 0.5`) distribution.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION: usize = 10_000;
pub const DEFAULT_THRESHOLD: f64 = 1e-6;

/// Which probability mass function the density bounds are evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PmfMethod {
    /// Gaussian (de Moivre-Laplace) approximation.
    #[default]
    Approx,
    /// Exact binomial, evaluated in log space.
    Exact,
}

impl std::fmt::Display for PmfMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PmfMethod::Approx => "approx",
            PmfMethod::Exact => "exact",
        })
    }
}

/// Parameter bundle for the closed-form predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisParams {
    pub d: usize,
    pub p: f64,
    pub thr: f64,
    pub n: usize,
    pub m: usize,
    pub c: usize,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            d: DEFAULT_DIMENSION,
            p: 0.5,
            thr: DEFAULT_THRESHOLD,
            n: 15,
            m: 15,
            c: 0,
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        check_dp(self.d, self.p)?;
        check_thr(self.thr)?;
        if self.c > self.m.min(self.n) {
            return Err(Error::Domain(format!(
                "common count c = {} exceeds min(m, n) = {}",
                self.c,
                self.m.min(self.n)
            )));
        }
        Ok(())
    }

    pub fn density_bounds(&self, method: PmfMethod) -> Result<(usize, usize)> {
        self.validate()?;
        density_bounds(self.d, self.p, self.thr, method)
    }

    pub fn capacity(&self, method: PmfMethod) -> Result<usize> {
        self.validate()?;
        capacity(self.d, self.thr, method)
    }

    pub fn overlap_distance(&self) -> Result<f64> {
        self.validate()?;
        overlap_distance(self.c, self.m, self.n)
    }

    pub fn sensitivity(&self, method: PmfMethod) -> Result<usize> {
        self.validate()?;
        sensitivity(self.d, self.thr, self.m, self.n, method)
    }
}

fn check_dp(d: usize, p: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability p = {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_thr(thr: f64) -> Result<()> {
    if !(thr > 0.0 && thr < 1.0) {
        return Err(Error::Domain(format!("threshold {thr} outside (0, 1)")));
    }
    Ok(())
}

/// Exact `C(d, k) p^k (1-p)^(d-k)`.
pub fn binom_pmf(k: usize, d: usize, p: f64) -> Result<f64> {
    check_dp(d, p)?;
    if k > d {
        return Err(Error::Domain(format!("k = {k} exceeds d = {d}")));
    }
    Ok(pmf_exact(k, d, p))
}

fn pmf_exact(k: usize, d: usize, p: f64) -> f64 {
    dbinom(k, d, p)
}

/// Binomial mass by Loader's saddle-point expansion: Stirling remainders
/// plus deviance terms, which avoids differencing large log-factorials.
fn dbinom(k: usize, d: usize, p: f64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == d { 1.0 } else { 0.0 };
    }
    let (x, n) = (k as f64, d as f64);
    if k == 0 {
        if d == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 { -deviance(n, n * q) - n * p } else { n * q.ln() };
        return lc.exp();
    }
    if k == d {
        let lc = if q < 0.1 { -deviance(n, n * p) - n * q } else { n * p.ln() };
        return lc.exp();
    }
    let lc = stirling_remainder(d) - stirling_remainder(k) - stirling_remainder(d - k)
        - deviance(x, n * p)
        - deviance(n - x, n * q);
    let lf = (2.0 * PI).ln() + x.ln() + (-x / n).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Half-binomial mass `C(len, i) / 2^len`.
fn half_pmf(i: usize, len: usize) -> f64 {
    dbinom(i, len, 0.5)
}

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`.
fn stirling_remainder(n: usize) -> f64 {
    const SMALL: [f64; 16] = [
        0.0,
        0.081_061_466_795_327_26,
        0.041_340_695_955_409_3,
        0.027_677_925_684_998_34,
        0.020_790_672_103_765_093,
        0.016_644_691_189_821_192,
        0.013_876_128_823_070_748,
        0.011_896_709_945_891_77,
        0.010_411_265_261_972_096,
        0.009_255_462_182_712_733,
        0.008_330_563_433_362_87,
        0.007_573_675_487_951_841,
        0.006_942_840_107_209_53,
        0.006_408_994_188_004_207,
        0.005_951_370_112_758_848,
        0.005_554_733_551_962_801,
    ];
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n < SMALL.len() {
        return SMALL[n];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, by series when `x` is near `np`.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// Gaussian approximation of the binomial mass. Requires `d p (1-p) >= 9`.
pub fn binom_pmf_approx(k: usize, d: usize, p: f64) -> Result<f64> {
    check_dp(d, p)?;
    let var = d as f64 * p * (1.0 - p);
    if var < 9.0 {
        return Err(Error::Domain(format!(
            "normal approximation needs d p (1-p) >= 9, got {var}"
        )));
    }
    Ok(binom_pmf_approx_unchecked(k, d, p))
}

/// [`binom_pmf_approx`] without the validity guard.
pub fn binom_pmf_approx_unchecked(k: usize, d: usize, p: f64) -> f64 {
    let mean = d as f64 * p;
    let var = d as f64 * p * (1.0 - p);
    let dev = k as f64 - mean;
    (-dev * dev / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn pmf(k: usize, d: usize, p: f64, method: PmfMethod) -> f64 {
    match method {
        PmfMethod::Approx => binom_pmf_approx_unchecked(k, d, p),
        PmfMethod::Exact => pmf_exact(k, d, p),
    }
}

/// Highest value the mass function reaches.
fn peak(d: usize, p: f64, method: PmfMethod) -> f64 {
    match method {
        PmfMethod::Approx => 1.0 / (2.0 * PI * d as f64 * p * (1.0 - p)).sqrt(),
        PmfMethod::Exact => {
            let mode = (((d + 1) as f64 * p).floor() as usize).min(d);
            pmf_exact(mode, d, p)
        }
    }
}

/// Validates inputs for a bound search; returns whether the distribution
/// is a point mass (p = 0 or 1), which is evaluated exactly either way.
fn prepare_bound(d: usize, p: f64, thr: f64, method: PmfMethod) -> Result<PmfMethod> {
    check_dp(d, p)?;
    check_thr(thr)?;
    if p == 0.0 || p == 1.0 {
        return Ok(PmfMethod::Exact);
    }
    if method == PmfMethod::Approx {
        let var = d as f64 * p * (1.0 - p);
        if var < 9.0 {
            return Err(Error::Domain(format!(
                "normal approximation needs d p (1-p) >= 9, got {var}"
            )));
        }
    }
    if thr >= peak(d, p, method) {
        return Err(Error::Domain(format!(
            "threshold {thr} is not below the peak probability; no density bound exists"
        )));
    }
    Ok(method)
}

/// Largest density below the mean whose probability is at most `thr`.
pub fn lower_density_bound(d: usize, p: f64, thr: f64, method: PmfMethod) -> Result<usize> {
    let method = prepare_bound(d, p, thr, method)?;
    let mean = d as f64 * p;
    if mean <= 0.0 {
        return Err(Error::Domain("no density lies below a zero mean".into()));
    }
    // Largest integer strictly below the mean.
    let mut k = mean.ceil() as usize - 1;
    loop {
        if pmf(k, d, p, method) <= thr {
            return Ok(k);
        }
        if k == 0 {
            return Err(Error::Domain(format!(
                "no density below the mean has probability <= {thr}"
            )));
        }
        k -= 1;
    }
}

/// Smallest density above the mean whose probability is at most `thr`.
pub fn upper_density_bound(d: usize, p: f64, thr: f64, method: PmfMethod) -> Result<usize> {
    let method = prepare_bound(d, p, thr, method)?;
    let mean = d as f64 * p;
    // Smallest integer strictly above the mean.
    let start = mean.floor() as usize + 1;
    (start..=d)
        .find(|&k| pmf(k, d, p, method) <= thr)
        .ok_or_else(|| Error::Domain(format!("no density above the mean has probability <= {thr}")))
}

/// `(k_minus, k_plus)`: the negligible-probability densities nearest to the
/// mean on either side.
pub fn density_bounds(d: usize, p: f64, thr: f64, method: PmfMethod) -> Result<(usize, usize)> {
    Ok((
        lower_density_bound(d, p, thr, method)?,
        upper_density_bound(d, p, thr, method)?,
    ))
}

/// Probability that a component's bit is flipped in the majority sum of
/// `n` independent random vectors: `1/2 - C(n-1, (n-1)/2) / 2^n`.
pub fn majority_noise(n: usize) -> Result<f64> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "majority noise is defined for odd n >= 1, got {n}"
        )));
    }
    let half = (n - 1) / 2;
    let ratio = if n <= 120 {
        let mut c: u128 = 1;
        for i in 0..half as u128 {
            c = c * (n as u128 - 1 - i) / (i + 1);
        }
        c as f64 / 2f64.powi(n as i32)
    } else {
        0.5 * half_pmf(half, n - 1)
    };
    Ok(0.5 - ratio)
}

/// Largest odd number of bundled components whose noise density upper
/// bound stays at or below the lower density bound of a random vector.
pub fn capacity(d: usize, thr: f64, method: PmfMethod) -> Result<usize> {
    let random_lower = lower_density_bound(d, 0.5, thr, method)?;
    let mut best = None;
    let mut n = 1;
    while n <= d {
        let noise = majority_noise(n)?;
        if upper_density_bound(d, noise, thr, method)? <= random_lower {
            best = Some(n);
        } else {
            break;
        }
        n += 2;
    }
    best.ok_or_else(|| Error::Domain("not even a single component is decodable".into()))
}

/// Upper tails of `Binomial(len, 1/2)`: `tail[lo] = P(X >= lo)`, for
/// `lo` in `0..=len + 1`.
fn half_binomial_tails(len: usize) -> Vec<f64> {
    let mut tail = vec![0.0; len + 2];
    let mut acc = NeumaierSum::default();
    for i in (0..=len).rev() {
        acc.add(half_pmf(i, len));
        tail[i] = acc.value();
    }
    tail[0] = 1.0;
    tail
}

/// Probability that a majority bit is 1 for a bundle of `size` components,
/// `common` of them shared and carrying `ones` set bits at this position,
/// the rest fresh fair coins. Exact ties (even `size`) count as one half,
/// matching an independent random tie-break vector.
fn prob_one(size: usize, common: usize, ones: usize, tails: &[f64], point: &dyn Fn(usize) -> f64) -> f64 {
    let fresh = size - common;
    if 2 * ones > size {
        return 1.0;
    }
    let need = size / 2 + 1 - ones;
    let strict = if need > fresh { 0.0 } else { tails[need] };
    let tie = if size.is_multiple_of(2) && size / 2 >= ones && size / 2 - ones <= fresh {
        0.5 * point(size / 2 - ones)
    } else {
        0.0
    };
    strict + tie
}

/// Expected normalized distance between the bundles of an `m`-component
/// and an `n`-component pattern sharing exactly `c` components.
///
/// Sums over the number of ones among the shared components at a bit
/// position; for odd sizes each side uses the three-case probability of a
/// one (certain, impossible, or a binomial tail over the fresh components).
/// Even sizes are accepted and resolve exact ties with probability one half.
pub fn overlap_distance(c: usize, m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::Domain("pattern sizes must be at least 1".into()));
    }
    if c > m.min(n) {
        return Err(Error::Domain(format!(
            "common count c = {c} exceeds min(m, n) = {}",
            m.min(n)
        )));
    }
    let tails_m = half_binomial_tails(m - c);
    let tails_n = half_binomial_tails(n - c);
    let point_m = |i: usize| half_pmf(i, m - c);
    let point_n = |i: usize| half_pmf(i, n - c);
    let mut sum = NeumaierSum::default();
    for ones in 0..=c {
        let w = half_pmf(ones, c);
        let one_m = prob_one(m, c, ones, &tails_m, &point_m);
        let zero_m = prob_one(m, c, c - ones, &tails_m, &point_m);
        let one_n = prob_one(n, c, ones, &tails_n, &point_n);
        let zero_n = prob_one(n, c, c - ones, &tails_n, &point_n);
        sum.add(w * (one_m * zero_n + zero_m * one_n));
    }
    Ok(sum.value().clamp(0.0, 1.0))
}

/// Smallest number of shared components for which the bundle distance is
/// separable from that of unrelated vectors at threshold `thr`.
pub fn sensitivity(d: usize, thr: f64, m: usize, n: usize, method: PmfMethod) -> Result<usize> {
    let random_lower = lower_density_bound(d, 0.5, thr, method)?;
    for c in 0..=m.min(n) {
        let p = overlap_distance(c, m, n)?;
        if upper_density_bound(d, p, thr, method)? <= random_lower {
            return Ok(c);
        }
    }
    Err(Error::Domain(format!(
        "no overlap of patterns of sizes {m} and {n} is separable at d = {d}"
    )))
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

//! End-to-end acceptance checks. Runs every criterion in order, prints one
//! PASS/FAIL line each and exits nonzero if any failed.

use std::process::ExitCode;
use std::time::Instant;

use hologn::analysis::{capacity, majority_noise, overlap_distance, sensitivity, PmfMethod};
use hologn::experiments::{
    empirical_overlap, linear_fit, run_analysis_curves, run_oneshot, run_supervised, run_supervised_parts,
    run_timing, ExperimentConfig, SupervisedParts, Sweep,
};
use hologn::{majority_bundle, Engine, GlyphSet, HDVector, PatternStore, Seed};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

const D: usize = 10_000;
const THR: f64 = 1e-6;

type Outcome = std::result::Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let checks: [Check; 11] = [
        ("quasi-orthogonality", quasi_orthogonality),
        ("shift algebra", shift_algebra),
        ("majority noise", majority_noise_oracle),
        ("capacity", capacity_anchor),
        ("sensitivity", sensitivity_anchors),
        ("overlap distance", overlap_prediction),
        ("engine equivalence", engine_equivalence),
        ("timing", timing),
        ("one-shot recall", oneshot_recall),
        ("supervised recall", supervised_recall),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn quasi_orthogonality() -> Outcome {
    let start = Instant::now();
    let seed = Seed::new(0x51, 0);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for t in 0..1000u64 {
        let a = HDVector::random(D, seed.derive(&[t, 0])).map_err(err)?;
        let b = HDVector::random(D, seed.derive(&[t, 1])).map_err(err)?;
        let h = a.hamming(&b).map_err(err)?;
        lo = lo.min(h);
        hi = hi.max(h);
        sum += h;
    }
    let mean = sum / 1000.0;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        lo >= 0.48 && hi <= 0.52 && (mean - 0.5).abs() <= 0.002 && secs < 5.0,
        format!("range [{lo:.4}, {hi:.4}], mean {mean:.5}, {secs:.2}s"),
    )
}

fn shift_algebra() -> Outcome {
    let cases = 10_000;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        prop_oneof![Just(64usize), Just(1000), Just(D), 64usize..=D],
        any::<u64>(),
        -3 * D as i64..3 * D as i64,
        -3 * D as i64..3 * D as i64,
    );
    let result = runner.run(&strategy, |(d, s, i, j)| {
        let v = HDVector::random(d, Seed::new(s, 0)).unwrap();
        let vi = v.shift(i);
        prop_assert_eq!(vi.shift(-i), v.clone(), "invertibility");
        prop_assert_eq!(vi.shift(j), v.shift(i + j), "additivity");
        prop_assert_eq!(vi.density(), v.density(), "density");
        if i.rem_euclid(d as i64) != 0 && d >= 1000 {
            // Six standard deviations of a fair-coin mismatch rate.
            let h = v.hamming(&vi).unwrap();
            prop_assert!((h - 0.5).abs() <= 3.0 / (d as f64).sqrt(), "self-dissimilarity {}", h);
        }
        Ok(())
    });
    match result {
        Ok(()) => Ok(format!("{cases} cases, no failures")),
        Err(e) => Err(e.to_string()),
    }
}

fn majority_noise_oracle() -> Outcome {
    let exact3 = majority_noise(3).map_err(err)?;
    let exact5 = majority_noise(5).map_err(err)?;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    let trials = 40u64;
    for n in (3..=21).step_by(2) {
        let expected = majority_noise(n).map_err(err)?;
        let mut flips = 0usize;
        for t in 0..trials {
            let s = Seed::new(0x33, n as u64).child(t);
            let vs: Vec<HDVector> = (0..n)
                .map(|i| HDVector::random(D, s.child(i as u64)))
                .collect::<hologn::Result<_>>()
                .map_err(err)?;
            let b = majority_bundle(&vs, s.child(u64::MAX)).map_err(err)?;
            flips += b.mismatches(&vs[0]).map_err(err)?;
        }
        let samples = (trials as usize * D) as f64;
        let rate = flips as f64 / samples;
        let se = (expected * (1.0 - expected) / samples).sqrt();
        let z = (rate - expected) / se;
        worst = worst.max(z.abs());
        if z.abs() > 3.0 {
            bad.push(format!("n={n}: {rate:.5} vs {expected:.5}"));
        }
    }
    ensure(
        exact3 == 0.25 && exact5 == 0.3125 && bad.is_empty(),
        format!("p3={exact3}, p5={exact5}, worst |z| {worst:.2} over n=3..21 {}", bad.join("; ")),
    )
}

/// Number of trials in which some bundled component is at least as far from
/// the bundle as the nearest of `distractors` random vectors.
fn decoding_failures(n: usize, distractors: usize, trials: u64, seed: Seed) -> Result<usize, String> {
    let mut failures = 0;
    for t in 0..trials {
        let s = seed.child(t);
        let comps: Vec<HDVector> = (0..n)
            .map(|i| HDVector::random(D, s.derive(&[0, i as u64])))
            .collect::<hologn::Result<_>>()
            .map_err(err)?;
        let bundle = majority_bundle(&comps, s.child(u64::MAX)).map_err(err)?;
        let worst_own = comps
            .iter()
            .map(|c| c.mismatches(&bundle))
            .collect::<hologn::Result<Vec<_>>>()
            .map_err(err)?
            .into_iter()
            .max()
            .unwrap();
        let mut nearest_other = usize::MAX;
        for j in 0..distractors {
            let v = HDVector::random(D, s.derive(&[1, j as u64])).map_err(err)?;
            nearest_other = nearest_other.min(v.mismatches(&bundle).map_err(err)?);
        }
        failures += (worst_own >= nearest_other) as usize;
    }
    Ok(failures)
}

fn capacity_anchor() -> Outcome {
    let approx = capacity(D, THR, PmfMethod::Approx).map_err(err)?;
    let exact = capacity(D, THR, PmfMethod::Exact).map_err(err)?;
    let over = 3 * approx / 2;
    let seed = Seed::new(0x44, 0);
    let at_cap = decoding_failures(approx, 1000, 20, seed.child(approx as u64))?;
    let above = decoding_failures(over, 1000, 20, seed.child(over as u64))?;
    ensure(
        approx.abs_diff(89) <= 3 && at_cap == 0 && above >= 1,
        format!(
            "capacity {approx} (approx path), {exact} (exact path); decoding failures in 20 trials: \
             {at_cap} at n={approx}, {above} at n={over}"
        ),
    )
}

fn sensitivity_anchors() -> Outcome {
    let s15 = sensitivity(D, THR, 15, 15, PmfMethod::Approx).map_err(err)?;
    let s15_exact = sensitivity(D, THR, 15, 15, PmfMethod::Exact).map_err(err)?;
    let s500 = sensitivity(D, THR, 500, 500, PmfMethod::Approx).map_err(err)?;
    let sizes = [15usize, 55, 105, 205, 305, 405, 505];
    let curve = sizes
        .iter()
        .map(|&m| sensitivity(D, THR, m, m, PmfMethod::Approx))
        .collect::<hologn::Result<Vec<_>>>()
        .map_err(err)?;
    let monotone = curve.windows(2).all(|w| w[0] <= w[1]);
    let mut misses = Vec::new();
    if s15 != 3 {
        misses.push(format!("m=n=15 gives {s15}, expected 3"));
    }
    if !(63..=77).contains(&s500) {
        misses.push(format!("m=n=500 gives {s500}, expected 63..=77"));
    }
    if !monotone {
        misses.push("curve not monotone".into());
    }
    ensure(
        misses.is_empty(),
        format!(
            "s(15)={s15} (exact path {s15_exact}), s(500)={s500}, curve {curve:?} {}",
            misses.join("; ")
        ),
    )
}

fn overlap_prediction() -> Outcome {
    let start = Instant::now();
    let seed = Seed::new(0x66, 0);
    let mut worst = 0.0f64;
    let mut worst_c = 0;
    for c in 0..=15 {
        let predicted = overlap_distance(c, 15, 15).map_err(err)?;
        let measured = empirical_overlap(D, c, 15, 15, 200, seed).map_err(err)?;
        let gap = (predicted - measured).abs();
        if gap > worst {
            worst = gap;
            worst_c = c;
        }
    }
    let end0 = overlap_distance(0, 15, 15).map_err(err)?;
    let end15 = overlap_distance(15, 15, 15).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst <= 0.01 && end15 == 0.0 && (end0 - 0.5).abs() <= 0.005 && secs < 120.0,
        format!("max gap {worst:.5} at c={worst_c}, c=0 -> {end0:.5}, c=15 -> {end15}, {secs:.1}s"),
    )
}

fn engine_equivalence() -> Outcome {
    let mut rng = Seed::new(0x77, 0).rng();
    let mut rows_checked = 0usize;
    for inst in 0..100u64 {
        let (d, l) = if inst == 0 {
            (D, 5000)
        } else {
            (rng.random_range(64..=D), rng.random_range(1..=5000))
        };
        let s = Seed::new(0x77, 1).child(inst);
        let mut store = PatternStore::new(d);
        for r in 0..l {
            store
                .insert(r.to_string(), &HDVector::random(d, s.child(r as u64)).map_err(err)?)
                .map_err(err)?;
        }
        let q = HDVector::random(d, s.child(u64::MAX)).map_err(err)?;
        let x = store.batch_distances_xor(&q).map_err(err)?;
        let c = store.batch_distances_complex(&q).map_err(err)?;
        if x.iter().zip(&c).any(|(a, b)| a.to_bits() != b.to_bits()) || x.len() != l {
            return Err(format!("instance {inst} (d={d}, l={l}) differs"));
        }
        rows_checked += l;
    }
    Ok(format!("100 instances, {rows_checked} rows identical"))
}

fn timing() -> Outcome {
    let cfg = ExperimentConfig {
        timing_engines: vec![Engine::Xor],
        timing_reps: 9,
        ..ExperimentConfig::default()
    };
    let table = run_timing(&cfg).map_err(err)?;
    let series = table.series(Engine::Xor);
    let points: Vec<(f64, f64)> = series.iter().map(|&(l, t)| (l as f64, t)).collect();
    let (slope, intercept, r2) = linear_fit(&points);
    let at_max = series.iter().find(|p| p.0 == 20_000).map(|p| p.1).unwrap_or(f64::INFINITY);
    ensure(
        at_max <= 200.0 && r2 >= 0.99,
        format!(
            "median {at_max:.2} ms at l=20000, fit {:.4} ms per 1000 rows + {intercept:.3} ms, R^2 {r2:.4}",
            slope * 1000.0
        ),
    )
}

fn oneshot_recall() -> Outcome {
    let glyphs = GlyphSet::builtin();
    let table = run_oneshot(&ExperimentConfig::default(), &glyphs).map_err(err)?;
    let acc: Vec<f64> = (0..=5).map(|b| table.mean_accuracy(b).unwrap()).collect();
    let monotone = acc[1..].windows(2).all(|w| w[1] <= w[0]);
    ensure(
        acc[0] == 100.0 && monotone,
        format!(
            "mean accuracy by flipped bits 0..5: {}",
            acc.iter().map(|a| format!("{a:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn supervised_recall() -> Outcome {
    let glyphs = GlyphSet::builtin();
    let cfg = ExperimentConfig {
        min_bits: 5,
        max_bits: 7,
        ..ExperimentConfig::supervised()
    };
    let report = run_supervised(&cfg, &glyphs).map_err(err)?;
    let at5 = report.accuracy(Sweep::Distortion, 5, 501).unwrap();
    let at7 = report.accuracy(Sweep::Distortion, 7, 501).unwrap();
    let sweep: Vec<f64> = cfg
        .example_grid
        .iter()
        .map(|&e| report.accuracy(Sweep::Examples, 5, e).unwrap())
        .collect();
    let converging = sweep.windows(2).all(|w| w[1] >= w[0] - 2.0);
    ensure(
        at5 >= 80.0 && at7 >= 70.0 && converging,
        format!(
            "e=501: {at5:.2}% at 5 bits, {at7:.2}% at 7 bits; by e {:?}: {}",
            cfg.example_grid,
            sweep.iter().map(|a| format!("{a:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn csvs(cfg: &ExperimentConfig, glyphs: &GlyphSet) -> hologn::Result<Vec<String>> {
    let curves = run_analysis_curves(cfg)?;
    Ok(vec![
        run_oneshot(cfg, glyphs)?.to_csv(),
        run_supervised_parts(cfg, glyphs, SupervisedParts::default())?.to_csv(),
        curves.capacity_csv(),
        curves.overlap_csv(),
        curves.sensitivity_csv(),
    ])
}

fn determinism() -> Outcome {
    let glyphs = GlyphSet::builtin();
    let cfg = ExperimentConfig {
        d: 4096,
        trials: 40,
        min_bits: 0,
        max_bits: 7,
        examples: 25,
        example_grid: vec![1, 5, 25],
        overlap_trials: 20,
        ..ExperimentConfig::default()
    };
    let mut runs = Vec::new();
    for threads in [1, 4, 1] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(err)?;
        runs.push(pool.install(|| csvs(&cfg, &glyphs)).map_err(err)?);
    }
    let names = ["oneshot", "supervised", "capacity", "overlap", "sensitivity"];
    let mut diffs = Vec::new();
    for (i, name) in names.iter().enumerate() {
        if runs.iter().any(|r| r[i] != runs[0][i]) {
            diffs.push(*name);
        }
    }
    let bytes: usize = runs[0].iter().map(String::len).sum();
    ensure(
        diffs.is_empty(),
        format!(
            "{} tables ({bytes} bytes) across 1, 4, 1 threads; differing: {:?}",
            names.len(),
            diffs
        ),
    )
}

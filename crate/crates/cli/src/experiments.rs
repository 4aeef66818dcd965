//! One function per experiment: resolved parameters in, result record and table out.

use packlab_core::ffourier::restriction_ratio_report;
use packlab_core::rigidpack::{verify_theorem, InstanceSampler, VerificationReport};
use packlab_core::sampling::SetSampler;
use packlab_core::trend::loglog_slope;
use packlab_core::Theorem;
use packlab_fractal::io::read_measure;
use packlab_fractal::{
    ball_growth, box_dimension, cantor_intervals, circle_set, energy, envelope_decay, kfold_sum, pushforward_dilate,
    pushforward_rotate, pushforward_similarity, spectrum, spherical_decay, sum_pushforward, union_construct,
    union_construct_projected, DecayReport, EnergyReport, GridMeasure, RotationSample, ScaleSample, Similarity,
    UnionSample,
};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Experiment, Params, PushKind};
use crate::fixtures::{self, Reference};
use crate::report::{num, Assertion, Table};
use crate::CliError;

/// Convolution-theorem tolerance for sums of grid measures.
pub const CONVOLUTION_TOLERANCE: f64 = 1e-8;

pub struct Outcome {
    pub result: Value,
    pub table: Table,
    pub summary: Vec<String>,
    pub assertions: Vec<Assertion>,
}

fn outcome<T: Serialize>(result: &T, table: Table, summary: Vec<String>, assertions: Vec<Assertion>) -> Outcome {
    Outcome { result: serde_json::to_value(result).expect("result serializes"), table, summary, assertions }
}

pub fn dispatch(experiment: Experiment, p: &Params) -> Result<Outcome, CliError> {
    match experiment {
        Experiment::FfVerify => ff_verify(p),
        Experiment::FfRestrict => ff_restrict(p),
        Experiment::FfConstants => ff_constants(p),
        Experiment::FracDim => frac_dim(p),
        Experiment::FracDecay => frac_decay(p),
        Experiment::FracUnion => frac_union(p),
        Experiment::FracPush => frac_push(p),
    }
}

fn identity_assertion(failures: usize, trials: usize) -> Assertion {
    Assertion::new(
        "proof-chain identities",
        failures == 0,
        format!("{failures} of {trials} instances violate Σλ, supp λ, the Cauchy–Schwarz bound or λ̂(0)"),
    )
}

fn ff_verify(p: &Params) -> Result<Outcome, CliError> {
    let theorem = p.theorem.expect("resolved");
    let sampler: InstanceSampler = serde_json::from_value(p.sampler.clone().expect("resolved"))
        .map_err(|e| CliError::Config(format!("sampler: {e}")))?;
    let report = verify_theorem(theorem, p.q.expect("resolved"), p.d.expect("resolved"), &sampler, p.trials.expect("resolved"), p.seed.expect("resolved"))?;
    let s = &report.summary;
    let mut table = Table::new(&[
        "trial", "set_size", "motion_count", "margin_level", "margin", "hypothesis_holds", "union_size", "bound", "ratio",
        "second_moment", "cs_bound", "second_moment_ratio", "identities_hold",
    ]);
    for r in &report.records {
        table.push(vec![
            r.trial.to_string(),
            r.set_size.to_string(),
            r.motion_count.to_string(),
            num(r.margin_level),
            num(r.margin),
            r.hypothesis_holds.to_string(),
            r.union_size.to_string(),
            r.bound.to_string(),
            r.ratio.to_string(),
            r.second_moment.to_string(),
            r.cs_bound.to_string(),
            num(r.second_moment_ratio),
            r.identities_hold.to_string(),
        ]);
    }
    let mut summary = vec![
        format!("theorem {} at q={}, d={}: |O(d)| = {}", theorem, report.q, report.d, report.group_order),
        format!("{} of {} trials meet the hypothesis", s.hypothesis_trials, report.trials),
        format!("min |Θ(E)|/bound = {} (trial {})", num(s.min_ratio), num(s.min_ratio_trial)),
    ];
    if let Some(t) = s.margin_trend_nondecreasing {
        summary.push(format!("minimum non-decreasing in the margin: {t}"));
    }
    if let Some(c) = s.max_second_moment_ratio {
        summary.push(format!("second-moment constant C = {c}"));
    }
    let assertions = vec![identity_assertion(s.identity_failures, report.trials)];
    Ok(outcome(&report, table, summary, assertions))
}

fn ff_restrict(p: &Params) -> Result<Outcome, CliError> {
    let exhaustive = p.exhaustive.expect("resolved");
    let sampler: SetSampler = match &p.sampler {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("sampler: {e}")))?,
        None => SetSampler::Mixed,
    };
    let report = restriction_ratio_report(
        p.q.expect("resolved"),
        p.d.expect("resolved"),
        &sampler,
        p.trials.unwrap_or(0),
        p.seed.unwrap_or(0),
        exhaustive,
    )?;
    let mut table = Table::new(&["trial", "size", "value", "argmax_norm", "bound", "ratio", "trivial_bound_holds", "zero_sphere_identity"]);
    for r in &report.rows {
        table.push(vec![
            r.trial.to_string(),
            r.size.to_string(),
            r.value.to_string(),
            r.argmax_norm.to_string(),
            r.bound.to_string(),
            r.ratio.to_string(),
            r.trivial_bound_holds.to_string(),
            num(r.zero_sphere_identity),
        ]);
    }
    let s = &report.summary;
    let summary = vec![
        format!("{} sets at q={}, d={} ({})", report.rows.len(), report.q, report.d, if exhaustive { "exhaustive" } else { "sampled" }),
        format!("max ratio {} at trial {}, median {}", s.max_ratio, s.argmax_trial, s.median_ratio),
    ];
    let mut assertions = vec![Assertion::new(
        "Plancherel bounds",
        s.trivial_bound_failures == 0,
        format!("{} sets break M* <= M <= |E|/q^d", s.trivial_bound_failures),
    )];
    if let Some(f) = s.zero_sphere_failures {
        assertions.push(Assertion::new("zero-sphere identity", f == 0, format!("{f} sets break |Ê(0)|^2 = |E|^2/q^(2d)")));
    }
    Ok(outcome(&report, table, summary, assertions))
}

#[derive(Debug, Clone, Serialize)]
struct ConstantRow {
    q: u32,
    trials: usize,
    second_moment_constant: Option<f64>,
    min_union_ratio: Option<f64>,
    restriction_max_ratio: f64,
    identity_failures: usize,
}

#[derive(Debug, Clone, Serialize)]
struct ConstantsReport {
    seed: u64,
    rows: Vec<ConstantRow>,
    /// Log-log slope of the second-moment constant against `q`.
    second_moment_slope: Option<f64>,
    /// Log-log slope of the maximal restriction ratio against `q`.
    restriction_slope: Option<f64>,
}

fn ff_constants(p: &Params) -> Result<Outcome, CliError> {
    let (trials, seed) = (p.trials.expect("resolved"), p.seed.expect("resolved"));
    let mut rows = Vec::new();
    for &q in p.primes.as_ref().expect("resolved") {
        let sampler = InstanceSampler::default_for(Theorem::PlanarThreshold, q, 2);
        let v: VerificationReport = verify_theorem(Theorem::PlanarThreshold, q, 2, &sampler, trials, seed)?;
        let r = restriction_ratio_report(q, 2, &SetSampler::Mixed, trials, seed, false)?;
        rows.push(ConstantRow {
            q,
            trials,
            second_moment_constant: v.summary.max_second_moment_ratio,
            min_union_ratio: v.summary.min_ratio,
            restriction_max_ratio: r.summary.max_ratio,
            identity_failures: v.summary.identity_failures,
        });
    }
    let qs: Vec<f64> = rows.iter().map(|r| r.q as f64).collect();
    let slope = |ys: Option<Vec<f64>>| ys.and_then(|ys| loglog_slope(&qs, &ys)).map(|f| f.slope);
    let report = ConstantsReport {
        seed,
        second_moment_slope: slope(rows.iter().map(|r| r.second_moment_constant).collect()),
        restriction_slope: slope(Some(rows.iter().map(|r| r.restriction_max_ratio).collect())),
        rows,
    };
    let mut table = Table::new(&["q", "trials", "second_moment_constant", "min_union_ratio", "restriction_max_ratio", "identity_failures"]);
    for r in &report.rows {
        table.push(vec![
            r.q.to_string(),
            r.trials.to_string(),
            num(r.second_moment_constant),
            num(r.min_union_ratio),
            r.restriction_max_ratio.to_string(),
            r.identity_failures.to_string(),
        ]);
    }
    let summary = vec![
        format!("q = {:?}, {} trials each", qs, trials),
        format!("second-moment constant slope {}", num(report.second_moment_slope)),
        format!("restriction ratio slope {}", num(report.restriction_slope)),
    ];
    let failures: usize = report.rows.iter().map(|r| r.identity_failures).sum();
    let assertions = vec![identity_assertion(failures, trials * report.rows.len())];
    Ok(outcome(&report, table, summary, assertions))
}

/// The measure named by `fixture` or read from `measure`, with a label for summaries.
pub fn input_measure(p: &Params) -> Result<(GridMeasure, String), CliError> {
    if let Some(path) = &p.measure {
        let mut f = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let mu = read_measure(&mut std::io::BufReader::new(&mut f))?;
        return Ok((mu, path.display().to_string()));
    }
    let name = p.fixture.as_deref().expect("resolved");
    let info = fixtures::lookup(name)?;
    Ok((fixtures::build(info, p.n.expect("resolved"), p.depth, p.ratio)?, name.to_string()))
}

fn decay_rows(table: &mut Table, series: &str, r: &DecayReport) {
    for (x, y) in r.radii.iter().zip(&r.values) {
        table.push(vec![series.to_string(), x.to_string(), y.to_string()]);
    }
}

#[derive(Debug, Clone, Serialize)]
struct Calibration {
    reference: Reference,
    deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
struct DimensionReport {
    input: String,
    d: usize,
    n: usize,
    support_cells: usize,
    box_dimension: DecayReport,
    calibration: Option<Calibration>,
    energy: Option<EnergyReport>,
}

fn frac_dim(p: &Params) -> Result<Outcome, CliError> {
    let (mu, input) = input_measure(p)?;
    let support = mu.support();
    let boxes = box_dimension(&support)?;
    let calibration = p.fixture.as_deref().map(|name| {
        let reference = fixtures::box_reference(fixtures::lookup(name).expect("resolved"), p.ratio);
        Calibration { reference, deviation: boxes.slope - reference.value }
    });
    let energy = p.s.map(|s| energy(&mu, s)).transpose()?;
    let mut table = Table::new(&["inverse_delta", "boxes"]);
    for (x, y) in boxes.radii.iter().zip(&boxes.values) {
        table.push(vec![x.to_string(), y.to_string()]);
    }
    let mut summary = vec![format!("{input}: box dimension {} (residual {})", boxes.slope, boxes.residual)];
    let mut assertions = Vec::new();
    if let Some(c) = &calibration {
        summary.push(format!("reference {} (deviation {})", c.reference.value, c.deviation));
        if let Some(tol) = c.reference.tolerance {
            assertions.push(Assertion::new(
                "box-counting calibration",
                c.deviation.abs() <= tol,
                format!("|{} - {}| <= {tol}", boxes.slope, c.reference.value),
            ));
        }
    }
    if let Some(e) = &energy {
        summary.push(format!("I_{}(μ) = {}{}", e.s, e.value, if e.divergent { " (divergent at this resolution)" } else { "" }));
    }
    let report = DimensionReport {
        input,
        d: mu.d(),
        n: mu.n(),
        support_cells: support.len(),
        box_dimension: boxes,
        calibration,
        energy,
    };
    Ok(outcome(&report, table, summary, assertions))
}

#[derive(Debug, Clone, Serialize)]
struct DecayResult {
    input: String,
    d: usize,
    n: usize,
    /// Planar measures only.
    spherical: Option<DecayReport>,
    envelope: DecayReport,
    ball_growth: DecayReport,
}

fn decay_of(mu: &GridMeasure) -> Result<(Option<DecayReport>, DecayReport, DecayReport), CliError> {
    let fhat = spectrum(mu);
    let spherical = if mu.d() == 2 { Some(spherical_decay(&fhat)?) } else { None };
    Ok((spherical, envelope_decay(&fhat)?, ball_growth(&fhat)?))
}

fn frac_decay(p: &Params) -> Result<Outcome, CliError> {
    let (mu, input) = input_measure(p)?;
    let (spherical, envelope, ball) = decay_of(&mu)?;
    let mut table = Table::new(&["series", "radius", "value"]);
    if let Some(s) = &spherical {
        decay_rows(&mut table, "spherical", s);
    }
    decay_rows(&mut table, "envelope", &envelope);
    decay_rows(&mut table, "ball", &ball);
    let mut summary = vec![format!("{input}: envelope decay exponent {}", envelope.exponent())];
    if let Some(s) = &spherical {
        summary.push(format!("spherical-average decay exponent {}", s.exponent()));
    }
    summary.push(format!("ball-average growth exponent {}", ball.slope));
    let report = DecayResult { input, d: mu.d(), n: mu.n(), spherical, envelope, ball_growth: ball };
    Ok(outcome(&report, table, summary, Vec::new()))
}

#[derive(Debug, Clone, Serialize)]
struct PushResult {
    input: String,
    kind: PushKind,
    d: usize,
    n: usize,
    shrink: f64,
    /// Decay of the measure as given, before shrinking.
    input_decay: DecayReport,
    output_decay: DecayReport,
    output_mass: f64,
    /// `max |ν̂ - μ̂^k|` for sums.
    convolution_error: Option<f64>,
}

/// Spherical averages in the plane, shell maxima on the line.
fn headline_decay(mu: &GridMeasure) -> Result<DecayReport, CliError> {
    let fhat = spectrum(mu);
    Ok(if mu.d() == 2 { spherical_decay(&fhat)? } else { envelope_decay(&fhat)? })
}

fn frac_push(p: &Params) -> Result<Outcome, CliError> {
    let (raw, input) = input_measure(p)?;
    let shrink = p.shrink.expect("resolved");
    let mu = if shrink == 1.0 { raw.clone() } else { pushforward_dilate(&raw, &ScaleSample::dirac(shrink)?)? };
    let kind = p.kind.expect("resolved");
    let zeta = || ScaleSample::uniform_on(p.scale_min.expect("resolved"), p.scale_max.expect("resolved"), p.nodes.expect("resolved"));
    let gamma = || RotationSample::uniform(p.rotations.expect("resolved"));
    let (nu, power) = match kind {
        PushKind::Dilate => (pushforward_dilate(&mu, &zeta()?)?, None),
        PushKind::Rotate => (pushforward_rotate(&mu, &gamma()?)?, None),
        PushKind::Similarity => (pushforward_similarity(&mu, &gamma()?, &zeta()?)?, None),
        PushKind::Sum => (sum_pushforward(&mu, &mu)?, Some(2)),
        PushKind::Kfold => (kfold_sum(&mu, p.k.expect("resolved"))?, Some(p.k.expect("resolved"))),
    };
    let convolution_error = power.map(|k| {
        let (a, b) = (spectrum(&mu), spectrum(&nu));
        a.values().iter().zip(b.values()).map(|(x, y)| (x.powu(k) - y).norm()).fold(0.0, f64::max)
    });
    let input_decay = headline_decay(&raw)?;
    let output_decay = headline_decay(&nu)?;
    let mut table = Table::new(&["series", "radius", "value"]);
    decay_rows(&mut table, "input", &input_decay);
    decay_rows(&mut table, "output", &output_decay);
    let mut summary = vec![
        format!("{input} pushed by {kind:?}: decay exponent {} -> {}", input_decay.exponent(), output_decay.exponent()),
        format!("output mass {}", nu.total_mass()),
    ];
    let mut assertions = Vec::new();
    if let Some(err) = convolution_error {
        summary.push(format!("convolution identity error {err:e}"));
        assertions.push(Assertion::new(
            "convolution theorem",
            err <= CONVOLUTION_TOLERANCE,
            format!("max |ν̂ - μ̂^k| = {err:e} <= {CONVOLUTION_TOLERANCE:e}"),
        ));
    }
    let report = PushResult {
        input,
        kind,
        d: nu.d(),
        n: nu.n(),
        shrink,
        input_decay,
        output_mass: nu.total_mass(),
        output_decay,
        convolution_error,
    };
    Ok(outcome(&report, table, summary, assertions))
}

#[derive(Debug, Clone, Serialize)]
struct UnionResult {
    n: usize,
    translates: usize,
    center: [f64; 2],
    base_cells: usize,
    union_cells: usize,
    box_dimension: DecayReport,
    /// `1 + dim Z` for the translate set `Z`.
    reference: f64,
    projected_agrees: bool,
}

/// Circles translated along a Cantor set: `⋃_{z ∈ Z} (z + C)`.
fn frac_union(p: &Params) -> Result<Outcome, CliError> {
    let n = p.n.expect("resolved");
    let (ratio, length, radius) = (p.ratio.expect("resolved"), p.length.expect("resolved"), p.radius.expect("resolved"));
    let center = [(1.0 - length) / 2.0, 0.5];
    let base = circle_set(n, center, radius)?;
    let maps: Vec<Similarity> =
        cantor_intervals(ratio, p.depth.expect("resolved")).into_iter().map(|a| Similarity::translation([length * a, 0.0])).collect();
    let sample = UnionSample::new(maps);
    let union = union_construct(&base, &sample)?;
    let projected_agrees = union_construct_projected(&base, &sample)? == union;
    let boxes = box_dimension(&union)?;
    let reference = (1.0 + 2f64.ln() / (1.0 / ratio).ln()).min(2.0);
    let mut table = Table::new(&["inverse_delta", "boxes"]);
    for (x, y) in boxes.radii.iter().zip(&boxes.values) {
        table.push(vec![x.to_string(), y.to_string()]);
    }
    let summary = vec![
        format!("{} translates of a radius-{radius} circle, {} cells covered", sample.maps.len(), union.len()),
        format!("box dimension {} (1 + dim Z = {reference})", boxes.slope),
    ];
    let assertions = vec![Assertion::new(
        "union by projections",
        projected_agrees,
        "⋃ γ(E) equals ⋃ P_x(Γ) cell for cell",
    )];
    let report = UnionResult {
        n,
        translates: sample.maps.len(),
        center,
        base_cells: base.len(),
        union_cells: union.len(),
        box_dimension: boxes,
        reference,
        projected_agrees,
    };
    Ok(outcome(&report, table, summary, assertions))
}

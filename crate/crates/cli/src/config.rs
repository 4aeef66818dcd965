//! Experiment parameters: TOML sections per experiment, overridden key by key by flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use packlab_core::rigidpack::InstanceSampler;
use packlab_core::sampling::SetSampler;
use packlab_core::Theorem;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::fixtures;
use crate::CliError;

/// Largest `q^d` accepted by the finite-field experiments.
pub const MAX_FIELD_POINTS: usize = 1 << 14;
pub const MAX_TRIALS: usize = 1_000_000;
/// Largest grid side per dimension.
pub const MAX_GRID: [usize; 2] = [1 << 14, 4096];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FfVerify,
    FfRestrict,
    FfConstants,
    FracDim,
    FracDecay,
    FracUnion,
    FracPush,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::FfVerify => "ff-verify",
            Experiment::FfRestrict => "ff-restrict",
            Experiment::FfConstants => "ff-constants",
            Experiment::FracDim => "frac-dim",
            Experiment::FracDecay => "frac-decay",
            Experiment::FracUnion => "frac-union",
            Experiment::FracPush => "frac-push",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Experiment::FfVerify => &["theorem", "q", "d", "trials", "seed", "sampler"],
            Experiment::FfRestrict => &["q", "d", "trials", "seed", "exhaustive", "sampler"],
            Experiment::FfConstants => &["primes", "trials", "seed"],
            Experiment::FracDim => &["fixture", "measure", "n", "depth", "ratio", "s"],
            Experiment::FracDecay => &["fixture", "measure", "n", "depth", "ratio"],
            Experiment::FracUnion => &["n", "depth", "ratio", "length", "radius"],
            Experiment::FracPush => &[
                "fixture", "measure", "n", "depth", "ratio", "kind", "scale-min", "scale-max", "nodes", "rotations",
                "shrink", "k",
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PushKind {
    /// `(x, r) ↦ r x` with `r` uniform on `[scale-min, scale-max]`.
    Dilate,
    /// `(x, g) ↦ g(x)` with `g` uniform over `rotations` angles.
    Rotate,
    /// `(x, g, r) ↦ r g(x)`.
    Similarity,
    /// `μ ∗ μ`.
    Sum,
    /// `μ^{∗k}`.
    Kfold,
}

fn parse_json(s: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    /// planar-threshold (1.11), general-lower-bound (1.12), small-set (1.13-case1) or medium-set (1.13-case2).
    #[arg(long)]
    pub theorem: Option<Theorem>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sweep every nonempty subset instead of sampling.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub exhaustive: Option<bool>,
    /// Sampler as JSON, e.g. '{"kind":"margin_ladder","levels":[1,2,4]}'.
    #[arg(long, value_parser = parse_json)]
    pub sampler: Option<Value>,
    #[arg(long, value_delimiter = ',')]
    pub primes: Option<Vec<u32>>,
    #[arg(long)]
    pub fixture: Option<String>,
    /// Binary measure file used in place of a fixture.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Energy exponent.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub kind: Option<PushKind>,
    #[arg(long)]
    pub scale_min: Option<f64>,
    #[arg(long)]
    pub scale_max: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub rotations: Option<usize>,
    /// Fixed dilation applied before the pushforward.
    #[arg(long)]
    pub shrink: Option<f64>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// JSON report path.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub json: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub csv: Option<PathBuf>,
}

fn strip_nulls(v: Value) -> serde_json::Map<String, Value> {
    match v {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => unreachable!("params serialize to an object"),
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn budget(msg: impl Into<String>) -> CliError {
    CliError::Budget(msg.into())
}

impl Params {
    /// Set keys only, sorted; output paths are not part of the record.
    pub fn to_value(&self) -> Value {
        Value::Object(strip_nulls(serde_json::to_value(self).expect("params serialize")))
    }

    /// Reads the `[experiment]` section of a TOML file; a missing section is empty.
    pub fn from_file(path: &Path, experiment: Experiment) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_toml(&text, experiment)
    }

    pub fn from_toml(text: &str, experiment: Experiment) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| invalid(e.message().to_string()))?;
        match table.remove(experiment.name()) {
            None => Ok(Self::default()),
            Some(toml::Value::Table(section)) => {
                section.try_into().map_err(|e: toml::de::Error| invalid(format!("[{}] {}", experiment.name(), e.message())))
            }
            Some(_) => Err(invalid(format!("`{}` must be a section", experiment.name()))),
        }
    }

    /// `self` with every key set in `flags` replaced.
    pub fn overlay(self, flags: Params) -> Self {
        let mut base = strip_nulls(serde_json::to_value(&self).expect("params serialize"));
        base.extend(strip_nulls(serde_json::to_value(&flags).expect("params serialize")));
        let mut merged: Params = serde_json::from_value(Value::Object(base)).expect("round trip of own keys");
        merged.json = flags.json.or(self.json);
        merged.csv = flags.csv.or(self.csv);
        merged
    }

    /// Rejects foreign keys, fills defaults and checks ranges and budgets.
    pub fn resolve(mut self, experiment: Experiment) -> Result<Self, CliError> {
        let allowed = experiment.keys();
        if let Some(key) = self.to_value().as_object().expect("object").keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(invalid(format!("`{key}` does not apply to {}", experiment.name())));
        }
        match experiment {
            Experiment::FfVerify => self.resolve_verify()?,
            Experiment::FfRestrict => self.resolve_restrict()?,
            Experiment::FfConstants => self.resolve_constants()?,
            Experiment::FracDim | Experiment::FracDecay | Experiment::FracPush => self.resolve_measure(experiment)?,
            Experiment::FracUnion => self.resolve_union()?,
        }
        Ok(self)
    }

    fn require_seed(&self) -> Result<(), CliError> {
        self.seed.map(|_| ()).ok_or_else(|| invalid("`seed` is required for randomized experiments"))
    }

    fn check_trials(&self) -> Result<(), CliError> {
        match self.trials {
            Some(0) => Err(invalid("`trials` must be positive")),
            Some(t) if t > MAX_TRIALS => Err(budget(format!("{t} trials exceed {MAX_TRIALS}"))),
            _ => Ok(()),
        }
    }

    fn check_field(&mut self) -> Result<(u32, usize), CliError> {
        let q = self.q.ok_or_else(|| invalid("`q` is required"))?;
        let d = *self.d.get_or_insert(2);
        if d == 0 {
            return Err(invalid("`d` must be positive"));
        }
        let points = (q as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if points > MAX_FIELD_POINTS as u128 {
            return Err(budget(format!("q^d = {q}^{d} exceeds {MAX_FIELD_POINTS} points")));
        }
        Ok((q, d))
    }

    fn resolve_verify(&mut self) -> Result<(), CliError> {
        let theorem = self.theorem.ok_or_else(|| invalid("`theorem` is required"))?;
        let (q, d) = self.check_field()?;
        self.trials.get_or_insert(100);
        self.check_trials()?;
        self.require_seed()?;
        let sampler = match self.sampler.take() {
            Some(v) => serde_json::from_value::<InstanceSampler>(v).map_err(|e| invalid(format!("sampler: {e}")))?,
            None => InstanceSampler::default_for(theorem, q, d),
        };
        self.sampler = Some(serde_json::to_value(sampler).expect("sampler serializes"));
        Ok(())
    }

    fn resolve_restrict(&mut self) -> Result<(), CliError> {
        self.check_field()?;
        if *self.exhaustive.get_or_insert(false) {
            if self.trials.is_some() || self.sampler.is_some() || self.seed.is_some() {
                return Err(invalid("an exhaustive sweep takes no trials, sampler or seed"));
            }
            return Ok(());
        }
        self.trials.get_or_insert(1000);
        self.check_trials()?;
        self.require_seed()?;
        let sampler = match self.sampler.take() {
            Some(v) => serde_json::from_value::<SetSampler>(v).map_err(|e| invalid(format!("sampler: {e}")))?,
            None => SetSampler::Mixed,
        };
        sampler.validate()?;
        self.sampler = Some(serde_json::to_value(sampler).expect("sampler serializes"));
        Ok(())
    }

    fn resolve_constants(&mut self) -> Result<(), CliError> {
        let primes = self.primes.get_or_insert_with(|| vec![3, 7, 11, 19, 23]);
        if primes.len() < 2 {
            return Err(invalid("`primes` needs at least two entries for a trend"));
        }
        if let Some(p) = primes.iter().find(|&&p| p % 4 != 3) {
            return Err(invalid(format!("prime {p} is not 3 mod 4")));
        }
        if let Some(p) = primes.iter().find(|&&p| (p as usize).pow(2) > MAX_FIELD_POINTS) {
            return Err(budget(format!("prime {p} exceeds the planar budget")));
        }
        self.trials.get_or_insert(200);
        self.check_trials()?;
        self.require_seed()
    }

    fn resolve_measure(&mut self, experiment: Experiment) -> Result<(), CliError> {
        match (&self.fixture, &self.measure) {
            (Some(_), Some(_)) => return Err(invalid("give either `fixture` or `measure`, not both")),
            (None, None) => return Err(invalid("`fixture` or `measure` is required")),
            (Some(name), None) => {
                let info = fixtures::lookup(name)?;
                let n = *self.n.get_or_insert(1024);
                check_grid(info.d, n)?;
                if info.uses_depth {
                    let depth = *self.depth.get_or_insert(8);
                    if depth == 0 || depth > 20 {
                        return Err(invalid(format!("depth {depth} outside 1..=20")));
                    }
                } else if self.depth.is_some() {
                    return Err(invalid(format!("fixture `{name}` takes no depth")));
                }
                if info.uses_ratio {
                    let r = *self.ratio.get_or_insert(fixtures::DEFAULT_RATIO);
                    if !(r > 0.0 && r < 0.5) {
                        return Err(invalid(format!("ratio {r} outside (0, 1/2)")));
                    }
                } else if self.ratio.is_some() {
                    return Err(invalid(format!("fixture `{name}` takes no ratio")));
                }
            }
            (None, Some(_)) => {
                if self.n.is_some() || self.depth.is_some() || self.ratio.is_some() {
                    return Err(invalid("a measure file fixes its own grid; drop n, depth and ratio"));
                }
            }
        }
        if let Some(s) = self.s {
            if !(s > 0.0) {
                return Err(invalid("`s` must be positive"));
            }
        }
        if experiment == Experiment::FracPush {
            self.resolve_push()?;
        }
        Ok(())
    }

    fn resolve_push(&mut self) -> Result<(), CliError> {
        let kind = *self.kind.get_or_insert(PushKind::Dilate);
        let shrink = *self.shrink.get_or_insert(1.0);
        if !(shrink > 0.0 && shrink <= 1.0) {
            return Err(invalid(format!("shrink {shrink} outside (0, 1]")));
        }
        let scales = matches!(kind, PushKind::Dilate | PushKind::Similarity);
        let rotations = matches!(kind, PushKind::Rotate | PushKind::Similarity);
        if scales {
            let lo = *self.scale_min.get_or_insert(1.0);
            let hi = *self.scale_max.get_or_insert(2.0);
            if !(lo > 0.0 && lo <= hi) {
                return Err(invalid(format!("scale range [{lo}, {hi}] is empty or not positive")));
            }
            let nodes = *self.nodes.get_or_insert(64);
            if nodes == 0 || nodes > 1 << 16 {
                return Err(invalid(format!("nodes {nodes} outside 1..=65536")));
            }
        } else if self.scale_min.is_some() || self.scale_max.is_some() || self.nodes.is_some() {
            return Err(invalid("scale settings apply to dilate and similarity only"));
        }
        if rotations {
            let r = *self.rotations.get_or_insert(64);
            if r == 0 || r > 1 << 12 {
                return Err(invalid(format!("rotations {r} outside 1..=4096")));
            }
        } else if self.rotations.is_some() {
            return Err(invalid("`rotations` applies to rotate and similarity only"));
        }
        if kind == PushKind::Kfold {
            if *self.k.get_or_insert(2) == 0 {
                return Err(invalid("`k` must be positive"));
            }
        } else if self.k.is_some() {
            return Err(invalid("`k` applies to kfold only"));
        }
        Ok(())
    }

    fn resolve_union(&mut self) -> Result<(), CliError> {
        let n = *self.n.get_or_insert(4096);
        check_grid(2, n)?;
        let depth = *self.depth.get_or_insert(8);
        if depth == 0 || depth > 16 {
            return Err(invalid(format!("depth {depth} outside 1..=16")));
        }
        let ratio = *self.ratio.get_or_insert(1.0 / 3.0);
        if !(ratio > 0.0 && ratio < 0.5) {
            return Err(invalid(format!("ratio {ratio} outside (0, 1/2)")));
        }
        let length = *self.length.get_or_insert(0.5);
        let radius = *self.radius.get_or_insert(0.2);
        if !(length > 0.0 && radius > 0.0 && radius < 0.5 && (1.0 - length) / 2.0 > radius) {
            return Err(invalid("the translated circles must fit in the unit box: need (1 - length)/2 > radius"));
        }
        Ok(())
    }
}

fn check_grid(d: usize, n: usize) -> Result<(), CliError> {
    if !n.is_power_of_two() || n < 16 {
        return Err(invalid(format!("n = {n} must be a power of two, at least 16")));
    }
    if n > MAX_GRID[d - 1] {
        return Err(budget(format!("n = {n} exceeds {} in dimension {d}", MAX_GRID[d - 1])));
    }
    Ok(())
}

//! Rigid-motion orbit unions `Θ(E)` over `F_q^d`, the multiplicity function `λ_Θ`,
//! and verifiers for the packing lower bounds.
//!
//! Counting identities are computed in exact integers; only the Fourier side uses `f64`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{FieldSpace, FieldVector};
use crate::ffourier::{dft, set_spectrum, spectrum_from_values, trial_rng, PointSet, SpectrumTable};
use crate::orthgroup::{OrthGroup, OrthMatrix};
use crate::sampling::{uniform_subset, SetSampler};

/// `x ↦ gx + z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RigidMotion {
    g: OrthMatrix,
    z: FieldVector,
}

impl RigidMotion {
    pub fn new(g: OrthMatrix, z: FieldVector) -> Result<Self> {
        if g.q() != z.q() {
            return Err(Error::ModulusMismatch { left: g.q(), right: z.q() });
        }
        if g.dim() != z.dim() {
            return Err(Error::DimensionMismatch { left: g.dim(), right: z.dim() });
        }
        Ok(Self { g, z })
    }

    pub fn identity(q: u32, d: usize) -> Result<Self> {
        Self::new(OrthMatrix::identity(q, d), FieldVector::zero(q, d)?)
    }

    pub fn g(&self) -> &OrthMatrix {
        &self.g
    }

    pub fn z(&self) -> &FieldVector {
        &self.z
    }

    pub fn apply(&self, x: &FieldVector) -> Result<FieldVector> {
        self.g.apply(x)?.add(&self.z)
    }

    /// `self ∘ other`: `x ↦ g₁(g₂x + z₂) + z₁`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let g = self.g.mul(&other.g)?;
        let z = self.g.apply(&other.z)?.add(&self.z)?;
        Self::new(g, z)
    }

    pub fn inverse(&self) -> Self {
        let gt = self.g.transpose();
        let z = gt.apply(&self.z).expect("same shape").neg();
        Self { g: gt, z }
    }
}

/// A set of distinct rigid motions sharing one `(q, d)`, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionSet {
    space: FieldSpace,
    motions: Vec<RigidMotion>,
}

struct MotionBlock {
    perm: Vec<u32>,
    shifts: Vec<usize>,
}

impl MotionSet {
    pub fn new(space: FieldSpace, motions: impl IntoIterator<Item = RigidMotion>) -> Result<Self> {
        let mut motions: Vec<RigidMotion> = motions.into_iter().collect();
        for m in &motions {
            space.check(&m.z)?;
            if m.g.q() != space.q() {
                return Err(Error::ModulusMismatch { left: space.q(), right: m.g.q() });
            }
            if m.g.dim() != space.dim() {
                return Err(Error::DimensionMismatch { left: space.dim(), right: m.g.dim() });
            }
        }
        motions.sort();
        motions.dedup();
        Ok(Self { space, motions })
    }

    /// `G × Z`.
    pub fn product(space: FieldSpace, gs: &[OrthMatrix], zs: &[FieldVector]) -> Result<Self> {
        let mut motions = Vec::with_capacity(gs.len() * zs.len());
        for g in gs {
            for z in zs {
                motions.push(RigidMotion::new(g.clone(), z.clone())?);
            }
        }
        Self::new(space, motions)
    }

    /// Every motion `O(d) × F_q^d`.
    pub fn full(group: &OrthGroup) -> Result<Self> {
        let space = FieldSpace::new(group.q(), group.dim())?;
        let zs: Vec<FieldVector> = space.points().collect();
        Self::product(space, group.elements(), &zs)
    }

    /// `size` distinct motions drawn uniformly from `O(d) × F_q^d`.
    pub fn random<R: Rng>(group: &OrthGroup, size: usize, rng: &mut R) -> Result<Self> {
        let space = FieldSpace::new(group.q(), group.dim())?;
        let total = group.order() * space.size();
        if size > total {
            return Err(Error::InvalidParameter(format!("cannot draw {size} of {total} motions")));
        }
        let motions = index::sample(rng, total, size)
            .into_iter()
            .map(|k| RigidMotion { g: group.elements()[k / space.size()].clone(), z: space.point(k % space.size()) });
        Self::new(space, motions)
    }

    pub fn space(&self) -> FieldSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.motions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motions.is_empty()
    }

    pub fn motions(&self) -> &[RigidMotion] {
        &self.motions
    }

    /// `{θ ∘ φ : θ ∈ Θ}`.
    pub fn precompose(&self, phi: &RigidMotion) -> Result<Self> {
        let motions = self.motions.iter().map(|t| t.compose(phi)).collect::<Result<Vec<_>>>()?;
        Self::new(self.space, motions)
    }

    fn blocks(&self) -> Vec<MotionBlock> {
        let mut out: Vec<MotionBlock> = Vec::new();
        let mut last: Option<&OrthMatrix> = None;
        for m in &self.motions {
            if last != Some(&m.g) {
                out.push(MotionBlock { perm: m.g.permutation(&self.space), shifts: Vec::new() });
                last = Some(&m.g);
            }
            out.last_mut().expect("pushed above").shifts.push(self.space.index_of(m.z.coords()));
        }
        out
    }
}

fn check_pair(theta: &MotionSet, set: &PointSet) -> Result<()> {
    let (a, b) = (theta.space(), set.space());
    if a.q() != b.q() {
        return Err(Error::ModulusMismatch { left: a.q(), right: b.q() });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

/// `λ(y) = #{(x, θ) ∈ E × Θ : θ(x) = y}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityFunction {
    space: FieldSpace,
    counts: Vec<u64>,
}

impl MultiplicityFunction {
    pub fn space(&self) -> FieldSpace {
        self.space
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    pub fn second_moment(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128 * c as u128).sum()
    }

    pub fn support(&self) -> PointSet {
        let mask = self.counts.iter().map(|&c| c > 0).collect();
        PointSet::from_mask(self.space, mask).expect("mask sized to space")
    }

    pub fn as_complex(&self) -> Vec<Complex64> {
        self.counts.iter().map(|&c| Complex64::new(c as f64, 0.0)).collect()
    }
}

pub fn multiplicity(theta: &MotionSet, set: &PointSet) -> Result<MultiplicityFunction> {
    check_pair(theta, set)?;
    let space = set.space();
    let mut counts = vec![0u64; space.size()];
    let points = set.indices();
    for block in theta.blocks() {
        for &x in &points {
            let gx = block.perm[x] as usize;
            for &z in &block.shifts {
                counts[space.add_at(gx, z)] += 1;
            }
        }
    }
    Ok(MultiplicityFunction { space, counts })
}

/// `Θ(E) = ⋃_θ θ(E)`, computed point by point without counting.
pub fn orbit_union(theta: &MotionSet, set: &PointSet) -> Result<PointSet> {
    check_pair(theta, set)?;
    let mut out = PointSet::empty(set.space());
    for m in theta.motions() {
        for x in set.indices() {
            let y = m.apply(&set.space().point(x))?;
            out.insert_index(set.space().index_of(y.coords()));
        }
    }
    Ok(out)
}

/// `λ̂_Θ = dft(λ_Θ)`.
pub fn lambda_fourier(theta: &MotionSet, set: &PointSet) -> Result<SpectrumTable> {
    let lambda = multiplicity(theta, set)?;
    dft(lambda.space(), &lambda.as_complex())
}

/// `λ̂_Θ(m) = q^d Σ_g Ê(g⁻¹m) f_g(m)` with `f_g = dft(1_{Z_g})`, `Z_g = {z : (g, z) ∈ Θ}`.
pub fn lambda_fourier_factored(theta: &MotionSet, set: &PointSet) -> Result<SpectrumTable> {
    check_pair(theta, set)?;
    let space = set.space();
    let e_hat = set_spectrum(set);
    let scale = space.size() as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); space.size()];
    let mut scratch = vec![0u32; space.dim()];
    let mut start = 0;
    let motions = theta.motions();
    while start < motions.len() {
        let g = &motions[start].g;
        let end = start + motions[start..].iter().take_while(|m| &m.g == g).count();
        let shifts = PointSet::from_indices(space, motions[start..end].iter().map(|m| space.index_of(m.z.coords())))?;
        let f_g = set_spectrum(&shifts);
        let g_inv = g.transpose();
        for (m, v) in values.iter_mut().enumerate() {
            let gm = g_inv.apply_index(&space, m, &mut scratch);
            *v += e_hat.at(gm) * f_g.at(m) * scale;
        }
        start = end;
    }
    spectrum_from_values(space, values)
}

/// `Σ_y λ_Θ(y)^2`.
pub fn second_moment(theta: &MotionSet, set: &PointSet) -> Result<u128> {
    Ok(multiplicity(theta, set)?.second_moment())
}

/// `|E|^2 |Θ|^2 / Σ λ^2`, the Cauchy–Schwarz lower bound on `|Θ(E)|`.
pub fn cs_lower_bound(theta: &MotionSet, set: &PointSet) -> Result<Ratio<u128>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if theta.is_empty() {
        return Err(Error::EmptyMotionSet);
    }
    let lambda = multiplicity(theta, set)?;
    Ok(cs_bound_from(&lambda, set.len(), theta.len()))
}

fn cs_bound_from(lambda: &MultiplicityFunction, set_size: usize, motion_count: usize) -> Ratio<u128> {
    let n = set_size as u128 * motion_count as u128;
    Ratio::new(n * n, lambda.second_moment())
}

/// `|Θ|^2 |E|^2 / q^2 + q |E|^{3/2} |Θ|`, the planar second-moment bound with unit constant.
pub fn planar_second_moment_bound(q: u32, set_size: usize, motion_count: usize) -> f64 {
    let (q, e, t) = (q as f64, set_size as f64, motion_count as f64);
    t * t * e * e / (q * q) + q * e.powf(1.5) * t
}

/// The packing lower bounds that can be checked exhaustively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// `d = 2`, `q ≡ 3 mod 4`: `|E|^{1/2}|Θ| ≥ q^3` forces `|Θ(E)| ≳ q^2`.
    #[serde(rename = "1.11", alias = "planar-threshold")]
    PlanarThreshold,
    /// `|Θ(E)| ≳ min{q^d, |E||Θ| / (q^d |O(d-1)|)}`.
    #[serde(rename = "1.12", alias = "general-lower-bound")]
    GeneralLowerBound,
    /// `|E| < q^{(d-1)/2}`: `|Θ(E)| ≳ min{q^d, |E||Θ| / (q^{d-1} |O(d-1)|)}`.
    #[serde(rename = "1.13-case1", alias = "small-set")]
    SmallSet,
    /// `q^{(d-1)/2} ≤ |E| ≤ q^{(d+1)/2}`: `|Θ(E)| ≳ min{q^d, |Θ| / (q^{(d-1)/2} |O(d-1)|)}`.
    #[serde(rename = "1.13-case2", alias = "medium-set")]
    MediumSet,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [Theorem::PlanarThreshold, Theorem::GeneralLowerBound, Theorem::SmallSet, Theorem::MediumSet];

    pub fn id(&self) -> &'static str {
        match self {
            Theorem::PlanarThreshold => "1.11",
            Theorem::GeneralLowerBound => "1.12",
            Theorem::SmallSet => "1.13-case1",
            Theorem::MediumSet => "1.13-case2",
        }
    }

    /// Descriptive name accepted wherever the id is.
    pub fn alias(&self) -> &'static str {
        match self {
            Theorem::PlanarThreshold => "planar-threshold",
            Theorem::GeneralLowerBound => "general-lower-bound",
            Theorem::SmallSet => "small-set",
            Theorem::MediumSet => "medium-set",
        }
    }

    /// Congruence and dimension hypotheses on `(q, d)`.
    pub fn check_hypotheses(&self, q: u32, d: usize) -> Result<()> {
        match self {
            Theorem::PlanarThreshold => {
                if d != 2 || q % 4 != 3 {
                    return Err(Error::Hypothesis(format!("needs d = 2 and q ≡ 3 mod 4, got q={q}, d={d}")));
                }
            }
            Theorem::GeneralLowerBound => {
                if d < 2 {
                    return Err(Error::Hypothesis(format!("needs d >= 2, got d={d}")));
                }
            }
            Theorem::SmallSet | Theorem::MediumSet => {
                let odd = d >= 3 && d % 2 == 1;
                let even = d % 4 == 2 && q % 4 == 3;
                if !(odd || even) {
                    return Err(Error::Hypothesis(format!(
                        "needs d >= 3 odd, or d ≡ 2 mod 4 with q ≡ 3 mod 4; got q={q}, d={d}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Size hypothesis on `|E|`, evaluated in integers.
    fn size_hypothesis(&self, q: u32, d: usize, set_size: usize) -> bool {
        let e2 = (set_size as u128).pow(2);
        let qd = |k: usize| (q as u128).pow(k as u32);
        match self {
            Theorem::SmallSet => e2 < qd(d - 1),
            Theorem::MediumSet => qd(d - 1) <= e2 && e2 <= qd(d + 1),
            _ => true,
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.id() == s || t.alias() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown theorem '{s}'")))
    }
}

/// How verification instances `(E, Θ)` are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSampler {
    /// Trial `t` targets margin `levels[t % len]` for `|E|^{1/2}|Θ| / q^3`: `|E|` is uniform over
    /// the feasible sizes and `|Θ| = ⌈level · q^3 / |E|^{1/2}⌉` motions are drawn uniformly.
    MarginLadder { levels: Vec<f64> },
    /// `E` from `set`; `Θ` uniform with `|Θ|` a uniform fraction in `[min_fraction, max_fraction]` of all motions.
    Random { set: SetSampler, min_fraction: f64, max_fraction: f64 },
    /// `E` from `set`; `Θ = G' × Z` for a random `G' ⊂ O(d)` and random translations `Z`.
    Product { set: SetSampler, group_fraction: f64, translation_density: f64 },
}

impl InstanceSampler {
    pub fn default_for(theorem: Theorem, q: u32, d: usize) -> Self {
        let root = |k: usize| (q as f64).powf(k as f64 / 2.0);
        match theorem {
            Theorem::PlanarThreshold => InstanceSampler::MarginLadder { levels: vec![1.0, 2.0, 4.0, 8.0] },
            Theorem::GeneralLowerBound => {
                InstanceSampler::Random { set: SetSampler::Mixed, min_fraction: 0.001, max_fraction: 0.2 }
            }
            Theorem::SmallSet => {
                let max = (root(d - 1).ceil() as usize).saturating_sub(1).max(1);
                InstanceSampler::Random { set: SetSampler::SizeRange { min: 1, max }, min_fraction: 0.001, max_fraction: 0.2 }
            }
            Theorem::MediumSet => {
                let min = root(d - 1).ceil() as usize;
                let max = (root(d + 1).floor() as usize).max(min);
                InstanceSampler::Random { set: SetSampler::SizeRange { min, max }, min_fraction: 0.001, max_fraction: 0.2 }
            }
        }
    }

    fn validate(&self, theorem: Theorem) -> Result<()> {
        match self {
            InstanceSampler::MarginLadder { levels } => {
                if theorem != Theorem::PlanarThreshold {
                    return Err(Error::InvalidParameter("margin ladder applies to theorem 1.11 only".into()));
                }
                if levels.is_empty() || levels.iter().any(|l| !(*l > 0.0)) {
                    return Err(Error::InvalidParameter("margin levels must be positive".into()));
                }
            }
            InstanceSampler::Random { set, min_fraction, max_fraction } => {
                set.validate()?;
                if !(*min_fraction > 0.0 && min_fraction <= max_fraction && *max_fraction <= 1.0) {
                    return Err(Error::InvalidParameter("motion fractions must satisfy 0 < min <= max <= 1".into()));
                }
            }
            InstanceSampler::Product { set, group_fraction, translation_density } => {
                set.validate()?;
                if !(*group_fraction > 0.0 && *group_fraction <= 1.0 && *translation_density > 0.0 && *translation_density <= 1.0) {
                    return Err(Error::InvalidParameter("product fractions must lie in (0, 1]".into()));
                }
            }
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, group: &OrthGroup, space: FieldSpace, trial: usize, rng: &mut R) -> Result<(PointSet, MotionSet, Option<f64>)> {
        let total = group.order() * space.size();
        match self {
            InstanceSampler::MarginLadder { levels } => {
                let level = levels[trial % levels.len()];
                let q3 = (space.q() as f64).powi(3);
                let need = level * q3 / total as f64;
                let min_size = ((need * need).ceil() as usize).max(1);
                if min_size > space.size() {
                    return Err(Error::InvalidParameter(format!(
                        "margin level {level} is unreachable at q={}",
                        space.q()
                    )));
                }
                let size = rng.gen_range(min_size..=space.size());
                let set = uniform_subset(space, size, rng)?;
                let motions = ((level * q3 / (size as f64).sqrt()).ceil() as usize).min(total);
                Ok((set, MotionSet::random(group, motions, rng)?, Some(level)))
            }
            InstanceSampler::Random { set, min_fraction, max_fraction } => {
                let e = set.sample(space, rng)?;
                let frac = if min_fraction < max_fraction { rng.gen_range(*min_fraction..=*max_fraction) } else { *min_fraction };
                let motions = ((frac * total as f64).round() as usize).clamp(1, total);
                Ok((e, MotionSet::random(group, motions, rng)?, None))
            }
            InstanceSampler::Product { set, group_fraction, translation_density } => {
                let e = set.sample(space, rng)?;
                let gcount = ((group_fraction * group.order() as f64).round() as usize).clamp(1, group.order());
                let gs: Vec<OrthMatrix> = index::sample(rng, group.order(), gcount)
                    .into_iter()
                    .map(|i| group.elements()[i].clone())
                    .collect();
                let zs = SetSampler::Density { p: *translation_density }.sample(space, rng)?;
                let zv: Vec<FieldVector> = zs.indices().into_iter().map(|i| space.point(i)).collect();
                Ok((e, MotionSet::product(space, &gs, &zv)?, None))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub set_size: usize,
    pub motion_count: usize,
    /// Target margin when the sampler prescribes one.
    pub margin_level: Option<f64>,
    /// Measured margin of the size hypothesis; `None` when the theorem has none.
    pub margin: Option<f64>,
    pub hypothesis_holds: bool,
    pub union_size: usize,
    /// The theorem's bound with unit constant.
    pub bound: f64,
    pub ratio: f64,
    pub second_moment: u128,
    pub cs_bound: f64,
    /// `Σλ² / (|Θ|²|E|²/q² + q|E|^{3/2}|Θ|)`, planar instances only.
    pub second_moment_ratio: Option<f64>,
    pub identities_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginBin {
    pub level: f64,
    pub trials: usize,
    pub min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub hypothesis_trials: usize,
    pub min_ratio: Option<f64>,
    pub min_ratio_trial: Option<usize>,
    pub all_ratios_positive: bool,
    pub by_margin: Vec<MarginBin>,
    /// Whether the per-level minimum ratio never decreases as the margin level grows.
    pub margin_trend_nondecreasing: Option<bool>,
    pub max_second_moment_ratio: Option<f64>,
    pub identity_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem: Theorem,
    pub q: u32,
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
    pub group_order: usize,
    /// `|O(d-1)|` at the same `q`.
    pub stabilizer_normalizer: usize,
    pub sampler: InstanceSampler,
    pub records: Vec<TrialRecord>,
    pub summary: VerificationSummary,
}

/// Exact checks of one instance: `Σλ = |E||Θ|`, `supp λ = Θ(E)`, CS bound `≤ |Θ(E)|`
/// and `λ̂(0) = |E||Θ|/q^d` to `1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceCheck {
    pub multiplicity: MultiplicityFunction,
    pub union: PointSet,
    pub cs_bound: Ratio<u128>,
    pub total_ok: bool,
    pub support_ok: bool,
    pub cs_ok: bool,
    pub lambda_hat_zero_ok: bool,
}

impl InstanceCheck {
    pub fn all_hold(&self) -> bool {
        self.total_ok && self.support_ok && self.cs_ok && self.lambda_hat_zero_ok
    }
}

pub fn check_instance(theta: &MotionSet, set: &PointSet) -> Result<InstanceCheck> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if theta.is_empty() {
        return Err(Error::EmptyMotionSet);
    }
    let lambda = multiplicity(theta, set)?;
    let union = orbit_union(theta, set)?;
    let n = set.len() as u128 * theta.len() as u128;
    let cs = cs_bound_from(&lambda, set.len(), theta.len());
    let hat = dft(lambda.space(), &lambda.as_complex())?;
    let want = n as f64 / set.space().size() as f64;
    Ok(InstanceCheck {
        total_ok: lambda.total() == n,
        support_ok: lambda.support() == union,
        cs_ok: cs <= Ratio::from_integer(union.len() as u128),
        lambda_hat_zero_ok: (hat.at(0) - Complex64::new(want, 0.0)).norm() <= 1e-10,
        multiplicity: lambda,
        union,
        cs_bound: cs,
    })
}

fn ratio_to_f64(r: &Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn bound_and_margin(theorem: Theorem, q: u32, d: usize, set_size: usize, motions: usize, normalizer: usize) -> (f64, Option<f64>) {
    let (qf, e, t, o) = (q as f64, set_size as f64, motions as f64, normalizer as f64);
    let qd = qf.powi(d as i32);
    let half_low = qf.powf((d as f64 - 1.0) / 2.0);
    let half_high = qf.powf((d as f64 + 1.0) / 2.0);
    match theorem {
        Theorem::PlanarThreshold => (qf * qf, Some(e.sqrt() * t / qf.powi(3))),
        Theorem::GeneralLowerBound => (qd.min(e * t / (qd * o)), None),
        Theorem::SmallSet => (qd.min(e * t / (qf.powi(d as i32 - 1) * o)), Some(half_low / e)),
        Theorem::MediumSet => (qd.min(t / (half_low * o)), Some((e / half_low).min(half_high / e))),
    }
}

/// Runs `trials` seeded instances and records `|Θ(E)|` against the theorem's bound.
///
/// Trials are independent streams of `seed` and merged in trial order, so the report
/// does not depend on the worker count.
pub fn verify_theorem(theorem: Theorem, q: u32, d: usize, sampler: &InstanceSampler, trials: usize, seed: u64) -> Result<VerificationReport> {
    theorem.check_hypotheses(q, d)?;
    sampler.validate(theorem)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let space = FieldSpace::new(q, d)?;
    let group = OrthGroup::enumerate(q, d)?;
    let normalizer = OrthGroup::enumerate(q, d - 1)?.order();

    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let (set, theta, level) = sampler.draw(&group, space, t, &mut rng)?;
            let check = check_instance(&theta, &set)?;
            let (bound, margin) = bound_and_margin(theorem, q, d, set.len(), theta.len(), normalizer);
            let hypothesis_holds = match theorem {
                Theorem::PlanarThreshold => margin.is_some_and(|m| m >= 1.0),
                _ => theorem.size_hypothesis(q, d, set.len()),
            };
            let sm = check.multiplicity.second_moment();
            Ok(TrialRecord {
                trial: t,
                set_size: set.len(),
                motion_count: theta.len(),
                margin_level: level,
                margin,
                hypothesis_holds,
                union_size: check.union.len(),
                bound,
                ratio: check.union.len() as f64 / bound,
                second_moment: sm,
                cs_bound: ratio_to_f64(&check.cs_bound),
                second_moment_ratio: (d == 2).then(|| sm as f64 / planar_second_moment_bound(q, set.len(), theta.len())),
                identities_hold: check.all_hold(),
            })
        })
        .collect::<Result<_>>()?;

    let summary = summarize(&records);
    Ok(VerificationReport {
        theorem,
        q,
        d,
        trials,
        seed,
        group_order: group.order(),
        stabilizer_normalizer: normalizer,
        sampler: sampler.clone(),
        records,
        summary,
    })
}

fn summarize(records: &[TrialRecord]) -> VerificationSummary {
    let eligible: Vec<&TrialRecord> = records.iter().filter(|r| r.hypothesis_holds).collect();
    let min = eligible.iter().min_by(|a, b| a.ratio.total_cmp(&b.ratio).then(a.trial.cmp(&b.trial)));
    let mut levels: Vec<f64> = records.iter().filter_map(|r| r.margin_level).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let by_margin: Vec<MarginBin> = levels
        .iter()
        .filter_map(|&level| {
            let bin: Vec<&&TrialRecord> = eligible.iter().filter(|r| r.margin_level == Some(level)).collect();
            let min_ratio = bin.iter().map(|r| r.ratio).min_by(f64::total_cmp)?;
            Some(MarginBin { level, trials: bin.len(), min_ratio })
        })
        .collect();
    let margin_trend_nondecreasing =
        (by_margin.len() >= 2).then(|| by_margin.windows(2).all(|w| w[1].min_ratio >= w[0].min_ratio));
    VerificationSummary {
        hypothesis_trials: eligible.len(),
        min_ratio: min.map(|r| r.ratio),
        min_ratio_trial: min.map(|r| r.trial),
        all_ratios_positive: eligible.iter().all(|r| r.ratio > 0.0),
        by_margin,
        margin_trend_nondecreasing,
        max_second_moment_ratio: records.iter().filter_map(|r| r.second_moment_ratio).max_by(f64::total_cmp),
        identity_failures: records.iter().filter(|r| !r.identities_hold).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(q: u32) -> (FieldSpace, OrthGroup) {
        (FieldSpace::new(q, 2).unwrap(), OrthGroup::enumerate(q, 2).unwrap())
    }

    fn identity_only(space: FieldSpace) -> MotionSet {
        MotionSet::new(space, [RigidMotion::identity(space.q(), space.dim()).unwrap()]).unwrap()
    }

    #[test]
    fn identity_motion_fixes_sets() {
        let (space, _) = plane(7);
        let set = PointSet::from_indices(space, [0, 3, 17, 40]).unwrap();
        assert_eq!(orbit_union(&identity_only(space), &set).unwrap(), set);
    }

    #[test]
    fn translates_of_a_point_fill_the_space() {
        let (space, _) = plane(5);
        let zs: Vec<FieldVector> = space.points().collect();
        let theta = MotionSet::product(space, &[OrthMatrix::identity(5, 2)], &zs).unwrap();
        let set = PointSet::from_indices(space, [0]).unwrap();
        assert_eq!(orbit_union(&theta, &set).unwrap(), PointSet::full(space));
    }

    #[test]
    fn rotating_two_points_gives_unit_circle_and_origin() {
        let (space, group) = plane(3);
        let theta = MotionSet::product(space, group.elements(), &[FieldVector::zero(3, 2).unwrap()]).unwrap();
        let set = PointSet::from_indices(space, [space.index_of(&[0, 0]), space.index_of(&[1, 0])]).unwrap();
        let union = orbit_union(&theta, &set).unwrap();
        assert_eq!(union.len(), 5);
        for i in union.indices() {
            let n = space.norm_at(i);
            assert!(i == 0 || n == 1);
        }
    }

    #[test]
    fn multiplicity_examples() {
        let (space, group) = plane(7);
        let x0 = space.index_of(&[2, 5]);
        let theta0 = RigidMotion::new(group.elements()[3].clone(), FieldVector::new(7, &[1, 4]).unwrap()).unwrap();
        let theta = MotionSet::new(space, [theta0.clone()]).unwrap();
        let single = PointSet::from_indices(space, [x0]).unwrap();
        let lambda = multiplicity(&theta, &single).unwrap();
        let y = space.index_of(theta0.apply(&space.point(x0)).unwrap().coords());
        for (i, &c) in lambda.counts().iter().enumerate() {
            assert_eq!(c, u64::from(i == y));
        }
        assert_eq!(second_moment(&theta, &single).unwrap(), 1);
        assert_eq!(cs_lower_bound(&theta, &single).unwrap(), Ratio::from_integer(1));

        let full = PointSet::full(space);
        let lambda = multiplicity(&theta, &full).unwrap();
        assert!(lambda.counts().iter().all(|&c| c == 1));
        assert_eq!(second_moment(&theta, &full).unwrap(), 49);
        assert_eq!(cs_lower_bound(&theta, &full).unwrap(), Ratio::from_integer(49));
    }

    #[test]
    fn lambda_hat_of_point_mass() {
        let (space, _) = plane(5);
        let hat = lambda_fourier(&identity_only(space), &PointSet::from_indices(space, [0]).unwrap()).unwrap();
        assert!(hat.values().iter().all(|v| (v.norm() - 1.0 / 25.0).abs() < 1e-14));
    }

    #[test]
    fn factored_lambda_hat_matches_transform() {
        let (space, group) = plane(3);
        for t in 0..25 {
            let mut rng = trial_rng(77, t);
            let set = SetSampler::Density { p: 0.4 }.sample(space, &mut rng).unwrap();
            let theta = MotionSet::random(&group, rng.gen_range(1..=72), &mut rng).unwrap();
            let a = lambda_fourier(&theta, &set).unwrap();
            let b = lambda_fourier_factored(&theta, &set).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).norm() < 1e-10);
            }
            let want = (set.len() * theta.len()) as f64 / 9.0;
            assert!((a.at(0).re - want).abs() < 1e-10);
            // Σλ² = q^d Σ|λ̂|²
            let sm = second_moment(&theta, &set).unwrap() as f64;
            assert!((sm - 9.0 * a.energy()).abs() < 1e-8);
        }
    }

    #[test]
    fn cs_bound_never_exceeds_union_size() {
        let (space, group) = plane(7);
        for t in 0..200 {
            let mut rng = trial_rng(3, t);
            let set = SetSampler::Mixed.sample(space, &mut rng).unwrap();
            let theta = MotionSet::random(&group, rng.gen_range(1..=200), &mut rng).unwrap();
            let check = check_instance(&theta, &set).unwrap();
            assert!(check.all_hold(), "trial {t}");
        }
    }

    #[test]
    fn motion_algebra() {
        let (space, group) = plane(7);
        let mut rng = trial_rng(11, 0);
        let a = MotionSet::random(&group, 5, &mut rng).unwrap();
        let x = space.point(23);
        for m in a.motions() {
            let back = m.inverse().apply(&m.apply(&x).unwrap()).unwrap();
            assert_eq!(back, x);
            for n in a.motions() {
                let lhs = m.compose(n).unwrap().apply(&x).unwrap();
                assert_eq!(lhs, m.apply(&n.apply(&x).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn mismatched_inputs_error() {
        let (space, _) = plane(7);
        let other = PointSet::full(FieldSpace::new(3, 2).unwrap());
        assert!(orbit_union(&identity_only(space), &other).is_err());
        assert!(multiplicity(&identity_only(space), &other).is_err());
        assert!(matches!(cs_lower_bound(&identity_only(space), &PointSet::empty(space)), Err(Error::EmptySet)));
    }

    #[test]
    fn full_sets_reach_the_planar_target() {
        let (space, group) = plane(3);
        let theta = MotionSet::full(&group).unwrap();
        let union = orbit_union(&theta, &PointSet::full(space)).unwrap();
        assert_eq!(union.len(), 9);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let s = InstanceSampler::default_for(Theorem::PlanarThreshold, 5, 2);
        assert!(matches!(verify_theorem(Theorem::PlanarThreshold, 5, 2, &s, 4, 0), Err(Error::Hypothesis(_))));
        let s = InstanceSampler::default_for(Theorem::SmallSet, 5, 2);
        assert!(matches!(verify_theorem(Theorem::SmallSet, 5, 2, &s, 4, 0), Err(Error::Hypothesis(_))));
        assert!(Theorem::SmallSet.check_hypotheses(7, 2).is_ok());
        assert!(Theorem::MediumSet.check_hypotheses(5, 3).is_ok());
        assert!(Theorem::MediumSet.check_hypotheses(5, 4).is_err());
        let ladder = InstanceSampler::MarginLadder { levels: vec![1.0] };
        assert!(verify_theorem(Theorem::GeneralLowerBound, 3, 3, &ladder, 4, 0).is_err());
    }

    #[test]
    fn theorem_ids_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(t.id().parse::<Theorem>().unwrap(), t);
            assert_eq!(t.alias().parse::<Theorem>().unwrap(), t);
            assert_eq!(serde_json::from_str::<Theorem>(&format!("\"{}\"", t.alias())).unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.id()));
        }
        assert!("2.0".parse::<Theorem>().is_err());
    }

    #[test]
    fn planar_verification_small_run() {
        let sampler = InstanceSampler::default_for(Theorem::PlanarThreshold, 7, 2);
        let report = verify_theorem(Theorem::PlanarThreshold, 7, 2, &sampler, 40, 42).unwrap();
        assert_eq!(report.records.len(), 40);
        assert_eq!(report.summary.identity_failures, 0);
        assert_eq!(report.summary.hypothesis_trials, 40);
        assert!(report.summary.all_ratios_positive);
        assert!(report.summary.min_ratio.unwrap() > 0.0);
        assert_eq!(report.stabilizer_normalizer, 2);
        let again = verify_theorem(Theorem::PlanarThreshold, 7, 2, &sampler, 40, 42).unwrap();
        assert_eq!(report, again);
    }
}

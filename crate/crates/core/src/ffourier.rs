//! Fourier analysis on `F_q^d` with the normalization
//! `f̂(m) = q^{-d} Σ_x χ(-x·m) f(x)` and inversion `f(x) = Σ_m χ(x·m) f̂(m)`,
//! plus the spherical restriction quantities `M*(E)`, `M(E)` and the zero-sphere mass.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{AdditiveCharacter, FieldSpace, FieldVector};
use crate::sampling::SetSampler;
use crate::trend;

/// A subset of `F_q^d` stored as a dense membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointSet {
    space: FieldSpace,
    mask: Vec<bool>,
    len: usize,
}

impl PointSet {
    pub fn empty(space: FieldSpace) -> Self {
        Self { space, mask: vec![false; space.size()], len: 0 }
    }

    pub fn full(space: FieldSpace) -> Self {
        Self { space, mask: vec![true; space.size()], len: space.size() }
    }

    pub fn from_mask(space: FieldSpace, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != space.size() {
            return Err(Error::DimensionMismatch { left: space.size(), right: mask.len() });
        }
        let len = mask.iter().filter(|&&b| b).count();
        Ok(Self { space, mask, len })
    }

    pub fn from_indices(space: FieldSpace, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = Self::empty(space);
        for i in indices {
            if i >= space.size() {
                return Err(Error::InvalidParameter(format!("index {i} outside F_q^d")));
            }
            set.insert_index(i);
        }
        Ok(set)
    }

    pub fn from_vectors<'a>(space: FieldSpace, points: impl IntoIterator<Item = &'a FieldVector>) -> Result<Self> {
        let mut set = Self::empty(space);
        for p in points {
            space.check(p)?;
            set.insert_index(space.index_of(p.coords()));
        }
        Ok(set)
    }

    /// The set whose members are the low bits of `bits` (used by exhaustive sweeps).
    pub fn from_bits(space: FieldSpace, bits: u64) -> Result<Self> {
        if space.size() > 64 {
            return Err(Error::InvalidParameter("bit encoding needs q^d <= 64".into()));
        }
        Self::from_indices(space, (0..space.size()).filter(|i| bits >> i & 1 == 1))
    }

    pub fn insert_index(&mut self, i: usize) -> bool {
        let fresh = !self.mask[i];
        if fresh {
            self.mask[i] = true;
            self.len += 1;
        }
        fresh
    }

    pub fn space(&self) -> FieldSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn contains(&self, v: &FieldVector) -> Result<bool> {
        self.space.check(v)?;
        Ok(self.mask[self.space.index_of(v.coords())])
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn indices(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    /// Characteristic function as a complex array.
    pub fn indicator(&self) -> Vec<Complex64> {
        self.mask.iter().map(|&b| Complex64::new(if b { 1.0 } else { 0.0 }, 0.0)).collect()
    }
}

/// `m ↦ f̂(m)` over `F_q^d`, in the shared index layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    space: FieldSpace,
    values: Vec<Complex64>,
}

impl SpectrumTable {
    pub fn space(&self) -> FieldSpace {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, m: usize) -> Complex64 {
        self.values[m]
    }

    pub fn at_vector(&self, m: &FieldVector) -> Result<Complex64> {
        self.space.check(m)?;
        Ok(self.values[self.space.index_of(m.coords())])
    }

    /// `Σ_m |f̂(m)|^2`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn check_len(space: &FieldSpace, n: usize) -> Result<()> {
    if n != space.size() {
        return Err(Error::DimensionMismatch { left: space.size(), right: n });
    }
    Ok(())
}

/// One pass of `out[m] = Σ_x χ(sign · x m) in[x]` along every axis.
fn transform_axes(space: &FieldSpace, data: &mut [Complex64], sign: i64) {
    let q = space.q() as usize;
    let chi = AdditiveCharacter::new(space.q()).expect("validated modulus");
    // kernel[x * q + m] = χ(sign x m)
    let kernel: Vec<Complex64> =
        (0..q * q).map(|k| chi.eval(sign * ((k / q) * (k % q)) as i64)).collect();
    let mut line = vec![Complex64::new(0.0, 0.0); q];
    let mut stride = 1;
    for _ in 0..space.dim() {
        let block = stride * q;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (x, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + x * stride];
                }
                for m in 0..q {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (x, v) in line.iter().enumerate() {
                        acc += kernel[x * q + m] * v;
                    }
                    data[start + m * stride] = acc;
                }
            }
        }
        stride = block;
    }
}

/// Forward transform, computed axis by axis.
pub fn dft(space: FieldSpace, f: &[Complex64]) -> Result<SpectrumTable> {
    check_len(&space, f.len())?;
    let mut values = f.to_vec();
    transform_axes(&space, &mut values, -1);
    let scale = space.size() as f64;
    for v in values.iter_mut() {
        *v /= scale;
    }
    Ok(SpectrumTable { space, values })
}

/// Forward transform straight from the definition; `O(q^{2d})`.
pub fn dft_naive(space: FieldSpace, f: &[Complex64]) -> Result<SpectrumTable> {
    check_len(&space, f.len())?;
    let chi = AdditiveCharacter::new(space.q())?;
    let scale = space.size() as f64;
    let values = (0..space.size())
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, v) in f.iter().enumerate() {
                acc += chi.eval(-(space.dot_at(x, m) as i64)) * v;
            }
            acc / scale
        })
        .collect();
    Ok(SpectrumTable { space, values })
}

pub fn inverse_dft(fhat: &SpectrumTable) -> Vec<Complex64> {
    let mut values = fhat.values.clone();
    transform_axes(&fhat.space, &mut values, 1);
    values
}

pub fn spectrum_from_values(space: FieldSpace, values: Vec<Complex64>) -> Result<SpectrumTable> {
    check_len(&space, values.len())?;
    Ok(SpectrumTable { space, values })
}

/// Transform of a set's indicator.
pub fn set_spectrum(set: &PointSet) -> SpectrumTable {
    dft(set.space(), &set.indicator()).expect("indicator has the right length")
}

/// The level sets `S_j = {m : ‖m‖ = j}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SphereDecomposition {
    space: FieldSpace,
    classes: Vec<Vec<usize>>,
}

impl SphereDecomposition {
    pub fn space(&self) -> FieldSpace {
        self.space
    }

    pub fn sphere(&self, j: u32) -> &[usize] {
        &self.classes[j as usize]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    /// `Σ_{m∈S_j} |F(m)|^2` for every `j`.
    pub fn masses(&self, fhat: &SpectrumTable) -> Vec<f64> {
        self.classes.iter().map(|c| c.iter().map(|&m| fhat.values[m].norm_sqr()).sum()).collect()
    }
}

pub fn spheres(q: u32, d: usize) -> Result<SphereDecomposition> {
    let space = FieldSpace::new(q, d)?;
    Ok(spheres_of(space))
}

pub fn spheres_of(space: FieldSpace) -> SphereDecomposition {
    let mut classes = vec![Vec::new(); space.q() as usize];
    for m in 0..space.size() {
        classes[space.norm_at(m) as usize].push(m);
    }
    SphereDecomposition { space, classes }
}

fn max_over(masses: &[f64], from: usize) -> (f64, u32) {
    let mut best = (f64::NEG_INFINITY, from as u32);
    for (j, &v) in masses.iter().enumerate().skip(from) {
        if v > best.0 {
            best = (v, j as u32);
        }
    }
    best
}

/// `M*(E) = max_{j≠0} Σ_{m∈S_j} |Ê(m)|^2`, with the maximizing `j`.
pub fn m_star(set: &PointSet) -> Result<(f64, u32)> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let spheres = spheres_of(set.space());
    Ok(max_over(&spheres.masses(&set_spectrum(set)), 1))
}

/// `M(E) = max_j Σ_{m∈S_j} |Ê(m)|^2`.
pub fn m_max(set: &PointSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let spheres = spheres_of(set.space());
    Ok(max_over(&spheres.masses(&set_spectrum(set)), 0).0)
}

/// `Σ_{m∈S_0} |Ê(m)|^2`; exact for every `(q, d)`, bounded in the regime `d ≡ 2 mod 4`, `q ≡ 3 mod 4`.
pub fn zero_sphere_mass(set: &PointSet) -> f64 {
    let spheres = spheres_of(set.space());
    spheres.masses(&set_spectrum(set))[0]
}

/// Whether `(q, d)` lies in the regime where the zero-sphere estimate is stated.
pub fn zero_sphere_regime(q: u32, d: usize) -> bool {
    d % 4 == 2 && q % 4 == 3
}

/// Which maximal mass a restriction bound controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictionQuantity {
    MStar,
    M,
}

/// Restriction bound with unit constant for `|E| = size` points in `F_q^d`.
pub fn restriction_bound(q: u32, d: usize, size: usize) -> Result<(RestrictionQuantity, f64)> {
    let (qf, e) = (q as f64, size as f64);
    let d_f = d as f64;
    match d {
        0 | 1 => Err(Error::InvalidParameter("restriction bounds need d >= 2".into())),
        2 => Ok((RestrictionQuantity::MStar, qf.powi(-3) * e.powf(1.5))),
        _ => {
            let trivial = e / qf.powf(d_f);
            let sharp = e / qf.powf(d_f + 1.0) + e * e / qf.powf((3.0 * d_f + 1.0) / 2.0);
            let quantity = if d.is_multiple_of(2) { RestrictionQuantity::MStar } else { RestrictionQuantity::M };
            Ok((quantity, trivial.min(sharp)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionRow {
    pub trial: usize,
    pub size: usize,
    pub value: f64,
    pub argmax_norm: u32,
    pub bound: f64,
    pub ratio: f64,
    pub trivial_bound_holds: bool,
    /// `|Ê(0)|^2 = |E|^2/q^{2d}` to `1e-10`, checked when `S_0 = {0}`.
    pub zero_sphere_identity: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionSummary {
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub argmax_trial: usize,
    /// Members of the set attaining the maximal ratio.
    pub witness: Vec<usize>,
    pub trivial_bound_failures: usize,
    /// Violations of the zero-sphere identity; `None` when `S_0` is larger than `{0}`.
    pub zero_sphere_failures: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionReport {
    pub q: u32,
    pub d: usize,
    pub quantity: RestrictionQuantity,
    pub exhaustive: bool,
    pub seed: Option<u64>,
    pub rows: Vec<RestrictionRow>,
    pub summary: RestrictionSummary,
}

/// Largest `q^d` for which every nonempty subset is swept.
pub const EXHAUSTIVE_DOMAIN_CAP: usize = 9;

fn restriction_row(trial: usize, set: &PointSet, spheres: &SphereDecomposition) -> Result<RestrictionRow> {
    let space = set.space();
    let masses = spheres.masses(&set_spectrum(set));
    let (quantity, bound) = restriction_bound(space.q(), space.dim(), set.len())?;
    let (star, arg) = max_over(&masses, 1);
    let (all, all_arg) = max_over(&masses, 0);
    let (value, argmax_norm) = match quantity {
        RestrictionQuantity::MStar => (star, arg),
        RestrictionQuantity::M => (all, all_arg),
    };
    let trivial = set.len() as f64 / space.size() as f64;
    let zero_sphere_identity = (spheres.sphere(0) == [0]).then(|| {
        let dc = set.len() as f64 / space.size() as f64;
        (masses[0] - dc * dc).abs() <= 1e-10
    });
    Ok(RestrictionRow {
        trial,
        size: set.len(),
        value,
        argmax_norm,
        bound,
        ratio: value / bound,
        trivial_bound_holds: star <= all * (1.0 + 1e-12) && all <= trivial * (1.0 + 1e-9),
        zero_sphere_identity,
    })
}

fn summarize(rows: &[RestrictionRow], sets: &[PointSet]) -> RestrictionSummary {
    let mut argmax = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.ratio > rows[argmax].ratio {
            argmax = i;
        }
    }
    let mut ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    RestrictionSummary {
        max_ratio: rows[argmax].ratio,
        median_ratio: trend::median_sorted(&ratios),
        argmax_trial: rows[argmax].trial,
        witness: sets[argmax].indices(),
        trivial_bound_failures: rows.iter().filter(|r| !r.trivial_bound_holds).count(),
        zero_sphere_failures: rows[0]
            .zero_sphere_identity
            .map(|_| rows.iter().filter(|r| r.zero_sphere_identity == Some(false)).count()),
    }
}

/// Ratio of the measured restriction quantity to its bound over sampled or all sets.
///
/// With `exhaustive`, every nonempty subset of `F_q^d` is visited (`q^d <= 9`);
/// otherwise `trials` sets are drawn from `sampler` with per-trial streams of `seed`.
pub fn restriction_ratio_report(
    q: u32,
    d: usize,
    sampler: &SetSampler,
    trials: usize,
    seed: u64,
    exhaustive: bool,
) -> Result<RestrictionReport> {
    let space = FieldSpace::new(q, d)?;
    let (quantity, _) = restriction_bound(q, d, 1)?;
    let spheres = spheres_of(space);
    let sets: Vec<PointSet> = if exhaustive {
        if space.size() > EXHAUSTIVE_DOMAIN_CAP {
            return Err(Error::BudgetExceeded {
                candidates: 1u128 << space.size().min(127),
                budget: 1u128 << EXHAUSTIVE_DOMAIN_CAP,
            });
        }
        (1u64..(1u64 << space.size())).map(|bits| PointSet::from_bits(space, bits)).collect::<Result<_>>()?
    } else {
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be positive".into()));
        }
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t as u64);
                sampler.sample(space, &mut rng)
            })
            .collect::<Result<_>>()?
    };
    let rows: Vec<RestrictionRow> =
        sets.par_iter().enumerate().map(|(t, s)| restriction_row(t, s, &spheres)).collect::<Result<_>>()?;
    let summary = summarize(&rows, &sets);
    Ok(RestrictionReport { q, d, quantity, exhaustive, seed: (!exhaustive).then_some(seed), rows, summary })
}

/// Independent stream `stream` of the master `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

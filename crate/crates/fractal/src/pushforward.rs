//! Pushforwards of grid measures under dilations, rotations and sums, and occupancy unions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::grid::{cells, splat, GridMeasure, GridSet};
use crate::samples::{rotate, RotationSample, ScaleSample};
use crate::spectrum::fft_in_place;

const CENTER: [f64; 2] = [0.5, 0.5];

fn push(mu: &GridMeasure, maps: &[(f64, Box<dyn Fn([f64; 2]) -> [f64; 2]>)]) -> Result<GridMeasure> {
    let (d, n) = (mu.d(), mu.n());
    let mut weights = vec![0.0; cells(d, n)];
    for (i, &w) in mu.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let x = mu.position(i);
        for (wm, f) in maps {
            splat(&mut weights, d, n, &f(x)[..d], w * wm)?;
        }
    }
    GridMeasure::from_weights(d, n, weights)
}

/// Image of `μ × ζ` under `(x, r) ↦ r x`.
pub fn pushforward_dilate(mu: &GridMeasure, zeta: &ScaleSample) -> Result<GridMeasure> {
    let maps: Vec<(f64, Box<dyn Fn([f64; 2]) -> [f64; 2]>)> = zeta
        .nodes()
        .iter()
        .map(|&(r, w)| (w, Box::new(move |x: [f64; 2]| [r * x[0], r * x[1]]) as Box<dyn Fn([f64; 2]) -> [f64; 2]>))
        .collect();
    push(mu, &maps)
}

fn about_center(t: f64, x: [f64; 2]) -> [f64; 2] {
    let y = rotate(t, [x[0] - CENTER[0], x[1] - CENTER[1]]);
    [CENTER[0] + y[0], CENTER[1] + y[1]]
}

/// Image of `μ × γ` under `(x, g) ↦ g(x)`, rotating about the box center.
pub fn pushforward_rotate(mu: &GridMeasure, gamma: &RotationSample) -> Result<GridMeasure> {
    if mu.d() != 2 {
        return Err(FractalError::UnsupportedDimension(mu.d()));
    }
    let maps: Vec<(f64, Box<dyn Fn([f64; 2]) -> [f64; 2]>)> = gamma
        .nodes()
        .iter()
        .map(|&(t, w)| (w, Box::new(move |x: [f64; 2]| about_center(t, x)) as Box<dyn Fn([f64; 2]) -> [f64; 2]>))
        .collect();
    push(mu, &maps)
}

/// Image of `μ × γ × ζ` under `(x, g, r) ↦ r g(x)`, with `g` about the box center.
pub fn pushforward_similarity(mu: &GridMeasure, gamma: &RotationSample, zeta: &ScaleSample) -> Result<GridMeasure> {
    if mu.d() != 2 {
        return Err(FractalError::UnsupportedDimension(mu.d()));
    }
    let mut maps: Vec<(f64, Box<dyn Fn([f64; 2]) -> [f64; 2]>)> = Vec::new();
    for &(t, wg) in gamma.nodes() {
        for &(r, wr) in zeta.nodes() {
            maps.push((
                wg * wr,
                Box::new(move |x: [f64; 2]| {
                    let y = about_center(t, x);
                    [r * y[0], r * y[1]]
                }),
            ));
        }
    }
    push(mu, &maps)
}

fn transform(mu: &GridMeasure) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = mu.weights().iter().map(|&w| Complex64::new(w, 0.0)).collect();
    fft_in_place(&mut v, mu.d(), mu.n(), false);
    v
}

fn back_to_measure(d: usize, n: usize, mut v: Vec<Complex64>) -> Result<GridMeasure> {
    fft_in_place(&mut v, d, n, true);
    let scale = 1.0 / v.len() as f64;
    let raw: Vec<f64> = v.iter().map(|c| c.re * scale).collect();
    let max = raw.iter().cloned().fold(0.0, f64::max);
    // transform round-off leaves tiny negative and spurious entries
    let cleaned = raw.into_iter().map(|w| if w > 1e-12 * max { w } else { 0.0 }).collect();
    GridMeasure::from_weights(d, n, cleaned)
}

/// `μ ∗ ν`, the image of `μ × ν` under addition.
pub fn sum_pushforward(mu: &GridMeasure, nu: &GridMeasure) -> Result<GridMeasure> {
    if mu.d() != nu.d() || mu.n() != nu.n() {
        return Err(FractalError::ShapeMismatch(mu.d(), mu.n(), nu.d(), nu.n()));
    }
    let (a, b) = (mu.extent(), nu.extent());
    if a[0] + b[0] >= mu.n() || a[1] + b[1] >= mu.n() {
        return Err(FractalError::Overflow);
    }
    let prod = transform(mu).into_iter().zip(transform(nu)).map(|(x, y)| x * y).collect();
    back_to_measure(mu.d(), mu.n(), prod)
}

/// `μ^{∗k}`, the image of `μ^k` under `(x_1, …, x_k) ↦ x_1 + ⋯ + x_k`.
pub fn kfold_sum(mu: &GridMeasure, k: u32) -> Result<GridMeasure> {
    if k == 0 {
        return Err(FractalError::InvalidParameter("k must be at least 1".into()));
    }
    if k == 1 {
        return Ok(mu.clone());
    }
    let e = mu.extent();
    if e[0] * k as usize >= mu.n() || e[1] * k as usize >= mu.n() {
        return Err(FractalError::Overflow);
    }
    let pow = transform(mu).into_iter().map(|x| x.powu(k)).collect();
    back_to_measure(mu.d(), mu.n(), pow)
}

/// `x ↦ pivot + r·g(x - pivot) + z` with `g` the rotation by `angle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub z: [f64; 2],
    pub r: f64,
    pub angle: f64,
}

impl Similarity {
    pub fn translation(z: [f64; 2]) -> Self {
        Self { z, r: 1.0, angle: 0.0 }
    }
}

/// A finite parameter set `Γ` acting about a common pivot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionSample {
    pub pivot: [f64; 2],
    pub maps: Vec<Similarity>,
}

impl UnionSample {
    pub fn new(maps: Vec<Similarity>) -> Self {
        Self { pivot: [0.0, 0.0], maps }
    }

    fn apply(&self, m: &Similarity, x: [f64; 2]) -> [f64; 2] {
        let y = rotate(m.angle, [x[0] - self.pivot[0], x[1] - self.pivot[1]]);
        [self.pivot[0] + m.r * y[0] + m.z[0], self.pivot[1] + m.r * y[1] + m.z[1]]
    }
}

fn check_union_inputs(e: &GridSet, sample: &UnionSample) -> Result<()> {
    if e.is_empty() || sample.maps.is_empty() {
        return Err(FractalError::Empty);
    }
    if e.d() == 1 && sample.maps.iter().any(|m| m.angle != 0.0) {
        return Err(FractalError::InvalidParameter("rotations need d = 2".into()));
    }
    Ok(())
}

/// `Γ(E) = ⋃_{γ ∈ Γ} γ(E)`, rounding each image point to its nearest cell.
pub fn union_construct(e: &GridSet, sample: &UnionSample) -> Result<GridSet> {
    check_union_inputs(e, sample)?;
    let probe = GridSet::empty(e.d(), e.n())?;
    let mut marks = vec![false; probe.cells().len()];
    let points = e.indices();
    for m in &sample.maps {
        for &i in &points {
            let y = sample.apply(m, e.position(i));
            marks[probe.nearest(&y[..e.d()]).ok_or(FractalError::Overflow)?] = true;
        }
    }
    GridSet::new(e.d(), e.n(), marks)
}

/// The same union read as `⋃_{x ∈ E} P_x(Γ)` with `P_x(γ) = γ(x)`.
pub fn union_construct_projected(e: &GridSet, sample: &UnionSample) -> Result<GridSet> {
    check_union_inputs(e, sample)?;
    let probe = GridSet::empty(e.d(), e.n())?;
    let mut marks = vec![false; probe.cells().len()];
    for i in e.indices() {
        let x = e.position(i);
        let fibre: Vec<usize> = sample
            .maps
            .iter()
            .map(|m| probe.nearest(&sample.apply(m, x)[..e.d()]).ok_or(FractalError::Overflow))
            .collect::<Result<_>>()?;
        fibre.into_iter().for_each(|j| marks[j] = true);
    }
    GridSet::new(e.d(), e.n(), marks)
}

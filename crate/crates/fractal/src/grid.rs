//! Probability measures and occupancy sets on the lattice `{i/n}^d ⊂ [0,1)^d`.
//!
//! Cell `i` carries the point `i/n` (its lower corner). Two-dimensional arrays are
//! row-major with the first coordinate as the row: `index = i0 * n + i1`.

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};

pub(crate) fn check_shape(d: usize, n: usize) -> Result<()> {
    if !(1..=2).contains(&d) {
        return Err(FractalError::UnsupportedDimension(d));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(FractalError::NotPowerOfTwo(n));
    }
    Ok(())
}

pub(crate) fn cells(d: usize, n: usize) -> usize {
    n.pow(d as u32)
}

pub(crate) fn coords_of(d: usize, n: usize, index: usize) -> [usize; 2] {
    if d == 1 {
        [index, 0]
    } else {
        [index / n, index % n]
    }
}

pub(crate) fn index_of(d: usize, n: usize, c: &[usize]) -> usize {
    if d == 1 {
        c[0]
    } else {
        c[0] * n + c[1]
    }
}

/// Adds `mass` at the real point `pos` (unit-box coordinates) by cloud-in-cell splatting.
pub(crate) fn splat(weights: &mut [f64], d: usize, n: usize, pos: &[f64], mass: f64) -> Result<()> {
    let mut base = [0usize; 2];
    let mut frac = [0.0f64; 2];
    for a in 0..d {
        let u = pos[a] * n as f64;
        if !u.is_finite() {
            return Err(FractalError::Overflow);
        }
        let mut i = u.floor();
        let mut f = u - i;
        if f < 1e-9 {
            f = 0.0;
        } else if f > 1.0 - 1e-9 {
            i += 1.0;
            f = 0.0;
        }
        if i < 0.0 || i >= n as f64 || (f > 0.0 && i + 1.0 >= n as f64) {
            return Err(FractalError::Overflow);
        }
        base[a] = i as usize;
        frac[a] = f;
    }
    if d == 1 {
        weights[base[0]] += mass * (1.0 - frac[0]);
        if frac[0] > 0.0 {
            weights[base[0] + 1] += mass * frac[0];
        }
    } else {
        for (di, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
            for (dj, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
                let w = wi * wj;
                if w > 0.0 {
                    weights[(base[0] + di) * n + base[1] + dj] += mass * w;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    d: usize,
    n: usize,
    weights: Vec<f64>,
}

impl GridMeasure {
    /// Normalizes nonnegative `weights` to total mass one.
    pub fn from_weights(d: usize, n: usize, mut weights: Vec<f64>) -> Result<Self> {
        check_shape(d, n)?;
        if weights.len() != cells(d, n) {
            return Err(FractalError::InvalidParameter(format!(
                "expected {} weights, got {}",
                cells(d, n),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(FractalError::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(FractalError::Empty);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { d, n, weights })
    }

    /// Accepts weights already summing to one (within `1e-9`) without rescaling them.
    pub fn from_normalized(d: usize, n: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        let mu = Self::from_weights(d, n, weights.clone())?;
        if (total - 1.0).abs() > 1e-9 {
            return Err(FractalError::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights, ..mu })
    }

    pub fn point_mass(d: usize, n: usize, cell: &[usize]) -> Result<Self> {
        check_shape(d, n)?;
        if cell.len() != d || cell.iter().any(|&c| c >= n) {
            return Err(FractalError::InvalidParameter("cell outside the grid".into()));
        }
        let mut weights = vec![0.0; cells(d, n)];
        weights[index_of(d, n, cell)] = 1.0;
        Ok(Self { d, n, weights })
    }

    /// Point mass at a real location, split by cloud-in-cell when off the lattice.
    pub fn point_mass_at(d: usize, n: usize, pos: &[f64]) -> Result<Self> {
        check_shape(d, n)?;
        let mut weights = vec![0.0; cells(d, n)];
        splat(&mut weights, d, n, pos, 1.0)?;
        Ok(Self { d, n, weights })
    }

    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        check_shape(d, n)?;
        let c = cells(d, n);
        Ok(Self { d, n, weights: vec![1.0 / c as f64; c] })
    }

    /// Uniform on the occupied cells of `set`.
    pub fn uniform_on(set: &GridSet) -> Result<Self> {
        let w = set.cells.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Self::from_weights(set.d, set.n, w)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Point carried by cell `index`.
    pub fn position(&self, index: usize) -> [f64; 2] {
        let c = coords_of(self.d, self.n, index);
        [c[0] as f64 / self.n as f64, c[1] as f64 / self.n as f64]
    }

    pub fn support(&self) -> GridSet {
        GridSet { d: self.d, n: self.n, cells: self.weights.iter().map(|&w| w > 0.0).collect() }
    }

    /// Largest occupied index along each axis.
    pub(crate) fn extent(&self) -> [usize; 2] {
        let mut ext = [0usize; 2];
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                let c = coords_of(self.d, self.n, i);
                ext[0] = ext[0].max(c[0]);
                ext[1] = ext[1].max(c[1]);
            }
        }
        ext
    }

    /// Halves the resolution, merging each block of `2^d` cells into its lower corner.
    pub fn coarsen(&self) -> Result<Self> {
        let m = self.n / 2;
        check_shape(self.d, m)?;
        let mut weights = vec![0.0; cells(self.d, m)];
        for (i, &w) in self.weights.iter().enumerate() {
            let c = coords_of(self.d, self.n, i);
            weights[index_of(self.d, m, &[c[0] / 2, c[1] / 2])] += w;
        }
        Ok(Self { d: self.d, n: m, weights })
    }

    /// `μ ⊗ ν` for two measures on `[0,1)`.
    pub fn product(a: &GridMeasure, b: &GridMeasure) -> Result<Self> {
        if a.d != 1 || b.d != 1 {
            return Err(FractalError::UnsupportedDimension(a.d.max(b.d) * 2));
        }
        if a.n != b.n {
            return Err(FractalError::ShapeMismatch(a.d, a.n, b.d, b.n));
        }
        let n = a.n;
        let mut weights = vec![0.0; n * n];
        for (i, &wa) in a.weights.iter().enumerate() {
            for (j, &wb) in b.weights.iter().enumerate() {
                weights[i * n + j] = wa * wb;
            }
        }
        Ok(Self { d: 2, n, weights })
    }
}

/// Left endpoints of the `2^depth` intervals of length `ratio^depth` in the Cantor construction.
pub fn cantor_intervals(ratio: f64, depth: u32) -> Vec<f64> {
    let mut lefts = vec![0.0];
    let mut len = 1.0;
    for _ in 0..depth {
        let child = len * ratio;
        lefts = lefts.iter().flat_map(|&a| [a, a + len - child]).collect();
        len = child;
    }
    lefts
}

/// Uniform mass on the surviving intervals of the `ratio`-Cantor construction, binned by overlap.
pub fn cantor_measure(ratio: f64, depth: u32, n: usize) -> Result<GridMeasure> {
    check_shape(1, n)?;
    if !(ratio > 0.0 && ratio <= 0.5) {
        return Err(FractalError::InvalidParameter(format!("cantor ratio {ratio} outside (0, 1/2]")));
    }
    if depth as f64 * (1.0 / ratio).ln() > (n as f64).ln() + 1e-12 {
        return Err(FractalError::Resolution(format!("depth {depth} at ratio {ratio} needs more than {n} cells")));
    }
    let len = ratio.powi(depth as i32);
    let lefts = cantor_intervals(ratio, depth);
    let mass = 1.0 / lefts.len() as f64;
    let nf = n as f64;
    let mut weights = vec![0.0; n];
    for a in lefts {
        let (lo, hi) = (a * nf, (a + len) * nf);
        let first = lo.floor() as usize;
        let last = ((hi.ceil() as usize).max(first + 1)).min(n);
        for (i, w) in weights.iter_mut().enumerate().take(last).skip(first) {
            let overlap = hi.min(i as f64 + 1.0) - lo.max(i as f64);
            if overlap > 0.0 {
                *w += mass * overlap / (hi - lo);
            }
        }
    }
    GridMeasure::from_weights(1, n, weights)
}

/// Arc-length measure on the circle of radius `radius` about `center`.
pub fn circle_measure(n: usize, center: [f64; 2], radius: f64) -> Result<GridMeasure> {
    check_shape(2, n)?;
    if !(radius > 0.0) {
        return Err(FractalError::InvalidParameter("radius must be positive".into()));
    }
    let samples = 32 * n;
    let mut weights = vec![0.0; n * n];
    for j in 0..samples {
        let t = std::f64::consts::TAU * (j as f64 + 0.5) / samples as f64;
        let p = [center[0] + radius * t.cos(), center[1] + radius * t.sin()];
        splat(&mut weights, 2, n, &p, 1.0 / samples as f64)?;
    }
    GridMeasure::from_weights(2, n, weights)
}

/// Circle of radius `1/4` about `(1/2, 1/2)`.
pub fn sphere_measure(n: usize) -> Result<GridMeasure> {
    if n < 256 {
        return Err(FractalError::Resolution(format!("sphere measure needs n >= 256, got {n}")));
    }
    circle_measure(n, [0.5, 0.5], 0.25)
}

/// Normalized length on the segment `[from, to]` in the plane.
pub fn segment_measure(n: usize, from: [f64; 2], to: [f64; 2]) -> Result<GridMeasure> {
    check_shape(2, n)?;
    let samples = 8 * n;
    let mut weights = vec![0.0; n * n];
    for j in 0..samples {
        let t = (j as f64 + 0.5) / samples as f64;
        let p = [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])];
        splat(&mut weights, 2, n, &p, 1.0 / samples as f64)?;
    }
    GridMeasure::from_weights(2, n, weights)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSet {
    d: usize,
    n: usize,
    cells: Vec<bool>,
}

impl GridSet {
    pub fn new(d: usize, n: usize, cells: Vec<bool>) -> Result<Self> {
        check_shape(d, n)?;
        if cells.len() != self::cells(d, n) {
            return Err(FractalError::InvalidParameter("occupancy length does not match the grid".into()));
        }
        Ok(Self { d, n, cells })
    }

    pub fn empty(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, vec![false; cells(d, n)])
    }

    pub fn full(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, vec![true; cells(d, n)])
    }

    /// Marks the cell nearest each point; points outside the box are an error.
    pub fn from_points<'a>(d: usize, n: usize, points: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut set = Self::empty(d, n)?;
        for p in points {
            let idx = set.nearest(p).ok_or(FractalError::Overflow)?;
            set.cells[idx] = true;
        }
        Ok(set)
    }

    pub(crate) fn nearest(&self, p: &[f64]) -> Option<usize> {
        let mut c = [0usize; 2];
        for a in 0..self.d {
            let u = (p[a] * self.n as f64).round();
            if !(u >= 0.0 && u < self.n as f64) {
                return None;
            }
            c[a] = u as usize;
        }
        Some(index_of(self.d, self.n, &c))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&b| b)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.cells.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    pub fn contains(&self, cell: &[usize]) -> bool {
        cell.iter().all(|&c| c < self.n) && self.cells[index_of(self.d, self.n, cell)]
    }

    pub fn position(&self, index: usize) -> [f64; 2] {
        let c = coords_of(self.d, self.n, index);
        [c[0] as f64 / self.n as f64, c[1] as f64 / self.n as f64]
    }

    /// Occupied cells times the cell volume.
    pub fn volume(&self) -> f64 {
        self.len() as f64 / cells(self.d, self.n) as f64
    }
}

/// Cells nearest to a dense sampling of the circle.
pub fn circle_set(n: usize, center: [f64; 2], radius: f64) -> Result<GridSet> {
    let samples = 16 * n;
    let pts: Vec<[f64; 2]> = (0..samples)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / samples as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect();
    GridSet::from_points(2, n, pts.iter().map(|p| p.as_slice()))
}

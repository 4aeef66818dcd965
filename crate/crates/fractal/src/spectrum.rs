//! `μ̂(k) = Σ_cells w · e^{-2πi k·x}` on the integer lattice `-n/2 ≤ k_i < n/2`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{FractalError, Result};
use crate::grid::{coords_of, GridMeasure};

/// Unnormalized in-place transform of a row-major `n^d` array; `inverse` flips the sign.
pub(crate) fn fft_in_place(data: &mut [Complex64], d: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    // rows are independent, so the result does not depend on the worker count
    data.par_chunks_mut(n).for_each(|row| fft.process(row));
    if d == 2 {
        let mut t = transpose(data, n);
        t.par_chunks_mut(n).for_each(|row| fft.process(row));
        data.copy_from_slice(&transpose(&t, n));
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = data[i * n + j];
        }
    });
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    d: usize,
    n: usize,
    values: Vec<Complex64>,
}

pub fn spectrum(mu: &GridMeasure) -> Spectrum {
    let mut values: Vec<Complex64> = mu.weights().iter().map(|&w| Complex64::new(w, 0.0)).collect();
    fft_in_place(&mut values, mu.d(), mu.n(), false);
    Spectrum { d: mu.d(), n: mu.n(), values }
}

/// Direct evaluation of `μ̂(ξ)` at a real frequency, summing over the support.
pub fn fourier_at(mu: &GridMeasure, xi: &[f64]) -> Complex64 {
    let n = mu.n() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &w) in mu.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let c = coords_of(mu.d(), mu.n(), i);
        let phase: f64 = (0..mu.d()).map(|a| xi[a] * c[a] as f64 / n).sum();
        acc += Complex64::from_polar(w, -std::f64::consts::TAU * phase);
    }
    acc
}

impl Spectrum {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Raw transform values in the same layout as the weights.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn wrap(&self, k: i64) -> Option<usize> {
        let h = (self.n / 2) as i64;
        (-h..h).contains(&k).then(|| k.rem_euclid(self.n as i64) as usize)
    }

    fn slot(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.d {
            return None;
        }
        let a = self.wrap(k[0])?;
        if self.d == 1 {
            Some(a)
        } else {
            Some(a * self.n + self.wrap(k[1])?)
        }
    }

    pub fn at(&self, k: &[i64]) -> Result<Complex64> {
        self.slot(k)
            .map(|s| self.values[s])
            .ok_or_else(|| FractalError::FrequencyOutOfWindow(k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt()))
    }

    pub fn power(&self, k: &[i64]) -> Result<f64> {
        Ok(self.at(k)?.norm_sqr())
    }

    fn corners(&self, xi: &[f64]) -> Result<([i64; 2], [f64; 2])> {
        if xi.len() != self.d {
            return Err(FractalError::InvalidParameter("frequency dimension mismatch".into()));
        }
        let h = (self.n / 2) as f64;
        let mut base = [0i64; 2];
        let mut frac = [0.0; 2];
        for a in 0..self.d {
            let f = xi[a].floor();
            if !(f >= -h && f + 1.0 < h) {
                return Err(FractalError::FrequencyOutOfWindow(xi.iter().map(|x| x * x).sum::<f64>().sqrt()));
            }
            base[a] = f as i64;
            frac[a] = xi[a] - f;
        }
        Ok((base, frac))
    }

    fn interpolate_with<T>(&self, xi: &[f64], read: impl Fn(Complex64) -> T) -> Result<T>
    where
        T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let (b, f) = self.corners(xi)?;
        let v = |k: &[i64]| read(self.values[self.slot(k).expect("inside by construction")]);
        if self.d == 1 {
            return Ok(v(&[b[0]]) * (1.0 - f[0]) + v(&[b[0] + 1]) * f[0]);
        }
        Ok(v(&[b[0], b[1]]) * ((1.0 - f[0]) * (1.0 - f[1]))
            + v(&[b[0] + 1, b[1]]) * (f[0] * (1.0 - f[1]))
            + v(&[b[0], b[1] + 1]) * ((1.0 - f[0]) * f[1])
            + v(&[b[0] + 1, b[1] + 1]) * (f[0] * f[1]))
    }

    /// Multilinear interpolation of `μ̂` at a real frequency.
    pub fn interpolate(&self, xi: &[f64]) -> Result<Complex64> {
        self.interpolate_with(xi, |c| c)
    }

    /// Multilinear interpolation of `|μ̂|^2` at a real frequency.
    pub fn interpolate_power(&self, xi: &[f64]) -> Result<f64> {
        self.interpolate_with(xi, |c| c.norm_sqr())
    }

    /// All lattice frequencies with `|k|_∞ ≤ radius`, paired with `|μ̂(k)|^2`.
    pub(crate) fn powers_within(&self, radius: usize) -> impl Iterator<Item = ([i64; 2], f64)> + '_ {
        let r = radius.min(self.n / 2 - 1) as i64;
        let second = if self.d == 2 { -r..=r } else { 0..=0 };
        (-r..=r).flat_map(move |a| second.clone().map(move |b| [a, b])).map(move |k| {
            let s = self.slot(&k[..self.d]).expect("inside by construction");
            (k, self.values[s].norm_sqr())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::cantor_measure;

    #[test]
    fn point_mass_at_origin_is_flat() {
        let mu = GridMeasure::point_mass(2, 16, &[0, 0]).unwrap();
        let s = spectrum(&mu);
        assert!(s.values().iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn dc_is_total_mass() {
        let mu = cantor_measure(1.0 / 3.0, 4, 128).unwrap();
        assert!((spectrum(&mu).at(&[0]).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn fft_matches_direct_sum() {
        let mu = GridMeasure::from_weights(2, 8, (0..64).map(|i| ((i * 7) % 5) as f64).collect()).unwrap();
        let s = spectrum(&mu);
        for k0 in -4..4 {
            for k1 in -4..4 {
                let direct = fourier_at(&mu, &[k0 as f64, k1 as f64]);
                assert!((s.at(&[k0, k1]).unwrap() - direct).norm() < 1e-12);
            }
        }
        assert!(s.at(&[4, 0]).is_err());
    }

    #[test]
    fn uniform_interval_envelope() {
        let n = 1024;
        let s = spectrum(&GridMeasure::uniform(1, n).unwrap());
        for k in 1..(n as i64 / 2) {
            let bound = 1.0 / (std::f64::consts::PI * k as f64) + 2.0 / n as f64;
            assert!(s.at(&[k]).unwrap().norm() <= bound);
        }
        // half interval: geometric series (2/n) |sin(πk/2) / sin(πk/n)|
        let mu = GridMeasure::from_weights(1, n, (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect()).unwrap();
        let s = spectrum(&mu);
        let pi = std::f64::consts::PI;
        for k in 1..(n as i64 / 2) {
            let kf = k as f64;
            let want = 2.0 / n as f64 * ((pi * kf / 2.0).sin() / (pi * kf / n as f64).sin()).abs();
            assert!((s.at(&[k]).unwrap().norm() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_hits_lattice_values() {
        let mu = cantor_measure(1.0 / 3.0, 3, 64).unwrap();
        let s = spectrum(&mu);
        let exact = s.at(&[5]).unwrap();
        assert!((s.interpolate(&[5.0]).unwrap() - exact).norm() < 1e-15);
        assert!((s.interpolate_power(&[5.0]).unwrap() - exact.norm_sqr()).abs() < 1e-15);
        assert!(s.interpolate(&[31.5]).is_err());
    }
}

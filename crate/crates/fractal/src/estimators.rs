//! Energy integrals, Fourier averages and box counting, with log-log fits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::grid::{coords_of, GridMeasure, GridSet};
use crate::samples::{rotate, RotationSample, ScaleSample};
use crate::spectrum::{fft_in_place, Spectrum};

pub const INTERPOLATION_NOTE: &str = "off-lattice reads use multilinear interpolation; O(1/n) error";

/// Log-log regression of `values` against `radii` on the points inside `window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    pub window: [f64; 2],
    pub notes: Vec<String>,
}

impl DecayReport {
    pub fn fit(radii: Vec<f64>, values: Vec<f64>, window: [f64; 2], notes: Vec<String>) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = radii
            .iter()
            .zip(&values)
            .filter(|(r, v)| **r >= window[0] && **r <= window[1] && **v > 0.0)
            .map(|(r, v)| (r.ln(), v.ln()))
            .unzip();
        let k = xs.len() as f64;
        if xs.len() < 2 {
            return Err(FractalError::DegenerateFit);
        }
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        if sxx == 0.0 {
            return Err(FractalError::DegenerateFit);
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        Ok(Self { radii, values, slope, intercept, residual: (ss / k).sqrt(), window, notes })
    }

    /// `-slope`: the decay exponent of a decaying quantity.
    pub fn exponent(&self) -> f64 {
        -self.slope
    }
}

/// `[8, n/4]`: excludes the DC neighbourhood and the aliased tail.
pub fn fit_window(n: usize) -> [f64; 2] {
    [8.0, n as f64 / 4.0]
}

/// `lo · 2^{j/per_octave}` up to `hi`.
pub fn log_radii(lo: f64, hi: f64, per_octave: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut j = 0;
    loop {
        let r = lo * 2f64.powf(j as f64 / per_octave as f64);
        if r > hi * (1.0 + 1e-12) {
            return out;
        }
        out.push(r);
        j += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub s: f64,
    pub value: f64,
    /// Share of the sum carried by pairs closer than one cell.
    pub clamped_fraction: f64,
    pub divergent: bool,
}

/// `I_s(μ) = ΣΣ w_x w_y max(|x-y|, 1/n)^{-s}` via a zero-padded autocorrelation.
pub fn energy(mu: &GridMeasure, s: f64) -> Result<EnergyReport> {
    let (d, n) = (mu.d(), mu.n());
    if !(s > 0.0 && s < d as f64) {
        return Err(FractalError::EnergyExponent { s, d });
    }
    let m = 2 * n;
    let len = m.pow(d as u32);
    let mut data = vec![Complex64::new(0.0, 0.0); len];
    for (i, &w) in mu.weights().iter().enumerate() {
        let c = coords_of(d, n, i);
        let j = if d == 1 { c[0] } else { c[0] * m + c[1] };
        data[j] = Complex64::new(w, 0.0);
    }
    fft_in_place(&mut data, d, m, false);
    data.iter_mut().for_each(|v| *v = Complex64::new(v.norm_sqr(), 0.0));
    fft_in_place(&mut data, d, m, true);
    let scale = 1.0 / len as f64;
    let signed = |j: usize| if j < n { j as f64 } else { j as f64 - m as f64 };
    let nf = n as f64;
    let mut total = 0.0;
    for (j, v) in data.iter().enumerate() {
        let c = coords_of(d, m, j);
        let dist2: f64 = (0..d).map(|a| signed(c[a]).powi(2)).sum();
        let dist = dist2.sqrt().max(1.0) / nf;
        total += v.re * scale * dist.powf(-s);
    }
    let diagonal = data[0].re * scale * nf.powf(s);
    let clamped_fraction = diagonal / total;
    Ok(EnergyReport { s, value: total, clamped_fraction, divergent: clamped_fraction > 0.5 })
}

/// `Σ_{|k| ≤ R} |μ̂(k)|^2` for `1 ≤ R ≤ n/4`.
pub fn ball_average(fhat: &Spectrum, radius: f64) -> Result<f64> {
    if !(radius >= 1.0 && radius <= fhat.n() as f64 / 4.0) {
        return Err(FractalError::FrequencyOutOfWindow(radius));
    }
    let r2 = radius * radius;
    Ok(fhat
        .powers_within(radius.floor() as usize)
        .filter(|(k, _)| ((k[0] * k[0] + k[1] * k[1]) as f64) <= r2)
        .map(|(_, p)| p)
        .sum())
}

/// Mean of `|μ̂(k)|^2` over the lattice annulus `r - width ≤ |k| < r + width`.
pub fn spherical_average(fhat: &Spectrum, radius: f64, width: f64) -> Result<f64> {
    if fhat.d() < 2 {
        return Err(FractalError::UnsupportedDimension(fhat.d()));
    }
    if !(radius >= 1.0 && radius <= fhat.n() as f64 / 4.0) {
        return Err(FractalError::FrequencyOutOfWindow(radius));
    }
    let (lo, hi) = (radius - width, radius + width);
    let (mut sum, mut count) = (0.0, 0usize);
    for (k, p) in fhat.powers_within(hi.ceil() as usize) {
        let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        if r >= lo && r < hi {
            sum += p;
            count += 1;
        }
    }
    if count == 0 {
        return Err(FractalError::EmptyAnnulus(radius));
    }
    Ok(sum / count as f64)
}

fn checked_power(fhat: &Spectrum, xi: &[f64]) -> Result<f64> {
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > fhat.n() as f64 / 4.0 {
        return Err(FractalError::FrequencyOutOfWindow(norm));
    }
    fhat.interpolate_power(xi)
}

/// `σ̃_ζ(μ)(ξ) = Σ_r w_r |μ̂(rξ)|^2`.
pub fn sigma_zeta(fhat: &Spectrum, zeta: &ScaleSample, xi: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    let mut scaled = xi.to_vec();
    for &(r, w) in zeta.nodes() {
        scaled.iter_mut().zip(xi).for_each(|(s, x)| *s = r * x);
        acc += w * checked_power(fhat, &scaled)?;
    }
    Ok(acc)
}

fn plane_frequency(fhat: &Spectrum, xi: &[f64]) -> Result<[f64; 2]> {
    if fhat.d() != 2 || xi.len() != 2 {
        return Err(FractalError::UnsupportedDimension(fhat.d()));
    }
    Ok([xi[0], xi[1]])
}

/// `σ_γ(μ)(ξ) = Σ_g w_g |μ̂(g^{-1}ξ)|^2`.
pub fn sigma_gamma(fhat: &Spectrum, gamma: &RotationSample, xi: &[f64]) -> Result<f64> {
    let xi = plane_frequency(fhat, xi)?;
    let mut acc = 0.0;
    for &(t, w) in gamma.nodes() {
        acc += w * checked_power(fhat, &rotate(-t, xi))?;
    }
    Ok(acc)
}

/// `σ_{γ,ζ}(μ)(ξ) = Σ_g Σ_r w_g w_r |μ̂(r g^{-1}ξ)|^2`.
pub fn sigma_gamma_zeta(fhat: &Spectrum, gamma: &RotationSample, zeta: &ScaleSample, xi: &[f64]) -> Result<f64> {
    let xi = plane_frequency(fhat, xi)?;
    let mut acc = 0.0;
    for &(t, wg) in gamma.nodes() {
        let g = rotate(-t, xi);
        for &(r, wr) in zeta.nodes() {
            acc += wg * wr * checked_power(fhat, &[r * g[0], r * g[1]])?;
        }
    }
    Ok(acc)
}

/// Spherical averages at log-spaced radii in `[8, n/4]`, fitted for the decay exponent.
pub fn spherical_decay(fhat: &Spectrum) -> Result<DecayReport> {
    let window = fit_window(fhat.n());
    let radii = log_radii(window[0], window[1], 8);
    let values = radii.iter().map(|&r| spherical_average(fhat, r, 1.0)).collect::<Result<Vec<_>>>()?;
    DecayReport::fit(radii, values, window, vec!["annulus width 1 lattice unit".into()])
}

/// Largest `|μ̂(k)|^2` over quarter-octave shells `R ≤ |k| < R·2^{1/4}`, fitted for decay.
pub fn envelope_decay(fhat: &Spectrum) -> Result<DecayReport> {
    let window = fit_window(fhat.n());
    let per_octave = 4usize;
    let radii = log_radii(window[0], window[1], per_octave);
    let mut values = vec![0.0f64; radii.len()];
    for (k, p) in fhat.powers_within(window[1] as usize) {
        let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        if r < window[0] || r > window[1] {
            continue;
        }
        let b = ((r / window[0]).log2() * per_octave as f64 + 1e-9).floor() as usize;
        if let Some(v) = values.get_mut(b) {
            *v = v.max(p);
        }
    }
    DecayReport::fit(radii, values, window, vec!["shell maxima over quarter octaves".into()])
}

/// Ball averages at log-spaced radii; the slope is the growth exponent.
pub fn ball_growth(fhat: &Spectrum) -> Result<DecayReport> {
    let window = fit_window(fhat.n());
    let radii = log_radii(window[0], window[1], 4);
    let values = radii.iter().map(|&r| ball_average(fhat, r)).collect::<Result<Vec<_>>>()?;
    DecayReport::fit(radii, values, window, vec!["slope is the growth exponent".into()])
}

/// `σ̃_ζ(μ)(r·u)` for a unit direction `u`, radii limited so that `r·max ζ ≤ n/4`.
pub fn zeta_decay(fhat: &Spectrum, zeta: &ScaleSample, direction: &[f64]) -> Result<DecayReport> {
    if direction.len() != fhat.d() {
        return Err(FractalError::InvalidParameter("direction dimension mismatch".into()));
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(FractalError::InvalidParameter("zero direction".into()));
    }
    let u: Vec<f64> = direction.iter().map(|x| x / norm).collect();
    let hi = fhat.n() as f64 / 4.0 / zeta.max_scale();
    let window = [8.0, hi];
    let radii = log_radii(window[0], window[1], 8);
    let values = radii
        .iter()
        .map(|&r| sigma_zeta(fhat, zeta, &u.iter().map(|x| r * x).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    DecayReport::fit(radii, values, window, vec![INTERPOLATION_NOTE.into()])
}

/// Counts occupied dyadic boxes of side `δ` for `1/δ ∈ [8, n/4]`; the slope is the estimate.
pub fn box_dimension(set: &GridSet) -> Result<DecayReport> {
    if set.is_empty() {
        return Err(FractalError::Empty);
    }
    let (d, n) = (set.d(), set.n());
    let window = fit_window(n);
    let occupied = set.indices();
    let mut radii = Vec::new();
    let mut values = Vec::new();
    let mut inv = 8usize;
    while inv as f64 <= window[1] {
        let block = n / inv;
        let mut hit = vec![false; inv.pow(d as u32)];
        for &i in &occupied {
            let c = coords_of(d, n, i);
            let b = if d == 1 { c[0] / block } else { (c[0] / block) * inv + c[1] / block };
            hit[b] = true;
        }
        radii.push(inv as f64);
        values.push(hit.iter().filter(|&&h| h).count() as f64);
        inv *= 2;
    }
    DecayReport::fit(radii, values, window, vec!["dyadic box counts; slope is the dimension estimate".into()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cantor_measure, segment_measure, sphere_measure};
    use crate::spectrum::spectrum;

    #[test]
    fn full_square_and_segment() {
        let square = GridSet::full(2, 512).unwrap();
        assert!((box_dimension(&square).unwrap().slope - 2.0).abs() < 1e-12);
        let seg = segment_measure(512, [0.0, 0.5], [1.0 - 1.0 / 512.0, 0.5]).unwrap().support();
        assert!((box_dimension(&seg).unwrap().slope - 1.0).abs() < 0.05);
    }

    #[test]
    fn uniform_energy_near_closed_form() {
        // ∫∫ |x-y|^{-1/2} dx dy over [0,1)^2 = 8/3
        let e = energy(&GridMeasure::uniform(1, 4096).unwrap(), 0.5).unwrap();
        assert!((e.value / (8.0 / 3.0) - 1.0).abs() < 0.05, "{}", e.value);
        assert!(!e.divergent);
        assert!(energy(&GridMeasure::uniform(1, 64).unwrap(), 1.0).is_err());
    }

    #[test]
    fn point_mass_energy_is_flagged() {
        let e = energy(&GridMeasure::point_mass(1, 256, &[3]).unwrap(), 0.5).unwrap();
        assert!(e.divergent);
        assert!((e.value - 16.0).abs() < 1e-9);
    }

    #[test]
    fn point_mass_averages() {
        let fhat = spectrum(&GridMeasure::point_mass(2, 64, &[0, 0]).unwrap());
        for r in [1.0, 4.5, 16.0] {
            assert!((spherical_average(&fhat, r, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        let count = ball_average(&fhat, 8.0).unwrap();
        assert_eq!(count, 197.0);
        assert!(ball_average(&fhat, 17.0).is_err());
    }

    #[test]
    fn dirac_scale_reads_the_spectrum() {
        let mu = cantor_measure(1.0 / 3.0, 4, 256).unwrap();
        let fhat = spectrum(&mu);
        let z = ScaleSample::dirac(1.0).unwrap();
        for k in [3.0, 17.0, 40.0] {
            let want = fhat.power(&[k as i64]).unwrap();
            assert!((sigma_zeta(&fhat, &z, &[k]).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn circle_decays_like_one_over_r() {
        let fhat = spectrum(&sphere_measure(512).unwrap());
        let rep = spherical_decay(&fhat).unwrap();
        assert!((rep.exponent() - 1.0).abs() < 0.2, "{}", rep.exponent());
    }

    #[test]
    fn rotated_point_mass_depends_only_on_radius() {
        let fhat = spectrum(&GridMeasure::point_mass(2, 128, &[5, 9]).unwrap());
        let gamma = RotationSample::uniform(256).unwrap();
        let a = sigma_gamma(&fhat, &gamma, &[10.0, 0.0]).unwrap();
        let b = sigma_gamma(&fhat, &gamma, &[0.0, 10.0]).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn log_radii_endpoints() {
        let r = log_radii(8.0, 64.0, 2);
        assert_eq!(r.len(), 7);
        assert!((r[6] - 64.0).abs() < 1e-9);
    }
}

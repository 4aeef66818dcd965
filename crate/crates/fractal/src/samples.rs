//! Discrete probability measures on dilations `ζ` and planar rotations `γ`.

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut count = 0;
    for w in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(FractalError::InvalidSample(format!("weight {w} is negative or not finite")));
        }
        total += w;
        count += 1;
    }
    if count == 0 {
        return Err(FractalError::InvalidSample("empty sample".into()));
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(FractalError::InvalidSample(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Weighted dilation factors `(r, w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSample {
    nodes: Vec<(f64, f64)>,
}

impl ScaleSample {
    pub fn new(nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.iter().any(|&(r, _)| !(r.is_finite() && r > 0.0)) {
            return Err(FractalError::InvalidSample("scales must be positive".into()));
        }
        check_weights(nodes.iter().map(|n| n.1))?;
        Ok(Self { nodes })
    }

    /// Equal-weight midpoint nodes on `[lo, hi]`.
    pub fn uniform_on(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if k == 0 || !(lo > 0.0 && lo <= hi) {
            return Err(FractalError::InvalidSample(format!("bad uniform scale sample [{lo}, {hi}] x {k}")));
        }
        Self::new((0..k).map(|j| (lo + (hi - lo) * (j as f64 + 0.5) / k as f64, 1.0 / k as f64)).collect())
    }

    /// `k` equal-weight nodes on `[1, 2]`.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::uniform_on(1.0, 2.0, k)
    }

    pub fn dirac(r: f64) -> Result<Self> {
        Self::new(vec![(r, 1.0)])
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn max_scale(&self) -> f64 {
        self.nodes.iter().map(|n| n.0).fold(0.0, f64::max)
    }
}

/// Weighted planar rotation angles `(θ, w)`, counterclockwise in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSample {
    nodes: Vec<(f64, f64)>,
}

impl RotationSample {
    pub fn new(nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.iter().any(|n| !n.0.is_finite()) {
            return Err(FractalError::InvalidSample("angles must be finite".into()));
        }
        check_weights(nodes.iter().map(|n| n.1))?;
        Ok(Self { nodes })
    }

    /// `k` equally spaced angles `2πj/k`.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(FractalError::InvalidSample("empty rotation sample".into()));
        }
        Self::new((0..k).map(|j| (std::f64::consts::TAU * j as f64 / k as f64, 1.0 / k as f64)).collect())
    }

    pub fn dirac(angle: f64) -> Result<Self> {
        Self::new(vec![(angle, 1.0)])
    }

    pub fn identity() -> Self {
        Self { nodes: vec![(0.0, 1.0)] }
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }
}

pub(crate) fn rotate(angle: f64, v: [f64; 2]) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_scales_are_midpoints() {
        let z = ScaleSample::uniform(4).unwrap();
        let r: Vec<f64> = z.nodes().iter().map(|n| n.0).collect();
        assert_eq!(r, vec![1.125, 1.375, 1.625, 1.875]);
        assert_eq!(z.max_scale(), 1.875);
    }

    #[test]
    fn invalid_samples() {
        assert!(ScaleSample::new(vec![(0.0, 1.0)]).is_err());
        assert!(ScaleSample::new(vec![(1.0, 0.5)]).is_err());
        assert!(ScaleSample::new(vec![]).is_err());
        assert!(RotationSample::new(vec![(0.0, -1.0), (1.0, 2.0)]).is_err());
        assert!(RotationSample::uniform(0).is_err());
    }

    #[test]
    fn rotation_by_quarter_turn() {
        let v = rotate(std::f64::consts::FRAC_PI_2, [1.0, 0.0]);
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }
}

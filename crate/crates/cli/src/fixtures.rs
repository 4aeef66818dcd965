//! Named measures for the Euclidean experiments.

use packlab_fractal::{cantor_measure, segment_measure, sphere_measure, GridMeasure};
use serde::Serialize;

use crate::CliError;

pub const DEFAULT_RATIO: f64 = 0.45;
/// Finest grid a Cantor construction is drawn on before coarsening.
const MAX_BUILD: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub value: f64,
    /// Present for calibration fixtures, whose estimate is asserted.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct FixtureInfo {
    pub name: &'static str,
    pub d: usize,
    pub role: &'static str,
    pub uses_depth: bool,
    pub uses_ratio: bool,
}

pub const CATALOG: &[FixtureInfo] = &[
    FixtureInfo {
        name: "cantor3",
        d: 1,
        role: "middle-thirds Cantor measure; dimension log 2 / log 3, no Fourier decay",
        uses_depth: true,
        uses_ratio: false,
    },
    FixtureInfo {
        name: "cantor-a",
        d: 1,
        role: "Cantor measure with contraction ratio a; a thin null set of large dimension",
        uses_depth: true,
        uses_ratio: true,
    },
    FixtureInfo {
        name: "circle",
        d: 2,
        role: "arc length on the circle of radius 1/4; a Salem curve with spherical decay r^-1",
        uses_depth: false,
        uses_ratio: false,
    },
    FixtureInfo {
        name: "segment",
        d: 2,
        role: "arc length on the full-width segment y = 1/2; box-counting calibration",
        uses_depth: false,
        uses_ratio: false,
    },
    FixtureInfo {
        name: "plane-slice",
        d: 2,
        role: "smooth density on the line y = 1/2; spectrum constant along the normal",
        uses_depth: false,
        uses_ratio: false,
    },
    FixtureInfo {
        name: "dust-product",
        d: 2,
        role: "[0,1) x Cantor-a; a line family over a thin null set",
        uses_depth: true,
        uses_ratio: true,
    },
    FixtureInfo {
        name: "square",
        d: 2,
        role: "Lebesgue measure on [0,1)^2; box-counting calibration",
        uses_depth: false,
        uses_ratio: false,
    },
];

pub fn lookup(name: &str) -> Result<&'static FixtureInfo, CliError> {
    CATALOG.iter().find(|f| f.name == name).ok_or_else(|| {
        let known: Vec<&str> = CATALOG.iter().map(|f| f.name).collect();
        CliError::Config(format!("unknown fixture `{name}`; known: {}", known.join(", ")))
    })
}

/// Cantor measure drawn on the first dyadic grid that resolves `depth`, then coarsened to `n`.
pub fn cantor(ratio: f64, depth: u32, n: usize) -> Result<GridMeasure, CliError> {
    let need = ratio.powi(-(depth as i32));
    let mut m = n;
    while (m as f64) < need * (1.0 - 1e-12) {
        m *= 2;
        if m > MAX_BUILD {
            return Err(CliError::Budget(format!("depth {depth} at ratio {ratio} needs a grid finer than {MAX_BUILD}")));
        }
    }
    let mut mu = cantor_measure(ratio, depth, m)?;
    while mu.n() > n {
        mu = mu.coarsen()?;
    }
    Ok(mu)
}

pub fn build(info: &FixtureInfo, n: usize, depth: Option<u32>, ratio: Option<f64>) -> Result<GridMeasure, CliError> {
    let depth = || depth.expect("resolved depth");
    let ratio = || ratio.expect("resolved ratio");
    let mu = match info.name {
        "cantor3" => cantor(1.0 / 3.0, depth(), n)?,
        "cantor-a" => cantor(ratio(), depth(), n)?,
        "circle" => sphere_measure(n)?,
        "segment" => segment_measure(n, [0.0, 0.5], [1.0 - 1.0 / n as f64, 0.5])?,
        "plane-slice" => {
            let mut w = vec![0.0; n * n];
            for i in 0..n {
                w[i * n + n / 2] = (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).sin().powi(2);
            }
            GridMeasure::from_weights(2, n, w)?
        }
        "dust-product" => GridMeasure::product(&GridMeasure::uniform(1, n)?, &cantor(ratio(), depth(), n)?)?,
        "square" => GridMeasure::uniform(2, n)?,
        other => unreachable!("catalog entry {other} without a builder"),
    };
    Ok(mu)
}

/// Expected box-counting dimension of the fixture's support.
pub fn box_reference(info: &FixtureInfo, ratio: Option<f64>) -> Reference {
    let cantor = |r: f64| 2f64.ln() / (1.0 / r).ln();
    match info.name {
        "cantor3" => Reference { value: cantor(1.0 / 3.0), tolerance: None },
        "cantor-a" => Reference { value: cantor(ratio.expect("resolved ratio")), tolerance: None },
        "circle" => Reference { value: 1.0, tolerance: None },
        "segment" | "plane-slice" => Reference { value: 1.0, tolerance: Some(0.05) },
        "dust-product" => Reference { value: 1.0 + cantor(ratio.expect("resolved ratio")), tolerance: None },
        "square" => Reference { value: 2.0, tolerance: Some(0.02) },
        other => unreachable!("catalog entry {other} without a reference"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_builds_quickly_at_1024() {
        for info in CATALOG {
            let start = std::time::Instant::now();
            let mu = build(info, 1024, Some(8), Some(DEFAULT_RATIO)).unwrap();
            assert_eq!((mu.d(), mu.n()), (info.d, 1024));
            assert!((mu.total_mass() - 1.0).abs() < 1e-9);
            assert!(start.elapsed().as_secs_f64() < 5.0, "{}", info.name);
        }
    }

    #[test]
    fn deep_cantor_is_coarsened() {
        let mu = cantor(1.0 / 3.0, 8, 4096).unwrap();
        assert_eq!(mu.n(), 4096);
        assert!(matches!(cantor(1.0 / 3.0, 14, 64), Err(CliError::Budget(_))));
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(lookup("cantor9"), Err(CliError::Config(_))));
    }
}

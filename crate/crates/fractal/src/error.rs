use thiserror::Error;

pub type Result<T> = std::result::Result<T, FractalError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FractalError {
    #[error("lattice side {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("dimension {0} is not supported (1 or 2)")]
    UnsupportedDimension(usize),
    #[error("grid shapes differ: (d={0}, n={1}) vs (d={2}, n={3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("resolution insufficient: {0}")]
    Resolution(String),
    #[error("energy exponent {s} outside (0, {d})")]
    EnergyExponent { s: f64, d: usize },
    #[error("frequency {0} outside the fit window")]
    FrequencyOutOfWindow(f64),
    #[error("annulus around radius {0} contains no lattice frequencies")]
    EmptyAnnulus(f64),
    #[error("transformed support leaves the unit box")]
    Overflow,
    #[error("empty set or measure")]
    Empty,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("too few points in the fit window")]
    DegenerateFit,
    #[error("malformed grid file: {0}")]
    Format(String),
}

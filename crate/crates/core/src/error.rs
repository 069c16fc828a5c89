use thiserror::Error;

/// Errors raised by geometry, measure, transport and checker routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point is {distance:.3e} away from the boundary")]
    PointOffBoundary { distance: f64 },
    #[error("normal is not unique at this point")]
    NonUniqueNormal,
    #[error("tangent coordinates lie outside the chart domain")]
    OutsideChartDomain,
    #[error("point is not on the same side as the chart base")]
    NotSameSide,
    #[error("body boundary is not C1")]
    NotC1,
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("hull radius {radius} is below half the diameter {min}")]
    RadiusTooSmall { radius: f64, min: f64 },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("density is not positive at sample {index}")]
    NonPositiveDensity { index: usize },
    #[error("origin is not interior to the body")]
    OriginNotInterior,
    #[error("cross-side normal product {value} is not negative")]
    NormalProductNonNegative { value: f64 },
    #[error("unbalanced masses: {source_mass} vs {target_mass}")]
    Unbalanced { source_mass: f64, target_mass: f64 },
    #[error("problem size {rows}x{cols} exceeds the solver limit")]
    SizeExceeded { rows: usize, cols: usize },
    #[error("not converged after {0} iterations")]
    NotConverged(usize),
    #[error("section leaves the same-side set of its slope")]
    SectionCrossesSide,
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("subdifferential has zero estimated area")]
    DegenerateSubdifferential,
    #[error("no admissible slope among the candidates")]
    NoAdmissibleSlope,
    #[error("formula needs n >= 2, got n = {0}")]
    DimensionTooLow(usize),
    #[error("plan is not map-like: spread {spread:.3e} above scale {scale:.3e}")]
    PlanNotMapLike { spread: f64, scale: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

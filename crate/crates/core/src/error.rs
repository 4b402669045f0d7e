//! Crate-wide error type.

/// Errors surfaced by geometry queries, flow operations and spectral oracles.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point is not on the boundary (distance {distance:.3e} exceeds tolerance)")]
    NotOnBoundary { distance: f64 },
    #[error("boundary normal undefined at a polygon vertex")]
    VertexSingular,
    #[error("ray does not reach the boundary from the given start")]
    NoIntersection,
    #[error("tangential boundary contact")]
    GrazingHit,
    #[error("operation requires an elliptical domain, got {0}")]
    WrongDomain(&'static str),
    #[error("parameter outside admissible range: {0}")]
    OutOfRange(String),
    #[error("turning radius could not be bracketed in (0, 1)")]
    RootNotBracketed,
    #[error("layer {layer} is inaccessible at eta = {eta}")]
    InaccessibleLayer { layer: usize, eta: f64 },
    #[error("finite-difference stencil touches the exceptional set")]
    ExceptionalSet,
    #[error("spectrum guaranteed only up to lambda = {guaranteed}, queried {requested}")]
    SpectrumTruncated { guaranteed: f64, requested: f64 },
    #[error("no surface state: beta must be positive (got {0})")]
    NoSurfaceState(f64),
    #[error("phase point lies outside the requested zone")]
    OutsideZone,
}

pub type Result<T> = std::result::Result<T, Error>;

//! Numerics of planar billiard dynamics and boundary spectral asymptotics:
//! billiard flows and their conserved quantities, rotation-number functions,
//! branching (refracting) ray dynamics in layered media, two-term Weyl
//! eigenvalue counting against exact reference spectra, the Robin
//! boundary-layer spectral density, and boundary-rescaling remainder
//! integrals.

pub mod billiard;
pub mod error;
pub mod geometry;
pub mod quad;
pub mod roots;
pub mod rotation;
pub mod seeley;
pub mod spectra;
pub mod vec2;
pub mod weyl;

pub use error::{Error, Result};
pub use geometry::{Domain, RayHit, Tolerances};
pub use vec2::Vec2;

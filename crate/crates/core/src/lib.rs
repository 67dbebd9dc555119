//! Magnon-photon strong coupling in a microwave cavity loaded with a
//! ferrimagnetic sphere.
//!
//! The crate predicts magnetostatic-mode resonances, synthesizes
//! input-output transmission maps, identifies modes through a rescaled
//! field coordinate, fits (Γ, Ms) from anticrossing fields and integrates
//! the pulsed coupled-mode dynamics.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod coupling;
pub mod dispersion;
pub mod error;
pub mod io;
pub mod legendre;
pub mod modeid;
pub mod params;
pub mod peaks;
pub mod presets;
pub mod timedomain;
pub mod transmission;

pub use error::{Error, Result};
pub use transmission::{MagnonModeEntry, ModeSpec, SpectralMap};
pub use params::{
    AnticrossingRecord, CavityModeParams, MaterialParams, MsmIndex, PhysicalConstants,
    SphereGeometry,
};


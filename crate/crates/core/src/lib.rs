pub mod baseflow;
pub mod config;
pub mod deformation;
pub mod ellipse;
pub mod error;
pub mod geometry;
pub mod lagrangian;
pub mod output;
pub mod perturbation;
pub mod radial_bvp;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};

//! Computational toolkit for the homogeneous nearly Kähler structure on
//! S³×S³ and its almost complex surfaces.
//!
//! - [`quat`]: quaternion algebra.
//! - [`nkspace`]: `J`, `P`, the metric `g`, the curvature tensor and the
//!   isometry group in closed form.
//! - [`connection`]: chart-based Levi-Civita connection, `∇J`, curvature
//!   cross-checks and second fundamental forms.
//! - [`surface`]: parametrized almost complex surfaces, their frame fields
//!   and the holomorphic differential.
//! - [`wente`]: the correspondence with solutions of the H-surface equation
//!   in ℝ³, in both directions.

pub mod connection;
pub mod error;
pub mod grid;
pub mod io;
pub mod nkspace;
pub mod quat;
pub mod rng;
pub mod surface;
pub mod wente;

pub use error::{Error, Result};
pub use nkspace::{IsometryNK, Plane2, PointNK, TangentNK};
pub use quat::{ImQuat, Quaternion};
pub use surface::{FrameFields, ParamSurface};
pub use wente::{CMCInput, EpsilonGrid};

//! Structure-preserving solvers for the augmented Maxwell–GLM system.
//!
//! Two discretisations share the same model layer:
//!
//! * [`htc`]: collocated finite volumes with an energy-compatible flux and
//!   explicit Runge–Kutta time stepping;
//! * [`simm`]: a staggered semi-implicit scheme built on the vertex/cell
//!   operators of [`mimetic`], with Crank–Nicolson coupling in the wave terms.
//!
//! [`diagnostics`] and [`harness`] provide the energy and divergence
//! monitors and the experiment drivers behind the `maxglm` command.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod htc;
pub mod mimetic;
pub mod model;
pub mod simm;

pub use error::{Error, Result};
pub use grid::{Field, Grid2D, Location};
pub use model::{Axis, EnergyKind, EnergyModel, ModelParams, State};

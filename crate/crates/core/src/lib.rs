//! Classical XY model ↔ noisy toric-rotor code toolkit.
//!
//! * [`lattice`]: the oriented torus, signed incidences and logical loops.
//! * [`exact_dual`]: exact `Z_φ(β)` of small tori via integer currents.
//! * [`xy_mc`]: Monte Carlo for energy and spin stiffness.
//! * [`analysis`]: binning, jackknife, monotone interpolation, KT crossing.
//! * [`rotor_code`]: von Mises noise, relative gate fidelity and the
//!   resilience order parameter.

pub mod analysis;
pub mod error;
pub mod exact_dual;
pub mod lattice;
pub mod rotor_code;
pub mod xy_mc;

pub use error::{Error, Result};

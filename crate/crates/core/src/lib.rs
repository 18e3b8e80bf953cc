//! Simulation and analysis of a double-cavity optomechanical system with a
//! transmissive middle mirror.
//!
//! The pipeline is: [`steady`] solves the pump-only mean fields and mirror
//! displacements, [`sideband`] solves the linearized probe response and the
//! backward reflection `T_b`, [`spectrum`] sweeps probe detuning and
//! tunneling rate, [`lineshape`] locates Fano dips and their separation, and
//! [`fit`] fits the separation curve with Moffat and generalized-logistic
//! profiles. [`closed_form`] holds hand-eliminated reflection formulas used
//! to cross-check the matrix route.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod error;
pub mod fit;
pub mod linear;
pub mod lineshape;
pub mod params;
pub mod sideband;
pub mod spectrum;
pub mod steady;

pub use error::{Error, Result};
pub use params::{PhysicalParams, Topology, HBAR};
pub use sideband::{ReflectionPoint, SidebandSolution};
pub use spectrum::{GridSpec, Method, Spectrum};
pub use steady::{SolveOptions, SteadyState};

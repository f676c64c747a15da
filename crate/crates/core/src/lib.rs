//! Near-tangent dynamics of Hamiltonian impact systems.
//!
//! A wall system — a separable two degree-of-freedom mechanical Hamiltonian
//! with elastic reflection at a vertical wall — has, on each energy surface,
//! an isolated torus of trajectories that graze the wall tangentially. The
//! iso-energy return map near that torus is piecewise smooth with a
//! square-root phase-advance singularity on the impacting side. This crate
//! provides:
//!
//! - [`map`]: exact iteration of the truncated tangency map and its
//!   generalized local form, with closed-form Jacobians.
//! - [`fixed_points`]: closed-form enumeration, stability classification and
//!   bifurcation scanning of the map's fixed points.
//! - [`band`]: long-orbit statistics of the tangency band — maximal widths,
//!   per-window trajectory widths, boundary distances and connection-time
//!   growth fits.
//! - [`flow`]: direct integration of wall systems (adaptive embedded
//!   Runge-Kutta with dense output, impact and section-crossing event
//!   location) and the Poincaré return map.
//! - [`chart`]: quadrature-defined quantities of the unperturbed system
//!   (periods, travel times, rotation numbers, twist), the leading-order
//!   action transfer along tangent trajectories, numerical extraction of the
//!   singularity curve, and the chart taking section crossings to tangency
//!   coordinates.

pub mod angle;
pub mod band;
pub mod chart;
pub mod error;
pub mod fixed_points;
pub mod flow;
pub mod forcing;
pub mod interp;
pub mod map;
pub mod potential;
pub mod quad;

pub use error::{Error, Result};
pub use forcing::Forcing;
pub use map::{MapParams, PhasePoint, Shear};

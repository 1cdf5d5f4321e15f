//! Stability laboratory for the two-dimensional inviscid, non-resistive,
//! velocity-damped MHD Rayleigh-Taylor problem in the slab
//! `Omega = 2*pi*T x (0, h)`.
//!
//! The toolkit has three legs:
//!
//! * a 1D variational solver for the per-frequency growth spectrum, the
//!   critical horizontal field strength `m_C` and the unstable eigenmodes
//!   ([`spectrum`], [`eigenmode`]);
//! * a nonlinear Lagrangian simulator for the transformed problem
//!   `eta_t = u`, `rho u_t + grad_A q + a rho u = lambda m^2 d11 eta + g G_eta e2`,
//!   `div_A u = 0` with a variable-coefficient Neumann pressure solve per
//!   stage ([`field`], [`sim`]);
//! * trajectory diagnostics: energy functionals, fitted exponential rates,
//!   escape-time detection ([`diag`]).

pub mod config;
pub mod diag;
pub mod eigenmode;
pub mod error;
pub mod field;
pub mod io;
pub mod profile;
pub mod sim;
pub mod spectrum;
pub mod verify;

pub use error::{MrtError, Result};
pub use profile::{PhysParams, Profile, ProfileKind};

//! Numerical laboratory for a stochastic mass-conserving bistable phase field
//! on a 2-D Neumann rectangle and its limit: a volume-preserving curvature
//! flow of a convex plane curve driven by the same smooth-in-time noise.
//!
//! The crate is organized around the objects of that problem:
//!
//! - [`reaction`]: the bistable nonlinearity `f`, its potential, and the
//!   structural conditions it must satisfy.
//! - [`profile`]: 1-D wave profiles in the stretched variable — the standing
//!   wave, traveling waves with their speed, the first corrector, the inverse
//!   surface tension (two routes), and a principal-eigenvalue probe.
//! - [`noise`]: two families of smooth noise converging to Brownian motion,
//!   with certified derivative bounds and the norms used to state them.
//! - [`acpde`]: the mass-conserving phase-field solver (IMEX, exact discrete
//!   mass law) with zero-level contour extraction.
//! - [`limitflow`]: the curvature flow in Gauss-map coordinates with cutoff,
//!   Stratonovich (Heun) and Ito (Euler-Maruyama) stepping, and curve
//!   reconstruction.
//! - [`expansion`]: order-0/1 correction quantities on a given curve
//!   trajectory (lambda0, normal velocity, inner/outer correctors, h1 and
//!   lambda1 on the circle of normal angles).
//! - [`harness`]: noise cache, the coupled convergence experiment, and CSV /
//!   raster reporting.
//!
//! Runnable demonstrations live in `examples/`; the `mcac` binary exposes the
//! same capabilities as subcommands.

pub mod acpde;
pub mod bump;
pub mod expansion;
pub mod geom;
pub mod harness;
pub mod limitflow;
pub mod linalg;
pub mod noise;
pub mod profile;
pub mod reaction;
pub mod spectral;

//! Spectral Galerkin simulation of the stochastic 2D Navier-Stokes equation
//! on the unit torus driven by cylindrical alpha-stable noise, with
//! statistical diagnostics for the fractional moment bound, the martingale
//! law of weak solutions and time-averaged invariant measures.

pub mod spectral;
pub mod levy;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;
pub mod solver;
pub mod diagnostics;
pub mod invariant;

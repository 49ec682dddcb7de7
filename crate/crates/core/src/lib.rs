//! Numerical laboratory for the hyperkähler geometry of disk cotangent bundles
//! over complex hyperbolic space and the associated first-order (Fueter/Floer)
//! boundary value problem on cylinders over the 2-torus.
//!
//! The crate is organized bottom-up:
//!
//! - [`chart`]: base charts (flat torus, complex-hyperbolic ball), their Kähler
//!   metrics, Christoffel contractions, and the constant-curvature tensor;
//! - [`hyperkahler`]: the curvature-built operator `A_ξ`, the block hyperkähler
//!   metric on the cotangent chart, the symplectic pair, and the recovered
//!   complex structures `J`, `K`;
//! - [`hamiltonian`]: kinetic + perturbation Hamiltonians, the switching cutoff
//!   family `β_τ`, and sampled/analytic norms;
//! - [`grid`], [`field`]: Fourier-spectral torus grids, cylinder grids, and the
//!   field containers (base maps, cotangent fields, cylinder fields);
//! - [`action`]: the two-form action functional, its L² gradient, and the
//!   Euler–Lagrange residual;
//! - [`harmonic`]: tension fields, Dirichlet energy, heat flow, and the
//!   momentum lift of base maps;
//! - [`fueter`]: the first-order residual, per-mode linear analysis, and the
//!   Newton–Krylov boundary value solver ([`solver`]);
//! - [`covariant`]: numerically assembled Christoffel data of the bundle metric
//!   and the tension/composition identity checks;
//! - [`estimates`]: the machine-checked estimate battery (subsolution, mean
//!   value, barrier, average-momentum, energy budget, confinement exponent law);
//! - [`snapshot`], [`report`]: binary field snapshots, CSV export, JSON reports.
//!
//! Closed-form scalar kernels live in [`kernels`] and are generic over the
//! [`scalar::Real`] trait; the discretized layers are concrete `f64`.

pub mod action;
pub mod chart;
pub mod covariant;
pub mod error;
pub mod estimates;
pub mod field;
pub mod fueter;
pub mod grid;
pub mod hamiltonian;
pub mod harmonic;
pub mod hyperkahler;
pub mod kernels;
pub mod report;
pub mod scalar;
pub mod snapshot;
pub mod solver;

pub use error::{Error, Result};

/// Concrete scalar used by the discretized layers (fields, solvers, reports).
pub type Real64 = f64;
/// Complex scalar matching [`Real64`].
pub type C64 = num_complex::Complex<f64>;
/// Dense dynamic matrix over [`Real64`].
pub type Mat = nalgebra::DMatrix<f64>;
/// Dense dynamic vector over [`Real64`].
pub type Vec64 = nalgebra::DVector<f64>;

/// Degeneration radius of the hyperkähler metric: the fiber disk |ξ|_g < δ₀.
pub const DELTA0: f64 = 0.5;

//! 2D simulator for single-phase compressible Darcy flow in a porous medium
//! cut by a single highly permeable fracture.
//!
//! The fracture is reduced to a co-dimension-1 interface carrying its own
//! (tangential) flow equations, coupled to the two matrix subdomains it
//! separates. On top of the monolithic reference solver, two global-in-time,
//! nonoverlapping domain decomposition solvers are provided, both able to run
//! with nonconforming time grids between the subdomains and the fracture:
//!
//! * `schur` — a preconditioned Schur method whose space-time interface
//!   unknown is the fracture pressure, driven by Dirichlet-to-Neumann sweeps
//!   (preconditioners: none, local fracture inverse, Neumann-Neumann);
//! * `oswr` — an optimized Schwarz waveform relaxation method with
//!   Ventcell-to-Robin transmission and a tunable Robin parameter `alpha`,
//!   iterated by Jacobi or GMRES.
//!
//! The `symbol` module evaluates the Fourier convergence factor of the OSWR
//! iteration on two half-spaces and optimizes `alpha` over a frequency box.
//! The `harness` module holds scenario configuration, error metrics and the
//! CSV/field emitters behind the `fracflow` command line tool.

pub mod error;
pub mod geometry;
pub mod timegrid;
pub mod linalg;
pub mod discretize;
pub mod monolithic;
pub mod subsolve;
pub mod schur;
pub mod oswr;
pub mod symbol;
pub mod harness;

pub use error::{Error, Result};

//! Finite-element toolkit for steady-state coupled deformation-diffusion
//! analysis of degrading/healing elastic solids.
//!
//! The crate couples plane-strain linearized elasticity (with
//! concentration-dependent Lamé parameters) to anisotropic tensorial
//! diffusion (with strain-dependent diffusivity). The diffusion subproblem
//! can be solved either with the standard Galerkin formulation or as a
//! bound-constrained convex QP that keeps nodal concentrations
//! non-negative on arbitrary meshes. A staggered fixed-point driver
//! alternates the two single-physics solves until the concentration
//! iterates settle.
//!
//! The crate is `no_std` + `alloc`; all file formats, fixtures and the
//! command line live in the companion `defdif-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assembly;
pub mod bench;
pub mod coupling;
pub mod materials;
pub mod mesh;
pub mod solvers;


pub use coupling::{staggered_solve, CoupledConfig, Formulation, RunReport};
pub use materials::{DiffusivityModel, LameModel, Strain2D, Tensor2};
pub use mesh::{BoundaryCondition, ElementKind, Mesh};
pub use solvers::{solve_nonneg_qp, solve_spd, QpResult, SymSparseMatrix};

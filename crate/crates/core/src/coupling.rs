//! Staggered solution of the coupled deformation-diffusion problem.
//!
//! Each pass solves elasticity with the previous concentration, transfers the
//! strain to the diffusion operator at the quadrature points, and solves for
//! a new concentration — either the plain Galerkin system or the
//! bound-constrained QP that enforces nodal non-negativity.  The loop stops
//! when the l2 change in the nodal concentration drops below `eps_tol_c`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{
    assemble_diffusion, assemble_elasticity, strain_at_quadrature, AssemblyError,
};
use crate::materials::{DiffusivityModel, LameModel};
use crate::mesh::{BoundaryCondition, Mesh, ScalarValue};
use crate::solvers::{solve_nonneg_qp, solve_spd, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Plain Galerkin concentration solve; may violate the discrete maximum
    /// principle on coarse or anisotropic problems.
    Galerkin,
    /// Nodal non-negativity enforced through the bound-constrained QP.
    NonNegative,
}

#[derive(Debug, Clone, Copy)]
pub struct CoupledConfig {
    pub formulation: Formulation,
    /// Staggered stopping tolerance on ||c_i - c_{i-1}||_2.
    pub eps_tol_c: f64,
    pub max_iters: usize,
}

impl CoupledConfig {
    pub fn new(formulation: Formulation, eps_tol_c: f64) -> Self {
        CoupledConfig {
            formulation,
            eps_tol_c,
            max_iters: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingError {
    Assembly(AssemblyError),
    Solver { context: String, source: SolverError },
}

impl From<AssemblyError> for CouplingError {
    fn from(e: AssemblyError) -> Self {
        CouplingError::Assembly(e)
    }
}

impl core::fmt::Display for CouplingError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CouplingError::Assembly(e) => write!(f, "assembly failed: {e}"),
            CouplingError::Solver { context, source } => {
                write!(f, "{context} solve failed: {source}")
            }
        }
    }
}

/// Outcome of a staggered run.  Fields are kept nodal so writers can emit
/// them directly.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub converged: bool,
    /// Number of staggered passes performed (the pass at which the stopping
    /// check succeeded, or `max_iters` when it never did).
    pub iterations: usize,
    /// ||c_i - c_{i-1}||_2 after every pass.
    pub delta_c_history: Vec<f64>,
    /// Active-set iteration counts per pass (empty for Galerkin runs).
    pub qp_iterations: Vec<usize>,
    pub min_c: f64,
    pub max_c: f64,
    /// Percentage of nodes with concentration below -1e-12.
    pub degradation_index: f64,
    pub u: Vec<f64>,
    pub c: Vec<f64>,
    pub relative_modulus: Vec<f64>,
}

/// Percentage of nodes whose concentration lies below -1e-12.
pub fn degradation_index(c: &[f64]) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let bad = c.iter().filter(|&&v| v < -1e-12).count();
    100.0 * bad as f64 / c.len() as f64
}

pub fn relative_modulus_field(lame: &LameModel, c: &[f64]) -> Vec<f64> {
    c.iter().map(|&v| lame.relative_modulus(v)).collect()
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += (x - y) * (x - y);
    }
    libm::sqrt(s)
}

/// Run the staggered deformation-diffusion iteration.
///
/// The concentration starts at zero on free nodes and at the prescribed
/// values on Dirichlet nodes.  One BC list covers both fields; each assembly
/// picks out the conditions relevant to it.
#[allow(clippy::too_many_arguments)]
pub fn staggered_solve(
    mesh: &Mesh,
    lame: &LameModel,
    model: &DiffusivityModel,
    source: &ScalarValue,
    rho: f64,
    body_force: &dyn Fn(f64, f64) -> [f64; 2],
    bcs: &[BoundaryCondition],
    config: &CoupledConfig,
) -> Result<RunReport, CouplingError> {
    // Initial concentration: zero on free DOFs, prescribed on Dirichlet.
    let init = assemble_diffusion(mesh, model, None, source, bcs)?;
    let mut c_prev = init.dof_map.expand(&vec![0.0; init.dof_map.n_free()]);

    let mut delta_c_history = Vec::new();
    let mut qp_iterations = Vec::new();
    let mut converged = false;
    let mut iterations = config.max_iters;
    let mut u = vec![0.0; 2 * mesh.num_nodes()];
    let mut c = c_prev.clone();

    for i in 1..=config.max_iters {
        let elas = assemble_elasticity(mesh, lame, &c_prev, rho, body_force, bcs)?;
        let u_free = solve_spd(&elas.k, &elas.f).map_err(|source| CouplingError::Solver {
            context: String::from("elasticity"),
            source,
        })?;
        u = elas.dof_map.expand(&u_free);

        let strains = strain_at_quadrature(mesh, &u)?;
        let diff = assemble_diffusion(mesh, model, Some(&strains), source, bcs)?;
        let c_free = match config.formulation {
            Formulation::Galerkin => {
                solve_spd(&diff.k, &diff.f).map_err(|source| CouplingError::Solver {
                    context: String::from("diffusion"),
                    source,
                })?
            }
            Formulation::NonNegative => {
                let qp = solve_nonneg_qp(&diff.k, &diff.f).map_err(|source| {
                    CouplingError::Solver {
                        context: String::from("diffusion QP"),
                        source,
                    }
                })?;
                qp_iterations.push(qp.iterations);
                qp.c
            }
        };
        c = diff.dof_map.expand(&c_free);

        let delta = l2_diff(&c, &c_prev);
        delta_c_history.push(delta);
        if delta < config.eps_tol_c {
            converged = true;
            iterations = i;
            break;
        }
        c_prev.copy_from_slice(&c);
    }

    let mut min_c = f64::INFINITY;
    let mut max_c = f64::NEG_INFINITY;
    for &v in &c {
        min_c = min_c.min(v);
        max_c = max_c.max(v);
    }
    let relative_modulus = relative_modulus_field(lame, &c);
    Ok(RunReport {
        converged,
        iterations,
        delta_c_history,
        qp_iterations,
        min_c,
        max_c,
        degradation_index: degradation_index(&c),
        u,
        c,
        relative_modulus,
    })
}

//! Benchmark harness: the manufactured-solution convergence study and the
//! catalog of physical test cases (beams and hole domains).
//!
//! Everything here is plain data plus drivers over the coupling module, so
//! the CLI and the test suites share one definition of each case.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, exp, log, sin, sqrt};

use crate::assembly::{element_quad_points, QuadratureRule};
use crate::coupling::{staggered_solve, CoupledConfig, CouplingError, Formulation, RunReport};
use crate::materials::{rotated_tensor, DiffusivityModel, LameModel, MaterialError, Tensor2};
use crate::mesh::{
    generate_structured_rect, parse_mesh, BoundaryCondition, ElementKind, Mesh, MeshError,
    ScalarValue, VectorValue,
};

use core::f64::consts::PI;

#[derive(Debug)]
pub enum BenchError {
    Mesh(MeshError),
    Material(MaterialError),
    Coupling(CouplingError),
    /// A staggered run inside a study failed to converge.
    NotConverged { case: String },
    UnknownCase(String),
    /// The case runs on a shipped mesh fixture; the caller must supply its
    /// text via `CaseSpec::prepare_mesh`.
    NeedsFixture(&'static str),
}

impl From<MeshError> for BenchError {
    fn from(e: MeshError) -> Self {
        BenchError::Mesh(e)
    }
}

impl From<MaterialError> for BenchError {
    fn from(e: MaterialError) -> Self {
        BenchError::Material(e)
    }
}

impl From<CouplingError> for BenchError {
    fn from(e: CouplingError) -> Self {
        BenchError::Coupling(e)
    }
}

impl core::fmt::Display for BenchError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BenchError::Mesh(e) => write!(f, "mesh error: {e}"),
            BenchError::Material(e) => write!(f, "material error: {e}"),
            BenchError::Coupling(e) => write!(f, "{e}"),
            BenchError::NotConverged { case } => {
                write!(f, "staggered iteration did not converge for '{case}'")
            }
            BenchError::UnknownCase(name) => write!(f, "unknown case '{name}'"),
            BenchError::NeedsFixture(name) => {
                write!(f, "case needs the '{name}' mesh fixture")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Manufactured solution
// ---------------------------------------------------------------------------

/// Closed-form fields of the manufactured problem at one point:
/// displacement, concentration, diffusion source, and body force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedPoint {
    pub u: [f64; 2],
    pub c: f64,
    pub f: f64,
    pub b: [f64; 2],
}

fn gamma_s() -> f64 {
    // (beta_S - 1) / (exp(eta_S * E_ref) - 1) with beta_S = 2, eta_S = 1,
    // E_ref = 1e-4.
    1.0 / (exp(1.0e-4) - 1.0)
}

pub fn manufactured_solution(x: f64, y: f64) -> ManufacturedPoint {
    let (sx, cx) = (sin(0.5 * PI * x), cos(0.5 * PI * x));
    let (sy, cy) = (sin(0.5 * PI * y), cos(0.5 * PI * y));
    let g = gamma_s();
    // The shear invariant of this displacement field reduces to cx*sy.
    let e = exp(cx * sy);
    let f = PI * sx * sy * ((1.0 - g) + g * e) - 0.25 * PI * g * sin(PI * x) * cos(PI * y) * e;
    let b = [
        PI * sx * sy + 0.25 * PI * cos(PI * x) * (1.0 - cos(PI * y)),
        PI * cx * cy - 0.25 * PI * sin(PI * x) * sin(PI * y),
    ];
    ManufacturedPoint {
        u: [sx * sy / PI, cx * cy / PI],
        c: 1.0 + sx * sy / PI,
        f,
        b,
    }
}

/// Gradients of the manufactured fields: rows of `grad_u` are the gradients
/// of the two displacement components; `grad_c` is the concentration
/// gradient.
pub fn manufactured_gradients(x: f64, y: f64) -> ([[f64; 2]; 2], [f64; 2]) {
    let (sx, cx) = (sin(0.5 * PI * x), cos(0.5 * PI * x));
    let (sy, cy) = (sin(0.5 * PI * y), cos(0.5 * PI * y));
    let grad_u = [
        [0.5 * cx * sy, 0.5 * sx * cy],
        [-0.5 * sx * cy, -0.5 * cx * sy],
    ];
    (grad_u, [0.5 * cx * sy, 0.5 * sx * cy])
}

/// Material models of the manufactured problem.
pub fn manufactured_materials() -> (LameModel, DiffusivityModel) {
    let lame = LameModel {
        lambda0: 2.0,
        mu0: PI + 2.0,
        lambda1: -1.0,
        mu1: -PI,
        c_ref: 1.0,
    };
    let d0 = Tensor2::identity().scale(2.0);
    let model = DiffusivityModel::phi_scaled(d0, 2.0, 2.0, 1.0, 1.0, 1.0e-4)
        .expect("manufactured diffusivity parameters are valid");
    (lame, model)
}

fn manufactured_bcs() -> Vec<BoundaryCondition> {
    vec![
        BoundaryCondition::dirichlet_displacement(
            "boundary",
            VectorValue::Fn(Box::new(|x, y| manufactured_solution(x, y).u)),
        ),
        BoundaryCondition::dirichlet_concentration(
            "boundary",
            ScalarValue::Fn(Box::new(|x, y| manufactured_solution(x, y).c)),
        ),
    ]
}

/// Run the manufactured problem on an `n` x `n`-node grid.
pub fn run_manufactured(kind: ElementKind, n: usize) -> Result<RunReport, BenchError> {
    let mesh = generate_structured_rect(0.0, 0.0, 1.0, 1.0, n, n, kind)?;
    let (lame, model) = manufactured_materials();
    let config = CoupledConfig::new(Formulation::NonNegative, 1.0e-8);
    let report = staggered_solve(
        &mesh,
        &lame,
        &model,
        &ScalarValue::Fn(Box::new(|x, y| manufactured_solution(x, y).f)),
        1.0,
        &|x, y| manufactured_solution(x, y).b,
        &manufactured_bcs(),
        &config,
    )?;
    if !report.converged {
        return Err(BenchError::NotConverged {
            case: format!("manufactured {kind:?} n={n}"),
        });
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Error norms and the convergence study
// ---------------------------------------------------------------------------

/// L2 and H1-seminorm errors per field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2_u: f64,
    pub h1_u: f64,
    pub l2_c: f64,
    pub h1_c: f64,
}

/// Analytic comparison fields for `error_norms`.
pub struct AnalyticFields<'a> {
    pub u: &'a dyn Fn(f64, f64) -> [f64; 2],
    pub grad_u: &'a dyn Fn(f64, f64) -> [[f64; 2]; 2],
    pub c: &'a dyn Fn(f64, f64) -> f64,
    pub grad_c: &'a dyn Fn(f64, f64) -> [f64; 2],
}

/// Quadrature evaluation of the discretization errors of nodal fields
/// `u` (2 per node) and `c` against analytic fields.
pub fn error_norms(mesh: &Mesh, u: &[f64], c: &[f64], exact: &AnalyticFields) -> ErrorNorms {
    let nn = mesh.kind().nodes_per_element();
    let rule = QuadratureRule::for_kind(mesh.kind());
    let (mut l2u, mut h1u, mut l2c, mut h1c) = (0.0, 0.0, 0.0, 0.0);
    for e in 0..mesh.num_elements() {
        let conn = mesh.element(e);
        for qp in element_quad_points(mesh, e, &rule) {
            let mut uh = [0.0; 2];
            let mut guh = [[0.0; 2]; 2];
            let mut ch = 0.0;
            let mut gch = [0.0; 2];
            for a in 0..nn {
                let n = conn[a];
                for d in 0..2 {
                    uh[d] += qp.n[a] * u[2 * n + d];
                    guh[d][0] += qp.grad[a][0] * u[2 * n + d];
                    guh[d][1] += qp.grad[a][1] * u[2 * n + d];
                }
                ch += qp.n[a] * c[n];
                gch[0] += qp.grad[a][0] * c[n];
                gch[1] += qp.grad[a][1] * c[n];
            }
            let ue = (exact.u)(qp.xy[0], qp.xy[1]);
            let gue = (exact.grad_u)(qp.xy[0], qp.xy[1]);
            let ce = (exact.c)(qp.xy[0], qp.xy[1]);
            let gce = (exact.grad_c)(qp.xy[0], qp.xy[1]);
            for d in 0..2 {
                l2u += qp.w * (uh[d] - ue[d]) * (uh[d] - ue[d]);
                for k in 0..2 {
                    h1u += qp.w * (guh[d][k] - gue[d][k]) * (guh[d][k] - gue[d][k]);
                }
            }
            l2c += qp.w * (ch - ce) * (ch - ce);
            for k in 0..2 {
                h1c += qp.w * (gch[k] - gce[k]) * (gch[k] - gce[k]);
            }
        }
    }
    ErrorNorms {
        l2_u: sqrt(l2u),
        h1_u: sqrt(h1u),
        l2_c: sqrt(l2c),
        h1_c: sqrt(h1c),
    }
}

fn manufactured_analytic() -> AnalyticFields<'static> {
    AnalyticFields {
        u: &|x, y| manufactured_solution(x, y).u,
        grad_u: &|x, y| manufactured_gradients(x, y).0,
        c: &|x, y| manufactured_solution(x, y).c,
        grad_c: &|x, y| manufactured_gradients(x, y).1,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub nodes_per_side: usize,
    pub h: f64,
    pub norms: ErrorNorms,
}

#[derive(Debug, Clone)]
pub struct RateTable {
    pub kind: ElementKind,
    pub rows: Vec<ConvergenceRow>,
    /// Observed rates between consecutive rows:
    /// `log(e_k / e_{k+1}) / log(h_k / h_{k+1})`.
    pub rates: Vec<ErrorNorms>,
}

/// Run the manufactured problem over a mesh hierarchy and report observed
/// convergence rates.
pub fn convergence_study(
    kind: ElementKind,
    resolutions: &[usize],
) -> Result<RateTable, BenchError> {
    let analytic = manufactured_analytic();
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let mesh = generate_structured_rect(0.0, 0.0, 1.0, 1.0, n, n, kind)?;
        let report = run_manufactured(kind, n)?;
        let norms = error_norms(&mesh, &report.u, &report.c, &analytic);
        rows.push(ConvergenceRow {
            nodes_per_side: n,
            h: 1.0 / (n - 1) as f64,
            norms,
        });
    }
    let mut rates = Vec::new();
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let scale = log(a.h / b.h);
        let rate = |ea: f64, eb: f64| log(ea / eb) / scale;
        rates.push(ErrorNorms {
            l2_u: rate(a.norms.l2_u, b.norms.l2_u),
            h1_u: rate(a.norms.h1_u, b.norms.h1_u),
            l2_c: rate(a.norms.l2_c, b.norms.l2_c),
            h1_c: rate(a.norms.h1_c, b.norms.h1_c),
        });
    }
    Ok(RateTable { kind, rows, rates })
}

// ---------------------------------------------------------------------------
// Case catalog
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    StructuredRect {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        nx: usize,
        ny: usize,
        kind: ElementKind,
    },
    /// Named mesh fixture shipped with the CLI; its text is supplied by the
    /// caller.
    Fixture(&'static str),
}

/// How the boundary sets of a case translate into boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcPattern {
    /// Left edge clamped, given traction on the right edge, zero
    /// concentration top/bottom, natural zero flux left/right.
    CantileverShear { traction: [f64; 2] },
    /// Bottom corners pinned (left one in both directions, right one
    /// vertically), zero concentration top/bottom.
    SimplySupportedBeam,
    /// Both end edges clamped, zero concentration top/bottom.
    FixedBeam,
    /// Zero displacement and unit concentration at the hole set, zero
    /// concentration at the outer set, traction-free outer boundary.
    HoleDomain,
    /// Decoupled smoke problem: left edge clamped, traction on the right,
    /// concentration driven from the left edge.
    DecoupledSmoke,
}

#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub name: String,
    pub geometry: Geometry,
    pub lame: LameModel,
    pub diffusivity: DiffusivityModel,
    pub source: f64,
    pub body_force: [f64; 2],
    pub eps_tol_c: f64,
    pub pattern: BcPattern,
}

impl CaseSpec {
    /// Build the case mesh.  Structured cases generate it (adding the corner
    /// sets the simply supported beam needs); fixture cases parse the
    /// supplied text.
    pub fn prepare_mesh(&self, fixture_text: Option<&str>) -> Result<Mesh, BenchError> {
        match self.geometry {
            Geometry::StructuredRect {
                x0,
                y0,
                x1,
                y1,
                nx,
                ny,
                kind,
            } => {
                let mut mesh = generate_structured_rect(x0, y0, x1, y1, nx, ny, kind)?;
                if self.pattern == BcPattern::SimplySupportedBeam {
                    mesh.add_node_set("corner_bl", vec![0])?;
                    mesh.add_node_set("corner_br", vec![nx - 1])?;
                }
                Ok(mesh)
            }
            Geometry::Fixture(name) => {
                let text = fixture_text.ok_or(BenchError::NeedsFixture(name))?;
                Ok(parse_mesh(text)?)
            }
        }
    }

    pub fn bcs(&self) -> Vec<BoundaryCondition> {
        match self.pattern {
            BcPattern::CantileverShear { traction } => vec![
                BoundaryCondition::dirichlet_displacement("left", VectorValue::Const([0.0, 0.0])),
                BoundaryCondition::neumann_traction("right", VectorValue::Const(traction)),
                BoundaryCondition::dirichlet_concentration("top", ScalarValue::Const(0.0)),
                BoundaryCondition::dirichlet_concentration("bottom", ScalarValue::Const(0.0)),
            ],
            BcPattern::SimplySupportedBeam => vec![
                BoundaryCondition::pinned(
                    "corner_bl",
                    Some(ScalarValue::Const(0.0)),
                    Some(ScalarValue::Const(0.0)),
                ),
                BoundaryCondition::pinned("corner_br", None, Some(ScalarValue::Const(0.0))),
                BoundaryCondition::dirichlet_concentration("top", ScalarValue::Const(0.0)),
                BoundaryCondition::dirichlet_concentration("bottom", ScalarValue::Const(0.0)),
            ],
            BcPattern::FixedBeam => vec![
                BoundaryCondition::dirichlet_displacement("left", VectorValue::Const([0.0, 0.0])),
                BoundaryCondition::dirichlet_displacement("right", VectorValue::Const([0.0, 0.0])),
                BoundaryCondition::dirichlet_concentration("top", ScalarValue::Const(0.0)),
                BoundaryCondition::dirichlet_concentration("bottom", ScalarValue::Const(0.0)),
            ],
            BcPattern::HoleDomain => vec![
                BoundaryCondition::dirichlet_displacement("hole", VectorValue::Const([0.0, 0.0])),
                BoundaryCondition::dirichlet_concentration("hole", ScalarValue::Const(1.0)),
                BoundaryCondition::dirichlet_concentration("outer", ScalarValue::Const(0.0)),
            ],
            BcPattern::DecoupledSmoke => vec![
                BoundaryCondition::dirichlet_displacement("left", VectorValue::Const([0.0, 0.0])),
                BoundaryCondition::neumann_traction("right", VectorValue::Const([0.0, 1.0])),
                BoundaryCondition::dirichlet_concentration("left", ScalarValue::Const(1.0)),
                BoundaryCondition::dirichlet_concentration("right", ScalarValue::Const(0.0)),
            ],
        }
    }

    pub fn run(&self, mesh: &Mesh, formulation: Formulation) -> Result<RunReport, BenchError> {
        let config = CoupledConfig::new(formulation, self.eps_tol_c);
        let bf = self.body_force;
        Ok(staggered_solve(
            mesh,
            &self.lame,
            &self.diffusivity,
            &ScalarValue::Const(self.source),
            1.0,
            &move |_, _| bf,
            &self.bcs(),
            &config,
        )?)
    }
}

/// The moduli shared by every physical test case.
pub fn common_lame() -> LameModel {
    LameModel {
        lambda0: 1.0e6,
        mu0: 1.0e6,
        lambda1: -9.0e5,
        mu1: -9.0e5,
        c_ref: 1.0,
    }
}

const E_REF: f64 = 1.0e-4;

fn beam_geometry() -> Geometry {
    // 21 nodes along each side of the 1.0 x 0.1 beam.
    Geometry::StructuredRect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 0.1,
        nx: 21,
        ny: 21,
        kind: ElementKind::Quad4,
    }
}

fn fmt_value(v: f64) -> String {
    if v == libm::floor(v) && v.abs() < 1.0e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Cantilever beam with edge shear; sweep parameter `phi_s` in {5, 10, 20}.
pub fn cantilever_case(phi_s: f64) -> Result<CaseSpec, BenchError> {
    let d0 = rotated_tensor(PI / 6.0, 1.0, 1.0)?;
    let diffusivity = DiffusivityModel::phi_scaled(d0, 2.0, phi_s, 100.0, 1.0, E_REF)?;
    Ok(CaseSpec {
        name: format!("cantilever_phi_s_{}", fmt_value(phi_s)),
        geometry: beam_geometry(),
        lame: common_lame(),
        diffusivity,
        source: 10000.0,
        body_force: [0.0, 0.0],
        eps_tol_c: 1.0e-8,
        pattern: BcPattern::CantileverShear {
            traction: [0.0, 500.0],
        },
    })
}

/// Simply supported beam under self-weight; sweep parameter `eta_s` in
/// {1, 1e3, 2e4}.
pub fn simply_supported_case(eta_s: f64) -> Result<CaseSpec, BenchError> {
    let d0 = rotated_tensor(PI / 6.0, 1.0, 1.0)?;
    let diffusivity = DiffusivityModel::phi_scaled(d0, 10.0, 10.0, 1.0, eta_s, E_REF)?;
    Ok(CaseSpec {
        name: format!("simply_supported_eta_s_{}", fmt_value(eta_s)),
        geometry: beam_geometry(),
        lame: common_lame(),
        diffusivity,
        source: 1000.0,
        body_force: [0.0, -10.0],
        eps_tol_c: 1.0e-5,
        pattern: BcPattern::SimplySupportedBeam,
    })
}

/// Fixed beam under self-weight; sweep parameter `phi_t` in {1, 5, 7}.
pub fn fixed_beam_case(phi_t: f64) -> Result<CaseSpec, BenchError> {
    let d0 = rotated_tensor(0.0, 1.0, 1.0)?;
    let diffusivity = DiffusivityModel::phi_scaled(d0, phi_t, 1.0, 100.0, 1.0, E_REF)?;
    Ok(CaseSpec {
        name: format!("fixed_beam_phi_t_{}", fmt_value(phi_t)),
        geometry: beam_geometry(),
        lame: common_lame(),
        diffusivity,
        source: 100.0,
        body_force: [0.0, -10.0],
        eps_tol_c: 1.0e-7,
        pattern: BcPattern::FixedBeam,
    })
}

/// Fixed beam with the Frobenius-norm diffusivity comparison model.
pub fn fixed_beam_frobenius_case() -> Result<CaseSpec, BenchError> {
    let d0 = rotated_tensor(0.0, 1.0, 1.0)?;
    let diffusivity = DiffusivityModel::frobenius_norm(d0, d0.scale(10.0), 100.0)?;
    Ok(CaseSpec {
        name: "fixed_beam_frobenius".to_string(),
        geometry: beam_geometry(),
        lame: common_lame(),
        diffusivity,
        source: 100.0,
        body_force: [0.0, -10.0],
        eps_tol_c: 1.0e-7,
        pattern: BcPattern::FixedBeam,
    })
}

/// Sweep rows (d1, d1T, d1S) of the plate-with-hole study.
pub const PLATE_HOLE_ROWS: [[f64; 3]; 5] = [
    [1.0, 10.0, 10.0],
    [10.0, 30.0, 20.0],
    [100.0, 120.0, 110.0],
    [1000.0, 1200.0, 1100.0],
    [10000.0, 11000.0, 11000.0],
];

/// Sweep rows (d1, d1T, d1S) of the beam-with-three-holes study.
pub const BEAM_HOLES_ROWS: [[f64; 3]; 5] = [
    [1.0, 10.0, 10.0],
    [10.0, 50.0, 30.0],
    [100.0, 200.0, 150.0],
    [1000.0, 2000.0, 1500.0],
    [10000.0, 20000.0, 15000.0],
];

fn hole_case(
    name_prefix: &str,
    fixture: &'static str,
    theta: f64,
    d2: [f64; 3],
    row: [f64; 3],
) -> Result<CaseSpec, BenchError> {
    let d0 = rotated_tensor(theta, row[0], d2[0])?;
    let dt = rotated_tensor(theta, row[1], d2[1])?;
    let ds = rotated_tensor(theta, row[2], d2[2])?;
    let diffusivity = DiffusivityModel::invariant_tension(d0, dt, ds, 1.0, 1.0, E_REF)?;
    Ok(CaseSpec {
        name: format!("{name_prefix}_d1_{}", fmt_value(row[0])),
        geometry: Geometry::Fixture(fixture),
        lame: common_lame(),
        diffusivity,
        source: 0.0,
        body_force: [0.0, -10.0],
        eps_tol_c: 1.0e-5,
        pattern: BcPattern::HoleDomain,
    })
}

/// Plate with a centered square hole; `row` indexes `PLATE_HOLE_ROWS`.
pub fn plate_with_hole_case(row: usize) -> Result<CaseSpec, BenchError> {
    hole_case(
        "plate_with_hole",
        "plate_with_hole",
        PI / 3.0,
        [1.0, 10.0, 5.0],
        PLATE_HOLE_ROWS[row],
    )
}

/// Beam with three square holes; `row` indexes `BEAM_HOLES_ROWS`.
pub fn beam_three_holes_case(row: usize) -> Result<CaseSpec, BenchError> {
    hole_case(
        "beam_three_holes",
        "beam_three_holes",
        PI / 4.0,
        [1.0, 5.0, 2.0],
        BEAM_HOLES_ROWS[row],
    )
}

/// Fully decoupled problem (constant diffusivity, strain-independent
/// moduli): the staggered loop must settle in exactly two passes.
pub fn decoupled_smoke_case() -> Result<CaseSpec, BenchError> {
    let diffusivity = DiffusivityModel::constant(Tensor2::identity())?;
    Ok(CaseSpec {
        name: "decoupled_smoke".to_string(),
        geometry: Geometry::StructuredRect {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
            nx: 9,
            ny: 9,
            kind: ElementKind::Quad4,
        },
        lame: LameModel {
            lambda0: 2.0,
            mu0: 1.0,
            lambda1: 0.0,
            mu1: 0.0,
            c_ref: 1.0,
        },
        diffusivity,
        source: 0.0,
        body_force: [0.0, 0.0],
        eps_tol_c: 1.0e-10,
        pattern: BcPattern::DecoupledSmoke,
    })
}

/// Every named case, fully specified.
pub fn case_catalog() -> Vec<CaseSpec> {
    let mut cases = Vec::new();
    for phi_s in [5.0, 10.0, 20.0] {
        cases.push(cantilever_case(phi_s).expect("valid catalog parameters"));
    }
    for eta_s in [1.0, 1.0e3, 2.0e4] {
        cases.push(simply_supported_case(eta_s).expect("valid catalog parameters"));
    }
    for phi_t in [1.0, 5.0, 7.0] {
        cases.push(fixed_beam_case(phi_t).expect("valid catalog parameters"));
    }
    cases.push(fixed_beam_frobenius_case().expect("valid catalog parameters"));
    for row in 0..PLATE_HOLE_ROWS.len() {
        cases.push(plate_with_hole_case(row).expect("valid catalog parameters"));
    }
    for row in 0..BEAM_HOLES_ROWS.len() {
        cases.push(beam_three_holes_case(row).expect("valid catalog parameters"));
    }
    cases.push(decoupled_smoke_case().expect("valid catalog parameters"));
    cases
}

pub fn lookup_case(name: &str) -> Result<CaseSpec, BenchError> {
    case_catalog()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| BenchError::UnknownCase(name.to_string()))
}

/// Concentration-weighted centroid `integral(c x) / integral(c)` computed by
/// quadrature; used to quantify how far a concentration profile drifts off
/// the beam midline.
pub fn concentration_centroid(mesh: &Mesh, c: &[f64]) -> [f64; 2] {
    let nn = mesh.kind().nodes_per_element();
    let rule = QuadratureRule::for_kind(mesh.kind());
    let mut mass = 0.0;
    let mut moment = [0.0; 2];
    for e in 0..mesh.num_elements() {
        let conn = mesh.element(e);
        for qp in element_quad_points(mesh, e, &rule) {
            let mut ch = 0.0;
            for a in 0..nn {
                ch += qp.n[a] * c[conn[a]];
            }
            mass += qp.w * ch;
            moment[0] += qp.w * ch * qp.xy[0];
            moment[1] += qp.w * ch * qp.xy[1];
        }
    }
    [moment[0] / mass, moment[1] / mass]
}

//! Acceptance gate: one test per release criterion, each printing a
//! single PASS/FAIL line (visible with `cargo test -- --nocapture`, and
//! always on failure) before asserting.

use std::process::Command;
use std::time::Instant;

use defdif::assembly::{assemble_diffusion, assemble_elasticity};
use defdif::bench::{
    beam_three_holes_case, cantilever_case, case_catalog, concentration_centroid,
    convergence_study, decoupled_smoke_case, fixed_beam_case, fixed_beam_frobenius_case,
    plate_with_hole_case, simply_supported_case, CaseSpec, Geometry,
};
use defdif::coupling::RunReport;
use defdif::materials::{DiffusivityModel, LameModel, Tensor2};
use defdif::mesh::{parse_mesh, BoundaryCondition, ElementKind, Mesh, ScalarValue, VectorValue};
use defdif::solvers::{solve_nonneg_qp, solve_spd, SymSparseMatrix};
use defdif::Formulation;
use defdif_cli::fixtures::fixture_text;

fn verdict(n: usize, label: &str, ok: bool, detail: &str) -> bool {
    println!(
        "criterion {n:02} ({label}): {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn run_case(spec: &CaseSpec, formulation: Formulation) -> (Mesh, RunReport) {
    let text = match spec.geometry {
        Geometry::Fixture(name) => fixture_text(name),
        _ => None,
    };
    let mesh = spec.prepare_mesh(text).expect("case mesh");
    let report = spec.run(&mesh, formulation).expect("case run");
    (mesh, report)
}

// ---------------------------------------------------------------------
// 1. QP active-set solver vs exhaustive enumeration
// ---------------------------------------------------------------------

struct XorShift(u64);

impl XorShift {
    fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

/// Dense symmetric solve by Gaussian elimination with partial pivoting;
/// the systems are tiny (n <= 12) principal submatrices of SPD matrices.
fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a[i].clone();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = m[row][n];
        for k in row + 1..n {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x
}

/// Global minimizer of `1/2 x'Kx - f'x, x >= 0` by trying every subset of
/// variables pinned at zero and keeping the feasible candidate with the
/// lowest objective.
fn qp_by_enumeration(k: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << n) {
        let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        let mut x = vec![0.0; n];
        if !free.is_empty() {
            let sub: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| free.iter().map(|&j| k[i][j]).collect())
                .collect();
            let rhs: Vec<f64> = free.iter().map(|&i| f[i]).collect();
            let xf = dense_solve(&sub, &rhs);
            if xf.iter().any(|&v| v < -1e-12) {
                continue;
            }
            for (slot, &i) in free.iter().enumerate() {
                x[i] = xf[slot].max(0.0);
            }
        }
        let mut obj = 0.0;
        for i in 0..n {
            obj -= f[i] * x[i];
            for j in 0..n {
                obj += 0.5 * x[i] * k[i][j] * x[j];
            }
        }
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    }
    best.expect("x = 0 is always feasible").1
}

#[test]
fn criterion_01_qp_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = XorShift(0x9e3779b97f4a7c15);
    let mut worst_gap = 0.0f64;
    let mut worst_kkt = 0.0f64;
    for trial in 0..200 {
        let n = 2 + (rng.next_u64() % 11) as usize; // 2..=12
        let m: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.unit()).collect()).collect();
        let mut dense = vec![vec![0.0; n]; n];
        let mut k = SymSparseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut v = if i == j { 0.5 } else { 0.0 };
                for r in 0..n {
                    v += m[r][i] * m[r][j];
                }
                dense[i][j] = v;
                if j >= i {
                    k.add(i, j, v);
                }
            }
        }
        let f: Vec<f64> = (0..n).map(|_| rng.unit()).collect();
        let res = solve_nonneg_qp(&k, &f).expect("QP solve");
        let oracle = qp_by_enumeration(&dense, &f);
        for i in 0..n {
            worst_gap = worst_gap.max((res.c[i] - oracle[i]).abs());
        }
        let scale = f.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
        worst_kkt = worst_kkt.max(res.kkt_residual / scale);
        assert!(
            worst_gap <= 1e-9,
            "trial {trial}: enumeration disagrees by {worst_gap:.3e}"
        );
    }
    let secs = started.elapsed().as_secs_f64();
    let ok = worst_gap <= 1e-9 && worst_kkt <= 1e-10 && secs < 10.0;
    assert!(verdict(
        1,
        "qp oracle equivalence",
        ok,
        &format!("worst gap {worst_gap:.2e}, worst scaled KKT {worst_kkt:.2e}, {secs:.2}s")
    ));
}

// ---------------------------------------------------------------------
// 2. Patch tests
// ---------------------------------------------------------------------

/// Irregular four-quad patch with an off-center interior node.
const QUAD_PATCH: &str = "mesh 2d quad
nodes 9
0 0
0.5 0
1 0
0 0.5
0.55 0.47
1 0.5
0 1
0.5 1
1 1
elements 4
0 1 4 3
1 2 5 4
3 4 7 6
4 5 8 7
nodeset boundary 8
0 1 2 3 5 6 7 8
";

const TRI_PATCH: &str = "mesh 2d tri
nodes 9
0 0
0.5 0
1 0
0 0.5
0.55 0.47
1 0.5
0 1
0.5 1
1 1
elements 8
0 1 4
0 4 3
1 2 5
1 5 4
3 4 7
3 7 6
4 5 8
4 8 7
nodeset boundary 8
0 1 2 3 5 6 7 8
";

fn patch_errors(mesh: &Mesh) -> (f64, f64) {
    // Diffusion patch: linear c with anisotropic constant D is an exact
    // finite-element solution, so the interior node must be reproduced.
    let c_exact = |x: f64, y: f64| 0.7 + 0.3 * x - 0.2 * y;
    let model = DiffusivityModel::constant(Tensor2::new(2.0, 0.5, 1.5)).unwrap();
    let bcs = [BoundaryCondition::dirichlet_concentration(
        "boundary",
        ScalarValue::Fn(Box::new(c_exact)),
    )];
    let sys = assemble_diffusion(mesh, &model, None, &ScalarValue::Const(0.0), &bcs).unwrap();
    let c = sys.dof_map.expand(&solve_spd(&sys.k, &sys.f).unwrap());
    let mut err_c = 0.0f64;
    for (i, &[x, y]) in mesh.nodes().iter().enumerate() {
        err_c = err_c.max((c[i] - c_exact(x, y)).abs() / c_exact(x, y).abs());
    }

    // Elasticity patch: linear displacement, constant moduli, no load.
    let u_exact = |x: f64, y: f64| [0.1 + 0.2 * x + 0.3 * y, -0.05 + 0.15 * x - 0.25 * y];
    let lame = LameModel::new(2.0, 1.0, 0.0, 0.0, 1.0);
    let bcs = [BoundaryCondition::dirichlet_displacement(
        "boundary",
        VectorValue::Fn(Box::new(u_exact)),
    )];
    let conc = vec![0.0; mesh.num_nodes()];
    let sys = assemble_elasticity(mesh, &lame, &conc, 1.0, &|_, _| [0.0, 0.0], &bcs).unwrap();
    let u = sys.dof_map.expand(&solve_spd(&sys.k, &sys.f).unwrap());
    let mut err_u = 0.0f64;
    for (i, &[x, y]) in mesh.nodes().iter().enumerate() {
        let ex = u_exact(x, y);
        for comp in 0..2 {
            err_u = err_u.max((u[2 * i + comp] - ex[comp]).abs() / ex[comp].abs());
        }
    }
    (err_c, err_u)
}

#[test]
fn criterion_02_patch_tests() {
    let mut worst = 0.0f64;
    for text in [TRI_PATCH, QUAD_PATCH] {
        let mesh = parse_mesh(text).unwrap();
        let (ec, eu) = patch_errors(&mesh);
        worst = worst.max(ec).max(eu);
    }
    let ok = worst <= 1e-10;
    assert!(verdict(
        2,
        "patch tests",
        ok,
        &format!("worst relative nodal error {worst:.2e} (limit 1e-10)")
    ));
}

// ---------------------------------------------------------------------
// 3. h-convergence of the manufactured solution
// ---------------------------------------------------------------------

#[test]
fn criterion_03_h_convergence() {
    let started = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for kind in [ElementKind::Tri3, ElementKind::Quad4] {
        let table = convergence_study(kind, &[5, 9, 17, 33]).expect("study");
        // Observed (asymptotic) rate: the finest consecutive pair.
        let r = table.rates.last().unwrap();
        for (name, rate, lo, hi) in [
            ("L2 u", r.l2_u, 1.8, 2.2),
            ("L2 c", r.l2_c, 1.8, 2.2),
            ("H1 u", r.h1_u, 0.8, 1.2),
            ("H1 c", r.h1_c, 0.8, 1.2),
        ] {
            ok &= (lo..=hi).contains(&rate);
            detail.push_str(&format!("{kind:?} {name} {rate:.2}; "));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    detail.push_str(&format!("{secs:.1}s"));
    assert!(verdict(3, "h-convergence rates", ok, &detail));
}

// ---------------------------------------------------------------------
// 4. Non-negativity guarantee over the whole catalog
// ---------------------------------------------------------------------

#[test]
fn criterion_04_nonneg_guarantee() {
    let started = Instant::now();
    let mut ok = true;
    let mut worst_min = 0.0f64;
    for spec in case_catalog() {
        let (_, report) = run_case(&spec, Formulation::NonNegative);
        assert!(report.converged, "{} did not converge", spec.name);
        worst_min = worst_min.min(report.min_c);
        ok &= report.min_c >= -1e-12 && report.degradation_index == 0.0;
    }
    let secs = started.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    assert!(verdict(
        4,
        "non-negativity guarantee",
        ok,
        &format!("worst min c {worst_min:.2e} over the catalog, {secs:.1}s")
    ));
}

// ---------------------------------------------------------------------
// 5-6. DMP violation on the hole fixtures
// ---------------------------------------------------------------------

fn galerkin_hole_rows(build: fn(usize) -> Result<CaseSpec, defdif::bench::BenchError>) -> Vec<RunReport> {
    (0..5)
        .map(|row| run_case(&build(row).unwrap(), Formulation::Galerkin).1)
        .collect()
}

#[test]
fn criterion_05_plate_dmp_violation() {
    let rows = galerkin_hole_rows(plate_with_hole_case);
    let mut ok = true;
    for r in &rows[2..] {
        ok &= r.min_c <= -1e-3 && (15.0..=45.0).contains(&r.degradation_index);
    }
    ok &= (-0.08..=-0.02).contains(&rows[4].min_c);
    // Monotone worsening with anisotropy across the violating rows.
    ok &= rows[2].min_c >= rows[3].min_c && rows[3].min_c >= rows[4].min_c;
    ok &= rows[2].degradation_index <= rows[3].degradation_index
        && rows[3].degradation_index <= rows[4].degradation_index;
    // Mild rows stay clean under both formulations.
    for row in 0..2 {
        ok &= rows[row].min_c >= -1e-12;
        let (_, nn) = run_case(&plate_with_hole_case(row).unwrap(), Formulation::NonNegative);
        ok &= nn.min_c >= -1e-12;
    }
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("({:.2e}, {:.1}%)", r.min_c, r.degradation_index))
        .collect();
    assert!(verdict(
        5,
        "plate DMP violation",
        ok,
        &format!("galerkin (min c, degraded) per row: {}", detail.join(" "))
    ));
}

#[test]
fn criterion_06_beam_vs_plate_violation() {
    let (_, plate) = run_case(&plate_with_hole_case(4).unwrap(), Formulation::Galerkin);
    let (_, beam) = run_case(&beam_three_holes_case(4).unwrap(), Formulation::Galerkin);
    let ratio = beam.min_c / plate.min_c;
    let ok = beam.min_c <= 1.2 * plate.min_c && (1.0..=1.8).contains(&ratio);
    assert!(verdict(
        6,
        "beam vs plate violation",
        ok,
        &format!(
            "beam min c {:.3e}, plate min c {:.3e}, ratio {ratio:.2}",
            beam.min_c, plate.min_c
        )
    ));
}

// ---------------------------------------------------------------------
// 7-8. Beam sweep tables
// ---------------------------------------------------------------------

#[test]
fn criterion_07_cantilever_sweep() {
    let targets = [(5.0, 4.257e-1, 14), (10.0, 2.187e-1, 9), (20.0, 1.107e-1, 7)];
    let mut ok = true;
    let mut detail = String::new();
    let mut prev = f64::INFINITY;
    for (phi_s, max_c, iters) in targets {
        let (_, r) = run_case(&cantilever_case(phi_s).unwrap(), Formulation::NonNegative);
        ok &= (r.max_c - max_c).abs() <= 0.10 * max_c;
        ok &= (r.iterations as i64 - iters).abs() <= 4;
        ok &= r.max_c < prev; // strict monotone decrease
        prev = r.max_c;
        detail.push_str(&format!("phi_S={phi_s}: {:.4e} in {} iters; ", r.max_c, r.iterations));
    }
    assert!(verdict(7, "cantilever sweep", ok, detail.trim_end()));
}

#[test]
fn criterion_08_ss_and_fixed_beam_sweeps() {
    let mut ok = true;
    let mut detail = String::new();

    let ss_targets = [(1.0, 7.205e-1), (1.0e3, 7.309e-1), (2.0e4, 9.365e-1)];
    let mut prev = 0.0;
    for (eta_s, max_c) in ss_targets {
        let (_, r) = run_case(&simply_supported_case(eta_s).unwrap(), Formulation::NonNegative);
        ok &= (r.max_c - max_c).abs() <= 0.15 * max_c;
        ok &= r.max_c >= prev; // non-decreasing in eta_S
        prev = r.max_c;
        detail.push_str(&format!("ss eta_S={eta_s}: {:.4e}; ", r.max_c));
    }

    let fixed_targets = [(1.0, 1.250e-1), (5.0, 1.348e-1), (7.0, 1.575e-1)];
    prev = 0.0;
    for (phi_t, max_c) in fixed_targets {
        let (_, r) = run_case(&fixed_beam_case(phi_t).unwrap(), Formulation::NonNegative);
        ok &= (r.max_c - max_c).abs() <= 0.15 * max_c;
        ok &= r.max_c >= prev; // non-decreasing in Phi_T
        prev = r.max_c;
        if phi_t == 1.0 {
            ok &= r.iterations <= 4;
        }
        detail.push_str(&format!(
            "fixed phi_T={phi_t}: {:.4e} in {} iters; ",
            r.max_c, r.iterations
        ));
    }
    assert!(verdict(8, "ss/fixed beam sweeps", ok, detail.trim_end()));
}

// ---------------------------------------------------------------------
// 9. Curving vs Frobenius concentration profiles
// ---------------------------------------------------------------------

#[test]
fn criterion_09_curving_vs_frobenius() {
    let (mesh, inv) = run_case(&fixed_beam_case(7.0).unwrap(), Formulation::NonNegative);
    let y_inv = concentration_centroid(&mesh, &inv.c)[1];
    let (mesh, fro) = run_case(&fixed_beam_frobenius_case().unwrap(), Formulation::NonNegative);
    let y_fro = concentration_centroid(&mesh, &fro.c)[1];
    let element_height = 0.1 / 20.0;
    let inv_ok = y_inv > 0.05;
    let fro_ok = (y_fro - 0.05).abs() <= element_height;
    assert!(verdict(
        9,
        "curving vs frobenius",
        inv_ok && fro_ok,
        &format!("invariant centroid y {y_inv:.5} (want > 0.05), frobenius {y_fro:.5} (want 0.05 +- {element_height})")
    ));
}

// ---------------------------------------------------------------------
// 10. Staggered-driver properties
// ---------------------------------------------------------------------

#[test]
fn criterion_10_staggered_properties() {
    let mut ok = true;
    let mut detail = String::new();

    let (_, smoke) = run_case(&decoupled_smoke_case().unwrap(), Formulation::NonNegative);
    ok &= smoke.iterations == 2;
    detail.push_str(&format!("decoupled iterations {}; ", smoke.iterations));

    // Monotone ||delta c|| histories over all beam cases.
    let mut beams: Vec<CaseSpec> = Vec::new();
    for phi_s in [5.0, 10.0, 20.0] {
        beams.push(cantilever_case(phi_s).unwrap());
    }
    for eta_s in [1.0, 1.0e3, 2.0e4] {
        beams.push(simply_supported_case(eta_s).unwrap());
    }
    for phi_t in [1.0, 5.0, 7.0] {
        beams.push(fixed_beam_case(phi_t).unwrap());
    }
    beams.push(fixed_beam_frobenius_case().unwrap());
    let mut monotone = true;
    for spec in &beams {
        let (_, r) = run_case(spec, Formulation::NonNegative);
        monotone &= r.delta_c_history.windows(2).all(|w| w[1] <= w[0]);
    }
    ok &= monotone;
    detail.push_str(&format!("beam histories monotone: {monotone}; "));

    // Byte-identical artifacts in deterministic mode.
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_defdif"))
            .args([
                "--case",
                "decoupled_smoke",
                "--deterministic",
                "--format",
                "vtk,csv,report",
                "--out",
                dir.path().to_str().unwrap(),
            ])
            .status()
            .expect("binary runs");
        ok &= status.code() == Some(0);
    }
    let mut identical = true;
    for ext in ["vtk", "csv", "txt"] {
        let name = format!("decoupled_smoke_nonneg.{ext}");
        identical &= std::fs::read(dirs[0].path().join(&name)).unwrap()
            == std::fs::read(dirs[1].path().join(&name)).unwrap();
    }
    ok &= identical;
    detail.push_str(&format!("deterministic outputs identical: {identical}"));
    assert!(verdict(10, "staggered properties", ok, &detail));
}

//! Artifact writers: VTK legacy ASCII fields, RFC-4180-style CSV rows and
//! flat key-value reports.
//!
//! All float formatting goes through Rust's shortest round-trip `Display`,
//! so identical inputs always produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use defdif::bench::RateTable;
use defdif::coupling::RunReport;
use defdif::mesh::{ElementKind, Mesh};
use defdif::Formulation;

pub fn formulation_name(f: Formulation) -> &'static str {
    match f {
        Formulation::Galerkin => "galerkin",
        Formulation::NonNegative => "nonneg",
    }
}

fn write_file(path: &Path, text: &str) -> io::Result<()> {
    fs::write(path, text)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn join_floats(vals: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v}");
    }
    s
}

/// Legacy VTK (version 3.0) unstructured grid carrying the converged
/// fields: point scalars `concentration` and `relative_modulus`, point
/// vectors `displacement`.
pub fn write_vtk(mesh: &Mesh, report: &RunReport, title: &str, path: &Path) -> io::Result<()> {
    let nn = mesh.kind().nodes_per_element();
    let cell_type = match mesh.kind() {
        ElementKind::Tri3 => 5,
        ElementKind::Quad4 => 9,
    };
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_nodes());
    for &[x, y] in mesh.nodes() {
        let _ = writeln!(s, "{x} {y} 0");
    }
    let m = mesh.num_elements();
    let _ = writeln!(s, "CELLS {m} {}", m * (nn + 1));
    for e in 0..m {
        let _ = write!(s, "{nn}");
        for &n in mesh.element(e) {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        let _ = writeln!(s, "{cell_type}");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.num_nodes());
    let _ = writeln!(s, "SCALARS concentration double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for &c in &report.c {
        let _ = writeln!(s, "{c}");
    }
    let _ = writeln!(s, "SCALARS relative_modulus double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for &r in &report.relative_modulus {
        let _ = writeln!(s, "{r}");
    }
    let _ = writeln!(s, "VECTORS displacement double");
    for i in 0..mesh.num_nodes() {
        let _ = writeln!(s, "{} {} 0", report.u[2 * i], report.u[2 * i + 1]);
    }
    write_file(path, &s)
}

/// One header row plus one data row of run summary statistics, CRLF line
/// endings per RFC 4180.
pub fn write_csv(
    case: &str,
    formulation: Formulation,
    report: &RunReport,
    path: &Path,
) -> io::Result<()> {
    let mut s = String::new();
    let _ = write!(
        s,
        "case,formulation,converged,iterations,min_c,max_c,degradation_index\r\n"
    );
    let _ = write!(
        s,
        "{case},{},{},{},{},{},{}\r\n",
        formulation_name(formulation),
        report.converged,
        report.iterations,
        report.min_c,
        report.max_c,
        report.degradation_index
    );
    write_file(path, &s)
}

/// Convergence-study output: one row per mesh with the measured error
/// norms, followed by the observed rates between consecutive meshes.
pub fn write_rate_csv(table: &RateTable, path: &Path) -> io::Result<()> {
    let mut s = String::new();
    let _ = write!(
        s,
        "nodes_per_side,h,l2_u,h1_u,l2_c,h1_c,rate_l2_u,rate_h1_u,rate_l2_c,rate_h1_c\r\n"
    );
    for (i, row) in table.rows.iter().enumerate() {
        let _ = write!(
            s,
            "{},{},{},{},{},{}",
            row.nodes_per_side, row.h, row.norms.l2_u, row.norms.h1_u, row.norms.l2_c, row.norms.h1_c
        );
        if i == 0 {
            let _ = write!(s, ",,,,\r\n");
        } else {
            let r = &table.rates[i - 1];
            let _ = write!(s, ",{},{},{},{}\r\n", r.l2_u, r.h1_u, r.l2_c, r.h1_c);
        }
    }
    write_file(path, &s)
}

/// Key-value dump of every `RunReport` field. `runtime_seconds` is the
/// only wall-clock-dependent line; deterministic mode omits it.
pub fn write_report(
    case: &str,
    formulation: Formulation,
    report: &RunReport,
    runtime_seconds: Option<f64>,
    path: &Path,
) -> io::Result<()> {
    let qp: Vec<String> = report.qp_iterations.iter().map(|n| n.to_string()).collect();
    let mut s = String::new();
    let _ = writeln!(s, "case = {case}");
    let _ = writeln!(s, "formulation = {}", formulation_name(formulation));
    let _ = writeln!(s, "converged = {}", report.converged);
    let _ = writeln!(s, "iterations = {}", report.iterations);
    let _ = writeln!(s, "delta_c_history = {}", join_floats(&report.delta_c_history));
    let _ = writeln!(s, "qp_iterations = {}", qp.join(" "));
    let _ = writeln!(s, "min_c = {}", report.min_c);
    let _ = writeln!(s, "max_c = {}", report.max_c);
    let _ = writeln!(s, "degradation_index = {}", report.degradation_index);
    let _ = writeln!(s, "u = {}", join_floats(&report.u));
    let _ = writeln!(s, "c = {}", join_floats(&report.c));
    let _ = writeln!(s, "relative_modulus = {}", join_floats(&report.relative_modulus));
    if let Some(t) = runtime_seconds {
        let _ = writeln!(s, "runtime_seconds = {t}");
    }
    write_file(path, &s)
}

//! `defdif` — run coupled deformation-diffusion benchmark cases and write
//! field/report artifacts.
//!
//! Exit codes: 0 success, 1 input error, 2 staggered run failed to
//! converge (or died mid-solve).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use defdif::bench::convergence_study;
use defdif::mesh::ElementKind;
use defdif::Formulation;
use defdif_cli::casefile::load_case_file;
use defdif_cli::runner::{
    apply_overrides, check_out_dir, resolve_cases, run_jobs, summary_line, Format, Job, RunOptions,
};
use defdif_cli::{output, runner};

#[derive(Parser, Debug)]
#[command(
    name = "defdif",
    about = "Coupled deformation-diffusion benchmark runner",
    disable_help_flag = false
)]
struct Args {
    /// Catalog case or sweep family (e.g. `plate_with_hole`,
    /// `cantilever`, `fixed_beam_phi_t_7`, `convergence_q4`).
    #[arg(long)]
    case: Option<String>,

    /// Path to a key-value case file instead of a catalog case.
    #[arg(long, value_name = "FILE", conflicts_with = "case")]
    case_file: Option<PathBuf>,

    /// 1-based row of the sweep family's parameter table.
    #[arg(long)]
    row: Option<usize>,

    /// Diffusion formulation.
    #[arg(long, value_parser = ["galerkin", "nonneg"], default_value = "nonneg")]
    formulation: String,

    /// Override the staggered stopping tolerance on ||c_i - c_{i-1}||_2.
    #[arg(long)]
    tol: Option<f64>,

    /// Override nodes per side of structured-rectangle cases.
    #[arg(long)]
    resolution: Option<usize>,

    /// Output directory (must exist).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Comma-separated artifact list: vtk,csv,report.
    #[arg(long, default_value = "report")]
    format: String,

    /// Omit wall-clock data so repeated runs are byte-identical.
    #[arg(long)]
    deterministic: bool,

    /// Worker threads across sweep rows.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn parse_formats(list: &str) -> Result<Vec<Format>, String> {
    let mut formats = Vec::new();
    for part in list.split(',') {
        let f = match part.trim() {
            "vtk" => Format::Vtk,
            "csv" => Format::Csv,
            "report" => Format::Report,
            other => return Err(format!("unknown format `{other}` (want vtk, csv or report)")),
        };
        if !formats.contains(&f) {
            formats.push(f);
        }
    }
    Ok(formats)
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("defdif: error: {msg}");
    ExitCode::from(1)
}

/// `--case convergence_q4|convergence_tri3`: run the manufactured-solution
/// mesh hierarchy and write the rate table instead of field artifacts.
fn run_convergence(name: &str, kind: ElementKind, out: &PathBuf) -> ExitCode {
    match convergence_study(kind, &[5, 9, 17, 33]) {
        Ok(table) => {
            let path = out.join(format!("{name}_rates.csv"));
            if let Err(e) = output::write_rate_csv(&table, &path) {
                return input_error(e);
            }
            for (i, r) in table.rates.iter().enumerate() {
                println!(
                    "{name} rates {} -> {} nodes/side: L2(u) {:.3}, H1(u) {:.3}, L2(c) {:.3}, H1(c) {:.3}",
                    table.rows[i].nodes_per_side,
                    table.rows[i + 1].nodes_per_side,
                    r.l2_u,
                    r.h1_u,
                    r.l2_c,
                    r.h1_c
                );
            }
            println!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("defdif: convergence study failed: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            // clap's own exit code for bad flags is 2; the contract here
            // reserves 2 for non-convergence, so remap usage errors to 1.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS // --help / --version
            };
        }
    };

    let formulation = match args.formulation.as_str() {
        "galerkin" => Formulation::Galerkin,
        _ => Formulation::NonNegative,
    };
    let formats = match parse_formats(&args.format) {
        Ok(f) => f,
        Err(e) => return input_error(e),
    };
    let opts = RunOptions {
        formulation,
        tol: args.tol,
        resolution: args.resolution,
        out_dir: args.out.clone(),
        formats,
        deterministic: args.deterministic,
        jobs: args.jobs,
    };
    if let Err(e) = check_out_dir(&opts.out_dir) {
        return input_error(e);
    }

    let jobs: Vec<Job> = if let Some(path) = &args.case_file {
        if args.row.is_some() {
            return input_error("--row does not apply to --case-file");
        }
        match load_case_file(path) {
            Ok(cf) => {
                let mut spec = cf.spec;
                apply_overrides(&mut spec, &opts);
                vec![Job {
                    spec,
                    mesh_text: cf.mesh_text,
                }]
            }
            Err(e) => return input_error(format!("{}: {e}", path.display())),
        }
    } else if let Some(name) = &args.case {
        match name.as_str() {
            "convergence_q4" => return run_convergence(name, ElementKind::Quad4, &args.out),
            "convergence_tri3" => return run_convergence(name, ElementKind::Tri3, &args.out),
            _ => {}
        }
        match resolve_cases(name, args.row) {
            Ok(specs) => specs
                .into_iter()
                .map(|mut spec| {
                    apply_overrides(&mut spec, &opts);
                    Job {
                        spec,
                        mesh_text: None,
                    }
                })
                .collect(),
            Err(e) => return input_error(e),
        }
    } else {
        return input_error("one of --case or --case-file is required");
    };

    match run_jobs(&jobs, &opts) {
        Ok(outcomes) => {
            let mut all_converged = true;
            for o in &outcomes {
                println!("{}", summary_line(o, formulation));
                all_converged &= o.report.converged;
            }
            if all_converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e @ runner::RunError::Bench(_)) => {
            eprintln!("defdif: run failed: {e}");
            ExitCode::from(2)
        }
        Err(e) => input_error(e),
    }
}

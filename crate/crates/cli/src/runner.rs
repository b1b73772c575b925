//! Case resolution and the sweep runner.
//!
//! `--case` accepts either a fully qualified catalog name
//! (e.g. `plate_with_hole_d1_100`) or a family name, optionally narrowed
//! by `--row` (1-based index into the corresponding parameter table). A
//! family without `--row` runs the whole sweep; rows are independent, so
//! `--jobs N` fans them out over worker threads.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use defdif::bench::{
    beam_three_holes_case, cantilever_case, decoupled_smoke_case, fixed_beam_case,
    fixed_beam_frobenius_case, lookup_case, plate_with_hole_case, simply_supported_case,
    BenchError, CaseSpec, Geometry, BEAM_HOLES_ROWS, PLATE_HOLE_ROWS,
};
use defdif::coupling::RunReport;
use defdif::Formulation;

use crate::fixtures::fixture_text;
use crate::output;

#[derive(Debug)]
pub enum RunError {
    UnknownCase(String),
    BadRow { family: String, row: usize, rows: usize },
    RowWithoutFamily(String),
    Bench(BenchError),
    Io(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnknownCase(n) => write!(f, "unknown case `{n}`"),
            Self::BadRow { family, row, rows } => {
                write!(f, "case `{family}` has rows 1..={rows}, got {row}")
            }
            Self::RowWithoutFamily(n) => {
                write!(f, "`{n}` is a single case; --row applies to sweep families")
            }
            Self::Bench(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<BenchError> for RunError {
    fn from(e: BenchError) -> Self {
        Self::Bench(e)
    }
}

/// One runnable unit: a spec plus externally supplied mesh text (case
/// files pointing at their own mesh).
pub struct Job {
    pub spec: CaseSpec,
    pub mesh_text: Option<String>,
}

fn sweep<T: Copy>(
    family: &str,
    params: &[T],
    row: Option<usize>,
    build: impl Fn(T) -> Result<CaseSpec, BenchError>,
) -> Result<Vec<CaseSpec>, RunError> {
    match row {
        None => params.iter().map(|&p| Ok(build(p)?)).collect(),
        Some(r) if (1..=params.len()).contains(&r) => Ok(vec![build(params[r - 1])?]),
        Some(r) => Err(RunError::BadRow {
            family: family.to_string(),
            row: r,
            rows: params.len(),
        }),
    }
}

/// Expand a `--case` name (family or fully qualified) into specs.
pub fn resolve_cases(name: &str, row: Option<usize>) -> Result<Vec<CaseSpec>, RunError> {
    let rows = |n: usize| (1..=n).collect::<Vec<_>>();
    match name {
        "cantilever" | "cantilever_edge_shear" => {
            sweep(name, &[5.0, 10.0, 20.0], row, cantilever_case)
        }
        "simply_supported" | "simply_supported_beam" => {
            sweep(name, &[1.0, 1.0e3, 2.0e4], row, simply_supported_case)
        }
        "fixed_beam" => sweep(name, &[1.0, 5.0, 7.0], row, fixed_beam_case),
        "plate_with_hole" => sweep(name, &rows(PLATE_HOLE_ROWS.len()), row, |r| {
            plate_with_hole_case(r - 1)
        }),
        "beam_three_holes" => sweep(name, &rows(BEAM_HOLES_ROWS.len()), row, |r| {
            beam_three_holes_case(r - 1)
        }),
        "fixed_beam_frobenius" if row.is_none() => Ok(vec![fixed_beam_frobenius_case()?]),
        "decoupled_smoke" if row.is_none() => Ok(vec![decoupled_smoke_case()?]),
        _ => {
            let spec = lookup_case(name).map_err(|_| RunError::UnknownCase(name.to_string()))?;
            if row.is_some() {
                return Err(RunError::RowWithoutFamily(name.to_string()));
            }
            Ok(vec![spec])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Vtk,
    Csv,
    Report,
}

pub struct RunOptions {
    pub formulation: Formulation,
    pub tol: Option<f64>,
    pub resolution: Option<usize>,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub deterministic: bool,
    pub jobs: usize,
}

/// Apply `--tol` / `--resolution` overrides to a resolved spec.
pub fn apply_overrides(spec: &mut CaseSpec, opts: &RunOptions) {
    if let Some(tol) = opts.tol {
        spec.eps_tol_c = tol;
    }
    if let Some(r) = opts.resolution {
        if let Geometry::StructuredRect {
            ref mut nx,
            ref mut ny,
            ..
        } = spec.geometry
        {
            *nx = r;
            *ny = r;
        }
    }
}

pub struct JobOutcome {
    pub name: String,
    pub report: RunReport,
}

fn run_one(job: &Job, opts: &RunOptions) -> Result<JobOutcome, RunError> {
    let text = match (&job.mesh_text, &job.spec.geometry) {
        (Some(t), _) => Some(t.as_str()),
        (None, Geometry::Fixture(name)) => fixture_text(name),
        (None, _) => None,
    };
    let mesh = job.spec.prepare_mesh(text)?;
    let started = Instant::now();
    let report = job.spec.run(&mesh, opts.formulation)?;
    let runtime = (!opts.deterministic).then(|| started.elapsed().as_secs_f64());

    let stem = format!("{}_{}", job.spec.name, output::formulation_name(opts.formulation));
    let file = |ext: &str| opts.out_dir.join(format!("{stem}.{ext}"));
    let io_err = |e: std::io::Error| RunError::Io(e.to_string());
    for &f in &opts.formats {
        match f {
            Format::Vtk => {
                output::write_vtk(&mesh, &report, &stem, &file("vtk")).map_err(io_err)?
            }
            Format::Csv => output::write_csv(&job.spec.name, opts.formulation, &report, &file("csv"))
                .map_err(io_err)?,
            Format::Report => output::write_report(
                &job.spec.name,
                opts.formulation,
                &report,
                runtime,
                &file("txt"),
            )
            .map_err(io_err)?,
        }
    }
    Ok(JobOutcome {
        name: job.spec.name.clone(),
        report,
    })
}

/// Run every job, writing artifacts into `opts.out_dir`. Jobs are
/// distributed over `opts.jobs` worker threads; outcomes come back in
/// job order.
pub fn run_jobs(jobs: &[Job], opts: &RunOptions) -> Result<Vec<JobOutcome>, RunError> {
    let workers = opts.jobs.max(1).min(jobs.len().max(1));
    if workers == 1 {
        return jobs.iter().map(|j| run_one(j, opts)).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<JobOutcome, RunError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let out = run_one(&jobs[i], opts);
                results.lock().unwrap()[i] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job index was claimed"))
        .collect()
}

/// Human-oriented one-line summary printed per finished job.
pub fn summary_line(outcome: &JobOutcome, formulation: Formulation) -> String {
    let r = &outcome.report;
    format!(
        "{} [{}]: {} in {} iterations, min_c = {:.6e}, max_c = {:.6e}, degraded {:.2}% of nodes",
        outcome.name,
        output::formulation_name(formulation),
        if r.converged { "converged" } else { "NOT CONVERGED" },
        r.iterations,
        r.min_c,
        r.max_c,
        r.degradation_index
    )
}

/// True when `path` exists and is a writable directory (spec: validated
/// before any solve starts).
pub fn check_out_dir(path: &Path) -> Result<(), RunError> {
    if !path.is_dir() {
        return Err(RunError::Io(format!(
            "output directory {} does not exist",
            path.display()
        )));
    }
    let probe = path.join(".defdif-write-probe");
    std::fs::write(&probe, b"").map_err(|e| {
        RunError::Io(format!("output directory {} not writable: {e}", path.display()))
    })?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

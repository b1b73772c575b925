//! Flat key-value case files.
//!
//! One `key = value` pair per line, `#` or `;` comments, no sections. The
//! keys mirror the fields of `defdif::bench::CaseSpec`; see the crate
//! README for the full key list. Example:
//!
//! ```text
//! name = my_beam
//! geometry = rect
//! x0 = 0    y is not inferred; every rect key is explicit
//! ...
//! diffusivity = phi_scaled
//! theta = 0.5235987755982988
//! d0_1 = 1
//! d0_2 = 1
//! phi_t = 2
//! phi_s = 5
//! eta_t = 100
//! eta_s = 1
//! bc = cantilever_shear
//! traction_x = 0
//! traction_y = 500
//! source = 10000
//! tol = 1e-8
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use defdif::bench::{BcPattern, CaseSpec, Geometry};
use defdif::materials::{rotated_tensor, DiffusivityModel, LameModel, MaterialError, Tensor2};
use defdif::mesh::ElementKind;

#[derive(Debug)]
pub enum CaseFileError {
    Io(String),
    Syntax { line: usize, detail: String },
    MissingKey(&'static str),
    BadValue { key: String, detail: String },
    Material(MaterialError),
}

impl fmt::Display for CaseFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "{e}"),
            Self::Syntax { line, detail } => write!(f, "line {line}: {detail}"),
            Self::MissingKey(k) => write!(f, "missing key `{k}`"),
            Self::BadValue { key, detail } => write!(f, "key `{key}`: {detail}"),
            Self::Material(e) => write!(f, "material: {e}"),
        }
    }
}

impl std::error::Error for CaseFileError {}

impl From<MaterialError> for CaseFileError {
    fn from(e: MaterialError) -> Self {
        Self::Material(e)
    }
}

/// A parsed case file: the spec plus the external mesh text, when the
/// geometry points at a mesh file instead of a built-in fixture.
#[derive(Debug)]
pub struct CaseFile {
    pub spec: CaseSpec,
    pub mesh_text: Option<String>,
}

struct Keys {
    map: BTreeMap<String, String>,
}

impl Keys {
    fn get(&self, key: &'static str) -> Result<&str, CaseFileError> {
        self.map
            .get(key)
            .map(String::as_str)
            .ok_or(CaseFileError::MissingKey(key))
    }

    fn f64(&self, key: &'static str) -> Result<f64, CaseFileError> {
        self.get(key)?
            .parse()
            .map_err(|e| CaseFileError::BadValue {
                key: key.to_string(),
                detail: format!("{e}"),
            })
    }

    fn f64_or(&self, key: &'static str, default: f64) -> Result<f64, CaseFileError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(_) => self.f64(key),
        }
    }

    fn usize(&self, key: &'static str) -> Result<usize, CaseFileError> {
        self.get(key)?
            .parse()
            .map_err(|e| CaseFileError::BadValue {
                key: key.to_string(),
                detail: format!("{e}"),
            })
    }

    fn tensor(&self, theta: f64, k1: &'static str, k2: &'static str) -> Result<Tensor2, CaseFileError> {
        Ok(rotated_tensor(theta, self.f64(k1)?, self.f64(k2)?)?)
    }
}

fn parse_keys(text: &str) -> Result<Keys, CaseFileError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(CaseFileError::Syntax {
            line: i + 1,
            detail: format!("expected `key = value`, got `{line}`"),
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(Keys { map })
}

fn parse_diffusivity(keys: &Keys) -> Result<DiffusivityModel, CaseFileError> {
    let theta = keys.f64_or("theta", 0.0)?;
    let d0 = keys.tensor(theta, "d0_1", "d0_2")?;
    let kind = keys.get("diffusivity")?;
    let model = match kind {
        "constant" => DiffusivityModel::constant(d0)?,
        "phi_scaled" => DiffusivityModel::phi_scaled(
            d0,
            keys.f64("phi_t")?,
            keys.f64("phi_s")?,
            keys.f64("eta_t")?,
            keys.f64("eta_s")?,
            keys.f64_or("e_ref", 1e-4)?,
        )?,
        "invariant_tension" => DiffusivityModel::invariant_tension(
            d0,
            keys.tensor(theta, "dt_1", "dt_2")?,
            keys.tensor(theta, "ds_1", "ds_2")?,
            keys.f64("eta_t")?,
            keys.f64("eta_s")?,
            keys.f64_or("e_ref", 1e-4)?,
        )?,
        "invariant_compression" => DiffusivityModel::invariant_compression(
            d0,
            keys.tensor(theta, "dc_1", "dc_2")?,
            keys.tensor(theta, "ds_1", "ds_2")?,
            keys.f64("eta_c")?,
            keys.f64("eta_s")?,
            keys.f64_or("e_ref", 1e-4)?,
        )?,
        "frobenius" => DiffusivityModel::frobenius_norm(
            d0,
            keys.tensor(theta, "dinf_1", "dinf_2")?,
            keys.f64("lambda")?,
        )?,
        other => {
            return Err(CaseFileError::BadValue {
                key: "diffusivity".to_string(),
                detail: format!("unknown model `{other}`"),
            })
        }
    };
    Ok(model)
}

fn parse_pattern(keys: &Keys) -> Result<BcPattern, CaseFileError> {
    Ok(match keys.get("bc")? {
        "cantilever_shear" => BcPattern::CantileverShear {
            traction: [keys.f64("traction_x")?, keys.f64("traction_y")?],
        },
        "simply_supported" => BcPattern::SimplySupportedBeam,
        "fixed_beam" => BcPattern::FixedBeam,
        "hole" => BcPattern::HoleDomain,
        "decoupled" => BcPattern::DecoupledSmoke,
        other => {
            return Err(CaseFileError::BadValue {
                key: "bc".to_string(),
                detail: format!("unknown pattern `{other}`"),
            })
        }
    })
}

/// Parse case-file text; `dir` anchors relative `mesh_file` paths.
pub fn parse_case_file(text: &str, dir: &Path) -> Result<CaseFile, CaseFileError> {
    let keys = parse_keys(text)?;
    let name = keys.get("name")?.to_string();

    let (geometry, mesh_text) = match keys.get("geometry")? {
        "rect" => {
            let kind = match keys.get("element")? {
                "tri3" => ElementKind::Tri3,
                "quad4" => ElementKind::Quad4,
                other => {
                    return Err(CaseFileError::BadValue {
                        key: "element".to_string(),
                        detail: format!("expected tri3 or quad4, got `{other}`"),
                    })
                }
            };
            let g = Geometry::StructuredRect {
                x0: keys.f64("x0")?,
                y0: keys.f64("y0")?,
                x1: keys.f64("x1")?,
                y1: keys.f64("y1")?,
                nx: keys.usize("nx")?,
                ny: keys.usize("ny")?,
                kind,
            };
            (g, None)
        }
        "fixture" => {
            let fixture = keys.get("fixture")?;
            let text =
                crate::fixtures::fixture_text(fixture).ok_or_else(|| CaseFileError::BadValue {
                    key: "fixture".to_string(),
                    detail: format!("no built-in fixture `{fixture}`"),
                })?;
            // The &'static name in Geometry is only used for error text; the
            // runner always supplies the mesh text alongside.
            (Geometry::Fixture("case-file"), Some(text.to_string()))
        }
        "mesh" => {
            let path = dir.join(keys.get("mesh_file")?);
            let text = fs::read_to_string(&path)
                .map_err(|e| CaseFileError::Io(format!("{}: {e}", path.display())))?;
            (Geometry::Fixture("case-file"), Some(text))
        }
        other => {
            return Err(CaseFileError::BadValue {
                key: "geometry".to_string(),
                detail: format!("expected rect, fixture or mesh, got `{other}`"),
            })
        }
    };

    // Moduli default to the values shared by all shipped physical cases.
    let lame = LameModel {
        lambda0: keys.f64_or("lambda0", 1.0e6)?,
        mu0: keys.f64_or("mu0", 1.0e6)?,
        lambda1: keys.f64_or("lambda1", -9.0e5)?,
        mu1: keys.f64_or("mu1", -9.0e5)?,
        c_ref: keys.f64_or("c_ref", 1.0)?,
    };

    let spec = CaseSpec {
        name,
        geometry,
        lame,
        diffusivity: parse_diffusivity(&keys)?,
        source: keys.f64_or("source", 0.0)?,
        body_force: [
            keys.f64_or("body_force_x", 0.0)?,
            keys.f64_or("body_force_y", 0.0)?,
        ],
        eps_tol_c: keys.f64("tol")?,
        pattern: parse_pattern(&keys)?,
    };
    Ok(CaseFile { spec, mesh_text })
}

pub fn load_case_file(path: &Path) -> Result<CaseFile, CaseFileError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CaseFileError::Io(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_case_file(&text, dir)
}

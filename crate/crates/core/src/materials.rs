//! Constitutive models: strain invariants, deformation-dependent
//! diffusivity tensors and concentration-dependent Lamé parameters.
//!
//! All strain measures use the plane-strain 3D embedding (`e_zz = e_xz =
//! e_yz = 0`). This matters for the second invariant: the deviator is
//! taken in 3D, so `dev_zz = -tr/3` contributes even though the stored
//! strain is two-dimensional.

use alloc::string::String;
use core::fmt;

use libm::{cos, exp, sin, sqrt};

/// Symmetric 2x2 tensor, stored as its three independent components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Tensor2 {
    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, d2)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }

    pub fn mul_vec(self, v: [f64; 2]) -> [f64; 2] {
        [
            self.xx * v[0] + self.xy * v[1],
            self.xy * v[0] + self.yy * v[1],
        ]
    }

    pub fn det(self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(self) -> [f64; 2] {
        let mean = 0.5 * (self.xx + self.yy);
        let r = sqrt(0.25 * (self.xx - self.yy) * (self.xx - self.yy) + self.xy * self.xy);
        [mean - r, mean + r]
    }

    /// Positive definiteness via leading principal minors.
    pub fn is_spd(self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    pub fn inverse(self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 {
            return None;
        }
        Some(Self::new(self.yy / d, -self.xy / d, self.xx / d))
    }

    /// Nearest symmetric tensor (in Frobenius norm) whose eigenvalues are
    /// all at least `min`: clamp each eigenvalue from below, keeping the
    /// eigenvectors.
    pub fn clamp_eigenvalues(self, min: f64) -> Self {
        let [l1, l2] = self.eigenvalues();
        if l1 >= min {
            return self;
        }
        if l2 <= min {
            // Both eigenvalues clamp to the floor.
            return Self::new(min, 0.0, min);
        }
        // Spectral projector for the low eigenvalue: P = (l2 I - A)/(l2 - l1).
        let p = Self::new(
            (l2 - self.xx) / (l2 - l1),
            -self.xy / (l2 - l1),
            (l2 - self.yy) / (l2 - l1),
        );
        self.add(p.scale(min - l1))
    }
}

/// Symmetric in-plane strain components; `exy` is the tensorial shear
/// component (half the engineering shear).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Strain2D {
    pub exx: f64,
    pub eyy: f64,
    pub exy: f64,
}

impl Strain2D {
    pub const ZERO: Self = Self {
        exx: 0.0,
        eyy: 0.0,
        exy: 0.0,
    };

    pub const fn new(exx: f64, eyy: f64, exy: f64) -> Self {
        Self { exx, eyy, exy }
    }

    /// Frobenius norm in the plane-strain 3D embedding (`e_zz = 0`).
    pub fn frobenius_norm(self) -> f64 {
        sqrt(self.exx * self.exx + self.eyy * self.eyy + 2.0 * self.exy * self.exy)
    }
}

/// First (dilatational) and second (distortional) strain invariants.
///
/// `I = tr[E]` and `II = sqrt(2 dev[E] : dev[E])`, with the deviator
/// taken in the 3D embedding. `II >= 0` always.
pub fn strain_invariants(e: Strain2D) -> (f64, f64) {
    let tr = e.exx + e.eyy;
    let dxx = e.exx - tr / 3.0;
    let dyy = e.eyy - tr / 3.0;
    let dzz = -tr / 3.0;
    let dev_dot = dxx * dxx + dyy * dyy + dzz * dzz + 2.0 * e.exy * e.exy;
    (tr, sqrt(2.0 * dev_dot))
}

#[derive(Clone, Debug, PartialEq)]
pub enum MaterialError {
    /// A rotated base tensor needs strictly positive diffusivities.
    NonPositiveDiffusivity { value: f64 },
    /// `eta * E_ref = 0` would zero a denominator in the diffusivity model.
    DegenerateModel { detail: String },
    /// A base tensor fails symmetry/positive-definiteness requirements.
    InvalidBaseTensor { which: &'static str },
    /// Lamé model produced a non-positive bulk or shear modulus.
    InvalidModuli { c: f64, lambda: f64, mu: f64 },
}

impl fmt::Display for MaterialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonPositiveDiffusivity { value } => {
                write!(f, "diffusivity must be positive, got {value}")
            }
            Self::DegenerateModel { detail } => write!(f, "degenerate diffusivity model: {detail}"),
            Self::InvalidBaseTensor { which } => {
                write!(f, "base tensor {which} must be symmetric positive definite")
            }
            Self::InvalidModuli { c, lambda, mu } => write!(
                f,
                "non-positive modulus at c = {c}: lambda = {lambda}, mu = {mu}"
            ),
        }
    }
}

/// `R(theta) diag(d1, d2) R(theta)^T` with `d1, d2 > 0`.
pub fn rotated_tensor(theta: f64, d1: f64, d2: f64) -> Result<Tensor2, MaterialError> {
    for d in [d1, d2] {
        if !(d > 0.0) {
            return Err(MaterialError::NonPositiveDiffusivity { value: d });
        }
    }
    let (c, s) = (cos(theta), sin(theta));
    Ok(Tensor2::new(
        d1 * c * c + d2 * s * s,
        (d1 - d2) * c * s,
        d1 * s * s + d2 * c * c,
    ))
}

/// Lamé parameters affine in concentration: `lambda = lambda0 +
/// lambda1 c/c_ref`, `mu = mu0 + mu1 c/c_ref`. Negative slopes model
/// degradation, positive slopes healing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LameModel {
    pub lambda0: f64,
    pub mu0: f64,
    pub lambda1: f64,
    pub mu1: f64,
    pub c_ref: f64,
}

impl LameModel {
    pub const fn new(lambda0: f64, mu0: f64, lambda1: f64, mu1: f64, c_ref: f64) -> Self {
        Self {
            lambda0,
            mu0,
            lambda1,
            mu1,
            c_ref,
        }
    }

    /// Evaluate `(lambda, mu)` at concentration `c`, enforcing positive
    /// bulk (`lambda + 2mu/3`) and shear moduli.
    pub fn lame(&self, c: f64) -> Result<(f64, f64), MaterialError> {
        let lambda = self.lambda0 + self.lambda1 * c / self.c_ref;
        let mu = self.mu0 + self.mu1 * c / self.c_ref;
        if !(mu > 0.0) || !(lambda + 2.0 * mu / 3.0 > 0.0) {
            return Err(MaterialError::InvalidModuli { c, lambda, mu });
        }
        Ok((lambda, mu))
    }

    /// `mu(c)/mu0`: below one the material has degraded, above one healed.
    pub fn relative_modulus(&self, c: f64) -> f64 {
        (self.mu0 + self.mu1 * c / self.c_ref) / self.mu0
    }
}

/// Deformation-dependent diffusivity models.
///
/// The invariant-based variants blend base tensors with exponential
/// weights in the strain invariants; the Frobenius-norm variant depends
/// on the strain only through its norm and so cannot distinguish
/// tension, compression and shear.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiffusivityModel {
    InvariantTension {
        d0: Tensor2,
        dt: Tensor2,
        ds: Tensor2,
        eta_t: f64,
        eta_s: f64,
        e_ref: f64,
    },
    InvariantCompression {
        d0: Tensor2,
        dc: Tensor2,
        ds: Tensor2,
        eta_c: f64,
        eta_s: f64,
        e_ref: f64,
    },
    FrobeniusNorm {
        d0: Tensor2,
        dinf: Tensor2,
        lambda: f64,
    },
    Constant {
        d0: Tensor2,
    },
}

fn check_base(t: Tensor2, which: &'static str) -> Result<(), MaterialError> {
    if !t.is_spd() {
        return Err(MaterialError::InvalidBaseTensor { which });
    }
    Ok(())
}

fn check_eta(eta: f64, e_ref: f64, name: &'static str) -> Result<(), MaterialError> {
    if !(eta >= 0.0) {
        return Err(MaterialError::DegenerateModel {
            detail: alloc::format!("{name} must be non-negative, got {eta}"),
        });
    }
    if !(e_ref > 0.0) {
        return Err(MaterialError::DegenerateModel {
            detail: alloc::format!("E_ref must be positive, got {e_ref}"),
        });
    }
    if exp(eta * e_ref) - 1.0 == 0.0 {
        return Err(MaterialError::DegenerateModel {
            detail: alloc::format!("{name} * E_ref = 0 zeroes a denominator"),
        });
    }
    Ok(())
}

impl DiffusivityModel {
    pub fn invariant_tension(
        d0: Tensor2,
        dt: Tensor2,
        ds: Tensor2,
        eta_t: f64,
        eta_s: f64,
        e_ref: f64,
    ) -> Result<Self, MaterialError> {
        check_base(d0, "D0")?;
        check_eta(eta_t, e_ref, "eta_T")?;
        check_eta(eta_s, e_ref, "eta_S")?;
        Ok(Self::InvariantTension {
            d0,
            dt,
            ds,
            eta_t,
            eta_s,
            e_ref,
        })
    }

    /// Convenience constructor for the `D_T = Phi_T D_0`, `D_S = Phi_S D_0`
    /// scaling form used by the beam problems.
    pub fn phi_scaled(
        d0: Tensor2,
        phi_t: f64,
        phi_s: f64,
        eta_t: f64,
        eta_s: f64,
        e_ref: f64,
    ) -> Result<Self, MaterialError> {
        if !(phi_t > 0.0) {
            return Err(MaterialError::NonPositiveDiffusivity { value: phi_t });
        }
        if !(phi_s > 0.0) {
            return Err(MaterialError::NonPositiveDiffusivity { value: phi_s });
        }
        Self::invariant_tension(d0, d0.scale(phi_t), d0.scale(phi_s), eta_t, eta_s, e_ref)
    }

    pub fn invariant_compression(
        d0: Tensor2,
        dc: Tensor2,
        ds: Tensor2,
        eta_c: f64,
        eta_s: f64,
        e_ref: f64,
    ) -> Result<Self, MaterialError> {
        check_base(d0, "D0")?;
        check_eta(eta_c, e_ref, "eta_C")?;
        check_eta(eta_s, e_ref, "eta_S")?;
        Ok(Self::InvariantCompression {
            d0,
            dc,
            ds,
            eta_c,
            eta_s,
            e_ref,
        })
    }

    pub fn frobenius_norm(d0: Tensor2, dinf: Tensor2, lambda: f64) -> Result<Self, MaterialError> {
        check_base(d0, "D0")?;
        if !(lambda >= 0.0) {
            return Err(MaterialError::DegenerateModel {
                detail: alloc::format!("lambda must be non-negative, got {lambda}"),
            });
        }
        Ok(Self::FrobeniusNorm { d0, dinf, lambda })
    }

    pub fn constant(d0: Tensor2) -> Result<Self, MaterialError> {
        check_base(d0, "D0")?;
        Ok(Self::Constant { d0 })
    }

    pub fn d0(&self) -> Tensor2 {
        match *self {
            Self::InvariantTension { d0, .. }
            | Self::InvariantCompression { d0, .. }
            | Self::FrobeniusNorm { d0, .. }
            | Self::Constant { d0 } => d0,
        }
    }

    /// Smallest admissible eigenvalue of an evaluated diffusivity tensor,
    /// as a fraction of the smallest eigenvalue of `D0`.
    pub const ELLIPTICITY_FLOOR: f64 = 1.0e-6;

    /// Evaluate the diffusivity tensor at a given strain.
    ///
    /// The exponential invariant models can drive an eigenvalue negative
    /// under strong compression, while the underlying model assumes the
    /// tensor stays uniformly elliptic.  Uniform ellipticity is enforced
    /// here: eigenvalues are clamped from below at a small fraction of the
    /// smallest eigenvalue of `D0`, which leaves physically sensible
    /// evaluations untouched.
    pub fn evaluate(&self, e: Strain2D) -> Tensor2 {
        let d = match *self {
            Self::Constant { d0 } => d0,
            Self::InvariantTension {
                d0,
                dt,
                ds,
                eta_t,
                eta_s,
                e_ref,
            } => {
                let (inv1, inv2) = strain_invariants(e);
                let wt = (exp(eta_t * inv1) - 1.0) / (exp(eta_t * e_ref) - 1.0);
                let ws = (exp(eta_s * inv2) - 1.0) / (exp(eta_s * e_ref) - 1.0);
                d0.add(dt.sub(d0).scale(wt)).add(ds.sub(d0).scale(ws))
            }
            Self::InvariantCompression {
                d0,
                dc,
                ds,
                eta_c,
                eta_s,
                e_ref,
            } => {
                let (inv1, inv2) = strain_invariants(e);
                let wc = (exp(eta_c * inv1) - 1.0) / (exp(eta_c * e_ref) - 1.0);
                let ws = (exp(eta_s * inv2) - 1.0) / (exp(eta_s * e_ref) - 1.0);
                d0.add(d0.sub(dc).scale(wc)).add(ds.sub(d0).scale(ws))
            }
            Self::FrobeniusNorm { d0, dinf, lambda } => {
                let w = 1.0 - exp(-lambda * e.frobenius_norm());
                d0.add(dinf.sub(d0).scale(w))
            }
        };
        // Symmetry is exact by construction: only three components stored.
        let floor = Self::ELLIPTICITY_FLOOR * self.d0().eigenvalues()[0];
        d.clamp_eigenvalues(floor)
    }
}

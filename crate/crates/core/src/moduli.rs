//! Classification of the Higgs data: stability verdicts, moduli dimensions,
//! component counts and the ℂ×-orbit normal form. Everything here is integer
//! or flag arithmetic apart from the normal form.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bundles::FaceForm;
use crate::error::{Error, Result};

/// A class is `Nonzero` only when its harmonic norm clears the tolerance by this factor.
pub const CLASS_MARGIN: f64 = 10.0;
/// Angular distance below which two harmonic parts count as proportional.
pub const PROPORTIONAL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassFlag {
    Zero,
    Nonzero,
    /// Above the tolerance but without the required margin.
    Marginal,
}

impl ClassFlag {
    pub fn from_norm(norm: f64, tol: f64) -> Self {
        if norm < tol {
            ClassFlag::Zero
        } else if norm >= CLASS_MARGIN * tol {
            ClassFlag::Nonzero
        } else {
            ClassFlag::Marginal
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFlags {
    /// `[β]` for RH3; `[β₁], [β₂]` for RH4.
    pub classes: Vec<ClassFlag>,
    /// RH4 with `L` trivial and `[β₁]`, `[β₂]` proportional.
    pub proportional: bool,
}

impl ClassFlags {
    pub fn rh3(beta: ClassFlag) -> Self {
        ClassFlags {
            classes: vec![beta],
            proportional: false,
        }
    }

    pub fn rh4(beta1: ClassFlag, beta2: ClassFlag, proportional: bool) -> Self {
        ClassFlags {
            classes: vec![beta1, beta2],
            proportional,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    StableDecomposable,
    Polystable,
    Unstable,
    OutOfRange,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub h1: Option<i64>,
    pub fiber_dim: Option<i64>,
    pub total_dim: i64,
    pub components: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuliDescriptor {
    pub genus: usize,
    pub n: usize,
    pub l: i64,
    pub class_flags: ClassFlags,
    pub verdict: Verdict,
    pub linearly_full: bool,
    pub superminimal: bool,
    pub dims: Dims,
    /// Second Stiefel-Whitney class of the representation, in `{0, 1}`.
    pub w2: u8,
    /// Set on the decomposable boundary copy of the RH3 moduli, which enters modulo orientation reversal.
    pub z2_quotient: bool,
}

/// `3(g-1) + l`.
pub fn h1(genus: usize, l: i64) -> i64 {
    3 * (genus as i64 - 1) + l
}

/// Admissible `l` for RH4: `|l| < 2(g-1)`.
pub fn admissible_degrees(genus: usize) -> std::ops::RangeInclusive<i64> {
    let b = 2 * (genus as i64 - 1) - 1;
    -b..=b
}

pub fn dims(genus: usize, n: usize) -> Dims {
    let g = genus as i64;
    if n == 3 {
        Dims {
            h1: None,
            fiber_dim: None,
            total_dim: 6 * (g - 1),
            components: None,
        }
    } else {
        Dims {
            h1: None,
            fiber_dim: Some(10 * g - 10),
            total_dim: 10 * (g - 1),
            components: Some(admissible_degrees(genus).count() as i64),
        }
    }
}

fn flag_verdict(flag: ClassFlag, certified: bool) -> Verdict {
    match flag {
        ClassFlag::Nonzero if certified => Verdict::Stable,
        ClassFlag::Zero => Verdict::Unstable,
        _ => Verdict::Undetermined,
    }
}

pub fn classify(genus: usize, n: usize, l: i64, flags: &ClassFlags) -> Result<ModuliDescriptor> {
    if genus < 2 {
        return Err(Error::InvalidParameter(format!("genus must be at least 2, got {genus}")));
    }
    let want = if n == 3 { 1 } else if n == 4 { 2 } else {
        return Err(Error::InvalidParameter(format!("target dimension must be 3 or 4, got {n}")));
    };
    if flags.classes.len() != want {
        return Err(Error::Shape {
            expected: want,
            got: flags.classes.len(),
        });
    }
    let mut out_dims = dims(genus, n);
    let mut superminimal = false;
    let mut z2_quotient = false;
    let verdict = if n == 3 {
        match flags.classes[0] {
            ClassFlag::Nonzero => Verdict::Stable,
            ClassFlag::Zero => Verdict::Polystable,
            ClassFlag::Marginal => Verdict::Undetermined,
        }
    } else {
        out_dims.h1 = Some(h1(genus, l));
        let (b1, b2) = (flags.classes[0], flags.classes[1]);
        superminimal = b1 == ClassFlag::Zero || b2 == ClassFlag::Zero;
        if !admissible_degrees(genus).contains(&l) {
            Verdict::OutOfRange
        } else if l >= 1 {
            flag_verdict(b2, secant_genericity(genus, l)?.generic_ok)
        } else if l <= -1 {
            flag_verdict(b1, secant_genericity(genus, -l)?.generic_ok)
        } else {
            match (b1, b2) {
                (ClassFlag::Zero, ClassFlag::Zero) => Verdict::Polystable,
                (ClassFlag::Zero, _) | (_, ClassFlag::Zero) => Verdict::Unstable,
                (ClassFlag::Nonzero, ClassFlag::Nonzero) if flags.proportional => {
                    z2_quotient = true;
                    Verdict::StableDecomposable
                }
                (ClassFlag::Nonzero, ClassFlag::Nonzero) => Verdict::Stable,
                _ => Verdict::Undetermined,
            }
        }
    };
    Ok(ModuliDescriptor {
        genus,
        n,
        l,
        class_flags: flags.clone(),
        verdict,
        linearly_full: verdict == Verdict::Stable,
        superminimal,
        dims: out_dims,
        w2: if n == 4 { l.rem_euclid(2) as u8 } else { 0 },
        z2_quotient,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecantCertificate {
    pub h0_k_lambda: i64,
    pub secant_dim: i64,
    pub ambient_dim: i64,
    pub generic_ok: bool,
}

/// Dimension count showing that a generic extension class avoids the
/// secant variety, so that the generic datum gives a stable bundle.
pub fn secant_genericity(genus: usize, l: i64) -> Result<SecantCertificate> {
    let g = genus as i64;
    if genus < 2 || l < 1 || l >= 2 * (g - 1) {
        return Err(Error::InvalidParameter(format!("need 1 <= l < 2(g-1), got g={genus}, l={l}")));
    }
    let secant_dim = 2 * l - 1;
    let ambient_dim = l + 3 * g - 4;
    Ok(SecantCertificate {
        h0_k_lambda: l + 3 * (g - 1),
        secant_dim,
        ambient_dim,
        generic_ok: secant_dim < ambient_dim,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitNormalForm {
    pub beta1: FaceForm,
    pub beta2: FaceForm,
    /// The positive scale `a` in `(aβ₁, a⁻¹β₂)`, or the normalising factor when one class vanishes.
    pub scale: f64,
    /// Phase `e^{iφ}` applied as `(e^{iφ}β₁, e^{-iφ}β₂)` to make the output phase-invariant.
    pub phase: f64,
    pub norms: (f64, f64),
}

/// Normal form of `(β₁, β₂)` under `a·(β₁, β₂) = (aβ₁, a⁻¹β₂)`, given the
/// harmonic norms of the two forms. Norms at or below `tol` count as zero.
pub fn orbit_normal_form(beta1: &FaceForm, norm1: f64, beta2: &FaceForm, norm2: f64, tol: f64) -> Result<OrbitNormalForm> {
    let (z1, z2) = (norm1 <= tol, norm2 <= tol);
    let (s1, s2, scale) = match (z1, z2) {
        (true, true) => return Err(Error::DegenerateOrbit),
        (false, false) => {
            let a = (norm2 / norm1).sqrt();
            (a, 1.0 / a, a)
        }
        (true, false) => (1.0, 1.0 / norm2, 1.0 / norm2),
        (false, true) => (1.0 / norm1, 1.0, 1.0 / norm1),
    };
    // the phase makes the largest entry of the first nonzero form real and positive
    let lead = if z1 { &beta2.values } else { &beta1.values };
    let big = lead
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    let mut phase = if big.norm() > 0.0 { -big.arg() } else { 0.0 };
    if z1 {
        phase = -phase;
    }
    let e = C64::from_polar(1.0, phase);
    Ok(OrbitNormalForm {
        beta1: beta1.scaled(e * s1),
        beta2: beta2.scaled(e.conj() * s2),
        scale,
        phase,
        norms: (norm1 * s1, norm2 * s2),
    })
}

/// `1 - |⟨x, y⟩| / (‖x‖ ‖y‖)` in the weighted inner product; zero for parallel forms.
pub fn angular_distance(x: &FaceForm, y: &FaceForm, weights: &[f64]) -> f64 {
    let mut dot = C64::new(0.0, 0.0);
    let (mut nx, mut ny) = (0.0, 0.0);
    for ((a, b), w) in x.values.iter().zip(&y.values).zip(weights) {
        dot += a.conj() * b * w;
        nx += a.norm_sqr() * w;
        ny += b.norm_sqr() * w;
    }
    if nx == 0.0 || ny == 0.0 {
        return 1.0;
    }
    (1.0 - dot.norm() / (nx * ny).sqrt()).max(0.0)
}

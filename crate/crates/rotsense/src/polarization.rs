//! Jones-calculus model of the reader–tag–reader polarization chain.
//!
//! The transmit antenna emits a polarized wave described by a [`JonesVector`];
//! the rotating tag antenna acts as a polarizer described by a rotated
//! [`JonesMatrix`]; the receive path projects the re-radiated wave through an
//! analyzer matrix. Collapsing the chain `analyzer · tag(α) · source` to one
//! complex scalar gives the backscatter coefficient whose argument tracks
//! −2α for a circular reader and a dipole tag — the effect the whole
//! receiver pipeline is built around.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::Mul;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarizationError {
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("ellipse parameters must not all be zero")]
    DegenerateEllipse,
    #[error("ellipse parameters must be finite, got ({0}, {1}, {2})")]
    NonFiniteEllipse(f64, f64, f64),
    #[error("a custom-matrix polarization has no source vector")]
    NoSourceVector,
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

// ---------------------------------------------------------------------------
// Jones vector / matrix
// ---------------------------------------------------------------------------

/// Complex two-vector describing the transverse field of a plane wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesVector {
    pub ex: Complex64,
    pub ey: Complex64,
}

impl JonesVector {
    pub fn new(ex: Complex64, ey: Complex64) -> Self {
        Self { ex, ey }
    }

    /// |ex|² + |ey|².
    pub fn norm_sqr(&self) -> f64 {
        self.ex.norm_sqr() + self.ey.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.ex.is_finite() && self.ey.is_finite()
    }
}

/// Complex 2×2 matrix describing a polarization-transforming element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl JonesMatrix {
    pub const fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn identity() -> Self {
        Self::from_reals(1.0, 0.0, 0.0, 1.0)
    }

    pub fn from_reals(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self::new(
            Complex64::new(m11, 0.0),
            Complex64::new(m12, 0.0),
            Complex64::new(m21, 0.0),
            Complex64::new(m22, 0.0),
        )
    }

    pub fn trace(&self) -> Complex64 {
        self.m11 + self.m22
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    /// Largest absolute entry-wise difference to `other`.
    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        [
            (self.m11 - other.m11).norm(),
            (self.m12 - other.m12).norm(),
            (self.m21 - other.m21).norm(),
            (self.m22 - other.m22).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        JonesMatrix::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

impl Mul<JonesVector> for JonesMatrix {
    type Output = JonesVector;

    fn mul(self, rhs: JonesVector) -> JonesVector {
        JonesVector::new(
            self.m11 * rhs.ex + self.m12 * rhs.ey,
            self.m21 * rhs.ex + self.m22 * rhs.ey,
        )
    }
}

/// Projector onto a (unit) Jones vector: v·v†.
pub fn projector(v: &JonesVector) -> JonesMatrix {
    JonesMatrix::new(
        v.ex * v.ex.conj(),
        v.ex * v.ey.conj(),
        v.ey * v.ex.conj(),
        v.ey * v.ey.conj(),
    )
}

// ---------------------------------------------------------------------------
// Canonical sources and elements
// ---------------------------------------------------------------------------

/// Right-hand circular source vector, (1, −j)/√2.
pub fn jones_rhcp() -> JonesVector {
    elliptical_source(1.0, 0.0, 1.0).expect("unit circle parameters are valid")
}

/// Left-hand circular source vector, (1, j)/√2.
pub fn jones_lhcp() -> JonesVector {
    elliptical_source(1.0, 0.0, -1.0).expect("unit circle parameters are valid")
}

/// Horizontal linear polarizer, [[1, 0], [0, 0]].
pub fn linear_polarizer() -> JonesMatrix {
    JonesMatrix::from_reals(1.0, 0.0, 0.0, 0.0)
}

/// Plane rotation [[cos α, sin α], [−sin α, cos α]].
pub fn rotation_matrix(alpha: f64) -> Result<JonesMatrix, PolarizationError> {
    if !alpha.is_finite() {
        return Err(PolarizationError::NonFiniteAngle(alpha));
    }
    Ok(rot(alpha))
}

fn rot(alpha: f64) -> JonesMatrix {
    let (s, c) = alpha.sin_cos();
    JonesMatrix::from_reals(c, s, -s, c)
}

/// Polarizer matrix of an element rotated by `alpha`:
/// `rot(α) · element · rot(−α)`.
pub fn rotated_polarizer(
    element: &JonesMatrix,
    alpha: f64,
) -> Result<JonesMatrix, PolarizationError> {
    if !alpha.is_finite() {
        return Err(PolarizationError::NonFiniteAngle(alpha));
    }
    Ok(rot(alpha) * *element * rot(-alpha))
}

/// Analyzer for the receive path of a right-hand circular antenna:
/// the projector onto the left-hand circular state, (1/2)·[[1, −j], [j, 1]].
pub fn lhcp_analyzer() -> JonesMatrix {
    projector(&jones_lhcp())
}

/// Normalized elliptical source vector (A, B − Cj)/√(A² + B² + C²).
///
/// (1, 0, 1) reproduces the right-hand circular source exactly.
pub fn elliptical_source(a: f64, b: f64, c: f64) -> Result<JonesVector, PolarizationError> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(PolarizationError::NonFiniteEllipse(a, b, c));
    }
    if a == 0.0 && b == 0.0 && c == 0.0 {
        return Err(PolarizationError::DegenerateEllipse);
    }
    let scale = 1.0 / (a * a + b * b + c * c).sqrt();
    Ok(JonesVector::new(
        Complex64::new(a * scale, 0.0),
        Complex64::new(b * scale, -c * scale),
    ))
}

/// Scalar backscatter coefficient of the chain `analyzer · tag · source`.
///
/// Both components of the received Jones vector carry the same rotation
/// phase; the ex component is returned as the demodulated observable.
pub fn receive_coefficient(
    source: &JonesVector,
    tag_matrix: &JonesMatrix,
    analyzer: &JonesMatrix,
) -> Complex64 {
    (*analyzer * (*tag_matrix * *source)).ex
}

// ---------------------------------------------------------------------------
// Polarization specification
// ---------------------------------------------------------------------------

/// Declarative polarization of an antenna, usable as a transmit source
/// (Jones vector) or as a scattering element (Jones matrix).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolarizationSpec {
    Rhcp,
    Lhcp,
    /// Linear dipole tilted by `angle` radians from the x-axis.
    LinearDipole { angle: f64 },
    /// Elliptical state with vector (A, B − Cj), normalized.
    Elliptical { a: f64, b: f64, c: f64 },
    /// Explicit element matrix for antennas without a canonical model
    /// (double dipoles, measured patterns). No source vector is defined.
    CustomMatrix { matrix: JonesMatrix },
}

impl PolarizationSpec {
    /// Transmit Jones vector of this polarization.
    pub fn source_vector(&self) -> Result<JonesVector, PolarizationError> {
        match *self {
            PolarizationSpec::Rhcp => Ok(jones_rhcp()),
            PolarizationSpec::Lhcp => Ok(jones_lhcp()),
            PolarizationSpec::LinearDipole { angle } => {
                if !angle.is_finite() {
                    return Err(PolarizationError::NonFiniteAngle(angle));
                }
                let (s, c) = angle.sin_cos();
                Ok(JonesVector::new(
                    Complex64::new(c, 0.0),
                    Complex64::new(s, 0.0),
                ))
            }
            PolarizationSpec::Elliptical { a, b, c } => elliptical_source(a, b, c),
            PolarizationSpec::CustomMatrix { .. } => Err(PolarizationError::NoSourceVector),
        }
    }

    /// Scattering-element matrix of this polarization at zero rotation.
    ///
    /// Vector-valued kinds map to the projector onto their source vector;
    /// `CustomMatrix` passes its matrix through unchanged.
    pub fn element_matrix(&self) -> Result<JonesMatrix, PolarizationError> {
        match *self {
            PolarizationSpec::CustomMatrix { matrix } => Ok(matrix),
            PolarizationSpec::LinearDipole { angle } => {
                rotated_polarizer(&linear_polarizer(), angle)
            }
            _ => Ok(projector(&self.source_vector()?)),
        }
    }
}

// ---------------------------------------------------------------------------

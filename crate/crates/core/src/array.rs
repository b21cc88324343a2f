//! Uniform linear array geometry and line-of-sight channels.
//!
//! Element `m` of the channel towards angle `θ` carries the phase
//! `-m · 2π · (d/λ) · cos θ`, with `θ` measured from the array axis, so
//! broadside is `π/2` and the two endfire directions are `0` and `π`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Half-wavelength element spacing.
pub const DEFAULT_SPACING: f64 = 0.5;

/// A uniform linear array of isotropic elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_antennas: usize,
    spacing: f64,
}

impl ArrayGeometry {
    /// `spacing` is the element spacing normalised by the carrier wavelength.
    pub fn new(num_antennas: usize, spacing: f64) -> Result<Self> {
        if num_antennas < 2 {
            return Err(Error::domain(format!(
                "array needs at least 2 antennas, got {num_antennas}"
            )));
        }
        if !(spacing > 0.0 && spacing <= 1.0) {
            return Err(Error::domain(format!(
                "normalised spacing must lie in (0, 1], got {spacing}"
            )));
        }
        Ok(Self {
            num_antennas,
            spacing,
        })
    }

    /// Half-wavelength array with `num_antennas` elements.
    pub fn half_wavelength(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, DEFAULT_SPACING)
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// A single-antenna user in the far field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserDef {
    /// Direction in radians, within `[0, π]`.
    pub angle: f64,
    /// Linear power path loss.
    pub path_loss: f64,
}

impl UserDef {
    pub fn new(angle: f64, path_loss: f64) -> Self {
        Self { angle, path_loss }
    }

    /// Unit path loss, as in the reference scenario.
    pub fn at_angle(angle: f64) -> Self {
        Self::new(angle, 1.0)
    }
}

/// Complex channel coefficients, one per transmit antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(DVector<Complex64>);

impl ChannelVector {
    pub fn new(coefficients: DVector<Complex64>) -> Self {
        Self(coefficients)
    }

    pub fn from_vec(coefficients: Vec<Complex64>) -> Self {
        Self(DVector::from_vec(coefficients))
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `h^T v` (plain transpose, no conjugation).
    pub fn dot_transpose(&self, v: &DVector<Complex64>) -> Complex64 {
        self.0.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
    }
}

fn check_angle(angle: f64) -> Result<()> {
    if !(0.0..=PI).contains(&angle) {
        return Err(Error::domain(format!(
            "angle must lie in [0, π] radians, got {angle}"
        )));
    }
    Ok(())
}

/// LoS channel towards `user`: `h_m = √β · exp(-j m 2π (d/λ) cos θ)`.
pub fn los_channel(geom: &ArrayGeometry, user: &UserDef) -> Result<ChannelVector> {
    check_angle(user.angle)?;
    if !(user.path_loss >= 0.0) || !user.path_loss.is_finite() {
        return Err(Error::domain(format!(
            "path loss must be finite and nonnegative, got {}",
            user.path_loss
        )));
    }
    let amplitude = user.path_loss.sqrt();
    let phase_step = -2.0 * PI * geom.spacing * user.angle.cos();
    Ok(ChannelVector(DVector::from_fn(
        geom.num_antennas,
        |m, _| Complex64::from_polar(amplitude, m as f64 * phase_step),
    )))
}

/// Array response vector, i.e. the unit path loss LoS channel.
pub fn array_response(geom: &ArrayGeometry, angle: f64) -> Result<ChannelVector> {
    los_channel(geom, &UserDef::at_angle(angle))
}

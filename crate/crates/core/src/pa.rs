//! Memoryless power amplifier models.
//!
//! Two behavioural models are provided: the modified Rapp model with AM/AM
//! compression and AM/PM rotation, and a third-order odd polynomial. The
//! polynomial coefficients for a given operating point are obtained by a
//! weighted least-squares fit to the Rapp transfer curve.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rapp AM/AM smoothness of the reference amplifier.
pub const REFERENCE_SMOOTHNESS_S: f64 = 2.0;
/// Rapp AM/PM smoothness of the reference amplifier.
pub const REFERENCE_SMOOTHNESS_Q: f64 = 4.0;
/// AM/PM scale of the reference amplifier, in degrees.
pub const REFERENCE_AMPM_SCALE_DEG: f64 = -0.315;
/// AM/PM knee amplitude of the reference amplifier.
pub const REFERENCE_AMPM_KNEE: f64 = 1.137;

/// Number of amplitude samples used by [`fit_poly3_to_rapp`].
pub const FIT_GRID_POINTS: usize = 4096;
/// The fit grid spans `[0, FIT_GRID_SPAN_SIGMAS · √p_in]`.
pub const FIT_GRID_SPAN_SIGMAS: f64 = 5.0;

/// Parameters of the modified Rapp model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RappParams {
    /// Small-signal amplitude gain.
    pub amam_gain: f64,
    /// Saturation power in watts.
    pub p_sat: f64,
    pub smoothness_s: f64,
    /// AM/PM numerator coefficient in degrees.
    pub ampm_scale_deg: f64,
    pub ampm_knee: f64,
    pub smoothness_q: f64,
}

impl RappParams {
    /// The reference amplifier with unit gain and the given saturation power.
    pub fn reference(p_sat: f64) -> Self {
        Self {
            amam_gain: 1.0,
            p_sat,
            smoothness_s: REFERENCE_SMOOTHNESS_S,
            ampm_scale_deg: REFERENCE_AMPM_SCALE_DEG,
            ampm_knee: REFERENCE_AMPM_KNEE,
            smoothness_q: REFERENCE_SMOOTHNESS_Q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("amam_gain", self.amam_gain),
            ("p_sat", self.p_sat),
            ("smoothness_s", self.smoothness_s),
            ("ampm_knee", self.ampm_knee),
            ("smoothness_q", self.smoothness_q),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::domain(format!(
                    "Rapp {name} must be positive, got {v}"
                )));
            }
        }
        if !self.ampm_scale_deg.is_finite() {
            return Err(Error::domain("Rapp AM/PM scale must be finite"));
        }
        Ok(())
    }

    /// Output amplitude for input amplitude `r`.
    pub fn am_am(&self, r: f64) -> f64 {
        let two_s = 2.0 * self.smoothness_s;
        let ratio = r / self.p_sat.sqrt();
        self.amam_gain * r / (1.0 + pow(ratio, two_s)).powf(1.0 / two_s)
    }

    /// Phase rotation in radians for input amplitude `r`.
    pub fn am_pm(&self, r: f64) -> f64 {
        let rq = pow(r, self.smoothness_q);
        let deg = self.ampm_scale_deg * rq / (1.0 + pow(r / self.ampm_knee, self.smoothness_q));
        deg.to_radians()
    }

    /// Output for the real input `r ≥ 0`.
    pub fn amplitude_response(&self, r: f64) -> Complex64 {
        Complex64::from_polar(self.am_am(r), self.am_pm(r))
    }

    pub fn apply(&self, x: Complex64) -> Complex64 {
        let r = x.norm_sqr().sqrt();
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        x * Complex64::from_polar(self.am_am(r) / r, self.am_pm(r))
    }
}

/// `x^e`, taking the cheaper integer path for the usual integral exponents.
fn pow(x: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

/// Coefficients of `φ(x) = β1 x + β3 x |x|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Poly3Params {
    pub beta1: Complex64,
    pub beta3: Complex64,
}

impl Poly3Params {
    pub fn new(beta1: Complex64, beta3: Complex64) -> Result<Self> {
        if beta1 == Complex64::new(0.0, 0.0) {
            return Err(Error::domain("polynomial linear gain β1 must be nonzero"));
        }
        Ok(Self { beta1, beta3 })
    }

    /// Distortion-free amplifier with gain `beta1`.
    pub fn linear(beta1: Complex64) -> Result<Self> {
        Self::new(beta1, Complex64::new(0.0, 0.0))
    }

    pub fn apply(&self, x: Complex64) -> Complex64 {
        self.beta1 * x + self.beta3 * x * x.norm_sqr()
    }
}

/// Either amplifier model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PaModel {
    Poly3(Poly3Params),
    Rapp(RappParams),
}

impl PaModel {
    pub fn apply(&self, x: Complex64) -> Complex64 {
        match self {
            PaModel::Poly3(p) => p.apply(x),
            PaModel::Rapp(p) => p.apply(x),
        }
    }
}

/// Input back-off operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IboSpec {
    /// `10·log10(p_in / p_sat)`; zero means driving at saturation.
    pub ibo_db: f64,
    /// Average per-antenna input power in watts.
    pub p_in: f64,
}

impl IboSpec {
    pub fn new(ibo_db: f64, p_in: f64) -> Result<Self> {
        if !(p_in > 0.0) || !p_in.is_finite() {
            return Err(Error::domain(format!(
                "input power must be positive, got {p_in}"
            )));
        }
        if !ibo_db.is_finite() {
            return Err(Error::domain("IBO must be finite"));
        }
        Ok(Self { ibo_db, p_in })
    }

    pub fn p_sat(&self) -> f64 {
        psat_from_ibo(self)
    }
}

/// Saturation power giving the requested back-off.
pub fn psat_from_ibo(ibo: &IboSpec) -> f64 {
    ibo.p_in / 10f64.powf(ibo.ibo_db / 10.0)
}

/// Result of a polynomial fit together with its quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poly3Fit {
    pub params: Poly3Params,
    /// Weighted mean squared error of the fit, relative to the weighted
    /// mean squared Rapp output.
    pub relative_residual: f64,
}

/// Fits the polynomial model to the Rapp amplitude response, weighting each
/// amplitude by the Rayleigh density of a complex Gaussian input of power
/// `p_in`. Uses the default 4096-point grid.
pub fn fit_poly3_to_rapp(p: &RappParams, p_in: f64) -> Result<Poly3Params> {
    fit_poly3_to_rapp_on_grid(p, p_in, FIT_GRID_POINTS).map(|f| f.params)
}

/// As [`fit_poly3_to_rapp`] on a grid of `grid_points` uniformly spaced
/// amplitudes.
pub fn fit_poly3_to_rapp_on_grid(
    p: &RappParams,
    p_in: f64,
    grid_points: usize,
) -> Result<Poly3Fit> {
    p.validate()?;
    if !(p_in > 0.0) || !p_in.is_finite() {
        return Err(Error::domain(format!(
            "input power must be positive, got {p_in}"
        )));
    }
    if grid_points < 3 {
        return Err(Error::numeric(format!(
            "fit grid needs at least 3 points, got {grid_points}"
        )));
    }

    // Work in normalised amplitude u = r/σ so the normal equations are well
    // conditioned regardless of the power scale: g(r)/σ ≈ c1 u + c3 u³ with
    // c1 = β1 and c3 = β3 σ².
    let sigma = p_in.sqrt();
    let step = FIT_GRID_SPAN_SIGMAS / (grid_points - 1) as f64;
    let (mut s2, mut s4, mut s6, mut mass) = (0.0, 0.0, 0.0, 0.0);
    let mut t1 = Complex64::new(0.0, 0.0);
    let mut t3 = Complex64::new(0.0, 0.0);
    let mut samples = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let u = i as f64 * step;
        let weight = 2.0 * u * (-u * u).exp();
        let g = if u == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            p.amplitude_response(u * sigma) / sigma
        };
        let u2 = u * u;
        s2 += weight * u2;
        s4 += weight * u2 * u2;
        s6 += weight * u2 * u2 * u2;
        t1 += g * (weight * u);
        t3 += g * (weight * u * u2);
        mass += weight;
        samples.push((u, weight, g));
    }
    if !(mass > 0.0) {
        return Err(Error::numeric("fit grid carries no weight"));
    }
    let det = s2 * s6 - s4 * s4;
    if !(det > 1e-12 * s2 * s6) {
        return Err(Error::numeric(
            "degenerate normal equations in polynomial fit",
        ));
    }
    let c1 = (t1 * s6 - t3 * s4) / det;
    let c3 = (t3 * s2 - t1 * s4) / det;

    let (mut err, mut power) = (0.0, 0.0);
    for (u, weight, g) in samples {
        err += weight * (g - c1 * u - c3 * u * u * u).norm_sqr();
        power += weight * g.norm_sqr();
    }
    let relative_residual = if power > 0.0 { err / power } else { 0.0 };

    Ok(Poly3Fit {
        params: Poly3Params::new(c1, c3 / p_in)?,
        relative_residual,
    })
}

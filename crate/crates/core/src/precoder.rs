//! Single-user precoders with unit total transmit power.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::ChannelVector;
use crate::bussgang::TransmitCovariance;
use crate::error::{Error, Result};

/// Power split used for the artificial-noise baseline.
pub const DEFAULT_INFO_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub enum PrecoderKind {
    Mrt,
    /// Zero third-order distortion precoder; `saturated` lists the
    /// antennas driven with negative polarity.
    Z3ro {
        saturated: Vec<usize>,
    },
    /// MRT information beam plus Gaussian artificial noise confined to the
    /// null space of the legitimate channel.
    MrtAn {
        info_fraction: f64,
        an_covariance: DMatrix<Complex64>,
        /// Orthonormal basis of the channel null space (`M × (M-1)`).
        null_basis: DMatrix<Complex64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    /// Information-bearing weights. For [`PrecoderKind::MrtAn`] these carry
    /// the information power share, i.e. `‖w‖² = ρ`.
    pub weights: DVector<Complex64>,
    pub kind: PrecoderKind,
    /// Expected total transmit power `trace(C_x)`.
    pub total_power: f64,
}

impl Precoder {
    pub fn label(&self) -> &'static str {
        match self.kind {
            PrecoderKind::Mrt => "mrt",
            PrecoderKind::Z3ro { .. } => "z3ro",
            PrecoderKind::MrtAn { .. } => "mrt-an",
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.weights.len()
    }

    pub fn an_covariance(&self) -> Option<&DMatrix<Complex64>> {
        match &self.kind {
            PrecoderKind::MrtAn { an_covariance, .. } => Some(an_covariance),
            _ => None,
        }
    }

    /// Covariance of the precoded signal `x`, information plus noise.
    pub fn transmit_covariance(&self) -> TransmitCovariance {
        let beam = TransmitCovariance::from_beam(&self.weights);
        match self.an_covariance() {
            Some(an) => TransmitCovariance::new(beam.as_matrix() + an)
                .expect("beam plus null-space noise is Hermitian PSD"),
            None => beam,
        }
    }

    /// A matrix `F` with `F F^H = C_x`; `x = F z` with `z ~ CN(0, I)`
    /// reproduces the transmit statistics, the first entry of `z` being the
    /// information symbol.
    pub fn sample_factor(&self) -> DMatrix<Complex64> {
        let m = self.num_antennas();
        match &self.kind {
            PrecoderKind::MrtAn {
                info_fraction,
                null_basis,
                ..
            } => {
                let scale = ((1.0 - info_fraction) / (m - 1) as f64).sqrt();
                let mut f = DMatrix::zeros(m, m);
                f.set_column(0, &self.weights);
                for k in 0..m - 1 {
                    f.set_column(k + 1, &(null_basis.column(k) * Complex64::new(scale, 0.0)));
                }
                f
            }
            _ => DMatrix::from_column_slice(m, 1, self.weights.as_slice()),
        }
    }
}

fn unit_conjugate(h: &ChannelVector) -> Result<DVector<Complex64>> {
    let norm = h.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::domain("channel has zero or non-finite norm"));
    }
    Ok(h.as_vector().map(|v| v.conj() / norm))
}

/// Maximum ratio transmission `w = h* / ‖h‖`.
pub fn mrt(h: &ChannelVector) -> Result<Precoder> {
    let weights = unit_conjugate(h)?;
    Ok(Precoder {
        total_power: weights.norm_squared(),
        weights,
        kind: PrecoderKind::Mrt,
    })
}

/// Z3RO with the first `num_saturated` antennas as the saturated subset.
pub fn z3ro(h: &ChannelVector, num_saturated: usize) -> Result<Precoder> {
    let set: Vec<usize> = (0..num_saturated).collect();
    z3ro_with_saturated_set(h, &set)
}

/// Z3RO with an explicit saturated subset.
///
/// Antennas in the subset get the gain
/// `-(Σ_{m∉S} |h_m|⁴ / Σ_{m∈S} |h_m|⁴)^{1/3}` relative to MRT, which makes
/// `Σ_m h_m w_m |w_m|²` vanish for any channel.
pub fn z3ro_with_saturated_set(h: &ChannelVector, saturated: &[usize]) -> Result<Precoder> {
    let m = h.len();
    let ms = saturated.len();
    if ms == 0 || 2 * ms >= m {
        return Err(Error::domain(format!(
            "saturated subset size must satisfy 0 < M_s < M/2, got M_s = {ms}, M = {m}"
        )));
    }
    let mut in_set = vec![false; m];
    for &i in saturated {
        if i >= m {
            return Err(Error::domain(format!(
                "saturated antenna {i} out of range for M = {m}"
            )));
        }
        if in_set[i] {
            return Err(Error::domain(format!("saturated antenna {i} listed twice")));
        }
        in_set[i] = true;
    }
    let v = h.as_vector();
    let (mut quartic_rest, mut quartic_sat) = (0.0, 0.0);
    for (i, c) in v.iter().enumerate() {
        let q = c.norm_sqr() * c.norm_sqr();
        if in_set[i] {
            quartic_sat += q;
        } else {
            quartic_rest += q;
        }
    }
    if !(quartic_sat > 0.0) || !(quartic_rest > 0.0) {
        return Err(Error::domain(
            "Z3RO needs nonzero channel gain on both antenna subsets",
        ));
    }
    let sat_gain = -(quartic_rest / quartic_sat).cbrt();
    let raw = DVector::from_fn(m, |i, _| {
        v[i].conj() * if in_set[i] { sat_gain } else { 1.0 }
    });
    let weights = &raw / Complex64::new(raw.norm(), 0.0);
    Ok(Precoder {
        total_power: weights.norm_squared(),
        weights,
        kind: PrecoderKind::Z3ro {
            saturated: saturated.to_vec(),
        },
    })
}

/// Orthonormal basis of the subspace orthogonal to `u` (unit norm).
///
/// Built from the Householder reflector that maps `u` onto the first
/// coordinate axis: columns `1..M` of that reflector.
pub fn orthogonal_complement(u: &DVector<Complex64>) -> DMatrix<Complex64> {
    let m = u.len();
    let phase = if u[0].norm() > 0.0 {
        u[0] / u[0].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut v = u.clone();
    v[0] += phase;
    let vv = v.norm_squared();
    let reflector =
        DMatrix::<Complex64>::identity(m, m) - (&v * v.adjoint()) * Complex64::new(2.0 / vv, 0.0);
    reflector.columns(1, m - 1).into_owned()
}

/// MRT information beam with power share `info_fraction` and artificial
/// noise spread evenly over the null space of `h`.
pub fn mrt_with_an(h: &ChannelVector, info_fraction: f64) -> Result<Precoder> {
    let m = h.len();
    if m < 2 {
        return Err(Error::domain("artificial noise needs at least 2 antennas"));
    }
    if !(info_fraction > 0.0 && info_fraction <= 1.0) {
        return Err(Error::domain(format!(
            "information power fraction must lie in (0, 1], got {info_fraction}"
        )));
    }
    let u = unit_conjugate(h)?;
    let null_basis = orthogonal_complement(&u);
    let per_dim = (1.0 - info_fraction) / (m - 1) as f64;
    let an_covariance = (&null_basis * null_basis.adjoint()) * Complex64::new(per_dim, 0.0);
    let weights = &u * Complex64::new(info_fraction.sqrt(), 0.0);
    let total_power = weights.norm_squared() + an_covariance.trace().re;
    Ok(Precoder {
        weights,
        kind: PrecoderKind::MrtAn {
            info_fraction,
            an_covariance,
            null_basis,
        },
        total_power,
    })
}

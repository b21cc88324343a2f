//! Radiation patterns, link quality and secrecy statistics over an angular
//! grid of candidate eavesdropper positions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::{array_response, ArrayGeometry, ChannelVector};
use crate::bussgang::BussgangStats;
use crate::error::{Error, Result};
use crate::precoder::Precoder;

/// Default number of angular grid points.
pub const DEFAULT_GRID_POINTS: usize = 2000;
/// Largest tolerated share of grid points whose distortion power came out
/// negative beyond rounding and had to be clamped to zero.
pub const MAX_CLAMPED_FRACTION: f64 = 1e-3;

/// `M_pt` equally spaced angles covering `[0, π]` inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    points: Vec<f64>,
}

impl AngularGrid {
    pub fn uniform(num_points: usize) -> Result<Self> {
        if num_points < 2 {
            return Err(Error::domain(format!(
                "angular grid needs at least 2 points, got {num_points}"
            )));
        }
        let step = PI / (num_points - 1) as f64;
        let mut points: Vec<f64> = (0..num_points).map(|i| i as f64 * step).collect();
        points[num_points - 1] = PI;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn degrees(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.to_degrees())
    }

    /// Trapezoid rule over the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.points
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// `10·log10(x)`; zero maps to `-inf`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn check_dim(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::domain(format!(
            "{what} has dimension {got}, expected {expected}"
        )));
    }
    Ok(())
}

/// `|h^T G w|²` with `G = diag(gain)`.
pub fn received_signal_power(
    h: &ChannelVector,
    gain: &DVector<Complex64>,
    w: &DVector<Complex64>,
) -> f64 {
    h.as_vector()
        .iter()
        .zip(gain.iter().zip(w.iter()))
        .map(|(hm, (gm, wm))| hm * gm * wm)
        .sum::<Complex64>()
        .norm_sqr()
}

/// `h^T A h*` for Hermitian `A`; the imaginary part is rounding noise.
pub fn quadratic_form(h: &ChannelVector, a: &DMatrix<Complex64>) -> f64 {
    let v = h.as_vector();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..v.len() {
        let col: Complex64 = (0..v.len()).map(|i| v[i] * a[(i, j)]).sum();
        acc += col * v[j].conj();
    }
    acc.re
}

/// Relative size below which a negative quadratic form is rounding noise.
pub const ROUNDING_TOLERANCE: f64 = 1e-12;

/// Values of `h(θ)^T A h(θ)*` below minus this bound are genuinely negative
/// rather than a rounded zero.
fn negativity_floor(geom: &ArrayGeometry, a: &DMatrix<Complex64>) -> f64 {
    ROUNDING_TOLERANCE * geom.num_antennas() as f64 * a.norm()
}

/// Received artificial-noise power `h^T G C_an G^H h*`.
pub fn received_an_power(
    h: &ChannelVector,
    gain: &DVector<Complex64>,
    an_cov: &DMatrix<Complex64>,
) -> f64 {
    let hg = ChannelVector::new(h.as_vector().component_mul(gain));
    quadratic_form(&hg, an_cov)
}

/// Signal radiation pattern `|h(θ)^T G w|²` on the grid.
pub fn signal_pattern(
    geom: &ArrayGeometry,
    gain: &DVector<Complex64>,
    w: &DVector<Complex64>,
    grid: &AngularGrid,
) -> Result<Vec<f64>> {
    let m = geom.num_antennas();
    check_dim("gain", gain.len(), m)?;
    check_dim("weights", w.len(), m)?;
    grid.points()
        .par_iter()
        .map(|&t| Ok(received_signal_power(&array_response(geom, t)?, gain, w)))
        .collect()
}

/// Distortion pattern values (negative rounding clamped to zero) and the
/// number of points that were negative beyond rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionPattern {
    pub values: Vec<f64>,
    pub clamped: usize,
}

/// Distortion radiation pattern `h(θ)^T C_e h(θ)*` on the grid.
pub fn distortion_pattern(
    geom: &ArrayGeometry,
    distortion_cov: &DMatrix<Complex64>,
    grid: &AngularGrid,
) -> Result<DistortionPattern> {
    check_dim(
        "distortion covariance",
        distortion_cov.nrows(),
        geom.num_antennas(),
    )?;
    check_dim(
        "distortion covariance",
        distortion_cov.ncols(),
        geom.num_antennas(),
    )?;
    let raw: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&t| Ok(quadratic_form(&array_response(geom, t)?, distortion_cov)))
        .collect::<Result<_>>()?;
    let floor = negativity_floor(geom, distortion_cov);
    let clamped = raw.iter().filter(|v| **v < -floor).count();
    Ok(DistortionPattern {
        values: raw.into_iter().map(|v| v.max(0.0)).collect(),
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternReport {
    /// `P_sig + P_dist` per angle.
    pub total: Vec<f64>,
    /// Trapezoid integral of `total` over `[0, π]`.
    pub total_power: f64,
    /// `total / (P_T / π)`.
    pub directivity: Vec<f64>,
    pub signal_directivity: Vec<f64>,
    pub distortion_directivity: Vec<f64>,
}

pub fn total_power_and_directivity(
    signal: &[f64],
    distortion: &[f64],
    grid: &AngularGrid,
) -> Result<PatternReport> {
    check_dim("signal pattern", signal.len(), grid.len())?;
    check_dim("distortion pattern", distortion.len(), grid.len())?;
    let total: Vec<f64> = signal.iter().zip(distortion).map(|(s, d)| s + d).collect();
    let total_power = grid.integrate(&total);
    if !(total_power > 0.0) {
        return Err(Error::numeric("radiated power is zero"));
    }
    let isotropic = total_power / PI;
    let scale = |v: &[f64]| v.iter().map(|x| x / isotropic).collect::<Vec<_>>();
    Ok(PatternReport {
        directivity: scale(&total),
        signal_directivity: scale(signal),
        distortion_directivity: scale(distortion),
        total,
        total_power,
    })
}

/// Powers received by a single-antenna terminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedPowers {
    pub signal: f64,
    pub distortion: f64,
    pub artificial_noise: f64,
}

impl ReceivedPowers {
    pub fn at(h: &ChannelVector, precoder: &Precoder, stats: &BussgangStats) -> Self {
        Self {
            signal: received_signal_power(h, &stats.gain, &precoder.weights),
            distortion: quadratic_form(h, &stats.distortion_cov).max(0.0),
            artificial_noise: precoder
                .an_covariance()
                .map_or(0.0, |an| received_an_power(h, &stats.gain, an).max(0.0)),
        }
    }

    pub fn snr(&self, noise_variance: f64) -> f64 {
        self.signal / noise_variance
    }

    pub fn sndr(&self, noise_variance: f64) -> f64 {
        self.signal / (self.distortion + self.artificial_noise + noise_variance)
    }
}

/// Signal to noise ratio, thermal noise only.
pub fn snr(
    h: &ChannelVector,
    gain: &DVector<Complex64>,
    w: &DVector<Complex64>,
    noise_variance: f64,
) -> f64 {
    received_signal_power(h, gain, w) / noise_variance
}

/// Signal to noise-and-distortion ratio. `an_cov` adds the received
/// artificial noise to the denominator.
pub fn sndr(
    h: &ChannelVector,
    gain: &DVector<Complex64>,
    w: &DVector<Complex64>,
    distortion_cov: &DMatrix<Complex64>,
    an_cov: Option<&DMatrix<Complex64>>,
    noise_variance: f64,
) -> f64 {
    let distortion = quadratic_form(h, distortion_cov).max(0.0);
    let an = an_cov.map_or(0.0, |c| received_an_power(h, gain, c).max(0.0));
    received_signal_power(h, gain, w) / (distortion + an + noise_variance)
}

/// `max{0, log2((1 + SNDR_legit) / (1 + SNDR_eve))}` in bits/s/Hz.
pub fn secrecy_rate(sndr_legit: f64, sndr_eve: f64) -> f64 {
    ((1.0 + sndr_legit) / (1.0 + sndr_eve)).log2().max(0.0)
}

/// Fraction of grid rates strictly below `threshold`.
pub fn outage_probability(rates: &[f64], threshold: f64) -> f64 {
    if rates.is_empty() {
        return 0.0;
    }
    rates.iter().filter(|r| **r < threshold).count() as f64 / rates.len() as f64
}

/// Outage probability sampled at each threshold.
pub fn outage_curve(rates: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len().max(1) as f64;
    thresholds
        .iter()
        .map(|t| sorted.partition_point(|r| r < t) as f64 / n)
        .collect()
}

/// Secrecy rate sustained at outage probability `p`: the lower empirical
/// `p`-quantile, i.e. the element at index `floor(p · M_pt)` of the sorted
/// rates.
pub fn secrecy_rate_at_outage(rates: &[f64], p: f64) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::domain("no rates to take a quantile of"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "outage probability must lie in (0, 1), got {p}"
        )));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((p * sorted.len() as f64).floor() as usize).min(sorted.len() - 1);
    Ok(sorted[idx])
}

/// Per-angle link quality and secrecy for one precoder and amplifier state.
#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyReport {
    pub angles: Vec<f64>,
    pub sndr_eve: Vec<f64>,
    pub snr_eve: Vec<f64>,
    pub sndr_legit: f64,
    pub snr_legit: f64,
    pub rates: Vec<f64>,
    /// Grid points whose distortion power was negative beyond rounding.
    pub clamped: usize,
}

impl SecrecyReport {
    pub fn mean_rate(&self) -> f64 {
        self.rates.iter().sum::<f64>() / self.rates.len() as f64
    }

    pub fn rate_at_outage(&self, p: f64) -> Result<f64> {
        secrecy_rate_at_outage(&self.rates, p)
    }

    pub fn outage(&self, threshold: f64) -> f64 {
        outage_probability(&self.rates, threshold)
    }

    /// Angle (radians) with the largest eavesdropper SNDR, ignoring angles
    /// within `exclusion` radians of `legit_angle`.
    pub fn strongest_eavesdropper(&self, legit_angle: f64, exclusion: f64) -> Option<usize> {
        (0..self.angles.len())
            .filter(|&i| (self.angles[i] - legit_angle).abs() > exclusion)
            .max_by(|&a, &b| self.sndr_eve[a].total_cmp(&self.sndr_eve[b]))
    }
}

/// Evaluates the secrecy rate towards every eavesdropper angle of `grid`.
pub fn evaluate_secrecy(
    geom: &ArrayGeometry,
    legit_channel: &ChannelVector,
    precoder: &Precoder,
    stats: &BussgangStats,
    noise_variance: f64,
    grid: &AngularGrid,
) -> Result<SecrecyReport> {
    if !(noise_variance > 0.0) {
        return Err(Error::domain(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    let m = geom.num_antennas();
    check_dim("legitimate channel", legit_channel.len(), m)?;
    check_dim("precoder", precoder.num_antennas(), m)?;
    check_dim("Bussgang gain", stats.num_antennas(), m)?;

    let legit = ReceivedPowers::at(legit_channel, precoder, stats);
    let sndr_legit = legit.sndr(noise_variance);
    let snr_legit = legit.snr(noise_variance);

    let floor = negativity_floor(geom, &stats.distortion_cov);
    let per_angle: Vec<(f64, f64, bool)> = grid
        .points()
        .par_iter()
        .map(|&t| {
            let h = array_response(geom, t)?;
            let raw_dist = quadratic_form(&h, &stats.distortion_cov);
            let p = ReceivedPowers::at(&h, precoder, stats);
            Ok((
                p.sndr(noise_variance),
                p.snr(noise_variance),
                raw_dist < -floor,
            ))
        })
        .collect::<Result<_>>()?;

    let clamped = per_angle.iter().filter(|v| v.2).count();
    if clamped as f64 > MAX_CLAMPED_FRACTION * grid.len() as f64 {
        return Err(Error::numeric(format!(
            "{clamped} of {} distortion powers were negative before clamping",
            grid.len()
        )));
    }
    let sndr_eve: Vec<f64> = per_angle.iter().map(|v| v.0).collect();
    let snr_eve: Vec<f64> = per_angle.iter().map(|v| v.1).collect();
    let rates = sndr_eve
        .iter()
        .map(|&e| secrecy_rate(sndr_legit, e))
        .collect();
    Ok(SecrecyReport {
        angles: grid.points().to_vec(),
        sndr_eve,
        snr_eve,
        sndr_legit,
        snr_legit,
        rates,
        clamped,
    })
}

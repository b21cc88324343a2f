//! Bussgang decomposition `φ(x) = G x + e` of a per-antenna nonlinearity
//! driven by a zero-mean circularly symmetric Gaussian input.
//!
//! For the third-order polynomial the gain and distortion covariance have
//! closed forms in terms of the input covariance `C_x`:
//!
//! ```text
//! G   = β1 I + 2 β3 diag(C_x)
//! C_e = 2 |β3|² (C_x ⊙ C_x* ⊙ C_x)
//! ```
//!
//! For any other model the decomposition is estimated by Monte-Carlo.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pa::{PaModel, Poly3Params, RappParams};

/// Default Monte-Carlo sample count.
pub const DEFAULT_MC_SAMPLES: usize = 200_000;
/// Smallest sample count accepted by the Monte-Carlo estimator.
pub const MIN_MC_SAMPLES: usize = 10_000;
/// Samples per independently seeded shard.
pub const MC_SHARD_SIZE: usize = 8192;
/// Identity of the sample generator, recorded in every report.
pub const MC_GENERATOR: &str =
    "rand_chacha::ChaCha8Rng seed_from_u64(seed), set_stream(shard), 8192 samples/shard, CN(0,1) = (StandardNormal + j StandardNormal)/sqrt(2)";

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Covariance of the Gaussian precoded vector `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitCovariance(DMatrix<Complex64>);

impl TransmitCovariance {
    /// Validates that `c` is square, Hermitian and positive semidefinite.
    pub fn new(c: DMatrix<Complex64>) -> Result<Self> {
        check_hermitian_psd(&c, "transmit covariance")?;
        Ok(Self(c))
    }

    /// `w w^H` for single-stream precoding with unit-power symbols.
    pub fn from_beam(w: &DVector<Complex64>) -> Self {
        Self(w * w.adjoint())
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

/// Checks that `c` is square, Hermitian and positive semidefinite.
pub fn check_hermitian_psd(c: &DMatrix<Complex64>, what: &str) -> Result<()> {
    if !c.is_square() {
        return Err(Error::domain(format!(
            "{what} must be square, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let asym = (c - c.adjoint())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.norm()));
    if asym > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::domain(format!(
            "{what} is not Hermitian (asymmetry {asym:e})"
        )));
    }
    let trace = c.trace().re;
    let min_eig = min_eigenvalue(c);
    if min_eig < -PSD_TOL * trace.abs() {
        return Err(Error::domain(format!(
            "{what} is not positive semidefinite (eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(c: &DMatrix<Complex64>) -> f64 {
    let herm = (c + c.adjoint()) * Complex64::new(0.5, 0.0);
    herm.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v))
}

/// How a [`BussgangStats`] was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BussgangSource {
    ClosedFormPoly3,
    MonteCarlo {
        num_samples: usize,
        seed: u64,
        generator: &'static str,
    },
}

/// Gain and distortion statistics of the amplifier bank.
#[derive(Debug, Clone, PartialEq)]
pub struct BussgangStats {
    /// Diagonal of the Bussgang gain matrix.
    pub gain: DVector<Complex64>,
    pub distortion_cov: DMatrix<Complex64>,
    pub source: BussgangSource,
    /// Antennas with no input power; their gain is set to zero.
    pub zero_input_antennas: Vec<usize>,
}

impl BussgangStats {
    pub fn gain_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&self.gain)
    }

    pub fn num_antennas(&self) -> usize {
        self.gain.len()
    }
}

/// Diagonal of `G = β1 I + 2 β3 diag(C_x)`.
pub fn poly3_bussgang_gain(p: &Poly3Params, cx: &TransmitCovariance) -> DVector<Complex64> {
    let c = cx.as_matrix();
    DVector::from_fn(c.nrows(), |m, _| p.beta1 + p.beta3 * (2.0 * c[(m, m)].re))
}

/// `C_e = 2|β3|² (C_x ⊙ C_x* ⊙ C_x)`.
pub fn poly3_distortion_cov(p: &Poly3Params, cx: &TransmitCovariance) -> DMatrix<Complex64> {
    let scale = 2.0 * p.beta3.norm_sqr();
    cx.as_matrix().map(|v| v * (scale * v.norm_sqr()))
}

/// Closed-form decomposition of the polynomial amplifier bank.
pub fn poly3_bussgang(p: &Poly3Params, cx: &TransmitCovariance) -> BussgangStats {
    BussgangStats {
        gain: poly3_bussgang_gain(p, cx),
        distortion_cov: poly3_distortion_cov(p, cx),
        source: BussgangSource::ClosedFormPoly3,
        zero_input_antennas: Vec::new(),
    }
}

/// Monte-Carlo decomposition of the Rapp amplifier bank for `x = w s`.
pub fn rapp_bussgang_mc(
    p: &RappParams,
    w: &DVector<Complex64>,
    num_samples: usize,
    seed: u64,
) -> Result<BussgangStats> {
    p.validate()?;
    let factor = DMatrix::from_column_slice(w.len(), 1, w.as_slice());
    bussgang_mc(&PaModel::Rapp(*p), &factor, num_samples, seed)
}

/// Monte-Carlo decomposition for `x = F z`, `z ~ CN(0, I)`.
///
/// Samples are produced in fixed-size shards, each with its own ChaCha
/// stream, and shard sums are combined in shard order; the result depends
/// only on `(factor, num_samples, seed)` and not on the thread pool.
pub fn bussgang_mc(
    pa: &PaModel,
    factor: &DMatrix<Complex64>,
    num_samples: usize,
    seed: u64,
) -> Result<BussgangStats> {
    if num_samples < MIN_MC_SAMPLES {
        return Err(Error::domain(format!(
            "Monte-Carlo needs at least {MIN_MC_SAMPLES} samples, got {num_samples}"
        )));
    }
    if factor.norm() == 0.0 {
        return Err(Error::domain("precoder has zero norm"));
    }
    let m = factor.nrows();
    let shards = num_samples.div_ceil(MC_SHARD_SIZE);
    let shard_len = |s: usize| MC_SHARD_SIZE.min(num_samples - s * MC_SHARD_SIZE);

    // Pass 1: per-antenna cross-correlation and input power.
    let partial: Vec<(Vec<Complex64>, Vec<f64>)> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut yx = vec![Complex64::new(0.0, 0.0); m];
            let mut xx = vec![0.0; m];
            for_each_sample(factor, seed, s, shard_len(s), |x| {
                for i in 0..m {
                    let y = pa.apply(x[i]);
                    yx[i] += y * x[i].conj();
                    xx[i] += x[i].norm_sqr();
                }
            });
            (yx, xx)
        })
        .collect();
    let mut yx = vec![Complex64::new(0.0, 0.0); m];
    let mut xx = vec![0.0; m];
    for (pyx, pxx) in &partial {
        for i in 0..m {
            yx[i] += pyx[i];
            xx[i] += pxx[i];
        }
    }
    let mut zero_input_antennas = Vec::new();
    let gain = DVector::from_fn(m, |i, _| {
        if xx[i] > 0.0 {
            yx[i] / xx[i]
        } else {
            zero_input_antennas.push(i);
            Complex64::new(0.0, 0.0)
        }
    });

    // Pass 2: regenerate the same samples and accumulate e e^H.
    let partial: Vec<Vec<Complex64>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut acc = vec![Complex64::new(0.0, 0.0); m * m];
            let mut e = vec![Complex64::new(0.0, 0.0); m];
            for_each_sample(factor, seed, s, shard_len(s), |x| {
                for i in 0..m {
                    e[i] = pa.apply(x[i]) - gain[i] * x[i];
                }
                // Lower triangle only; the upper one follows by symmetry.
                for j in 0..m {
                    let ej = e[j].conj();
                    for i in j..m {
                        acc[j * m + i] += e[i] * ej;
                    }
                }
            });
            acc
        })
        .collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); m * m];
    for p in &partial {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    let inv_n = 1.0 / num_samples as f64;
    let distortion_cov = DMatrix::from_fn(m, m, |i, j| {
        let v = if i >= j {
            acc[j * m + i]
        } else {
            acc[i * m + j].conj()
        };
        v * inv_n
    });

    Ok(BussgangStats {
        gain,
        distortion_cov,
        source: BussgangSource::MonteCarlo {
            num_samples,
            seed,
            generator: MC_GENERATOR,
        },
        zero_input_antennas,
    })
}

/// Rng for shard `shard` of the stream identified by `seed`.
pub fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

/// One `CN(0, 1)` draw.
pub fn complex_normal<R: rand::Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn for_each_sample(
    factor: &DMatrix<Complex64>,
    seed: u64,
    shard: usize,
    count: usize,
    mut f: impl FnMut(&[Complex64]),
) {
    let (m, k) = factor.shape();
    let mut rng = shard_rng(seed, shard);
    let mut z = vec![Complex64::new(0.0, 0.0); k];
    let mut x = vec![Complex64::new(0.0, 0.0); m];
    for _ in 0..count {
        for zk in z.iter_mut() {
            *zk = complex_normal(&mut rng);
        }
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = (0..k).map(|c| factor[(i, c)] * z[c]).sum();
        }
        f(&x);
    }
}

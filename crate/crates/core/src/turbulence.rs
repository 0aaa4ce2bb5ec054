//! Elliptic-beam atmospheric channel: beam-vector statistics, per-sample
//! transmittance, and Monte-Carlo moment estimation.
//!
//! The received spot is a random ellipse described by the 4-vector
//! w = {x₀, y₀, φ₁, φ₂} (centroid offsets and log-squared semi-axes,
//! W_i = sqrt(W₀² exp(φ_i))) plus an orientation angle θ uniform on [0, π/2].
//! The centroid block is isotropic with
//!
//!   ⟨x₀²⟩ = ⟨y₀²⟩ = 0.33 W₀² σ_l² Ω^(-6/7),
//!
//! where σ_l² = 1.23 C_n² k^(7/6) L^(11/6) is the Rytov variance and
//! Ω = k W₀²/(2L) the Fresnel parameter; the φ block carries the
//! beam-broadening statistics.
//!
//! A sampled ellipse maps to a transmittance through the aperture of radius r
//!
//!   T = T_r0 · exp{ -[(r₀/r) / R(2/W_eff(θ-α))]^(Q(2/W_eff(θ-α))) },
//!
//! with the centered-beam transmittance T_r0, scale/shape functions R and Q,
//! and effective spot radius W_eff built from Lambert W. All of these are
//! evaluated in forms that stay finite for extreme ellipses: scaled Bessel
//! combinations, Taylor series near the circular limit, log-space exponents,
//! and a log-domain Lambert W (see `special`).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ChannelGeometry;
use crate::error::{Error, Result};
use crate::special::{i0e, i1e, lambert_w0_of_exp, one_minus_i0e};

pub use crate::special::lambert_w0;

/// How the reference angle α of the effective-spot argument θ − α is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaStrategy {
    /// α = atan2(y₀, x₀): θ is measured against the centroid-offset
    /// direction.
    #[default]
    CentroidAligned,
    /// α = 0: θ is measured against the x axis.
    Zero,
}

/// Mean and covariance of the beam 4-vector w = {x₀, y₀, φ₁, φ₂}.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamStatistics {
    /// (0, 0, ⟨φ⟩, ⟨φ⟩).
    pub mean: [f64; 4],
    /// Covariance of w; the x/y block is diagonal and isotropic, the φ block
    /// carries a negative φ₁φ₂ correlation.
    pub cov: [[f64; 4]; 4],
    /// Rytov variance σ_l² along the path.
    pub sigma_l2: f64,
    /// Fresnel parameter Ω.
    pub omega: f64,
}

/// Orientation range of the ellipse; θ is uniform on this interval.
pub const THETA_RANGE: (f64, f64) = (0.0, std::f64::consts::FRAC_PI_2);

impl BeamStatistics {
    /// Centroid variance ⟨x₀²⟩ (= ⟨y₀²⟩), the input to the interruption
    /// probability.
    pub fn var_x0(&self) -> f64 {
        self.cov[0][0]
    }
}

/// One sampled elliptic beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamVector {
    pub x0: f64,
    pub y0: f64,
    /// Semi-axes (m), W_i = sqrt(W₀² exp(φ_i)) > 0.
    pub w1: f64,
    pub w2: f64,
    /// Orientation angle in [0, π/2].
    pub theta: f64,
}

/// Monte-Carlo transmittance moments plus the raw samples that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmittanceStats {
    pub mean_t: f64,
    pub mean_sqrt_t: f64,
    /// var(√T) = ⟨T⟩ − ⟨√T⟩², clamped at 0 against rounding.
    pub var_sqrt_t: f64,
    pub samples: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl TransmittanceStats {
    /// ⟨T⟩ / ⟨√T⟩² ≥ 1; the Jensen gap driving estimator bias.
    pub fn jensen_ratio(&self) -> f64 {
        self.mean_t / (self.mean_sqrt_t * self.mean_sqrt_t)
    }

    /// Moments pair (E[T], E[√T]) consumed by the attack and noise modules.
    pub fn moments(&self) -> (f64, f64) {
        (self.mean_t, self.mean_sqrt_t)
    }
}

/// Normalized histogram of transmittance samples over [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// (bin_left, bin_right, density) triples; Σ density·width = 1.
    pub bins: Vec<(f64, f64, f64)>,
}

/// Beam-vector statistics for a geometry: Rytov variance, Fresnel parameter,
/// centroid variance and the φ-block moments.
pub fn beam_statistics(geometry: &ChannelGeometry) -> Result<BeamStatistics> {
    geometry.validate()?;
    let k = geometry.wavenumber();
    let w0 = geometry.w_0;
    let l = geometry.l;
    let sigma_l2 = 1.23 * geometry.cn2 * k.powf(7.0 / 6.0) * l.powf(11.0 / 6.0);
    let omega = k * w0 * w0 / (2.0 * l);

    let var_x0 = 0.33 * w0 * w0 * sigma_l2 * omega.powf(-6.0 / 7.0);
    let s = sigma_l2 * omega.powf(5.0 / 6.0);
    let d = 1.0 + 2.96 * s;
    let mean_phi = (d * d / (omega * omega * (d * d + 1.2 * s).sqrt())).ln();
    let var_phi = (1.0 + 1.2 * s / (d * d)).ln();
    let cov_phi = (1.0 - 0.8 * s / (d * d)).ln();

    let mut cov = [[0.0; 4]; 4];
    cov[0][0] = var_x0;
    cov[1][1] = var_x0;
    cov[2][2] = var_phi;
    cov[3][3] = var_phi;
    cov[2][3] = cov_phi;
    cov[3][2] = cov_phi;

    Ok(BeamStatistics {
        mean: [0.0, 0.0, mean_phi, mean_phi],
        cov,
        sigma_l2,
        omega,
    })
}

/// Cholesky factor of the 2×2 φ block with PSD repair: eigens clipped at 0
/// when the deficit is below 1e-12 (relative), rejected beyond that.
fn phi_cholesky(var: f64, cov: f64) -> Result<(f64, f64, f64)> {
    let scale = var.abs().max(1.0);
    if var < -1e-12 * scale {
        return Err(Error::numeric(format!(
            "beam covariance not PSD: var(phi) = {var}"
        )));
    }
    let var = var.max(0.0);
    if var == 0.0 {
        if cov.abs() > 1e-12 * scale {
            return Err(Error::numeric(format!(
                "beam covariance not PSD: var(phi) = 0 with cov = {cov}"
            )));
        }
        return Ok((0.0, 0.0, 0.0));
    }
    let a = var.sqrt();
    let b = cov / a;
    let c2 = var - b * b;
    if c2 < -1e-12 * scale {
        return Err(Error::numeric(format!(
            "beam covariance not PSD: var = {var}, cov = {cov}"
        )));
    }
    Ok((a, b, c2.max(0.0).sqrt()))
}

/// Draw one beam: w from the 4-D Gaussian (x/y independent of the correlated
/// φ pair), θ uniform on [0, π/2] and independent of w. Draw order is fixed
/// (x₀, y₀, φ-pair, θ) so a given rng stream always yields the same beam.
pub fn sample_beam<R: Rng>(
    stats: &BeamStatistics,
    geometry: &ChannelGeometry,
    rng: &mut R,
) -> Result<BeamVector> {
    let var_x = stats.cov[0][0];
    if var_x < 0.0 {
        return Err(Error::numeric(format!(
            "beam covariance not PSD: var(x0) = {var_x}"
        )));
    }
    let (a, b, c) = phi_cholesky(stats.cov[2][2], stats.cov[2][3])?;
    let sd_x = var_x.sqrt();

    let zx: f64 = StandardNormal.sample(rng);
    let zy: f64 = StandardNormal.sample(rng);
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let phi1 = stats.mean[2] + a * z1;
    let phi2 = stats.mean[3] + b * z1 + c * z2;
    let theta = rng.random::<f64>() * THETA_RANGE.1;

    let w0 = geometry.w_0;
    Ok(BeamVector {
        x0: sd_x * zx,
        y0: sd_x * zy,
        w1: (w0 * w0 * phi1.exp()).sqrt(),
        w2: (w0 * w0 * phi2.exp()).sqrt(),
        theta,
    })
}

/// ln of the scale ratio and the shape exponent Q, parameterized by
/// z = r²x². Series below z = 0.05 (the direct forms cancel), scaled Bessel
/// forms above.
///
/// Returns (ln_ratio, q) with ln_ratio = ln[2(1-e^(-z/2)) / (1-e^(-z)I₀(z))],
/// R(x) = ln_ratio^(-1/Q).
fn ln_ratio_and_q(z: f64) -> (f64, f64) {
    if z <= 0.05 {
        // ln_ratio = z/2 - z²/8 + z³/96 + z⁴/384 - z⁵/1440 - z⁶/15360 + 359z⁷/7741440
        let c = [
            0.5,
            -0.125,
            1.0 / 96.0,
            1.0 / 384.0,
            -1.0 / 1440.0,
            -1.0 / 15360.0,
            359.0 / 7741440.0,
        ];
        let mut lnr = 0.0;
        for ci in c.iter().rev() {
            lnr = lnr * z + ci;
        }
        lnr *= z;
        let z3 = z * z * z;
        let q = 2.0 + z3 / 96.0 - 7.0 * z3 * z * z / 7680.0 + 7.0 * z3 * z3 / 92160.0;
        (lnr, q)
    } else {
        let den = one_minus_i0e(z);
        let num = -2.0 * (-0.5 * z).exp_m1();
        let lnr = (num / den).ln();
        let q = 2.0 * z * i1e(z) / den / lnr;
        (lnr, q)
    }
}

// Relative semi-axis difference below which the analytic circular limit of
// T_r0 replaces the general expression (which is 0/0 at W1 = W2).
const CIRCULAR_GUARD: f64 = 1e-9;

/// Centered-beam transmittance T_r0 for semi-axes (w1, w2) through an
/// aperture of radius r.
fn centered_transmittance(w1: f64, w2: f64, r: f64, w0: f64) -> Result<f64> {
    if (w1 - w2).abs() < CIRCULAR_GUARD * w0 {
        // Circular limit: T = 1 - exp(-2r²/W²).
        return Ok(-(-2.0 * r * r / (w1 * w1)).exp_m1());
    }
    let inv1 = 1.0 / (w1 * w1);
    let inv2 = 1.0 / (w2 * w2);
    let a = (r * r * (inv1 - inv2)).abs();
    let s = r * r * (inv1 + inv2);
    // I0(a)·exp(-s) via the scaled form; a <= s always.
    let term1 = i0e(a) * (a - s).exp();

    let xp = 1.0 / w1 - 1.0 / w2;
    let zp = r * r * xp * xp;
    let (lnr, q) = ln_ratio_and_q(zp);
    // [(W1+W2)²/|W1²-W2²| / R]^Q in log space: R = lnr^(-1/Q).
    let ln_e = 2.0 * (w1 + w2).ln() - (w1 * w1 - w2 * w2).abs().ln();
    let ex = q * ln_e + lnr.ln();
    let term3 = -2.0 * (-0.5 * zp).exp_m1() * (-ex.exp()).exp();

    Ok(1.0 - term1 - term3)
}

/// Transmittance of one sampled beam through the receiving aperture.
///
/// Overflow or a result outside [0, 1] (beyond rounding slack) is reported as
/// an error, never as a silent NaN.
pub fn transmittance_of_beam(
    beam: &BeamVector,
    geometry: &ChannelGeometry,
    alpha: AlphaStrategy,
) -> Result<f64> {
    if !(beam.w1 > 0.0 && beam.w2 > 0.0) {
        return Err(Error::domain(format!(
            "beam semi-axes must be positive (W1 = {}, W2 = {})",
            beam.w1, beam.w2
        )));
    }
    let r = geometry.r;
    let t_r0 = centered_transmittance(beam.w1, beam.w2, r, geometry.w_0)?;

    let r0 = beam.x0.hypot(beam.y0);
    let t = if r0 == 0.0 {
        t_r0
    } else {
        let chi = match alpha {
            AlphaStrategy::CentroidAligned => beam.theta - beam.y0.atan2(beam.x0),
            AlphaStrategy::Zero => beam.theta,
        };
        let (sin_chi, cos_chi) = chi.sin_cos();
        // z = 4r²/W_eff² = W(e^g); g = ln of the Lambert argument.
        let g = (4.0 * r * r / (beam.w1 * beam.w2)).ln()
            + (r * r / (beam.w1 * beam.w1)) * (1.0 + 2.0 * cos_chi * cos_chi)
            + (r * r / (beam.w2 * beam.w2)) * (1.0 + 2.0 * sin_chi * sin_chi);
        let z = lambert_w0_of_exp(g)?;
        let (lnr, q) = ln_ratio_and_q(z);
        // [(r0/r)/R]^Q in log space.
        let ex = q * (r0 / r).ln() + lnr.ln();
        t_r0 * (-ex.exp()).exp()
    };

    if !t.is_finite() {
        return Err(Error::numeric(format!(
            "transmittance evaluation produced {t} for beam {beam:?}"
        )));
    }
    if !(-1e-9..=1.0 + 1e-9).contains(&t) {
        return Err(Error::numeric(format!(
            "transmittance {t} outside [0,1] for beam {beam:?}"
        )));
    }
    Ok(t.clamp(0.0, 1.0))
}

// Samples per rng substream. Each chunk draws from its own ChaCha stream, so
// results are identical for any worker count and merge in chunk order.
const CHUNK: usize = 4096;

/// Monte-Carlo transmittance statistics: n_samples beams drawn from the
/// geometry's beam statistics, each mapped to a transmittance.
/// Deterministic for a fixed seed, independent of thread count.
pub fn monte_carlo_stats(
    geometry: &ChannelGeometry,
    n_samples: usize,
    seed: u64,
    alpha: AlphaStrategy,
) -> Result<TransmittanceStats> {
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be >= 1".to_string()));
    }
    let stats = beam_statistics(geometry)?;
    let n_chunks = n_samples.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ci as u64);
            let count = CHUNK.min(n_samples - ci * CHUNK);
            (0..count)
                .map(|_| {
                    let beam = sample_beam(&stats, geometry, &mut rng)?;
                    transmittance_of_beam(&beam, geometry, alpha)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let samples: Vec<f64> = chunks.into_iter().flatten().collect();
    let inv_n = 1.0 / samples.len() as f64;
    let mean_t = samples.iter().sum::<f64>() * inv_n;
    let mean_sqrt_t = samples.iter().map(|t| t.sqrt()).sum::<f64>() * inv_n;
    let var_sqrt_t = (mean_t - mean_sqrt_t * mean_sqrt_t).max(0.0);

    Ok(TransmittanceStats {
        mean_t,
        mean_sqrt_t,
        var_sqrt_t,
        n_samples: samples.len(),
        samples,
        seed,
    })
}

/// Normalized histogram of the sample set over [0, 1].
pub fn pdf_histogram(stats: &TransmittanceStats, n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::domain("n_bins must be >= 1".to_string()));
    }
    if stats.samples.is_empty() {
        return Err(Error::domain("empty sample set".to_string()));
    }
    let width = 1.0 / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &t in &stats.samples {
        let idx = ((t * n_bins as f64) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    let norm = 1.0 / (stats.samples.len() as f64 * width);
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as f64 * width, (i + 1) as f64 * width, c as f64 * norm))
        .collect();
    Ok(Histogram { bins })
}

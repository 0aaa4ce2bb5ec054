//! Maximum-likelihood channel estimators and finite-size worst-case bounds.
//!
//! The dealer regresses output on input, X_B = t·X_M + X_N with
//! t = sqrt(η_e T / 2), so over a fluctuating channel the moment-based
//! estimators are
//!
//!   T̂ = [E(√T)]²,
//!   ε̂ = (E(T)/[E(√T)]²)(V_T + V_M + ε) − (V_T + V_M),
//!   V̂_ε = E(T)(V_T + V_M + ε) − [E(√T)]²(V_T + V_M),
//!   V̂_N = 1 + v_el + (η_e/2)E(T)(V_T + V_M + ε) − (η_e/2)[E(√T)]² V_M.
//!
//! The Jensen gap E(T) ≥ [E(√T)]² makes ε̂ ≥ ε, with equality only on a
//! deterministic channel — fluctuations, natural or attack-induced, show up
//! as estimated excess noise. Worst-case bounds widen the estimates by
//! Z·σ with the statistical variances of the estimators.

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};

/// Channel estimate for one link: moment-based estimators plus the
/// finite-size worst-case bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    /// T̂ = [E(√T)]².
    pub t_hat: f64,
    /// ε̂ (SNU).
    pub eps_hat: f64,
    /// Aggregated-noise variance V̂_N (SNU).
    pub v_n_hat: f64,
    /// Excess-noise variance estimate V̂_ε = T·ε estimator (SNU).
    pub v_eps_hat: f64,
    /// Std of T̂.
    pub sigma_t: f64,
    /// Std of V̂_ε.
    pub sigma_v_eps: f64,
    /// Worst-case transmittance T̂ − Z·σ_T, floored at 0.
    pub t_min: f64,
    /// Worst-case noise variance V̂_ε + Z·σ_Vε.
    pub v_eps_max: f64,
    /// Estimation block size m.
    pub m: f64,
}

impl ChannelEstimate {
    /// ε at the worst case, converting the variance bound back through
    /// V_ε = T·ε. None when T_min clamped to 0 (abort).
    pub fn eps_worst_case(&self) -> Option<f64> {
        (self.t_min > 0.0).then(|| self.v_eps_max / self.t_min)
    }
}

/// T̂ = [E(√T)]².
pub fn estimate_transmittance(e_sqrt_t: f64) -> Result<f64> {
    if !(e_sqrt_t >= 0.0) {
        return Err(Error::domain(format!(
            "E[sqrt T] must be >= 0 (got {e_sqrt_t})"
        )));
    }
    Ok(e_sqrt_t * e_sqrt_t)
}

/// ε̂ from the channel moments and the true excess noise entering the data.
pub fn estimate_excess_noise(
    e_t: f64,
    e_sqrt_t: f64,
    v_t: f64,
    v_m: f64,
    eps_true: f64,
) -> Result<f64> {
    if e_sqrt_t <= 0.0 {
        return Err(Error::domain(format!(
            "E[sqrt T] must be > 0 for the excess-noise estimator (got {e_sqrt_t})"
        )));
    }
    Ok(e_t / (e_sqrt_t * e_sqrt_t) * (v_t + v_m + eps_true) - (v_t + v_m))
}

/// V̂_ε, the estimator of V_ε = T·ε.
pub fn estimate_noise_variance(
    e_t: f64,
    e_sqrt_t: f64,
    v_t: f64,
    v_m: f64,
    eps_true: f64,
) -> f64 {
    e_t * (v_t + v_m + eps_true) - e_sqrt_t * e_sqrt_t * (v_t + v_m)
}

/// V̂_N, the aggregated-noise variance at the dealer.
pub fn aggregated_noise_variance(
    e_t: f64,
    e_sqrt_t: f64,
    eps_true: f64,
    config: &ProtocolConfig,
) -> f64 {
    1.0 + config.v_el
        + config.eta_e / 2.0 * e_t * (config.v_t + config.v_m + eps_true)
        - config.eta_e / 2.0 * e_sqrt_t * e_sqrt_t * config.v_m
}

/// Sample-based ML estimators for paired (input, output) realizations:
/// t̂ = ΣM·B / ΣM², V̂_N = (1/m)Σ(B − t̂M)².
pub fn empirical_estimators(samples_m: &[f64], samples_b: &[f64]) -> Result<(f64, f64)> {
    if samples_m.len() != samples_b.len() {
        return Err(Error::domain(format!(
            "sample vectors differ in length: {} vs {}",
            samples_m.len(),
            samples_b.len()
        )));
    }
    if samples_m.is_empty() {
        return Err(Error::domain("empty sample vectors".to_string()));
    }
    let (mut mb, mut mm) = (0.0, 0.0);
    for (m, b) in samples_m.iter().zip(samples_b) {
        mb += m * b;
        mm += m * m;
    }
    if mm == 0.0 {
        return Err(Error::domain(
            "degenerate input: all modulation samples are zero".to_string(),
        ));
    }
    let t_hat = mb / mm;
    let inv = 1.0 / samples_m.len() as f64;
    let v_n = samples_m
        .iter()
        .zip(samples_b)
        .map(|(m, b)| {
            let r = b - t_hat * m;
            r * r
        })
        .sum::<f64>()
        * inv;
    Ok((t_hat, v_n))
}

/// Statistical widths and worst-case bounds:
///   σ²_T = (8/m)T̂²(1 + V̂_N/(η_e T̂ V_M)),
///   σ²_Vε = σ²_T V_T² + (8/(m η_e²)) V̂_N²,
///   T_min = max(0, T̂ − Z σ_T),  V_ε,max = V̂_ε + Z σ_Vε.
pub fn worst_case_bounds(
    t_hat: f64,
    v_eps_hat: f64,
    v_n_hat: f64,
    config: &ProtocolConfig,
) -> Result<(f64, f64, f64, f64)> {
    if !(config.m >= 1.0) {
        return Err(Error::domain(format!(
            "estimation block m must be >= 1 (got {})",
            config.m
        )));
    }
    if !(t_hat > 0.0 && config.v_m > 0.0) {
        return Err(Error::domain(format!(
            "worst-case bounds need T_hat > 0 and V_M > 0 (got {t_hat}, {})",
            config.v_m
        )));
    }
    let m = config.m;
    let sigma_t2 = 8.0 / m * t_hat * t_hat * (1.0 + v_n_hat / (config.eta_e * t_hat * config.v_m));
    let sigma_v2 =
        sigma_t2 * config.v_t * config.v_t + 8.0 / (m * config.eta_e * config.eta_e) * v_n_hat * v_n_hat;
    let sigma_t = sigma_t2.sqrt();
    let sigma_v = sigma_v2.sqrt();
    let t_min = (t_hat - config.z_pe * sigma_t).max(0.0);
    let v_eps_max = v_eps_hat + config.z_pe * sigma_v;
    Ok((t_min, v_eps_max, sigma_t, sigma_v))
}

/// Full estimate for one link from its transmittance moments and the true
/// excess noise of the channel.
pub fn channel_estimate(
    e_t: f64,
    e_sqrt_t: f64,
    eps_true: f64,
    config: &ProtocolConfig,
) -> Result<ChannelEstimate> {
    let t_hat = estimate_transmittance(e_sqrt_t)?;
    let eps_hat = estimate_excess_noise(e_t, e_sqrt_t, config.v_t, config.v_m, eps_true)?;
    let v_eps_hat = estimate_noise_variance(e_t, e_sqrt_t, config.v_t, config.v_m, eps_true);
    let v_n_hat = aggregated_noise_variance(e_t, e_sqrt_t, eps_true, config);
    let (t_min, v_eps_max, sigma_t, sigma_v_eps) =
        worst_case_bounds(t_hat, v_eps_hat, v_n_hat, config)?;
    Ok(ChannelEstimate {
        t_hat,
        eps_hat,
        v_n_hat,
        v_eps_hat,
        sigma_t,
        sigma_v_eps,
        t_min,
        v_eps_max,
        m: config.m,
    })
}

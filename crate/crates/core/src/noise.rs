//! Local-local-oscillator excess-noise budget for one link.
//!
//! Four contributions on top of the original per-participant noise ε₀, all
//! referred to the link's channel input:
//!
//!   ε_AM = (1/⟨T₁⟩) Σᵢ ⟨Tᵢ⟩·10·V_M·10^(−0.1 d_dB,i)       modulator leakage,
//!   ε_LE = (2E_R²/⟨T₁⟩) Σᵢ ⟨Tᵢ⟩·10^(−0.1(R_e,i + R_p,i))   phase-reference leakage,
//!   ε_LO = V_M (χ₁ + 1) / E_R²                             phase error,
//!   ε_CF = var(√T₁)·V_M                                    fluctuation noise,
//!
//! with χ₁ = 1/T₁ − 1 + ε₀ + (2 − η_e + 2v_el)/(η_e T₁) the total noise on
//! the phase reference. ε_LE grows and ε_LO shrinks with the reference
//! intensity E_R², so their sum has the closed-form minimum
//!
//!   E_R,opt² = sqrt( T₁ V_M (χ₁ + 1) / (2 Σᵢ ⟨Tᵢ⟩ 10^(−0.1(R_e+R_p))) ),
//!
//! at which the two terms are equal.

use serde::{Deserialize, Serialize};

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::turbulence::TransmittanceStats;

/// How χ₁ is evaluated over the fluctuating transmittance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chi1Strategy {
    /// χ₁(⟨T₁⟩): evaluate at the mean transmittance (the paper's replacement
    /// of ε₁ by ⟨ε₁⟩ applied at the mean).
    #[default]
    MeanTransmittance,
    /// ⟨χ₁(T)⟩: average χ₁ over the raw transmittance samples.
    SampleAverage,
}

/// Decomposed excess-noise budget (all SNU).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    pub eps_0: f64,
    pub eps_am: f64,
    pub eps_le: f64,
    pub eps_lo: f64,
    pub eps_cf: f64,
    /// ⟨ε₁⟩ = ε₀ + ε_AM + ε_LE + ε_LO + ε_CF.
    pub total: f64,
    /// Phase-reference intensity E_R² used for ε_LE/ε_LO.
    pub e_r2: f64,
    /// Reference total noise χ₁.
    pub chi_1: f64,
}

/// Modulation noise ε_AM referred to the reference link's input.
pub fn modulation_noise(t_means: &[f64], mean_t1: f64, v_m: f64, d_db: &[f64]) -> Result<f64> {
    if mean_t1 <= 0.0 {
        return Err(Error::domain(format!(
            "mean transmittance of the reference link must be > 0 (got {mean_t1})"
        )));
    }
    if t_means.len() != d_db.len() {
        return Err(Error::domain(format!(
            "per-link lists differ in length: {} transmittances vs {} d_dB entries",
            t_means.len(),
            d_db.len()
        )));
    }
    let alpha_smax2 = 10.0 * v_m;
    let sum: f64 = t_means
        .iter()
        .zip(d_db)
        .map(|(t, d)| t * alpha_smax2 * 10f64.powf(-0.1 * d))
        .sum();
    Ok(sum / mean_t1)
}

/// Photon-leakage noise ε_LE from the phase reference.
pub fn leakage_noise(
    e_r2: f64,
    t_means: &[f64],
    mean_t1: f64,
    r_e: &[f64],
    r_p: &[f64],
) -> Result<f64> {
    if mean_t1 <= 0.0 {
        return Err(Error::domain(format!(
            "mean transmittance of the reference link must be > 0 (got {mean_t1})"
        )));
    }
    if e_r2 < 0.0 {
        return Err(Error::domain(format!("E_R² must be >= 0 (got {e_r2})")));
    }
    if t_means.len() != r_e.len() || t_means.len() != r_p.len() {
        return Err(Error::domain(
            "per-link lists differ in length for leakage noise".to_string(),
        ));
    }
    Ok(2.0 * e_r2 / mean_t1 * extinction_sum(t_means, r_e, r_p))
}

fn extinction_sum(t_means: &[f64], r_e: &[f64], r_p: &[f64]) -> f64 {
    t_means
        .iter()
        .zip(r_e.iter().zip(r_p))
        .map(|(t, (re, rp))| t * 10f64.powf(-0.1 * (re + rp)))
        .sum()
}

/// Total noise χ₁ imposed on the phase reference at transmittance `t1`.
pub fn reference_total_noise(t1: f64, eps_0: f64, eta_e: f64, v_el: f64) -> Result<f64> {
    if t1 <= 0.0 {
        return Err(Error::domain(format!(
            "reference transmittance must be > 0 (got {t1})"
        )));
    }
    Ok(1.0 / t1 - 1.0 + eps_0 + (2.0 - eta_e + 2.0 * v_el) / (eta_e * t1))
}

/// LO phase noise ε_LO = V_M(χ₁ + 1)/E_R².
pub fn lo_noise(v_m: f64, e_r2: f64, chi_1: f64) -> Result<f64> {
    if e_r2 <= 0.0 {
        return Err(Error::domain(format!("E_R² must be > 0 (got {e_r2})")));
    }
    Ok(v_m * (chi_1 + 1.0) / e_r2)
}

/// Closed-form E_R² minimizing ε_LE + ε_LO.
pub fn optimal_reference_amplitude(
    mean_t1: f64,
    t_means: &[f64],
    v_m: f64,
    chi_1: f64,
    r_e: &[f64],
    r_p: &[f64],
) -> Result<f64> {
    if mean_t1 <= 0.0 || v_m < 0.0 {
        return Err(Error::domain(format!(
            "optimal reference amplitude needs T1 > 0 and V_M >= 0 (got {mean_t1}, {v_m})"
        )));
    }
    let s = extinction_sum(t_means, r_e, r_p);
    if s <= 0.0 {
        return Err(Error::domain(
            "zero extinction-weighted transmittance sum".to_string(),
        ));
    }
    Ok((mean_t1 * v_m * (chi_1 + 1.0) / (2.0 * s)).sqrt())
}

/// Fluctuation noise ε_CF = var(√T)·V_M.
pub fn fluctuation_noise(stats: &TransmittanceStats, v_m: f64) -> f64 {
    fluctuation_noise_from_moments(stats.mean_t, stats.mean_sqrt_t, v_m)
}

/// ε_CF from raw moments: (E[T] − E[√T]²)·V_M, floored at 0.
pub fn fluctuation_noise_from_moments(e_t: f64, e_sqrt_t: f64, v_m: f64) -> f64 {
    (e_t - e_sqrt_t * e_sqrt_t).max(0.0) * v_m
}

/// Assemble the full budget ⟨ε₁⟩ for a reference link with moments
/// (`e_t1`, `e_sqrt_t1`), given every link's mean transmittance.
///
/// `t_means[0]` is replaced by `e_t1` so scenario-adjusted moments flow into
/// the sums consistently (the i = 1 term of ε_AM cancels against the 1/⟨T₁⟩
/// prefactor either way). `e_r2_override` pins E_R² instead of the optimum;
/// `samples` enables the `SampleAverage` χ₁ strategy.
#[allow(clippy::too_many_arguments)]
pub fn total_excess_noise(
    e_t1: f64,
    e_sqrt_t1: f64,
    t_means: &[f64],
    samples: Option<&[f64]>,
    config: &ProtocolConfig,
    chi1_strategy: Chi1Strategy,
    e_r2_override: Option<f64>,
) -> Result<NoiseBudget> {
    if e_t1 <= 0.0 {
        return Err(Error::domain(format!(
            "reference-link mean transmittance must be > 0 (got {e_t1})"
        )));
    }
    let mut t_means = t_means.to_vec();
    if !t_means.is_empty() {
        t_means[0] = e_t1;
    }
    let d_db = config.d_db_vec();
    let r_e = config.r_e_vec();
    let r_p = config.r_p_vec();

    let chi_1 = match chi1_strategy {
        Chi1Strategy::MeanTransmittance => {
            reference_total_noise(e_t1, config.eps_0, config.eta_e, config.v_el)?
        }
        Chi1Strategy::SampleAverage => {
            let samples = samples.ok_or_else(|| {
                Error::domain(
                    "chi1 sample-average strategy requires transmittance samples".to_string(),
                )
            })?;
            let mut acc = 0.0;
            let mut count = 0usize;
            for &t in samples {
                if t > 0.0 {
                    acc += reference_total_noise(t, config.eps_0, config.eta_e, config.v_el)?;
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::domain(
                    "no positive transmittance samples for chi1 average".to_string(),
                ));
            }
            acc / count as f64
        }
    };

    let eps_am = modulation_noise(&t_means, e_t1, config.v_m, &d_db)?;
    let e_r2 = match e_r2_override {
        Some(v) => {
            if v <= 0.0 {
                return Err(Error::domain(format!("E_R² override must be > 0 (got {v})")));
            }
            v
        }
        None => optimal_reference_amplitude(e_t1, &t_means, config.v_m, chi_1, &r_e, &r_p)?,
    };
    let eps_le = leakage_noise(e_r2, &t_means, e_t1, &r_e, &r_p)?;
    let eps_lo = lo_noise(config.v_m, e_r2, chi_1)?;
    let eps_cf = fluctuation_noise_from_moments(e_t1, e_sqrt_t1, config.v_m);
    let total = config.eps_0 + eps_am + eps_le + eps_lo + eps_cf;
    Ok(NoiseBudget {
        eps_0: config.eps_0,
        eps_am,
        eps_le,
        eps_lo,
        eps_cf,
        total,
        e_r2,
        chi_1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{combined_moments, per_scenario_moments, AttackSpec};

    fn cfg() -> ProtocolConfig {
        ProtocolConfig::default()
    }

    #[test]
    fn modulation_noise_cases() {
        // Single link: the T/T1 ratio cancels.
        let e = modulation_noise(&[0.3], 0.3, 0.6, &[30.0]).unwrap();
        assert!((e - 10.0 * 0.6 * 1e-3).abs() < 1e-15);
        // Five equal links at V_M = 0.6, d = 30 dB: 5·6·10^-3 = 0.03.
        let e = modulation_noise(&[0.4; 5], 0.4, 0.6, &[30.0; 5]).unwrap();
        assert!((e - 0.03).abs() < 1e-15);
        // Perfect modulator.
        let e = modulation_noise(&[0.4; 5], 0.4, 0.6, &[1e6; 5]).unwrap();
        assert!(e < 1e-15);
        assert!(modulation_noise(&[0.4], 0.0, 0.6, &[30.0]).is_err());
    }

    #[test]
    fn leakage_noise_cases() {
        assert_eq!(
            leakage_noise(0.0, &[0.4; 5], 0.4, &[30.0; 5], &[30.0; 5]).unwrap(),
            0.0
        );
        // n = 5 equal links, R_e = R_p = 30 dB, E_R² = 100: 2·100·5·10^-6.
        let e = leakage_noise(100.0, &[0.4; 5], 0.4, &[30.0; 5], &[30.0; 5]).unwrap();
        assert!((e - 1e-3).abs() < 1e-15);
        // Linear in E_R².
        let e2 = leakage_noise(200.0, &[0.4; 5], 0.4, &[30.0; 5], &[30.0; 5]).unwrap();
        assert!((e2 - 2.0 * e).abs() < 1e-15);
    }

    #[test]
    fn reference_noise_substitutions() {
        // T = 1, eps0 = 0, eta_e = 1, v_el = 0 -> 1/1 - 1 + 0 + 1 = 1.
        assert!((reference_total_noise(1.0, 0.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        // Table-1 detector: (2 - 0.5 + 0.2)/0.5 = 3.4 per unit 1/T.
        let chi = reference_total_noise(1.0, 0.0, 0.5, 0.1).unwrap();
        assert!((chi - 3.4).abs() < 1e-15);
        // Strictly decreasing in T.
        let mut prev = f64::INFINITY;
        for k in 1..=10 {
            let t = k as f64 / 10.0;
            let c = reference_total_noise(t, 0.01, 0.5, 0.1).unwrap();
            assert!(c < prev);
            prev = c;
        }
        assert!(reference_total_noise(0.0, 0.01, 0.5, 0.1).is_err());
    }

    #[test]
    fn lo_noise_cases() {
        assert_eq!(lo_noise(0.0, 10.0, 5.0).unwrap(), 0.0);
        assert!((lo_noise(0.6, 100.0, 10.0).unwrap() - 0.066).abs() < 1e-15);
        assert!(lo_noise(0.6, 1e12, 10.0).unwrap() < 1e-11);
        assert!(lo_noise(0.6, 0.0, 10.0).is_err());
    }

    #[test]
    fn optimum_beats_grid_and_balances_terms() {
        let t_means = [0.33, 0.52, 0.77, 0.95, 1.0];
        let (r_e, r_p) = ([40.0; 5], [40.0; 5]);
        let chi = reference_total_noise(0.33, 0.01, 0.5, 0.1).unwrap();
        let opt = optimal_reference_amplitude(0.33, &t_means, 0.6, chi, &r_e, &r_p).unwrap();
        let sum_at = |e_r2: f64| {
            leakage_noise(e_r2, &t_means, 0.33, &r_e, &r_p).unwrap()
                + lo_noise(0.6, e_r2, chi).unwrap()
        };
        let best = sum_at(opt);
        // AM-GM stationarity: the two branches are equal at the optimum.
        let le = leakage_noise(opt, &t_means, 0.33, &r_e, &r_p).unwrap();
        let lo = lo_noise(0.6, opt, chi).unwrap();
        assert!((le - lo).abs() <= 1e-12 * le.max(lo));
        // Log-spaced grid never beats the closed form.
        for k in 0..=1000 {
            let f = 10f64.powf(-2.0 + 4.0 * k as f64 / 1000.0);
            assert!(
                sum_at(opt * f) >= best * (1.0 - 1e-12),
                "grid point {f} beats optimum"
            );
        }
        // Scaling downstream T by 4 halves the optimum.
        let scaled: Vec<f64> = t_means
            .iter()
            .enumerate()
            .map(|(i, t)| if i == 0 { *t } else { 4.0 * t })
            .collect();
        let opt_scaled =
            optimal_reference_amplitude(0.33, &scaled, 0.6, chi, &r_e, &r_p).unwrap();
        // Not exactly 1/2 because the i = 0 term also sits in the sum.
        let s0 = extinction_sum(&t_means, &r_e, &r_p);
        let s1 = extinction_sum(&scaled, &r_e, &r_p);
        assert!((opt_scaled / opt - (s0 / s1).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fluctuation_noise_cases() {
        assert_eq!(fluctuation_noise_from_moments(0.25, 0.5, 0.6), 0.0);
        // Two-point channel: (0.34 - 0.25)·0.6 = 0.054.
        let e = fluctuation_noise_from_moments(0.34, 0.5, 0.6);
        assert!((e - 0.054).abs() < 1e-15);
        assert_eq!(
            fluctuation_noise_from_moments(0.34, 0.5, 1.2),
            2.0 * fluctuation_noise_from_moments(0.34, 0.5, 0.6)
        );
    }

    #[test]
    fn budget_is_sum_of_components() {
        let c = cfg();
        let t_means = [0.33, 0.52, 0.77, 0.95, 1.0];
        let b = total_excess_noise(
            0.33,
            0.55,
            &t_means,
            None,
            &c,
            Chi1Strategy::MeanTransmittance,
            None,
        )
        .unwrap();
        assert!(
            (b.total - (b.eps_0 + b.eps_am + b.eps_le + b.eps_lo + b.eps_cf)).abs() < 1e-15
        );
        assert!(b.eps_am >= 0.0 && b.eps_le >= 0.0 && b.eps_lo >= 0.0 && b.eps_cf >= 0.0);
        // Component-free limit: only eps_0 remains.
        let c0 = ProtocolConfig {
            v_m: 0.0,
            d_db: 1e9,
            r_e: 1e9,
            r_p: 1e9,
            ..c
        };
        let b0 = total_excess_noise(
            0.33,
            0.33f64.sqrt(),
            &t_means,
            None,
            &c0,
            Chi1Strategy::MeanTransmittance,
            Some(1.0),
        )
        .unwrap();
        assert!((b0.total - 0.01).abs() < 1e-12);
    }

    #[test]
    fn attacked_budgets_are_ordered() {
        // ntu <= combined <= tu with the caption attack parameters, across
        // the V_M range.
        let t_means = [0.33, 0.52, 0.77, 0.95, 1.0];
        let spec = AttackSpec::default();
        let m = per_scenario_moments((0.33, 0.555), &spec).unwrap();
        let (ct, cs) = combined_moments(&m);
        for k in 0..=20 {
            let v_m = 0.1 + 4.9 * k as f64 / 20.0;
            let c = ProtocolConfig {
                v_m,
                ..ProtocolConfig::default()
            };
            let budget = |(e_t, e_s): (f64, f64)| {
                total_excess_noise(
                    e_t,
                    e_s,
                    &t_means,
                    None,
                    &c,
                    Chi1Strategy::MeanTransmittance,
                    None,
                )
                .unwrap()
                .total
            };
            let e_tu = budget(m.scenario(0));
            let e_ntu = budget(m.scenario(3));
            let e_c = budget((ct, cs));
            assert!(
                e_ntu <= e_c && e_c <= e_tu,
                "ordering failed at V_M = {v_m}: {e_ntu} {e_c} {e_tu}"
            );
        }
    }

    #[test]
    fn budget_nonnegative_over_random_configs() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = 1 + (rng.random::<f64>() * 8.0) as usize;
            let c = ProtocolConfig {
                n,
                v_m: rng.random::<f64>() * 5.0,
                eps_0: rng.random::<f64>() * 0.05,
                d_db: 20.0 + rng.random::<f64>() * 60.0,
                r_e: 20.0 + rng.random::<f64>() * 40.0,
                r_p: 20.0 + rng.random::<f64>() * 40.0,
                ..ProtocolConfig::default()
            };
            let e_sqrt: f64 = 0.2 + 0.7 * rng.random::<f64>();
            let e_t = (e_sqrt * e_sqrt * (1.0 + 0.2 * rng.random::<f64>())).min(1.0);
            let t_means: Vec<f64> = (0..n).map(|_| 0.1 + 0.9 * rng.random::<f64>()).collect();
            let b = total_excess_noise(
                e_t,
                e_sqrt,
                &t_means,
                None,
                &c,
                Chi1Strategy::MeanTransmittance,
                None,
            )
            .unwrap();
            for (name, v) in [
                ("eps_am", b.eps_am),
                ("eps_le", b.eps_le),
                ("eps_lo", b.eps_lo),
                ("eps_cf", b.eps_cf),
                ("total", b.total),
            ] {
                assert!(v >= 0.0 && v.is_finite(), "{name} = {v} for {c:?}");
            }
        }
    }

    #[test]
    fn chi1_sample_average_strategy() {
        let c = cfg();
        let samples = vec![0.2, 0.3, 0.4, 0.5];
        let b = total_excess_noise(
            0.35,
            0.55,
            &[0.35; 5],
            Some(&samples),
            &c,
            Chi1Strategy::SampleAverage,
            None,
        )
        .unwrap();
        let mean_chi: f64 = samples
            .iter()
            .map(|&t| reference_total_noise(t, c.eps_0, c.eta_e, c.v_el).unwrap())
            .sum::<f64>()
            / samples.len() as f64;
        assert!((b.chi_1 - mean_chi).abs() < 1e-12);
        // Averaged chi1 exceeds chi1 at the mean (convexity in 1/T).
        let at_mean = reference_total_noise(0.35, c.eps_0, c.eta_e, c.v_el).unwrap();
        assert!(b.chi_1 > at_mean);
        assert!(total_excess_noise(
            0.35,
            0.55,
            &[0.35; 5],
            None,
            &c,
            Chi1Strategy::SampleAverage,
            None
        )
        .is_err());
    }
}

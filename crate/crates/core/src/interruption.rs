//! Communication-interruption probability from angle-of-arrival fluctuations.
//!
//! Beam wander makes the focus jitter on the receiving fiber plane; if it
//! falls outside the fiber core the link drops. Per link,
//!
//!   P = 1 − ∫_{−d_cor/2}^{d_cor/2} N(0, D_f²⟨θ²⟩; x) dx,
//!   ⟨θ²⟩ = ⟨x₀²⟩ / d²,
//!
//! evaluated through the error function. The system survives only if every
//! link does, so the non-interruption probability is ∏(1 − P_j).

use crate::config::ChannelGeometry;
use crate::error::{Error, Result};
use crate::special::erf;

/// Per-link interruption probabilities and the system non-interruption
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct InterruptionReport {
    pub per_link: Vec<f64>,
    pub pr_qss_non: f64,
}

/// Interruption probability of one link with centroid variance `var_x0`
/// (m²) at the link's distance `geometry.l`.
pub fn interruption_probability(geometry: &ChannelGeometry, var_x0: f64) -> Result<f64> {
    geometry.validate()?;
    if !(var_x0 >= 0.0) {
        return Err(Error::domain(format!(
            "var_x0 must be >= 0 (got {var_x0})"
        )));
    }
    let theta2 = var_x0 / (geometry.l * geometry.l);
    let sigma = geometry.d_f * theta2.sqrt();
    if sigma == 0.0 {
        return Ok(0.0);
    }
    // Gaussian mass inside [-d_cor/2, d_cor/2]: erf(half-width / (sigma sqrt(2))).
    let captured = erf(geometry.d_cor / 2.0 / (sigma * std::f64::consts::SQRT_2));
    Ok((1.0 - captured).clamp(0.0, 1.0))
}

/// Non-interruption probability of the whole system: ∏(1 − P_j).
pub fn qss_noninterruption(per_link: &[f64]) -> Result<f64> {
    for (j, &p) in per_link.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!(
                "interruption probability out of [0,1] at link {} (got {p})",
                j + 1
            )));
        }
    }
    Ok(per_link.iter().map(|p| 1.0 - p).product())
}

//! Probabilistic combination of channel-manipulation attacks.
//!
//! The two-point-distribution attack (TDA) multiplies the channel
//! transmittance by Y ~ B(1, p); the uniform-distribution attack (UDA)
//! multiplies it by Y ~ U(μ, 1). Each fires independently with success
//! probability p_t resp. p_u, giving four scenarios (both, only-UDA,
//! only-TDA, neither) whose weights and transmittance moments combine the
//! baseline channel moments multiplicatively:
//!
//!   E(√Y_tda) = E(Y_tda) = p,
//!   E(√Y_uda) = 2(μ + √μ + 1) / (3(√μ + 1)),   E(Y_uda) = (μ + 1)/2.
//!
//! The same construction generalizes to M independent attacks: every subset
//! S fires with weight ∏_{i∈S} p_i ∏_{i∉S} (1 − p_i) and multiplies the
//! moments by the fired attacks' factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scenario order used everywhere: (tu, ou, ot, ntu).
pub const SCENARIO_LABELS: [&str; 4] = ["tu", "ou", "ot", "ntu"];

/// TDA/UDA parameters and their success probabilities, all in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSpec {
    /// TDA survival probability p of the two-point distribution B(1, p).
    pub p: f64,
    /// UDA lower bound μ of the uniform distribution U(μ, 1).
    pub mu: f64,
    /// TDA success probability.
    pub p_t: f64,
    /// UDA success probability.
    pub p_u: f64,
}

impl Default for AttackSpec {
    fn default() -> Self {
        Self {
            p: 0.8,
            mu: 0.3,
            p_t: 0.7,
            p_u: 0.6,
        }
    }
}

impl AttackSpec {
    /// A spec under which no attack ever succeeds.
    pub fn none() -> Self {
        Self {
            p: 1.0,
            mu: 1.0,
            p_t: 0.0,
            p_u: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p", self.p),
            ("mu", self.mu),
            ("p_t", self.p_t),
            ("p_u", self.p_u),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} out of [0,1] (got {v})")));
            }
        }
        Ok(())
    }
}

/// Probabilities of the four attack outcomes, in (tu, ou, ot, ntu) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioWeights {
    pub tu: f64,
    pub ou: f64,
    pub ot: f64,
    pub ntu: f64,
}

impl ScenarioWeights {
    pub fn as_array(&self) -> [f64; 4] {
        [self.tu, self.ou, self.ot, self.ntu]
    }
}

/// Per-scenario transmittance moments with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMoments {
    pub weights: ScenarioWeights,
    /// E[T] per scenario, (tu, ou, ot, ntu).
    pub e_t: [f64; 4],
    /// E[√T] per scenario.
    pub e_sqrt_t: [f64; 4],
    /// Unattacked (E[T₀], E[√T₀]).
    pub baseline: (f64, f64),
}

impl ScenarioMoments {
    /// Moments of scenario `idx` in the fixed (tu, ou, ot, ntu) order.
    pub fn scenario(&self, idx: usize) -> (f64, f64) {
        (self.e_t[idx], self.e_sqrt_t[idx])
    }
}

/// A generalized channel-manipulation attack: when it fires it multiplies
/// E[T] by `e_factor` and E[√T] by `sqrt_factor`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackModifier {
    pub name: String,
    pub success_prob: f64,
    pub e_factor: f64,
    pub sqrt_factor: f64,
}

impl AttackModifier {
    pub fn new(
        name: impl Into<String>,
        success_prob: f64,
        e_factor: f64,
        sqrt_factor: f64,
    ) -> Result<Self> {
        let m = Self {
            name: name.into(),
            success_prob,
            e_factor,
            sqrt_factor,
        };
        m.validate()?;
        Ok(m)
    }

    /// TDA as a modifier: multipliers (p, p), success probability p_t.
    pub fn tda(p: f64, p_t: f64) -> Result<Self> {
        let (e_sqrt, e) = tda_moments(p)?;
        Self::new("tda", p_t, e, e_sqrt)
    }

    /// UDA as a modifier, success probability p_u.
    pub fn uda(mu: f64, p_u: f64) -> Result<Self> {
        let (e_sqrt, e) = uda_moments(mu)?;
        Self::new("uda", p_u, e, e_sqrt)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("success_prob", self.success_prob),
            ("E[Y] factor", self.e_factor),
            ("E[sqrt Y] factor", self.sqrt_factor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!(
                    "attack {:?}: {what} out of [0,1] (got {v})",
                    self.name
                )));
            }
        }
        // The attack law itself must satisfy Cauchy-Schwarz, otherwise it
        // breaks E[sqrt T]² <= E[T] downstream.
        if self.sqrt_factor * self.sqrt_factor > self.e_factor + 1e-12 {
            return Err(Error::domain(format!(
                "attack {:?}: E[sqrt Y]² = {} > E[Y] = {}",
                self.name,
                self.sqrt_factor * self.sqrt_factor,
                self.e_factor
            )));
        }
        Ok(())
    }
}

/// One row of the 2^M scenario table from `combine_m_attacks`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRow {
    /// Bitmask of fired attacks (bit i = modifier i fired).
    pub subset: u32,
    pub weight: f64,
    pub e_t: f64,
    pub e_sqrt_t: f64,
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} out of [0,1] (got {v})")));
    }
    Ok(())
}

/// Weights of the four outcomes from independent success probabilities.
///
/// The ntu weight is formed as (1−p_t)(1−p_u): algebraically equal to
/// 1 − p_tu − p_ou − p_ot, and the product form is what makes the generic
/// M-attack path reproduce this one bit-for-bit.
pub fn scenario_weights(p_t: f64, p_u: f64) -> Result<ScenarioWeights> {
    check_prob("p_t", p_t)?;
    check_prob("p_u", p_u)?;
    Ok(ScenarioWeights {
        tu: p_t * p_u,
        ou: p_u * (1.0 - p_t),
        ot: p_t * (1.0 - p_u),
        ntu: (1.0 - p_t) * (1.0 - p_u),
    })
}

/// (E[√Y], E[Y]) of the TDA law B(1, p): both equal p.
pub fn tda_moments(p: f64) -> Result<(f64, f64)> {
    check_prob("p", p)?;
    Ok((p, p))
}

/// (E[√Y], E[Y]) of the UDA law U(μ, 1).
pub fn uda_moments(mu: f64) -> Result<(f64, f64)> {
    check_prob("mu", mu)?;
    let s = mu.sqrt();
    let e_sqrt = 2.0 * (mu + s + 1.0) / (3.0 * (s + 1.0));
    let e = (mu + 1.0) / 2.0;
    Ok((e_sqrt, e))
}

/// Per-scenario moments: the tu scenario multiplies the baseline by both
/// attack factors, ou by the UDA factor only, ot by the TDA factor only,
/// ntu is the baseline. E[T] uses the E[Y] factors, E[√T] the E[√Y] ones.
pub fn per_scenario_moments(baseline: (f64, f64), spec: &AttackSpec) -> Result<ScenarioMoments> {
    spec.validate()?;
    let (e_t0, e_sqrt_t0) = baseline;
    if !(e_t0 >= 0.0 && e_sqrt_t0 >= 0.0) {
        return Err(Error::domain(format!(
            "baseline moments must be >= 0 (got E[T] = {e_t0}, E[sqrt T] = {e_sqrt_t0})"
        )));
    }
    if e_sqrt_t0 * e_sqrt_t0 > e_t0 * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::domain(format!(
            "baseline moments violate Cauchy-Schwarz: E[sqrt T]² = {} > E[T] = {e_t0}",
            e_sqrt_t0 * e_sqrt_t0
        )));
    }
    let (tda_sqrt, tda_e) = tda_moments(spec.p)?;
    let (uda_sqrt, uda_e) = uda_moments(spec.mu)?;
    let weights = scenario_weights(spec.p_t, spec.p_u)?;
    // Products grouped TDA-first to match the subset fold in
    // combine_m_attacks exactly.
    let e_t = [
        tda_e * uda_e * e_t0,
        uda_e * e_t0,
        tda_e * e_t0,
        e_t0,
    ];
    let e_sqrt_t = [
        tda_sqrt * uda_sqrt * e_sqrt_t0,
        uda_sqrt * e_sqrt_t0,
        tda_sqrt * e_sqrt_t0,
        e_sqrt_t0,
    ];
    Ok(ScenarioMoments {
        weights,
        e_t,
        e_sqrt_t,
        baseline,
    })
}

/// Weight-averaged (E[T_c], E[√T_c]) over the four scenarios.
pub fn combined_moments(moments: &ScenarioMoments) -> (f64, f64) {
    let w = moments.weights.as_array();
    let e_t = w.iter().zip(moments.e_t).map(|(wi, m)| wi * m).sum();
    let e_sqrt = w.iter().zip(moments.e_sqrt_t).map(|(wi, m)| wi * m).sum();
    (e_t, e_sqrt)
}

/// Maximum number of combinable attacks (2^M subsets are enumerated).
pub const MAX_COMBINED_ATTACKS: usize = 20;

/// Enumerate all 2^M fired-subsets of the given attacks: subset S has weight
/// ∏_{i∈S} p_i ∏_{i∉S}(1 − p_i) and multiplies the baseline moments by the
/// fired factors. For M = 2 with [TDA, UDA] this reproduces
/// `per_scenario_moments` bit-for-bit (tu = {0,1}, ou = {1}, ot = {0},
/// ntu = {}).
pub fn combine_m_attacks(
    modifiers: &[AttackModifier],
    baseline: (f64, f64),
) -> Result<Vec<ScenarioRow>> {
    if modifiers.len() > MAX_COMBINED_ATTACKS {
        return Err(Error::domain(format!(
            "too many attacks to enumerate: {} > {MAX_COMBINED_ATTACKS}",
            modifiers.len()
        )));
    }
    for m in modifiers {
        m.validate()?;
    }
    let (e_t0, e_sqrt_t0) = baseline;
    let m = modifiers.len();
    let mut rows = Vec::with_capacity(1 << m);
    for subset in 0..(1u32 << m) {
        let mut weight = 1.0;
        let mut f_e = 1.0;
        let mut f_sqrt = 1.0;
        for (i, modifier) in modifiers.iter().enumerate() {
            if subset & (1 << i) != 0 {
                weight *= modifier.success_prob;
                f_e *= modifier.e_factor;
                f_sqrt *= modifier.sqrt_factor;
            } else {
                weight *= 1.0 - modifier.success_prob;
            }
        }
        rows.push(ScenarioRow {
            subset,
            weight,
            e_t: f_e * e_t0,
            e_sqrt_t: f_sqrt * e_sqrt_t0,
        });
    }
    Ok(rows)
}

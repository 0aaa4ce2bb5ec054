//! Protocol and simulation parameters, their defaults, and validation.
//!
//! All noise quantities are in shot-noise units (SNU). Configs are plain
//! serde structs: JSON round-trips are bit-exact for every f64 field and
//! unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::attacks::AttackSpec;
use crate::error::{Result, Violations};
use crate::qss::SimOptions;

/// Protocol-level scalars: modulation, trusted noise, detector, HABS,
/// reconciliation, and the finite-size budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    /// Number of participants (links).
    pub n: usize,
    /// Modulation variance V_M (SNU).
    pub v_m: f64,
    /// Trusted thermal noise variance V_T (SNU).
    pub v_t: f64,
    /// Original excess noise per participant ε₀ (SNU).
    pub eps_0: f64,
    /// Reconciliation efficiency η.
    pub eta: f64,
    /// Dealer detector efficiency η_e.
    pub eta_e: f64,
    /// Dealer detector electronic noise v_el (SNU).
    pub v_el: f64,
    /// HABS transmissivity T_H.
    pub t_h: f64,
    /// Modulator dynamics ratio per participant (dB). Uniform default;
    /// override per participant with `d_db_per_link`.
    pub d_db: f64,
    /// Amplitude-modulator extinction ratio per participant (dB).
    pub r_e: f64,
    /// Polarization-beam-splitter extinction ratio per participant (dB).
    pub r_p: f64,
    /// Optional per-participant overrides (length n each).
    pub d_db_per_link: Option<Vec<f64>>,
    pub r_e_per_link: Option<Vec<f64>>,
    pub r_p_per_link: Option<Vec<f64>>,
    /// Total signals N₀.
    pub n_0: f64,
    /// Key-generation signals N_g.
    pub n_g: f64,
    /// Estimation signals m.
    pub m: f64,
    /// Confidence coefficient Z_{ε_PE/2}.
    pub z_pe: f64,
    /// Parameter-estimation failure probability ε_PE.
    pub eps_pe: f64,
    /// Smoothing parameter ε̄.
    pub eps_bar: f64,
    /// Privacy-amplification failure probability ε_PA.
    pub eps_pa: f64,
    /// Raw-key alphabet dimension dim H_X.
    pub dim_h_x: u32,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n: 5,
            v_m: 0.6,
            v_t: 0.01,
            eps_0: 0.01,
            eta: 0.98,
            eta_e: 0.5,
            v_el: 0.1,
            t_h: 0.99,
            d_db: 60.0,
            r_e: 40.0,
            r_p: 40.0,
            d_db_per_link: None,
            r_e_per_link: None,
            r_p_per_link: None,
            n_0: 1e10,
            n_g: 5e9,
            m: 5e9,
            z_pe: 6.5,
            eps_pe: 1e-10,
            eps_bar: 1e-10,
            eps_pa: 1e-10,
            dim_h_x: 2,
        }
    }
}

impl ProtocolConfig {
    /// Check every invariant; reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::new();
        v.check(self.n >= 1, format!("n >= 1 violated (got {})", self.n));
        for (name, val) in [
            ("V_M", self.v_m),
            ("V_T", self.v_t),
            ("eps_0", self.eps_0),
            ("v_el", self.v_el),
        ] {
            v.check(
                val >= 0.0 && val.is_finite(),
                format!("{name} must be >= 0 (got {val})"),
            );
        }
        for (name, val) in [("eta", self.eta), ("eta_e", self.eta_e), ("T_H", self.t_h)] {
            v.check(
                val > 0.0 && val <= 1.0,
                format!("{name} out of (0,1] (got {val})"),
            );
        }
        for (name, val) in [("d_dB", self.d_db), ("R_e", self.r_e), ("R_p", self.r_p)] {
            v.check(val >= 0.0, format!("{name} must be >= 0 dB (got {val})"));
        }
        for (name, vec) in [
            ("d_dB_per_link", &self.d_db_per_link),
            ("R_e_per_link", &self.r_e_per_link),
            ("R_p_per_link", &self.r_p_per_link),
        ] {
            if let Some(xs) = vec {
                v.check(
                    xs.len() == self.n,
                    format!("{name} length {} != n = {}", xs.len(), self.n),
                );
                v.check(
                    xs.iter().all(|x| *x >= 0.0),
                    format!("{name} entries must be >= 0 dB"),
                );
            }
        }
        for (name, val) in [("N_0", self.n_0), ("N_g", self.n_g), ("m", self.m)] {
            v.check(val >= 0.0, format!("{name} must be >= 0 (got {val})"));
        }
        v.check(
            self.n_g + self.m <= self.n_0,
            format!(
                "N_g + m <= N_0 violated (N_g = {}, m = {}, N_0 = {})",
                self.n_g, self.m, self.n_0
            ),
        );
        v.check(self.z_pe > 0.0, format!("Z must be > 0 (got {})", self.z_pe));
        for (name, val) in [
            ("eps_PE", self.eps_pe),
            ("eps_bar", self.eps_bar),
            ("eps_PA", self.eps_pa),
        ] {
            v.check(
                val > 0.0 && val < 1.0,
                format!("{name} out of (0,1) (got {val})"),
            );
        }
        v.check(
            self.dim_h_x >= 1,
            format!("dim_HX must be >= 1 (got {})", self.dim_h_x),
        );
        v.into_result()
    }

    /// EPR-picture variance V = 1 + V_M + V_T.
    pub fn epr_variance(&self) -> f64 {
        1.0 + self.v_m + self.v_t
    }

    /// Per-participant modulator dynamics (dB), expanded to length n.
    pub fn d_db_vec(&self) -> Vec<f64> {
        self.per_link(&self.d_db_per_link, self.d_db)
    }

    /// Per-participant amplitude extinction ratios (dB), length n.
    pub fn r_e_vec(&self) -> Vec<f64> {
        self.per_link(&self.r_e_per_link, self.r_e)
    }

    /// Per-participant polarization extinction ratios (dB), length n.
    pub fn r_p_vec(&self) -> Vec<f64> {
        self.per_link(&self.r_p_per_link, self.r_p)
    }

    fn per_link(&self, overrides: &Option<Vec<f64>>, uniform: f64) -> Vec<f64> {
        match overrides {
            Some(xs) => xs.clone(),
            None => vec![uniform; self.n],
        }
    }
}

/// Beam, telescope and link geometry for the elliptic-beam channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelGeometry {
    /// Wavelength λ (m).
    pub lambda: f64,
    /// Initial beam radius W₀ (m).
    pub w_0: f64,
    /// Receiving aperture radius r (m).
    pub r: f64,
    /// Fiber core diameter d_cor (m).
    pub d_cor: f64,
    /// Focal length of the collecting lens D_f (m).
    pub d_f: f64,
    /// Propagation distance L (m).
    pub l: f64,
    /// Refraction structure parameter C_n² (m^(-2/3)).
    pub cn2: f64,
}

impl Default for ChannelGeometry {
    fn default() -> Self {
        Self {
            lambda: 1.55e-6,
            w_0: 0.06,
            r: 0.1,
            d_cor: 9e-6,
            d_f: 0.22,
            l: 8000.0,
            cn2: 3e-15,
        }
    }
}

impl ChannelGeometry {
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::new();
        for (name, val) in [
            ("lambda", self.lambda),
            ("W_0", self.w_0),
            ("r", self.r),
            ("d_cor", self.d_cor),
            ("D_f", self.d_f),
            ("L", self.l),
        ] {
            v.check(
                val > 0.0 && val.is_finite(),
                format!("{name} must be > 0 (got {val})"),
            );
        }
        v.check(
            self.cn2 >= 0.0 && self.cn2.is_finite(),
            format!("Cn2 must be >= 0 (got {})", self.cn2),
        );
        v.into_result()
    }

    /// Optical wave number k = 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda
    }

    /// The same geometry at a different propagation distance.
    pub fn at_distance(&self, l: f64) -> Self {
        Self { l, ..self.clone() }
    }
}

/// Table-style defaults: protocol parameters and the flagship geometry.
pub fn default_config() -> (ProtocolConfig, ChannelGeometry) {
    (ProtocolConfig::default(), ChannelGeometry::default())
}

/// A complete run configuration as read from a JSON config file. Every
/// section is optional and defaults apply; unknown keys are an error.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub protocol: ProtocolConfig,
    pub geometry: ChannelGeometry,
    pub attack: AttackSpec,
    pub simulation: SimOptions,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        self.geometry.validate()?;
        self.attack.validate()?;
        self.simulation.validate()?;
        Ok(())
    }
}

//! Scenario configuration files.
//!
//! TOML, every key optional; missing keys take the reference-scenario values
//! (N = 6, K = 4, M = 64, P_T = 40 dBm, beta = 30 dB, -80 dBm receiver noise,
//! -70 dBm amplifier noise, BS-RIS 50 m, users at 2 m and 20 m).
//!
//! ```toml
//! n_elements = 64
//! bits = "inf"          # or an integer >= 1
//! trials = 50
//!
//! [sweep]
//! p_t_dbm = [10, 20, 30, 40, 50]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use dfris_core::channel::{
    default_user_positions, Direction, LinkPathLoss, PathLossParams, Point3, ScenarioGeometry,
};
use dfris_core::optimizer::OptimizerConfig;
use dfris_core::system::{NoiseAndGainParams, Resolution};
use dfris_core::units::{db_to_linear, dbm_to_watts};
use serde::Deserialize;

use crate::error::ConfigError;

/// Phase resolution as written in a config: an integer bit count or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum BitsSetting {
    Finite(u32),
    Named(InfTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl BitsSetting {
    pub fn resolution(self) -> Resolution {
        match self {
            BitsSetting::Finite(b) => Resolution::Bits(b),
            BitsSetting::Named(InfTag::Inf) => Resolution::Continuous,
        }
    }
}

impl Default for BitsSetting {
    fn default() -> Self {
        BitsSetting::Named(InfTag::Inf)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub bs_position: Point3,
    pub ris_position: Point3,
    /// Explicit user coordinates; when absent users are laid out from the two distances.
    pub user_positions: Option<Vec<Point3>>,
    pub near_user_distance_m: f64,
    pub far_user_distance_m: f64,
    pub horn_offsets: [Point3; 2],
    pub element_spacing: f64,
    pub carrier_wavelength_m: f64,
    /// `[azimuth, elevation]` of the BS-RIS LoS path at the BS, degrees.
    pub los_departure_deg: [f64; 2],
    /// `[azimuth, elevation]` of the BS-RIS LoS path at the RIS, degrees.
    pub los_arrival_deg: [f64; 2],
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = ScenarioGeometry::default_layout(1, 1, 2);
        Self {
            bs_position: g.bs_position,
            ris_position: g.ris_position,
            user_positions: None,
            near_user_distance_m: 2.0,
            far_user_distance_m: 20.0,
            horn_offsets: g.horn_offsets,
            element_spacing: g.element_spacing,
            carrier_wavelength_m: g.carrier_wavelength,
            los_departure_deg: [0.0, 0.0],
            los_arrival_deg: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossConfig {
    pub c0_db: f64,
    pub d0_m: f64,
    pub kappa: f64,
}

impl From<PathLossConfig> for PathLossParams {
    fn from(p: PathLossConfig) -> Self {
        PathLossParams {
            c0_db: p.c0_db,
            d0_m: p.d0_m,
            kappa: p.kappa,
        }
    }
}

impl Default for PathLossConfig {
    fn default() -> Self {
        Self {
            c0_db: -30.0,
            d0_m: 1.0,
            kappa: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub bs_ris: PathLossConfig,
    pub bs_ris_rician_factor_db: f64,
    pub ris_user: PathLossConfig,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            bs_ris: PathLossConfig {
                kappa: 2.5,
                ..Default::default()
            },
            bs_ris_rician_factor_db: 3.0,
            ris_user: PathLossConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub outer_max_iters: usize,
    pub outer_rel_tol: f64,
    pub mm_max_iters: usize,
    pub mm_rel_tol: f64,
    pub bisection_power_tol: f64,
    pub bisection_mu_bracket_growth: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            outer_max_iters: d.outer_max_iters,
            outer_rel_tol: d.outer_rel_tol,
            mm_max_iters: d.mm_max_iters,
            mm_rel_tol: d.mm_rel_tol,
            bisection_power_tol: d.bisection_power_tol,
            bisection_mu_bracket_growth: d.bisection_mu_bracket_growth,
        }
    }
}

/// A sweep value: a number, or `"inf"` for the `bits` parameter.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Named(InfTag),
}

impl std::fmt::Display for SweepValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Named(InfTag::Inf) => write!(f, "inf"),
        }
    }
}

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    PtDbm,
    BetaDb,
    NElements,
    Bits,
    NAntennas,
    NUsers,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 6] = [
        SweepParameter::PtDbm,
        SweepParameter::BetaDb,
        SweepParameter::NElements,
        SweepParameter::Bits,
        SweepParameter::NAntennas,
        SweepParameter::NUsers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::PtDbm => "p_t_dbm",
            SweepParameter::BetaDb => "beta_db",
            SweepParameter::NElements => "n_elements",
            SweepParameter::Bits => "bits",
            SweepParameter::NAntennas => "n_antennas",
            SweepParameter::NUsers => "n_users",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<SweepValue>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    n_antennas: usize,
    n_users: usize,
    n_elements: usize,
    p_t_dbm: f64,
    beta_db: f64,
    bits: BitsSetting,
    noise_dbm: f64,
    amp_noise_dbm: f64,
    trials: usize,
    base_seed: u64,
    geometry: GeometryConfig,
    path_loss: LinkConfig,
    optimizer: OptimizerSettings,
    sweep: BTreeMap<String, Vec<SweepValue>>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            n_antennas: 6,
            n_users: 4,
            n_elements: 64,
            p_t_dbm: 40.0,
            beta_db: 30.0,
            bits: BitsSetting::default(),
            noise_dbm: -80.0,
            amp_noise_dbm: -70.0,
            trials: 50,
            base_seed: 0,
            geometry: GeometryConfig::default(),
            path_loss: LinkConfig::default(),
            optimizer: OptimizerSettings::default(),
            sweep: BTreeMap::new(),
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_elements: usize,
    pub p_t_dbm: f64,
    pub beta_db: f64,
    pub bits: BitsSetting,
    /// Receiver noise power at every user, dBm.
    pub noise_dbm: f64,
    /// Amplifier thermal noise power, dBm.
    pub amp_noise_dbm: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub geometry: GeometryConfig,
    pub path_loss: LinkConfig,
    pub optimizer: OptimizerSettings,
    pub sweep: Option<Sweep>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let sweep = match raw.sweep.len() {
        0 => None,
        1 => {
            let (name, values) = raw.sweep.into_iter().next().expect("one entry");
            let parameter = SweepParameter::parse(&name).ok_or_else(|| {
                let known: Vec<_> = SweepParameter::ALL.iter().map(|p| p.name()).collect();
                invalid(&format!("sweep.{name}"), format!("unknown parameter (expected one of {})", known.join(", ")))
            })?;
            Some(Sweep { parameter, values })
        }
        _ => return Err(invalid("sweep", "exactly one parameter may be swept")),
    };
    let config = ScenarioConfig {
        n_antennas: raw.n_antennas,
        n_users: raw.n_users,
        n_elements: raw.n_elements,
        p_t_dbm: raw.p_t_dbm,
        beta_db: raw.beta_db,
        bits: raw.bits,
        noise_dbm: raw.noise_dbm,
        amp_noise_dbm: raw.amp_noise_dbm,
        trials: raw.trials,
        base_seed: raw.base_seed,
        geometry: raw.geometry,
        path_loss: raw.path_loss,
        optimizer: raw.optimizer,
        sweep,
    };
    config.validate()?;
    if let Some(sweep) = &config.sweep {
        if sweep.values.is_empty() {
            return Err(invalid(&format!("sweep.{}", sweep.parameter.name()), "no values given"));
        }
        for v in &sweep.values {
            config.with_sweep_value(sweep.parameter, *v)?;
        }
    }
    Ok(config)
}

fn as_count(field: &str, v: SweepValue) -> Result<usize, ConfigError> {
    match v {
        SweepValue::Number(x) if x >= 1.0 && x.fract() == 0.0 && x < 1e9 => Ok(x as usize),
        _ => Err(invalid(field, format!("expected a positive integer, got {v}"))),
    }
}

fn as_real(field: &str, v: SweepValue) -> Result<f64, ConfigError> {
    match v {
        SweepValue::Number(x) if x.is_finite() => Ok(x),
        _ => Err(invalid(field, format!("expected a finite number, got {v}"))),
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("n_antennas", self.n_antennas),
            ("n_elements", self.n_elements),
            ("trials", self.trials),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        if self.n_users < 2 {
            return Err(invalid(
                "n_users",
                format!("need at least 2 users (reflect-served plus the relay user), got {}", self.n_users),
            ));
        }
        if let BitsSetting::Finite(0) = self.bits {
            return Err(invalid("bits", "must be at least 1 or \"inf\""));
        }
        for (field, v) in [
            ("p_t_dbm", self.p_t_dbm),
            ("beta_db", self.beta_db),
            ("noise_dbm", self.noise_dbm),
            ("amp_noise_dbm", self.amp_noise_dbm),
        ] {
            if !v.is_finite() {
                return Err(invalid(field, "must be a finite dB value"));
            }
        }
        if let Some(users) = &self.geometry.user_positions {
            if users.len() != self.n_users {
                return Err(invalid(
                    "geometry.user_positions",
                    format!("{} positions for n_users = {}", users.len(), self.n_users),
                ));
            }
        }
        for (field, v) in [
            ("geometry.near_user_distance_m", self.geometry.near_user_distance_m),
            ("geometry.far_user_distance_m", self.geometry.far_user_distance_m),
            ("geometry.element_spacing", self.geometry.element_spacing),
            ("geometry.carrier_wavelength_m", self.geometry.carrier_wavelength_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be positive"));
            }
        }
        self.geometry_model()
            .validate()
            .map_err(|e| invalid("geometry", e.to_string()))?;
        for (field, pl) in [
            ("path_loss.bs_ris", self.path_loss.bs_ris),
            ("path_loss.ris_user", self.path_loss.ris_user),
        ] {
            PathLossParams::from(pl)
                .validate()
                .map_err(|e| invalid(field, e.to_string()))?;
        }
        if self.path_loss.bs_ris_rician_factor_db.is_nan() {
            return Err(invalid("path_loss.bs_ris_rician_factor_db", "must be a number"));
        }
        self.optimizer_config(0)
            .validate()
            .map_err(|e| invalid("optimizer", e.to_string()))?;
        self.params().map_err(|e| invalid("p_t_dbm", e.to_string()))?;
        Ok(())
    }

    /// Copy of this scenario with one parameter overridden.
    pub fn with_sweep_value(&self, parameter: SweepParameter, value: SweepValue) -> Result<Self, ConfigError> {
        let mut c = self.clone();
        let field = format!("sweep.{}", parameter.name());
        match parameter {
            SweepParameter::PtDbm => c.p_t_dbm = as_real(&field, value)?,
            SweepParameter::BetaDb => c.beta_db = as_real(&field, value)?,
            SweepParameter::NElements => c.n_elements = as_count(&field, value)?,
            SweepParameter::NAntennas => c.n_antennas = as_count(&field, value)?,
            SweepParameter::NUsers => {
                c.n_users = as_count(&field, value)?;
                if c.geometry.user_positions.is_some() {
                    return Err(invalid(&field, "cannot sweep n_users with explicit user_positions"));
                }
            }
            SweepParameter::Bits => {
                c.bits = match value {
                    SweepValue::Named(InfTag::Inf) => BitsSetting::Named(InfTag::Inf),
                    v => BitsSetting::Finite(as_count(&field, v)? as u32),
                }
            }
        }
        c.validate().map_err(|e| match e {
            ConfigError::Invalid { reason, .. } => invalid(&field, reason),
            other => other,
        })?;
        Ok(c)
    }

    pub fn geometry_model(&self) -> ScenarioGeometry {
        let g = &self.geometry;
        let deg = |a: [f64; 2]| Direction {
            azimuth: a[0].to_radians(),
            elevation: a[1].to_radians(),
        };
        ScenarioGeometry {
            bs_position: g.bs_position,
            ris_position: g.ris_position,
            user_positions: g.user_positions.clone().unwrap_or_else(|| {
                default_user_positions(g.ris_position, self.n_users, g.near_user_distance_m, g.far_user_distance_m)
            }),
            horn_offsets: g.horn_offsets,
            element_spacing: g.element_spacing,
            carrier_wavelength: g.carrier_wavelength_m,
            n_antennas: self.n_antennas,
            n_elements: self.n_elements,
            los_departure: deg(g.los_departure_deg),
            los_arrival: deg(g.los_arrival_deg),
        }
    }

    pub fn link_path_loss(&self) -> LinkPathLoss {
        LinkPathLoss {
            bs_ris: self.path_loss.bs_ris.into(),
            bs_ris_rician_factor_db: self.path_loss.bs_ris_rician_factor_db,
            ris_user: self.path_loss.ris_user.into(),
        }
    }

    pub fn params(&self) -> dfris_core::Result<NoiseAndGainParams> {
        NoiseAndGainParams::uniform(
            self.n_users,
            dbm_to_watts(self.noise_dbm),
            dbm_to_watts(self.amp_noise_dbm),
            db_to_linear(self.beta_db),
            dbm_to_watts(self.p_t_dbm),
        )
    }

    pub fn optimizer_config(&self, seed: u64) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            outer_max_iters: o.outer_max_iters,
            outer_rel_tol: o.outer_rel_tol,
            mm_max_iters: o.mm_max_iters,
            mm_rel_tol: o.mm_rel_tol,
            bisection_power_tol: o.bisection_power_tol,
            bisection_mu_bracket_growth: o.bisection_mu_bracket_growth,
            resolution: self.bits.resolution(),
            seed,
        }
    }

    /// Sweep points as `(label, scenario)` pairs; a single unlabeled point
    /// when no sweep is configured.
    pub fn sweep_points(&self) -> Result<Vec<(String, ScenarioConfig)>, ConfigError> {
        match &self.sweep {
            None => Ok(vec![(String::new(), self.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|v| Ok((v.to_string(), self.with_sweep_value(s.parameter, *v)?)))
                .collect(),
        }
    }

    pub fn sweep_name(&self) -> &'static str {
        self.sweep.as_ref().map_or("none", |s| s.parameter.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_scenario() {
        let c = parse_config("").unwrap();
        assert_eq!((c.n_antennas, c.n_users, c.n_elements), (6, 4, 64));
        assert_eq!((c.p_t_dbm, c.beta_db), (40.0, 30.0));
        assert_eq!((c.noise_dbm, c.amp_noise_dbm), (-80.0, -70.0));
        assert_eq!(c.bits.resolution(), Resolution::Continuous);
        assert_eq!(c.trials, 50);
        let pl = c.link_path_loss();
        assert_eq!(pl.bs_ris, PathLossParams { c0_db: -30.0, d0_m: 1.0, kappa: 2.5 });
        assert_eq!(pl.ris_user.kappa, 3.0);
        assert_eq!(pl.bs_ris_rician_factor_db, 3.0);
        let g = c.geometry_model();
        assert_eq!(g.ris_position, [50.0, 0.0, 0.0]);
        assert_eq!(g.user_positions.len(), 4);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn zero_users_rejected_with_field_name() {
        let err = parse_config("n_users = 0").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "n_users"), "{err}");
    }

    #[test]
    fn power_sweep_has_five_points() {
        let c = parse_config("[sweep]\np_t_dbm = [10, 20, 30, 40, 50]\n").unwrap();
        let points = c.sweep_points().unwrap();
        assert_eq!(points.len(), 5);
        assert_eq!(points[2].0, "30");
        assert_eq!(points[2].1.p_t_dbm, 30.0);
    }

    #[test]
    fn bits_sweep_accepts_inf() {
        let c = parse_config("[sweep]\nbits = [1, 2, \"inf\"]\n").unwrap();
        let points = c.sweep_points().unwrap();
        assert_eq!(points[0].1.bits.resolution(), Resolution::Bits(1));
        assert_eq!(points[2].1.bits.resolution(), Resolution::Continuous);
        assert_eq!(points[2].0, "inf");
    }

    #[test]
    fn bad_sweep_values_name_the_parameter() {
        let err = parse_config("[sweep]\nn_elements = [16, 2.5]\n").unwrap_err();
        assert!(err.to_string().contains("sweep.n_elements"), "{err}");
        let err = parse_config("[sweep]\nfoo = [1]\n").unwrap_err();
        assert!(err.to_string().contains("sweep.foo"), "{err}");
        assert!(parse_config("[sweep]\np_t_dbm = [1]\nbeta_db = [2]\n").is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config("n_users = 4\nn_elements = \"many\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_config("mystery = 1").is_err());
    }

    #[test]
    fn explicit_users_must_match_count() {
        let text = "n_users = 2\n[geometry]\nuser_positions = [[48, 0, 0], [60, 0, 0]]\n";
        assert_eq!(parse_config(text).unwrap().geometry_model().user_positions.len(), 2);
        let text = "n_users = 3\n[geometry]\nuser_positions = [[48, 0, 0], [60, 0, 0]]\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("geometry.user_positions"), "{err}");
    }

    #[test]
    fn zero_bits_rejected() {
        assert!(parse_config("bits = 0").is_err());
        assert!(parse_config("bits = \"lots\"").is_err());
        assert_eq!(parse_config("bits = 3").unwrap().bits.resolution(), Resolution::Bits(3));
    }
}

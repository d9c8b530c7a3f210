//! Scenario configuration: schema, defaults, validation, and link geometry.
//!
//! Every field is optional in the TOML file; missing fields take the default
//! system parameters (an empty file is a complete, valid scenario). The
//! `schema_version` field is written on every serialization and defaults to
//! the current version when absent on load.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{ASTRONOMICAL_UNIT, SPEED_OF_LIGHT, SUN_RADIUS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field `{field}` out of range: {message}")]
    Range { field: String, message: String },
    #[error("config io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn range_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range { field: field.to_string(), message: message.into() }
}

// ---------------------------------------------------------------------------
// Link geometry

/// Earth-orbiter to Moon-orbiter geometry. The two orbit heights extend the
/// worst-case separation beyond the body-center distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkGeometry {
    /// Closest approach: Earth-Moon distance [m].
    pub earth_moon_distance: f64,
    /// Orbit height of the Earth-side terminal [m].
    pub orbit_height_h1: f64,
    /// Orbit height of the Moon-side terminal [m].
    pub orbit_height_h2: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        Self {
            earth_moon_distance: 3.844e8,
            orbit_height_h1: 37_786_000.0,
            orbit_height_h2: 37_786_000.0,
        }
    }
}

impl LinkGeometry {
    pub fn min_distance(&self) -> f64 {
        self.earth_moon_distance
    }

    /// Longest separation: both terminals at opposite coverage edges,
    /// sqrt((d + h1 + h2)^2 + (h1 + h2)^2).
    pub fn max_distance(&self) -> f64 {
        let along = self.earth_moon_distance + self.orbit_height_h1 + self.orbit_height_h2;
        let across = self.orbit_height_h1 + self.orbit_height_h2;
        along.hypot(across)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.earth_moon_distance > 0.0) {
            return Err(range_err("link.earth_moon_distance", "must be > 0"));
        }
        if self.orbit_height_h1 < 0.0 || self.orbit_height_h2 < 0.0 {
            return Err(range_err("link.orbit_height", "heights must be >= 0"));
        }
        Ok(())
    }
}

/// Distance at uniform variate `u`: linear interpolation between the closest
/// and farthest separation. u=0 -> min, u=1 -> max, monotone in between.
pub fn sample_link_distance(geometry: &LinkGeometry, u: f64) -> Result<f64, ConfigError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(range_err("u", format!("uniform variate must lie in [0,1], got {u}")));
    }
    let lo = geometry.min_distance();
    let hi = geometry.max_distance();
    Ok(lo + u * (hi - lo))
}

// ---------------------------------------------------------------------------
// Sub-tables

/// Reflectarray geometry descriptor (the constructed aperture is derived from
/// this by `antenna::build_aperture`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    /// Desired number of unit cells; the grid-in-ellipse layout lands within 1%.
    pub target_cells: u32,
    /// Feed illumination taper exponent q_f in cos^{q_f}(theta_f).
    pub feed_exponent: f64,
    /// Unit-cell element pattern exponent q_e in cos^{q_e}(theta_e).
    pub element_exponent: f64,
    /// Focal length over aperture diameter.
    pub f_over_d: f64,
    /// Feed offset from broadside [deg] (degrees here as a human-facing knob).
    pub feed_offset_deg: f64,
    /// Uniform phase quantization of the cell phases; 0 = continuous.
    pub phase_quantization_bits: u32,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            target_cells: 10_400,
            // 6.5 would be a common taper choice but puts the broadside
            // 3 dB width 19% under the design value; 12 keeps it within 15%
            // while the gain stays inside +/-1 dB of the aperture bound.
            feed_exponent: 12.0,
            element_exponent: 1.0,
            f_over_d: 0.8,
            feed_offset_deg: 25.0,
            phase_quantization_bits: 0,
        }
    }
}

/// Solar-plasma channel knobs beyond the headline alpha/beta/omega0 scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlasmaConfig {
    /// Perpendicular Sun offset of the path, in solar radii (default: 1 AU).
    pub sun_offset_rs: f64,
    /// Rectangular-rule panel count for the phase path integral.
    pub integration_steps: u32,
    /// Multiplier bridging the relative density fluctuation n_e/(alpha*beta)
    /// to the per-panel draw; calibrated so an unmitigated X-band link loses
    /// the main lobe at alpha = 1, beta = 3e6.
    pub irregularity_gain: f64,
    /// Draw alpha per sample from `alpha_range` instead of the fixed scalar.
    pub alpha_randomized: bool,
    /// Uniform range for randomized alpha.
    pub alpha_range: [f64; 2],
}

impl Default for PlasmaConfig {
    fn default() -> Self {
        Self {
            sun_offset_rs: ASTRONOMICAL_UNIT / SUN_RADIUS,
            integration_steps: 1000,
            irregularity_gain: 2.2e10,
            alpha_randomized: false,
            alpha_range: [1.0, 10.0],
        }
    }
}

/// Celestial-scene and receiver noise knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Cosmic microwave background temperature [K].
    pub cmb_temperature: f64,
    /// Body brightness temperatures are drawn log-uniform from this range [K].
    pub body_temperature_min: f64,
    pub body_temperature_max: f64,
    /// Draw a fresh scene for every sample (default); false fixes one scene
    /// per sweep point for variance isolation.
    pub redraw_scene_per_sample: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            cmb_temperature: 2.761,
            body_temperature_min: 3.0,
            body_temperature_max: 300.0,
            redraw_scene_per_sample: true,
        }
    }
}

/// Spherical sampling grid and the pattern-integral variant switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternConfig {
    /// Polar rows; row i sits at theta = i*pi/n_theta (theta = 0 sampled).
    pub n_theta: u32,
    /// Azimuth columns; column j sits at phi = j*2pi/n_phi.
    pub n_phi: u32,
    /// Directivity numerator uses |E|^2 (standard). false reproduces the
    /// printed-form variant with an unsquared numerator.
    pub squared_numerator: bool,
    /// Beam efficiency integrates with the sin(theta) solid-angle weight.
    /// false reproduces the printed form without it.
    pub be_sin_theta: bool,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self { n_theta: 1024, n_phi: 768, squared_numerator: true, be_sin_theta: true }
    }
}

// ---------------------------------------------------------------------------
// Sweep description

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Alpha,
    Beta,
    Kappa,
    NBodies,
    ThetaS,
    TxPower,
    CarrierFrequency,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Beta => "beta",
            SweepAxis::Kappa => "kappa",
            SweepAxis::NBodies => "n-bodies",
            SweepAxis::ThetaS => "theta-s",
            SweepAxis::TxPower => "tx-power",
            SweepAxis::CarrierFrequency => "carrier-frequency",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alpha" => Some(SweepAxis::Alpha),
            "beta" => Some(SweepAxis::Beta),
            "kappa" => Some(SweepAxis::Kappa),
            "n-bodies" => Some(SweepAxis::NBodies),
            "theta-s" => Some(SweepAxis::ThetaS),
            "tx-power" => Some(SweepAxis::TxPower),
            "carrier-frequency" => Some(SweepAxis::CarrierFrequency),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Per-curve overrides for multi-curve sweeps (each curve re-runs the sweep
/// with a handful of fields replaced; everything else, including the seed
/// derivation, stays shared so curves are sample-for-sample comparable).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveOverride {
    pub label: String,
    pub steering_policy: Option<SteeringPolicy>,
    pub steering_limit: Option<f64>,
    pub fixed_steering: Option<f64>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub n_bodies: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteeringPolicy {
    /// No mitigation: the receive pattern stays at broadside.
    None,
    /// Ideal rigid pattern shift toward the arrival angle, limited to the
    /// steering range.
    ClampedIdeal,
    /// Ideal rigid shift with no range limit (scan-loss-free reference).
    UnboundedIdeal,
    /// Re-synthesized cell phase profile at the clamped steering angle,
    /// evaluated through the actual array factor (includes scan loss).
    Physical,
}

// ---------------------------------------------------------------------------
// Top-level scenario

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    /// Carrier frequency f_c [Hz].
    pub carrier_frequency: f64,
    /// Transmit power P_T [W].
    pub tx_power: f64,
    /// Transmit-side hardware distortion factor (EVM-like, dimensionless).
    pub kappa1: f64,
    /// Receive-side hardware distortion factor.
    pub kappa2: f64,
    /// Antenna efficiencies nu, (0, 1].
    pub antenna_efficiency_tx: f64,
    pub antenna_efficiency_rx: f64,
    /// Mechanical/electronic steering range bound theta_0 [rad].
    pub steering_limit: f64,
    pub steering_policy: SteeringPolicy,
    /// Optional fixed applied steering angle [rad] (used by theta-s sweeps);
    /// overrides the policy's own angle choice when set.
    pub fixed_steering: Option<f64>,
    /// Electron density index alpha (> 0): larger alpha, calmer plasma.
    pub alpha: f64,
    /// Solar plasma order-of-magnitude scale beta.
    pub beta: f64,
    /// Bound-electron resonance frequency omega_0 [rad/s].
    pub omega0: f64,
    /// Number of celestial noise bodies in the receive field of view.
    pub n_bodies: u32,
    /// Monte Carlo samples per sweep point.
    pub n_samples: u32,
    /// Master seed; every stream is derived from (seed, point, sample, purpose).
    pub rng_seed: i64,
    /// Distortion denominator uses the path-scaled aggregate (consistent with
    /// the received-signal model) instead of the printed SE form.
    pub distortion_path_scaled: bool,
    pub link: LinkGeometry,
    pub array: ArrayConfig,
    pub plasma: PlasmaConfig,
    pub noise: NoiseConfig,
    pub pattern: PatternConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveOverride>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            carrier_frequency: 1.0e10,
            tx_power: 500.0,
            kappa1: 0.0,
            kappa2: 0.0,
            antenna_efficiency_tx: 0.782,
            antenna_efficiency_rx: 0.782,
            steering_limit: std::f64::consts::PI / 36.0,
            steering_policy: SteeringPolicy::None,
            fixed_steering: None,
            alpha: 1.0,
            beta: 3.0e6,
            omega0: 1.0,
            n_bodies: 0,
            n_samples: 100,
            rng_seed: 1,
            distortion_path_scaled: false,
            link: LinkGeometry::default(),
            array: ArrayConfig::default(),
            plasma: PlasmaConfig::default(),
            noise: NoiseConfig::default(),
            pattern: PatternConfig::default(),
            sweep: None,
            curves: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    /// Carrier wavelength [m].
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Free-space wavenumber [rad/m].
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.carrier_frequency / SPEED_OF_LIGHT
    }

    pub fn master_seed(&self) -> u64 {
        self.rng_seed as u64
    }

    /// Apply one curve's overrides, returning the modified scenario.
    pub fn with_curve(&self, curve: &CurveOverride) -> ScenarioConfig {
        let mut c = self.clone();
        if let Some(p) = curve.steering_policy {
            c.steering_policy = p;
        }
        if let Some(v) = curve.steering_limit {
            c.steering_limit = v;
        }
        if curve.fixed_steering.is_some() {
            c.fixed_steering = curve.fixed_steering;
        }
        if let Some(v) = curve.kappa1 {
            c.kappa1 = v;
        }
        if let Some(v) = curve.kappa2 {
            c.kappa2 = v;
        }
        if let Some(v) = curve.alpha {
            c.alpha = v;
        }
        if let Some(v) = curve.beta {
            c.beta = v;
        }
        if let Some(v) = curve.n_bodies {
            c.n_bodies = v;
        }
        c
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(range_err(
                "schema_version",
                format!("unsupported version {}, this build reads {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if !(self.carrier_frequency > 0.0) {
            return Err(range_err("carrier_frequency", "must be > 0 Hz"));
        }
        if !(self.tx_power >= 0.0) {
            return Err(range_err("tx_power", "must be >= 0 W"));
        }
        if self.kappa1 < 0.0 {
            return Err(range_err("kappa1", "must be >= 0"));
        }
        if self.kappa2 < 0.0 {
            return Err(range_err("kappa2", "must be >= 0"));
        }
        for (name, nu) in [
            ("antenna_efficiency_tx", self.antenna_efficiency_tx),
            ("antenna_efficiency_rx", self.antenna_efficiency_rx),
        ] {
            if !(nu > 0.0 && nu <= 1.0) {
                return Err(range_err(name, format!("must lie in (0, 1], got {nu}")));
            }
        }
        if !(self.steering_limit > 0.0 && self.steering_limit <= std::f64::consts::FRAC_PI_2) {
            return Err(range_err("steering_limit", "must lie in (0, pi/2]"));
        }
        if let Some(t) = self.fixed_steering {
            if t.abs() > std::f64::consts::FRAC_PI_2 {
                return Err(range_err("fixed_steering", "|theta_s| must be <= pi/2"));
            }
        }
        if !(self.alpha > 0.0) {
            return Err(range_err("alpha", "electron density index must be > 0"));
        }
        if !(self.beta > 0.0) {
            return Err(range_err("beta", "plasma order must be > 0"));
        }
        if self.omega0 < 0.0 {
            return Err(range_err("omega0", "must be >= 0 rad/s"));
        }
        if self.n_samples < 1 {
            return Err(range_err("n_samples", "need at least one sample"));
        }
        self.link.validate()?;

        let a = &self.array;
        if a.target_cells < 1 {
            return Err(range_err("array.target_cells", "must be >= 1"));
        }
        if a.feed_exponent < 0.0 || a.element_exponent < 0.0 {
            return Err(range_err("array.exponents", "taper exponents must be >= 0"));
        }
        if !(a.f_over_d > 0.0) {
            return Err(range_err("array.f_over_d", "must be > 0"));
        }
        if !(0.0..90.0).contains(&a.feed_offset_deg) {
            return Err(range_err("array.feed_offset_deg", "must lie in [0, 90)"));
        }
        if a.phase_quantization_bits > 16 {
            return Err(range_err("array.phase_quantization_bits", "more than 16 bits is meaningless"));
        }

        let p = &self.plasma;
        if !(p.sun_offset_rs >= 1.0) {
            return Err(range_err("plasma.sun_offset_rs", "path cannot pass inside the Sun (>= 1)"));
        }
        if p.integration_steps < 1 {
            return Err(range_err("plasma.integration_steps", "must be >= 1"));
        }
        if p.irregularity_gain < 0.0 {
            return Err(range_err("plasma.irregularity_gain", "must be >= 0"));
        }
        if !(p.alpha_range[0] > 0.0 && p.alpha_range[1] >= p.alpha_range[0]) {
            return Err(range_err("plasma.alpha_range", "need 0 < min <= max"));
        }

        let n = &self.noise;
        if n.cmb_temperature < 0.0 {
            return Err(range_err("noise.cmb_temperature", "must be >= 0 K"));
        }
        if !(n.body_temperature_min > 0.0 && n.body_temperature_max >= n.body_temperature_min) {
            return Err(range_err("noise.body_temperature", "need 0 < min <= max (log-uniform draw)"));
        }

        let g = &self.pattern;
        if g.n_theta < 180 || g.n_phi < 360 {
            return Err(range_err("pattern.grid", "resolution must be at least 180 x 360"));
        }

        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(range_err("sweep.values", "axis value list must be non-empty"));
            }
            for &v in &s.values {
                if !v.is_finite() {
                    return Err(range_err("sweep.values", "values must be finite"));
                }
                match s.axis {
                    SweepAxis::Alpha | SweepAxis::Beta | SweepAxis::CarrierFrequency => {
                        if !(v > 0.0) {
                            return Err(range_err("sweep.values", format!("{} values must be > 0", s.axis.name())));
                        }
                    }
                    SweepAxis::Kappa | SweepAxis::TxPower => {
                        if v < 0.0 {
                            return Err(range_err("sweep.values", format!("{} values must be >= 0", s.axis.name())));
                        }
                    }
                    SweepAxis::NBodies => {
                        if v < 0.0 || v.fract() != 0.0 {
                            return Err(range_err("sweep.values", "n-bodies values must be non-negative integers"));
                        }
                    }
                    SweepAxis::ThetaS => {
                        if v.abs() > std::f64::consts::FRAC_PI_2 {
                            return Err(range_err("sweep.values", "|theta-s| values must be <= pi/2"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Loading

pub fn load_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    // toml's error display carries line/column context already
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
    load_config_str(&text)
}

pub fn to_toml_string(cfg: &ScenarioConfig) -> String {
    toml::to_string_pretty(cfg).expect("a validated config always serializes")
}

// ---------------------------------------------------------------------------

//! Simulation input parameters.
//!
//! The 28 user inputs are split the same way the original tool's GUI splits
//! them: 16 channel parameters and 12 antenna properties. Configs are read
//! from and written to a flat `key = value` text format, one key per line,
//! with `#` starting a comment. Omitted keys fall back to [`SimulationConfig::default`],
//! which is the 28 GHz UMi LOS 2x2 ULA link used for the MIMO-OFDM examples.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Operating scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Urban microcell.
    UMi,
    /// Urban macrocell.
    UMa,
    /// Rural macrocell.
    RMa,
}

/// Line-of-sight condition between TX and RX.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Environment {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    CoPol,
    XPol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArrayType {
    /// Uniform linear array.
    Ula,
    /// Uniform rectangular array.
    Ura,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::UMi => "UMi",
            Scenario::UMa => "UMa",
            Scenario::RMa => "RMa",
        })
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "umi" => Ok(Scenario::UMi),
            "uma" => Ok(Scenario::UMa),
            "rma" => Ok(Scenario::RMa),
            _ => Err(format!("unknown scenario '{s}' (expected UMi, UMa or RMa)")),
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Environment::Los => "LOS",
            Environment::Nlos => "NLOS",
        })
    }
}

impl FromStr for Environment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "los" => Ok(Environment::Los),
            "nlos" => Ok(Environment::Nlos),
            _ => Err(format!("unknown environment '{s}' (expected LOS or NLOS)")),
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::CoPol => "CoPol",
            Polarization::XPol => "XPol",
        })
    }
}

impl FromStr for Polarization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "copol" => Ok(Polarization::CoPol),
            "xpol" => Ok(Polarization::XPol),
            _ => Err(format!("unknown polarization '{s}' (expected CoPol or XPol)")),
        }
    }
}

impl fmt::Display for ArrayType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArrayType::Ula => "ULA",
            ArrayType::Ura => "URA",
        })
    }
}

impl FromStr for ArrayType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ula" => Ok(ArrayType::Ula),
            "ura" => Ok(ArrayType::Ura),
            _ => Err(format!("unknown array type '{s}' (expected ULA or URA)")),
        }
    }
}

/// The complete set of user inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    // Channel parameters
    pub frequency_ghz: f64,
    pub rf_bandwidth_mhz: f64,
    pub scenario: Scenario,
    pub environment: Environment,
    pub tr_distance_min_m: f64,
    pub tr_distance_max_m: f64,
    pub tx_power_dbm: f64,
    pub pressure_mbar: f64,
    pub humidity_pct: f64,
    pub temperature_c: f64,
    pub rain_rate_mmhr: f64,
    pub polarization: Polarization,
    pub foliage: bool,
    pub foliage_atten_db_per_m: f64,
    pub foliage_dist_m: f64,
    /// Cross-polarization discrimination added to the path loss under [`Polarization::XPol`].
    pub xpd_db: f64,

    // Antenna properties
    pub tx_array: ArrayType,
    pub rx_array: ArrayType,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Element spacing in wavelengths.
    pub tx_spacing_wl: f64,
    pub rx_spacing_wl: f64,
    /// Elements per row; equals the element count for a ULA.
    pub w_tx: usize,
    pub w_rx: usize,
    pub tx_az_hpbw_deg: f64,
    pub tx_el_hpbw_deg: f64,
    pub rx_az_hpbw_deg: f64,
    pub rx_el_hpbw_deg: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            frequency_ghz: 28.0,
            rf_bandwidth_mhz: 800.0,
            scenario: Scenario::UMi,
            environment: Environment::Los,
            tr_distance_min_m: 100.0,
            tr_distance_max_m: 100.0,
            tx_power_dbm: 30.0,
            pressure_mbar: 1013.25,
            humidity_pct: 50.0,
            temperature_c: 20.0,
            rain_rate_mmhr: 0.0,
            polarization: Polarization::CoPol,
            foliage: false,
            foliage_atten_db_per_m: 0.4,
            foliage_dist_m: 0.0,
            xpd_db: 25.0,
            tx_array: ArrayType::Ula,
            rx_array: ArrayType::Ula,
            n_tx: 2,
            n_rx: 2,
            tx_spacing_wl: 0.5,
            rx_spacing_wl: 0.5,
            w_tx: 2,
            w_rx: 2,
            tx_az_hpbw_deg: 10.0,
            tx_el_hpbw_deg: 10.0,
            rx_az_hpbw_deg: 10.0,
            rx_el_hpbw_deg: 10.0,
        }
    }
}

/// Every config-file key, in serialization order.
pub const CONFIG_KEYS: [&str; 28] = [
    "frequency_ghz",
    "rf_bandwidth_mhz",
    "scenario",
    "environment",
    "tr_dist_min_m",
    "tr_dist_max_m",
    "tx_power_dbm",
    "pressure_mbar",
    "humidity_pct",
    "temperature_c",
    "rain_rate_mmhr",
    "polarization",
    "foliage",
    "foliage_atten_dbm_per_m",
    "foliage_dist_m",
    "tx_array",
    "rx_array",
    "n_tx",
    "n_rx",
    "tx_spacing_wl",
    "rx_spacing_wl",
    "w_tx",
    "w_rx",
    "tx_az_hpbw_deg",
    "tx_el_hpbw_deg",
    "rx_az_hpbw_deg",
    "rx_el_hpbw_deg",
    "xpd_db",
];

/// A config-file syntax or value error, reported against its 1-based line.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: expected 'key = value'")]
    Malformed { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for '{key}': {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Malformed { line }
            | ParseError::UnknownKey { line, .. }
            | ParseError::DuplicateKey { line, .. }
            | ParseError::InvalidValue { line, .. } => *line,
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// All invariants a config violates, in field order.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration: {}", join_violations(.0))]
pub struct ValidationError(pub Vec<Violation>);

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// A [`SimulationConfig`] whose invariants have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig(SimulationConfig);

impl std::ops::Deref for ValidatedConfig {
    type Target = SimulationConfig;

    fn deref(&self) -> &SimulationConfig {
        &self.0
    }
}

impl ValidatedConfig {
    pub fn inner(&self) -> &SimulationConfig {
        &self.0
    }

    pub fn into_inner(self) -> SimulationConfig {
        self.0
    }
}

/// Path loss exponent and shadow fading standard deviation for one
/// (scenario, environment) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioDefaults {
    pub ple: f64,
    pub shadow_sigma_db: f64,
}

/// Large-scale parameter table. UMi and UMa share values.
pub fn scenario_defaults(scenario: Scenario, environment: Environment) -> ScenarioDefaults {
    let (ple, shadow_sigma_db) = match (scenario, environment) {
        (Scenario::UMi | Scenario::UMa, Environment::Los) => (2.0, 4.0),
        (Scenario::UMi | Scenario::UMa, Environment::Nlos) => (3.2, 7.0),
        (Scenario::RMa, Environment::Los) => (2.16, 4.0),
        (Scenario::RMa, Environment::Nlos) => (2.75, 8.0),
    };
    ScenarioDefaults {
        ple,
        shadow_sigma_db,
    }
}

fn check_range(
    out: &mut Vec<Violation>,
    field: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    what: &str,
    unit: &str,
) {
    if !(lo..=hi).contains(&value) {
        out.push(Violation {
            field,
            message: format!("{what} out of [{lo}, {hi}]{unit} (got {value})"),
        });
    }
}

fn check(out: &mut Vec<Violation>, field: &'static str, ok: bool, message: impl Into<String>) {
    if !ok {
        out.push(Violation {
            field,
            message: message.into(),
        });
    }
}

fn check_array(
    out: &mut Vec<Violation>,
    side: &'static str,
    kind: ArrayType,
    n: usize,
    w: usize,
    spacing: f64,
) {
    let (n_key, w_key, s_key) = match side {
        "tx" => ("n_tx", "w_tx", "tx_spacing_wl"),
        _ => ("n_rx", "w_rx", "rx_spacing_wl"),
    };
    check(out, n_key, n >= 1, "element count must be at least 1");
    match kind {
        ArrayType::Ula => check(
            out,
            w_key,
            w == n,
            format!("elements per row must equal the element count ({n}) for a ULA (got {w})"),
        ),
        ArrayType::Ura => check(
            out,
            w_key,
            w >= 1 && n % w == 0,
            format!("elements per row must divide the element count ({n}) for a URA (got {w})"),
        ),
    }
    check(
        out,
        s_key,
        spacing.is_finite() && spacing > 0.0,
        format!("element spacing must be positive (got {spacing})"),
    );
}

/// Checks every invariant and returns all violations at once.
pub fn validate(raw: &SimulationConfig) -> Result<ValidatedConfig, ValidationError> {
    let c = raw;
    let mut v = Vec::new();

    check_range(&mut v, "frequency_ghz", c.frequency_ghz, 0.5, 100.0, "frequency", " GHz");
    check_range(
        &mut v,
        "rf_bandwidth_mhz",
        c.rf_bandwidth_mhz,
        0.0,
        800.0,
        "RF bandwidth",
        " MHz",
    );
    check(
        &mut v,
        "tr_dist_min_m",
        c.tr_distance_min_m >= 1.0 && c.tr_distance_min_m.is_finite(),
        format!("T-R distance lower bound must be at least 1 m (got {})", c.tr_distance_min_m),
    );
    check(
        &mut v,
        "tr_dist_max_m",
        c.tr_distance_max_m >= c.tr_distance_min_m && c.tr_distance_max_m.is_finite(),
        format!(
            "T-R distance upper bound ({}) must not be below the lower bound ({})",
            c.tr_distance_max_m, c.tr_distance_min_m
        ),
    );
    check(&mut v, "tx_power_dbm", c.tx_power_dbm.is_finite(), "TX power must be finite");
    check(
        &mut v,
        "pressure_mbar",
        c.pressure_mbar.is_finite() && c.pressure_mbar > 0.0,
        format!("barometric pressure must be positive (got {})", c.pressure_mbar),
    );
    check_range(&mut v, "humidity_pct", c.humidity_pct, 0.0, 100.0, "humidity", " %");
    check(
        &mut v,
        "temperature_c",
        c.temperature_c.is_finite(),
        "temperature must be finite",
    );
    check(
        &mut v,
        "rain_rate_mmhr",
        c.rain_rate_mmhr.is_finite() && c.rain_rate_mmhr >= 0.0,
        format!("rain rate must be non-negative (got {})", c.rain_rate_mmhr),
    );
    check(
        &mut v,
        "foliage_atten_dbm_per_m",
        c.foliage_atten_db_per_m.is_finite() && c.foliage_atten_db_per_m >= 0.0,
        format!(
            "foliage attenuation must be non-negative (got {})",
            c.foliage_atten_db_per_m
        ),
    );
    check(
        &mut v,
        "foliage_dist_m",
        c.foliage_dist_m.is_finite() && c.foliage_dist_m >= 0.0,
        format!("foliage depth must be non-negative (got {})", c.foliage_dist_m),
    );
    check_array(&mut v, "tx", c.tx_array, c.n_tx, c.w_tx, c.tx_spacing_wl);
    check_array(&mut v, "rx", c.rx_array, c.n_rx, c.w_rx, c.rx_spacing_wl);
    check_range(&mut v, "tx_az_hpbw_deg", c.tx_az_hpbw_deg, 7.0, 360.0, "azimuth HPBW", "°");
    check_range(&mut v, "tx_el_hpbw_deg", c.tx_el_hpbw_deg, 7.0, 45.0, "elevation HPBW", "°");
    check_range(&mut v, "rx_az_hpbw_deg", c.rx_az_hpbw_deg, 7.0, 360.0, "azimuth HPBW", "°");
    check_range(&mut v, "rx_el_hpbw_deg", c.rx_el_hpbw_deg, 7.0, 45.0, "elevation HPBW", "°");
    check(
        &mut v,
        "xpd_db",
        c.xpd_db.is_finite() && c.xpd_db >= 0.0,
        format!("cross-polarization discrimination must be non-negative (got {})", c.xpd_db),
    );

    if v.is_empty() {
        Ok(ValidatedConfig(raw.clone()))
    } else {
        Err(ValidationError(v))
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<ValidatedConfig, ValidationError> {
        validate(self)
    }

    fn set(&mut self, key: &str, value: &str) -> Option<Result<(), String>> {
        fn num<T: FromStr>(s: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            s.parse::<T>().map_err(|e| format!("'{s}': {e}"))
        }
        fn flag(s: &str) -> Result<bool, String> {
            match s.to_ascii_lowercase().as_str() {
                "yes" | "true" | "on" | "1" => Ok(true),
                "no" | "false" | "off" | "0" => Ok(false),
                _ => Err(format!("'{s}' is not a yes/no flag")),
            }
        }

        let r = match key {
            "frequency_ghz" => num(value).map(|x| self.frequency_ghz = x),
            "rf_bandwidth_mhz" => num(value).map(|x| self.rf_bandwidth_mhz = x),
            "scenario" => value.parse().map(|x| self.scenario = x),
            "environment" => value.parse().map(|x| self.environment = x),
            "tr_dist_min_m" => num(value).map(|x| self.tr_distance_min_m = x),
            "tr_dist_max_m" => num(value).map(|x| self.tr_distance_max_m = x),
            "tx_power_dbm" => num(value).map(|x| self.tx_power_dbm = x),
            "pressure_mbar" => num(value).map(|x| self.pressure_mbar = x),
            "humidity_pct" => num(value).map(|x| self.humidity_pct = x),
            "temperature_c" => num(value).map(|x| self.temperature_c = x),
            "rain_rate_mmhr" => num(value).map(|x| self.rain_rate_mmhr = x),
            "polarization" => value.parse().map(|x| self.polarization = x),
            "foliage" => flag(value).map(|x| self.foliage = x),
            "foliage_atten_dbm_per_m" => num(value).map(|x| self.foliage_atten_db_per_m = x),
            "foliage_dist_m" => num(value).map(|x| self.foliage_dist_m = x),
            "tx_array" => value.parse().map(|x| self.tx_array = x),
            "rx_array" => value.parse().map(|x| self.rx_array = x),
            "n_tx" => num(value).map(|x| self.n_tx = x),
            "n_rx" => num(value).map(|x| self.n_rx = x),
            "tx_spacing_wl" => num(value).map(|x| self.tx_spacing_wl = x),
            "rx_spacing_wl" => num(value).map(|x| self.rx_spacing_wl = x),
            "w_tx" => num(value).map(|x| self.w_tx = x),
            "w_rx" => num(value).map(|x| self.w_rx = x),
            "tx_az_hpbw_deg" => num(value).map(|x| self.tx_az_hpbw_deg = x),
            "tx_el_hpbw_deg" => num(value).map(|x| self.tx_el_hpbw_deg = x),
            "rx_az_hpbw_deg" => num(value).map(|x| self.rx_az_hpbw_deg = x),
            "rx_el_hpbw_deg" => num(value).map(|x| self.rx_el_hpbw_deg = x),
            "xpd_db" => num(value).map(|x| self.xpd_db = x),
            _ => return None,
        };
        Some(r)
    }

    /// Key/value pairs in [`CONFIG_KEYS`] order. Floats use Rust's shortest
    /// round-trip formatting so that parsing the output is lossless.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let yes_no = |b: bool| if b { "yes" } else { "no" }.to_string();
        vec![
            ("frequency_ghz", self.frequency_ghz.to_string()),
            ("rf_bandwidth_mhz", self.rf_bandwidth_mhz.to_string()),
            ("scenario", self.scenario.to_string()),
            ("environment", self.environment.to_string()),
            ("tr_dist_min_m", self.tr_distance_min_m.to_string()),
            ("tr_dist_max_m", self.tr_distance_max_m.to_string()),
            ("tx_power_dbm", self.tx_power_dbm.to_string()),
            ("pressure_mbar", self.pressure_mbar.to_string()),
            ("humidity_pct", self.humidity_pct.to_string()),
            ("temperature_c", self.temperature_c.to_string()),
            ("rain_rate_mmhr", self.rain_rate_mmhr.to_string()),
            ("polarization", self.polarization.to_string()),
            ("foliage", yes_no(self.foliage)),
            ("foliage_atten_dbm_per_m", self.foliage_atten_db_per_m.to_string()),
            ("foliage_dist_m", self.foliage_dist_m.to_string()),
            ("tx_array", self.tx_array.to_string()),
            ("rx_array", self.rx_array.to_string()),
            ("n_tx", self.n_tx.to_string()),
            ("n_rx", self.n_rx.to_string()),
            ("tx_spacing_wl", self.tx_spacing_wl.to_string()),
            ("rx_spacing_wl", self.rx_spacing_wl.to_string()),
            ("w_tx", self.w_tx.to_string()),
            ("w_rx", self.w_rx.to_string()),
            ("tx_az_hpbw_deg", self.tx_az_hpbw_deg.to_string()),
            ("tx_el_hpbw_deg", self.tx_el_hpbw_deg.to_string()),
            ("rx_az_hpbw_deg", self.rx_az_hpbw_deg.to_string()),
            ("rx_el_hpbw_deg", self.rx_el_hpbw_deg.to_string()),
            ("xpd_db", self.xpd_db.to_string()),
        ]
    }
}

/// Splits `key = value` text into (line number, key, value) triples,
/// skipping blank lines and `#` comments.
pub(crate) fn key_value_lines(text: &str) -> Result<Vec<(usize, &str, &str)>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ParseError::Malformed { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ParseError::Malformed { line });
        }
        out.push((line, key, value));
    }
    Ok(out)
}

/// Parses config text. Keys not present keep their default values.
/// The result is not validated.
pub fn parse_config(text: &str) -> Result<SimulationConfig, ParseError> {
    let mut cfg = SimulationConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (line, key, value) in key_value_lines(text)? {
        if !seen.insert(key.to_string()) {
            return Err(ParseError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        match cfg.set(key, value) {
            None => {
                return Err(ParseError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
            Some(Err(reason)) => {
                return Err(ParseError::InvalidValue {
                    line,
                    key: key.to_string(),
                    reason,
                })
            }
            Some(Ok(())) => {}
        }
    }
    Ok(cfg)
}

/// Writes every key, one `key = value` line each.
pub fn serialize_config(cfg: &SimulationConfig) -> String {
    let mut s = String::new();
    for (k, v) in cfg.entries() {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_the_28ghz_example_link_and_valid() {
        let c = SimulationConfig::default();
        assert_eq!(c.frequency_ghz, 28.0);
        assert_eq!(c.rf_bandwidth_mhz, 800.0);
        assert_eq!((c.tr_distance_min_m, c.tr_distance_max_m), (100.0, 100.0));
        assert_eq!((c.n_tx, c.n_rx, c.w_tx, c.w_rx), (2, 2, 2, 2));
        assert!(validate(&c).is_ok());
        assert_eq!(CONFIG_KEYS.len(), 28);
        let keys: Vec<_> = c.entries().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, CONFIG_KEYS);
    }

    #[test]
    fn frequency_out_of_range() {
        let c = SimulationConfig {
            frequency_ghz: 150.0,
            ..Default::default()
        };
        let err = validate(&c).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].field, "frequency_ghz");
        assert!(err.0[0].message.contains("frequency out of [0.5, 100] GHz"));
    }

    #[test]
    fn elevation_hpbw_out_of_range() {
        let c = SimulationConfig {
            tx_el_hpbw_deg: 50.0,
            ..Default::default()
        };
        let err = validate(&c).unwrap_err();
        assert_eq!(err.0[0].field, "tx_el_hpbw_deg");
        assert!(err.0[0].message.contains("elevation HPBW out of [7, 45]°"));
    }

    #[test]
    fn one_violation_per_broken_invariant() {
        let c = SimulationConfig {
            frequency_ghz: 0.1,
            rf_bandwidth_mhz: 900.0,
            tr_distance_min_m: 0.5,
            rx_az_hpbw_deg: 5.0,
            n_tx: 4,
            w_tx: 3,
            tx_array: ArrayType::Ura,
            humidity_pct: f64::NAN,
            ..Default::default()
        };
        let fields: Vec<_> = validate(&c).unwrap_err().0.iter().map(|v| v.field).collect();
        assert_eq!(
            fields,
            [
                "frequency_ghz",
                "rf_bandwidth_mhz",
                "tr_dist_min_m",
                "humidity_pct",
                "w_tx",
                "rx_az_hpbw_deg"
            ]
        );
    }

    #[test]
    fn array_shape_rules() {
        let ura = SimulationConfig {
            tx_array: ArrayType::Ura,
            n_tx: 256,
            w_tx: 16,
            ..Default::default()
        };
        assert!(validate(&ura).is_ok());
        let ula_bad = SimulationConfig {
            n_rx: 3,
            w_rx: 2,
            ..Default::default()
        };
        assert_eq!(validate(&ula_bad).unwrap_err().0[0].field, "w_rx");
        let zero = SimulationConfig {
            n_rx: 0,
            w_rx: 0,
            ..Default::default()
        };
        assert_eq!(validate(&zero).unwrap_err().0[0].field, "n_rx");
    }

    #[test]
    fn bandwidth_zero_is_legal() {
        let c = SimulationConfig {
            rf_bandwidth_mhz: 0.0,
            ..Default::default()
        };
        assert!(validate(&c).is_ok());
    }

    #[test]
    fn validate_is_idempotent() {
        let v = validate(&SimulationConfig::default()).unwrap();
        assert_eq!(validate(v.inner()).unwrap(), v);
    }

    #[test]
    fn scenario_table() {
        let d = scenario_defaults(Scenario::UMi, Environment::Los);
        assert_eq!((d.ple, d.shadow_sigma_db), (2.0, 4.0));
        let d = scenario_defaults(Scenario::UMa, Environment::Los);
        assert_eq!((d.ple, d.shadow_sigma_db), (2.0, 4.0));
        let d = scenario_defaults(Scenario::UMi, Environment::Nlos);
        assert_eq!((d.ple, d.shadow_sigma_db), (3.2, 7.0));
        let d = scenario_defaults(Scenario::UMa, Environment::Nlos);
        assert_eq!((d.ple, d.shadow_sigma_db), (3.2, 7.0));
        let d = scenario_defaults(Scenario::RMa, Environment::Los);
        assert_eq!((d.ple, d.shadow_sigma_db), (2.16, 4.0));
        let d = scenario_defaults(Scenario::RMa, Environment::Nlos);
        assert_eq!((d.ple, d.shadow_sigma_db), (2.75, 8.0));
    }

    #[test]
    fn parse_overrides_defaults() {
        let c = parse_config("frequency_ghz = 28\nscenario = UMi\n").unwrap();
        assert_eq!(c.frequency_ghz, 28.0);
        assert_eq!(c.scenario, Scenario::UMi);
        let c = parse_config("# comment\n\nfrequency_ghz = 73 # trailing\nenvironment=nlos\n").unwrap();
        assert_eq!(c.frequency_ghz, 73.0);
        assert_eq!(c.environment, Environment::Nlos);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_config("frequency_ghz = abc").unwrap_err();
        assert!(matches!(e, ParseError::InvalidValue { line: 1, .. }));
        let e = parse_config("scenario = UMi\nnot a pair\n").unwrap_err();
        assert_eq!(e, ParseError::Malformed { line: 2 });
        let e = parse_config("\n\nbogus = 1\n").unwrap_err();
        assert_eq!(
            e,
            ParseError::UnknownKey {
                line: 3,
                key: "bogus".into()
            }
        );
        let e = parse_config("n_tx = 2\nn_tx = 3\n").unwrap_err();
        assert_eq!(e.line(), 2);
        let e = parse_config("n_tx = -1").unwrap_err();
        assert!(matches!(e, ParseError::InvalidValue { line: 1, .. }));
    }

    fn arb_valid_config() -> impl Strategy<Value = SimulationConfig> {
        let channel = (
            0.5f64..=100.0,
            0.0f64..=800.0,
            prop::sample::select(vec![Scenario::UMi, Scenario::UMa, Scenario::RMa]),
            any::<bool>(),
            1.0f64..500.0,
            0.0f64..500.0,
            -10.0f64..50.0,
            (900.0f64..1100.0, 0.0f64..=100.0, -30.0f64..45.0, 0.0f64..150.0),
            any::<bool>(),
            any::<bool>(),
            (0.0f64..2.0, 0.0f64..50.0, 0.0f64..40.0),
        );
        let antenna = (
            (1usize..8, 1usize..4, any::<bool>()),
            (1usize..8, 1usize..4, any::<bool>()),
            (0.1f64..2.0, 0.1f64..2.0),
            (7.0f64..=360.0, 7.0f64..=45.0, 7.0f64..=360.0, 7.0f64..=45.0),
        );
        (channel, antenna).prop_map(|(ch, an)| {
            let (f, bw, scen, los, dmin, dspan, ptx, weather, xpol, fol, (fa, fd, xpd)) = ch;
            let ((rows_t, w_t, ura_t), (rows_r, w_r, ura_r), (st, sr), (taz, tel, raz, rel)) = an;
            let (n_tx, w_tx, tx_array) = if ura_t {
                (rows_t * w_t, w_t, ArrayType::Ura)
            } else {
                (rows_t, rows_t, ArrayType::Ula)
            };
            let (n_rx, w_rx, rx_array) = if ura_r {
                (rows_r * w_r, w_r, ArrayType::Ura)
            } else {
                (rows_r, rows_r, ArrayType::Ula)
            };
            SimulationConfig {
                frequency_ghz: f,
                rf_bandwidth_mhz: bw,
                scenario: scen,
                environment: if los { Environment::Los } else { Environment::Nlos },
                tr_distance_min_m: dmin,
                tr_distance_max_m: dmin + dspan,
                tx_power_dbm: ptx,
                pressure_mbar: weather.0,
                humidity_pct: weather.1,
                temperature_c: weather.2,
                rain_rate_mmhr: weather.3,
                polarization: if xpol { Polarization::XPol } else { Polarization::CoPol },
                foliage: fol,
                foliage_atten_db_per_m: fa,
                foliage_dist_m: fd,
                xpd_db: xpd,
                tx_array,
                rx_array,
                n_tx,
                n_rx,
                tx_spacing_wl: st,
                rx_spacing_wl: sr,
                w_tx,
                w_rx,
                tx_az_hpbw_deg: taz,
                tx_el_hpbw_deg: tel,
                rx_az_hpbw_deg: raz,
                rx_el_hpbw_deg: rel,
            }
        })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(cfg in arb_valid_config()) {
            prop_assert!(validate(&cfg).is_ok());
            let text = serialize_config(&cfg);
            let back = parse_config(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(serialize_config(&back), text);
        }
    }
}

//! Model constants that are not user inputs.
//!
//! The statistical generator's distribution constants, plus optional
//! overrides of the scenario path loss exponent and shadow fading, live in a
//! versioned `key = value` parameter file separate from the 28-key config.
//! [`ModelParams::default`] matches `data/model_params.txt`.

use thiserror::Error;

use crate::config::{key_value_lines, ParseError};

pub const MODEL_PARAMS_VERSION: u32 = 1;

/// The shipped default parameter file.
pub const DEFAULT_MODEL_PARAMS: &str = include_str!("../data/model_params.txt");

/// Distribution constants for time clusters, subpaths and spatial lobes.
#[derive(Debug, Clone, PartialEq)]
pub struct SscmParams {
    /// Time cluster count is uniform on `1..=max_time_clusters`.
    pub max_time_clusters: usize,
    /// Mean of the Poisson draw for the spatial lobe count.
    pub mean_spatial_lobes: f64,
    pub max_spatial_lobes: usize,
    /// Minimum inter-cluster void interval.
    pub void_interval_ns: f64,
    /// Mean of the exponential gap added on top of the void interval.
    pub cluster_gap_mean_ns: f64,
    pub cluster_duration_mean_ns: f64,
    pub cluster_duration_max_ns: f64,
    /// Cluster power decay constant in excess delay.
    pub cluster_decay_ns: f64,
    /// Per-cluster lognormal shadowing.
    pub cluster_shadow_db: f64,
    /// Subpath count per cluster is uniform on `1..=max_subpaths`.
    pub max_subpaths: usize,
    pub subpath_decay_ns: f64,
    /// Half-width of the uniform per-subpath power variation.
    pub subpath_spread_db: f64,
    /// Lobe azimuth centers are kept at least this many degrees divided by
    /// the lobe count apart.
    pub lobe_min_separation_deg: f64,
    pub lobe_el_sigma_deg: f64,
    pub lobe_el_max_deg: f64,
    pub mpc_az_spread_deg: f64,
    pub mpc_el_spread_deg: f64,
    /// LOS direct path power fraction is uniform on `[los_fraction_min, los_fraction_max]`.
    pub los_fraction_min: f64,
    pub los_fraction_max: f64,
}

impl Default for SscmParams {
    fn default() -> Self {
        SscmParams {
            max_time_clusters: 6,
            mean_spatial_lobes: 2.0,
            max_spatial_lobes: 5,
            void_interval_ns: 25.0,
            cluster_gap_mean_ns: 10.0,
            cluster_duration_mean_ns: 20.0,
            cluster_duration_max_ns: 100.0,
            cluster_decay_ns: 50.0,
            cluster_shadow_db: 3.0,
            max_subpaths: 10,
            subpath_decay_ns: 17.0,
            subpath_spread_db: 6.0,
            lobe_min_separation_deg: 30.0,
            lobe_el_sigma_deg: 10.0,
            lobe_el_max_deg: 45.0,
            mpc_az_spread_deg: 10.0,
            mpc_el_spread_deg: 5.0,
            los_fraction_min: 0.4,
            los_fraction_max: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub version: u32,
    /// Replaces the scenario table's path loss exponent when set.
    pub ple: Option<f64>,
    /// Replaces the scenario table's shadow fading deviation when set.
    pub shadow_sigma_db: Option<f64>,
    /// Include the atmospheric attenuation term.
    pub atmosphere: bool,
    pub sscm: SscmParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            version: MODEL_PARAMS_VERSION,
            ple: None,
            shadow_sigma_db: None,
            atmosphere: true,
            sscm: SscmParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelParamsError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unsupported parameter file version {0} (expected {MODEL_PARAMS_VERSION})")]
    Version(u32),
    #[error("invalid model parameter '{key}': {reason}")]
    Invalid { key: &'static str, reason: String },
}

impl ModelParams {
    /// Parses a parameter file. Omitted keys keep their defaults.
    pub fn parse(text: &str) -> Result<ModelParams, ModelParamsError> {
        let mut p = ModelParams::default();
        for (line, key, value) in key_value_lines(text)? {
            let bad = |reason: String| ParseError::InvalidValue {
                line,
                key: key.to_string(),
                reason,
            };
            let f = || value.parse::<f64>().map_err(|e| bad(format!("'{value}': {e}")));
            let u = || value.parse::<usize>().map_err(|e| bad(format!("'{value}': {e}")));
            let opt = || -> Result<Option<f64>, ParseError> {
                if value.eq_ignore_ascii_case("auto") {
                    Ok(None)
                } else {
                    f().map(Some)
                }
            };
            let s = &mut p.sscm;
            match key {
                "version" => {
                    p.version = value.parse().map_err(|e| bad(format!("'{value}': {e}")))?;
                    if p.version != MODEL_PARAMS_VERSION {
                        return Err(ModelParamsError::Version(p.version));
                    }
                }
                "ple" => p.ple = opt()?,
                "shadow_sigma_db" => p.shadow_sigma_db = opt()?,
                "atmosphere" => {
                    p.atmosphere = match value.to_ascii_lowercase().as_str() {
                        "yes" | "true" | "on" | "1" => true,
                        "no" | "false" | "off" | "0" => false,
                        _ => return Err(bad(format!("'{value}' is not a yes/no flag")).into()),
                    }
                }
                "max_time_clusters" => s.max_time_clusters = u()?,
                "mean_spatial_lobes" => s.mean_spatial_lobes = f()?,
                "max_spatial_lobes" => s.max_spatial_lobes = u()?,
                "void_interval_ns" => s.void_interval_ns = f()?,
                "cluster_gap_mean_ns" => s.cluster_gap_mean_ns = f()?,
                "cluster_duration_mean_ns" => s.cluster_duration_mean_ns = f()?,
                "cluster_duration_max_ns" => s.cluster_duration_max_ns = f()?,
                "cluster_decay_ns" => s.cluster_decay_ns = f()?,
                "cluster_shadow_db" => s.cluster_shadow_db = f()?,
                "max_subpaths" => s.max_subpaths = u()?,
                "subpath_decay_ns" => s.subpath_decay_ns = f()?,
                "subpath_spread_db" => s.subpath_spread_db = f()?,
                "lobe_min_separation_deg" => s.lobe_min_separation_deg = f()?,
                "lobe_el_sigma_deg" => s.lobe_el_sigma_deg = f()?,
                "lobe_el_max_deg" => s.lobe_el_max_deg = f()?,
                "mpc_az_spread_deg" => s.mpc_az_spread_deg = f()?,
                "mpc_el_spread_deg" => s.mpc_el_spread_deg = f()?,
                "los_fraction_min" => s.los_fraction_min = f()?,
                "los_fraction_max" => s.los_fraction_max = f()?,
                _ => {
                    return Err(ParseError::UnknownKey {
                        line,
                        key: key.to_string(),
                    }
                    .into())
                }
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelParamsError> {
        fn req(ok: bool, key: &'static str, reason: &str) -> Result<(), ModelParamsError> {
            if ok {
                Ok(())
            } else {
                Err(ModelParamsError::Invalid {
                    key,
                    reason: reason.to_string(),
                })
            }
        }
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        let s = &self.sscm;
        if let Some(n) = self.ple {
            req(pos(n), "ple", "must be positive")?;
        }
        if let Some(sig) = self.shadow_sigma_db {
            req(nonneg(sig), "shadow_sigma_db", "must be non-negative")?;
        }
        req(s.max_time_clusters >= 1, "max_time_clusters", "must be at least 1")?;
        req(pos(s.mean_spatial_lobes), "mean_spatial_lobes", "must be positive")?;
        req(s.max_spatial_lobes >= 1, "max_spatial_lobes", "must be at least 1")?;
        req(nonneg(s.void_interval_ns), "void_interval_ns", "must be non-negative")?;
        req(pos(s.cluster_gap_mean_ns), "cluster_gap_mean_ns", "must be positive")?;
        req(pos(s.cluster_duration_mean_ns), "cluster_duration_mean_ns", "must be positive")?;
        req(pos(s.cluster_duration_max_ns), "cluster_duration_max_ns", "must be positive")?;
        req(pos(s.cluster_decay_ns), "cluster_decay_ns", "must be positive")?;
        req(nonneg(s.cluster_shadow_db), "cluster_shadow_db", "must be non-negative")?;
        req(s.max_subpaths >= 1, "max_subpaths", "must be at least 1")?;
        req(pos(s.subpath_decay_ns), "subpath_decay_ns", "must be positive")?;
        req(nonneg(s.subpath_spread_db), "subpath_spread_db", "must be non-negative")?;
        req(
            nonneg(s.lobe_min_separation_deg) && s.lobe_min_separation_deg < 360.0,
            "lobe_min_separation_deg",
            "must lie in [0, 360)",
        )?;
        req(nonneg(s.lobe_el_sigma_deg), "lobe_el_sigma_deg", "must be non-negative")?;
        req(
            nonneg(s.lobe_el_max_deg) && s.lobe_el_max_deg <= 90.0,
            "lobe_el_max_deg",
            "must lie in [0, 90]",
        )?;
        req(nonneg(s.mpc_az_spread_deg), "mpc_az_spread_deg", "must be non-negative")?;
        req(nonneg(s.mpc_el_spread_deg), "mpc_el_spread_deg", "must be non-negative")?;
        req(
            s.los_fraction_min > 0.0 && s.los_fraction_min <= s.los_fraction_max && s.los_fraction_max < 1.0,
            "los_fraction_min",
            "LOS power fraction bounds must satisfy 0 < min <= max < 1",
        )?;
        Ok(())
    }
}

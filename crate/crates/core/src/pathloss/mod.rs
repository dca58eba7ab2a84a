//! Close-in (CI) free-space reference distance path loss.
//!
//! ```text
//! PL(f, d) = FSPL(f, 1 m) + 10 n log10(d) + AT + X_sigma,   d >= 1 m
//! FSPL(f, 1 m) = 32.4 + 20 log10(f)                          f in GHz
//! AT = alpha * d
//! ```
//!
//! Also hosts the single-parameter minimum mean square error fit of the path
//! loss exponent against the FSPL anchor.

pub mod atmosphere;

pub use atmosphere::{attenuation_factor, AttenuationTable, WeatherConditions};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

pub const MIN_FREQUENCY_GHZ: f64 = 0.5;
pub const MAX_FREQUENCY_GHZ: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathLossError {
    #[error("frequency {0} GHz out of [0.5, 100] GHz")]
    FrequencyOutOfRange(f64),
    #[error("distance {0} m is below the 1 m reference distance")]
    DistanceBelowReference(f64),
    #[error("path loss fit needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("path loss fit needs at least two distinct distances")]
    DegenerateDistances,
}

/// Free-space path loss at 1 m, dB.
pub fn fspl(freq_ghz: f64) -> Result<f64, PathLossError> {
    if !(MIN_FREQUENCY_GHZ..=MAX_FREQUENCY_GHZ).contains(&freq_ghz) {
        return Err(PathLossError::FrequencyOutOfRange(freq_ghz));
    }
    Ok(32.4 + 20.0 * freq_ghz.log10())
}

/// CI path loss, dB. `atmospheric_db` and `shadow_db` are added as given.
pub fn ci_path_loss(
    freq_ghz: f64,
    distance_m: f64,
    ple: f64,
    atmospheric_db: f64,
    shadow_db: f64,
) -> Result<f64, PathLossError> {
    if !(distance_m >= 1.0) {
        return Err(PathLossError::DistanceBelowReference(distance_m));
    }
    Ok(fspl(freq_ghz)? + 10.0 * ple * distance_m.log10() + atmospheric_db + shadow_db)
}

/// One zero-mean Gaussian shadow fading draw with standard deviation `sigma_db`.
pub fn sample_shadow_fading<R: Rng + ?Sized>(sigma_db: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    if sigma_db == 0.0 {
        0.0
    } else {
        sigma_db * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathLossKind {
    Omni,
    /// Directional, one sample per pointing direction.
    Dir,
    /// Directional, strongest pointing direction only.
    DirBest,
}

impl PathLossKind {
    pub fn label(&self) -> &'static str {
        match self {
            PathLossKind::Omni => "omni",
            PathLossKind::Dir => "dir",
            PathLossKind::DirBest => "dir-best",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "omni" => Some(PathLossKind::Omni),
            "dir" => Some(PathLossKind::Dir),
            "dir-best" => Some(PathLossKind::DirBest),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossSample {
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub kind: PathLossKind,
}

impl PathLossSample {
    pub fn new(distance_m: f64, path_loss_db: f64, kind: PathLossKind) -> Result<Self, PathLossError> {
        if !(distance_m >= 1.0) {
            return Err(PathLossError::DistanceBelowReference(distance_m));
        }
        Ok(PathLossSample {
            distance_m,
            path_loss_db,
            kind,
        })
    }

    /// True when the sample is no more than six deviations below the 1 m free-space loss.
    pub fn within_sanity_band(&self, freq_ghz: f64, sigma_db: f64) -> bool {
        fspl(freq_ghz).is_ok_and(|f| self.path_loss_db >= f - 6.0 * sigma_db)
    }
}

/// Fitted path loss exponent and shadow fading deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PleFit {
    pub ple: f64,
    pub sigma_db: f64,
}

/// Least-squares CI fit with the intercept pinned at FSPL(f, 1 m).
///
/// With `A = PL - FSPL` and `B = 10 log10(d)`, the exponent is
/// `sum(A B) / sum(B^2)` and sigma is the RMS of `A - n B`.
pub fn fit_ple_mmse(samples: &[PathLossSample], freq_ghz: f64) -> Result<PleFit, PathLossError> {
    if samples.len() < 2 {
        return Err(PathLossError::TooFewSamples(samples.len()));
    }
    let first = samples[0].distance_m;
    if samples.iter().all(|s| s.distance_m == first) {
        return Err(PathLossError::DegenerateDistances);
    }
    let anchor = fspl(freq_ghz)?;
    let (mut ab, mut bb) = (0.0, 0.0);
    for s in samples {
        let a = s.path_loss_db - anchor;
        let b = 10.0 * s.distance_m.log10();
        ab += a * b;
        bb += b * b;
    }
    let ple = ab / bb;
    let sse: f64 = samples
        .iter()
        .map(|s| {
            let r = s.path_loss_db - anchor - ple * 10.0 * s.distance_m.log10();
            r * r
        })
        .sum();
    Ok(PleFit {
        ple,
        sigma_db: (sse / samples.len() as f64).sqrt(),
    })
}

//! Table-driven atmospheric attenuation.
//!
//! Specific attenuation (dB/m) is the sum of dry air, water vapor, haze and
//! rain contributions. Each is read off a digitized table at fixed reference
//! weather (1013.25 mbar, 80 % RH, 20 °C, 5 mm/hr) and interpolated linearly
//! over log-frequency. The vapor term scales linearly with relative humidity
//! and the rain term linearly with rain rate; pressure and temperature are
//! carried but do not change the result.

use thiserror::Error;

/// Reference humidity of the vapor column, percent.
pub const REFERENCE_HUMIDITY_PCT: f64 = 80.0;
/// Reference rain rate of the rain column, mm/hr.
pub const REFERENCE_RAIN_RATE_MMHR: f64 = 5.0;

const SHIPPED_TABLE: &str = include_str!("../../data/attenuation.txt");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherConditions {
    pub pressure_mbar: f64,
    pub humidity_pct: f64,
    pub temperature_c: f64,
    pub rain_rate_mmhr: f64,
}

impl WeatherConditions {
    /// Conditions at which the attenuation table was digitized.
    pub fn reference() -> Self {
        WeatherConditions {
            pressure_mbar: 1013.25,
            humidity_pct: REFERENCE_HUMIDITY_PCT,
            temperature_c: 20.0,
            rain_rate_mmhr: REFERENCE_RAIN_RATE_MMHR,
        }
    }

    pub fn validate(&self) -> Result<(), AtmosphereError> {
        let ok = self.pressure_mbar.is_finite()
            && self.temperature_c.is_finite()
            && (0.0..=100.0).contains(&self.humidity_pct)
            && self.rain_rate_mmhr.is_finite()
            && self.rain_rate_mmhr >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(AtmosphereError::InvalidWeather(*self))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtmosphereError {
    #[error("frequency {freq_ghz} GHz outside attenuation table range [{lo}, {hi}] GHz")]
    OutOfRange { freq_ghz: f64, lo: f64, hi: f64 },
    #[error("invalid weather conditions: {0:?}")]
    InvalidWeather(WeatherConditions),
    #[error("attenuation table line {line}: {reason}")]
    Table { line: usize, reason: String },
}

/// One table row. All attenuations in dB/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationRow {
    pub freq_ghz: f64,
    pub dry: f64,
    pub vapor: f64,
    pub haze: f64,
    pub rain_5mmhr: f64,
}

/// Per-term attenuation at one frequency and weather, dB/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationTerms {
    pub dry: f64,
    pub vapor: f64,
    pub haze: f64,
    pub rain: f64,
}

impl AttenuationTerms {
    pub fn total(&self) -> f64 {
        self.dry + self.vapor + self.haze + self.rain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationTable {
    rows: Vec<AttenuationRow>,
}

impl AttenuationTable {
    /// The table bundled with the crate.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_TABLE).expect("bundled attenuation table is well formed")
    }

    /// Parses whitespace-delimited rows of
    /// `freq_ghz alpha_dry alpha_vapor alpha_haze alpha_rain_5mmhr`.
    /// Lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self, AtmosphereError> {
        let mut rows: Vec<AttenuationRow> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let vals = content
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| AtmosphereError::Table {
                    line,
                    reason: e.to_string(),
                })?;
            if vals.len() != 5 {
                return Err(AtmosphereError::Table {
                    line,
                    reason: format!("expected 5 columns, found {}", vals.len()),
                });
            }
            if !(vals[0] > 0.0) || vals[1..].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(AtmosphereError::Table {
                    line,
                    reason: "frequency must be positive and attenuations non-negative".into(),
                });
            }
            if let Some(prev) = rows.last() {
                if vals[0] <= prev.freq_ghz {
                    return Err(AtmosphereError::Table {
                        line,
                        reason: "frequencies must be strictly ascending".into(),
                    });
                }
            }
            rows.push(AttenuationRow {
                freq_ghz: vals[0],
                dry: vals[1],
                vapor: vals[2],
                haze: vals[3],
                rain_5mmhr: vals[4],
            });
        }
        if rows.len() < 2 {
            return Err(AtmosphereError::Table {
                line: text.lines().count(),
                reason: "need at least two rows".into(),
            });
        }
        Ok(AttenuationTable { rows })
    }

    pub fn rows(&self) -> &[AttenuationRow] {
        &self.rows
    }

    pub fn freq_range(&self) -> (f64, f64) {
        (self.rows[0].freq_ghz, self.rows[self.rows.len() - 1].freq_ghz)
    }

    /// Interpolated table values at reference weather.
    fn lookup(&self, freq_ghz: f64) -> Result<AttenuationRow, AtmosphereError> {
        let (lo, hi) = self.freq_range();
        if !(lo..=hi).contains(&freq_ghz) {
            return Err(AtmosphereError::OutOfRange { freq_ghz, lo, hi });
        }
        // first row with freq >= target
        let j = self.rows.partition_point(|r| r.freq_ghz < freq_ghz);
        if self.rows[j].freq_ghz == freq_ghz {
            return Ok(self.rows[j]);
        }
        let (a, b) = (&self.rows[j - 1], &self.rows[j]);
        let t = (freq_ghz.ln() - a.freq_ghz.ln()) / (b.freq_ghz.ln() - a.freq_ghz.ln());
        let mix = |x: f64, y: f64| x + t * (y - x);
        Ok(AttenuationRow {
            freq_ghz,
            dry: mix(a.dry, b.dry),
            vapor: mix(a.vapor, b.vapor),
            haze: mix(a.haze, b.haze),
            rain_5mmhr: mix(a.rain_5mmhr, b.rain_5mmhr),
        })
    }

    pub fn terms(
        &self,
        freq_ghz: f64,
        weather: &WeatherConditions,
    ) -> Result<AttenuationTerms, AtmosphereError> {
        weather.validate()?;
        let row = self.lookup(freq_ghz)?;
        let rain = if weather.rain_rate_mmhr == 0.0 {
            0.0
        } else {
            row.rain_5mmhr * weather.rain_rate_mmhr / REFERENCE_RAIN_RATE_MMHR
        };
        Ok(AttenuationTerms {
            dry: row.dry,
            vapor: row.vapor * weather.humidity_pct / REFERENCE_HUMIDITY_PCT,
            haze: row.haze,
            rain,
        })
    }

    /// Total specific attenuation α in dB/m.
    pub fn attenuation_factor(
        &self,
        freq_ghz: f64,
        weather: &WeatherConditions,
    ) -> Result<f64, AtmosphereError> {
        Ok(self.terms(freq_ghz, weather)?.total())
    }
}

impl Default for AttenuationTable {
    fn default() -> Self {
        Self::shipped()
    }
}

/// α in dB/m from the shipped table.
pub fn attenuation_factor(freq_ghz: f64, weather: &WeatherConditions) -> Result<f64, AtmosphereError> {
    AttenuationTable::shipped().attenuation_factor(freq_ghz, weather)
}

//! Bandwidth-resolved power delay profiles.

use std::collections::BTreeMap;

use nalgebra::Complex;

use super::SscmError;

/// One delay bin; `power_mw` is linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdpBin {
    pub delay_ns: f64,
    pub power_mw: f64,
}

impl PdpBin {
    pub fn power_dbm(&self) -> f64 {
        10.0 * self.power_mw.log10()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    /// Non-empty bins in ascending delay order.
    pub bins: Vec<PdpBin>,
    pub bandwidth_mhz: f64,
    pub received_power_dbm: f64,
    pub rms_delay_spread_ns: f64,
}

impl PowerDelayProfile {
    /// Derives received power and RMS delay spread from the bins.
    pub fn from_bins(bins: Vec<PdpBin>, bandwidth_mhz: f64) -> Result<Self, SscmError> {
        let total: f64 = bins.iter().map(|b| b.power_mw).sum();
        let rms = rms_delay_spread(&bins)?;
        Ok(PowerDelayProfile {
            bins,
            bandwidth_mhz,
            received_power_dbm: 10.0 * total.log10(),
            rms_delay_spread_ns: rms,
        })
    }

    pub fn total_power_mw(&self) -> f64 {
        self.bins.iter().map(|b| b.power_mw).sum()
    }
}

/// Bin width in ns for an RF bandwidth in MHz; `None` for narrowband (0 MHz).
pub fn bin_width_ns(bandwidth_mhz: f64) -> Option<f64> {
    (bandwidth_mhz > 0.0).then(|| 1000.0 / bandwidth_mhz)
}

/// Grid index for `delay_ns`. Bins are anchored at 0 ns and cover
/// `[k w, (k + 1) w)`. Narrowband puts everything in bin 0.
fn bin_key(delay_ns: f64, width: Option<f64>) -> i64 {
    match width {
        Some(w) => (delay_ns / w).floor() as i64,
        None => 0,
    }
}

fn bin_delay(key: i64, width: Option<f64>, first_delay: f64) -> f64 {
    match width {
        Some(w) => key as f64 * w,
        None => first_delay,
    }
}

/// Accumulates linear powers into delay bins.
pub fn bin_powers(
    paths: impl IntoIterator<Item = (f64, f64)>,
    bandwidth_mhz: f64,
) -> Vec<PdpBin> {
    let width = bin_width_ns(bandwidth_mhz);
    let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
    let mut first = f64::INFINITY;
    for (delay, power) in paths {
        first = first.min(delay);
        *acc.entry(bin_key(delay, width)).or_insert(0.0) += power;
    }
    acc.into_iter()
        .map(|(k, p)| PdpBin {
            delay_ns: bin_delay(k, width, first),
            power_mw: p,
        })
        .collect()
}

/// Accumulates complex voltages into delay bins and converts each bin to power.
pub fn bin_voltages(
    paths: impl IntoIterator<Item = (f64, Complex<f64>)>,
    bandwidth_mhz: f64,
) -> Vec<PdpBin> {
    let width = bin_width_ns(bandwidth_mhz);
    let mut acc: BTreeMap<i64, Complex<f64>> = BTreeMap::new();
    let mut first = f64::INFINITY;
    for (delay, v) in paths {
        first = first.min(delay);
        *acc.entry(bin_key(delay, width)).or_insert(Complex::new(0.0, 0.0)) += v;
    }
    acc.into_iter()
        .map(|(k, v)| PdpBin {
            delay_ns: bin_delay(k, width, first),
            power_mw: v.norm_sqr(),
        })
        .collect()
}

/// Power-weighted standard deviation of delay, ns.
pub fn rms_delay_spread(bins: &[PdpBin]) -> Result<f64, SscmError> {
    let total: f64 = bins.iter().map(|b| b.power_mw).sum();
    if !(total > 0.0) {
        return Err(SscmError::ZeroPower);
    }
    let mean = bins.iter().map(|b| b.power_mw * b.delay_ns).sum::<f64>() / total;
    let var = bins
        .iter()
        .map(|b| b.power_mw * (b.delay_ns - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(var.max(0.0).sqrt())
}

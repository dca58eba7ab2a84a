//! MIMO-OFDM channel matrices, condition numbers and spectral efficiency.
//!
//! `H(f)[k, m]` couples TX element `m` to RX element `k`. Spacings are in
//! wavelengths and `f` is the subcarrier offset from the carrier in Hz.

use std::f64::consts::TAU;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ArrayType, ValidatedConfig};
use crate::sscm::OmniCir;

pub type C64 = Complex<f64>;
pub type ChannelMatrix = DMatrix<C64>;

/// σ_min below σ_max times this is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MimoError {
    #[error("array needs at least one element")]
    NoElements,
    #[error("elements per row {per_row} must divide element count {n}")]
    RowSize { n: usize, per_row: usize },
    #[error("element spacing must be positive and finite")]
    Spacing,
    #[error("subcarrier spacing {spacing} MHz must be in (0, {bandwidth}] MHz")]
    SpacingRange { bandwidth: f64, spacing: f64 },
    #[error("bandwidth {bandwidth} MHz is not a whole multiple of subcarrier spacing {spacing} MHz")]
    NotDivisible { bandwidth: f64, spacing: f64 },
    #[error("matrix is all zeros")]
    ZeroMatrix,
    #[error("empty input")]
    Empty,
    #[error("stream count must be at least 1 and at most min(N_t, N_r) = {max}, got {got}")]
    Streams { got: usize, max: usize },
    #[error("SNR must be non-negative, got {0}")]
    Snr(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    kind: ArrayType,
    n_elements: usize,
    per_row: usize,
    spacing_wl: f64,
}

impl ArrayGeometry {
    pub fn new(kind: ArrayType, n_elements: usize, per_row: usize, spacing_wl: f64) -> Result<Self, MimoError> {
        if n_elements == 0 {
            return Err(MimoError::NoElements);
        }
        if !(spacing_wl > 0.0 && spacing_wl.is_finite()) {
            return Err(MimoError::Spacing);
        }
        let per_row = match kind {
            ArrayType::Ula => n_elements,
            ArrayType::Ura => {
                if per_row == 0 || n_elements % per_row != 0 {
                    return Err(MimoError::RowSize { n: n_elements, per_row });
                }
                per_row
            }
        };
        Ok(ArrayGeometry {
            kind,
            n_elements,
            per_row,
            spacing_wl,
        })
    }

    pub fn ula(n_elements: usize, spacing_wl: f64) -> Result<Self, MimoError> {
        Self::new(ArrayType::Ula, n_elements, n_elements, spacing_wl)
    }

    pub fn ura(n_elements: usize, per_row: usize, spacing_wl: f64) -> Result<Self, MimoError> {
        Self::new(ArrayType::Ura, n_elements, per_row, spacing_wl)
    }

    /// TX and RX geometries from a validated config.
    pub fn from_config(cfg: &ValidatedConfig) -> Result<(Self, Self), MimoError> {
        Ok((
            Self::new(cfg.tx_array, cfg.n_tx, cfg.w_tx, cfg.tx_spacing_wl)?,
            Self::new(cfg.rx_array, cfg.n_rx, cfg.w_rx, cfg.rx_spacing_wl)?,
        ))
    }

    pub fn kind(&self) -> ArrayType {
        self.kind
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn per_row(&self) -> usize {
        self.per_row
    }

    pub fn spacing_wl(&self) -> f64 {
        self.spacing_wl
    }

    /// `(row, col)` of element `m`.
    pub fn position(&self, m: usize) -> (usize, usize) {
        (m / self.per_row, m % self.per_row)
    }

    /// Dimensionless projection `u(m, angles)` of element `m` onto the path direction.
    pub fn projection(&self, m: usize, az_deg: f64, el_deg: f64) -> f64 {
        let az = az_deg.to_radians();
        match self.kind {
            ArrayType::Ula => m as f64 * az.sin(),
            ArrayType::Ura => {
                let el = el_deg.to_radians();
                let (row, col) = self.position(m);
                col as f64 * az.sin() * el.cos() + row as f64 * el.sin()
            }
        }
    }

    /// `e^{-j 2π d u(m)}` for every element.
    pub fn steering(&self, az_deg: f64, el_deg: f64) -> Vec<C64> {
        (0..self.n_elements)
            .map(|m| C64::from_polar(1.0, -TAU * self.spacing_wl * self.projection(m, az_deg, el_deg)))
            .collect()
    }
}

/// Subcarrier offsets in Hz, from `-BW/2` to `+BW/2`. A zero bandwidth
/// yields the carrier alone.
pub fn subcarrier_grid(bandwidth_mhz: f64, spacing_mhz: f64) -> Result<Vec<f64>, MimoError> {
    if bandwidth_mhz == 0.0 {
        return Ok(vec![0.0]);
    }
    if !(spacing_mhz > 0.0 && spacing_mhz <= bandwidth_mhz) {
        return Err(MimoError::SpacingRange {
            bandwidth: bandwidth_mhz,
            spacing: spacing_mhz,
        });
    }
    let ratio = bandwidth_mhz / spacing_mhz;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio {
        return Err(MimoError::NotDivisible {
            bandwidth: bandwidth_mhz,
            spacing: spacing_mhz,
        });
    }
    let n = steps as usize;
    Ok((0..=n)
        .map(|i| (i as f64 * spacing_mhz - bandwidth_mhz / 2.0) * 1e6)
        .collect())
}

/// N_r × N_t channel matrix at one subcarrier offset.
pub fn channel_matrix(cir: &OmniCir, f_offset_hz: f64, tx: &ArrayGeometry, rx: &ArrayGeometry) -> ChannelMatrix {
    let mut h = ChannelMatrix::zeros(rx.n_elements, tx.n_elements);
    for p in &cir.mpcs {
        let g = C64::from_polar(p.power_mw.sqrt(), p.phase_rad)
            * C64::from_polar(1.0, -TAU * f_offset_hz * (p.delay_ns * 1e-9));
        let a_t = tx.steering(p.aod_az_deg, p.aod_el_deg);
        let a_r = rx.steering(p.aoa_az_deg, p.aoa_el_deg);
        for (m, at) in a_t.iter().enumerate() {
            let gt = g * at;
            for (k, ar) in a_r.iter().enumerate() {
                h[(k, m)] += gt * ar;
            }
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrixSet {
    pub offsets_hz: Vec<f64>,
    pub matrices: Vec<ChannelMatrix>,
}

impl ChannelMatrixSet {
    /// Matrices for every offset, in offset order.
    pub fn build(cir: &OmniCir, offsets_hz: &[f64], tx: &ArrayGeometry, rx: &ArrayGeometry) -> Self {
        let matrices = offsets_hz
            .par_iter()
            .map(|&f| channel_matrix(cir, f, tx, rx))
            .collect();
        ChannelMatrixSet {
            offsets_hz: offsets_hz.to_vec(),
            matrices,
        }
    }

    /// Rescales all matrices by one common factor so that their mean squared
    /// Frobenius norm is `N_t N_r`. Relative fading across subcarriers is kept.
    pub fn normalized(&self) -> Result<Self, MimoError> {
        if self.matrices.is_empty() {
            return Err(MimoError::Empty);
        }
        let mean = self.matrices.iter().map(|h| h.norm_squared()).sum::<f64>() / self.matrices.len() as f64;
        if !(mean > 0.0) {
            return Err(MimoError::ZeroMatrix);
        }
        let (r, c) = self.matrices[0].shape();
        let s = ((r * c) as f64 / mean).sqrt();
        Ok(ChannelMatrixSet {
            offsets_hz: self.offsets_hz.clone(),
            matrices: self.matrices.iter().map(|h| h * C64::new(s, 0.0)).collect(),
        })
    }
}

/// Singular values, largest first.
pub fn singular_values(h: &ChannelMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = h.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionNumber {
    Finite(f64),
    /// Numerically rank deficient.
    Infinite,
}

impl ConditionNumber {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            ConditionNumber::Finite(v) => Some(v),
            ConditionNumber::Infinite => None,
        }
    }
}

/// `20 log10(σ_max / σ_min)` in dB.
pub fn condition_number_db(h: &ChannelMatrix) -> Result<ConditionNumber, MimoError> {
    if h.is_empty() {
        return Err(MimoError::Empty);
    }
    let s = singular_values(h);
    let (max, min) = (s[0], s[s.len() - 1]);
    if !(max > 0.0) {
        return Err(MimoError::ZeroMatrix);
    }
    if min < max * RANK_TOLERANCE {
        return Ok(ConditionNumber::Infinite);
    }
    Ok(ConditionNumber::Finite(20.0 * (max / min).log10()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCdf {
    /// `(dB, cumulative probability)` at each distinct finite value, ascending.
    pub points: Vec<(f64, f64)>,
    pub infinite_count: usize,
    pub total: usize,
}

impl ConditionCdf {
    /// Empirical CDF over a pool of condition numbers. Probabilities are
    /// relative to the whole pool, so the last point sits at
    /// `finite / total`.
    pub fn from_values(values: &[ConditionNumber]) -> Self {
        let mut finite: Vec<f64> = values.iter().filter_map(|c| c.finite()).collect();
        finite.sort_by(f64::total_cmp);
        let total = values.len();
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (i, v) in finite.iter().enumerate() {
            let p = (i + 1) as f64 / total as f64;
            match points.last_mut() {
                Some(last) if last.0 == *v => last.1 = p,
                _ => points.push((*v, p)),
            }
        }
        ConditionCdf {
            infinite_count: total - finite.len(),
            points,
            total,
        }
    }

    /// Median of the full pool, with rank-deficient entries ranked above all
    /// finite ones. `Infinite` if they make up half or more.
    pub fn median(&self) -> Option<ConditionNumber> {
        let (_, median) = self.quantile_inner(0.5)?;
        Some(median)
    }

    fn quantile_inner(&self, q: f64) -> Option<(usize, ConditionNumber)> {
        if self.total == 0 {
            return None;
        }
        let target = q * self.total as f64;
        self.points
            .iter()
            .enumerate()
            .find(|(_, (_, p))| *p * self.total as f64 >= target - 1e-9)
            .map(|(i, (v, _))| (i, ConditionNumber::Finite(*v)))
            .or(Some((self.points.len(), ConditionNumber::Infinite)))
    }
}

pub fn condition_number_cdf(set: &ChannelMatrixSet) -> Result<ConditionCdf, MimoError> {
    if set.matrices.is_empty() {
        return Err(MimoError::Empty);
    }
    let values = set
        .matrices
        .par_iter()
        .map(condition_number_db)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConditionCdf::from_values(&values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PowerAllocation {
    EqualSplit,
    WaterFilling,
}

/// Water-filling powers over eigenmode gains `lambda` (descending) with total
/// power `snr`.
fn water_fill(lambda: &[f64], snr: f64) -> Vec<f64> {
    let active: Vec<f64> = lambda.iter().copied().filter(|l| *l > 0.0).collect();
    let mut power = vec![0.0; lambda.len()];
    for k in (1..=active.len()).rev() {
        let mu = (snr + active[..k].iter().map(|l| 1.0 / l).sum::<f64>()) / k as f64;
        if mu - 1.0 / active[k - 1] > 0.0 {
            for i in 0..k {
                power[i] = mu - 1.0 / active[i];
            }
            break;
        }
    }
    power
}

/// Eigenmode spectral efficiency in bits/s/Hz over the `n_streams` strongest
/// singular modes, with `snr_linear` as total transmit SNR.
pub fn spectral_efficiency(
    h: &ChannelMatrix,
    snr_linear: f64,
    n_streams: usize,
    allocation: PowerAllocation,
) -> Result<f64, MimoError> {
    let max = h.nrows().min(h.ncols());
    if n_streams == 0 || n_streams > max {
        return Err(MimoError::Streams { got: n_streams, max });
    }
    se_from_singular_values(&singular_values(h), snr_linear, n_streams, allocation)
}

/// [`spectral_efficiency`] from precomputed singular values, largest first.
pub fn se_from_singular_values(
    sv: &[f64],
    snr_linear: f64,
    n_streams: usize,
    allocation: PowerAllocation,
) -> Result<f64, MimoError> {
    if n_streams == 0 || n_streams > sv.len() {
        return Err(MimoError::Streams { got: n_streams, max: sv.len() });
    }
    if !(snr_linear >= 0.0) {
        return Err(MimoError::Snr(snr_linear));
    }
    let lambda: Vec<f64> = sv[..n_streams].iter().map(|s| s * s).collect();
    let power = match allocation {
        PowerAllocation::EqualSplit => vec![snr_linear / n_streams as f64; n_streams],
        PowerAllocation::WaterFilling => water_fill(&lambda, snr_linear),
    };
    Ok(lambda
        .iter()
        .zip(&power)
        .map(|(l, p)| (1.0 + p * l).log2())
        .sum())
}

/// Mean over subcarriers within each run, then mean over runs.
pub fn average_spectral_efficiency(
    sets: &[ChannelMatrixSet],
    snr_linear: f64,
    n_streams: usize,
    allocation: PowerAllocation,
) -> Result<f64, MimoError> {
    if sets.is_empty() || sets.iter().any(|s| s.matrices.is_empty()) {
        return Err(MimoError::Empty);
    }
    let per_run = sets
        .par_iter()
        .map(|s| {
            let total = s
                .matrices
                .iter()
                .map(|h| spectral_efficiency(h, snr_linear, n_streams, allocation))
                .sum::<Result<f64, _>>()?;
            Ok(total / s.matrices.len() as f64)
        })
        .collect::<Result<Vec<f64>, MimoError>>()?;
    Ok(per_run.iter().sum::<f64>() / per_run.len() as f64)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

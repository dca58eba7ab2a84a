//! Directional reception of an omnidirectional CIR.
//!
//! Antennas use a Gaussian main lobe parameterized by azimuth and elevation
//! half-power beamwidths, with a sidelobe floor 30 dB below boresight and a
//! boresight gain from the `41253 / (HPBW_az * HPBW_el)` directivity rule.

use std::f64::consts::{LN_2, TAU};

use nalgebra::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::sscm::{bin_powers, bin_voltages, OmniCir, PowerDelayProfile, SscmError};

/// Square degrees in a sphere, rounded.
pub const SPHERE_SQ_DEG: f64 = 41253.0;
/// Sidelobe floor relative to boresight (linear, -30 dB).
pub const SIDELOBE_FLOOR: f64 = 1e-3;

pub const MAX_AZ_HPBW: f64 = 360.0;
pub const MAX_EL_HPBW: f64 = 45.0;
pub const MIN_HPBW: f64 = 7.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirectionalError {
    #[error("azimuth HPBW {0}° out of [7, 360]°")]
    AzimuthHpbw(f64),
    #[error("elevation HPBW {0}° out of [7, 45]°")]
    ElevationHpbw(f64),
    #[error("pointing angle ({0}°, {1}°) outside azimuth [0, 360) / elevation [-90, 90]")]
    Pointing(f64, f64),
    #[error("small-scale track needs at least one element and positive spacing")]
    Track,
    #[error(transparent)]
    Sscm(#[from] SscmError),
}

/// Maps an angular offset to `(-180, 180]` degrees.
pub fn normalize_offset(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else if r >= 360.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    az_hpbw_deg: f64,
    el_hpbw_deg: f64,
    isotropic: bool,
}

impl AntennaPattern {
    /// Gaussian pattern for the given beamwidths. Beamwidths at their maxima
    /// (360° azimuth, 45° elevation) select the unity-gain isotropic pattern.
    pub fn new(az_hpbw_deg: f64, el_hpbw_deg: f64) -> Result<Self, DirectionalError> {
        if !(MIN_HPBW..=MAX_AZ_HPBW).contains(&az_hpbw_deg) {
            return Err(DirectionalError::AzimuthHpbw(az_hpbw_deg));
        }
        if !(MIN_HPBW..=MAX_EL_HPBW).contains(&el_hpbw_deg) {
            return Err(DirectionalError::ElevationHpbw(el_hpbw_deg));
        }
        Ok(AntennaPattern {
            az_hpbw_deg,
            el_hpbw_deg,
            isotropic: az_hpbw_deg >= MAX_AZ_HPBW && el_hpbw_deg >= MAX_EL_HPBW,
        })
    }

    pub fn isotropic() -> Self {
        AntennaPattern {
            az_hpbw_deg: MAX_AZ_HPBW,
            el_hpbw_deg: MAX_EL_HPBW,
            isotropic: true,
        }
    }

    pub fn az_hpbw_deg(&self) -> f64 {
        self.az_hpbw_deg
    }

    pub fn el_hpbw_deg(&self) -> f64 {
        self.el_hpbw_deg
    }

    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }

    pub fn boresight_gain(&self) -> f64 {
        if self.isotropic {
            1.0
        } else {
            SPHERE_SQ_DEG / (self.az_hpbw_deg * self.el_hpbw_deg)
        }
    }

    pub fn boresight_gain_dbi(&self) -> f64 {
        10.0 * self.boresight_gain().log10()
    }

    /// Linear gain at an angular offset from boresight.
    pub fn gain(&self, az_offset_deg: f64, el_offset_deg: f64) -> f64 {
        let g0 = self.boresight_gain();
        if self.isotropic {
            return g0;
        }
        let a = normalize_offset(az_offset_deg) / self.az_hpbw_deg;
        let e = normalize_offset(el_offset_deg) / self.el_hpbw_deg;
        g0 * (-4.0 * LN_2 * (a * a + e * e)).exp().max(SIDELOBE_FLOOR)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointingAngle {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl PointingAngle {
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Result<Self, DirectionalError> {
        if !(0.0..360.0).contains(&azimuth_deg) || !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(DirectionalError::Pointing(azimuth_deg, elevation_deg));
        }
        Ok(PointingAngle {
            azimuth_deg,
            elevation_deg,
        })
    }
}

fn tx_gain(pattern: &AntennaPattern, point: &PointingAngle, az: f64, el: f64) -> f64 {
    pattern.gain(az - point.azimuth_deg, el - point.elevation_deg)
}

/// Per-path linear power after TX and RX antenna gains, in path order.
pub fn weighted_powers(
    cir: &OmniCir,
    tx_point: &PointingAngle,
    rx_point: &PointingAngle,
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
) -> Vec<f64> {
    cir.mpcs
        .iter()
        .map(|m| {
            m.power_mw
                * tx_gain(tx_pattern, tx_point, m.aod_az_deg, m.aod_el_deg)
                * tx_gain(rx_pattern, rx_point, m.aoa_az_deg, m.aoa_el_deg)
        })
        .collect()
}

/// PDP seen with the TX and RX antennas steered to the given angles.
pub fn directional_pdp(
    cir: &OmniCir,
    tx_point: &PointingAngle,
    rx_point: &PointingAngle,
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    bandwidth_mhz: f64,
) -> Result<PowerDelayProfile, DirectionalError> {
    let w = weighted_powers(cir, tx_point, rx_point, tx_pattern, rx_pattern);
    let bins = bin_powers(cir.mpcs.iter().zip(w).map(|(m, p)| (m.delay_ns, p)), bandwidth_mhz);
    Ok(PowerDelayProfile::from_bins(bins, bandwidth_mhz)?)
}

/// Search grid for one end: azimuth in HPBW steps from 0°, elevation in
/// HPBW steps centred on the horizon, `ceil(180 / HPBW)` rows clamped to ±90°.
/// Ordered by azimuth, then elevation, both ascending.
pub fn pointing_grid(pattern: &AntennaPattern) -> Vec<PointingAngle> {
    let n_az = (360.0 / pattern.az_hpbw_deg).ceil() as usize;
    let n_el = (180.0 / pattern.el_hpbw_deg).ceil() as usize;
    let half = (n_el / 2) as f64;
    let mut grid = Vec::with_capacity(n_az * n_el);
    for i in 0..n_az {
        let az = i as f64 * pattern.az_hpbw_deg;
        for j in 0..n_el {
            let el = ((j as f64 - half) * pattern.el_hpbw_deg).clamp(-90.0, 90.0);
            grid.push(PointingAngle {
                azimuth_deg: az,
                elevation_deg: el,
            });
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestDirection {
    pub tx: PointingAngle,
    pub rx: PointingAngle,
    pub pdp: PowerDelayProfile,
}

/// Exhaustive search over both ends' pointing grids for the strongest
/// received power. Ties go to the lexicographically smallest
/// `(tx_az, tx_el, rx_az, rx_el)`.
pub fn best_direction_search(
    cir: &OmniCir,
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    bandwidth_mhz: f64,
) -> Result<BestDirection, DirectionalError> {
    let tx_grid = pointing_grid(tx_pattern);
    let rx_grid = pointing_grid(rx_pattern);
    let m = cir.mpcs.len();

    // tx gain times path power, and rx gain, laid out grid-row by path
    let tx_w: Vec<f64> = tx_grid
        .iter()
        .flat_map(|pt| {
            cir.mpcs
                .iter()
                .map(move |p| p.power_mw * tx_gain(tx_pattern, pt, p.aod_az_deg, p.aod_el_deg))
        })
        .collect();
    let rx_w: Vec<f64> = rx_grid
        .iter()
        .flat_map(|pt| {
            cir.mpcs
                .iter()
                .map(move |p| tx_gain(rx_pattern, pt, p.aoa_az_deg, p.aoa_el_deg))
        })
        .collect();

    let per_tx: Vec<(f64, usize)> = tx_w
        .par_chunks(m)
        .map(|t| {
            let mut best = (f64::NEG_INFINITY, 0);
            for (j, r) in rx_w.chunks(m).enumerate() {
                let p: f64 = t.iter().zip(r).map(|(a, b)| a * b).sum();
                if p > best.0 {
                    best = (p, j);
                }
            }
            best
        })
        .collect();
    let (mut best_i, mut best_j, mut best_p) = (0, 0, f64::NEG_INFINITY);
    for (i, &(p, j)) in per_tx.iter().enumerate() {
        if p > best_p {
            (best_i, best_j, best_p) = (i, j, p);
        }
    }

    let tx = tx_grid[best_i];
    let rx = rx_grid[best_j];
    let pdp = directional_pdp(cir, &tx, &rx, tx_pattern, rx_pattern, bandwidth_mhz)?;
    Ok(BestDirection { tx, rx, pdp })
}

/// Transmit power plus both antenna gains, minus the directional received power.
pub fn directional_path_loss(tx_power_dbm: f64, g_tx_dbi: f64, g_rx_dbi: f64, p_rx_dir_dbm: f64) -> f64 {
    tx_power_dbm + g_tx_dbi + g_rx_dbi - p_rx_dir_dbm
}

/// Omnidirectional PDPs along a linear RX track of `n_elements` spaced
/// `spacing_wl` wavelengths apart. Element `k` advances each path's phase by
/// `2π k spacing sin(az) cos(el)` of its arrival angle; paths in the same
/// delay bin add as voltages, so co-binned paths fade across the track.
/// Element 0 matches [`crate::sscm::compute_pdp`] whenever no two paths
/// share a bin.
pub fn small_scale_pdps(
    cir: &OmniCir,
    n_elements: usize,
    spacing_wl: f64,
    bandwidth_mhz: f64,
) -> Result<Vec<(f64, PowerDelayProfile)>, DirectionalError> {
    if n_elements == 0 || !(spacing_wl > 0.0) {
        return Err(DirectionalError::Track);
    }
    (0..n_elements)
        .map(|k| {
            let offset_wl = k as f64 * spacing_wl;
            let paths = cir.mpcs.iter().map(|m| {
                let (az, el) = (m.aoa_az_deg.to_radians(), m.aoa_el_deg.to_radians());
                let phase = m.phase_rad + TAU * offset_wl * az.sin() * el.cos();
                (m.delay_ns, Complex::from_polar(m.power_mw.sqrt(), phase))
            });
            let bins = bin_voltages(paths, bandwidth_mhz);
            Ok((offset_wl, PowerDelayProfile::from_bins(bins, bandwidth_mhz)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate, Environment, SimulationConfig};
    use crate::params::ModelParams;
    use crate::pathloss::AttenuationTable;
    use crate::sscm::{compute_pdp, ChannelGenerator, LargeScale, MultipathComponent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mpc(delay_ns: f64, power_mw: f64, phase: f64, aod: (f64, f64), aoa: (f64, f64)) -> MultipathComponent {
        MultipathComponent {
            delay_ns,
            power_mw,
            phase_rad: phase,
            aod_az_deg: aod.0,
            aod_el_deg: aod.1,
            aoa_az_deg: aoa.0,
            aoa_el_deg: aoa.1,
            cluster_id: 0,
            lobe_tx: 0,
            lobe_rx: 0,
        }
    }

    fn cir_of(mpcs: Vec<MultipathComponent>) -> OmniCir {
        let total: f64 = mpcs.iter().map(|m| m.power_mw).sum();
        let pl = 30.0 - 10.0 * total.log10();
        OmniCir {
            mpcs,
            distance_m: 100.0,
            tx_power_dbm: 30.0,
            omni_path_loss_db: pl,
            large_scale: LargeScale {
                ple: 2.0,
                shadow_db: 0.0,
                attenuation_db: 0.0,
                polarization_db: 0.0,
                path_loss_db: pl,
            },
            los: false,
            clusters: vec![],
            aod_lobes: vec![],
            aoa_lobes: vec![],
        }
    }

    fn random_cir(seed: u64) -> OmniCir {
        let cfg = validate(&SimulationConfig {
            environment: Environment::Nlos,
            ..Default::default()
        })
        .unwrap();
        ChannelGenerator::new(&cfg, &ModelParams::default(), &AttenuationTable::shipped())
            .unwrap()
            .generate(80.0, &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap()
    }

    #[test]
    fn gain_pattern_shape() {
        let p = AntennaPattern::new(10.0, 10.0).unwrap();
        let g0 = p.boresight_gain();
        assert_eq!(p.gain(0.0, 0.0), g0);
        assert!((p.gain(5.0, 0.0) / g0 - 0.5).abs() < 1e-12);
        assert!((p.gain(-5.0, 0.0) / g0 - 0.5).abs() < 1e-12);
        assert!((p.gain(0.0, 5.0) / g0 - 0.5).abs() < 1e-12);
        assert!((10.0 * (p.gain(5.0, 0.0) / g0).log10() + 3.0103).abs() < 1e-4);
        assert_eq!(p.gain(180.0, 0.0), g0 * SIDELOBE_FLOOR);
        assert_eq!(p.gain(360.0, 0.0), g0);
        for az in (-720..720).map(|x| x as f64 * 0.5) {
            let g = p.gain(az, az / 3.0);
            assert!(g <= g0 && g >= g0 * SIDELOBE_FLOOR);
        }
    }

    #[test]
    fn measurement_horn_directivity() {
        let p = AntennaPattern::new(10.9, 8.6).unwrap();
        let expected = 41253.0 / (10.9 * 8.6);
        assert!((p.boresight_gain() - expected).abs() < 1e-9);
        assert!((p.boresight_gain() - 439.9).abs() < 0.5);
        assert!((p.boresight_gain_dbi() - 26.4).abs() < 0.05);
    }

    #[test]
    fn hpbw_limits() {
        assert_eq!(AntennaPattern::new(6.0, 10.0), Err(DirectionalError::AzimuthHpbw(6.0)));
        assert_eq!(AntennaPattern::new(10.0, 50.0), Err(DirectionalError::ElevationHpbw(50.0)));
        assert!(AntennaPattern::new(360.0, 45.0).unwrap().is_isotropic());
        assert!(!AntennaPattern::new(360.0, 44.0).unwrap().is_isotropic());
        assert!(PointingAngle::new(360.0, 0.0).is_err());
        assert!(PointingAngle::new(0.0, -91.0).is_err());
    }

    #[test]
    fn offsets_normalize_to_half_open_interval() {
        assert_eq!(normalize_offset(180.0), 180.0);
        assert_eq!(normalize_offset(-180.0), 180.0);
        assert_eq!(normalize_offset(190.0), -170.0);
        assert_eq!(normalize_offset(-350.0), 10.0);
    }

    #[test]
    fn isotropic_directional_equals_omni() {
        let cir = random_cir(5);
        let iso = AntennaPattern::isotropic();
        let pt = PointingAngle::new(33.0, 12.0).unwrap();
        let dir = directional_pdp(&cir, &pt, &pt, &iso, &iso, 800.0).unwrap();
        let omni = compute_pdp(&cir, 800.0).unwrap();
        assert_eq!(dir, omni);
    }

    #[test]
    fn single_path_boresight_and_back() {
        let cir = cir_of(vec![mpc(400.0, 1e-6, 1.0, (40.0, 5.0), (200.0, -3.0))]);
        let t = AntennaPattern::new(10.9, 8.6).unwrap();
        let r = AntennaPattern::new(30.0, 20.0).unwrap();
        let on = directional_pdp(
            &cir,
            &PointingAngle::new(40.0, 5.0).unwrap(),
            &PointingAngle::new(200.0, -3.0).unwrap(),
            &t,
            &r,
            800.0,
        )
        .unwrap();
        let expected = 1e-6 * t.boresight_gain() * r.boresight_gain();
        assert!((on.total_power_mw() - expected).abs() <= 1e-12 * expected);
        let off = directional_pdp(
            &cir,
            &PointingAngle::new(40.0, 5.0).unwrap(),
            &PointingAngle::new(20.0, -3.0).unwrap(),
            &t,
            &r,
            800.0,
        )
        .unwrap();
        assert!(off.total_power_mw() <= expected * 1e-3 * (1.0 + 1e-12));
    }

    #[test]
    fn best_direction_single_path() {
        let cir = cir_of(vec![mpc(400.0, 1e-6, 0.0, (123.0, 7.0), (301.0, -12.0))]);
        let t = AntennaPattern::new(10.9, 8.6).unwrap();
        let r = AntennaPattern::new(10.0, 10.0).unwrap();
        let best = best_direction_search(&cir, &t, &r, 800.0).unwrap();
        let d = |a: f64, b: f64| normalize_offset(a - b).abs();
        assert!(d(best.tx.azimuth_deg, 123.0) <= 10.9 / 2.0);
        assert!(d(best.tx.elevation_deg, 7.0) <= 8.6 / 2.0);
        assert!(d(best.rx.azimuth_deg, 301.0) <= 5.0);
        assert!(d(best.rx.elevation_deg, -12.0) <= 5.0);
    }

    #[test]
    fn grid_size() {
        for (az, el) in [(10.0, 10.0), (10.9, 8.6), (7.0, 7.0), (360.0, 45.0), (33.0, 45.0)] {
            let p = AntennaPattern::new(az, el).unwrap();
            let g = pointing_grid(&p);
            assert_eq!(g.len(), ((360.0 / az).ceil() * (180.0 / el).ceil()) as usize);
            assert!(g.iter().all(|a| (-90.0..=90.0).contains(&a.elevation_deg)));
            assert!(g.iter().any(|a| a.elevation_deg == 0.0));
        }
    }

    #[test]
    fn best_direction_is_argmax_of_grid() {
        let t = AntennaPattern::new(60.0, 30.0).unwrap();
        let r = AntennaPattern::new(45.0, 45.0).unwrap();
        for seed in 0..4 {
            let cir = random_cir(seed);
            let best = best_direction_search(&cir, &t, &r, 800.0).unwrap();
            let got = best.pdp.total_power_mw();
            for tp in pointing_grid(&t) {
                for rp in pointing_grid(&r) {
                    let p = directional_pdp(&cir, &tp, &rp, &t, &r, 800.0).unwrap().total_power_mw();
                    assert!(got >= p * (1.0 - 1e-12), "grid ({tp:?}, {rp:?}) beats search");
                }
            }
        }
    }

    #[test]
    fn ties_break_lexicographically() {
        // two identical paths mirrored in azimuth; both pointings give equal power
        let cir = cir_of(vec![
            mpc(400.0, 1e-6, 0.0, (90.0, 0.0), (0.0, 0.0)),
            mpc(401.0, 1e-6, 0.0, (270.0, 0.0), (180.0, 0.0)),
        ]);
        let p = AntennaPattern::new(90.0, 45.0).unwrap();
        let best = best_direction_search(&cir, &p, &p, 800.0).unwrap();
        assert_eq!(best.tx.azimuth_deg, 90.0);
        assert_eq!(best.rx.azimuth_deg, 0.0);
    }

    #[test]
    fn path_loss_identity() {
        assert_eq!(directional_path_loss(30.0, 0.0, 0.0, -70.0), 100.0);
        assert!((directional_path_loss(30.0, 24.5, 24.5, -21.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn directional_loss_never_below_omni() {
        let t = AntennaPattern::new(10.9, 8.6).unwrap();
        for seed in 0..20 {
            let cir = random_cir(100 + seed);
            let omni = compute_pdp(&cir, 800.0).unwrap();
            let best = best_direction_search(&cir, &t, &t, 800.0).unwrap();
            let pl_dir = directional_path_loss(
                cir.tx_power_dbm,
                t.boresight_gain_dbi(),
                t.boresight_gain_dbi(),
                best.pdp.received_power_dbm,
            );
            assert!(pl_dir >= cir.tx_power_dbm - omni.received_power_dbm);
        }
    }

    #[test]
    fn small_scale_reference_element_and_single_path() {
        // distinct bins: element 0 equals the omni PDP
        let cir = cir_of(vec![
            mpc(400.0, 1e-6, 0.3, (0.0, 0.0), (30.0, 0.0)),
            mpc(420.0, 5e-7, 2.0, (0.0, 0.0), (250.0, 10.0)),
        ]);
        let track = small_scale_pdps(&cir, 4, 0.5, 800.0).unwrap();
        let omni = compute_pdp(&cir, 800.0).unwrap();
        assert_eq!(track[0].0, 0.0);
        for (a, b) in track[0].1.bins.iter().zip(&omni.bins) {
            assert_eq!(a.delay_ns, b.delay_ns);
            assert!((a.power_mw - b.power_mw).abs() <= 1e-15 * b.power_mw);
        }
        let single = cir_of(vec![mpc(400.0, 2e-6, 0.3, (0.0, 0.0), (75.0, 3.0))]);
        for (_, pdp) in small_scale_pdps(&single, 8, 0.5, 800.0).unwrap() {
            assert!((pdp.total_power_mw() - 2e-6).abs() <= 1e-15);
        }
        assert_eq!(small_scale_pdps(&single, 0, 0.5, 800.0), Err(DirectionalError::Track));
    }

    #[test]
    fn small_scale_deep_fade() {
        // equal paths in one bin; at element 1 the relative phase is π
        // arrival azimuths 90° and 270° give sin = ±1, spacing 0.25 λ adds ±π/2
        let cir = cir_of(vec![
            mpc(400.0, 1e-6, 0.0, (0.0, 0.0), (90.0, 0.0)),
            mpc(400.5, 1e-6, 0.0, (0.0, 0.0), (270.0, 0.0)),
        ]);
        let track = small_scale_pdps(&cir, 2, 0.25, 800.0).unwrap();
        assert_eq!(track[1].1.bins.len(), 1);
        assert!((track[0].1.total_power_mw() - 4e-6).abs() < 1e-18);
        assert!(track[1].1.bins[0].power_mw <= 1e-6 * 1e-6);
    }

    #[test]
    fn small_scale_average_tracks_omni() {
        for seed in 0..30 {
            let cir = random_cir(500 + seed);
            if cir.mpcs.len() < 10 {
                continue;
            }
            let track = small_scale_pdps(&cir, 16, 0.5, 800.0).unwrap();
            let avg = track.iter().map(|(_, p)| p.total_power_mw()).sum::<f64>() / track.len() as f64;
            let ratio_db = 10.0 * (avg / cir.total_power_mw()).log10();
            assert!(ratio_db.abs() <= 3.0, "seed {seed}: {ratio_db} dB");
        }
    }
}

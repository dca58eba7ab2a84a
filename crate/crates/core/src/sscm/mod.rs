//! Statistical spatial channel model: omnidirectional CIR generation.
//!
//! A realization is built from time clusters (groups of paths close in
//! delay, separated by a minimum void interval) and spatial lobes (main
//! departure/arrival directions). Time and space are drawn independently and
//! joined by assigning every path to one AOD lobe and one AOA lobe.
//!
//! Path powers are normalized so that their linear sum equals the received
//! power implied by the large-scale path loss.

pub mod pdp;

pub use pdp::{bin_powers, bin_voltages, rms_delay_spread, PdpBin, PowerDelayProfile};

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use thiserror::Error;

use crate::config::{scenario_defaults, Environment, Polarization, ValidatedConfig};
use crate::params::{ModelParams, SscmParams};
use crate::pathloss::atmosphere::{AtmosphereError, AttenuationTable, WeatherConditions};
use crate::pathloss::{ci_path_loss, sample_shadow_fading, PathLossError, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SscmError {
    #[error(transparent)]
    PathLoss(#[from] PathLossError),
    #[error(transparent)]
    Atmosphere(#[from] AtmosphereError),
    #[error("profile has no power")]
    ZeroPower,
}

/// One resolvable path. Angles in degrees, azimuth in `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipathComponent {
    /// Absolute propagation delay, ns.
    pub delay_ns: f64,
    pub power_mw: f64,
    /// `[0, 2π)`.
    pub phase_rad: f64,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
    pub cluster_id: usize,
    pub lobe_tx: usize,
    pub lobe_rx: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeCluster {
    pub id: usize,
    /// Excess delay of the first member, ns.
    pub start_excess_ns: f64,
    /// Excess delay of the last member, ns.
    pub end_excess_ns: f64,
    /// Indices into [`OmniCir::mpcs`], ascending delay.
    pub members: Vec<usize>,
    pub power_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LobeSide {
    Aod,
    Aoa,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialLobe {
    pub id: usize,
    pub side: LobeSide,
    pub center_az_deg: f64,
    pub center_el_deg: f64,
    pub members: Vec<usize>,
    pub power_mw: f64,
}

/// Large-scale terms of one realization, dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScale {
    pub ple: f64,
    pub shadow_db: f64,
    /// Atmospheric plus foliage attenuation.
    pub attenuation_db: f64,
    pub polarization_db: f64,
    pub path_loss_db: f64,
}

/// One omnidirectional channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct OmniCir {
    /// Ascending delay.
    pub mpcs: Vec<MultipathComponent>,
    pub distance_m: f64,
    pub tx_power_dbm: f64,
    pub omni_path_loss_db: f64,
    pub large_scale: LargeScale,
    pub los: bool,
    pub clusters: Vec<TimeCluster>,
    pub aod_lobes: Vec<SpatialLobe>,
    pub aoa_lobes: Vec<SpatialLobe>,
}

impl OmniCir {
    pub fn total_power_mw(&self) -> f64 {
        self.mpcs.iter().map(|m| m.power_mw).sum()
    }

    /// Received power implied by the path loss, mW.
    pub fn expected_power_mw(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - self.omni_path_loss_db) / 10.0)
    }

    /// Free-space time of flight, ns.
    pub fn propagation_delay_ns(&self) -> f64 {
        propagation_delay_ns(self.distance_m)
    }

    pub fn lobes(&self, side: LobeSide) -> &[SpatialLobe] {
        match side {
            LobeSide::Aod => &self.aod_lobes,
            LobeSide::Aoa => &self.aoa_lobes,
        }
    }
}

pub fn propagation_delay_ns(distance_m: f64) -> f64 {
    distance_m / SPEED_OF_LIGHT * 1e9
}

/// Wraps an angle in degrees to `[0, 360)`.
pub fn wrap_azimuth(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

fn wrap_phase(rad: f64) -> f64 {
    let w = rad.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Uniform on `1..=max`.
pub fn sample_num_time_clusters<R: Rng + ?Sized>(max: usize, rng: &mut R) -> usize {
    rng.random_range(1..=max.max(1))
}

pub fn clamp_lobe_count(raw: u64, max: usize) -> usize {
    (raw as usize).clamp(1, max.max(1))
}

/// Poisson draw with the given mean, clamped to `1..=max`.
pub fn sample_num_spatial_lobes<R: Rng + ?Sized>(mean: f64, max: usize, rng: &mut R) -> usize {
    let raw: f64 = Poisson::new(mean).expect("positive lobe mean").sample(rng);
    clamp_lobe_count(raw as u64, max)
}

/// Timing and power share of one time cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterDraw {
    pub start_excess_ns: f64,
    /// Nominal extent; every subpath lies in `[start, start + duration]`.
    pub duration_ns: f64,
    /// Share of the cluster-borne power; all shares sum to 1.
    pub power_fraction: f64,
}

/// Draws cluster start delays, durations and power shares.
///
/// The first cluster starts at zero excess delay. Each later cluster starts
/// one void interval plus an exponential gap after the nominal end of the
/// previous one.
pub fn sample_cluster_structure<R: Rng + ?Sized>(
    n_tc: usize,
    p: &SscmParams,
    rng: &mut R,
) -> Vec<ClusterDraw> {
    let gap = Exp::new(1.0 / p.cluster_gap_mean_ns).expect("positive gap mean");
    let dur = Exp::new(1.0 / p.cluster_duration_mean_ns).expect("positive duration mean");
    let shadow = Normal::new(0.0, p.cluster_shadow_db).expect("finite cluster shadowing");

    let mut out = Vec::with_capacity(n_tc);
    let mut next_start = 0.0;
    for i in 0..n_tc {
        if i > 0 {
            next_start += p.void_interval_ns + gap.sample(rng);
        }
        let duration = dur.sample(rng).min(p.cluster_duration_max_ns);
        let weight = (-next_start / p.cluster_decay_ns).exp() * 10f64.powf(shadow.sample(rng) / 10.0);
        out.push(ClusterDraw {
            start_excess_ns: next_start,
            duration_ns: duration,
            power_fraction: weight,
        });
        next_start += duration;
    }
    let total: f64 = out.iter().map(|c| c.power_fraction).sum();
    for c in &mut out {
        c.power_fraction /= total;
    }
    out
}

/// Intra-cluster offsets (ascending) and power shares summing to 1.
fn sample_subpaths<R: Rng + ?Sized>(
    duration_ns: f64,
    anchor_at_start: bool,
    p: &SscmParams,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let count = rng.random_range(1..=p.max_subpaths);
    let mean = (duration_ns / 4.0).max(f64::MIN_POSITIVE);
    let exp = Exp::new(1.0 / mean).expect("positive subpath delay mean");
    let mut offsets: Vec<f64> = (0..count)
        .map(|i| {
            if anchor_at_start && i == 0 {
                0.0
            } else {
                exp.sample(rng).min(duration_ns)
            }
        })
        .collect();
    offsets.sort_by(f64::total_cmp);
    let spread = p.subpath_spread_db;
    let weights: Vec<f64> = offsets
        .iter()
        .map(|&o| {
            let jitter = if spread > 0.0 {
                rng.random_range(-spread..=spread)
            } else {
                0.0
            };
            (-o / p.subpath_decay_ns).exp() * 10f64.powf(jitter / 10.0)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    offsets
        .into_iter()
        .zip(weights)
        .map(|(o, w)| (o, w / total))
        .collect()
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Lobe centers (az, el). A `fixed` first center is kept as given.
fn sample_lobe_centers<R: Rng + ?Sized>(
    n: usize,
    fixed: Option<(f64, f64)>,
    p: &SscmParams,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    const MAX_TRIES: usize = 1000;
    let min_sep = p.lobe_min_separation_deg / n as f64;
    let el_dist = Normal::new(0.0, p.lobe_el_sigma_deg).expect("finite lobe elevation spread");
    let mut centers: Vec<(f64, f64)> = fixed.into_iter().collect();
    while centers.len() < n {
        let mut az = rng.random_range(0.0..360.0);
        for _ in 0..MAX_TRIES {
            if centers.iter().all(|c| circular_distance(c.0, az) >= min_sep) {
                break;
            }
            az = rng.random_range(0.0..360.0);
        }
        let el = el_dist
            .sample(rng)
            .clamp(-p.lobe_el_max_deg, p.lobe_el_max_deg);
        centers.push((az, el));
    }
    centers
}

/// Lobe index per path. Every lobe receives at least one path; the rest are
/// uniform. With `pinned_first`, path 0 goes to lobe 0 and the others cover
/// lobes `1..n` first.
fn assign_lobes<R: Rng + ?Sized>(
    n_paths: usize,
    n_lobes: usize,
    pinned_first: bool,
    rng: &mut R,
) -> Vec<usize> {
    let (free, covered) = if pinned_first {
        (n_paths - 1, 1..n_lobes)
    } else {
        (n_paths, 0..n_lobes)
    };
    let mut labels: Vec<usize> = covered.collect();
    while labels.len() < free {
        labels.push(rng.random_range(0..n_lobes));
    }
    labels.shuffle(rng);
    if pinned_first {
        labels.insert(0, 0);
    }
    labels
}

/// Builds CIRs for one validated config.
#[derive(Debug, Clone)]
pub struct ChannelGenerator {
    cfg: ValidatedConfig,
    params: ModelParams,
    ple: f64,
    shadow_sigma_db: f64,
    alpha_db_per_m: f64,
}

impl ChannelGenerator {
    pub fn new(
        cfg: &ValidatedConfig,
        params: &ModelParams,
        table: &AttenuationTable,
    ) -> Result<Self, SscmError> {
        let defaults = scenario_defaults(cfg.scenario, cfg.environment);
        let weather = WeatherConditions {
            pressure_mbar: cfg.pressure_mbar,
            humidity_pct: cfg.humidity_pct,
            temperature_c: cfg.temperature_c,
            rain_rate_mmhr: cfg.rain_rate_mmhr,
        };
        let alpha_db_per_m = if params.atmosphere {
            table.attenuation_factor(cfg.frequency_ghz, &weather)?
        } else {
            0.0
        };
        Ok(ChannelGenerator {
            cfg: cfg.clone(),
            params: params.clone(),
            ple: params.ple.unwrap_or(defaults.ple),
            shadow_sigma_db: params.shadow_sigma_db.unwrap_or(defaults.shadow_sigma_db),
            alpha_db_per_m,
        })
    }

    pub fn config(&self) -> &ValidatedConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn ple(&self) -> f64 {
        self.ple
    }

    pub fn shadow_sigma_db(&self) -> f64 {
        self.shadow_sigma_db
    }

    /// Atmospheric attenuation in use, dB/m.
    pub fn alpha_db_per_m(&self) -> f64 {
        self.alpha_db_per_m
    }

    /// Draws shadow fading and composes the omnidirectional path loss.
    pub fn large_scale<R: Rng + ?Sized>(
        &self,
        distance_m: f64,
        rng: &mut R,
    ) -> Result<LargeScale, SscmError> {
        let c = &self.cfg;
        let shadow_db = sample_shadow_fading(self.shadow_sigma_db, rng);
        let foliage_db = if c.foliage {
            c.foliage_atten_db_per_m * c.foliage_dist_m
        } else {
            0.0
        };
        let attenuation_db = self.alpha_db_per_m * distance_m + foliage_db;
        let polarization_db = match c.polarization {
            Polarization::CoPol => 0.0,
            Polarization::XPol => c.xpd_db,
        };
        let path_loss_db =
            ci_path_loss(c.frequency_ghz, distance_m, self.ple, attenuation_db, shadow_db)? + polarization_db;
        Ok(LargeScale {
            ple: self.ple,
            shadow_db,
            attenuation_db,
            polarization_db,
            path_loss_db,
        })
    }

    /// Generates one omnidirectional CIR at `distance_m` (3D, metres).
    pub fn generate<R: Rng + ?Sized>(&self, distance_m: f64, rng: &mut R) -> Result<OmniCir, SscmError> {
        let p = &self.params.sscm;
        let los = self.cfg.environment == Environment::Los;

        let large_scale = self.large_scale(distance_m, rng)?;
        let total_mw = 10f64.powf((self.cfg.tx_power_dbm - large_scale.path_loss_db) / 10.0);
        let tof_ns = propagation_delay_ns(distance_m);

        let n_tc = sample_num_time_clusters(p.max_time_clusters, rng);
        let clusters = sample_cluster_structure(n_tc, p, rng);
        let los_fraction = if los {
            rng.random_range(p.los_fraction_min..=p.los_fraction_max)
        } else {
            0.0
        };

        // (excess delay, power, cluster)
        let mut paths: Vec<(f64, f64, usize)> = Vec::new();
        if los {
            paths.push((0.0, total_mw * los_fraction, 0));
        }
        let scattered_mw = total_mw * (1.0 - los_fraction);
        for (ci, c) in clusters.iter().enumerate() {
            let anchor = !(los && ci == 0);
            for (offset, share) in sample_subpaths(c.duration_ns, anchor, p, rng) {
                paths.push((c.start_excess_ns + offset, scattered_mw * c.power_fraction * share, ci));
            }
        }
        let n_paths = paths.len();

        let boresight_aod = (0.0, 0.0);
        let boresight_aoa = (180.0, 0.0);
        let mut sides = Vec::with_capacity(2);
        for boresight in [boresight_aod, boresight_aoa] {
            let raw = sample_num_spatial_lobes(p.mean_spatial_lobes, p.max_spatial_lobes, rng);
            let n_sl = raw.min(n_paths);
            let centers = sample_lobe_centers(n_sl, los.then_some(boresight), p, rng);
            let labels = assign_lobes(n_paths, n_sl, los, rng);
            sides.push((centers, labels));
        }

        let az_off = Normal::new(0.0, p.mpc_az_spread_deg).expect("finite azimuth spread");
        let el_off = Normal::new(0.0, p.mpc_el_spread_deg).expect("finite elevation spread");
        let wavelength_m = SPEED_OF_LIGHT / (self.cfg.frequency_ghz * 1e9);
        let mut mpcs = Vec::with_capacity(n_paths);
        for (i, &(excess, power, cluster)) in paths.iter().enumerate() {
            let direct = los && i == 0;
            let mut angles = [(0.0, 0.0); 2];
            for (side, (centers, labels)) in sides.iter().enumerate() {
                let (caz, cel) = centers[labels[i]];
                angles[side] = if direct {
                    (caz, cel)
                } else {
                    (
                        wrap_azimuth(caz + az_off.sample(rng)),
                        (cel + el_off.sample(rng)).clamp(-90.0, 90.0),
                    )
                };
            }
            let phase_rad = if direct {
                wrap_phase(TAU * distance_m / wavelength_m)
            } else {
                rng.random_range(0.0..TAU)
            };
            mpcs.push(MultipathComponent {
                delay_ns: tof_ns + excess,
                power_mw: power,
                phase_rad,
                aod_az_deg: angles[0].0,
                aod_el_deg: angles[0].1,
                aoa_az_deg: angles[1].0,
                aoa_el_deg: angles[1].1,
                cluster_id: cluster,
                lobe_tx: sides[0].1[i],
                lobe_rx: sides[1].1[i],
            });
        }
        // Clusters are generated in delay order; this only settles ties inside one.
        mpcs.sort_by(|a, b| a.delay_ns.total_cmp(&b.delay_ns));

        let time_clusters = clusters
            .iter()
            .enumerate()
            .map(|(id, _)| {
                let members: Vec<usize> = (0..mpcs.len()).filter(|&k| mpcs[k].cluster_id == id).collect();
                TimeCluster {
                    id,
                    start_excess_ns: mpcs[members[0]].delay_ns - tof_ns,
                    end_excess_ns: mpcs[*members.last().unwrap()].delay_ns - tof_ns,
                    power_mw: members.iter().map(|&k| mpcs[k].power_mw).sum(),
                    members,
                }
            })
            .collect();
        let lobes = |side: LobeSide, centers: &[(f64, f64)]| -> Vec<SpatialLobe> {
            centers
                .iter()
                .enumerate()
                .map(|(id, &(az, el))| {
                    let members: Vec<usize> = (0..mpcs.len())
                        .filter(|&k| match side {
                            LobeSide::Aod => mpcs[k].lobe_tx == id,
                            LobeSide::Aoa => mpcs[k].lobe_rx == id,
                        })
                        .collect();
                    SpatialLobe {
                        id,
                        side,
                        center_az_deg: az,
                        center_el_deg: el,
                        power_mw: members.iter().map(|&k| mpcs[k].power_mw).sum(),
                        members,
                    }
                })
                .collect()
        };
        let aod_lobes = lobes(LobeSide::Aod, &sides[0].0);
        let aoa_lobes = lobes(LobeSide::Aoa, &sides[1].0);

        Ok(OmniCir {
            mpcs,
            distance_m,
            tx_power_dbm: self.cfg.tx_power_dbm,
            omni_path_loss_db: large_scale.path_loss_db,
            large_scale,
            los,
            clusters: time_clusters,
            aod_lobes,
            aoa_lobes,
        })
    }
}

/// One CIR with the shipped attenuation table.
pub fn generate_cir<R: Rng + ?Sized>(
    cfg: &ValidatedConfig,
    params: &ModelParams,
    distance_m: f64,
    rng: &mut R,
) -> Result<OmniCir, SscmError> {
    ChannelGenerator::new(cfg, params, &AttenuationTable::shipped())?.generate(distance_m, rng)
}

/// Omnidirectional PDP: path powers summed per delay bin.
pub fn compute_pdp(cir: &OmniCir, bandwidth_mhz: f64) -> Result<PowerDelayProfile, SscmError> {
    let bins = bin_powers(cir.mpcs.iter().map(|m| (m.delay_ns, m.power_mw)), bandwidth_mhz);
    PowerDelayProfile::from_bins(bins, bandwidth_mhz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate, Scenario, SimulationConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn generator(env: Environment) -> ChannelGenerator {
        let cfg = validate(&SimulationConfig {
            environment: env,
            ..Default::default()
        })
        .unwrap();
        ChannelGenerator::new(&cfg, &ModelParams::default(), &AttenuationTable::shipped()).unwrap()
    }

    fn check_cir(cir: &OmniCir, p: &SscmParams) {
        let total = cir.total_power_mw();
        let expected = cir.expected_power_mw();
        assert!(((total - expected) / expected).abs() <= 1e-9);
        assert!((1..=6).contains(&cir.clusters.len()));
        assert!((1..=5).contains(&cir.aod_lobes.len()));
        assert!((1..=5).contains(&cir.aoa_lobes.len()));
        for w in cir.clusters.windows(2) {
            assert!(w[1].start_excess_ns - w[0].end_excess_ns >= p.void_interval_ns);
        }
        for w in cir.mpcs.windows(2) {
            assert!(w[0].delay_ns <= w[1].delay_ns);
        }
        let tof = cir.propagation_delay_ns();
        for m in &cir.mpcs {
            assert!(m.power_mw > 0.0);
            assert!((0.0..TAU).contains(&m.phase_rad));
            assert!((0.0..360.0).contains(&m.aod_az_deg) && (0.0..360.0).contains(&m.aoa_az_deg));
            assert!((-90.0..=90.0).contains(&m.aod_el_deg) && (-90.0..=90.0).contains(&m.aoa_el_deg));
            assert!(m.delay_ns >= tof);
        }
        for side in [LobeSide::Aod, LobeSide::Aoa] {
            let mut seen = vec![0usize; cir.mpcs.len()];
            for l in cir.lobes(side) {
                assert!(!l.members.is_empty());
                for &k in &l.members {
                    seen[k] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
        let mut seen = vec![0usize; cir.mpcs.len()];
        for c in &cir.clusters {
            for &k in &c.members {
                seen[k] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn generated_cirs_respect_invariants() {
        let p = SscmParams::default();
        for env in [Environment::Los, Environment::Nlos] {
            let g = generator(env);
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for i in 0..500 {
                let d = 10.0 + i as f64;
                let cir = g.generate(d, &mut rng).unwrap();
                check_cir(&cir, &p);
            }
        }
    }

    #[test]
    fn los_direct_path_leads() {
        let g = generator(Environment::Los);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let cir = g.generate(120.0, &mut rng).unwrap();
            let first = &cir.mpcs[0];
            assert_eq!(first.delay_ns, cir.propagation_delay_ns());
            assert_eq!((first.aod_az_deg, first.aod_el_deg), (0.0, 0.0));
            assert_eq!((first.aoa_az_deg, first.aoa_el_deg), (180.0, 0.0));
            let share = first.power_mw / cir.total_power_mw();
            assert!((0.4 - 1e-12..=0.8 + 1e-12).contains(&share));
        }
    }

    #[test]
    fn determinism() {
        let g = generator(Environment::Nlos);
        let a = g.generate(77.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = g.generate(77.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distance_below_reference_is_rejected() {
        let g = generator(Environment::Los);
        assert!(matches!(
            g.generate(0.5, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(SscmError::PathLoss(PathLossError::DistanceBelowReference(_)))
        ));
    }

    #[test]
    fn path_loss_composition() {
        let cfg = validate(&SimulationConfig {
            scenario: Scenario::UMa,
            environment: Environment::Nlos,
            polarization: Polarization::XPol,
            foliage: true,
            foliage_atten_db_per_m: 0.5,
            foliage_dist_m: 4.0,
            rain_rate_mmhr: 20.0,
            ..Default::default()
        })
        .unwrap();
        let params = ModelParams {
            shadow_sigma_db: Some(0.0),
            ..Default::default()
        };
        let table = AttenuationTable::shipped();
        let g = ChannelGenerator::new(&cfg, &params, &table).unwrap();
        let ls = g.large_scale(150.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let alpha = g.alpha_db_per_m();
        assert!(alpha > 0.0);
        let expected = crate::pathloss::fspl(28.0).unwrap() + 32.0 * 150f64.log10() + alpha * 150.0 + 2.0 + 25.0;
        assert!((ls.path_loss_db - expected).abs() < 1e-9);
        assert_eq!(ls.polarization_db, 25.0);

        let no_atm = ModelParams {
            atmosphere: false,
            ..params
        };
        assert_eq!(ChannelGenerator::new(&cfg, &no_atm, &table).unwrap().alpha_db_per_m(), 0.0);
    }

    #[test]
    fn time_cluster_count_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut counts = [0usize; 7];
        let n = 100_000;
        for _ in 0..n {
            let k = sample_num_time_clusters(6, &mut rng);
            assert!((1..=6).contains(&k));
            counts[k] += 1;
        }
        for &c in &counts[1..] {
            let f = c as f64 / n as f64;
            assert!((0.16..=0.175).contains(&f), "frequency {f}");
        }
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            assert_eq!(sample_num_time_clusters(6, &mut a), sample_num_time_clusters(6, &mut b));
        }
    }

    /// Exact mean of a Poisson(mean) draw clamped to `1..=max`.
    fn clamped_poisson_mean(mean: f64, max: usize) -> f64 {
        let mut pmf = (-mean).exp();
        let mut acc = 0.0;
        let mut cdf = 0.0;
        for k in 0..max {
            acc += pmf * (k.max(1) as f64);
            cdf += pmf;
            pmf *= mean / (k + 1) as f64;
        }
        acc + (1.0 - cdf) * max as f64
    }

    #[test]
    fn spatial_lobe_count_distribution() {
        let exact = clamped_poisson_mean(2.0, 5);
        assert!((exact - 2.1128).abs() < 1e-3, "{exact}");
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let n = 100_000;
        let mut sum = 0usize;
        for _ in 0..n {
            let k = sample_num_spatial_lobes(2.0, 5, &mut rng);
            assert!((1..=5).contains(&k));
            sum += k;
        }
        let mean = sum as f64 / n as f64;
        assert!((1.8..=2.2).contains(&mean));
        assert!((mean - exact).abs() < 0.02, "{mean} vs {exact}");
    }

    #[test]
    fn lobe_clamp() {
        assert_eq!(clamp_lobe_count(0, 5), 1);
        assert_eq!(clamp_lobe_count(9, 5), 5);
        assert_eq!(clamp_lobe_count(3, 5), 3);
    }

    #[test]
    fn cluster_structure() {
        let p = SscmParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let one = sample_cluster_structure(1, &p, &mut rng);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].power_fraction, 1.0);
        assert_eq!(one[0].start_excess_ns, 0.0);
        for _ in 0..10_000 {
            let n = sample_num_time_clusters(6, &mut rng);
            let cs = sample_cluster_structure(n, &p, &mut rng);
            let sum: f64 = cs.iter().map(|c| c.power_fraction).sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            for w in cs.windows(2) {
                assert!(w[1].start_excess_ns - (w[0].start_excess_ns + w[0].duration_ns) >= 25.0);
            }
            assert!(cs.iter().all(|c| c.duration_ns <= 100.0));
        }
    }

    #[test]
    fn pdp_examples() {
        let g = generator(Environment::Los);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cir = g.generate(100.0, &mut rng).unwrap();
        let narrow = compute_pdp(&cir, 0.0).unwrap();
        assert_eq!(narrow.bins.len(), 1);
        let expected = cir.tx_power_dbm - cir.omni_path_loss_db;
        assert!((narrow.received_power_dbm - expected).abs() < 1e-9);
        assert_eq!(narrow.rms_delay_spread_ns, 0.0);
        let wide = compute_pdp(&cir, 800.0).unwrap();
        let rel = (wide.total_power_mw() - cir.total_power_mw()).abs() / cir.total_power_mw();
        assert!(rel <= 1e-12);
        for w in wide.bins.windows(2) {
            let steps = (w[1].delay_ns - w[0].delay_ns) / 1.25;
            assert!((steps - steps.round()).abs() < 1e-6 && steps >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn wrap_azimuth_stays_half_open() {
        assert_eq!(wrap_azimuth(-1e-17), 0.0);
        assert_eq!(wrap_azimuth(360.0), 0.0);
        assert_eq!(wrap_azimuth(-90.0), 270.0);
        assert_eq!(wrap_azimuth(725.0), 5.0);
    }
}

//! Monte Carlo orchestration.
//!
//! Run `i` (1-based) draws everything from ChaCha8 stream `i` of the master
//! seed, so results do not depend on scheduling or worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::ValidatedConfig;
use crate::directional::{
    best_direction_search, directional_path_loss, directional_pdp, small_scale_pdps, AntennaPattern,
    BestDirection, DirectionalError, PointingAngle,
};
use crate::params::ModelParams;
use crate::pathloss::{fit_ple_mmse, AttenuationTable, PathLossKind, PathLossSample, PleFit};
use crate::sscm::{compute_pdp, ChannelGenerator, MultipathComponent, OmniCir, PowerDelayProfile, SscmError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("at least one run is required")]
    NoRuns,
    #[error(transparent)]
    Sscm(#[from] SscmError),
    #[error(transparent)]
    Directional(#[from] DirectionalError),
}

/// RNG for one run.
pub fn run_rng(master_seed: u64, run_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index as u64);
    rng
}

/// One `OmniPDPInfo` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmniPdpRow {
    pub distance_m: f64,
    pub received_power_dbm: f64,
    pub path_loss_db: f64,
    pub rms_delay_spread_ns: f64,
}

/// One `DirPDPInfo` row: both antennas pointed along one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirPdpRow {
    pub run_index: usize,
    pub delay_ns: f64,
    /// The path's own power after both boresight gains.
    pub received_power_dbm: f64,
    pub phase_rad: f64,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
    /// Path loss of the whole directional PDP at this pointing.
    pub path_loss_db: f64,
    pub rms_delay_spread_ns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub run_index: usize,
    pub cir: OmniCir,
    pub omni_pdp: PowerDelayProfile,
    pub best: BestDirection,
    /// Directional path loss at the best pointing.
    pub best_path_loss_db: f64,
    /// `(RX offset in wavelengths, PDP)` per track element.
    pub small_scale: Vec<(f64, PowerDelayProfile)>,
    pub dir_rows: Vec<DirPdpRow>,
}

impl RunArtifacts {
    pub fn omni_row(&self) -> OmniPdpRow {
        OmniPdpRow {
            distance_m: self.cir.distance_m,
            received_power_dbm: self.omni_pdp.received_power_dbm,
            path_loss_db: self.cir.tx_power_dbm - self.omni_pdp.received_power_dbm,
            rms_delay_spread_ns: self.omni_pdp.rms_delay_spread_ns,
        }
    }

    pub fn omni_path_loss_db(&self) -> f64 {
        self.omni_row().path_loss_db
    }
}

/// Fitted `(n, σ)` per path loss kind; `None` when the samples cannot
/// support a fit (fewer than two, or a single distance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossFits {
    pub omni: Option<PleFit>,
    pub dir: Option<PleFit>,
    pub dir_best: Option<PleFit>,
}

impl PathLossFits {
    pub fn get(&self, kind: PathLossKind) -> Option<PleFit> {
        match kind {
            PathLossKind::Omni => self.omni,
            PathLossKind::Dir => self.dir,
            PathLossKind::DirBest => self.dir_best,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub frequency_ghz: f64,
    pub omni_rows: Vec<OmniPdpRow>,
    pub dir_rows: Vec<DirPdpRow>,
    /// Scatter samples: omni and dir-best once per run, dir once per path.
    pub samples: Vec<PathLossSample>,
    pub fits: PathLossFits,
}

impl RunSummary {
    pub fn from_runs(frequency_ghz: f64, runs: &[RunArtifacts]) -> Self {
        let omni_rows: Vec<OmniPdpRow> = runs.iter().map(RunArtifacts::omni_row).collect();
        let dir_rows: Vec<DirPdpRow> = runs.iter().flat_map(|r| r.dir_rows.iter().copied()).collect();
        let mut samples = Vec::new();
        for r in runs {
            let d = r.cir.distance_m;
            samples.push(PathLossSample {
                distance_m: d,
                path_loss_db: r.omni_path_loss_db(),
                kind: PathLossKind::Omni,
            });
            samples.extend(r.dir_rows.iter().map(|row| PathLossSample {
                distance_m: d,
                path_loss_db: row.path_loss_db,
                kind: PathLossKind::Dir,
            }));
            samples.push(PathLossSample {
                distance_m: d,
                path_loss_db: r.best_path_loss_db,
                kind: PathLossKind::DirBest,
            });
        }
        let fit = |kind: PathLossKind| {
            let s: Vec<PathLossSample> = samples.iter().filter(|s| s.kind == kind).copied().collect();
            fit_ple_mmse(&s, frequency_ghz).ok()
        };
        let fits = PathLossFits {
            omni: fit(PathLossKind::Omni),
            dir: fit(PathLossKind::Dir),
            dir_best: fit(PathLossKind::DirBest),
        };
        RunSummary {
            frequency_ghz,
            omni_rows,
            dir_rows,
            samples,
            fits,
        }
    }
}

/// Everything needed to simulate runs of one config.
#[derive(Debug, Clone)]
pub struct Simulation {
    generator: ChannelGenerator,
    tx_pattern: AntennaPattern,
    rx_pattern: AntennaPattern,
}

impl Simulation {
    pub fn new(cfg: &ValidatedConfig, params: &ModelParams, table: &AttenuationTable) -> Result<Self, RunError> {
        Ok(Simulation {
            generator: ChannelGenerator::new(cfg, params, table)?,
            tx_pattern: AntennaPattern::new(cfg.tx_az_hpbw_deg, cfg.tx_el_hpbw_deg)?,
            rx_pattern: AntennaPattern::new(cfg.rx_az_hpbw_deg, cfg.rx_el_hpbw_deg)?,
        })
    }

    pub fn config(&self) -> &ValidatedConfig {
        self.generator.config()
    }

    pub fn generator(&self) -> &ChannelGenerator {
        &self.generator
    }

    pub fn tx_pattern(&self) -> &AntennaPattern {
        &self.tx_pattern
    }

    pub fn rx_pattern(&self) -> &AntennaPattern {
        &self.rx_pattern
    }

    /// Distance and CIR of run `run_index` only.
    pub fn cir(&self, run_index: usize, master_seed: u64) -> Result<OmniCir, RunError> {
        let cfg = self.config();
        let mut rng = run_rng(master_seed, run_index);
        let (lo, hi) = (cfg.tr_distance_min_m, cfg.tr_distance_max_m);
        let d = if lo < hi { rng.random_range(lo..=hi) } else { lo };
        Ok(self.generator.generate(d, &mut rng)?)
    }

    /// All artifacts of run `run_index`.
    pub fn run(&self, run_index: usize, master_seed: u64) -> Result<RunArtifacts, RunError> {
        let cir = self.cir(run_index, master_seed)?;
        self.derive(run_index, cir)
    }

    fn derive(&self, run_index: usize, cir: OmniCir) -> Result<RunArtifacts, RunError> {
        let cfg = self.config();
        let bw = cfg.rf_bandwidth_mhz;
        let (gt, gr) = (self.tx_pattern.boresight_gain_dbi(), self.rx_pattern.boresight_gain_dbi());
        let omni_pdp = compute_pdp(&cir, bw)?;
        let best = best_direction_search(&cir, &self.tx_pattern, &self.rx_pattern, bw)?;
        let best_path_loss_db = directional_path_loss(cir.tx_power_dbm, gt, gr, best.pdp.received_power_dbm);
        let small_scale = small_scale_pdps(&cir, cfg.n_rx, cfg.rx_spacing_wl, bw)?;
        let g0 = self.tx_pattern.boresight_gain() * self.rx_pattern.boresight_gain();
        let dir_rows = cir
            .mpcs
            .iter()
            .map(|m| self.pointed_row(run_index, &cir, m, g0, gt, gr))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RunArtifacts {
            run_index,
            cir,
            omni_pdp,
            best,
            best_path_loss_db,
            small_scale,
            dir_rows,
        })
    }

    fn pointed_row(
        &self,
        run_index: usize,
        cir: &OmniCir,
        m: &MultipathComponent,
        g0: f64,
        gt: f64,
        gr: f64,
    ) -> Result<DirPdpRow, RunError> {
        let tx = PointingAngle::new(m.aod_az_deg, m.aod_el_deg)?;
        let rx = PointingAngle::new(m.aoa_az_deg, m.aoa_el_deg)?;
        let pdp = directional_pdp(cir, &tx, &rx, &self.tx_pattern, &self.rx_pattern, self.config().rf_bandwidth_mhz)?;
        Ok(DirPdpRow {
            run_index,
            delay_ns: m.delay_ns,
            received_power_dbm: 10.0 * (m.power_mw * g0).log10(),
            phase_rad: m.phase_rad,
            aod_az_deg: m.aod_az_deg,
            aod_el_deg: m.aod_el_deg,
            aoa_az_deg: m.aoa_az_deg,
            aoa_el_deg: m.aoa_el_deg,
            path_loss_db: directional_path_loss(cir.tx_power_dbm, gt, gr, pdp.received_power_dbm),
            rms_delay_spread_ns: pdp.rms_delay_spread_ns,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub summary: RunSummary,
    /// In run order.
    pub runs: Vec<RunArtifacts>,
}

/// Runs `1..=n_runs` in parallel and gathers them in run order.
pub fn run_monte_carlo(
    cfg: &ValidatedConfig,
    params: &ModelParams,
    table: &AttenuationTable,
    n_runs: usize,
    master_seed: u64,
) -> Result<MonteCarlo, RunError> {
    if n_runs == 0 {
        return Err(RunError::NoRuns);
    }
    let sim = Simulation::new(cfg, params, table)?;
    let runs = (1..=n_runs)
        .into_par_iter()
        .map(|i| sim.run(i, master_seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MonteCarlo {
        summary: RunSummary::from_runs(cfg.frequency_ghz, &runs),
        runs,
    })
}

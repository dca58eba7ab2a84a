//! MIMO-OFDM post-processing of simulated runs: condition-number statistics
//! and eigenmode spectral efficiency.
//!
//! Channel matrices are built one run at a time and dropped after use, so
//! large arrays over many runs stay within memory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ValidatedConfig;
use crate::mimo::{
    db_to_linear, se_from_singular_values, singular_values, ArrayGeometry, ChannelMatrixSet, ConditionCdf,
    ConditionNumber, MimoError, PowerAllocation, RANK_TOLERANCE,
};
use crate::output::{format_num, write_staged, OutputError};
use crate::plot::{render_svg, Chart, Mark, Series};
use crate::runner::RunArtifacts;

pub const ANALYSIS_DIR: &str = "analysis";
pub const DEFAULT_SNR_DB: [f64; 6] = [-20.0, -10.0, 0.0, 10.0, 20.0, 30.0];

/// Array geometries and subcarrier grid for one config.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSetup {
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub offsets_hz: Vec<f64>,
}

impl AnalysisSetup {
    pub fn new(cfg: &ValidatedConfig, subcarrier_spacing_mhz: f64) -> Result<Self, MimoError> {
        let (tx, rx) = ArrayGeometry::from_config(cfg)?;
        Ok(AnalysisSetup {
            tx,
            rx,
            offsets_hz: crate::mimo::subcarrier_grid(cfg.rf_bandwidth_mhz, subcarrier_spacing_mhz)?,
        })
    }

    pub fn max_streams(&self) -> usize {
        self.tx.n_elements().min(self.rx.n_elements())
    }

    pub fn matrices(&self, run: &RunArtifacts) -> ChannelMatrixSet {
        ChannelMatrixSet::build(&run.cir, &self.offsets_hz, &self.tx, &self.rx)
    }
}

fn condition_from_sv(sv: &[f64]) -> Result<ConditionNumber, MimoError> {
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    if !(max > 0.0) {
        return Err(MimoError::ZeroMatrix);
    }
    if min < max * RANK_TOLERANCE {
        return Ok(ConditionNumber::Infinite);
    }
    Ok(ConditionNumber::Finite(20.0 * (max / min).log10()))
}

/// Singular values of every subcarrier of one run.
fn run_singular_values(setup: &AnalysisSetup, run: &RunArtifacts, normalize: bool) -> Result<Vec<Vec<f64>>, MimoError> {
    let set = setup.matrices(run);
    let set = if normalize { set.normalized()? } else { set };
    Ok(set.matrices.par_iter().map(singular_values).collect())
}

/// Condition numbers per run (outer) and subcarrier (inner).
pub fn condition_numbers(setup: &AnalysisSetup, runs: &[RunArtifacts]) -> Result<Vec<Vec<ConditionNumber>>, MimoError> {
    runs.iter()
        .map(|r| {
            run_singular_values(setup, r, false)?
                .iter()
                .map(|sv| condition_from_sv(sv))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub per_run: Vec<ConditionCdf>,
    pub pooled: ConditionCdf,
}

pub fn condition_report(setup: &AnalysisSetup, runs: &[RunArtifacts]) -> Result<ConditionReport, MimoError> {
    let values = condition_numbers(setup, runs)?;
    let pooled: Vec<ConditionNumber> = values.iter().flatten().copied().collect();
    Ok(ConditionReport {
        per_run: values.iter().map(|v| ConditionCdf::from_values(v)).collect(),
        pooled: ConditionCdf::from_values(&pooled),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SePoint {
    pub snr_db: f64,
    pub n_streams: usize,
    pub equal_split: f64,
    pub water_filling: f64,
}

/// Average SE (mean over subcarriers, then over runs) for every SNR and
/// stream count. Each run's matrices share one scale factor that brings
/// their mean squared Frobenius norm to `N_t N_r`, so SNR is per receive
/// antenna and path loss drops out.
pub fn spectral_efficiency_curve(
    setup: &AnalysisSetup,
    runs: &[RunArtifacts],
    snrs_db: &[f64],
    streams: &[usize],
) -> Result<Vec<SePoint>, MimoError> {
    if runs.is_empty() {
        return Err(MimoError::Empty);
    }
    let max = setup.max_streams();
    if let Some(&bad) = streams.iter().find(|&&s| s == 0 || s > max) {
        return Err(MimoError::Streams { got: bad, max });
    }
    let grid: Vec<(f64, usize)> = streams
        .iter()
        .flat_map(|&s| snrs_db.iter().map(move |&snr| (snr, s)))
        .collect();
    // per run: (equal, water) per grid point, averaged over subcarriers
    let per_run: Vec<Vec<(f64, f64)>> = runs
        .iter()
        .map(|r| {
            let svs = run_singular_values(setup, r, true)?;
            let n = svs.len() as f64;
            grid.iter()
                .map(|&(snr_db, s)| {
                    let snr = db_to_linear(snr_db);
                    let mut eq = 0.0;
                    let mut wf = 0.0;
                    for sv in &svs {
                        eq += se_from_singular_values(sv, snr, s, PowerAllocation::EqualSplit)?;
                        wf += se_from_singular_values(sv, snr, s, PowerAllocation::WaterFilling)?;
                    }
                    Ok((eq / n, wf / n))
                })
                .collect()
        })
        .collect::<Result<_, MimoError>>()?;
    let n_runs = runs.len() as f64;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(g, &(snr_db, n_streams))| SePoint {
            snr_db,
            n_streams,
            equal_split: per_run.iter().map(|r| r[g].0).sum::<f64>() / n_runs,
            water_filling: per_run.iter().map(|r| r[g].1).sum::<f64>() / n_runs,
        })
        .collect())
}

fn cn_text(c: Option<ConditionNumber>) -> String {
    match c {
        Some(ConditionNumber::Finite(v)) => format_num(v),
        Some(ConditionNumber::Infinite) => "inf".into(),
        None => "nan".into(),
    }
}

pub fn cdf_text(cdf: &ConditionCdf) -> String {
    let mut s = format!("%infinite_count={}\n%total={}\n", cdf.infinite_count, cdf.total);
    s.push_str("%condition_number_db\tcumulative_probability\n");
    for (v, p) in &cdf.points {
        let _ = writeln!(s, "{}\t{}", format_num(*v), format_num(*p));
    }
    s
}

pub fn per_run_text(report: &ConditionReport, runs: &[RunArtifacts]) -> String {
    let mut s = String::from("%run_index\tmedian_db\tinfinite_count\tsubcarriers\n");
    for (r, cdf) in runs.iter().zip(&report.per_run) {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}",
            r.run_index,
            cn_text(cdf.median()),
            cdf.infinite_count,
            cdf.total
        );
    }
    s
}

pub fn se_text(points: &[SePoint]) -> String {
    let mut s = String::from("%snr_db\tstreams\tequal_split_bps_hz\twater_filling_bps_hz\n");
    for p in points {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}",
            format_num(p.snr_db),
            p.n_streams,
            format_num(p.equal_split),
            format_num(p.water_filling)
        );
    }
    s
}

fn cdf_chart(cdf: &ConditionCdf, setup: &AnalysisSetup) -> Chart {
    Chart {
        title: format!(
            "Condition number CDF, {}x{}",
            setup.rx.n_elements(),
            setup.tx.n_elements()
        ),
        x_label: "Condition number (dB)".into(),
        y_label: "CDF".into(),
        log_x: false,
        notes: vec![format!("rank deficient: {} of {}", cdf.infinite_count, cdf.total)],
        series: vec![Series {
            name: "pooled".into(),
            mark: Mark::Line,
            points: cdf.points.clone(),
            sizes: None,
        }],
    }
}

fn se_chart(points: &[SePoint]) -> Chart {
    let mut streams: Vec<usize> = points.iter().map(|p| p.n_streams).collect();
    streams.dedup();
    let mut series = Vec::new();
    for s in streams {
        let pts = points.iter().filter(|p| p.n_streams == s);
        series.push(Series {
            name: format!("{s} stream(s), equal"),
            mark: Mark::Line,
            points: pts.clone().map(|p| (p.snr_db, p.equal_split)).collect(),
            sizes: None,
        });
        series.push(Series {
            name: format!("{s} stream(s), water"),
            mark: Mark::Line,
            points: pts.map(|p| (p.snr_db, p.water_filling)).collect(),
            sizes: None,
        });
    }
    Chart {
        title: "Eigenmode spectral efficiency".into(),
        x_label: "SNR (dB)".into(),
        y_label: "Spectral efficiency (bits/s/Hz)".into(),
        log_x: false,
        notes: vec![],
        series,
    }
}

pub fn write_condition_analysis(
    setup: &AnalysisSetup,
    runs: &[RunArtifacts],
    out_dir: &Path,
    svg: bool,
) -> Result<Vec<PathBuf>, AnalysisError> {
    let report = condition_report(setup, runs)?;
    let dir = Path::new(ANALYSIS_DIR);
    let mut files = vec![
        (dir.join("ConditionNumberCDF.txt"), cdf_text(&report.pooled).into_bytes()),
        (dir.join("ConditionNumberPerRun.txt"), per_run_text(&report, runs).into_bytes()),
    ];
    if svg {
        files.push((
            dir.join("ConditionNumberCDF.svg"),
            render_svg(&cdf_chart(&report.pooled, setup)).into_bytes(),
        ));
    }
    Ok(write_staged(out_dir, "mimo", &files)?)
}

pub fn write_se_analysis(
    setup: &AnalysisSetup,
    runs: &[RunArtifacts],
    snrs_db: &[f64],
    streams: &[usize],
    out_dir: &Path,
    svg: bool,
) -> Result<Vec<PathBuf>, AnalysisError> {
    let points = spectral_efficiency_curve(setup, runs, snrs_db, streams)?;
    let dir = Path::new(ANALYSIS_DIR);
    let mut files = vec![(dir.join("SpectralEfficiency.txt"), se_text(&points).into_bytes())];
    if svg {
        files.push((dir.join("SpectralEfficiency.svg"), render_svg(&se_chart(&points)).into_bytes()));
    }
    Ok(write_staged(out_dir, "se", &files)?)
}

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Mimo(#[from] MimoError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

//! Plot data for the per-run and summary figures, with optional SVG.
//!
//! Data files live in `plots/` and use the same text conventions as the
//! main outputs, except that a few `%key=value` annotation lines may precede
//! the column header.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::output::{format_num, write_staged, OutputError};
use crate::pathloss::{fspl, PathLossKind, PathLossSample};
use crate::runner::{RunArtifacts, RunSummary};
use crate::sscm::{LobeSide, PowerDelayProfile};

pub const PLOT_DIR: &str = "plots";
pub const SCATTER_FILE: &str = "PathLossScatter.dat";
pub const SCATTER_HEADER: &str = "%series\tdistance_m\tpath_loss_db";

const KINDS: [PathLossKind; 3] = [PathLossKind::Omni, PathLossKind::Dir, PathLossKind::DirBest];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mark {
    Stem,
    Points,
    Line,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub mark: Mark,
    pub points: Vec<(f64, f64)>,
    /// Marker radius per point, pixels.
    pub sizes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub notes: Vec<String>,
    pub series: Vec<Series>,
}

/// Annotation line, value printed at full precision so it parses back exactly.
fn note(key: &str, v: f64) -> String {
    format!("%{key}={v}\n")
}

fn pdp_data(notes: &str, pdp: &PowerDelayProfile) -> String {
    let mut s = String::from(notes);
    s += &note("received_power_dbm", pdp.received_power_dbm);
    s += &note("rms_delay_spread_ns", pdp.rms_delay_spread_ns);
    s.push_str("%delay_ns\tpower_dbm\n");
    for b in &pdp.bins {
        let _ = writeln!(s, "{}\t{}", format_num(b.delay_ns), format_num(b.power_dbm()));
    }
    s
}

fn spectrum_data(run: &RunArtifacts, side: LobeSide) -> String {
    let mut s = String::from("%az_deg\tel_deg\tpower_dbm\tlobe\n");
    for lobe in run.cir.lobes(side) {
        for &i in &lobe.members {
            let m = &run.cir.mpcs[i];
            let (az, el) = match side {
                LobeSide::Aod => (m.aod_az_deg, m.aod_el_deg),
                LobeSide::Aoa => (m.aoa_az_deg, m.aoa_el_deg),
            };
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}",
                format_num(az),
                format_num(el),
                format_num(10.0 * m.power_mw.log10()),
                lobe.id + 1
            );
        }
    }
    s
}

fn small_scale_data(run: &RunArtifacts) -> String {
    crate::output::small_scale_text(&run.small_scale)
}

/// Scatter of every path loss sample with the three fits as annotations.
pub fn scatter_data(summary: &RunSummary) -> String {
    let mut s = note("frequency_ghz", summary.frequency_ghz);
    for kind in KINDS {
        if let Some(f) = summary.fits.get(kind) {
            let _ = writeln!(s, "%fit {} ple={} sigma_db={}", kind.label(), f.ple, f.sigma_db);
        }
    }
    s.push_str(SCATTER_HEADER);
    s.push('\n');
    for kind in KINDS {
        for p in summary.samples.iter().filter(|p| p.kind == kind) {
            let _ = writeln!(
                s,
                "{}\t{}\t{}",
                kind.label(),
                format_num(p.distance_m),
                format_num(p.path_loss_db)
            );
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScatterError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    pub frequency_ghz: Option<f64>,
    pub samples: Vec<PathLossSample>,
}

/// Reads a scatter file: `%frequency_ghz=F` annotation (optional), `%`
/// comment lines, then `series distance_m path_loss_db` rows separated by
/// whitespace. Series labels are `omni`, `dir`, `dir-best`.
pub fn parse_scatter(text: &str) -> Result<Scatter, ScatterError> {
    let mut frequency_ghz = None;
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |reason: String| ScatterError::Line { line, reason };
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('%') {
            if let Some(v) = c.trim().strip_prefix("frequency_ghz=") {
                frequency_ghz = Some(v.trim().parse::<f64>().map_err(|e| err(format!("frequency: {e}")))?);
            }
            continue;
        }
        let cols: Vec<&str> = t.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(err(format!("expected 3 columns, found {}", cols.len())));
        }
        let kind = PathLossKind::from_label(cols[0]).ok_or_else(|| err(format!("unknown series '{}'", cols[0])))?;
        let d: f64 = cols[1].parse().map_err(|e| err(format!("distance: {e}")))?;
        let pl: f64 = cols[2].parse().map_err(|e| err(format!("path loss: {e}")))?;
        samples.push(PathLossSample::new(d, pl, kind).map_err(|e| err(e.to_string()))?);
    }
    Ok(Scatter { frequency_ghz, samples })
}

fn pdp_chart(title: String, pdp: &PowerDelayProfile) -> Chart {
    Chart {
        title,
        x_label: "Delay (ns)".into(),
        y_label: "Received power (dBm)".into(),
        log_x: false,
        notes: vec![
            format!("Pr = {} dBm", format_num(pdp.received_power_dbm)),
            format!("RMS DS = {} ns", format_num(pdp.rms_delay_spread_ns)),
        ],
        series: vec![Series {
            name: "PDP".into(),
            mark: Mark::Stem,
            points: pdp.bins.iter().map(|b| (b.delay_ns, b.power_dbm())).collect(),
            sizes: None,
        }],
    }
}

fn spectrum_chart(run: &RunArtifacts, side: LobeSide) -> Chart {
    let lobes = run.cir.lobes(side);
    let max_dbm = run
        .cir
        .mpcs
        .iter()
        .map(|m| 10.0 * m.power_mw.log10())
        .fold(f64::NEG_INFINITY, f64::max);
    let series = lobes
        .iter()
        .map(|lobe| {
            let (pts, sizes) = lobe
                .members
                .iter()
                .map(|&i| {
                    let m = &run.cir.mpcs[i];
                    let (az, el) = match side {
                        LobeSide::Aod => (m.aod_az_deg, m.aod_el_deg),
                        LobeSide::Aoa => (m.aoa_az_deg, m.aoa_el_deg),
                    };
                    let rel = (10.0 * m.power_mw.log10() - max_dbm).max(-30.0);
                    ((az, el), 2.0 + 6.0 * (1.0 + rel / 30.0))
                })
                .unzip();
            Series {
                name: format!("Lobe {}", lobe.id + 1),
                mark: Mark::Points,
                points: pts,
                sizes: Some(sizes),
            }
        })
        .collect();
    let which = match side {
        LobeSide::Aod => "AOD",
        LobeSide::Aoa => "AOA",
    };
    Chart {
        title: format!("{which} power spectrum, run {}", run.run_index),
        x_label: format!("{which} azimuth (deg)"),
        y_label: format!("{which} elevation (deg)"),
        log_x: false,
        notes: vec!["marker size: path power, 30 dB range".into()],
        series,
    }
}

fn small_scale_chart(run: &RunArtifacts) -> Chart {
    let series = run
        .small_scale
        .iter()
        .map(|(x, pdp)| Series {
            name: format!("{} wl", format_num(*x)),
            mark: Mark::Stem,
            points: pdp.bins.iter().map(|b| (b.delay_ns, b.power_dbm())).collect(),
            sizes: None,
        })
        .collect();
    Chart {
        title: format!("Small-scale PDPs, run {}", run.run_index),
        x_label: "Delay (ns)".into(),
        y_label: "Received power (dBm)".into(),
        log_x: false,
        notes: vec![],
        series,
    }
}

pub fn scatter_chart(summary: &RunSummary) -> Chart {
    let mut series = Vec::new();
    let (lo, hi) = summary
        .samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.distance_m), b.max(s.distance_m)));
    let mut notes = Vec::new();
    for kind in KINDS {
        series.push(Series {
            name: kind.label().into(),
            mark: Mark::Points,
            points: summary
                .samples
                .iter()
                .filter(|s| s.kind == kind)
                .map(|s| (s.distance_m, s.path_loss_db))
                .collect(),
            sizes: None,
        });
        if let (Some(f), Ok(anchor)) = (summary.fits.get(kind), fspl(summary.frequency_ghz)) {
            notes.push(format!(
                "{}: n = {}, sigma = {} dB",
                kind.label(),
                format_num(f.ple),
                format_num(f.sigma_db)
            ));
            let line = (0..=20)
                .map(|i| {
                    let d = lo * (hi / lo).powf(i as f64 / 20.0);
                    (d, anchor + 10.0 * f.ple * d.log10())
                })
                .collect();
            series.push(Series {
                name: format!("{} fit", kind.label()),
                mark: Mark::Line,
                points: line,
                sizes: None,
            });
        }
    }
    Chart {
        title: format!("Path loss at {} GHz", format_num(summary.frequency_ghz)),
        x_label: "T-R separation (m)".into(),
        y_label: "Path loss (dB)".into(),
        log_x: true,
        notes,
        series,
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a chart as a standalone SVG document.
pub fn render_svg(chart: &Chart) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 50.0);
    let tx = |x: f64| if chart.log_x { x.log10() } else { x };
    let pts = chart.series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts.filter(|(x, y)| tx(*x).is_finite() && y.is_finite()) {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 < 1e-9 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let has_stems = chart.series.iter().any(|s| s.mark == Mark::Stem);
    let base = if has_stems { y0 } else { y0.max(0.0).min(y1) };
    let (pw, ph) = (w - left - right, h - top - bottom);
    let px = |x: f64| left + (tx(x) - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let xv = x0 + f * (x1 - x0);
        let xl = if chart.log_x { 10f64.powf(xv) } else { xv };
        let gx = left + f * pw;
        let _ = writeln!(
            s,
            r##"<line x1="{gx:.2}" y1="{top}" x2="{gx:.2}" y2="{}" stroke="#ddd"/><text x="{gx:.2}" y="{}" text-anchor="middle">{}</text>"##,
            top + ph,
            top + ph + 16.0,
            tick_label(xl)
        );
        let yv = y0 + f * (y1 - y0);
        let gy = top + ph - f * ph;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{gy:.2}" x2="{}" y2="{gy:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            left + pw,
            left - 6.0,
            gy + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&chart.y_label)
    );

    for (i, series) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match series.mark {
            Mark::Stem => {
                for &(x, y) in &series.points {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/><circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
                        px(x),
                        py(base),
                        px(x),
                        py(y),
                        px(x),
                        py(y)
                    );
                }
            }
            Mark::Points => {
                for (j, &(x, y)) in series.points.iter().enumerate() {
                    let r = series.sizes.as_ref().map_or(2.5, |v| v[j]);
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="none" stroke="{color}"/>"#,
                        px(x),
                        py(y)
                    );
                }
            }
            Mark::Line => {
                let path: Vec<String> = series
                    .points
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    path.join(" ")
                );
            }
        }
        let ly = top + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            left + pw + 12.0,
            ly - 9.0,
            left + pw + 28.0,
            ly,
            escape(&series.name)
        );
    }
    let ny = top + 14.0 + 16.0 * (chart.series.len() as f64 + 1.0);
    for (i, n) in chart.notes.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11">{}</text>"#,
            left + pw + 12.0,
            ny + 15.0 * i as f64,
            escape(n)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn run_plots(run: &RunArtifacts) -> Vec<(String, String, Chart)> {
    let n = run.run_index;
    let dir_notes = format!(
        "{}{}{}{}{}",
        note("tx_az_deg", run.best.tx.azimuth_deg),
        note("tx_el_deg", run.best.tx.elevation_deg),
        note("rx_az_deg", run.best.rx.azimuth_deg),
        note("rx_el_deg", run.best.rx.elevation_deg),
        note("path_loss_db", run.best_path_loss_db),
    );
    let omni_notes = format!(
        "{}{}",
        note("distance_m", run.cir.distance_m),
        note("path_loss_db", run.omni_path_loss_db())
    );
    vec![
        (format!("AODSpectrum{n}"), spectrum_data(run, LobeSide::Aod), spectrum_chart(run, LobeSide::Aod)),
        (format!("AOASpectrum{n}"), spectrum_data(run, LobeSide::Aoa), spectrum_chart(run, LobeSide::Aoa)),
        (
            format!("OmniPDP{n}"),
            pdp_data(&omni_notes, &run.omni_pdp),
            pdp_chart(format!("Omnidirectional PDP, run {n}"), &run.omni_pdp),
        ),
        (
            format!("DirectionalPDP{n}"),
            pdp_data(&dir_notes, &run.best.pdp),
            pdp_chart(format!("Strongest directional PDP, run {n}"), &run.best.pdp),
        ),
        (format!("SmallScalePDP{n}"), small_scale_data(run), small_scale_chart(run)),
    ]
}

fn plot_files(stem: &str, data: String, chart: &Chart, svg: bool) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(PLOT_DIR);
    let mut v = vec![(dir.join(format!("{stem}.dat")), data.into_bytes())];
    if svg {
        v.push((dir.join(format!("{stem}.svg")), render_svg(chart).into_bytes()));
    }
    v
}

/// Writes one run's five figure data files (and SVGs when `svg`).
pub fn write_run_plots(run: &RunArtifacts, out_dir: &Path, svg: bool) -> Result<Vec<PathBuf>, OutputError> {
    let files: Vec<(PathBuf, Vec<u8>)> = run_plots(run)
        .into_iter()
        .flat_map(|(stem, data, chart)| plot_files(&stem, data, &chart, svg))
        .collect();
    write_staged(out_dir, &format!("plots{}", run.run_index), &files)
}

/// Writes the path loss scatter figure.
pub fn write_summary_plots(summary: &RunSummary, out_dir: &Path, svg: bool) -> Result<Vec<PathBuf>, OutputError> {
    let files = plot_files(
        SCATTER_FILE.trim_end_matches(".dat"),
        scatter_data(summary),
        &scatter_chart(summary),
        svg,
    );
    write_staged(out_dir, "plots", &files)
}

/// All plot data for a finished simulation.
pub fn emit_plot_data(
    summary: &RunSummary,
    runs: &[RunArtifacts],
    out_dir: &Path,
    svg: bool,
) -> Result<Vec<PathBuf>, OutputError> {
    let mut out = Vec::new();
    for r in runs {
        out.extend(write_run_plots(r, out_dir, svg)?);
    }
    out.extend(write_summary_plots(summary, out_dir, svg)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate, SimulationConfig};
    use crate::params::ModelParams;
    use crate::pathloss::{fit_ple_mmse, AttenuationTable};
    use crate::runner::run_monte_carlo;

    fn sim() -> crate::runner::MonteCarlo {
        let cfg = validate(&SimulationConfig {
            tr_distance_min_m: 20.0,
            tr_distance_max_m: 180.0,
            ..Default::default()
        })
        .unwrap();
        run_monte_carlo(&cfg, &ModelParams::default(), &AttenuationTable::shipped(), 6, 2).unwrap()
    }

    #[test]
    fn scatter_has_three_series_and_exact_fits() {
        let mc = sim();
        let text = scatter_data(&mc.summary);
        for label in ["omni", "dir", "dir-best"] {
            assert!(text.lines().any(|l| l.starts_with(&format!("{label}\t"))), "{label}");
        }
        let parsed = parse_scatter(&text).unwrap();
        assert_eq!(parsed.frequency_ghz, Some(28.0));
        assert_eq!(parsed.samples.len(), mc.summary.samples.len());
        for kind in KINDS {
            let fit = mc.summary.fits.get(kind).unwrap();
            let line = text
                .lines()
                .find(|l| l.starts_with(&format!("%fit {} ", kind.label())))
                .unwrap();
            let vals: Vec<f64> = line
                .split_whitespace()
                .skip(2)
                .map(|kv| kv.split_once('=').unwrap().1.parse().unwrap())
                .collect();
            assert_eq!(vals, vec![fit.ple, fit.sigma_db]);
            let samples: Vec<_> = mc.summary.samples.iter().filter(|s| s.kind == kind).copied().collect();
            assert_eq!(fit_ple_mmse(&samples, 28.0).unwrap(), fit);
        }
    }

    #[test]
    fn scatter_parse_errors() {
        assert!(parse_scatter("omni 10\n").is_err());
        assert!(parse_scatter("diag 10 80\n").is_err());
        assert!(parse_scatter("omni 0.5 80\n").is_err());
        let s = parse_scatter("% note\nomni 10 80\ndir-best 20 90\n").unwrap();
        assert_eq!(s.frequency_ghz, None);
        assert_eq!(s.samples[1].kind, PathLossKind::DirBest);
    }

    #[test]
    fn svg_is_optional() {
        let mc = sim();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        emit_plot_data(&mc.summary, &mc.runs, a.path(), false).unwrap();
        emit_plot_data(&mc.summary, &mc.runs, b.path(), true).unwrap();
        let list = |p: &Path, ext: &str| -> Vec<String> {
            let mut v: Vec<String> = std::fs::read_dir(p.join(PLOT_DIR))
                .unwrap()
                .map(|e| e.unwrap().file_name().into_string().unwrap())
                .filter(|n| n.ends_with(ext))
                .collect();
            v.sort();
            v
        };
        assert_eq!(list(a.path(), ".dat"), list(b.path(), ".dat"));
        assert!(list(a.path(), ".svg").is_empty());
        assert_eq!(list(b.path(), ".svg").len(), list(b.path(), ".dat").len());
        assert_eq!(list(a.path(), ".dat").len(), 5 * 6 + 1);
        for name in list(a.path(), ".dat") {
            let x = std::fs::read(a.path().join(PLOT_DIR).join(&name)).unwrap();
            let y = std::fs::read(b.path().join(PLOT_DIR).join(&name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
        let svg = std::fs::read_to_string(b.path().join(PLOT_DIR).join("PathLossScatter.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}

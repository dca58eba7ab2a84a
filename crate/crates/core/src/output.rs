//! Text output suite and binary sidecars.
//!
//! Every text file is tab separated with `\n` line endings and one header
//! line starting with `%`. Numbers are printed by [`format_num`].

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{serialize_config, SimulationConfig};
use crate::runner::{DirPdpRow, OmniPdpRow, RunArtifacts, RunSummary};
use crate::sscm::{LobeSide, PowerDelayProfile};

pub const SIDECAR_MAGIC: &[u8; 8] = b"CHSIMCIR";
pub const SIDECAR_VERSION: u32 = 1;
pub const SIDECAR_DIR: &str = "sidecar";

/// Per-path columns stored in a sidecar, in record order.
pub const SIDECAR_FIELDS: [&str; 10] = [
    "delay_ns",
    "power_mw",
    "phase_rad",
    "aod_az_deg",
    "aod_el_deg",
    "aoa_az_deg",
    "aoa_el_deg",
    "cluster_id",
    "lobe_tx",
    "lobe_rx",
];

pub const OMNI_PDP_HEADER: &str = "%delay_ns\tpower_dbm";
pub const SMALL_SCALE_HEADER: &str = "%rx_separation_wl\tdelay_ns\tpower_dbm";
pub const AOD_LOBE_HEADER: &str = "%delay_ns\tpower_mw\tphase_rad\taod_az_deg\taod_el_deg";
pub const AOA_LOBE_HEADER: &str = "%delay_ns\tpower_mw\tphase_rad\taoa_az_deg\taoa_el_deg";
pub const OMNI_INFO_HEADER: &str = "%distance_m\trx_power_dbm\tpath_loss_db\trms_delay_spread_ns";
pub const DIR_INFO_HEADER: &str = "%run_index\tdelay_ns\trx_power_dbm\tphase_rad\taod_az_deg\taod_el_deg\taoa_az_deg\taoa_el_deg\tpath_loss_db\trms_delay_spread_ns";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("sidecar: {0}")]
    Sidecar(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Fixed notation with six significant digits: `-73.4215`, `0.000123457`,
/// `1234570`. Zero prints as `0`; non-finite values as `inf`, `-inf`, `nan`.
pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let rounded: f64 = sci.parse().unwrap();
    let decimals = (5 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Tab-joined rows under a header line.
pub fn table(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_num).collect();
        s.push_str(&cells.join("\t"));
        s.push('\n');
    }
    s
}

pub fn pdp_text(pdp: &PowerDelayProfile) -> String {
    table(
        OMNI_PDP_HEADER,
        pdp.bins.iter().map(|b| vec![b.delay_ns, b.power_dbm()]),
    )
}

pub fn small_scale_text(series: &[(f64, PowerDelayProfile)]) -> String {
    table(
        SMALL_SCALE_HEADER,
        series
            .iter()
            .flat_map(|(x, pdp)| pdp.bins.iter().map(move |b| vec![*x, b.delay_ns, b.power_dbm()])),
    )
}

/// Contents of each lobe file for one side, lobe 1 first.
pub fn lobe_texts(run: &RunArtifacts, side: LobeSide) -> Vec<String> {
    let header = match side {
        LobeSide::Aod => AOD_LOBE_HEADER,
        LobeSide::Aoa => AOA_LOBE_HEADER,
    };
    run.cir
        .lobes(side)
        .iter()
        .map(|lobe| {
            table(
                header,
                lobe.members.iter().map(|&i| {
                    let m = &run.cir.mpcs[i];
                    let (az, el) = match side {
                        LobeSide::Aod => (m.aod_az_deg, m.aod_el_deg),
                        LobeSide::Aoa => (m.aoa_az_deg, m.aoa_el_deg),
                    };
                    vec![m.delay_ns, m.power_mw, m.phase_rad, az, el]
                }),
            )
        })
        .collect()
}

/// `(file name, contents)` for every per-run text file.
pub fn run_files(run: &RunArtifacts) -> Vec<(String, String)> {
    let n = run.run_index;
    let mut files = vec![
        (format!("OmniPDP{n}.txt"), pdp_text(&run.omni_pdp)),
        (format!("DirectionalPDP{n}.txt"), pdp_text(&run.best.pdp)),
        (format!("SmallScalePDP{n}.txt"), small_scale_text(&run.small_scale)),
    ];
    for (side, stem) in [(LobeSide::Aod, "AODLobePowerSpectrum"), (LobeSide::Aoa, "AOALobePowerSpectrum")] {
        for (x, text) in lobe_texts(run, side).into_iter().enumerate() {
            files.push((format!("{stem}{n}_Lobe{}.txt", x + 1), text));
        }
    }
    files
}

pub fn omni_info_text(rows: &[OmniPdpRow]) -> String {
    table(
        OMNI_INFO_HEADER,
        rows.iter()
            .map(|r| vec![r.distance_m, r.received_power_dbm, r.path_loss_db, r.rms_delay_spread_ns]),
    )
}

pub fn dir_info_text(rows: &[DirPdpRow]) -> String {
    let mut s = String::from(DIR_INFO_HEADER);
    s.push('\n');
    for r in rows {
        let rest: Vec<String> = [
            r.delay_ns,
            r.received_power_dbm,
            r.phase_rad,
            r.aod_az_deg,
            r.aod_el_deg,
            r.aoa_az_deg,
            r.aoa_el_deg,
            r.path_loss_db,
            r.rms_delay_spread_ns,
        ]
        .into_iter()
        .map(format_num)
        .collect();
        s.push_str(&format!("{}\t{}\n", r.run_index, rest.join("\t")));
    }
    s
}

/// Config echo that [`crate::config::parse_config`] reads back.
pub fn basic_parameters_text(cfg: &SimulationConfig, n_runs: usize, seed: u64) -> String {
    format!("# runs = {n_runs}\n# seed = {seed}\n{}", serialize_config(cfg))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Writes files into a fresh staging directory under `out_dir`, then renames
/// each to its relative path under `out_dir`. Returns the final paths.
pub(crate) fn write_staged(
    out_dir: &Path,
    stage_name: &str,
    files: &[(PathBuf, Vec<u8>)],
) -> Result<Vec<PathBuf>, OutputError> {
    let stage = out_dir.join(format!(".staging-{stage_name}"));
    if stage.exists() {
        fs::remove_dir_all(&stage).map_err(io_err(&stage))?;
    }
    fs::create_dir_all(&stage).map_err(io_err(&stage))?;
    let mut done = Vec::with_capacity(files.len());
    for (i, (_, data)) in files.iter().enumerate() {
        write(&stage.join(i.to_string()), data)?;
    }
    for (i, (rel, _)) in files.iter().enumerate() {
        let dest = out_dir.join(rel);
        if let Some(parent) = dest.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::rename(stage.join(i.to_string()), &dest).map_err(io_err(&dest))?;
        done.push(dest);
    }
    fs::remove_dir(&stage).map_err(io_err(&stage))?;
    Ok(done)
}

/// Writes one run's text files and its sidecar.
pub fn write_run_files(run: &RunArtifacts, out_dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = run_files(run)
        .into_iter()
        .map(|(name, text)| (PathBuf::from(name), text.into_bytes()))
        .collect();
    files.push((
        Path::new(SIDECAR_DIR).join(format!("CIR{}.bin", run.run_index)),
        encode_sidecar(run),
    ));
    write_staged(out_dir, &format!("run{}", run.run_index), &files)
}

pub fn write_summary_files(
    summary: &RunSummary,
    cfg: &SimulationConfig,
    n_runs: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, OutputError> {
    let files = vec![
        (PathBuf::from("BasicParameters.txt"), basic_parameters_text(cfg, n_runs, seed).into_bytes()),
        (PathBuf::from("OmniPDPInfo.txt"), omni_info_text(&summary.omni_rows).into_bytes()),
        (PathBuf::from("DirPDPInfo.txt"), dir_info_text(&summary.dir_rows).into_bytes()),
    ];
    write_staged(out_dir, "summary", &files)
}

/// Decoded sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    /// `key = value` metadata in file order.
    pub header: Vec<(String, String)>,
    pub fields: Vec<String>,
    /// One row per path, `fields.len()` values each.
    pub records: Vec<Vec<f64>>,
}

impl Sidecar {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, field: &str) -> Option<Vec<f64>> {
        let i = self.fields.iter().position(|f| f == field)?;
        Some(self.records.iter().map(|r| r[i]).collect())
    }
}

/// Layout, all integers little endian:
///
/// ```text
/// magic     8 bytes  "CHSIMCIR"
/// version   u32
/// hdr_len   u32      byte length of the header text
/// header    utf-8    "key = value\n" lines
/// n_fields  u32
/// names     n_fields × (u32 length, utf-8 bytes)
/// n_records u64
/// records   n_records × n_fields × f64
/// ```
pub fn encode_sidecar(run: &RunArtifacts) -> Vec<u8> {
    let c = &run.cir;
    let header = [
        ("run_index", run.run_index.to_string()),
        ("distance_m", c.distance_m.to_string()),
        ("tx_power_dbm", c.tx_power_dbm.to_string()),
        ("omni_path_loss_db", c.omni_path_loss_db.to_string()),
        ("ple", c.large_scale.ple.to_string()),
        ("shadow_db", c.large_scale.shadow_db.to_string()),
        ("attenuation_db", c.large_scale.attenuation_db.to_string()),
        ("polarization_db", c.large_scale.polarization_db.to_string()),
        ("los", c.los.to_string()),
        ("n_time_clusters", c.clusters.len().to_string()),
        ("n_aod_lobes", c.aod_lobes.len().to_string()),
        ("n_aoa_lobes", c.aoa_lobes.len().to_string()),
        ("best_tx_az_deg", run.best.tx.azimuth_deg.to_string()),
        ("best_tx_el_deg", run.best.tx.elevation_deg.to_string()),
        ("best_rx_az_deg", run.best.rx.azimuth_deg.to_string()),
        ("best_rx_el_deg", run.best.rx.elevation_deg.to_string()),
        ("best_path_loss_db", run.best_path_loss_db.to_string()),
    ]
    .iter()
    .map(|(k, v)| format!("{k} = {v}\n"))
    .collect::<String>();

    let mut b = Vec::new();
    b.extend_from_slice(SIDECAR_MAGIC);
    b.extend_from_slice(&SIDECAR_VERSION.to_le_bytes());
    b.extend_from_slice(&(header.len() as u32).to_le_bytes());
    b.extend_from_slice(header.as_bytes());
    b.extend_from_slice(&(SIDECAR_FIELDS.len() as u32).to_le_bytes());
    for f in SIDECAR_FIELDS {
        b.extend_from_slice(&(f.len() as u32).to_le_bytes());
        b.extend_from_slice(f.as_bytes());
    }
    b.extend_from_slice(&(c.mpcs.len() as u64).to_le_bytes());
    for m in &c.mpcs {
        for v in [
            m.delay_ns,
            m.power_mw,
            m.phase_rad,
            m.aod_az_deg,
            m.aod_el_deg,
            m.aoa_az_deg,
            m.aoa_el_deg,
            m.cluster_id as f64,
            m.lobe_tx as f64,
            m.lobe_rx as f64,
        ] {
            b.extend_from_slice(&v.to_le_bytes());
        }
    }
    b
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], OutputError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.data.len())
            .ok_or_else(|| OutputError::Sidecar(format!("truncated at byte {}", self.pos)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, OutputError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, OutputError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn text(&mut self, n: usize) -> Result<&'a str, OutputError> {
        std::str::from_utf8(self.take(n)?).map_err(|e| OutputError::Sidecar(e.to_string()))
    }
}

pub fn decode_sidecar(data: &[u8]) -> Result<Sidecar, OutputError> {
    let mut c = Cursor { data, pos: 0 };
    if c.take(8)? != SIDECAR_MAGIC {
        return Err(OutputError::Sidecar("bad magic".into()));
    }
    let version = c.u32()?;
    if version != SIDECAR_VERSION {
        return Err(OutputError::Sidecar(format!("unsupported version {version}")));
    }
    let hdr_len = c.u32()? as usize;
    let header = c
        .text(hdr_len)?
        .lines()
        .map(|l| {
            l.split_once(" = ")
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| OutputError::Sidecar(format!("bad header line '{l}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n_fields = c.u32()? as usize;
    let mut fields = Vec::with_capacity(n_fields.min(1024));
    for _ in 0..n_fields {
        let len = c.u32()? as usize;
        fields.push(c.text(len)?.to_string());
    }
    let n_records = c.u64()? as usize;
    let mut records = Vec::new();
    for _ in 0..n_records {
        let row = (0..n_fields)
            .map(|_| Ok(f64::from_le_bytes(c.take(8)?.try_into().unwrap())))
            .collect::<Result<Vec<f64>, OutputError>>()?;
        records.push(row);
    }
    if c.pos != data.len() {
        return Err(OutputError::Sidecar(format!("{} trailing bytes", data.len() - c.pos)));
    }
    Ok(Sidecar { header, fields, records })
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, OutputError> {
    decode_sidecar(&fs::read(path).map_err(io_err(path))?)
}

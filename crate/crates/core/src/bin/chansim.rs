use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use chansim::analysis::{write_condition_analysis, write_se_analysis, AnalysisError, AnalysisSetup, DEFAULT_SNR_DB};
use chansim::config::{parse_config, validate, ValidatedConfig};
use chansim::output::{write_run_files, write_summary_files, OutputError};
use chansim::params::{ModelParams, DEFAULT_MODEL_PARAMS};
use chansim::pathloss::{fit_ple_mmse, AttenuationTable, PathLossKind};
use chansim::plot::{emit_plot_data, parse_scatter};
use chansim::runner::run_monte_carlo;

const EXIT_INVALID: u8 = 1;
const EXIT_IO: u8 = 2;

#[derive(Parser)]
#[command(name = "chansim", version, about = "Statistical millimeter-wave channel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Analysis {
    /// Condition-number CDF over subcarriers
    Mimo,
    /// Eigenmode spectral efficiency versus SNR
    Se,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate N runs and write the output file suite
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also render SVG figures
        #[arg(long)]
        svg: bool,
        #[arg(long, default_value_t = 10.0)]
        subcarrier_spacing_mhz: f64,
        #[arg(long, value_enum, value_delimiter = ',')]
        analyze: Vec<Analysis>,
        /// SNR points in dB for --analyze se
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        snr_db: Vec<f64>,
        /// Stream counts for --analyze se (default: 1 up to min(N_t, N_r), at most 4)
        #[arg(long, value_delimiter = ',')]
        streams: Vec<usize>,
        /// Model parameter file replacing the built-in defaults
        #[arg(long)]
        model: Option<PathBuf>,
        /// Attenuation table replacing the built-in one
        #[arg(long)]
        attenuation_table: Option<PathBuf>,
        /// Write into a non-empty output directory
        #[arg(long)]
        force: bool,
    },
    /// Fit path loss exponent and shadow fading to a scatter file
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Carrier frequency; overrides the file's %frequency_ghz annotation
        #[arg(long)]
        frequency_ghz: Option<f64>,
    },
}

enum Failure {
    Invalid(String),
    Io(String),
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        match e {
            OutputError::Io { .. } => Failure::Io(e.to_string()),
            OutputError::Sidecar(_) => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Output(o) => o.into(),
            AnalysisError::Mimo(m) => Failure::Invalid(m.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<ValidatedConfig, Failure> {
    let raw = parse_config(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    validate(&raw).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn check_out_dir(out: &Path, force: bool) -> Result<(), Failure> {
    match fs::read_dir(out) {
        Ok(mut entries) => {
            if entries.next().is_some() && !force {
                return Err(Failure::Invalid(format!(
                    "{}: output directory is not empty (use --force to write into it)",
                    out.display()
                )));
            }
            Ok(())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))
        }
        Err(e) => Err(Failure::Io(format!("{}: {e}", out.display()))),
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: &Path,
    runs: usize,
    seed: u64,
    out: &Path,
    svg: bool,
    spacing: f64,
    analyze: &[Analysis],
    snr_db: &[f64],
    streams: &[usize],
    model: Option<&Path>,
    table: Option<&Path>,
    force: bool,
) -> Result<(), Failure> {
    if runs == 0 {
        return Err(Failure::Invalid("--runs must be at least 1".into()));
    }
    let cfg = load_config(config)?;
    let params = match model {
        Some(p) => ModelParams::parse(&read(p)?),
        None => ModelParams::parse(DEFAULT_MODEL_PARAMS),
    }
    .map_err(|e| Failure::Invalid(format!("model parameters: {e}")))?;
    let table = match table {
        Some(p) => AttenuationTable::parse(&read(p)?).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?,
        None => AttenuationTable::shipped(),
    };

    let setup = if analyze.is_empty() {
        None
    } else {
        Some(AnalysisSetup::new(&cfg, spacing).map_err(|e| Failure::Invalid(e.to_string()))?)
    };
    let snrs: Vec<f64> = if snr_db.is_empty() { DEFAULT_SNR_DB.to_vec() } else { snr_db.to_vec() };
    let streams: Vec<usize> = match (&setup, streams.is_empty()) {
        (Some(s), true) => (1..=s.max_streams().min(4)).collect(),
        _ => streams.to_vec(),
    };
    if let Some(s) = &setup {
        if let Some(bad) = streams.iter().find(|&&n| n == 0 || n > s.max_streams()) {
            return Err(Failure::Invalid(format!(
                "--streams {bad} outside 1..={}",
                s.max_streams()
            )));
        }
    }

    check_out_dir(out, force)?;
    let mc = run_monte_carlo(&cfg, &params, &table, runs, seed).map_err(|e| Failure::Invalid(e.to_string()))?;
    mc.runs
        .par_iter()
        .map(|r| write_run_files(r, out).map(|_| ()))
        .collect::<Result<Vec<()>, _>>()?;
    write_summary_files(&mc.summary, &cfg, runs, seed, out)?;
    emit_plot_data(&mc.summary, &mc.runs, out, svg)?;
    if let Some(setup) = &setup {
        if analyze.contains(&Analysis::Mimo) {
            write_condition_analysis(setup, &mc.runs, out, svg)?;
        }
        if analyze.contains(&Analysis::Se) {
            write_se_analysis(setup, &mc.runs, &snrs, &streams, out, svg)?;
        }
    }

    println!("{runs} run(s) written to {}", out.display());
    for kind in [PathLossKind::Omni, PathLossKind::Dir, PathLossKind::DirBest] {
        if let Some(f) = mc.summary.fits.get(kind) {
            println!("{:>8}: n = {:.4}, sigma = {:.4} dB", kind.label(), f.ple, f.sigma_db);
        }
    }
    Ok(())
}

fn fit(input: &Path, frequency_ghz: Option<f64>) -> Result<(), Failure> {
    let scatter = parse_scatter(&read(input)?).map_err(|e| Failure::Invalid(format!("{}: {e}", input.display())))?;
    let f = frequency_ghz
        .or(scatter.frequency_ghz)
        .ok_or_else(|| Failure::Invalid("no %frequency_ghz annotation; pass --frequency-ghz".into()))?;
    let mut any = false;
    println!("series\tn\tsigma_db\tsamples");
    for kind in [PathLossKind::Omni, PathLossKind::Dir, PathLossKind::DirBest] {
        let s: Vec<_> = scatter.samples.iter().filter(|s| s.kind == kind).copied().collect();
        if s.is_empty() {
            continue;
        }
        let r = fit_ple_mmse(&s, f).map_err(|e| Failure::Invalid(format!("{}: {e}", kind.label())))?;
        println!("{}\t{}\t{}\t{}", kind.label(), r.ple, r.sigma_db, s.len());
        any = true;
    }
    if !any {
        return Err(Failure::Invalid(format!("{}: no samples", input.display())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run {
            config,
            runs,
            seed,
            out,
            svg,
            subcarrier_spacing_mhz,
            analyze,
            snr_db,
            streams,
            model,
            attenuation_table,
            force,
        } => run(
            config,
            *runs,
            *seed,
            out,
            *svg,
            *subcarrier_spacing_mhz,
            analyze,
            snr_db,
            streams,
            model.as_deref(),
            attenuation_table.as_deref(),
            *force,
        ),
        Command::Fit { input, frequency_ghz } => fit(input, *frequency_ghz),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_IO)
        }
    }
}

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::golden_dir;

fn chansim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chansim")).args(args).output().unwrap()
}

fn run_into(out: &Path, runs: usize, extra: &[&str]) -> Output {
    let config = golden_dir().join("config.txt");
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--runs"];
    let runs = runs.to_string();
    args.push(&runs);
    args.extend(["--seed", "5", "--out", out.to_str().unwrap()]);
    args.extend(extra);
    chansim(&args)
}

fn names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn writes_expected_file_set() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_into(&out, 2, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let top = names(&out);
    for n in 1..=2 {
        for stem in ["OmniPDP", "DirectionalPDP", "SmallScalePDP"] {
            assert!(top.contains(&format!("{stem}{n}.txt")), "missing {stem}{n}");
        }
        assert!(top.contains(&format!("AODLobePowerSpectrum{n}_Lobe1.txt")));
        assert!(top.contains(&format!("AOALobePowerSpectrum{n}_Lobe1.txt")));
    }
    for f in ["BasicParameters.txt", "OmniPDPInfo.txt", "DirPDPInfo.txt", "sidecar", "plots"] {
        assert!(top.contains(&f.to_string()), "missing {f}");
    }
    assert!(!top.contains(&"analysis".to_string()));
    assert!(!top.iter().any(|n| n.starts_with(".staging")));
    assert_eq!(names(&out.join("sidecar")), vec!["CIR1.bin", "CIR2.bin"]);

    let sidecar = chansim::output::read_sidecar(&out.join("sidecar").join("CIR1.bin")).unwrap();
    let dir = fs::read_to_string(out.join("DirPDPInfo.txt")).unwrap();
    let run1 = dir.lines().skip(1).filter(|l| l.starts_with("1\t")).count();
    assert_eq!(sidecar.records.len(), run1);
    let delays = sidecar.column("delay_ns").unwrap();
    assert!(delays.windows(2).all(|w| w[0] <= w[1]));
    let omni = fs::read_to_string(out.join("OmniPDPInfo.txt")).unwrap();
    assert_eq!(omni.lines().count(), 3);
}

#[test]
fn omni_info_balances_power() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert!(run_into(&out, 5, &[]).status.success());
    let text = fs::read_to_string(out.join("OmniPDPInfo.txt")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert_eq!(r[0], 100.0);
        // 6 significant digits on each term
        assert!((r[1] + r[2] - 30.0).abs() < 2e-3, "{r:?}");
    }
}

#[test]
fn svg_flag_only_adds_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_into(&a, 2, &["--analyze", "mimo,se"]).status.success());
    assert!(run_into(&b, 2, &["--analyze", "mimo,se", "--svg"]).status.success());
    for sub in ["plots", "analysis"] {
        let plain = names(&a.join(sub));
        let with = names(&b.join(sub));
        assert!(plain.iter().all(|n| !n.ends_with(".svg")));
        let stripped: Vec<_> = with.iter().filter(|n| !n.ends_with(".svg")).cloned().collect();
        assert_eq!(plain, stripped);
        assert!(with.len() > plain.len());
        for n in &plain {
            assert_eq!(fs::read(a.join(sub).join(n)).unwrap(), fs::read(b.join(sub).join(n)).unwrap());
        }
    }
    assert!(names(&a.join("analysis")).contains(&"ConditionNumberCDF.txt".to_string()));
    assert!(names(&a.join("analysis")).contains(&"SpectralEfficiency.txt".to_string()));
}

#[test]
fn fit_subcommand_reads_scatter() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = tmp.path().join("range.txt");
    let text = fs::read_to_string(golden_dir().join("config.txt"))
        .unwrap()
        .replace("tr_dist_min_m = 100", "tr_dist_min_m = 20")
        .replace("tr_dist_max_m = 100", "tr_dist_max_m = 200");
    fs::write(&config, text).unwrap();
    let o = chansim(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--runs",
        "40",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let scatter = out.join("plots").join("PathLossScatter.dat");
    let o = chansim(&["fit", "--input", scatter.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = stdout.lines().collect();
    assert_eq!(lines[0], "series\tn\tsigma_db\tsamples");
    let omni: Vec<_> = lines[1].split('\t').collect();
    assert_eq!(omni[0], "omni");
    assert_eq!(omni[3], "40");
    let n: f64 = omni[1].parse().unwrap();
    assert!((1.0..3.0).contains(&n), "{n}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, "frequency_ghz = 200\n").unwrap();
    let out = tmp.path().join("o1");
    let o = chansim(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());

    let missing = tmp.path().join("nope.txt");
    let o = chansim(&["run", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let full = tmp.path().join("full");
    fs::create_dir(&full).unwrap();
    fs::write(full.join("keep"), "x").unwrap();
    assert_eq!(run_into(&full, 1, &[]).status.code(), Some(1));
    assert_eq!(fs::read_to_string(full.join("keep")).unwrap(), "x");
    assert_eq!(run_into(&full, 1, &["--force"]).status.code(), Some(0));

    assert_eq!(chansim(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(chansim(&["--help"]).status.code(), Some(0));
    assert_eq!(run_into(&tmp.path().join("o2"), 0, &[]).status.code(), Some(1));
}

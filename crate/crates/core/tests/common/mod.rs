#![allow(dead_code)]

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// Files pinned byte-for-byte, with the column count of every data row
/// (0 skips the column check).
pub const GOLDEN_FILES: &[(&str, usize)] = &[
    ("OmniPDP1.txt", 2),
    ("DirectionalPDP1.txt", 2),
    ("SmallScalePDP1.txt", 3),
    ("AODLobePowerSpectrum1_Lobe1.txt", 5),
    ("AOALobePowerSpectrum1_Lobe1.txt", 5),
    ("OmniPDPInfo.txt", 4),
    ("DirPDPInfo.txt", 10),
    ("BasicParameters.txt", 0),
];

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect(root, &p, out);
        } else {
            out.push(p.strip_prefix(root).unwrap().to_path_buf());
        }
    }
}

/// Hex digest over every relative path and file body under `root`, sorted.
pub fn tree_hash(root: &Path) -> (String, usize) {
    let mut files = Vec::new();
    collect(root, root, &mut files);
    files.sort();
    let mut h = Sha256::new();
    for f in &files {
        let name = f.to_string_lossy();
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        let body = std::fs::read(root.join(f)).unwrap();
        h.update((body.len() as u64).to_le_bytes());
        h.update(&body);
    }
    let hex = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    (hex, files.len())
}

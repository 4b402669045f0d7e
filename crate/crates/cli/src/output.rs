//! Output plumbing: deterministic CSV/JSON writers with an embedded
//! tool-version / config-hash / seed header.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// FNV-1a 64-bit hash of the canonical config string; stable across runs
/// and builds.
pub fn config_hash(canonical: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in canonical.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Real number with 17 significant digits, enough to round-trip f64.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return String::new(); // empty CSV field for undefined values
    }
    format!("{:.16e}", x)
}

/// Metadata line prepended to CSV files (the body itself is RFC-4180).
pub fn csv_meta(hash: u64, seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("# billiard-spectra {TOOL_VERSION} config_hash={hash:016x} seed={s}"),
        None => format!("# billiard-spectra {TOOL_VERSION} config_hash={hash:016x}"),
    }
}

pub fn write_csv(
    path: &Path,
    hash: u64,
    seed: Option<u64>,
    header: &str,
    rows: &[String],
) -> std::io::Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "{}", csv_meta(hash, seed));
    let _ = writeln!(text, "{header}");
    for row in rows {
        let _ = writeln!(text, "{row}");
    }
    fs::write(path, text)
}

/// Wrap a JSON value with the standard metadata fields and write it.
pub fn write_json(
    path: &Path,
    hash: u64,
    seed: Option<u64>,
    payload: serde_json::Value,
) -> std::io::Result<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("tool".into(), "billiard-spectra".into());
    doc.insert("version".into(), TOOL_VERSION.into());
    doc.insert("config_hash".into(), format!("{hash:016x}").into());
    if let Some(s) = seed {
        doc.insert("seed".into(), s.into());
    }
    doc.insert("result".into(), payload);
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
    fs::write(path, text + "\n")
}

//! Byte-stable CSV and JSON emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gravent_core::TraceSample;
use serde::Serialize;

use crate::CliError;

/// Bumped whenever a file layout changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const TRACE_HEADER: &str = "t,E,nu_tilde_min,dx_A,dx_B,mean_xA,mean_xB";

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

pub fn trace_csv(samples: &[TraceSample]) -> String {
    let mut out = String::with_capacity(64 + samples.len() * 170);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in samples {
        let cols = [s.t, s.log_negativity, s.nu_tilde_min, s.width_a, s.width_b, s.mean_xa, s.mean_xb];
        let row: Vec<String> = cols.iter().map(|&c| fmt_f64(c)).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("JSON encoding: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

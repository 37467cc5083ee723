use std::io::Write;
use std::path::Path;

use declab::e2d::RoundRecord;
use serde::Serialize;

use crate::error::CliError;

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("output types serialize");
    out.push(b'\n');
    out
}

/// Prints to stdout, or writes atomically when a path is given.
pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let bytes = json_bytes(value);
    match out {
        Some(path) => write_atomic(path, &bytes),
        None => {
            std::io::stdout().write_all(&bytes).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            Ok(())
        }
    }
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRACE_COLUMNS: [&str; 8] = ["t", "pi", "r", "inst_regret", "dec_value", "hell_inc", "cum_regret", "cum_est"];

pub fn trace_csv(records: &[RoundRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_COLUMNS).expect("in-memory write");
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.pi.to_string(),
            float(r.r),
            float(r.inst_regret),
            float(r.dec_value),
            float(r.hell_inc),
            float(r.cum_regret),
            float(r.cum_est),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

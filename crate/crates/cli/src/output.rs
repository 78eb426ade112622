use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

/// Writes `contents` to `dir/name` through a temporary file and a rename, so
/// readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let dest = dir.join(name);
    {
        let mut f =
            fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &dest).with_context(|| format!("renaming into {}", dest.display()))?;
    Ok(())
}

/// CSV with a fixed header and full-precision numbers, newline-terminated.
pub fn csv(header: &[&str], columns: &[&[f64]]) -> Vec<u8> {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format!("{:.16e}", c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

/// CSV whose rows are already formatted.
pub fn csv_rows(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

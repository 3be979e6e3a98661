//! CSV and manifest writers.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Header plus rows, every value printed with 17 significant digits.
pub fn csv_text(header: &[&str], rows: &[Vec<f64>]) -> io::Result<String> {
    let mut out = header.join(",");
    out.push('\n');
    for (k, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("row {k} has {} values for {} columns", row.len(), header.len()),
            ));
        }
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_csv(header: &[&str], rows: &[Vec<f64>], path: &Path) -> io::Result<()> {
    let text = csv_text(header, rows)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)
}

/// `results.csv` → `results.manifest`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest")
}

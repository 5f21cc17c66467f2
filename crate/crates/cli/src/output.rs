use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use graphon_core::io::fmt_f64;
use graphon_core::Verdict;

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("writing into {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

/// A CSV with a header and preformatted cells.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header)?;
        for r in rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    })
}

pub fn num(x: f64) -> String {
    fmt_f64(x)
}

pub fn opt_seed(seed: Option<u64>) -> String {
    seed.map_or_else(String::new, |s| s.to_string())
}

/// `dir/prefix_n_seed.ext`, with `det` in place of the seed for deterministic graphs.
pub fn instance_path(dir: &Path, prefix: &str, n: usize, seed: Option<u64>, ext: &str) -> PathBuf {
    let tag = seed.map_or_else(|| "det".to_string(), |s| s.to_string());
    dir.join(format!("{prefix}_{n}_{tag}.{ext}"))
}

/// Prints a left-aligned plain-text table to stdout.
pub fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        println!("{}", s.join("  ").trim_end());
    };
    line(header.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
}

/// Short human-readable number for tables.
pub fn short(x: f64) -> String {
    format!("{x:.4e}")
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Verdict label and its detail: the gap when stable, the unstable count otherwise.
pub fn verdict_cells(v: &Verdict) -> (String, String) {
    match v {
        Verdict::Stable { gap } => ("stable".into(), num(*gap)),
        Verdict::Unstable { count } => ("unstable".into(), count.to_string()),
        Verdict::Marginal => ("marginal".into(), String::new()),
    }
}

//! Writes profiles and the report into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::scenario::{Profiles, Report};

/// 17 significant digits, enough to round-trip an f64.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// File-name-safe form of a k label.
pub fn k_slug(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-') { c } else { '_' }).collect()
}

fn write_table(dir: &Path, stem: &str, format: Format, header: &[&str], columns: &[Vec<f64>]) -> std::io::Result<PathBuf> {
    let rows = columns.first().map_or(0, |c| c.len());
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(header)?;
            for i in 0..rows {
                w.write_record(columns.iter().map(|c| num(c[i])))?;
            }
            w.flush()?;
            Ok(path)
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            let mut obj = Map::new();
            for (name, col) in header.iter().zip(columns) {
                obj.insert((*name).to_string(), json!(col));
            }
            fs::write(&path, serde_json::to_string_pretty(&Value::Object(obj))? + "\n")?;
            Ok(path)
        }
    }
}

pub fn write_profiles(dir: &Path, format: Format, p: &Profiles) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = vec![write_table(
        dir,
        "potential",
        format,
        &["x", "u", "u_tilde", "delta_u_diag", "delta_u_loggamma"],
        &[p.x.clone(), p.u.clone(), p.u_tilde.clone(), p.delta_u_diag.clone(), p.delta_u_loggamma.clone()],
    )?];
    for w in &p.waves {
        let cols = vec![
            p.x.clone(),
            w.psi.iter().map(|z| z.re).collect(),
            w.psi.iter().map(|z| z.im).collect(),
            w.psi_tilde.iter().map(|z| z.re).collect(),
            w.psi_tilde.iter().map(|z| z.im).collect(),
        ];
        written.push(write_table(
            dir,
            &format!("wavefunction_{}", k_slug(&w.label)),
            format,
            &["x", "re_psi", "im_psi", "re_psi_tilde", "im_psi_tilde"],
            &cols,
        )?);
    }
    Ok(written)
}

pub fn write_report(dir: &Path, report: &Report) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok(path)
}

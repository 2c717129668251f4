//! Emit plot-ready per-group series from a results CSV: pick an x column, a
//! y column, and a grouping column; one output file per group value, rows
//! sorted ascending in x.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub struct PlotSpec<'a> {
    pub x: &'a str,
    pub y: &'a str,
    pub group: &'a str,
}

fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

pub fn plot_data(results_csv: &Path, spec: &PlotSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(results_csv)
        .with_context(|| format!("reading {}", results_csv.display()))?;
    let mut lines = text.lines();
    let header = match lines.next() {
        Some(h) if !h.trim().is_empty() => h,
        _ => bail!("{}: empty results file", results_csv.display()),
    };
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| -> Result<usize> {
        columns.iter().position(|&c| c == name).ok_or_else(|| {
            anyhow::anyhow!(
                "unknown column {name:?}; available columns: {}",
                columns.join(", ")
            )
        })
    };
    let (xi, yi, gi) = (col(spec.x)?, col(spec.y)?, col(spec.group)?);

    let mut groups: BTreeMap<String, Vec<(f64, String, String)>> = BTreeMap::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            bail!(
                "{}: row {row}: expected {} fields, got {}",
                results_csv.display(),
                columns.len(),
                fields.len()
            );
        }
        let x_raw = fields[xi].trim();
        let x: f64 = x_raw.parse().with_context(|| {
            format!(
                "{}: row {row}: column {:?} value {:?} is not numeric",
                results_csv.display(),
                spec.x,
                x_raw
            )
        })?;
        groups.entry(fields[gi].trim().to_string()).or_default().push((
            x,
            x_raw.to_string(),
            fields[yi].trim().to_string(),
        ));
    }
    if groups.is_empty() {
        bail!("{}: no rows to plot", results_csv.display());
    }

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();
    for (value, mut rows) in groups {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = format!("{},{}\n", spec.x, spec.y);
        for (_, x_raw, y_raw) in &rows {
            out.push_str(&format!("{x_raw},{y_raw}\n"));
        }
        let path = out_dir.join(format!("{}_{}.csv", sanitize(spec.group), sanitize(&value)));
        fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

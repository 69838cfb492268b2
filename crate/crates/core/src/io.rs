//! Plain-text formats: CSV tables and flat `key = value` files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bandwidth::Selection;
use crate::dilation::StepFunction;
use crate::error::{Error, Result};
use crate::numgrid::GridFunction;

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses a CSV body with a known header into rows of floats.
fn parse_table(text: &str, header: &[&str], source: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines
        .next()
        .ok_or_else(|| Error::parse(source, "empty file"))?;
    let got: Vec<&str> = first.split(',').map(str::trim).collect();
    if got != header {
        return Err(Error::parse(
            source,
            format!("expected header `{}`, found `{first}`", header.join(",")),
        ));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let row: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(source, format!("line {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(Error::parse(
                    source,
                    format!("line {}: expected {} fields", i + 2, header.len()),
                ));
            }
            Ok(row)
        })
        .collect()
}

pub fn grid_to_csv(f: &GridFunction) -> String {
    let mut out = String::from("x,value\n");
    for (x, v) in f.nodes().zip(f.values()) {
        let _ = writeln!(out, "{x},{v}");
    }
    out
}

pub fn write_grid_csv(path: &Path, f: &GridFunction) -> Result<()> {
    write_text(path, &grid_to_csv(f))
}

/// Reads an `x,value` table whose nodes must be uniformly spaced.
pub fn read_grid_csv(path: &Path) -> Result<GridFunction> {
    let source = path.display().to_string();
    let rows = parse_table(&read_text(path)?, &["x", "value"], &source)?;
    if rows.len() < 2 {
        return Err(Error::parse(&source, "need at least two nodes"));
    }
    let (a, b) = (rows[0][0], rows[rows.len() - 1][0]);
    let dx = (b - a) / (rows.len() - 1) as f64;
    for (j, r) in rows.iter().enumerate() {
        if (r[0] - (a + j as f64 * dx)).abs() > 1e-9 * (b - a).abs().max(1.0) {
            return Err(Error::parse(&source, format!("node {j} breaks uniform spacing")));
        }
    }
    GridFunction::new(a, b, rows.into_iter().map(|r| r[1]).collect())
}

pub fn write_sample_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = String::from("x\n");
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    write_text(path, &out)
}

pub fn read_sample_csv(path: &Path) -> Result<Vec<f64>> {
    let source = path.display().to_string();
    let rows = parse_table(&read_text(path)?, &["x"], &source)?;
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

pub fn write_step_csv(path: &Path, s: &StepFunction) -> Result<()> {
    let mut out = String::from("cell_left,cell_right,height\n");
    for (i, h) in s.heights().iter().enumerate() {
        let (l, r) = s.cell(i);
        let _ = writeln!(out, "{l},{r},{h}");
    }
    write_text(path, &out)
}

/// Bandwidth diagnostics: `h,A,penalty,criterion,selected`.
pub fn write_selection_csv(path: &Path, sel: &Selection) -> Result<()> {
    let mut out = String::from("h,A,penalty,criterion,selected\n");
    for (i, h) in sel.grid.values().iter().enumerate() {
        let _ = writeln!(
            out,
            "{h},{},{},{},{}",
            sel.a[i],
            sel.penalty[i],
            sel.criterion(i),
            (i == sel.index) as u8
        );
    }
    write_text(path, &out)
}

/// Three-column `x,truth,estimate` table on the grid of `truth`.
pub fn write_curves_csv(path: &Path, truth: &GridFunction, estimate: &GridFunction) -> Result<()> {
    truth.check_same_grid(estimate)?;
    let mut out = String::from("x,truth,estimate\n");
    for ((x, t), e) in truth.nodes().zip(truth.values()).zip(estimate.values()) {
        let _ = writeln!(out, "{x},{t},{e}");
    }
    write_text(path, &out)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str, source: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(source, format!("line {}: expected key = value", i + 1)))?;
        let key = k.trim().to_string();
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::parse(source, format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(map)
}

pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_key_values(&read_text(path)?, &path.display().to_string())
}

pub fn write_key_values<'a>(
    path: &Path,
    entries: impl IntoIterator<Item = (&'a str, String)>,
) -> Result<()> {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    write_text(path, &out)
}

/// Sidecar path holding `lambda=` for an eigenpair CSV: `pair.csv` → `pair.lambda`.
pub fn sidecar_path(pair_csv: &Path) -> std::path::PathBuf {
    pair_csv.with_extension("lambda")
}

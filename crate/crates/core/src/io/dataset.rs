// SPDX-License-Identifier: MIT
//! On-disk studies: a design file plus one CSV table per condition.
//!
//! Design file columns are `index,name,kind,targets`; `targets` lists compound
//! names separated by `;`. Condition `index` lives in `<data_dir>/<index>.csv`
//! whose header row names the compounds. Tables hold raw abundances unless the
//! first line is the marker `# scale: log`, in which case values are already
//! preprocessed natural-log abundances (the format `write_study` produces) and
//! are loaded verbatim, without reapplying the censoring threshold.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExperimentDesign, Intervention, InterventionKind};

pub const LOG_SCALE_MARKER: &str = "# scale: log";
pub const DESIGN_FILE: &str = "design.csv";

/// Shortest shared leading run that triggers a duplicate warning.
pub const DUPLICATE_RUN: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateRun {
    pub first: usize,
    pub second: usize,
    pub compound: usize,
    /// Length of the identical leading stretch.
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub compound_names: Vec<String>,
    pub design: ExperimentDesign,
    /// Natural-log abundances, one matrix per condition.
    pub data: Vec<DMatrix<f64>>,
    pub censor_threshold: f64,
    /// `censor_fractions[(c, i)]`: share of condition `c` values of compound `i`
    /// at or below the threshold.
    pub censor_fractions: DMatrix<f64>,
    pub duplicates: Vec<DuplicateRun>,
}

impl Study {
    pub fn d(&self) -> usize {
        self.compound_names.len()
    }

    pub fn compound_index(&self, name: &str) -> Result<usize> {
        compound_index(&self.compound_names, name)
    }
}

pub fn compound_index(names: &[String], name: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::UnknownCompound(name.to_string()))
}

fn parse_err(path: &Path, line: u64, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        column,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return Error::Io(io);
        }
        unreachable!("checked is_io_error");
    }
    let line = e.position().map_or(0, |p| p.line());
    parse_err(path, line, 0, e.to_string())
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
    log_scale: bool,
}

fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    let log_scale = text.lines().next().is_some_and(|l| l.trim() == LOG_SCALE_MARKER);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().any(String::is_empty) {
        return Err(parse_err(path, 1, 0, "header must name every compound"));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| !v.is_nan())
                    .ok_or_else(|| parse_err(path, line, col + 1, format!("not a number: `{field}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table {
        header,
        rows,
        log_scale,
    })
}

/// Raw abundance to stored value: `ln(max(raw, θ))`.
/// Log-scale tables are already preprocessed and pass through unchanged; a
/// value sitting exactly on `ln theta` counts as censored.
fn preprocess(raw: f64, theta: f64, log_scale: bool) -> Option<(f64, bool)> {
    if log_scale {
        return Some((raw, theta > 0.0 && raw == theta.ln()));
    }
    if raw <= theta {
        return (theta > 0.0).then(|| (theta.ln(), true));
    }
    Some((raw.ln(), false))
}

fn parse_design(path: &Path, names: &[String]) -> Result<(Vec<usize>, ExperimentDesign)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != ["index", "name", "kind", "targets"] {
        return Err(parse_err(path, 1, 0, "expected header `index,name,kind,targets`"));
    }
    let mut indices = Vec::new();
    let mut conditions = Vec::new();
    let mut cond_names = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let index: usize = rec[0]
            .parse()
            .map_err(|_| parse_err(path, line, 1, format!("bad condition index `{}`", &rec[0])))?;
        let kind: InterventionKind = rec[2]
            .parse()
            .map_err(|e: Error| parse_err(path, line, 3, e.to_string()))?;
        let targets = rec[3]
            .split(';')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| compound_index(names, t))
            .collect::<Result<Vec<usize>>>()?;
        let iv = Intervention::new(kind, &targets)
            .map_err(|e| parse_err(path, line, 4, e.to_string()))?;
        indices.push(index);
        cond_names.push(rec[1].to_string());
        conditions.push(iv);
    }
    Ok((indices, ExperimentDesign::new(conditions, cond_names)?))
}

/// Reads a design file on its own, resolving targets against `names`.
pub fn read_design(path: &Path, names: &[String]) -> Result<ExperimentDesign> {
    Ok(parse_design(path, names)?.1)
}

fn first_header(data_dir: &Path, design_path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(design_path)
        .map_err(|e| csv_err(design_path, e))?;
    let first = reader
        .records()
        .next()
        .ok_or_else(|| parse_err(design_path, 2, 0, "design lists no conditions"))?
        .map_err(|e| csv_err(design_path, e))?;
    Ok(read_table(&data_dir.join(format!("{}.csv", &first[0])))?.header)
}

/// Loads a study, censoring at `censor_threshold` (`0` disables censoring).
pub fn load_study(data_dir: &Path, design_path: &Path, censor_threshold: f64) -> Result<Study> {
    if !(censor_threshold >= 0.0) || !censor_threshold.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "censor threshold {censor_threshold} must be finite and nonnegative"
        )));
    }
    let names = first_header(data_dir, design_path)?;
    let d = names.len();
    let (indices, design) = parse_design(design_path, &names)?;
    let k = design.len();
    let mut data = Vec::with_capacity(k);
    let mut censor_fractions = DMatrix::zeros(k, d);
    for (c, index) in indices.iter().enumerate() {
        let path = data_dir.join(format!("{index}.csv"));
        let table = read_table(&path)?;
        if table.header != names {
            return Err(Error::DimensionMismatch(format!(
                "{} header {:?} differs from {:?}",
                path.display(),
                table.header,
                names
            )));
        }
        let mut x = DMatrix::zeros(table.rows.len(), d);
        for (r, row) in table.rows.iter().enumerate() {
            for (i, &raw) in row.iter().enumerate() {
                let (v, censored) = preprocess(raw, censor_threshold, table.log_scale)
                    .ok_or_else(|| {
                        parse_err(&path, r as u64 + 2, i + 1, "non-positive abundance without censoring")
                    })?;
                x[(r, i)] = v;
                if censored {
                    censor_fractions[(c, i)] += 1.0;
                }
            }
        }
        if x.nrows() > 0 {
            censor_fractions.row_mut(c).scale_mut(1.0 / x.nrows() as f64);
        }
        data.push(x);
    }
    let floor = if censor_threshold > 0.0 { censor_threshold.ln() } else { f64::NEG_INFINITY };
    let duplicates = find_duplicates(&data, floor);
    for dup in &duplicates {
        log::warn!(
            "conditions {} and {} share their first {} values of `{}`",
            design.names()[dup.first],
            design.names()[dup.second],
            dup.rows,
            names[dup.compound]
        );
    }
    Ok(Study {
        compound_names: names,
        design,
        data,
        censor_threshold,
        censor_fractions,
        duplicates,
    })
}

/// Pairs of conditions whose columns start with at least `DUPLICATE_RUN`
/// identical values. Rows where both values sit at the censoring floor are
/// skipped: they match trivially.
pub fn find_duplicates(data: &[DMatrix<f64>], floor: f64) -> Vec<DuplicateRun> {
    let mut out = Vec::new();
    for first in 0..data.len() {
        for second in first + 1..data.len() {
            let (a, b) = (&data[first], &data[second]);
            let rows = a.nrows().min(b.nrows());
            for compound in 0..a.ncols().min(b.ncols()) {
                let mut informative = 0;
                let mut run = 0;
                for r in 0..rows {
                    let (u, v) = (a[(r, compound)], b[(r, compound)]);
                    if u.to_bits() != v.to_bits() {
                        break;
                    }
                    run += 1;
                    if u > floor {
                        informative += 1;
                    }
                }
                if informative >= DUPLICATE_RUN {
                    out.push(DuplicateRun {
                        first,
                        second,
                        compound,
                        rows: run,
                    });
                }
            }
        }
    }
    out
}

/// Writes a study that `load_study` reads back bit-identically. Returns the
/// design file path.
pub fn write_study(
    dir: &Path,
    compound_names: &[String],
    design: &ExperimentDesign,
    data: &[DMatrix<f64>],
) -> Result<PathBuf> {
    if data.len() != design.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} data matrices for {} conditions",
            data.len(),
            design.len()
        )));
    }
    fs::create_dir_all(dir)?;
    let design_path = dir.join(DESIGN_FILE);
    let mut w = csv::Writer::from_path(&design_path).map_err(|e| csv_err(&design_path, e))?;
    w.write_record(["index", "name", "kind", "targets"])
        .map_err(|e| csv_err(&design_path, e))?;
    for (c, (iv, name)) in design.conditions().iter().zip(design.names()).enumerate() {
        let targets: Vec<&str> = iv.targets().iter().map(|&t| compound_names[t].as_str()).collect();
        w.write_record([
            (c + 1).to_string(),
            name.clone(),
            iv.kind().as_str().to_string(),
            targets.join(";"),
        ])
        .map_err(|e| csv_err(&design_path, e))?;
    }
    w.flush()?;
    for (c, x) in data.iter().enumerate() {
        if x.ncols() != compound_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "condition {} has {} columns for {} compounds",
                c + 1,
                x.ncols(),
                compound_names.len()
            )));
        }
        let mut text = format!("{LOG_SCALE_MARKER}\n{}\n", compound_names.join(","));
        for row in x.row_iter() {
            let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            text.push_str(&fields.join(","));
            text.push('\n');
        }
        fs::write(dir.join(format!("{}.csv", c + 1)), text)?;
    }
    Ok(design_path)
}

pub fn export_study(dir: &Path, study: &Study) -> Result<PathBuf> {
    write_study(dir, &study.compound_names, &study.design, &study.data)
}

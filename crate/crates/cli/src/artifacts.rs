//! Versioned CSV artifacts and hyperboloid snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thirring_core::hyperbolic::HyperState;

use crate::error::CliError;

pub const HEADER: &str = "# thirring-scatter v1";

pub const SERIES: &str = "series.csv";
pub const PROFILES: &str = "profiles.csv";
pub const FPROFILE: &str = "fprofile.csv";
pub const EXTERIOR: &str = "exterior.csv";
pub const SUMMARY: &str = "summary.json";
pub const RUN: &str = "run.json";
pub const CONFIG: &str = "config.toml";
pub const SNAPSHOTS: &str = "snapshots";

pub const SERIES_COLUMNS: [&str; 6] = ["rho", "e_int", "sup_m", "res_corrected", "res_uncorrected", "a_err_sup"];
pub const PROFILE_COLUMNS: [&str; 7] =
    ["y", "a_plus", "a_minus", "re_sigma_plus", "im_sigma_plus", "re_sigma_minus", "im_sigma_minus"];
pub const FPROFILE_COLUMNS: [&str; 5] = ["s", "re_f_plus", "im_f_plus", "re_f_minus", "im_f_minus"];
pub const EXTERIOR_COLUMNS: [&str; 3] = ["t", "e_ext_flat", "sup_weighted_uv"];
const SNAPSHOT_COLUMNS: [&str; 5] = ["y", "re_u", "im_u", "re_v", "im_v"];

/// Shortest decimal that round-trips to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub type Row = Vec<Option<f64>>;

fn render(columns: &[&str], rows: &[Row], preamble: &[String]) -> String {
    let mut s = String::new();
    s.push_str(HEADER);
    s.push('\n');
    for line in preamble {
        let _ = writeln!(s, "# {line}");
    }
    s.push_str(&columns.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(fmt_num).unwrap_or_default()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn write_csv(path: &Path, columns: &[&str], rows: &[Row]) -> Result<(), CliError> {
    fs::write(path, render(columns, rows, &[]))
        .map_err(|e| CliError::Artifact(format!("cannot write {}: {e}", path.display())))
}

pub struct Table {
    pub preamble: Vec<String>,
    pub rows: Vec<Row>,
}

fn parse(path: &Path, columns: &[&str]) -> Result<Table, CliError> {
    let bad = |msg: String| CliError::Artifact(format!("{}: {msg}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read: {e}")))?;
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(bad(format!("missing `{HEADER}` header")));
    }
    let mut preamble = Vec::new();
    let names = loop {
        match lines.next() {
            Some(l) if l.starts_with('#') => preamble.push(l.trim_start_matches('#').trim().to_string()),
            Some(l) => break l,
            None => return Err(bad("missing column line".into())),
        }
    };
    if names.split(',').collect::<Vec<_>>() != columns {
        return Err(bad(format!("expected columns {}", columns.join(","))));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(bad(format!("row {} has {} cells", n + 1, cells.len())));
        }
        let row = cells
            .iter()
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>().map(Some).map_err(|_| bad(format!("row {}: bad number `{c}`", n + 1)))
                }
            })
            .collect::<Result<Row, CliError>>()?;
        rows.push(row);
    }
    Ok(Table { preamble, rows })
}

pub fn read_csv(path: &Path, columns: &[&str]) -> Result<Vec<Row>, CliError> {
    Ok(parse(path, columns)?.rows)
}

/// All cells must be present.
pub fn read_dense(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    read_csv(path, columns)?
        .into_iter()
        .enumerate()
        .map(|(n, r)| {
            r.into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| CliError::Artifact(format!("{}: row {} has empty cells", path.display(), n + 1)))
        })
        .collect()
}

fn snapshot_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(SNAPSHOTS).join(format!("rho_{index:04}.csv"))
}

pub fn write_snapshot(dir: &Path, index: usize, h: &HyperState, ys: &[f64]) -> Result<(), CliError> {
    let rows: Vec<Row> = ys
        .iter()
        .zip(h.u.iter().zip(&h.v))
        .map(|(&y, (u, v))| vec![Some(y), Some(u.re), Some(u.im), Some(v.re), Some(v.im)])
        .collect();
    let path = snapshot_path(dir, index);
    fs::write(&path, render(&SNAPSHOT_COLUMNS, &rows, &[format!("rho = {}", fmt_num(h.rho))]))
        .map_err(|e| CliError::Artifact(format!("cannot write {}: {e}", path.display())))
}

/// Reads every snapshot in index order, returning the y-grid and states.
pub fn read_snapshots(dir: &Path) -> Result<(Vec<f64>, Vec<HyperState>), CliError> {
    let sdir = dir.join(SNAPSHOTS);
    let mut names: Vec<PathBuf> = fs::read_dir(&sdir)
        .map_err(|e| CliError::Artifact(format!("cannot list {}: {e}", sdir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(CliError::Artifact(format!("no snapshots in {}", sdir.display())));
    }
    let mut ys: Option<Vec<f64>> = None;
    let mut states = Vec::with_capacity(names.len());
    for path in names {
        let table = parse(&path, &SNAPSHOT_COLUMNS)?;
        let rho = table
            .preamble
            .iter()
            .find_map(|l| l.strip_prefix("rho = ").and_then(|r| r.parse::<f64>().ok()))
            .ok_or_else(|| CliError::Artifact(format!("{}: missing rho line", path.display())))?;
        let dense = read_dense(&path, &SNAPSHOT_COLUMNS)?;
        let y: Vec<f64> = dense.iter().map(|r| r[0]).collect();
        match &ys {
            Some(prev) if *prev != y => {
                return Err(CliError::Artifact(format!("{}: y-grid differs from earlier snapshots", path.display())))
            }
            None => ys = Some(y),
            _ => {}
        }
        states.push(HyperState {
            rho,
            u: dense.iter().map(|r| Complex64::new(r[1], r[2])).collect(),
            v: dense.iter().map(|r| Complex64::new(r[3], r[4])).collect(),
        });
    }
    if states.windows(2).any(|w| w[1].rho <= w[0].rho) {
        return Err(CliError::Artifact("snapshots are not increasing in rho".into()));
    }
    Ok((ys.unwrap_or_default(), states))
}

//! Whitespace-separated plot tables with one header line.
//!
//! Values are written in shortest round-trip form, so a table re-read as
//! `f64` reproduces the stored numbers exactly. Missing entries are `nan`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::sweep::{linewidth_label, SweepResult};
use crate::{Error, Result};

/// A table ready to be written.
#[derive(Debug, Clone, Copy)]
pub enum DatTable<'a> {
    /// `e <tag>...`: one row per epoch, one loss column per run.
    Loss { columns: &'a [(String, Vec<f64>)] },
    /// `OSNR <linewidth>...`: BER per OSNR grid point and linewidth.
    Ber(&'a SweepResult),
    /// `lw <tag>...`: required OSNR per linewidth (Hz) and model.
    Lw {
        linewidths_hz: &'a [f64],
        columns: &'a [(String, Vec<Option<f64>>)],
    },
}

fn header(out: &mut String, first: &str, tags: impl Iterator<Item = String>) {
    out.push_str(first);
    for t in tags {
        out.push(' ');
        out.push_str(&t);
    }
    out.push('\n');
}

fn push_value(out: &mut String, v: Option<f64>) {
    match v {
        Some(v) if !v.is_nan() => write!(out, " {v:e}").unwrap(),
        _ => out.push_str(" nan"),
    }
}

fn check_tags<'t>(tags: impl Iterator<Item = &'t str>) -> Result<()> {
    for t in tags {
        if t.is_empty() || t.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "column tag {t:?} must be one non-empty word"
            )));
        }
    }
    Ok(())
}

pub fn render_dat(table: &DatTable<'_>) -> Result<String> {
    let mut out = String::new();
    match table {
        DatTable::Loss { columns } => {
            check_tags(columns.iter().map(|(t, _)| t.as_str()))?;
            header(&mut out, "e", columns.iter().map(|(t, _)| t.clone()));
            let rows = columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
            for e in 0..rows {
                write!(out, "{}", e + 1).unwrap();
                for (_, v) in columns.iter() {
                    push_value(&mut out, v.get(e).copied());
                }
                out.push('\n');
            }
        }
        DatTable::Ber(result) => {
            header(
                &mut out,
                "OSNR",
                result.spec.linewidths_hz.iter().map(|&h| linewidth_label(h)),
            );
            for (j, osnr) in result.spec.osnr_db.iter().enumerate() {
                write!(out, "{osnr}").unwrap();
                for row in &result.points {
                    push_value(&mut out, Some(row[j].count.ber));
                }
                out.push('\n');
            }
        }
        DatTable::Lw {
            linewidths_hz,
            columns,
        } => {
            check_tags(columns.iter().map(|(t, _)| t.as_str()))?;
            if let Some((t, _)) = columns.iter().find(|(_, v)| v.len() != linewidths_hz.len()) {
                return Err(Error::Dimension(format!(
                    "column {t} has a different length from the {} linewidths",
                    linewidths_hz.len()
                )));
            }
            header(&mut out, "lw", columns.iter().map(|(t, _)| t.clone()));
            for (i, lw) in linewidths_hz.iter().enumerate() {
                write!(out, "{lw}").unwrap();
                for (_, v) in columns.iter() {
                    push_value(&mut out, v[i]);
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn emit_dat(table: &DatTable<'_>, path: &Path) -> Result<()> {
    fs::write(path, render_dat(table)?).map_err(|e| crate::Error::io(path, e))
}

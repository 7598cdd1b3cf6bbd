//! CSV schemas for counts, pre-reduced rates and model curves.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use lhvbell::inequalities::{RateSeries, TwoChannelRates};
use lhvbell::montecarlo::CountData;

use crate::InputError;

pub const COUNTS_HEADER: [&str; 4] = ["angle_rad", "singles_1", "singles_2", "coincidences"];
pub const TWO_CHANNEL_HEADER: [&str; 5] = ["angle_rad", "n_pp", "n_pm", "n_mp", "n_mm"];

/// Data read from any of the accepted schemas.
#[derive(Debug, Clone)]
pub enum Dataset {
    Single(RateSeries),
    TwoChannel(TwoChannelRates),
}

pub fn write_counts(path: &Path, data: &CountData, comment: &str) -> Result<()> {
    let mut file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    for line in comment.lines() {
        writeln!(file, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    let two = data.counts.first().is_some_and(|c| c.channels.is_some());
    if two {
        w.write_record(TWO_CHANNEL_HEADER)?;
    } else {
        w.write_record(COUNTS_HEADER)?;
    }
    for (angle, c) in data.angles.iter().zip(&data.counts) {
        match &c.channels {
            Some(ch) if two => w.write_record([
                angle.to_string(),
                ch.pp.to_string(),
                ch.pm.to_string(),
                ch.mp.to_string(),
                ch.mm.to_string(),
            ])?,
            _ => w.write_record([
                angle.to_string(),
                c.singles_1.to_string(),
                c.singles_2.to_string(),
                c.coincidences.to_string(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<T> {
    let raw = rec.get(i).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| InputError(format!("line {line}: column `{name}` has invalid value {raw:?}")).into())
}

fn poisson(n: f64) -> f64 {
    n.max(1.0).sqrt()
}

/// Read counts or rates. Counts get Poisson uncertainties; rates carry
/// theirs only if an `uncertainty` column is present.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let records: Vec<(u64, csv::StringRecord)> = reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            Ok((r.position().map_or(0, |p| p.line()), r))
        })
        .collect::<Result<_>>()?;
    if records.is_empty() {
        return Err(InputError(format!("{}: no data rows", path.display())).into());
    }

    if header == COUNTS_HEADER {
        let pts = records
            .iter()
            .map(|(line, r)| {
                let n: f64 = field::<u64>(r, 3, "coincidences", *line)? as f64;
                Ok((field(r, 0, "angle_rad", *line)?, n, Some(poisson(n))))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Dataset::Single(RateSeries::from_angles(&pts)?));
    }
    if header == TWO_CHANNEL_HEADER {
        let series = |col: usize| -> Result<RateSeries> {
            let pts = records
                .iter()
                .map(|(line, r)| {
                    let n: f64 = field::<u64>(r, col, TWO_CHANNEL_HEADER[col], *line)? as f64;
                    Ok((field(r, 0, "angle_rad", *line)?, n, Some(poisson(n))))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RateSeries::from_angles(&pts)?)
        };
        return Ok(Dataset::TwoChannel(TwoChannelRates::new(series(1)?, series(2)?, series(3)?, series(4)?)?));
    }
    if header == ["angle_rad", "rate"] || header == ["angle_rad", "rate", "uncertainty"] {
        let with_sigma = header.len() == 3;
        let pts = records
            .iter()
            .map(|(line, r)| {
                let sigma = if with_sigma { Some(field(r, 2, "uncertainty", *line)?) } else { None };
                Ok((field(r, 0, "angle_rad", *line)?, field(r, 1, "rate", *line)?, sigma))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Dataset::Single(RateSeries::from_angles(&pts)?));
    }
    Err(InputError(format!(
        "{}: unrecognized header {:?}; expected `{}`, `{}` or `angle_rad,rate[,uncertainty]`",
        path.display(),
        header,
        COUNTS_HEADER.join(","),
        TWO_CHANNEL_HEADER.join(",")
    ))
    .into())
}

/// Write columns of equal length under the given header.
pub fn write_columns(path: &Path, header: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    let rows = columns.first().map_or(0, Vec::len);
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

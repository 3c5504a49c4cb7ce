//! Wide-layout CSV files, one row per interval.
//!
//! Household files: `timestamp,<id>_load_kw,<id>_pv_kw,...`.
//! EV files: `timestamp,<profile_id>_kw,...`.
//! The timestamp column is informative; row order defines the interval index.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::domain::{EvDemandSeries, HouseholdSeries, TimeAxis};
use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads every value column into memory; checks shape, parses and rejects
/// negative or missing cells.
/// Reads a timestamp-first table. `parse_header` sees the value column names
/// before any row is read and returns whatever the caller keys series by.
fn read_columns<R: Read, H>(
    reader: R,
    axis: &TimeAxis,
    parse_header: impl FnOnce(&[String]) -> Result<H>,
) -> Result<(H, Vec<Vec<f64>>)> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::MalformedHeader(e.to_string()))?
        .clone();
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    match names.first() {
        Some(first) if first == "timestamp" => {}
        _ => {
            return Err(Error::MalformedHeader(
                "first column must be `timestamp`".into(),
            ))
        }
    }
    let value_names = names[1..].to_vec();
    if value_names.is_empty() {
        return Err(Error::MalformedHeader("no value columns".into()));
    }
    let keys = parse_header(&value_names)?;
    let mut columns = vec![Vec::with_capacity(axis.steps()); value_names.len()];
    let mut record = StringRecord::new();
    let mut row = 0usize;
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| Error::InvalidValue {
                row: row + 1,
                column: "*".into(),
                reason: e.to_string(),
            })?;
        if !more {
            break;
        }
        row += 1;
        if record.len() != names.len() {
            return Err(Error::InvalidValue {
                row,
                column: "*".into(),
                reason: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        for (k, (cell, name)) in record.iter().skip(1).zip(&value_names).enumerate() {
            let cell = cell.trim();
            let invalid = |reason: String| Error::InvalidValue {
                row,
                column: name.clone(),
                reason,
            };
            if cell.is_empty() {
                return Err(invalid("missing value".into()));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| invalid(format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(invalid(format!("`{cell}` is not finite")));
            }
            if v < 0.0 {
                return Err(invalid(format!("negative value {cell}")));
            }
            columns[k].push(v);
        }
    }
    if row != axis.steps() {
        return Err(Error::LengthMismatch {
            got: row,
            expected: axis.steps(),
        });
    }
    Ok((keys, columns))
}

fn household_ids(names: &[String]) -> Result<Vec<String>> {
    if !names.len().is_multiple_of(2) {
        return Err(Error::MalformedHeader(
            "household columns must come in <id>_load_kw,<id>_pv_kw pairs".into(),
        ));
    }
    names
        .chunks(2)
        .map(|pair| {
            let id = pair[0].strip_suffix("_load_kw").ok_or_else(|| {
                Error::MalformedHeader(format!("expected `<id>_load_kw`, found `{}`", pair[0]))
            })?;
            let pv_id = pair[1].strip_suffix("_pv_kw").ok_or_else(|| {
                Error::MalformedHeader(format!("expected `{id}_pv_kw`, found `{}`", pair[1]))
            })?;
            if id.is_empty() || id != pv_id {
                return Err(Error::MalformedHeader(format!(
                    "column pair `{}`,`{}` does not name one household",
                    pair[0], pair[1]
                )));
            }
            Ok(id.to_string())
        })
        .collect()
}

pub fn read_household_csv_from<R: Read>(
    reader: R,
    axis: &TimeAxis,
) -> Result<Vec<HouseholdSeries>> {
    let (ids, columns) = read_columns(reader, axis, household_ids)?;
    let mut columns = columns.into_iter();
    ids.iter()
        .map(|id| {
            let load = columns.next().expect("column per name");
            let pv = columns.next().expect("column per name");
            HouseholdSeries::new(id, load, pv)
        })
        .collect()
}

pub fn read_household_csv(path: impl AsRef<Path>, axis: &TimeAxis) -> Result<Vec<HouseholdSeries>> {
    let path = path.as_ref();
    read_household_csv_from(open(path)?, axis)
}

fn ev_ids(names: &[String]) -> Result<Vec<String>> {
    names
        .iter()
        .map(|name| {
            name.strip_suffix("_kw")
                .filter(|id| !id.is_empty())
                .map(str::to_string)
                .ok_or_else(|| {
                    Error::MalformedHeader(format!("expected `<profile_id>_kw`, found `{name}`"))
                })
        })
        .collect()
}

pub fn read_ev_csv_from<R: Read>(reader: R, axis: &TimeAxis) -> Result<Vec<EvDemandSeries>> {
    let (ids, columns) = read_columns(reader, axis, ev_ids)?;
    ids.iter()
        .zip(columns)
        .map(|(id, demand)| EvDemandSeries::new(id, demand))
        .collect()
}

pub fn read_ev_csv(path: impl AsRef<Path>, axis: &TimeAxis) -> Result<Vec<EvDemandSeries>> {
    let path = path.as_ref();
    read_ev_csv_from(open(path)?, axis)
}

/// An EV profile value above a single port's rating. Such values are
/// legal (several sessions aggregated); dispatch clips the PV share.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingWarning {
    pub profile: String,
    pub step: usize,
    pub value_kw: f64,
    pub port_kw: f64,
}

impl std::fmt::Display for RatingWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "profile {} step {}: {} kW exceeds port rating {} kW",
            self.profile, self.step, self.value_kw, self.port_kw
        )
    }
}

/// First over-rated value of each profile.
pub fn rating_warnings(profiles: &[EvDemandSeries], port_kw: f64) -> Vec<RatingWarning> {
    profiles
        .iter()
        .filter_map(|p| {
            p.demand()
                .iter()
                .position(|&v| v > port_kw)
                .map(|step| RatingWarning {
                    profile: p.id().to_string(),
                    step,
                    value_kw: p.demand()[step],
                    port_kw,
                })
        })
        .collect()
}

fn write_wide<W: Write>(
    writer: W,
    axis: &TimeAxis,
    header: Vec<String>,
    columns: &[&[f64]],
) -> std::result::Result<(), csv::Error> {
    let mut wtr = WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    wtr.write_record(std::iter::once("timestamp".to_string()).chain(header))?;
    let mut row = Vec::with_capacity(columns.len() + 1);
    for t in 0..axis.steps() {
        row.clear();
        row.push(axis.timestamp(t).format(TIMESTAMP_FORMAT).to_string());
        row.extend(columns.iter().map(|c| c[t].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn check_lengths(axis: &TimeAxis, columns: &[&[f64]]) -> Result<()> {
    match columns.iter().find(|c| c.len() != axis.steps()) {
        Some(c) => Err(Error::LengthMismatch {
            got: c.len(),
            expected: axis.steps(),
        }),
        None => Ok(()),
    }
}

fn household_columns(households: &[HouseholdSeries]) -> (Vec<String>, Vec<&[f64]>) {
    let header = households
        .iter()
        .flat_map(|h| [format!("{}_load_kw", h.id()), format!("{}_pv_kw", h.id())])
        .collect();
    let columns = households
        .iter()
        .flat_map(|h| [h.load(), h.pv_gen()])
        .collect();
    (header, columns)
}

fn ev_columns(profiles: &[EvDemandSeries]) -> (Vec<String>, Vec<&[f64]>) {
    let header = profiles.iter().map(|p| format!("{}_kw", p.id())).collect();
    let columns = profiles.iter().map(EvDemandSeries::demand).collect();
    (header, columns)
}

fn write_checked<W: Write>(
    writer: W,
    path: &Path,
    axis: &TimeAxis,
    (header, columns): (Vec<String>, Vec<&[f64]>),
) -> Result<()> {
    check_lengths(axis, &columns)?;
    write_wide(writer, axis, header, &columns).map_err(csv_err(path))
}

pub fn write_household_csv_to<W: Write>(
    writer: W,
    axis: &TimeAxis,
    households: &[HouseholdSeries],
) -> Result<()> {
    write_checked(
        writer,
        Path::new("<writer>"),
        axis,
        household_columns(households),
    )
}

/// Canonical household file: reading it back and rewriting reproduces it byte for byte.
pub fn write_household_csv(
    path: impl AsRef<Path>,
    axis: &TimeAxis,
    households: &[HouseholdSeries],
) -> Result<()> {
    let path = path.as_ref();
    write_checked(create(path)?, path, axis, household_columns(households))
}

pub fn write_ev_csv_to<W: Write>(
    writer: W,
    axis: &TimeAxis,
    profiles: &[EvDemandSeries],
) -> Result<()> {
    write_checked(writer, Path::new("<writer>"), axis, ev_columns(profiles))
}

pub fn write_ev_csv(
    path: impl AsRef<Path>,
    axis: &TimeAxis,
    profiles: &[EvDemandSeries],
) -> Result<()> {
    let path = path.as_ref();
    write_checked(create(path)?, path, axis, ev_columns(profiles))
}

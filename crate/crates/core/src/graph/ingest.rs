use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

/// One timestamped movement between two sites.
#[derive(Debug, Clone, PartialEq)]
pub struct MovementRecord {
    pub source_id: String,
    pub dest_id: String,
    pub year: i32,
    pub source: GeoPoint,
    pub dest: GeoPoint,
    pub species: Option<String>,
}

/// Header names of the columns holding each record field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSchema {
    pub source_id: String,
    pub dest_id: String,
    pub year: String,
    pub source_lat: String,
    pub source_lon: String,
    pub dest_lat: String,
    pub dest_lon: String,
    pub species: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            source_id: "source_id".into(),
            dest_id: "dest_id".into(),
            year: "year".into(),
            source_lat: "source_lat".into(),
            source_lon: "source_lon".into(),
            dest_lat: "dest_lat".into(),
            dest_lon: "dest_lon".into(),
            species: "species".into(),
        }
    }
}

/// What to do with a row that fails to parse or validate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowErrorPolicy {
    #[default]
    Skip,
    Abort,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub delimiter: u8,
    pub on_error: RowErrorPolicy,
    /// Inclusive range of accepted years.
    pub years: (i32, i32),
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            delimiter: b',',
            on_error: RowErrorPolicy::Skip,
            years: (1900, 2100),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    /// 1-based line number in the input, header included.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub records: Vec<MovementRecord>,
    pub rejected: Vec<RowDiagnostic>,
}

impl IngestReport {
    pub fn accepted(&self) -> usize {
        self.records.len()
    }
}

struct Columns {
    source_id: usize,
    dest_id: usize,
    year: usize,
    source_lat: usize,
    source_lon: usize,
    dest_lat: usize,
    dest_lon: usize,
    species: Option<usize>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, schema: &ColumnSchema) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let require = |name: &str| {
            find(name).ok_or_else(|| Error::Schema(format!("missing required column {name:?}")))
        };
        Ok(Columns {
            source_id: require(&schema.source_id)?,
            dest_id: require(&schema.dest_id)?,
            year: require(&schema.year)?,
            source_lat: require(&schema.source_lat)?,
            source_lon: require(&schema.source_lon)?,
            dest_lat: require(&schema.dest_lat)?,
            dest_lon: require(&schema.dest_lon)?,
            species: find(&schema.species),
        })
    }
}

fn field<'a>(row: &'a csv::StringRecord, idx: usize, name: &str) -> Result<&'a str, String> {
    row.get(idx)
        .map(str::trim)
        .ok_or_else(|| format!("missing field {name}"))
}

fn number(row: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, String> {
    let raw = field(row, idx, name)?;
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{name} {raw:?} is not a number"))
}

fn parse_row(
    row: &csv::StringRecord,
    cols: &Columns,
    opts: &IngestOptions,
) -> Result<MovementRecord, String> {
    let source_id = field(row, cols.source_id, "source_id")?;
    let dest_id = field(row, cols.dest_id, "dest_id")?;
    if source_id.is_empty() || dest_id.is_empty() {
        return Err("empty node id".into());
    }
    let year_raw = field(row, cols.year, "year")?;
    let year: i32 = year_raw
        .parse()
        .map_err(|_| format!("year {year_raw:?} is not an integer"))?;
    if year < opts.years.0 || year > opts.years.1 {
        return Err(format!(
            "year {year} outside valid range {}..={}",
            opts.years.0, opts.years.1
        ));
    }
    let point = |lat_idx, lon_idx, lat_name, lon_name| -> Result<GeoPoint, String> {
        let lat = number(row, lat_idx, lat_name)?;
        let lon = number(row, lon_idx, lon_name)?;
        GeoPoint::new(lat, lon).map_err(|e| e.to_string())
    };
    let source = point(cols.source_lat, cols.source_lon, "source_lat", "source_lon")?;
    let dest = point(cols.dest_lat, cols.dest_lon, "dest_lat", "dest_lon")?;
    let species = cols
        .species
        .and_then(|i| row.get(i))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned);
    Ok(MovementRecord {
        source_id: source_id.to_owned(),
        dest_id: dest_id.to_owned(),
        year,
        source,
        dest,
        species,
    })
}

/// Reads header-bearing delimited movement records.
///
/// Malformed rows are collected as diagnostics under
/// [`RowErrorPolicy::Skip`] or abort the read under [`RowErrorPolicy::Abort`].
pub fn ingest_movements<R: Read>(
    reader: R,
    schema: &ColumnSchema,
    opts: &IngestOptions,
) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .flexible(true)
        .from_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, schema)?;

    let mut report = IngestReport::default();
    let mut row = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                let line = row.position().map_or(0, |p| p.line());
                match parse_row(&row, &cols, opts) {
                    Ok(rec) => report.records.push(rec),
                    Err(message) => {
                        if opts.on_error == RowErrorPolicy::Abort {
                            return Err(Error::Row { row: line, message });
                        }
                        log::warn!("skipping line {line}: {message}");
                        report.rejected.push(RowDiagnostic { line, message });
                    }
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if opts.on_error == RowErrorPolicy::Abort {
                    return Err(e.into());
                }
                log::warn!("skipping line {line}: {e}");
                report.rejected.push(RowDiagnostic {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    log::info!(
        "ingested {} movement records ({} rejected)",
        report.records.len(),
        report.rejected.len()
    );
    Ok(report)
}

/// Writes records using the default column names.
pub fn write_movements<W: Write>(writer: W, records: &[MovementRecord], delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(writer);
    w.write_record([
        "source_id",
        "dest_id",
        "year",
        "source_lat",
        "source_lon",
        "dest_lat",
        "dest_lon",
        "species",
    ])?;
    for r in records {
        w.write_record([
            r.source_id.clone(),
            r.dest_id.clone(),
            r.year.to_string(),
            r.source.lat.to_string(),
            r.source.lon.to_string(),
            r.dest.lat.to_string(),
            r.dest.lon.to_string(),
            r.species.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

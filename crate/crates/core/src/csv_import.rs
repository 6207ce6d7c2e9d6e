//! Import of per-pixel spectra tables.
//!
//! The header row is `i,j,<mz_1>,...,<mz_Z>`; each following row holds the
//! intensities of one spectral pixel. Pixels that never appear are outside
//! the spectral mask and zero-filled.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use log::warn;
use thiserror::Error;

use crate::stack::{MassChannelStack, Plane, SpectralMask, StackError};

#[derive(Debug, Error)]
pub enum CsvImportError {
    #[error("line {line}: pixel ({i}, {j}) listed twice (first on line {first_line})")]
    DuplicatePixel {
        line: u64,
        first_line: u64,
        i: usize,
        j: usize,
    },
    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    NonNumericCell {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("line {line}, column {column}: negative coordinate {value}")]
    NegativeCoordinate {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("header must start with `i,j` followed by at least one m/z column")]
    BadHeader,
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("no pixel rows")]
    Empty,
    #[error(transparent)]
    Invariant(#[from] StackError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub fn import_csv(path: impl AsRef<Path>) -> Result<MassChannelStack, CsvImportError> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    parse(reader)
}

pub fn import_csv_reader<R: Read>(input: R) -> Result<MassChannelStack, CsvImportError> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    parse(reader)
}

fn parse_number(line: u64, column: usize, value: &str) -> Result<f64, CsvImportError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CsvImportError::NonNumericCell {
            line,
            column,
            value: value.to_string(),
        })
}

fn parse_coordinate(line: u64, column: usize, value: &str) -> Result<usize, CsvImportError> {
    if let Ok(v) = value.parse::<i64>() {
        return usize::try_from(v).map_err(|_| CsvImportError::NegativeCoordinate {
            line,
            column,
            value: value.to_string(),
        });
    }
    Err(CsvImportError::NonNumericCell {
        line,
        column,
        value: value.to_string(),
    })
}

fn parse<R: Read>(mut reader: csv::Reader<R>) -> Result<MassChannelStack, CsvImportError> {
    let mut records = reader.records();
    let header = records.next().ok_or(CsvImportError::BadHeader)??;
    if header.len() < 3
        || !header[0].eq_ignore_ascii_case("i")
        || !header[1].eq_ignore_ascii_case("j")
    {
        return Err(CsvImportError::BadHeader);
    }
    let mz_values: Vec<f64> = header
        .iter()
        .enumerate()
        .skip(2)
        .map(|(column, v)| parse_number(1, column + 1, v))
        .collect::<Result<_, _>>()?;
    let mut sorted = mz_values.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        warn!("duplicate m/z labels in csv header; keeping them verbatim");
    }

    let z = mz_values.len();
    let mut seen: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: Vec<((usize, usize), Vec<f64>)> = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != z + 2 {
            return Err(CsvImportError::FieldCount {
                line,
                expected: z + 2,
                found: record.len(),
            });
        }
        let i = parse_coordinate(line, 1, &record[0])?;
        let j = parse_coordinate(line, 2, &record[1])?;
        if let Some(&first_line) = seen.get(&(i, j)) {
            return Err(CsvImportError::DuplicatePixel {
                line,
                first_line,
                i,
                j,
            });
        }
        seen.insert((i, j), line);
        let values = record
            .iter()
            .enumerate()
            .skip(2)
            .map(|(column, v)| parse_number(line, column + 1, v))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(((i, j), values));
    }
    if rows.is_empty() {
        return Err(CsvImportError::Empty);
    }

    let h = rows.iter().map(|((i, _), _)| i + 1).max().unwrap();
    let w = rows.iter().map(|((_, j), _)| j + 1).max().unwrap();
    let mut bits = ndarray::Array2::from_elem((h, w), false);
    let mut planes = vec![Plane::zeros((h, w)); z];
    for (pos, values) in rows {
        bits[pos] = true;
        for (plane, v) in planes.iter_mut().zip(values) {
            plane[pos] = v;
        }
    }
    Ok(MassChannelStack::new(mz_values, SpectralMask::new(bits)?, planes)?)
}

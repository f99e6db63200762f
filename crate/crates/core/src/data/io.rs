//! Table files and raw binary vector files.
//!
//! Table file: a header line `name:type,...` followed by CSV rows. Vector
//! cells are written `[f;f;...]`; an empty scalar cell is NULL.
//!
//! Binary vectors: little-endian `u32` count, `u32` dim, then `count * dim`
//! `f32` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::schema::Schema;
use super::table::{Table, TableBuilder};
use super::value::{format_vector, parse_vector, DataType, Datum, ScalarValue};
use crate::error::{Error, Location, Result};

/// Loads a table file, checking its header against `schema`.
///
/// Parse errors carry the 0-based data-row index (the header is not counted).
pub fn load_table(path: impl AsRef<Path>, schema: Schema) -> Result<Table> {
    let file = File::open(path)?;
    read_table(BufReader::new(file), schema)
}

pub fn read_table<R: Read>(reader: R, schema: Schema) -> Result<Table> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = csv.headers().map_err(|e| header_error(e.to_string()))?.clone();
    check_header(&header, &schema)?;

    let types: Vec<DataType> = schema.columns().iter().map(|c| c.ty).collect();
    let mut builder = TableBuilder::new(schema);
    for (index, record) in csv.records().enumerate() {
        let record = record.map_err(|e| row_error(index, e.to_string()))?;
        if record.len() != types.len() {
            return Err(row_error(
                index,
                format!("expected {} fields, found {}", types.len(), record.len()),
            ));
        }
        let mut row = Vec::with_capacity(types.len());
        for (field, ty) in record.iter().zip(&types) {
            row.push(parse_cell(field, *ty).map_err(|m| row_error(index, m))?);
        }
        builder.push_row(row).map_err(|e| match e {
            Error::Dimension { .. } => e,
            other => row_error(index, other.to_string()),
        })?;
    }
    Ok(builder.finish())
}

fn check_header(header: &csv::StringRecord, schema: &Schema) -> Result<()> {
    if header.len() != schema.len() {
        return Err(header_error(format!(
            "header has {} columns, schema has {}",
            header.len(),
            schema.len()
        )));
    }
    for (field, def) in header.iter().zip(schema.columns()) {
        let (name, ty) = field
            .split_once(':')
            .ok_or_else(|| header_error(format!("header field `{field}` is not `name:type`")))?;
        let ty = DataType::parse(ty)
            .ok_or_else(|| header_error(format!("unknown type in header field `{field}`")))?;
        if name.trim() != def.name || ty != def.ty {
            return Err(header_error(format!(
                "header field `{field}` does not match column `{}:{}`",
                def.name, def.ty
            )));
        }
    }
    Ok(())
}

fn parse_cell(field: &str, ty: DataType) -> std::result::Result<Datum, String> {
    let bad = || format!("cannot parse `{field}` as {ty}");
    match ty {
        DataType::Vector(_) => parse_vector(field).map(Datum::Vector).ok_or_else(bad),
        _ if field.is_empty() => Ok(Datum::Scalar(ScalarValue::Null)),
        DataType::Int64 => field.trim().parse().map(|v| ScalarValue::Int(v).into()).map_err(|_| bad()),
        DataType::Float64 => field
            .trim()
            .parse()
            .map(|v| ScalarValue::Float(v).into())
            .map_err(|_| bad()),
        DataType::Text => Ok(ScalarValue::text(field).into()),
    }
}

fn header_error(message: String) -> Error {
    Error::Parse {
        location: Location::LineColumn { line: 1, column: 1 },
        message,
    }
}

fn row_error(index: usize, message: String) -> Error {
    Error::Parse {
        location: Location::Row(index),
        message,
    }
}

pub fn save_table(path: impl AsRef<Path>, table: &Table) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    write_table(&mut out, table)?;
    out.flush()?;
    Ok(())
}

pub fn write_table<W: Write>(writer: W, table: &Table) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().from_writer(writer);
    let schema = table.schema();
    let header: Vec<String> = schema
        .columns()
        .iter()
        .map(|c| format!("{}:{}", c.name, c.ty))
        .collect();
    csv.write_record(&header).map_err(csv_io)?;
    let mut fields = Vec::with_capacity(schema.len());
    for row in 0..table.row_count() as u32 {
        fields.clear();
        for (col, def) in schema.columns().iter().enumerate() {
            fields.push(match def.ty {
                DataType::Vector(_) => format_vector(table.vector_at(col, row)),
                _ => table.value(col, row).to_string(),
            });
        }
        csv.write_record(&fields).map_err(csv_io)?;
    }
    csv.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads a binary vector file into `(dim, row-major values)`.
pub fn read_vectors(path: impl AsRef<Path>) -> Result<(usize, Vec<f32>)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_vectors(&bytes)
}

pub fn decode_vectors(bytes: &[u8]) -> Result<(usize, Vec<f32>)> {
    let word = |i: usize| -> Option<u32> {
        bytes
            .get(i * 4..i * 4 + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    };
    let truncated = |what: &str| Error::Parse {
        location: Location::Row(0),
        message: format!("binary vector file truncated in {what}"),
    };
    let count = word(0).ok_or_else(|| truncated("header"))? as usize;
    let dim = word(1).ok_or_else(|| truncated("header"))? as usize;
    let body = &bytes[8..];
    let expected = count * dim * 4;
    if body.len() != expected {
        return Err(Error::Parse {
            location: Location::Row(body.len() / (dim * 4).max(1)),
            message: format!(
                "binary vector file holds {} payload bytes, header implies {expected}",
                body.len()
            ),
        });
    }
    let values = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok((dim, values))
}

pub fn write_vectors(path: impl AsRef<Path>, dim: usize, values: &[f32]) -> Result<()> {
    std::fs::write(path, encode_vectors(dim, values)?)?;
    Ok(())
}

pub fn encode_vectors(dim: usize, values: &[f32]) -> Result<Vec<u8>> {
    if dim == 0 || !values.len().is_multiple_of(dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: values.len(),
        });
    }
    let mut out = Vec::with_capacity(8 + values.len() * 4);
    out.extend_from_slice(&((values.len() / dim) as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

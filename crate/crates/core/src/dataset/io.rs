use std::fs::File;
use std::path::Path;

use super::{Dataset, FeatureSchema, Label};
use crate::error::{Error, Result};

/// Reads a headed CSV whose columns are exactly the schema features plus the
/// label column, in any order. Labels may be `-1/+1` or `0/1`.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub(crate) fn read_csv<R: std::io::Read>(input: R, schema: &FeatureSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader.headers()?.clone();

    let mut column_of = vec![usize::MAX; schema.len()];
    let mut label_col = None;
    for (c, name) in header.iter().enumerate() {
        let name = name.trim();
        if name == schema.label_name() {
            label_col = Some(c);
        } else if let Some(j) = schema.index_of(name) {
            column_of[j] = c;
        } else {
            return Err(Error::SchemaMismatch {
                column: name.to_string(),
                reason: "is not declared in the schema".into(),
            });
        }
    }
    for (j, &c) in column_of.iter().enumerate() {
        if c == usize::MAX {
            return Err(Error::SchemaMismatch {
                column: schema.feature(j).name.clone(),
                reason: "is missing from the header".into(),
            });
        }
    }
    let label_col = label_col.ok_or_else(|| Error::SchemaMismatch {
        column: schema.label_name().to_string(),
        reason: "is missing from the header".into(),
    })?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} cells, got {}", header.len(), record.len()),
            });
        }
        for &c in &column_of {
            let cell = record[c].trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric cell `{cell}` in column `{}`", &header[c]),
            })?;
            values.push(v);
        }
        labels.push(parse_label(record[label_col].trim(), row)?);
    }
    Dataset::from_flat(schema.clone(), values, labels)
}

fn parse_label(cell: &str, row: usize) -> Result<Label> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        row,
        message: format!("non-numeric label `{cell}`"),
    })?;
    match v {
        1.0 => Ok(Label::Positive),
        0.0 | -1.0 => Ok(Label::Negative),
        _ => Err(Error::Parse {
            row,
            message: format!("label `{cell}` is not one of -1, 0, 1"),
        }),
    }
}

pub(crate) fn write_csv<W: std::io::Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = data.schema().names().collect();
    header.push(data.schema().label_name());
    w.write_record(&header)?;
    for (row, label) in data.rows().zip(data.labels()) {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        cells.push(format!("{}", label.sign() as i8));
        w.write_record(&cells)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

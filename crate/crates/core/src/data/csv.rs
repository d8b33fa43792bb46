//! CSV with a mandatory header row. A column is numeric iff every
//! non-empty cell parses as a finite number; otherwise it is nominal with
//! its values in order of first appearance. Empty cells are missing.

use super::{Attribute, AttributeKind, Dataset, Instance, Value};
use crate::error::{Error, Result};

fn line_of(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(fallback)
}

pub fn read_csv(input: &[u8], class_column: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let header = reader
        .headers()
        .map_err(|e| Error::parse(1, format!("malformed header: {}", e)))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::parse(1, "missing header row"));
    }
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::parse(1, format!("column {} has an empty name", i + 1)));
        }
        if names[..i].contains(name) {
            return Err(Error::parse(1, format!("duplicate column name '{}'", name)));
        }
    }
    if names.len() < 2 {
        return Err(Error::parse(1, "need at least one attribute column and a class column"));
    }

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(i + 2);
            Error::parse(line, e.to_string())
        })?;
        let line = line_of(&record, i + 2);
        if record.len() == 1 && record[0].is_empty() && names.len() > 1 {
            continue;
        }
        if record.len() != names.len() {
            return Err(Error::parse(
                line,
                format!("expected {} cells, found {}", names.len(), record.len()),
            ));
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "empty dataset"));
    }

    let class_idx = match class_column {
        Some(name) => names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::parse(1, format!("class column '{}' not found", name)))?,
        None => names.len() - 1,
    };

    let mut columns = Vec::with_capacity(names.len());
    for (col, name) in names.iter().enumerate() {
        let numeric = col != class_idx
            && rows
                .iter()
                .map(|(_, r)| r[col].as_str())
                .filter(|c| !c.is_empty())
                .all(|c| c.parse::<f64>().is_ok_and(f64::is_finite));
        let kind = if numeric {
            AttributeKind::Numeric
        } else {
            let mut domain: Vec<String> = Vec::new();
            for (_, r) in &rows {
                let cell = &r[col];
                if !cell.is_empty() && !domain.contains(cell) {
                    domain.push(cell.clone());
                }
            }
            if domain.is_empty() {
                return Err(Error::parse(1, format!("class column '{}' has no values", name)));
            }
            AttributeKind::Nominal(domain)
        };
        columns.push(Attribute { name: name.clone(), kind });
    }

    let mut instances = Vec::with_capacity(rows.len());
    for (id, (line, cells)) in rows.iter().enumerate() {
        let mut values = Vec::with_capacity(columns.len() - 1);
        let mut label = 0;
        for (col, (cell, attr)) in cells.iter().zip(&columns).enumerate() {
            if col == class_idx {
                label = attr
                    .value_index(cell)
                    .ok_or_else(|| Error::parse(*line, "missing class label"))? as usize;
                continue;
            }
            let value = if cell.is_empty() {
                Value::Missing
            } else {
                match attr.kind {
                    AttributeKind::Numeric => Value::Numeric(cell.parse().expect("checked during inference")),
                    AttributeKind::Nominal(_) => Value::Nominal(attr.value_index(cell).expect("domain built from cells")),
                }
            };
            values.push(value);
        }
        instances.push(Instance { id, values, label });
    }

    let class = columns.remove(class_idx);
    Dataset::new("data", columns, class, instances)
}

/// Writes the dataset as CSV with the class column last. Missing values
/// become empty cells.
pub fn write_csv(dataset: &Dataset) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let header: Vec<&str> = dataset
        .attributes()
        .iter()
        .map(|a| a.name.as_str())
        .chain(std::iter::once(dataset.class_attribute().name.as_str()))
        .collect();
    writer.write_record(&header).expect("in-memory write");
    for inst in dataset.instances() {
        let mut record: Vec<String> = inst
            .values
            .iter()
            .enumerate()
            .map(|(col, v)| match v {
                Value::Missing => String::new(),
                _ => dataset.format_value(col, v),
            })
            .collect();
        record.push(dataset.label_name(inst.label).to_string());
        writer.write_record(&record).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

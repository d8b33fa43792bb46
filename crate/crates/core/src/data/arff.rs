//! ARFF subset: `@relation`, `@attribute <name> numeric|{v1,...}`, `@data`,
//! `?` for missing values and `%` line comments. Sparse rows and
//! string/date attributes are rejected.

use super::{Attribute, AttributeKind, Dataset, Instance, Value};
use crate::error::{Error, Result};

#[derive(Debug)]
struct Field {
    text: String,
    quoted: bool,
}

/// Splits a comma separated list, honouring single/double quotes and
/// backslash escapes inside quotes. Surrounding whitespace is trimmed.
fn split_fields(line: &str, lineno: usize) -> Result<Vec<Field>> {
    let mut fields = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let mut text = String::new();
        let mut quoted = false;
        match chars.peek() {
            Some(&q) if q == '\'' || q == '"' => {
                quoted = true;
                chars.next();
                let mut closed = false;
                while let Some(c) = chars.next() {
                    if c == '\\' {
                        match chars.next() {
                            Some(e) => text.push(e),
                            None => break,
                        }
                    } else if c == q {
                        closed = true;
                        break;
                    } else {
                        text.push(c);
                    }
                }
                if !closed {
                    return Err(Error::parse(lineno, "unterminated quoted value"));
                }
                while chars.peek().is_some_and(|c| c.is_whitespace()) {
                    chars.next();
                }
                match chars.peek() {
                    None | Some(',') => {}
                    Some(c) => return Err(Error::parse(lineno, format!("unexpected '{}' after quoted value", c))),
                }
            }
            _ => {
                while let Some(&c) = chars.peek() {
                    if c == ',' {
                        break;
                    }
                    text.push(c);
                    chars.next();
                }
                let trimmed = text.trim_end().len();
                text.truncate(trimmed);
            }
        }
        fields.push(Field { text, quoted });
        match chars.next() {
            Some(',') => continue,
            None => break,
            Some(c) => return Err(Error::parse(lineno, format!("unexpected '{}'", c))),
        }
    }
    Ok(fields)
}

/// Reads a leading name token (quoted or whitespace delimited) and returns
/// it with the remainder of the line.
fn split_name(rest: &str, lineno: usize) -> Result<(String, &str)> {
    let rest = rest.trim_start();
    let mut chars = rest.char_indices();
    match chars.next() {
        None => Err(Error::parse(lineno, "missing name")),
        Some((_, q)) if q == '\'' || q == '"' => {
            let mut name = String::new();
            let mut escaped = false;
            for (i, c) in chars {
                if escaped {
                    name.push(c);
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    return Ok((name, &rest[i + c.len_utf8()..]));
                } else {
                    name.push(c);
                }
            }
            Err(Error::parse(lineno, "unterminated quoted name"))
        }
        Some(_) => {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            Ok((rest[..end].to_string(), &rest[end..]))
        }
    }
}

fn parse_type(spec: &str, lineno: usize) -> Result<AttributeKind> {
    let spec = spec.trim();
    if let Some(inner) = spec.strip_prefix('{') {
        let inner = inner
            .strip_suffix('}')
            .ok_or_else(|| Error::parse(lineno, "nominal value list is not closed with '}'"))?;
        let values: Vec<String> = split_fields(inner, lineno)?.into_iter().map(|f| f.text).collect();
        if values.iter().any(|v| v.is_empty()) {
            return Err(Error::parse(lineno, "empty nominal value"));
        }
        let mut seen = std::collections::HashSet::new();
        for v in &values {
            if !seen.insert(v) {
                return Err(Error::parse(lineno, format!("nominal value '{}' listed twice", v)));
            }
        }
        return Ok(AttributeKind::Nominal(values));
    }
    match spec.to_ascii_lowercase().as_str() {
        "numeric" | "real" | "integer" => Ok(AttributeKind::Numeric),
        "" => Err(Error::parse(lineno, "missing attribute type")),
        other => Err(Error::parse(lineno, format!("unsupported attribute type '{}'", other))),
    }
}

pub fn read_arff(input: &[u8], class_column: Option<&str>) -> Result<Dataset> {
    let text = std::str::from_utf8(input).map_err(|e| Error::parse(0, format!("input is not UTF-8: {}", e)))?;

    let mut relation = String::from("data");
    let mut columns: Vec<Attribute> = Vec::new();
    let mut in_data = false;
    let mut data_line = 0;
    let mut rows: Vec<(usize, Vec<Field>)> = Vec::new();
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            if line.starts_with('{') {
                return Err(Error::parse(lineno, "sparse ARFF rows are not supported"));
            }
            rows.push((lineno, split_fields(line, lineno)?));
            continue;
        }
        if !line.starts_with('@') {
            return Err(Error::parse(lineno, format!("expected a header declaration, found '{}'", line)));
        }
        let keyword_end = line.find(char::is_whitespace).unwrap_or(line.len());
        let keyword = line[..keyword_end].to_ascii_lowercase();
        let rest = &line[keyword_end..];
        match keyword.as_str() {
            "@relation" => {
                let (name, _) = split_name(rest, lineno)?;
                relation = name;
            }
            "@attribute" => {
                let (name, type_spec) = split_name(rest, lineno)?;
                if columns.iter().any(|a| a.name == name) {
                    return Err(Error::parse(lineno, format!("duplicate attribute '{}'", name)));
                }
                let kind = parse_type(type_spec, lineno)?;
                columns.push(Attribute { name, kind });
            }
            "@data" => {
                in_data = true;
                data_line = lineno;
            }
            other => return Err(Error::parse(lineno, format!("unknown declaration '{}'", other))),
        }
    }

    if !in_data {
        return Err(Error::parse(last_line, "missing @data section"));
    }
    if columns.len() < 2 {
        return Err(Error::parse(data_line, "need at least one attribute and a class attribute"));
    }
    if rows.is_empty() {
        return Err(Error::parse(last_line, "empty dataset"));
    }

    let class_idx = match class_column {
        Some(name) => columns
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::parse(data_line, format!("class attribute '{}' not declared", name)))?,
        None => columns.len() - 1,
    };
    if columns[class_idx].is_numeric() {
        return Err(Error::parse(
            data_line,
            format!("class attribute '{}' must be nominal", columns[class_idx].name),
        ));
    }

    let mut instances = Vec::with_capacity(rows.len());
    for (id, (lineno, fields)) in rows.into_iter().enumerate() {
        if fields.len() != columns.len() {
            return Err(Error::parse(
                lineno,
                format!("expected {} values, found {}", columns.len(), fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(columns.len() - 1);
        let mut label = None;
        for (col, (field, attr)) in fields.iter().zip(&columns).enumerate() {
            let value = if field.text == "?" && !field.quoted {
                Value::Missing
            } else {
                match &attr.kind {
                    AttributeKind::Numeric => {
                        let x: f64 = field.text.parse().map_err(|_| {
                            Error::parse(lineno, format!("'{}' is not a number (attribute '{}')", field.text, attr.name))
                        })?;
                        if !x.is_finite() {
                            return Err(Error::parse(lineno, format!("non-finite number '{}'", field.text)));
                        }
                        Value::Numeric(x)
                    }
                    AttributeKind::Nominal(_) => Value::Nominal(attr.value_index(&field.text).ok_or_else(|| {
                        Error::parse(
                            lineno,
                            format!("unknown nominal value '{}' for attribute '{}'", field.text, attr.name),
                        )
                    })?),
                }
            };
            if col == class_idx {
                label = match value {
                    Value::Nominal(i) => Some(i as usize),
                    _ => return Err(Error::parse(lineno, "missing class label")),
                };
            } else {
                values.push(value);
            }
        }
        instances.push(Instance {
            id,
            values,
            label: label.expect("class column visited"),
        });
    }

    let class = columns.remove(class_idx);
    Dataset::new(relation, columns, class, instances)
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s == "?"
        || s.starts_with('%')
        || s.starts_with('@')
        || s.chars().any(|c| c.is_whitespace() || matches!(c, ',' | '\'' | '"' | '{' | '}' | '\\'))
}

fn quote(s: &str) -> String {
    if !needs_quotes(s) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        if c == '\'' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
    out
}

fn declare(out: &mut String, attr: &Attribute) {
    out.push_str("@attribute ");
    out.push_str(&quote(&attr.name));
    match &attr.kind {
        AttributeKind::Numeric => out.push_str(" numeric\n"),
        AttributeKind::Nominal(values) => {
            out.push_str(" {");
            let quoted: Vec<String> = values.iter().map(|v| quote(v)).collect();
            out.push_str(&quoted.join(","));
            out.push_str("}\n");
        }
    }
}

/// Writes the dataset as ARFF with the class attribute declared last.
pub fn write_arff(dataset: &Dataset) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("@relation ");
    out.push_str(&quote(dataset.relation()));
    out.push_str("\n\n");
    for attr in dataset.attributes() {
        declare(&mut out, attr);
    }
    declare(&mut out, dataset.class_attribute());
    out.push_str("\n@data\n");
    for inst in dataset.instances() {
        for (col, v) in inst.values.iter().enumerate() {
            let cell = dataset.format_value(col, v);
            if matches!(v, Value::Missing) {
                out.push_str(&cell);
            } else {
                out.push_str(&quote(&cell));
            }
            out.push(',');
        }
        out.push_str(&quote(dataset.label_name(inst.label)));
        out.push('\n');
    }
    out.into_bytes()
}

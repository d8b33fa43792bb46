//! Tabular dataset model, file formats and the distance space used for
//! outlier detection and neighborhood assembly.
//!
//! A [`Dataset`] is a schema (ordered attributes plus a nominal class
//! attribute) and a list of instances. Instances carry a stable `id` that
//! survives sub-setting, so a training fold still refers to rows of the
//! dataset it was cut from. Ids are strictly increasing within a dataset.

mod arff;
mod csv;
mod encode;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::arff::{read_arff, write_arff};
pub use self::csv::{read_csv, write_csv};
pub use self::encode::{encode, EncodedView, Encoder, Metric};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Nominal(values.into_iter().map(Into::into).collect()),
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric)
    }

    /// Domain of a nominal attribute, `None` for numeric ones.
    pub fn values(&self) -> Option<&[String]> {
        match &self.kind {
            AttributeKind::Nominal(v) => Some(v),
            AttributeKind::Numeric => None,
        }
    }

    pub fn value_index(&self, symbol: &str) -> Option<u32> {
        self.values()?
            .iter()
            .position(|v| v == symbol)
            .map(|i| i as u32)
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Data("attribute with empty name".into()));
        }
        if let AttributeKind::Nominal(values) = &self.kind {
            if values.is_empty() {
                return Err(Error::Data(format!("nominal attribute '{}' has an empty domain", self.name)));
            }
            let mut seen = HashSet::new();
            for v in values {
                if !seen.insert(v.as_str()) {
                    return Err(Error::Data(format!(
                        "nominal attribute '{}' lists value '{}' twice",
                        self.name, v
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A single attribute value. Nominal values are indices into the
/// attribute's domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Numeric(f64),
    Nominal(u32),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: usize,
    pub values: Vec<Value>,
    /// Index into the class attribute's domain.
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    relation: String,
    attributes: Vec<Attribute>,
    class: Attribute,
    instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(
        relation: impl Into<String>,
        attributes: Vec<Attribute>,
        class: Attribute,
        instances: Vec<Instance>,
    ) -> Result<Self> {
        let ds = Dataset {
            relation: relation.into(),
            attributes,
            class,
            instances,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for attr in self.attributes.iter().chain(std::iter::once(&self.class)) {
            attr.validate()?;
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Data(format!("duplicate attribute name '{}'", attr.name)));
            }
        }
        let n_classes = match &self.class.kind {
            AttributeKind::Nominal(v) => v.len(),
            AttributeKind::Numeric => {
                return Err(Error::Data(format!("class attribute '{}' must be nominal", self.class.name)))
            }
        };
        let mut last_id = None;
        for inst in &self.instances {
            if let Some(prev) = last_id {
                if inst.id <= prev {
                    return Err(Error::Data(format!("instance ids must increase (id {} after {})", inst.id, prev)));
                }
            }
            last_id = Some(inst.id);
            if inst.values.len() != self.attributes.len() {
                return Err(Error::Data(format!(
                    "instance {} has {} values, schema has {} attributes",
                    inst.id,
                    inst.values.len(),
                    self.attributes.len()
                )));
            }
            if inst.label >= n_classes {
                return Err(Error::Data(format!("instance {} has label index {} out of range", inst.id, inst.label)));
            }
            for (value, attr) in inst.values.iter().zip(&self.attributes) {
                let ok = match (value, &attr.kind) {
                    (Value::Missing, _) => true,
                    (Value::Numeric(x), AttributeKind::Numeric) => x.is_finite(),
                    (Value::Nominal(i), AttributeKind::Nominal(dom)) => (*i as usize) < dom.len(),
                    _ => false,
                };
                if !ok {
                    return Err(Error::Data(format!(
                        "instance {} holds {:?}, incompatible with attribute '{}'",
                        inst.id, value, attr.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn class_attribute(&self) -> &Attribute {
        &self.class
    }

    /// The class domain, in declaration order.
    pub fn class_labels(&self) -> &[String] {
        self.class.values().expect("class attribute is nominal")
    }

    pub fn label_name(&self, label: usize) -> &str {
        &self.class_labels()[label]
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.instances.iter().map(|i| i.id)
    }

    pub fn row_of(&self, id: usize) -> Option<usize> {
        self.instances.binary_search_by_key(&id, |i| i.id).ok()
    }

    pub fn instance(&self, id: usize) -> Option<&Instance> {
        self.row_of(id).map(|r| &self.instances[r])
    }

    pub fn label_of(&self, id: usize) -> Option<usize> {
        self.instance(id).map(|i| i.label)
    }

    /// Instance counts per class label, indexed like [`Dataset::class_labels`].
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_labels().len()];
        for inst in &self.instances {
            counts[inst.label] += 1;
        }
        counts
    }

    /// Number of distinct labels that actually occur.
    pub fn present_classes(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    /// Ids grouped by class label, each group in ascending id order.
    pub fn class_partition(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.class_labels().len()];
        for inst in &self.instances {
            parts[inst.label].push(inst.id);
        }
        parts
    }

    /// A dataset with the same schema holding only the given ids. Ids that
    /// are not present are ignored.
    pub fn subset<I: IntoIterator<Item = usize>>(&self, ids: I) -> Dataset {
        let mut rows: Vec<usize> = ids.into_iter().filter_map(|id| self.row_of(id)).collect();
        rows.sort_unstable();
        rows.dedup();
        Dataset {
            relation: self.relation.clone(),
            attributes: self.attributes.clone(),
            class: self.class.clone(),
            instances: rows.into_iter().map(|r| self.instances[r].clone()).collect(),
        }
    }

    /// Appends attributes with one column of values each. `columns[j][row]`
    /// is the value of new attribute `j` for the instance at `row`.
    pub fn with_columns(&self, new_attributes: Vec<Attribute>, columns: Vec<Vec<Value>>) -> Result<Dataset> {
        if new_attributes.len() != columns.len() {
            return Err(Error::Data("column count does not match attribute count".into()));
        }
        let mut attributes = self.attributes.clone();
        attributes.extend(new_attributes);
        let mut instances = self.instances.clone();
        for column in &columns {
            if column.len() != instances.len() {
                return Err(Error::Data("column length does not match instance count".into()));
            }
        }
        for (row, inst) in instances.iter_mut().enumerate() {
            inst.values.extend(columns.iter().map(|c| c[row]));
        }
        Dataset::new(self.relation.clone(), attributes, self.class.clone(), instances)
    }

    pub fn with_relation(mut self, relation: impl Into<String>) -> Dataset {
        self.relation = relation.into();
        self
    }

    /// Renders a value of attribute `attr` as it appears in data files.
    pub fn format_value(&self, attr: usize, value: &Value) -> String {
        match value {
            Value::Missing => "?".to_string(),
            Value::Numeric(x) => format_number(*x),
            Value::Nominal(i) => self.attributes[attr].values().expect("nominal attribute")[*i as usize].clone(),
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} instances, {} attributes, {} classes",
            self.relation,
            self.instances.len(),
            self.attributes.len(),
            self.class_labels().len()
        )
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    format!("{}", x)
}

/// Input formats understood by [`parse_dataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Arff,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension; anything but `.csv` is ARFF.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Arff,
        }
    }
}

/// Parses a dataset. `class_column` selects the class attribute by name;
/// by default the last column is the class.
pub fn parse_dataset(input: &[u8], format: Format, class_column: Option<&str>) -> Result<Dataset> {
    match format {
        Format::Arff => read_arff(input, class_column),
        Format::Csv => read_csv(input, class_column),
    }
}

pub fn write_dataset(dataset: &Dataset, format: Format) -> Vec<u8> {
    match format {
        Format::Arff => write_arff(dataset),
        Format::Csv => write_csv(dataset),
    }
}

//! Schema-driven CSV records.
//!
//! Categorical strings are encoded in order of first appearance. An empty
//! field gets the reserved code one above the column's largest code.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CategoricalData, Column, MixedData};
use crate::transform::discretize_numeric;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Numeric,
    Categorical,
}

/// Column types by header name. Columns not listed are categorical.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    #[serde(default)]
    pub columns: HashMap<String, ColumnType>,
}

impl Schema {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("schema: {e}")))
    }

    fn type_of(&self, name: &str) -> ColumnType {
        self.columns
            .get(name)
            .copied()
            .unwrap_or(ColumnType::Categorical)
    }
}

/// Per-column code-to-string tables; `None` for numeric columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dictionaries {
    pub header: Vec<String>,
    pub values: Vec<Option<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub data: MixedData,
    pub dictionaries: Dictionaries,
}

impl CsvTable {
    /// Categorical records, discretizing numeric columns into `t_disc` bins.
    pub fn to_categorical(&self, t_disc: usize) -> Result<CategoricalData> {
        let cols = self.data.columns();
        if cols.iter().any(|c| matches!(c, Column::Numeric(_))) {
            return discretize_numeric(&self.data, t_disc);
        }
        let n = self.data.len();
        let dim = cols.len();
        let mut codes = vec![0u32; n * dim];
        for (a, c) in cols.iter().enumerate() {
            if let Column::Categorical(v) = c {
                for (i, &x) in v.iter().enumerate() {
                    codes[i * dim + a] = x;
                }
            }
        }
        CategoricalData::new(dim, codes)
    }
}

enum Builder {
    Numeric(Vec<f64>),
    Categorical {
        codes: Vec<Option<u32>>,
        dict: HashMap<String, u32>,
        order: Vec<String>,
    },
}

pub fn parse_csv(text: &str, schema: &Schema) -> Result<CsvTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::at_line(1, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() {
        return Err(Error::at_line(1, "empty header"));
    }
    for name in schema.columns.keys() {
        if !header.contains(name) {
            return Err(Error::config(format!(
                "schema names unknown column {name:?}"
            )));
        }
    }
    let mut cols: Vec<Builder> = header
        .iter()
        .map(|h| match schema.type_of(h) {
            ColumnType::Numeric => Builder::Numeric(Vec::new()),
            ColumnType::Categorical => Builder::Categorical {
                codes: Vec::new(),
                dict: HashMap::new(),
                order: Vec::new(),
            },
        })
        .collect();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::at_line(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        for (field, col) in rec.iter().zip(cols.iter_mut()) {
            match col {
                Builder::Numeric(v) => {
                    let x: f64 = field.trim().parse().map_err(|_| {
                        Error::at_line(line, format!("cannot parse {field:?} as a number"))
                    })?;
                    if !x.is_finite() {
                        return Err(Error::at_line(line, format!("non-finite value {field:?}")));
                    }
                    v.push(x);
                }
                Builder::Categorical { codes, dict, order } => {
                    if field.is_empty() {
                        codes.push(None);
                    } else {
                        let next = order.len() as u32;
                        let code = *dict.entry(field.to_owned()).or_insert_with(|| {
                            order.push(field.to_owned());
                            next
                        });
                        codes.push(Some(code));
                    }
                }
            }
        }
    }
    let mut columns = Vec::with_capacity(cols.len());
    let mut values = Vec::with_capacity(cols.len());
    for col in cols {
        match col {
            Builder::Numeric(v) => {
                columns.push(Column::Numeric(v));
                values.push(None);
            }
            Builder::Categorical {
                codes, mut order, ..
            } => {
                let missing = order.len() as u32;
                if codes.iter().any(Option::is_none) {
                    order.push(String::new());
                }
                columns.push(Column::Categorical(
                    codes.into_iter().map(|c| c.unwrap_or(missing)).collect(),
                ));
                values.push(Some(order));
            }
        }
    }
    Ok(CsvTable {
        data: MixedData::new(columns)?,
        dictionaries: Dictionaries { header, values },
    })
}

pub fn read_categorical_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<CsvTable> {
    parse_csv(&fs::read_to_string(path)?, schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(t: &CsvTable, col: usize) -> Vec<u32> {
        match &t.data.columns()[col] {
            Column::Categorical(v) => v.clone(),
            _ => panic!("numeric column"),
        }
    }

    #[test]
    fn first_appearance_codes() {
        let t = parse_csv("a\nx\nx\n", &Schema::default()).unwrap();
        assert_eq!(codes(&t, 0), vec![0, 0]);
        let t = parse_csv("a\nx\ny\nx\n", &Schema::default()).unwrap();
        assert_eq!(codes(&t, 0), vec![0, 1, 0]);
        assert_eq!(t.dictionaries.values[0], Some(vec!["x".into(), "y".into()]));
    }

    #[test]
    fn missing_value_takes_reserved_code() {
        let t = parse_csv("a,b\nx,1\n,2\ny,3\n", &Schema::default()).unwrap();
        assert_eq!(codes(&t, 0), vec![0, 2, 1]);
    }

    #[test]
    fn numeric_columns_and_errors() {
        let schema = Schema {
            columns: HashMap::from([("v".to_string(), ColumnType::Numeric)]),
        };
        let t = parse_csv("v,c\n1.5,a\n2,b\n", &schema).unwrap();
        assert_eq!(t.data.columns()[0], Column::Numeric(vec![1.5, 2.0]));
        let err = parse_csv("v,c\n1.5,a\nzz,b\n", &schema)
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = parse_csv("v,c\n1.5,a\n2\n", &schema)
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}

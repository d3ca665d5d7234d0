//! Tables rendered as CSV or JSON.
//!
//! Floats are written with 17 significant digits so every value read back
//! parses to the same `f64`.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
    Empty,
}

pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(v) => float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::Number(Number::from_str(&i.to_string()).expect("integer literal")),
            Cell::Float(v) if v.is_finite() => {
                Value::Number(Number::from_str(&float(*v)).expect("float literal"))
            }
            Cell::Float(_) | Cell::Empty => Value::Null,
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// `re, im, abs` of a complex value.
pub fn complex_cells(z: Complex64) -> [Cell; 3] {
    [z.re.into(), z.im.into(), z.norm().into()]
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Written as `# ...` lines ahead of a CSV header, or as `notes` in JSON.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Command name and resolved parameters, echoed in JSON output.
#[derive(Debug, Clone)]
pub struct Meta {
    pub command: &'static str,
    pub parameters: BTreeMap<String, String>,
}

impl Meta {
    pub fn new(command: &'static str) -> Self {
        Self { command, parameters: BTreeMap::new() }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), self.command.into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        let params: Map<String, Value> =
            self.parameters.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        m.insert("parameters".into(), Value::Object(params));
        Value::Object(m)
    }
}

pub fn render(table: &Table, meta: &Meta, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            for n in &table.notes {
                out.push_str("# ");
                out.push_str(n);
                out.push('\n');
            }
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    Value::Object(
                        table.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect(),
                    )
                })
                .collect();
            let mut doc = Map::new();
            doc.insert("meta".into(), meta.json());
            if !table.notes.is_empty() {
                doc.insert("notes".into(), table.notes.clone().into());
            }
            doc.insert("rows".into(), Value::Array(rows));
            let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(&["n", "re"]);
        t.push(vec![3u64.into(), 0.5.into()]);
        t.notes.push("exploratory".into());
        let meta = Meta::new("demo");
        let csv = render(&t, &meta, Format::Csv);
        assert_eq!(csv, "# exploratory\nn,re\n3,5.0000000000000000e-1\n");
        let json: Value = serde_json::from_str(&render(&t, &meta, Format::Json)).unwrap();
        assert_eq!(json["rows"][0]["n"], 3);
        assert_eq!(json["rows"][0]["re"].as_f64(), Some(0.5));
        assert_eq!(json["meta"]["command"], "demo");
    }
}

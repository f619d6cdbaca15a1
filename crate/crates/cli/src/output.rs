use dfs_kerr::loss_fidelity::format_sig;
use serde_json::{json, Map, Value};

use crate::config::Format;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => format_sig(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) => json!(x),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Rows plus the header block that makes the file self-describing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub parameters: Vec<(&'static str, String)>,
    pub notes: Vec<(&'static str, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Single-row result rendered as one JSON object.
    pub summary: bool,
}

impl Table {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    pub fn csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.parameters.iter().chain(&self.notes) {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn json(&self) -> String {
        let object = |pairs: &[(&'static str, String)]| -> Value {
            Value::Object(pairs.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
        };
        let row_object = |row: &[Cell]| -> Value {
            Value::Object(self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect::<Map<_, _>>())
        };
        let mut doc = Map::new();
        doc.insert("parameters".into(), object(&self.parameters));
        if !self.notes.is_empty() {
            doc.insert("notes".into(), object(&self.notes));
        }
        if self.summary && self.rows.len() == 1 {
            doc.insert("summary".into(), row_object(&self.rows[0]));
        } else {
            doc.insert("rows".into(), Value::Array(self.rows.iter().map(|r| row_object(r)).collect()));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values always serialize");
        s.push('\n');
        s
    }
}

//! Table emission. Numbers are written with 17 significant digits so that a
//! given configuration always produces the same bytes.

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Empty,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub cells: Vec<Cell>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

pub const FAILURE_COLUMN: &str = "failure";

pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format_number(*v),
        Cell::Empty => String::new(),
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(v) if v.is_finite() => json!(v),
        Cell::Num(v) => json!(v.to_string()),
        Cell::Empty => Value::Null,
    }
}

/// CSV with the meta envelope as leading `#` lines, one top-level key per line.
pub fn to_csv(meta: &Map<String, Value>, table: &Table) -> Result<Vec<u8>, csv::Error> {
    let mut out = Vec::new();
    for (k, v) in meta {
        out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = table.columns.clone();
    header.push(FAILURE_COLUMN.to_string());
    w.write_record(&header)?;
    for r in &table.rows {
        let mut fields: Vec<String> = r.cells.iter().map(cell_text).collect();
        fields.push(r.failure.clone().unwrap_or_default());
        w.write_record(&fields)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn to_json(meta: Map<String, Value>, table: &Table) -> Vec<u8> {
    let mut columns = table.columns.clone();
    columns.push(FAILURE_COLUMN.to_string());
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let mut cells: Vec<Value> = r.cells.iter().map(cell_json).collect();
            cells.push(r.failure.as_ref().map_or(Value::Null, |f| json!(f)));
            Value::Array(cells)
        })
        .collect();
    let doc = json!({ "meta": meta, "columns": columns, "rows": rows });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("JSON values always serialise");
    bytes.push(b'\n');
    bytes
}

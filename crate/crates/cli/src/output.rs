use std::fmt::Write as _;

use anyhow::Result;
use clap::ValueEnum;
use serde::Deserialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Markdown,
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// A command result. JSON is always available; the table and markdown forms
/// fall back to a flattened key/value listing of the JSON.
pub struct Rendered {
    pub json: Value,
    pub table: Option<Table>,
    pub markdown: Option<String>,
}

impl Rendered {
    pub fn json(json: Value) -> Self {
        Self { json, table: None, markdown: None }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn with_markdown(mut self, md: String) -> Self {
        self.markdown = Some(md);
        self
    }

    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Json => serde_json::to_string_pretty(&self.json)? + "\n",
            Format::Csv => {
                let table = self.table.clone().unwrap_or_else(|| flatten(&self.json));
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.headers)?;
                for row in &table.rows {
                    w.write_record(row)?;
                }
                String::from_utf8(w.into_inner()?)?
            }
            Format::Markdown => match &self.markdown {
                Some(md) => md.clone(),
                None => markdown(self.table.as_ref().unwrap_or(&flatten(&self.json))),
            },
        })
    }
}

pub fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn flatten_into(prefix: &str, v: &Value, table: &mut Table) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_into(&path, child, table);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, child) in items.iter().enumerate() {
                flatten_into(&format!("{prefix}[{i}]"), child, table);
            }
        }
        other => table.push(vec![prefix.to_string(), cell(other)]),
    }
}

pub fn flatten(v: &Value) -> Table {
    let mut t = Table::new(["field", "value"]);
    flatten_into("", v, &mut t);
    t
}

pub fn markdown(t: &Table) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", t.headers.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(t.headers.len()));
    for row in &t.rows {
        let escaped: Vec<String> = row.iter().map(|c| c.replace('|', "\\|")).collect();
        let _ = writeln!(s, "| {} |", escaped.join(" | "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flattening_and_formats() {
        let r = Rendered::json(json!({"a": 1, "b": {"c": [1, 2], "d": [{"e": "x|y"}]}}));
        let csv = r.render(Format::Csv).unwrap();
        assert_eq!(csv, "field,value\na,1\nb.c,\"[1,2]\"\nb.d[0].e,x|y\n");
        let md = r.render(Format::Markdown).unwrap();
        assert!(md.contains("| b.d[0].e | x\\|y |"));
        assert!(r.render(Format::Json).unwrap().ends_with("}\n"));
    }
}

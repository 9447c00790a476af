//! Result records and their CSV/JSON serialisation.
//!
//! Floats are written with 17 significant digits in both formats, so a
//! fixed seed produces byte-identical files. JSON mirrors the CSV columns
//! as object keys; non-finite floats become null there and keep their
//! textual form (`NaN`, `inf`) in CSV.

use mdinew::io::fmt_g17;

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    UInt(u64),
    Real(f64),
    Bool(bool),
    Text(String),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub columns: Vec<&'static str>,
    pub records: Vec<Vec<Field>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn csv_field(f: &Field) -> String {
    match f {
        Field::UInt(v) => v.to_string(),
        Field::Real(v) => fmt_g17(*v),
        Field::Bool(v) => v.to_string(),
        Field::Text(s) => csv_escape(s),
    }
}

fn json_field(f: &Field) -> String {
    match f {
        Field::UInt(v) => v.to_string(),
        Field::Real(v) if v.is_finite() => fmt_g17(*v),
        Field::Real(_) => "null".to_string(),
        Field::Bool(v) => v.to_string(),
        Field::Text(s) => json_escape(s),
    }
}

pub fn to_csv(out: &RunOutput) -> String {
    let mut text = out.columns.join(",");
    text.push('\n');
    for rec in &out.records {
        debug_assert_eq!(rec.len(), out.columns.len());
        let row: Vec<String> = rec.iter().map(csv_field).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

pub fn to_json(out: &RunOutput) -> String {
    let mut text = String::from("[\n");
    let rows: Vec<String> = out
        .records
        .iter()
        .map(|rec| {
            let pairs: Vec<String> = out
                .columns
                .iter()
                .zip(rec.iter())
                .map(|(c, f)| format!("{}: {}", json_escape(c), json_field(f)))
                .collect();
            format!("{{{}}}", pairs.join(", "))
        })
        .collect();
    text.push_str(&rows.join(",\n"));
    if !rows.is_empty() {
        text.push('\n');
    }
    text.push_str("]\n");
    text
}

pub fn render(out: &RunOutput, format: Format) -> String {
    match format {
        Format::Csv => to_csv(out),
        Format::Json => to_json(out),
    }
}

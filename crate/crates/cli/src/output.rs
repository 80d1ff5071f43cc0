//! Canonical JSON and CSV encoding.
//!
//! JSON objects are written with sorted keys and no whitespace; every float is
//! written with 17 significant digits (`{:.16e}`), so equal values always
//! produce equal bytes and a parse/re-encode round trip is the identity.

use serde_json::Value;
use std::fmt::Write;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v);
    out
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                out.push_str(&float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push(':');
                write_value(out, &map[k]);
            }
            out.push('}');
        }
    }
}

/// CSV table with a fixed header; cells are pre-formatted strings.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn header(&self) -> &[&'static str] {
        &self.header
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).unwrap();
        for r in &self.rows {
            w.write_record(r).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Cell helpers.
pub fn f(x: f64) -> String {
    float(x)
}

pub fn n(x: usize) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorted_and_stable() {
        let v = json!({"b": 1.5, "a": [1, -2, 0.1], "c": {"z": null, "y": "q\""}});
        let s = canonical_json(&v);
        assert_eq!(
            s,
            r#"{"a":[1,-2,1.0000000000000001e-1],"b":1.5000000000000000e0,"c":{"y":"q\"","z":null}}"#
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(canonical_json(&back), s);
    }

    #[test]
    fn csv_header_and_rows() {
        let mut t = Table::new(&["p", "x"]);
        t.push(vec![n(1), f(0.25)]);
        assert_eq!(t.to_csv(), "p,x\n1,2.5000000000000000e-1\n");
    }
}

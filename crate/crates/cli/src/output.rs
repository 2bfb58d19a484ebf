//! CSV and JSON emitters.
//!
//! CSV files are a `#` metadata line, a header, then data rows with every
//! value printed to 17 significant digits and `\n` line endings.

use std::fmt::Write as _;

use serde::Serialize;

/// Ordered `key=value` pairs echoed into the metadata line.
#[derive(Debug, Default, Clone)]
pub struct Metadata(Vec<(String, String)>);

impl Metadata {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.text("command", command);
        m
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        // `{}` prints the shortest string that parses back to the same f64.
        self.0.push((key.to_string(), format!("{value}")));
        self
    }

    pub fn int(&mut self, key: &str, value: u64) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn text(&mut self, key: &str, value: &str) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    fn line(&self) -> String {
        let fields: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# {}", fields.join(" "))
    }

    /// The same pairs as a JSON object; numbers stay numbers.
    pub fn to_json(&self) -> serde_json::Value {
        let map = self
            .0
            .iter()
            .map(|(k, v)| {
                let value = v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .and_then(|x| {
                        if v.parse::<u64>().is_ok() {
                            Some(serde_json::Value::from(v.parse::<u64>().unwrap()))
                        } else {
                            serde_json::Number::from_f64(x).map(serde_json::Value::Number)
                        }
                    })
                    .unwrap_or_else(|| serde_json::Value::String(v.clone()));
                (k.clone(), value)
            })
            .collect();
        serde_json::Value::Object(map)
    }
}

pub fn csv(meta: &Metadata, header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(&meta.line());
    out.push('\n');
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// `{"inputs": {...}, key: payload}` pretty-printed, with a trailing newline.
pub fn json<T: Serialize>(meta: &Metadata, key: &str, payload: &T) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("inputs".into(), meta.to_json());
    doc.insert(
        key.into(),
        serde_json::to_value(payload).expect("payload types serialize to JSON"),
    );
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("valid JSON");
    text.push('\n');
    text
}

//! Line-oriented report records with a fixed field order.
//!
//! Floats are written with 17 significant digits so that identical runs
//! produce identical bytes; non-finite values become the strings `"inf"`,
//! `"-inf"` and `"nan"`.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Null,
    Raw(String),
}

/// One JSON object, rendered on a single line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    fields: Vec<(&'static str, Value)>,
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".into()
    } else if x.is_infinite() {
        if x > 0.0 { "\"inf\"" } else { "\"-inf\"" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn float_array(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| format_float(x)).collect();
    format!("[{}]", items.join(","))
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn str(mut self, key: &'static str, v: impl Into<String>) -> Self {
        self.fields.push((key, Value::Str(v.into())));
        self
    }

    pub fn uint(mut self, key: &'static str, v: u64) -> Self {
        self.fields.push((key, Value::UInt(v)));
        self
    }

    pub fn float(mut self, key: &'static str, v: f64) -> Self {
        self.fields.push((key, Value::Float(v)));
        self
    }

    pub fn opt_float(mut self, key: &'static str, v: Option<f64>) -> Self {
        self.fields.push((key, v.map_or(Value::Null, Value::Float)));
        self
    }

    pub fn opt_uint(mut self, key: &'static str, v: Option<u64>) -> Self {
        self.fields.push((key, v.map_or(Value::Null, Value::UInt)));
        self
    }

    pub fn bool(mut self, key: &'static str, v: bool) -> Self {
        self.fields.push((key, Value::Bool(v)));
        self
    }

    /// Pre-rendered JSON.
    pub fn raw(mut self, key: &'static str, json: String) -> Self {
        self.fields.push((key, Value::Raw(json)));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::from("{");
        for (k, (key, value)) in self.fields.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&quote(key));
            out.push(':');
            match value {
                Value::Str(s) => out.push_str(&quote(s)),
                Value::UInt(n) => write!(out, "{n}").unwrap(),
                Value::Float(x) => out.push_str(&format_float(*x)),
                Value::Bool(b) => write!(out, "{b}").unwrap(),
                Value::Null => out.push_str("null"),
                Value::Raw(r) => out.push_str(r),
            }
        }
        out.push('}');
        out
    }
}

/// `{"label": count, ...}` in the given order.
pub fn count_object<'a>(entries: impl IntoIterator<Item = (&'a str, u64)>) -> String {
    let items: Vec<String> = entries
        .into_iter()
        .map(|(k, v)| format!("{}:{v}", quote(k)))
        .collect();
    format!("{{{}}}", items.join(","))
}

//! Minimal ordered key-value summary with JSON and plain-text rendering.
//! Values are numbers or plain strings; keys are fixed identifiers, so the
//! only escaping needed is for string values.

pub struct JsonMap {
    command: String,
    entries: Vec<(String, Value)>,
}

enum Value {
    Number(f64),
    Integer(usize),
    Text(String),
}

impl JsonMap {
    pub fn new(command: &str) -> Self {
        JsonMap {
            command: command.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: &str, value: &str) {
        self.entries
            .push((key.to_string(), Value::Text(value.to_string())));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.entries.push((key.to_string(), Value::Number(value)));
    }

    pub fn push_usize(&mut self, key: &str, value: usize) {
        self.entries.push((key.to_string(), Value::Integer(value)));
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{");
        out.push_str(&format!("\"command\":\"{}\"", escape(&self.command)));
        for (key, value) in &self.entries {
            out.push(',');
            out.push_str(&format!("\"{}\":", escape(key)));
            match value {
                Value::Number(n) if n.is_finite() => out.push_str(&format!("{n}")),
                Value::Number(n) => out.push_str(&format!("\"{n}\"")),
                Value::Integer(n) => out.push_str(&format!("{n}")),
                Value::Text(s) => out.push_str(&format!("\"{}\"", escape(s))),
            }
        }
        out.push('}');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("[{}]\n", self.command);
        for (key, value) in &self.entries {
            match value {
                Value::Number(n) => out.push_str(&format!("{key} = {n}\n")),
                Value::Integer(n) => out.push_str(&format!("{key} = {n}\n")),
                Value::Text(s) => out.push_str(&format!("{key} = {s}\n")),
            }
        }
        out
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

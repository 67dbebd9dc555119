//! Progress and error lines on stderr. Every record is a single line.

use magcav_core::Error;
use serde_json::{json, Value};

pub struct Log {
    quiet: bool,
    json: bool,
}

impl Log {
    pub fn new(quiet: bool, json: bool) -> Self {
        Self { quiet, json }
    }

    pub fn info(&self, event: &str, fields: Value) {
        if self.quiet {
            return;
        }
        if self.json {
            eprintln!("{}", json!({"event": event, "data": fields}));
        } else {
            eprintln!("{event}: {}", flatten(&fields));
        }
    }

    /// Never suppressed by `--quiet`.
    pub fn error(&self, e: &Error, code: u8) {
        let message = e.to_string().replace('\n', " ");
        if self.json {
            eprintln!("{}", json!({"error": e.kind(), "exit": code, "message": message}));
        } else {
            eprintln!("error kind={} exit={code} message={message:?}", e.kind());
        }
    }
}

fn flatten(v: &Value) -> String {
    match v {
        Value::Object(m) => m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

//! Command reports: one JSON object per line for machines, indented text for people.

use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Value,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Value => "value",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub verdict: Verdict,
    /// Command-specific results. Keys are kept sorted.
    pub result: Map<String, Value>,
    pub witnesses: Vec<Value>,
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn new(command: &str, verdict: Verdict) -> Self {
        Report {
            command: command.to_string(),
            verdict,
            result: Map::new(),
            witnesses: Vec::new(),
            timing_ms: None,
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.result.insert(key.to_string(), value.into());
        self
    }

    pub fn witness(mut self, w: Value) -> Self {
        self.witnesses.push(w);
        self
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Pass | Verdict::Value => 0,
            Verdict::Fail => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut out = Map::new();
        out.insert("command".into(), self.command.clone().into());
        out.insert("verdict".into(), self.verdict.as_str().into());
        out.insert("result".into(), Value::Object(self.result.clone()));
        out.insert("witnesses".into(), Value::Array(self.witnesses.clone()));
        if let Some(ms) = self.timing_ms {
            out.insert("timing_ms".into(), (ms as u64).into());
        }
        Value::Object(out)
    }

    /// A single line of JSON with sorted keys, newline-terminated.
    pub fn machine(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("JSON values serialize") + "\n"
    }

    pub fn human(&self) -> String {
        let mut out = format!("{}: {}\n", self.command, self.verdict.as_str());
        for (k, v) in &self.result {
            render(&mut out, 1, k, v);
        }
        for (i, w) in self.witnesses.iter().enumerate() {
            render(&mut out, 1, &format!("witness {}", i + 1), w);
        }
        if let Some(ms) = self.timing_ms {
            out.push_str(&format!("  time: {ms} ms\n"));
        }
        out
    }
}

fn inline(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|i| !i.is_object()) => {
            let parts: Option<Vec<String>> = items
                .iter()
                .map(|i| {
                    if i.is_array() {
                        inline(i).filter(|s| !s.contains('\n'))
                    } else {
                        inline(i)
                    }
                })
                .collect();
            parts.map(|p| format!("[{}]", p.join(", ")))
        }
        Value::Object(_) => None,
        Value::Array(_) => None,
        other => Some(other.to_string()),
    }
}

fn render(out: &mut String, depth: usize, key: &str, v: &Value) {
    let pad = "  ".repeat(depth);
    if let Some(text) = inline(v) {
        out.push_str(&format!("{pad}{key}: {text}\n"));
        return;
    }
    out.push_str(&format!("{pad}{key}:\n"));
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                render(out, depth + 1, k, x);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                render(out, depth + 1, &format!("[{}]", i + 1), x);
            }
        }
        _ => unreachable!("scalars render inline"),
    }
}

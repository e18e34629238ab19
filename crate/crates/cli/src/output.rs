use serde_json::{Map, Value};
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

/// Provenance embedded in every output file.
pub struct RunManifest {
    pub command: &'static str,
    pub parameters: Vec<(&'static str, String)>,
    pub seed: u64,
    pub wall_time_s: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &'static str, seed: u64) -> Self {
        RunManifest {
            command,
            parameters: Vec::new(),
            seed,
            wall_time_s: None,
        }
    }

    pub fn param(mut self, key: &'static str, value: impl ToString) -> Self {
        self.parameters.push((key, value.to_string()));
        self
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("command: {}", self.command),
            format!("tool_version: {}", env!("CARGO_PKG_VERSION")),
            format!("seed: {}", self.seed),
        ];
        lines.extend(self.parameters.iter().map(|(k, v)| format!("{k}: {v}")));
        if let Some(t) = self.wall_time_s {
            lines.push(format!("wall_time_s: {t:.3}"));
        }
        lines
    }

    /// Top-level keys plus one `parameters` object.
    pub fn to_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("command".into(), self.command.into());
        m.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
        m.insert("seed".into(), self.seed.into());
        let params: Map<String, Value> = self
            .parameters
            .iter()
            .map(|(k, v)| (k.to_string(), Value::String(v.clone())))
            .collect();
        m.insert("parameters".into(), params.into());
        if let Some(t) = self.wall_time_s {
            m.insert("wall_time_s".into(), t.into());
        }
        m
    }
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn open(path: &Path) -> io::Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        Ok(Box::new(File::create(path)?))
    }
}

pub fn write_csv(path: &Path, manifest: &RunManifest, columns: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut out = open(path)?;
    for line in manifest.header_lines() {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

/// Manifest keys and `fields` share the top level.
pub fn write_json(path: &Path, manifest: &RunManifest, fields: Map<String, Value>) -> io::Result<()> {
    let mut obj = manifest.to_json();
    obj.extend(fields);
    let mut out = open(path)?;
    serde_json::to_writer_pretty(&mut out, &Value::Object(obj))?;
    writeln!(out)
}

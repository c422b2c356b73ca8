//! CSV and JSON writers. Every file carries the tool version and the config
//! hash; floats are written in shortest round-trip form.

use serde_json::{json, Map, Value};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Artifacts {
    dir: PathBuf,
    config_hash: String,
    seed: Option<u64>,
    written: Vec<PathBuf>,
}

pub enum Cell {
    Num(f64),
    Int(usize),
    Text(&'static str),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

impl Artifacts {
    pub fn new(dir: &Path, config_hash: &str, seed: Option<u64>) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            config_hash: config_hash.to_string(),
            seed,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn meta(&self, command: &str) -> Value {
        let mut m = Map::new();
        m.insert("tool".into(), json!(TOOL));
        m.insert("version".into(), json!(VERSION));
        m.insert("config_sha256".into(), json!(self.config_hash));
        m.insert("command".into(), json!(command));
        if let Some(seed) = self.seed {
            m.insert("seed".into(), json!(seed));
        }
        Value::Object(m)
    }

    pub fn csv(
        &mut self,
        name: &str,
        command: &str,
        notes: &[String],
        columns: &[&str],
        rows: impl IntoIterator<Item = Vec<Cell>>,
    ) -> io::Result<()> {
        let mut out = String::new();
        writeln!(out, "# tool: {TOOL} {VERSION}").unwrap();
        writeln!(out, "# config_sha256: {}", self.config_hash).unwrap();
        writeln!(out, "# command: {command}").unwrap();
        if let Some(seed) = self.seed {
            writeln!(out, "# seed: {seed}").unwrap();
        }
        for n in notes {
            writeln!(out, "# {n}").unwrap();
        }
        writeln!(out, "{}", columns.join(",")).unwrap();
        for row in rows {
            let cells: Vec<String> = row
                .into_iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_f64(x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s.to_string(),
                })
                .collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        self.write(name, out)
    }

    pub fn json(&mut self, name: &str, command: &str, body: Value) -> io::Result<()> {
        let mut obj = match body {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        obj.insert("meta".into(), self.meta(command));
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json renders");
        text.push('\n');
        self.write(name, text)
    }

    fn write(&mut self, name: &str, content: String) -> io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content)?;
        self.written.push(path);
        Ok(())
    }
}

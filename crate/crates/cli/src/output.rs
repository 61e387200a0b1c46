//! Deterministic CSV/JSON writers and the per-run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::SimulationConfig;
use crate::error::CliError;

pub const CLI_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Identity of a run, embedded in every file it writes.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_sha256: String,
    pub conventions: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(cfg: &SimulationConfig) -> Self {
        let c = &cfg.conventions;
        let policy = serde_json::to_value(c.epsilon_policy).unwrap();
        Self {
            config_sha256: sha256_hex(cfg.to_toml().as_bytes()),
            conventions: vec![
                ("fourier".into(), "forward exp(-i x.xi), inverse (2 pi)^-3".into()),
                ("fgr_pi".into(), c.fgr_pi.to_string()),
                ("epsilon_policy".into(), policy.as_str().unwrap().to_string()),
                ("lamb_eps".into(), fmt_f64(c.lamb_eps)),
                ("fgr_eps".into(), fmt_f64(c.fgr_eps)),
                ("drop_direct_secular".into(), c.drop_direct_secular.to_string()),
            ],
        }
    }

    pub fn to_json(&self) -> Value {
        let conv: Map<String, Value> = self.conventions.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({
            "config_sha256": self.config_sha256,
            "versions": { "cascade-core": cascade_core::VERSION, "cascade-cli": CLI_VERSION },
            "conventions": conv,
        })
    }

    fn csv_header(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# config_sha256: {}", self.config_sha256).unwrap();
        writeln!(s, "# versions: cascade-core {}, cascade-cli {}", cascade_core::VERSION, CLI_VERSION).unwrap();
        let conv: Vec<String> = self.conventions.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(s, "# conventions: {}", conv.join("; ")).unwrap();
        s
    }
}

/// CSV text with `#` comment lines, a header row and LF line endings.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(prov: &Provenance, meta: &[(&str, String)], columns: &[String]) -> Self {
        let mut text = prov.csv_header();
        for (k, v) in meta {
            writeln!(text, "# {k}: {v}").unwrap();
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn row_f64(&mut self, cells: &[f64]) {
        let cells: Vec<String> = cells.iter().map(|x| fmt_f64(*x)).collect();
        self.row(&cells);
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Pretty JSON with sorted keys and floats in the fixed format. Non-finite
/// floats become `null`.
pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap();
                if x.is_finite() {
                    out.push_str(&fmt_f64(x));
                } else {
                    out.push_str("null");
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, depth);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_value(out, &map[k.as_str()], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

/// Output directory of one command; remembers what it wrote for the manifest.
pub struct RunDir {
    path: PathBuf,
    files: Vec<(String, String)>,
}

impl RunDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        Ok(Self { path: path.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let p = self.path.join(name);
        fs::write(&p, content).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
        self.files.push((name.to_string(), sha256_hex(content.as_bytes())));
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        self.write(name, &to_json_string(v))
    }

    /// `manifest.json`: command, status, the full resolved configuration,
    /// provenance, file digests and any command-specific entries.
    pub fn finish(
        self,
        command: &str,
        status: &str,
        cfg: &SimulationConfig,
        prov: &Provenance,
        extra: Map<String, Value>,
    ) -> Result<(), CliError> {
        let files: Map<String, Value> = self.files.iter().map(|(n, h)| (n.clone(), json!(h))).collect();
        let mut m = Map::new();
        m.insert("command".into(), json!(command));
        m.insert("status".into(), json!(status));
        m.insert("config".into(), serde_json::to_value(cfg).unwrap());
        m.insert("provenance".into(), prov.to_json());
        m.insert("files".into(), Value::Object(files));
        m.extend(extra);
        let mut dir = self;
        dir.write_json("manifest.json", &Value::Object(m))
    }
}

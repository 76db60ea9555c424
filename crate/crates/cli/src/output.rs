//! Output plumbing: gnuplot-ready CSV with an embedded convention comment,
//! JSON sidecars, and atomic write-temp-then-rename file creation.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::Failure;

/// The normalization conventions every reported constant depends on.
pub fn convention_value() -> Value {
    let mut map = Map::new();
    for (k, v) in torusns::convention() {
        map.insert(k.to_string(), Value::String(v.to_string()));
    }
    Value::Object(map)
}

pub struct OutDir {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::config(&format!("--out {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write_atomic(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!("{name}.tmp"));
        fs::write(&tmp, bytes)
            .map_err(|e| Failure::io(&format!("writing {}: {e}", tmp.display())))?;
        fs::rename(&tmp, &path)
            .map_err(|e| Failure::io(&format!("renaming to {}: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV layout: `# convention: {...}` comment, one header line, rows.
    pub fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf, Failure> {
        let mut text = format!("# convention: {}\n{header}\n", convention_value());
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        self.write_atomic(name, text.as_bytes())
    }

    /// JSON sidecar with the convention block attached under "convention".
    pub fn json(&mut self, name: &str, mut body: Value) -> Result<PathBuf, Failure> {
        if let Value::Object(map) = &mut body {
            map.insert("convention".into(), convention_value());
        } else {
            body = json!({ "value": body, "convention": convention_value() });
        }
        let mut text = serde_json::to_string_pretty(&body)
            .map_err(|e| Failure::io(&format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write_atomic(name, text.as_bytes())
    }

    pub fn bin(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        self.write_atomic(name, bytes)
    }
}

//! Output directory writer. Every file carries the run manifest: a `#`
//! line for text tables, a `manifest` key for JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;

pub struct OutputDir {
    root: PathBuf,
    manifest_line: String,
    manifest_json: serde_json::Value,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(cfg: &RunConfig) -> std::io::Result<Self> {
        fs::create_dir_all(&cfg.output)?;
        let out = Self {
            root: cfg.output.clone(),
            manifest_line: cfg.manifest(),
            manifest_json: json!({
                "version": env!("CARGO_PKG_VERSION"),
                "command": cfg.command,
                "config_sha256": cfg.hash(),
                "seed_base": cfg.seed_base,
            }),
            written: Vec::new(),
        };
        Ok(out)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, rel: &str, body: String) -> std::io::Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    pub fn config(&mut self, cfg: &RunConfig) -> std::io::Result<()> {
        let body = format!("# {}\n{}", self.manifest_line, cfg.to_toml());
        self.put("run_config.toml", body)
    }

    /// `body` should already contain its header row.
    pub fn csv(&mut self, rel: &str, body: &str) -> std::io::Result<()> {
        let body = format!("# {}\n{body}", self.manifest_line);
        self.put(rel, body)
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, data: &T) -> std::io::Result<()> {
        let doc = json!({ "manifest": self.manifest_json, "data": data });
        let body = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)? + "\n";
        self.put(rel, body)
    }

    /// Whitespace-delimited table for gnuplot and friends.
    pub fn dat(&mut self, rel: &str, columns: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut body = format!("# {}\n# {}\n", self.manifest_line, columns.join(" "));
        for r in rows {
            body.push_str(&r.join(" "));
            body.push('\n');
        }
        self.put(rel, body)
    }
}

/// Empty cells become `nan` so column counts stay fixed.
pub fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| x.to_string())
}

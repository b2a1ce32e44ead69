//! CSV and JSON writers plus the metadata sidecar attached to every output.

use crate::error::Result;
use crate::harness::config::{RunConfig, Tolerances};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Shortest round-trip representation; scientific outside `[1e-4, 1e15)`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 64);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_number(*v));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub file: String,
    pub command: &'a str,
    pub config_hash: &'a str,
    pub version: &'static str,
    pub tolerances: Tolerances,
    pub profile_kind: &'a str,
    pub grid_half_width: f64,
    pub grid_nodes: usize,
    pub parameters: serde_json::Value,
}

/// Collects written files and attaches `<name>.meta.json` to each.
pub struct OutputSet<'a> {
    pub dir: PathBuf,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub files: Vec<PathBuf>,
}

impl<'a> OutputSet<'a> {
    pub fn new(dir: &Path, command: &'static str, config: &'a RunConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            config,
            files: Vec::new(),
        })
    }

    fn register(&mut self, name: &str, parameters: serde_json::Value) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let meta = Metadata {
            file: name.to_string(),
            command: self.command,
            config_hash: &self.config.hash,
            version: env!("CARGO_PKG_VERSION"),
            tolerances: self.config.tol,
            profile_kind: &self.config.profile_kind,
            grid_half_width: self.config.profile.half_width,
            grid_nodes: self.config.profile.node_count,
            parameters,
        };
        let meta_path = self.dir.join(format!("{name}.meta.json"));
        write_json(&meta_path, &meta)?;
        self.files.push(path.clone());
        self.files.push(meta_path);
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: &[Vec<f64>], parameters: serde_json::Value) -> Result<()> {
        let path = self.register(name, parameters)?;
        write_csv(&path, header, rows)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T, parameters: serde_json::Value) -> Result<()> {
        let path = self.register(name, parameters)?;
        write_json(&path, value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.5, -7.9921875, 1e-17, 123456.789, 3.0e20, -2.5e-9] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_number(f64::NAN), "nan");
        assert_eq!(format_number(0.25), "0.25");
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

/// Builds output paths `<prefix>_<name>` and writes them atomically.
#[derive(Debug, Clone)]
pub struct Sink {
    prefix: PathBuf,
    written: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct DensityRow {
    pub x: f64,
    pub p: f64,
}

impl Sink {
    pub fn new(prefix: impl Into<PathBuf>) -> Self {
        Self { prefix: prefix.into(), written: Vec::new() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        let mut s = self.prefix.clone().into_os_string();
        s.push("_");
        s.push(name);
        PathBuf::from(s)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write_atomic(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.path(name);
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir)?;
        let mut tmp = NamedTempFile::new_in(&dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        log::debug!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(std::io::Error::other)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.write_atomic(&format!("{name}.csv"), &bytes)
    }

    pub fn density(&mut self, name: &str, x: &[f64], p: &[f64]) -> std::io::Result<()> {
        let rows: Vec<DensityRow> = x.iter().zip(p).map(|(&x, &p)| DensityRow { x, p }).collect();
        self.csv(name, &rows)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        self.write_atomic(&format!("{name}.json"), &bytes)
    }
}

/// Default prefix: the config file stem, in the working directory.
pub fn default_prefix(config: &Path) -> PathBuf {
    PathBuf::from(config.file_stem().unwrap_or_default())
}

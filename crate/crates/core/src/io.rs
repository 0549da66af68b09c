//! CSV and text artifacts.
//!
//! Every CSV starts with `# memosc config_hash=<hex> seed=<n>`, then optional
//! `# key=value` lines, then the column header. Floats use Rust's shortest
//! round-trip formatting, so parsing a file gives back the exact values.

use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Provenance written at the top of every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    pub fn line(&self) -> String {
        format!("memosc config_hash={} seed={}", self.config_hash, self.seed)
    }
}

/// In-memory CSV document.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(stamp: &Stamp) -> Self {
        Self { text: format!("# {}\n", stamp.line()), columns: 0 }
    }

    /// Metadata line; must come before [`Csv::columns`].
    pub fn meta(mut self, key: &str, value: impl Display) -> Self {
        debug_assert_eq!(self.columns, 0, "metadata after the header");
        let _ = writeln!(self.text, "# {key}={value}");
        self
    }

    pub fn columns<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        let names: Vec<&str> = names.iter().map(AsRef::as_ref).collect();
        self.columns = names.len();
        let _ = writeln!(self.text, "{}", names.join(","));
        self
    }

    pub fn row<T: Display>(&mut self, values: &[T]) {
        debug_assert_eq!(values.len(), self.columns);
        let mut first = true;
        for v in values {
            if !first {
                self.text.push(',');
            }
            first = false;
            let _ = write!(self.text, "{v}");
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.text)?;
        Ok(())
    }
}

/// Parsed numeric CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                for kv in c.split_whitespace() {
                    if let Some((k, v)) = kv.split_once('=') {
                        meta.insert(k.to_string(), v.to_string());
                    }
                }
            } else if columns.is_empty() {
                columns = line.split(',').map(|s| s.trim().to_string()).collect();
            } else {
                let row = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .map_err(|e| Error::InvalidParams(format!("line {}: {e}", ln + 1)))?;
                if row.len() != columns.len() {
                    return Err(Error::BadDimensions(format!("line {}: {} fields, header has {}", ln + 1, row.len(), columns.len())));
                }
                rows.push(row);
            }
        }
        Ok(Self { meta, columns, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta.get(key)?.parse().ok()
    }
}

/// Output directory of one command.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub stamp: Stamp,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path, stamp: Stamp) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), stamp, written: Vec::new() })
    }

    pub fn csv(&self) -> Csv {
        Csv::new(&self.stamp)
    }

    pub fn save_csv(&mut self, name: &str, csv: &Csv) -> Result<PathBuf> {
        let p = self.dir.join(name);
        csv.write(&p)?;
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn save_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        fs::write(&p, text)?;
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

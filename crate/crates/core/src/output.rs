//! CSV and JSON emission with fixed formatting, so identical inputs give
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;
const SIG_DIGITS: usize = 12;

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed,
/// scientific notation outside [1e-4, 1e12).
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
        let (mantissa, e) = sci.split_once('e').unwrap();
        format!("{}e{}", trim_zeros(mantissa.to_string()), e)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A table with `#`-prefixed metadata lines, a header row, and numeric rows.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub metadata: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            metadata: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Embeds a serializable value (typically the resolved config) as one
    /// compact JSON metadata line.
    pub fn with_config<T: Serialize>(mut self, config: &T) -> Result<Self> {
        self.metadata.push(format!("config: {}", serde_json::to_string(config)?));
        Ok(self)
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.metadata.push(line.into());
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.metadata {
            for line in m.lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_g(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.render().as_bytes())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Parses a table written by [`CsvTable::render`].
pub fn parse_csv(text: &str) -> Option<CsvTable> {
    let mut table = CsvTable::default();
    for line in text.lines() {
        if let Some(meta) = line.strip_prefix('#') {
            table.metadata.push(meta.trim_start().to_string());
        } else if table.header.is_empty() {
            table.header = line.split(',').map(str::to_string).collect();
        } else if !line.is_empty() {
            let row = line.split(',').map(|c| c.parse().ok()).collect::<Option<Vec<f64>>>()?;
            table.rows.push(row);
        }
    }
    Some(table)
}

/// Pretty JSON with a top-level `"schema"` field.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("schema".into(), SCHEMA_VERSION.into());
    }
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

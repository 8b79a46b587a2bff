//! CSV and key-value text output with atomic writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliResult;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = PathBuf::from(path);
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    tmp.set_file_name(name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A CSV document with a `# key: value` preamble.
pub struct CsvDoc {
    meta: Vec<(String, String)>,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(header: &[String]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { meta: vec![], writer }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn row(&mut self, fields: &[String]) {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        let mut out = Vec::new();
        for (k, v) in &self.meta {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        out.extend(self.writer.into_inner().expect("in-memory flush"));
        out
    }

    pub fn write(self, path: &Path) -> CliResult<()> {
        write_atomic(path, &self.into_bytes())
    }
}

/// `key: value` lines.
#[derive(Default)]
pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn kv(&mut self, key: &str, value: impl ToString) {
        self.lines.push(format!("{key}: {}", value.to_string()));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.kv(key, fmt_f64(value));
    }

    pub fn blank(&mut self) {
        self.lines.push(String::new());
    }

    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, self.text().as_bytes())
    }
}

/// Column names `prefix0 .. prefix{k-1}`.
pub fn columns(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

pub fn nums<'a>(xs: impl IntoIterator<Item = &'a f64>) -> Vec<String> {
    xs.into_iter().map(|x| fmt_f64(*x)).collect()
}

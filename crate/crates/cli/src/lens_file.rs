//! Persisted lens tables: a CSV of lens rows under a metadata preamble.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DVector;
use wonglens::dynamics::{LensDatum, PhasePoint};

use crate::error::{CliError, CliResult};
use crate::output::{columns, fmt_f64, nums, CsvDoc};

pub const LENS_SCHEMA_VERSION: u32 = 1;
pub const FORMAT: &str = "wonglens-lens-table";

#[derive(Clone, Debug, PartialEq)]
pub struct LensTableFile {
    pub config_hash: String,
    pub data_hash: String,
    pub n: usize,
    pub d: usize,
    /// `(entry index, datum)`; trapped rows are kept and flagged.
    pub rows: Vec<(usize, LensDatum)>,
}

fn header(n: usize, d: usize) -> Vec<String> {
    let mut h = vec!["index".to_string()];
    for side in ["", "exit_"] {
        h.extend(columns(&format!("{side}z"), n));
        h.extend(columns(&format!("{side}v"), n));
        h.extend(columns(&format!("{side}xi"), d));
    }
    h.push("travel_time".into());
    h.push("trapped".into());
    h
}

impl LensTableFile {
    pub fn to_doc(&self) -> CsvDoc {
        let mut doc = CsvDoc::new(&header(self.n, self.d));
        doc.meta("format", FORMAT);
        doc.meta("schema_version", LENS_SCHEMA_VERSION);
        doc.meta("config_hash", &self.config_hash);
        doc.meta("data_hash", &self.data_hash);
        doc.meta("n", self.n);
        doc.meta("d", self.d);
        doc.meta("rows", self.rows.len());
        for (idx, r) in &self.rows {
            let mut f = vec![idx.to_string()];
            f.extend(nums(r.entry.pack().iter()));
            f.extend(nums(r.exit.pack().iter()));
            f.push(fmt_f64(r.travel_time));
            f.push((r.trapped as u8).to_string());
            doc.row(&f);
        }
        doc
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        self.to_doc().write(path)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let bad = |m: String| CliError::Config(format!("lens table: {m}"));
        let mut meta = BTreeMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line[1..].split_once(':') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let get = |k: &str| meta.get(k).cloned().ok_or_else(|| bad(format!("missing `{k}` in header")));
        let num = |k: &str| -> CliResult<usize> { get(k)?.parse().map_err(|_| bad(format!("`{k}` is not an integer"))) };
        if get("format")? != FORMAT {
            return Err(bad("not a lens table".into()));
        }
        if num("schema_version")? != LENS_SCHEMA_VERSION as usize {
            return Err(bad("unsupported schema version".into()));
        }
        let (n, d, expected) = (num("n")?, num("d")?, num("rows")?);
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let cols = header(n, d);
        let found: Vec<String> = reader.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
        if found != cols {
            return Err(bad("column schema does not match n and d".into()));
        }
        let m = 2 * n + d;
        let mut rows = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let field = |i: usize| -> CliResult<f64> {
                rec[i].parse().map_err(|_| bad(format!("row {line}: bad number `{}`", &rec[i])))
            };
            let idx: usize = rec[0].parse().map_err(|_| bad(format!("row {line}: bad index")))?;
            let vals = (1..=2 * m + 1).map(field).collect::<CliResult<Vec<f64>>>()?;
            let trapped = match &rec[2 * m + 2] {
                "0" => false,
                "1" => true,
                other => return Err(bad(format!("row {line}: bad trapped flag `{other}`"))),
            };
            let point = |s: &[f64]| PhasePoint {
                z: DVector::from_column_slice(&s[..n]),
                v: DVector::from_column_slice(&s[n..2 * n]),
                xi: DVector::from_column_slice(&s[2 * n..]),
            };
            rows.push((
                idx,
                LensDatum {
                    entry: point(&vals[..m]),
                    exit: point(&vals[m..2 * m]),
                    travel_time: vals[2 * m],
                    trapped,
                },
            ));
        }
        if rows.len() != expected {
            return Err(bad(format!("header announces {expected} rows, found {}", rows.len())));
        }
        Ok(Self {
            config_hash: get("config_hash")?,
            data_hash: get("data_hash")?,
            n,
            d,
            rows,
        })
    }
}

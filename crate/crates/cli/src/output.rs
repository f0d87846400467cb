//! Deterministic CSV/JSON report assembly.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::plot::{emit_plot, Plot};
use crate::CliError;

/// 17 significant digits; non-finite values spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Files produced by one analysis, written together at the end.
#[derive(Debug, Default)]
pub struct Report {
    texts: Vec<(String, String)>,
    plots: Vec<(String, Plot)>,
}

impl Report {
    pub fn csv(&mut self, name: &str, table: &Table) {
        self.texts.push((name.into(), table.render()));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        self.texts.push((name.into(), text + "\n"));
        Ok(())
    }

    pub fn plot(&mut self, name: &str, plot: Plot) {
        self.plots.push((name.into(), plot));
    }

    pub fn write(&self, dir: &Path, plots: bool) -> Result<Vec<PathBuf>, CliError> {
        if self.texts.is_empty() {
            return Ok(Vec::new());
        }
        std::fs::create_dir_all(dir)?;
        // A record from an earlier failed run would contradict these reports.
        match std::fs::remove_file(dir.join("error.json")) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
            _ => {}
        }
        let mut written = Vec::new();
        for (name, text) in &self.texts {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
        }
        if plots {
            for (name, plot) in &self.plots {
                let path = dir.join(name);
                emit_plot(plot, &path)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use b2bounds::qary::round_up;
use serde_json::{json, Value};

use crate::args::Format;

/// Everything a command produces, in all three renderings.
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub text: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub results: Vec<Value>,
    /// Some check failed; the process exits with status 1.
    pub failed: bool,
}

impl Report {
    pub fn new(command: &'static str, config: Value) -> Self {
        Report {
            command,
            config,
            text: String::new(),
            header: Vec::new(),
            rows: Vec::new(),
            results: Vec::new(),
            failed: false,
        }
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Text => Ok(self.text.clone().into_bytes()),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row)?;
                }
                Ok(w.into_inner()?)
            }
            Format::Json => {
                let doc = json!({
                    "schema_version": 1,
                    "command": self.command,
                    "config": self.config,
                    "results": self.results,
                });
                let mut out = serde_json::to_vec_pretty(&doc)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }

    pub fn emit(&self, format: Format, output: Option<&Path>) -> Result<()> {
        let bytes = self.render(format)?;
        match output {
            Some(path) => std::fs::write(path, &bytes).with_context(|| format!("writing {}", path.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(&bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

/// Text-mode number: rounded up at five decimals.
pub fn up5(x: f64) -> String {
    let r = round_up(x, 5);
    // ceil of a tiny negative number is -0
    format!("{:.5}", if r == 0.0 { 0.0 } else { r })
}

/// Full-precision CSV field.
pub fn full(x: f64) -> String {
    format!("{x}")
}

pub fn opt_full(x: Option<f64>) -> String {
    x.map(full).unwrap_or_default()
}

//! Deterministic run outputs: trace emission in either offset unit, tabular
//! data files, and the run manifest with content hashes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sqfluor::io::{sha256_hex_file, write_trace};
use sqfluor::trace::{OffsetUnit, SpectrumTrace};

use crate::commands::RunError;

pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(root)
            .map_err(|e| RunError::Config(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), RunError> {
        std::fs::write(self.path(name), text)
            .map_err(|e| RunError::Validation(format!("cannot write {name}: {e}")))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_trace_file(
        &mut self,
        name: &str,
        trace: &SpectrumTrace,
        unit: OffsetUnit,
    ) -> Result<(), RunError> {
        let converted = convert_units(trace, unit)?;
        write_trace(&converted, &self.path(name))
            .map_err(|e| RunError::Validation(format!("cannot write {name}: {e}")))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Write the manifest last: command echo, constants, and a content hash
    /// per emitted file, sorted for byte-stable output.
    pub fn finish(mut self, header: &[(String, String)]) -> Result<(), RunError> {
        let mut text = String::from("# run-manifest v1\n");
        for (key, value) in header {
            writeln!(text, "{key} = {value}").expect("string write");
        }
        self.files.sort();
        for name in &self.files {
            let hash = sha256_hex_file(&self.path(name))
                .map_err(|e| RunError::Validation(format!("cannot hash {name}: {e}")))?;
            writeln!(text, "file = {name} sha256={hash}").expect("string write");
        }
        std::fs::write(self.path("manifest.txt"), text)
            .map_err(|e| RunError::Validation(format!("cannot write manifest: {e}")))?;
        Ok(())
    }
}

/// Convert trace offsets between γ units and hertz using the recorded
/// linewidth; values are left untouched.
pub fn convert_units(trace: &SpectrumTrace, unit: OffsetUnit) -> Result<SpectrumTrace, RunError> {
    if trace.metadata.unit == unit {
        return Ok(trace.clone());
    }
    let gamma_hz = trace
        .metadata
        .gamma_hz
        .ok_or_else(|| RunError::Config("unit conversion needs gamma_hz metadata".to_string()))?;
    let factor = match unit {
        OffsetUnit::Hertz => gamma_hz,
        OffsetUnit::Gamma => 1.0 / gamma_hz,
    };
    let offsets: Vec<f64> = trace.offsets().iter().map(|w| w * factor).collect();
    let mut metadata = trace.metadata.clone();
    metadata.unit = unit;
    SpectrumTrace::new(offsets, trace.values().to_vec(), metadata)
        .map_err(|e| RunError::Validation(format!("unit conversion failed: {e}")))
}

/// Render a table as tab-separated text with 17-digit floats and a
/// comment header naming the columns.
pub fn table(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut text = String::from("# ");
    text.push_str(&columns.join("\t"));
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        text.push_str(&cells.join("\t"));
        text.push('\n');
    }
    text
}

//! Bit-stable text serialization of traces, job configurations, and fit
//! reports. Files are canonical: identical inputs yield byte-identical
//! output, floats are printed with 17 significant digits so they round-trip
//! exactly, and header keys appear in a fixed order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fitting::FitResult;
use crate::trace::{OffsetUnit, SpectrumTrace, TraceError, TraceMetadata};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid job config {path}: {reasons:?}")]
    Schema { path: String, reasons: Vec<String> },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> FormatError {
    FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// 17 significant digits: enough for any f64 to survive the round trip
/// bit-exactly, and deterministic across platforms.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

const TRACE_MAGIC: &str = "# trace-format v1";

/// Serialize a trace as a comment-prefixed `key = value` header followed by
/// two numeric columns, one record per line. Header keys are emitted in a
/// fixed order so identical traces yield identical bytes.
pub fn trace_to_string(trace: &SpectrumTrace) -> String {
    let md = &trace.metadata;
    let mut out = String::new();
    out.push_str(TRACE_MAGIC);
    out.push('\n');
    let mut write_key = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            writeln!(out, "# {key} = {v}").expect("string write");
        }
    };
    write_key("units", Some(md.unit.tag().to_string()));
    write_key("gamma_hz", md.gamma_hz.map(fmt_float));
    write_key("eta_c", md.eta_c.map(fmt_float));
    write_key("gain_db", md.gain_db.map(fmt_float));
    write_key("phi_rad", md.phi_rad.map(fmt_float));
    write_key("rabi_hz", md.rabi_hz.map(fmt_float));
    write_key("seed", md.seed.map(|s| s.to_string()));
    write_key("normalization", md.normalization.clone());
    if !md.mask.is_empty() {
        let joined: Vec<String> = md.mask.iter().map(|i| i.to_string()).collect();
        write_key("mask", Some(joined.join(",")));
    }
    for (w, v) in trace.offsets().iter().zip(trace.values()) {
        out.push_str(&fmt_float(*w));
        out.push(' ');
        out.push_str(&fmt_float(*v));
        out.push('\n');
    }
    out
}

pub fn write_trace(trace: &SpectrumTrace, path: &Path) -> Result<(), FormatError> {
    std::fs::write(path, trace_to_string(trace)).map_err(|e| io_err(path, e))
}

pub fn trace_from_string(text: &str, path: &str) -> Result<SpectrumTrace, FormatError> {
    let parse_err = |line: usize, message: String| FormatError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == TRACE_MAGIC => {}
        Some((_, first)) => {
            return Err(parse_err(1, format!("expected `{TRACE_MAGIC}`, found `{first}`")));
        }
        None => return Err(parse_err(1, "empty file".to_string())),
    }

    let mut metadata = TraceMetadata::default();
    let mut offsets = Vec::new();
    let mut values = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, format!("malformed header line `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let float = || -> Result<f64, FormatError> {
                value
                    .parse::<f64>()
                    .map_err(|e| parse_err(line_no, format!("bad float `{value}`: {e}")))
            };
            match key {
                "units" => {
                    metadata.unit = OffsetUnit::from_tag(value)
                        .ok_or_else(|| parse_err(line_no, format!("unknown units tag `{value}`")))?;
                }
                "gamma_hz" => metadata.gamma_hz = Some(float()?),
                "eta_c" => metadata.eta_c = Some(float()?),
                "gain_db" => metadata.gain_db = Some(float()?),
                "phi_rad" => metadata.phi_rad = Some(float()?),
                "rabi_hz" => metadata.rabi_hz = Some(float()?),
                "seed" => {
                    metadata.seed = Some(value.parse::<u64>().map_err(|e| {
                        parse_err(line_no, format!("bad seed `{value}`: {e}"))
                    })?);
                }
                "normalization" => metadata.normalization = Some(value.to_string()),
                "mask" => {
                    let mut mask = Vec::new();
                    for item in value.split(',').filter(|s| !s.is_empty()) {
                        mask.push(item.trim().parse::<usize>().map_err(|e| {
                            parse_err(line_no, format!("bad mask index `{item}`: {e}"))
                        })?);
                    }
                    metadata.mask = mask;
                }
                other => {
                    return Err(parse_err(line_no, format!("unknown header key `{other}`")));
                }
            }
            continue;
        }
        let mut cols = line.split_whitespace();
        let (a, b) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err(line_no, format!("expected two columns, found `{line}`"))),
        };
        let w: f64 = a
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad offset `{a}`: {e}")))?;
        let v: f64 = b
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad value `{b}`: {e}")))?;
        if let Some(&last) = offsets.last() {
            if w <= last {
                return Err(parse_err(line_no, format!("offsets not increasing at `{line}`")));
            }
        }
        offsets.push(w);
        values.push(v);
    }
    Ok(SpectrumTrace::new(offsets, values, metadata)?)
}

pub fn read_trace(path: &Path) -> Result<SpectrumTrace, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    trace_from_string(&text, &path.display().to_string())
}

/// SHA-256 of a file, hex-encoded; used for provenance stamps in reports
/// and run manifests.
pub fn sha256_hex_file(path: &Path) -> Result<String, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("string write");
    }
    out
}

/// Declarative description of a batch run. Unknown keys are rejected at
/// parse time; semantic bounds are collected by [`JobConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// One of `no-drive`, `full-analytic`, `three-lorentzian`.
    pub kind: String,
    #[serde(default)]
    pub gain_db: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub n: Option<f64>,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default = "default_eta_c")]
    pub eta_c: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub rabi: f64,
    #[serde(default = "default_gamma_hz")]
    pub gamma_hz: f64,
    /// `flat`, `filtered`, or `parabolic`.
    #[serde(default = "default_background")]
    pub background: String,
    #[serde(default)]
    pub background_bandwidth: Option<f64>,
    #[serde(default)]
    pub background_curvature: Option<f64>,
}

fn default_eta_c() -> f64 {
    0.81
}

fn default_gamma_hz() -> f64 {
    304e3
}

fn default_background() -> String {
    "flat".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Half span of the symmetric grid in units of γ.
    pub span: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            span: 8.0,
            points: 2001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Trace files to fit, relative to the config file's directory.
    #[serde(default)]
    pub traces: Vec<String>,
    /// Known phase offsets between traces, radians.
    #[serde(default)]
    pub phase_offsets: Vec<f64>,
    #[serde(default)]
    pub fix_gamma_hz: Option<f64>,
    #[serde(default)]
    pub fix_eta_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub prefix: Option<String>,
}

impl JobConfig {
    /// Collect every semantic violation rather than stopping at the first.
    pub fn validate(&self) -> Vec<String> {
        let mut reasons = Vec::new();
        let m = &self.model;
        match m.kind.as_str() {
            "no-drive" | "full-analytic" | "three-lorentzian" => {}
            other => reasons.push(format!("model.kind `{other}` is not a known model")),
        }
        if let Some(n) = m.n {
            if n < 0.0 {
                reasons.push(format!("model.n must be >= 0, got {n}"));
            }
            if let Some(mm) = m.m {
                let bound = (n * (n + 1.0)).sqrt();
                if mm < 0.0 || mm > bound + crate::model::PHYSICALITY_TOL {
                    reasons.push(format!("model.m = {mm} outside [0, sqrt(n(n+1))] = [0, {bound}]"));
                }
            }
        } else if m.m.is_some() {
            reasons.push("model.m given without model.n".to_string());
        }
        if let Some(g) = m.gain_db {
            if g < 0.0 {
                reasons.push(format!("model.gain_db must be >= 0, got {g}"));
            }
        }
        if m.gain_db.is_none() && m.n.is_none() {
            reasons.push("model needs either gain_db (+ eta) or explicit n/m moments".to_string());
        }
        if let Some(eta) = m.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                reasons.push(format!("model.eta must be in (0, 1], got {eta}"));
            }
        }
        if !(m.eta_c > 0.0 && m.eta_c <= 1.0) {
            reasons.push(format!("model.eta_c must be in (0, 1], got {}", m.eta_c));
        }
        if m.rabi < 0.0 {
            reasons.push(format!("model.rabi must be >= 0, got {}", m.rabi));
        }
        if m.gamma_hz <= 0.0 {
            reasons.push(format!("model.gamma_hz must be > 0, got {}", m.gamma_hz));
        }
        match m.background.as_str() {
            "flat" | "parabolic" => {}
            "filtered" => {
                if m.background_bandwidth.is_none_or(|b| b <= 0.0) {
                    reasons.push("filtered background needs background_bandwidth > 0".to_string());
                }
            }
            other => reasons.push(format!("model.background `{other}` unknown")),
        }
        if self.grid.span <= 0.0 {
            reasons.push(format!("grid.span must be > 0, got {}", self.grid.span));
        }
        if self.grid.points < 2 {
            reasons.push(format!("grid.points must be >= 2, got {}", self.grid.points));
        }
        if self.noise.sigma < 0.0 {
            reasons.push(format!("noise.sigma must be >= 0, got {}", self.noise.sigma));
        }
        if !self.fit.phase_offsets.is_empty()
            && !self.fit.traces.is_empty()
            && self.fit.phase_offsets.len() != self.fit.traces.len()
        {
            reasons.push(format!(
                "fit.phase_offsets ({}) must match fit.traces ({})",
                self.fit.phase_offsets.len(),
                self.fit.traces.len()
            ));
        }
        reasons
    }
}

pub fn job_from_string(text: &str, path: &str) -> Result<JobConfig, FormatError> {
    let config: JobConfig = toml::from_str(text).map_err(|e| FormatError::Schema {
        path: path.to_string(),
        reasons: vec![e.to_string()],
    })?;
    let reasons = config.validate();
    if !reasons.is_empty() {
        return Err(FormatError::Schema {
            path: path.to_string(),
            reasons,
        });
    }
    Ok(config)
}

pub fn read_job(path: &Path) -> Result<JobConfig, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    job_from_string(&text, &path.display().to_string())
}

/// Provenance stamp attached to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    /// (label, sha256) of each input file.
    pub inputs: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub version: String,
}

impl Provenance {
    pub fn new(seed: Option<u64>) -> Self {
        Self {
            inputs: Vec::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Render a fit report as canonical TOML-like text: estimates with their
/// uncertainties, diagnostics, and provenance.
pub fn report_to_string(fit: &FitResult, provenance: &Provenance) -> String {
    let mut out = String::new();
    out.push_str("# fit-report v1\n\n[fit]\n");
    writeln!(out, "converged = {}", fit.converged).unwrap();
    writeln!(out, "iterations = {}", fit.iterations).unwrap();
    writeln!(out, "residual_norm = {}", fmt_float(fit.residual_norm)).unwrap();
    if !fit.warnings.is_empty() {
        let rendered: Vec<String> = fit.warnings.iter().map(|w| format!("{w:?}")).collect();
        writeln!(out, "warnings = {rendered:?}").unwrap();
    }
    out.push_str("\n[estimates]\n");
    for (name, value) in &fit.estimates {
        writeln!(out, "{name} = {}", fmt_float(*value)).unwrap();
    }
    out.push_str("\n[uncertainties]\n");
    let sorted: BTreeMap<_, _> = fit.uncertainties.iter().collect();
    for (name, value) in sorted {
        writeln!(out, "{name} = {}", fmt_float(*value)).unwrap();
    }
    out.push_str("\n[provenance]\n");
    writeln!(out, "version = \"{}\"", provenance.version).unwrap();
    if let Some(seed) = provenance.seed {
        writeln!(out, "seed = {seed}").unwrap();
    }
    for (label, hash) in &provenance.inputs {
        writeln!(out, "input = [\"{label}\", \"{hash}\"]").unwrap();
    }
    out
}

pub fn write_report(fit: &FitResult, provenance: &Provenance, path: &Path) -> Result<(), FormatError> {
    std::fs::write(path, report_to_string(fit, provenance)).map_err(|e| io_err(path, e))
}

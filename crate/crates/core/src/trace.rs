//! Sampled spectrum traces: the unit of I/O, plotting, and fitting.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("offsets and values differ in length ({offsets} vs {values})")]
    LengthMismatch { offsets: usize, values: usize },
    #[error("offsets must be strictly increasing (violated at index {index})")]
    NonMonotoneOffsets { index: usize },
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("mask index {index} out of range for {len} points")]
    MaskOutOfRange { index: usize, len: usize },
}

/// Unit of the frequency-offset axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffsetUnit {
    /// Offsets in units of the total linewidth γ (the library's native unit).
    #[default]
    Gamma,
    /// Ordinary frequency offsets in hertz.
    Hertz,
}

impl OffsetUnit {
    pub fn tag(&self) -> &'static str {
        match self {
            OffsetUnit::Gamma => "gamma",
            OffsetUnit::Hertz => "hz",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "gamma" => Some(OffsetUnit::Gamma),
            "hz" => Some(OffsetUnit::Hertz),
            _ => None,
        }
    }
}

/// Acquisition metadata carried alongside the samples. All fields are
/// optional except the offset unit; the mask lists indices excluded from
/// fits (e.g. points swamped by the coherent peak).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMetadata {
    pub gamma_hz: Option<f64>,
    pub eta_c: Option<f64>,
    pub gain_db: Option<f64>,
    pub phi_rad: Option<f64>,
    pub rabi_hz: Option<f64>,
    pub seed: Option<u64>,
    pub unit: OffsetUnit,
    pub normalization: Option<String>,
    pub mask: Vec<usize>,
}

/// A sampled (frequency offset, power) sequence with strictly increasing
/// offsets and finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    offsets: Vec<f64>,
    values: Vec<f64>,
    pub metadata: TraceMetadata,
}

impl SpectrumTrace {
    pub fn new(offsets: Vec<f64>, values: Vec<f64>, metadata: TraceMetadata) -> Result<Self, TraceError> {
        if offsets.len() != values.len() {
            return Err(TraceError::LengthMismatch {
                offsets: offsets.len(),
                values: values.len(),
            });
        }
        for (i, w) in offsets.iter().enumerate() {
            if !w.is_finite() {
                return Err(TraceError::NonFiniteSample { index: i });
            }
            if i > 0 && offsets[i - 1] >= *w {
                return Err(TraceError::NonMonotoneOffsets { index: i });
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TraceError::NonFiniteSample { index: i });
        }
        if let Some(&bad) = metadata.mask.iter().find(|&&i| i >= offsets.len()) {
            return Err(TraceError::MaskOutOfRange {
                index: bad,
                len: offsets.len(),
            });
        }
        Ok(Self {
            offsets,
            values,
            metadata,
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_masked(&self, index: usize) -> bool {
        self.metadata.mask.contains(&index)
    }

    /// (offset, value) pairs with masked points dropped.
    pub fn included_points(&self) -> Vec<(f64, f64)> {
        self.offsets
            .iter()
            .zip(&self.values)
            .enumerate()
            .filter(|(i, _)| !self.is_masked(*i))
            .map(|(_, (&w, &v))| (w, v))
            .collect()
    }

    /// Mask the point nearest zero offset and `half_width` neighbours on each
    /// side, the convention used to drop the coherent peak from fits.
    pub fn with_coherent_mask(mut self, half_width: usize) -> Self {
        let center = self
            .offsets
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.abs().total_cmp(&b.abs()))
            .map(|(i, _)| i);
        if let Some(c) = center {
            let lo = c.saturating_sub(half_width);
            let hi = (c + half_width).min(self.len().saturating_sub(1));
            let mut mask: Vec<usize> = (lo..=hi).collect();
            mask.extend(self.metadata.mask.iter().copied());
            mask.sort_unstable();
            mask.dedup();
            self.metadata.mask = mask;
        }
        self
    }
}

/// Uniform grid of `points` offsets spanning [-span, span].
pub fn symmetric_grid(span: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && span > 0.0);
    let n = points as f64 - 1.0;
    (0..points).map(|k| -span + 2.0 * span * k as f64 / n).collect()
}

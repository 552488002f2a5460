use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::formats::ChannelMatrix;

/// Lower bound applied to every standard deviation.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-channel mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsFile {
    version: u32,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl NormStats {
    /// Mean 0, std 1: normalization is a no-op.
    pub fn identity(channels: usize) -> Self {
        NormStats { means: vec![0.0; channels], stds: vec![1.0; channels] }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn normalize_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
            *v = (*v - m) / s;
        }
    }

    pub fn denormalize_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
            *v = *v * s + m;
        }
    }

    pub fn normalize(&self, m: &mut ChannelMatrix) {
        for r in 0..m.rows() {
            self.normalize_row(m.row_mut(r));
        }
    }

    pub fn denormalize(&self, m: &mut ChannelMatrix) {
        for r in 0..m.rows() {
            self.denormalize_row(m.row_mut(r));
        }
    }

    pub fn to_json(&self) -> String {
        let f = StatsFile { version: 1, means: self.means.clone(), stds: self.stds.clone() };
        let mut s = serde_json::to_string_pretty(&f).expect("stats serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, ParseError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let f: StatsFile = serde_path_to_error::deserialize(de).map_err(ParseError::from_json)?;
        if f.version != 1 {
            return Err(ParseError::at_field("version", format!("unsupported version {}", f.version)));
        }
        if f.means.len() != f.stds.len() {
            return Err(ParseError::at_field("stds", "length differs from means"));
        }
        if let Some(i) = f.stds.iter().position(|s| !(s.is_finite() && *s >= STD_FLOOR)) {
            return Err(ParseError::at_field(format!("stds[{i}]"), "standard deviation below the floor"));
        }
        Ok(NormStats { means: f.means, stds: f.stds })
    }
}

/// Statistics pooled over every frame of every window.
pub fn compute_stats(windows: &[&ChannelMatrix]) -> Result<NormStats> {
    let first = windows.first().ok_or_else(|| Error::invalid("cannot compute statistics of zero windows"))?;
    let cols = first.cols();
    if windows.iter().any(|w| w.cols() != cols) {
        return Err(Error::invalid("windows have different channel counts"));
    }
    let n: usize = windows.iter().map(|w| w.rows()).sum();
    if n == 0 {
        return Err(Error::invalid("windows contain no frames"));
    }
    let mut means = vec![0.0; cols];
    for w in windows {
        for row in w.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut vars = vec![0.0; cols];
    for w in windows {
        for row in w.iter_rows() {
            for ((acc, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *acc += (v - m) * (v - m);
            }
        }
    }
    let stds = vars.iter().map(|v| (v / n as f64).sqrt().max(STD_FLOOR)).collect();
    Ok(NormStats { means, stds })
}

//! Autoregressive motion models: fitting, evaluation, persistence and
//! sampling.
//!
//! Every channel is modelled independently as
//! `x_t = b + sum_i w_i * x_{t-i} + noise` in normalized channel space. A
//! [`ConditionedModel`] keeps one such model per action label plus an
//! optional fallback fitted on all windows.

mod eval;
mod fit;
mod io;
mod sample;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use eval::{evaluate, select_best, EvalReport, LabelReport};
pub use fit::{fit, fit_conditioned, RIDGE_LAMBDA};
pub use io::MODEL_VERSION;
pub use sample::{rollout, sample};

use crate::dataset::NormStats;
use crate::error::{Error, Result};

/// Weights for one channel, newest lag first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelCoefficients {
    pub coeffs: Vec<f64>,
    pub intercept: f64,
    pub noise_std: f64,
}

impl ChannelCoefficients {
    /// One-step prediction from `history`, where `history[0]` is the
    /// newest value.
    pub fn predict(&self, history: impl IntoIterator<Item = f64>) -> f64 {
        self.intercept + self.coeffs.iter().zip(history).map(|(w, x)| w * x).sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArModel {
    order: usize,
    channels: Vec<ChannelCoefficients>,
    skeleton_fingerprint: String,
    norm: NormStats,
    trained_on: String,
}

impl ArModel {
    pub fn new(
        order: usize,
        channels: Vec<ChannelCoefficients>,
        skeleton_fingerprint: impl Into<String>,
        norm: NormStats,
        trained_on: impl Into<String>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("model order must be at least 1"));
        }
        if channels.len() != norm.len() {
            return Err(Error::invalid(format!(
                "{} channel models but statistics for {} channels",
                channels.len(),
                norm.len()
            )));
        }
        for (c, ch) in channels.iter().enumerate() {
            if ch.coeffs.len() != order {
                return Err(Error::invalid(format!("channel {c} has {} weights, order is {order}", ch.coeffs.len())));
            }
            if !(ch.coeffs.iter().all(|w| w.is_finite()) && ch.intercept.is_finite()) {
                return Err(Error::invalid(format!("channel {c} has non-finite coefficients")));
            }
            if !(ch.noise_std.is_finite() && ch.noise_std >= 0.0) {
                return Err(Error::invalid(format!("channel {c} noise_std must be finite and >= 0")));
            }
        }
        let skeleton_fingerprint = skeleton_fingerprint.into();
        if skeleton_fingerprint.is_empty() {
            return Err(Error::invalid("model has no skeleton fingerprint"));
        }
        Ok(ArModel { order, channels, skeleton_fingerprint, norm, trained_on: trained_on.into() })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[ChannelCoefficients] {
        &self.channels
    }

    pub fn skeleton_fingerprint(&self) -> &str {
        &self.skeleton_fingerprint
    }

    pub fn norm(&self) -> &NormStats {
        &self.norm
    }

    pub fn trained_on(&self) -> &str {
        &self.trained_on
    }
}

/// Per-label models sharing order, channel count and skeleton.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedModel {
    labels: BTreeMap<String, ArModel>,
    fallback: Option<ArModel>,
}

impl ConditionedModel {
    pub fn new(labels: BTreeMap<String, ArModel>, fallback: Option<ArModel>) -> Result<Self> {
        let first = labels.values().next().ok_or_else(|| Error::invalid("a conditioned model needs at least one label"))?;
        for (name, m) in labels.iter().map(|(l, m)| (l.as_str(), m)).chain(fallback.iter().map(|m| ("fallback", m))) {
            if m.order != first.order
                || m.channel_count() != first.channel_count()
                || m.skeleton_fingerprint != first.skeleton_fingerprint
            {
                return Err(Error::invalid(format!("model `{name}` differs in order, channels or skeleton")));
            }
        }
        Ok(ConditionedModel { labels, fallback })
    }

    pub fn labels(&self) -> &BTreeMap<String, ArModel> {
        &self.labels
    }

    pub fn fallback(&self) -> Option<&ArModel> {
        self.fallback.as_ref()
    }

    fn any(&self) -> &ArModel {
        self.labels.values().next().expect("checked nonempty")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Ar(ArModel),
    Conditioned(ConditionedModel),
}

impl Model {
    pub fn order(&self) -> usize {
        match self {
            Model::Ar(m) => m.order,
            Model::Conditioned(c) => c.any().order,
        }
    }

    pub fn channel_count(&self) -> usize {
        match self {
            Model::Ar(m) => m.channel_count(),
            Model::Conditioned(c) => c.any().channel_count(),
        }
    }

    pub fn skeleton_fingerprint(&self) -> &str {
        match self {
            Model::Ar(m) => &m.skeleton_fingerprint,
            Model::Conditioned(c) => &c.any().skeleton_fingerprint,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Ar(_) => "ar",
            Model::Conditioned(_) => "conditioned",
        }
    }

    /// The model used for `label`. A plain AR model ignores the label; a
    /// conditioned model falls back to its fallback for unknown or absent
    /// labels.
    pub fn resolve(&self, label: Option<&str>) -> Result<&ArModel> {
        match self {
            Model::Ar(m) => Ok(m),
            Model::Conditioned(c) => label
                .and_then(|l| c.labels.get(l))
                .or(c.fallback.as_ref())
                .ok_or_else(|| match label {
                    Some(l) => Error::invalid(format!(
                        "unknown label `{l}` and no fallback model (known: {})",
                        c.labels.keys().cloned().collect::<Vec<_>>().join(", ")
                    )),
                    None => Error::invalid("a label is required: the model has no fallback"),
                }),
        }
    }
}

impl From<ArModel> for Model {
    fn from(m: ArModel) -> Self {
        Model::Ar(m)
    }
}

impl From<ConditionedModel> for Model {
    fn from(m: ConditionedModel) -> Self {
        Model::Conditioned(m)
    }
}

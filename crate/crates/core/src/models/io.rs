//! Model files: one JSON document, numbers in shortest round-trip form.
//!
//! ```json
//! {"version":1,"kind":"ar","order":2,"channel_count":6,
//!  "skeleton_fingerprint":"…","trained_on":"walk",
//!  "norm":{"means":[…],"stds":[…]},
//!  "channels":[{"coeffs":[…],"intercept":0.0,"noise_std":0.1}, …]}
//! ```
//!
//! A conditioned model has `"kind":"conditioned"`, the shared `order`,
//! `channel_count` and `skeleton_fingerprint`, a `labels` object mapping each
//! label to a model body (the fields above minus `version` and `kind`) and an
//! optional `fallback` body.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArModel, ChannelCoefficients, ConditionedModel, Model};
use crate::dataset::NormStats;
use crate::error::{Error, ParseError, Result};

pub const MODEL_VERSION: u32 = 1;

type PResult<T> = std::result::Result<T, ParseError>;

#[derive(Deserialize)]
struct Header {
    version: u32,
    kind: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormDoc {
    means: Vec<f64>,
    stds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Body {
    order: usize,
    channel_count: usize,
    skeleton_fingerprint: String,
    trained_on: String,
    norm: NormDoc,
    channels: Vec<ChannelCoefficients>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArDoc {
    version: u32,
    kind: String,
    order: usize,
    channel_count: usize,
    skeleton_fingerprint: String,
    trained_on: String,
    norm: NormDoc,
    channels: Vec<ChannelCoefficients>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionedDoc {
    version: u32,
    kind: String,
    order: usize,
    channel_count: usize,
    skeleton_fingerprint: String,
    labels: BTreeMap<String, Body>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fallback: Option<Body>,
}

fn body(m: &ArModel) -> Body {
    Body {
        order: m.order,
        channel_count: m.channel_count(),
        skeleton_fingerprint: m.skeleton_fingerprint.clone(),
        trained_on: m.trained_on.clone(),
        norm: NormDoc { means: m.norm.means.clone(), stds: m.norm.stds.clone() },
        channels: m.channels.clone(),
    }
}

fn from_body(b: Body, path: &str) -> PResult<ArModel> {
    let field = |f: &str| if path.is_empty() { f.to_string() } else { format!("{path}.{f}") };
    if b.norm.means.len() != b.norm.stds.len() {
        return Err(ParseError::at_field(field("norm.stds"), "length differs from means"));
    }
    if b.channels.len() != b.channel_count {
        return Err(ParseError::at_field(
            field("channels"),
            format!("{} entries but channel_count is {}", b.channels.len(), b.channel_count),
        ));
    }
    if let Some(i) = b.norm.stds.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(ParseError::at_field(field(&format!("norm.stds[{i}]")), "standard deviation must be positive"));
    }
    let norm = NormStats { means: b.norm.means, stds: b.norm.stds };
    ArModel::new(b.order, b.channels, b.skeleton_fingerprint, norm, b.trained_on)
        .map_err(|e| ParseError::at_field(if path.is_empty() { ".".into() } else { path.to_string() }, e.to_string()))
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> PResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(ParseError::from_json)
}

impl Model {
    pub fn to_json(&self) -> String {
        let mut s = match self {
            Model::Ar(m) => {
                let b = body(m);
                serde_json::to_string_pretty(&ArDoc {
                    version: MODEL_VERSION,
                    kind: "ar".into(),
                    order: b.order,
                    channel_count: b.channel_count,
                    skeleton_fingerprint: b.skeleton_fingerprint,
                    trained_on: b.trained_on,
                    norm: b.norm,
                    channels: b.channels,
                })
            }
            Model::Conditioned(c) => serde_json::to_string_pretty(&ConditionedDoc {
                version: MODEL_VERSION,
                kind: "conditioned".into(),
                order: self.order(),
                channel_count: self.channel_count(),
                skeleton_fingerprint: self.skeleton_fingerprint().to_string(),
                labels: c.labels.iter().map(|(l, m)| (l.clone(), body(m))).collect(),
                fallback: c.fallback.as_ref().map(body),
            }),
        }
        .expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> PResult<Self> {
        let header: Header = parse(text)?;
        if header.version != MODEL_VERSION {
            return Err(ParseError::at_field("version", format!("unsupported model version {}", header.version)));
        }
        match header.kind.as_str() {
            "ar" => {
                let d: ArDoc = parse(text)?;
                let b = Body {
                    order: d.order,
                    channel_count: d.channel_count,
                    skeleton_fingerprint: d.skeleton_fingerprint,
                    trained_on: d.trained_on,
                    norm: d.norm,
                    channels: d.channels,
                };
                Ok(Model::Ar(from_body(b, "")?))
            }
            "conditioned" => {
                let d: ConditionedDoc = parse(text)?;
                let mut labels = BTreeMap::new();
                for (l, b) in d.labels {
                    let path = format!("labels.{l}");
                    labels.insert(l, from_body(b, &path)?);
                }
                let fallback = d.fallback.map(|b| from_body(b, "fallback")).transpose()?;
                let c = ConditionedModel::new(labels, fallback).map_err(|e| ParseError::at_field("labels", e.to_string()))?;
                let m = Model::Conditioned(c);
                if m.order() != d.order || m.channel_count() != d.channel_count || m.skeleton_fingerprint() != d.skeleton_fingerprint
                {
                    return Err(ParseError::at_field("order", "header fields disagree with member models"));
                }
                Ok(m)
            }
            other => Err(ParseError::at_field("kind", format!("unknown model kind `{other}`"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Model {
        let ch = |w: f64| ChannelCoefficients { coeffs: vec![w, 0.1 / 3.0], intercept: -1e-17, noise_std: 0.3 };
        let norm = NormStats { means: vec![1.0 / 7.0, 2.0], stds: vec![0.5, 1e-8] };
        Model::Ar(ArModel::new(2, vec![ch(0.7), ch(std::f64::consts::PI)], "abc", norm, "walk").unwrap())
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        assert_eq!(Model::from_json(&m.to_json()).unwrap(), m);
        let Model::Ar(a) = m.clone() else { unreachable!() };
        let c = Model::Conditioned(
            ConditionedModel::new(BTreeMap::from([("walk".to_string(), a.clone())]), Some(a)).unwrap(),
        );
        assert_eq!(Model::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_documents() {
        let text = model().to_json();
        assert!(Model::from_json(&text[..text.len() / 2]).is_err());
        let err = Model::from_json(&text.replace("\"version\": 1", "\"version\": 2")).unwrap_err();
        assert!(err.to_string().contains("unsupported model version 2"), "{err}");
        let no_fp = text.replace("\"skeleton_fingerprint\": \"abc\",", "");
        let err = Model::from_json(&no_fp).unwrap_err();
        assert!(err.to_string().contains("skeleton_fingerprint"), "{err}");
        assert!(Model::from_json(&text.replace("\"kind\": \"ar\"", "\"kind\": \"gru\"")).is_err());
        assert!(Model::from_json(&text.replace("\"order\": 2", "\"order\": 3")).is_err());
        assert!(Model::from_json(&text.replace("\"noise_std\": 0.3", "\"noise_std\": -0.3")).is_err());
    }
}

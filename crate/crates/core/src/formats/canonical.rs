//! Canonical JSON clip document.
//!
//! ```json
//! {"version":1,
//!  "skeleton":[{"name":"Hips","parent":-1,"offset":[0,0,0],"has_rotation":true}, ...],
//!  "frame_time":"0.03333333333333333",
//!  "label":"walk",
//!  "frames":[{"root":[0,0,0],"quats":[1,0,0,0, ...]}, ...]}
//! ```
//!
//! `quats` holds `(w, x, y, z)` for each joint with `has_rotation`, in
//! skeleton order. Numbers are written with shortest round-trip precision so
//! reading a document back is exact. Channel layouts and per-joint
//! translations are not represented; decoded skeletons use the default layout.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ParseError;
use crate::rotation::{Rotation, Vec3};
use crate::skeleton::{default_channels, Joint, MotionClip, Pose, Skeleton};

type PResult<T> = std::result::Result<T, ParseError>;

pub const CANONICAL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalDoc {
    version: u32,
    skeleton: Vec<CanonicalJoint>,
    frame_time: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    frames: Vec<CanonicalFrame>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CanonicalJoint {
    pub name: String,
    pub parent: i64,
    pub offset: Vec3,
    pub has_rotation: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalFrame {
    root: Vec3,
    quats: Vec<f64>,
}

pub(crate) fn canonical_joints(skeleton: &Skeleton) -> Vec<CanonicalJoint> {
    skeleton
        .joints()
        .iter()
        .map(|j| CanonicalJoint {
            name: j.name.clone(),
            parent: j.parent.map_or(-1, |p| p as i64),
            offset: j.offset,
            has_rotation: !j.is_end_site,
        })
        .collect()
}

/// SHA-256 (hex) of the skeleton's canonical encoding plus its channel
/// layout. Two skeletons with equal fingerprints interpret channel rows
/// identically.
pub fn fingerprint(skeleton: &Skeleton) -> String {
    #[derive(Serialize)]
    struct Keyed<'a> {
        skeleton: Vec<CanonicalJoint>,
        channels: Vec<Vec<&'a str>>,
    }
    let keyed = Keyed {
        skeleton: canonical_joints(skeleton),
        channels: skeleton.joints().iter().map(|j| j.channels.iter().map(|c| c.name()).collect()).collect(),
    };
    let bytes = serde_json::to_vec(&keyed).expect("fingerprint encoding serializes");
    hex::encode(Sha256::digest(&bytes))
}

pub fn to_canonical(clip: &MotionClip) -> String {
    let doc = CanonicalDoc {
        version: CANONICAL_VERSION,
        skeleton: canonical_joints(clip.skeleton()),
        frame_time: clip.frame_time().to_string(),
        label: clip.label().map(str::to_owned),
        frames: clip
            .frames()
            .iter()
            .map(|p| CanonicalFrame {
                root: p.root_translation,
                quats: p.rotations.iter().flat_map(|q| q.wxyz()).collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&doc).expect("canonical document serializes");
    s.push('\n');
    s
}

fn skeleton_from_canonical(joints: &[CanonicalJoint]) -> PResult<Skeleton> {
    let mut out = Vec::with_capacity(joints.len());
    for (i, j) in joints.iter().enumerate() {
        let path = format!("skeleton[{i}]");
        let parent = match j.parent {
            -1 => None,
            p if p >= 0 && (p as u64) < i as u64 => Some(p as usize),
            p => return Err(ParseError::at_field(format!("{path}.parent"), format!("parent {p} is not an earlier joint"))),
        };
        if !j.has_rotation && parent.is_none() {
            return Err(ParseError::at_field(format!("{path}.has_rotation"), "the root must carry a rotation"));
        }
        let joint = if j.has_rotation {
            Joint::new(j.name.clone(), parent, j.offset, default_channels(parent.is_none()))
        } else {
            Joint::end_site(j.name.clone(), parent.expect("checked above"), j.offset)
        };
        out.push(joint);
    }
    let name = out.first().map(|j| j.name.clone()).unwrap_or_default();
    Skeleton::new(name, out).map_err(|e| ParseError::at_field("skeleton", e.to_string()))
}

pub fn from_canonical(text: &str) -> PResult<MotionClip> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: CanonicalDoc = serde_path_to_error::deserialize(de).map_err(ParseError::from_json)?;
    if doc.version != CANONICAL_VERSION {
        return Err(ParseError::at_field("version", format!("unsupported version {}", doc.version)));
    }
    let skeleton = skeleton_from_canonical(&doc.skeleton)?;
    let frame_time: f64 = doc
        .frame_time
        .trim()
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite() && *v > 0.0)
        .ok_or_else(|| ParseError::at_field("frame_time", format!("`{}` is not a positive decimal", doc.frame_time)))?;
    let n = skeleton.animated_count();
    let mut frames = Vec::with_capacity(doc.frames.len());
    for (i, f) in doc.frames.iter().enumerate() {
        if f.quats.len() != 4 * n {
            return Err(ParseError::at_field(
                format!("frames[{i}].quats"),
                format!("expected {} values, found {}", 4 * n, f.quats.len()),
            ));
        }
        let rotations = f
            .quats
            .chunks_exact(4)
            .enumerate()
            .map(|(k, q)| {
                Rotation::new(q[0], q[1], q[2], q[3])
                    .map_err(|e| ParseError::at_field(format!("frames[{i}].quats[{}]", 4 * k), e.to_string()))
            })
            .collect::<PResult<Vec<_>>>()?;
        frames.push(Pose { root_translation: f.root, rotations, joint_translations: Vec::new() });
    }
    MotionClip::new(skeleton, frame_time, frames, doc.label).map_err(|e| ParseError::new(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Location;

    fn one_frame() -> MotionClip {
        let s = Skeleton::new(
            "Hips",
            vec![Joint::new("Hips", None, [0.0; 3], default_channels(true)), Joint::end_site("Hips_end", 0, [0.0, 1.0, 0.0])],
        )
        .unwrap();
        let p = Pose::identity(&s);
        MotionClip::new(s, 1.0 / 30.0, vec![p], None).unwrap()
    }

    #[test]
    fn identity_round_trip() {
        let clip = one_frame();
        let text = to_canonical(&clip);
        assert!(!text.contains("label"));
        assert_eq!(from_canonical(&text).unwrap(), clip);
    }

    #[test]
    fn label_absent_vs_present() {
        let clip = one_frame();
        assert_eq!(from_canonical(&to_canonical(&clip)).unwrap().label(), None);
        let labeled = clip.with_label(Some("walk".into()));
        assert_eq!(from_canonical(&to_canonical(&labeled)).unwrap().label(), Some("walk"));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let text = to_canonical(&one_frame());
        let err = from_canonical(&text.replace("\"quats\":[1.0,0.0,0.0,0.0]", "\"quats\":[1.0,0.0]")).unwrap_err();
        assert_eq!(err.location, Location::Field("frames[0].quats".into()));

        let err = from_canonical(&text.replace("\"version\":1", "\"version\":2")).unwrap_err();
        assert_eq!(err.location, Location::Field("version".into()));

        let err = from_canonical(&text.replace("\"has_rotation\":true", "\"has_rotation\":3")).unwrap_err();
        assert!(matches!(err.location, Location::Field(ref p) if p.starts_with("skeleton[0]")), "{err}");

        let err = from_canonical(&text.replace("\"frame_time\":\"", "\"frame_time\":\"-")).unwrap_err();
        assert_eq!(err.location, Location::Field("frame_time".into()));

        assert!(from_canonical(&text.replace("\"parent\":0", "\"parent\":1")).is_err());
        assert!(from_canonical(&text.replace("\"version\":1", "\"version\":1,\"extra\":0")).is_err());
        assert!(from_canonical(&text[..text.len() / 2]).is_err());
    }
}

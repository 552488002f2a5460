//! Joint hierarchies, poses and clips.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rotation::{Axis, Rotation, RotationOrder, Vec3};

/// A single scalar stream of a joint, as named in BVH `CHANNELS` lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    pub fn axis(self) -> Axis {
        match self {
            Channel::Xposition | Channel::Xrotation => Axis::X,
            Channel::Yposition | Channel::Yrotation => Axis::Y,
            Channel::Zposition | Channel::Zrotation => Axis::Z,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, Channel::Xrotation | Channel::Yrotation | Channel::Zrotation)
    }

    pub fn position(axis: Axis) -> Channel {
        match axis {
            Axis::X => Channel::Xposition,
            Axis::Y => Channel::Yposition,
            Axis::Z => Channel::Zposition,
        }
    }

    pub fn rotation(axis: Axis) -> Channel {
        match axis {
            Axis::X => Channel::Xrotation,
            Axis::Y => Channel::Yrotation,
            Axis::Z => Channel::Zrotation,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let c = match s.to_ascii_lowercase().as_str() {
            "xposition" => Channel::Xposition,
            "yposition" => Channel::Yposition,
            "zposition" => Channel::Zposition,
            "xrotation" => Channel::Xrotation,
            "yrotation" => Channel::Yrotation,
            "zrotation" => Channel::Zrotation,
            _ => return Err(Error::invalid(format!("unknown channel `{s}`"))),
        };
        Ok(c)
    }
}

/// Channel layout used when a source carries no channel information:
/// root translation followed by ZXY rotation, ZXY rotation elsewhere.
pub fn default_channels(is_root: bool) -> Vec<Channel> {
    let rot = [Channel::Zrotation, Channel::Xrotation, Channel::Yrotation];
    if is_root {
        let mut c = vec![Channel::Xposition, Channel::Yposition, Channel::Zposition];
        c.extend(rot);
        c
    } else {
        rot.to_vec()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: Vec3,
    pub channels: Vec<Channel>,
    pub is_end_site: bool,
}

impl Joint {
    pub fn new(name: impl Into<String>, parent: Option<usize>, offset: Vec3, channels: Vec<Channel>) -> Self {
        Joint { name: name.into(), parent, offset, channels, is_end_site: false }
    }

    pub fn end_site(name: impl Into<String>, parent: usize, offset: Vec3) -> Self {
        Joint { name: name.into(), parent: Some(parent), offset, channels: Vec::new(), is_end_site: true }
    }

    /// The order of this joint's rotation channels, if it has any.
    pub fn rotation_order(&self) -> Option<RotationOrder> {
        let axes: Vec<Axis> = self.channels.iter().filter(|c| c.is_rotation()).map(|c| c.axis()).collect();
        match axes.as_slice() {
            [a, b, c] => RotationOrder::from_axes([*a, *b, *c]),
            _ => None,
        }
    }

    pub fn has_translation(&self) -> bool {
        self.channels.iter().any(|c| !c.is_rotation())
    }
}

/// A joint tree in topological order (parents precede children).
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    name: String,
    joints: Vec<Joint>,
    /// joint index -> slot in `Pose::rotations`, `None` for end sites
    animated: Vec<Option<usize>>,
    animated_count: usize,
    channel_count: usize,
}

impl Skeleton {
    pub fn new(name: impl Into<String>, joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::invalid("skeleton has no joints"));
        }
        let mut names = HashSet::new();
        let mut has_children = vec![false; joints.len()];
        for (i, j) in joints.iter().enumerate() {
            match (i, j.parent) {
                (0, None) => {}
                (0, Some(_)) => return Err(Error::invalid("the first joint must be the root")),
                (_, None) => return Err(Error::invalid(format!("joint `{}` has no parent but is not first", j.name))),
                (_, Some(p)) if p >= i => {
                    return Err(Error::invalid(format!("joint `{}` precedes its parent", j.name)))
                }
                (_, Some(p)) => has_children[p] = true,
            }
            if !names.insert(j.name.as_str()) {
                return Err(Error::invalid(format!("duplicate joint name `{}`", j.name)));
            }
            if j.offset.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("joint `{}` has a non-finite offset", j.name)));
            }
            let mut seen = HashSet::new();
            if !j.channels.iter().all(|c| seen.insert(*c)) {
                return Err(Error::invalid(format!("joint `{}` repeats a channel", j.name)));
            }
            let rot = j.channels.iter().filter(|c| c.is_rotation()).count();
            if rot != 0 && rot != 3 {
                return Err(Error::invalid(format!("joint `{}` has {rot} rotation channels", j.name)));
            }
            if j.is_end_site && !j.channels.is_empty() {
                return Err(Error::invalid(format!("end site `{}` has channels", j.name)));
            }
            if j.is_end_site && i == 0 {
                return Err(Error::invalid("the root cannot be an end site"));
            }
        }
        for (i, j) in joints.iter().enumerate() {
            if j.is_end_site && has_children[i] {
                return Err(Error::invalid(format!("end site `{}` has children", j.name)));
            }
        }
        let mut animated = Vec::with_capacity(joints.len());
        let mut n = 0;
        for j in &joints {
            if j.is_end_site {
                animated.push(None);
            } else {
                animated.push(Some(n));
                n += 1;
            }
        }
        let channel_count = joints.iter().map(|j| j.channels.len()).sum();
        Ok(Skeleton { name: name.into(), joints, animated, animated_count: n, channel_count })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint(&self, index: usize) -> &Joint {
        &self.joints[index]
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Number of joints that carry a rotation (everything but end sites).
    pub fn animated_count(&self) -> usize {
        self.animated_count
    }

    /// Slot of joint `index` in a pose's rotation list.
    pub fn animated_index(&self, index: usize) -> Option<usize> {
        self.animated[index]
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn children(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.joints.iter().enumerate().filter(move |(_, j)| j.parent == Some(index)).map(|(i, _)| i)
    }

    pub fn depth(&self, index: usize) -> usize {
        let mut d = 0;
        let mut cur = self.joints[index].parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.joints[p].parent;
        }
        d
    }

    /// Same topology with every animated joint given the default channel layout.
    pub fn with_default_channels(&self) -> Skeleton {
        let joints = self
            .joints
            .iter()
            .enumerate()
            .map(|(i, j)| Joint {
                channels: if j.is_end_site { Vec::new() } else { default_channels(i == 0) },
                ..j.clone()
            })
            .collect();
        Skeleton::new(self.name.clone(), joints).expect("channel relayout keeps topology valid")
    }
}

/// One frame: root translation plus one rotation per animated joint.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    pub root_translation: Vec3,
    pub rotations: Vec<Rotation>,
    /// Empty, or one entry per animated joint: extra translation added to a
    /// non-root joint's offset. The root entry is unused.
    pub joint_translations: Vec<Vec3>,
}

impl Pose {
    pub fn identity(skeleton: &Skeleton) -> Self {
        Pose {
            root_translation: [0.0; 3],
            rotations: vec![Rotation::IDENTITY; skeleton.animated_count()],
            joint_translations: Vec::new(),
        }
    }

    pub fn check(&self, skeleton: &Skeleton) -> Result<()> {
        if self.rotations.len() != skeleton.animated_count() {
            return Err(Error::invalid(format!(
                "pose has {} rotations, skeleton `{}` animates {} joints",
                self.rotations.len(),
                skeleton.name(),
                skeleton.animated_count()
            )));
        }
        if !self.joint_translations.is_empty() && self.joint_translations.len() != skeleton.animated_count() {
            return Err(Error::invalid("pose joint translations do not match the skeleton"));
        }
        let finite = self.root_translation.iter().chain(self.joint_translations.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("pose has non-finite translation"));
        }
        Ok(())
    }

    pub fn joint_translation(&self, slot: usize) -> Vec3 {
        self.joint_translations.get(slot).copied().unwrap_or([0.0; 3])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionClip {
    skeleton: Skeleton,
    frame_time: f64,
    frames: Vec<Pose>,
    label: Option<String>,
}

impl MotionClip {
    pub fn new(skeleton: Skeleton, frame_time: f64, frames: Vec<Pose>, label: Option<String>) -> Result<Self> {
        if !(frame_time.is_finite() && frame_time > 0.0) {
            return Err(Error::invalid(format!("frame time must be positive, got {frame_time}")));
        }
        for (i, f) in frames.iter().enumerate() {
            f.check(&skeleton).map_err(|e| Error::invalid(format!("frame {i}: {e}")))?;
        }
        Ok(MotionClip { skeleton, frame_time, frames, label })
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn frame_time(&self) -> f64 {
        self.frame_time
    }

    pub fn fps(&self) -> f64 {
        1.0 / self.frame_time
    }

    pub fn frames(&self) -> &[Pose] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: Option<String>) -> Self {
        self.label = label;
        self
    }

    pub fn with_frame_time(mut self, frame_time: f64) -> Result<Self> {
        if !(frame_time.is_finite() && frame_time > 0.0) {
            return Err(Error::invalid(format!("frame time must be positive, got {frame_time}")));
        }
        self.frame_time = frame_time;
        Ok(self)
    }

    pub fn into_parts(self) -> (Skeleton, f64, Vec<Pose>, Option<String>) {
        (self.skeleton, self.frame_time, self.frames, self.label)
    }
}

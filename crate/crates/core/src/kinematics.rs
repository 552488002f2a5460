//! Forward kinematics over a joint tree.

use crate::error::{Error, Result};
use crate::rotation::{add, Rotation, Vec3};
use crate::skeleton::{Pose, Skeleton};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointTransform {
    pub position: Vec3,
    pub rotation: Rotation,
}

/// Global position and rotation of every joint, end sites included.
///
/// End sites inherit their parent's global rotation. Joints are visited in
/// skeleton order, which is topological, so each parent is resolved first.
pub fn forward_kinematics(skeleton: &Skeleton, pose: &Pose) -> Result<Vec<JointTransform>> {
    pose.check(skeleton)?;
    let mut out: Vec<JointTransform> = Vec::with_capacity(skeleton.len());
    for (i, joint) in skeleton.joints().iter().enumerate() {
        let slot = skeleton.animated_index(i);
        let local = slot.map(|s| pose.rotations[s]).unwrap_or(Rotation::IDENTITY);
        let t = match joint.parent {
            None => JointTransform {
                position: add(pose.root_translation, joint.offset),
                rotation: local,
            },
            Some(p) => {
                let parent = out.get(p).ok_or_else(|| Error::invalid("joint precedes its parent"))?;
                let offset = match slot {
                    Some(s) => add(joint.offset, pose.joint_translation(s)),
                    None => joint.offset,
                };
                JointTransform {
                    position: add(parent.position, parent.rotation.rotate(offset)),
                    rotation: parent.rotation.compose(&local),
                }
            }
        };
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::{euler_to_quat, RotationOrder};
    use crate::skeleton::{default_channels, Joint};

    fn joint(name: &str, parent: Option<usize>, offset: Vec3) -> Joint {
        Joint::new(name, parent, offset, default_channels(parent.is_none()))
    }

    #[test]
    fn root_translation_only() {
        let s = Skeleton::new("s", vec![joint("r", None, [0.0; 3])]).unwrap();
        let mut p = Pose::identity(&s);
        p.root_translation = [1.0, 2.0, 3.0];
        let fk = forward_kinematics(&s, &p).unwrap();
        assert_eq!(fk[0].position, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn identity_chain() {
        let s = Skeleton::new(
            "s",
            vec![joint("r", None, [0.0; 3]), joint("a", Some(0), [0.0, 1.0, 0.0]), Joint::end_site("b", 1, [0.0, 1.0, 0.0])],
        )
        .unwrap();
        let fk = forward_kinematics(&s, &Pose::identity(&s)).unwrap();
        assert_eq!(fk[2].position, [0.0, 2.0, 0.0]);
    }

    #[test]
    fn rotated_root() {
        let s = Skeleton::new("s", vec![joint("r", None, [0.0; 3]), joint("c", Some(0), [1.0, 0.0, 0.0])]).unwrap();
        let mut p = Pose::identity(&s);
        p.rotations[0] = euler_to_quat([90.0, 0.0, 0.0], RotationOrder::Zxy).unwrap();
        let fk = forward_kinematics(&s, &p).unwrap();
        let c = fk[1].position;
        assert!(c[0].abs() < 1e-9 && (c[1] - 1.0).abs() < 1e-9 && c[2].abs() < 1e-9, "{c:?}");
    }

    #[test]
    fn joint_translation_adds_to_offset() {
        let s = Skeleton::new("s", vec![joint("r", None, [0.0; 3]), joint("c", Some(0), [1.0, 0.0, 0.0])]).unwrap();
        let mut p = Pose::identity(&s);
        p.joint_translations = vec![[0.0; 3], [0.0, 0.5, 0.0]];
        let fk = forward_kinematics(&s, &p).unwrap();
        assert_eq!(fk[1].position, [1.0, 0.5, 0.0]);
    }

    #[test]
    fn mismatched_pose_is_rejected() {
        let s = Skeleton::new("s", vec![joint("r", None, [0.0; 3]), joint("c", Some(0), [1.0, 0.0, 0.0])]).unwrap();
        let mut p = Pose::identity(&s);
        p.rotations.push(Rotation::IDENTITY);
        assert!(forward_kinematics(&s, &p).is_err());
    }
}

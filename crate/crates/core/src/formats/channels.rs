//! Conversion between poses and flat per-frame channel rows.

use crate::error::{Error, Result};
use crate::rotation::{euler_to_quat, Rotation, Vec3};
use crate::skeleton::{MotionClip, Pose, Skeleton};

/// Row-major frames x channels matrix. Rotation channels hold degrees,
/// translation channels hold skeleton length units.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ChannelMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(values.len()) {
            return Err(Error::invalid(format!("{} values do not fill a {rows}x{cols} matrix", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("channel matrix holds a non-finite value"));
        }
        Ok(ChannelMatrix { rows, cols, values })
    }

    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::invalid(format!("row {i} has {} values, expected {cols}", r.len())));
            }
            values.extend_from_slice(r);
        }
        ChannelMatrix::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics; a zero-column matrix has no usable rows
        self.values.chunks_exact(self.cols.max(1)).take(if self.cols == 0 { 0 } else { self.rows })
    }

    /// Copy of rows `start..start + len`.
    pub fn slice_rows(&self, start: usize, len: usize) -> ChannelMatrix {
        let values = self.values[start * self.cols..(start + len) * self.cols].to_vec();
        ChannelMatrix { rows: len, cols: self.cols, values }
    }
}

/// Which columns of a skeleton's channel layout are rotation channels.
pub fn rotation_mask(skeleton: &Skeleton) -> Vec<bool> {
    skeleton.joints().iter().flat_map(|j| j.channels.iter().map(|c| c.is_rotation())).collect()
}

/// Appends one frame's channel values, in skeleton channel order.
pub fn pose_to_row(skeleton: &Skeleton, pose: &Pose, out: &mut Vec<f64>) {
    for (i, joint) in skeleton.joints().iter().enumerate() {
        let Some(slot) = skeleton.animated_index(i) else { continue };
        let euler = joint.rotation_order().map(|o| (o, pose.rotations[slot].to_euler(o)));
        let translation = if i == 0 { pose.root_translation } else { pose.joint_translation(slot) };
        let mut rot_k = 0;
        for ch in &joint.channels {
            if ch.is_rotation() {
                let (_, angles) = euler.expect("three rotation channels give an order");
                out.push(angles[rot_k]);
                rot_k += 1;
            } else {
                out.push(translation[ch.axis().index()]);
            }
        }
    }
}

/// Decodes one row of channel values into a pose.
pub fn row_to_pose(skeleton: &Skeleton, row: &[f64]) -> Result<Pose> {
    if row.len() != skeleton.channel_count() {
        return Err(Error::invalid(format!(
            "row has {} values, skeleton expects {}",
            row.len(),
            skeleton.channel_count()
        )));
    }
    let any_joint_translation = skeleton.joints().iter().skip(1).any(|j| j.has_translation());
    let mut pose = Pose {
        root_translation: [0.0; 3],
        rotations: Vec::with_capacity(skeleton.animated_count()),
        joint_translations: if any_joint_translation {
            vec![[0.0; 3]; skeleton.animated_count()]
        } else {
            Vec::new()
        },
    };
    let mut col = 0;
    for (i, joint) in skeleton.joints().iter().enumerate() {
        let Some(slot) = skeleton.animated_index(i) else { continue };
        let mut angles = [0.0; 3];
        let mut rot_k = 0;
        let mut translation: Vec3 = [0.0; 3];
        for ch in &joint.channels {
            let v = row[col];
            col += 1;
            if ch.is_rotation() {
                angles[rot_k] = v;
                rot_k += 1;
            } else {
                translation[ch.axis().index()] = v;
            }
        }
        let rotation = match joint.rotation_order() {
            Some(order) => euler_to_quat(angles, order)?,
            None => Rotation::IDENTITY,
        };
        pose.rotations.push(rotation);
        if i == 0 {
            pose.root_translation = translation;
        } else if any_joint_translation {
            pose.joint_translations[slot] = translation;
        }
    }
    if !pose.root_translation.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("non-finite root translation"));
    }
    Ok(pose)
}

pub fn clip_to_channels(clip: &MotionClip) -> ChannelMatrix {
    let skeleton = clip.skeleton();
    let mut values = Vec::with_capacity(clip.len() * skeleton.channel_count());
    for pose in clip.frames() {
        pose_to_row(skeleton, pose, &mut values);
    }
    ChannelMatrix { rows: clip.len(), cols: skeleton.channel_count(), values }
}

pub fn clip_from_channels(
    skeleton: &Skeleton,
    frame_time: f64,
    matrix: &ChannelMatrix,
    label: Option<String>,
) -> Result<MotionClip> {
    if matrix.cols() != skeleton.channel_count() {
        return Err(Error::invalid(format!(
            "matrix has {} columns, skeleton expects {}",
            matrix.cols(),
            skeleton.channel_count()
        )));
    }
    let frames = (0..matrix.rows()).map(|r| row_to_pose(skeleton, matrix.row(r))).collect::<Result<Vec<_>>>()?;
    MotionClip::new(skeleton.clone(), frame_time, frames, label)
}

/// Removes +-360 degree jumps from rotation columns so every consecutive
/// difference lies in (-180, 180].
pub fn unwrap_rotations(matrix: &mut ChannelMatrix, mask: &[bool]) {
    for (c, _) in mask.iter().enumerate().filter(|(_, r)| **r) {
        let mut shift = 0.0;
        let mut prev_raw: Option<f64> = None;
        for r in 0..matrix.rows() {
            let raw = matrix.get(r, c);
            if let Some(p) = prev_raw {
                let d = raw - p;
                shift -= 360.0 * ((d - 180.0) / 360.0).ceil();
            }
            prev_raw = Some(raw);
            matrix.set(r, c, raw + shift);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{default_channels, Channel, Joint};

    fn skel() -> Skeleton {
        Skeleton::new(
            "s",
            vec![
                Joint::new("r", None, [0.0; 3], default_channels(true)),
                Joint::new("a", Some(0), [0.0, 1.0, 0.0], vec![Channel::Xposition, Channel::Xrotation, Channel::Yrotation, Channel::Zrotation]),
                Joint::end_site("a_end", 1, [0.0, 1.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn row_round_trip() {
        let s = skel();
        let row = vec![1.0, 2.0, 3.0, 10.0, -20.0, 30.0, 0.5, 5.0, 15.0, -25.0];
        let pose = row_to_pose(&s, &row).unwrap();
        assert_eq!(pose.root_translation, [1.0, 2.0, 3.0]);
        assert_eq!(pose.joint_translations[1], [0.5, 0.0, 0.0]);
        let mut back = Vec::new();
        pose_to_row(&s, &pose, &mut back);
        for (a, b) in row.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9, "{row:?} vs {back:?}");
        }
    }

    #[test]
    fn wrong_width_rejected() {
        assert!(row_to_pose(&skel(), &[0.0; 9]).is_err());
    }

    #[test]
    fn unwrap_removes_seam() {
        let mut m = ChannelMatrix::from_rows(2, &[vec![0.0, 170.0], vec![0.0, -170.0], vec![0.0, -10.0], vec![0.0, 179.0]]).unwrap();
        unwrap_rotations(&mut m, &[false, true]);
        let col: Vec<f64> = (0..4).map(|r| m.get(r, 1)).collect();
        assert_eq!(col, vec![170.0, 190.0, 350.0, 179.0]);
    }
}

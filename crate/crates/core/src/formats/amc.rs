//! Acclaim motion (AMC) reader.

use std::collections::HashSet;

use crate::error::ParseError;
use crate::formats::asf::{AngleUnit, AsfDocument, Dof};
use crate::rotation::{Rotation, Vec3};
use crate::skeleton::{MotionClip, Pose};

type PResult<T> = std::result::Result<T, ParseError>;

/// AMC files carry no frame rate; this is the CMU capture rate.
pub const DEFAULT_AMC_FRAME_TIME: f64 = 1.0 / 120.0;

/// Rotation for dof values applied in listed order (first listed is applied
/// first), e.g. `rx ry rz` gives `Rz * Ry * Rx`.
pub fn dof_rotation(dofs: &[Dof], values_deg: &[f64]) -> Rotation {
    let mut q = Rotation::IDENTITY;
    for (d, v) in dofs.iter().zip(values_deg) {
        if let Dof::Rotation(axis) = d {
            q = Rotation::about_axis(*axis, v.to_radians()) * q;
        }
    }
    q
}

/// Local joint rotation for a bone with axis rotation `c`: `C * M * C^-1`.
pub fn bone_local_rotation(c: &Rotation, dofs: &[Dof], values_deg: &[f64]) -> Rotation {
    *c * dof_rotation(dofs, values_deg) * c.conjugate()
}

fn split_dofs(dofs: &[Dof], values: &[f64], unit: AngleUnit) -> (Vec<f64>, Vec3) {
    let mut angles = Vec::with_capacity(values.len());
    let mut t = [0.0; 3];
    for (d, v) in dofs.iter().zip(values) {
        match d {
            Dof::Rotation(_) => angles.push(unit.to_degrees(*v)),
            Dof::Translation(a) => {
                t[a.index()] = *v;
                angles.push(0.0);
            }
            Dof::Length => angles.push(0.0),
        }
    }
    (angles, t)
}

/// Decodes an AMC document against its ASF skeleton.
///
/// Bones missing from a frame keep the identity rotation. `frame_time`
/// defaults to [`DEFAULT_AMC_FRAME_TIME`].
pub fn parse_amc(text: &str, asf: &AsfDocument, frame_time: Option<f64>) -> PResult<MotionClip> {
    let skeleton = &asf.skeleton;
    let mut unit = asf.angle_unit;
    let mut frames: Vec<Pose> = Vec::new();
    let mut last_number: Option<u64> = None;
    let mut seen: HashSet<String> = HashSet::new();
    let any_bone_translation = asf.bones.iter().any(|b| b.dof.iter().any(|d| matches!(d, Dof::Translation(_))));
    let root_c = asf.root.axis_rotation();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(flag) = line.strip_prefix(':') {
            match flag.trim().to_ascii_uppercase().as_str() {
                "DEGREES" => unit = AngleUnit::Degrees,
                "RADIANS" => unit = AngleUnit::Radians,
                _ => {}
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().expect("non-empty line has a token");
        if head.bytes().all(|b| b.is_ascii_digit()) {
            if tokens.next().is_some() {
                return Err(ParseError::at_line(line_no, "frame number line has extra tokens"));
            }
            let n: u64 = head.parse().map_err(|_| ParseError::at_line(line_no, format!("bad frame number `{head}`")))?;
            if let Some(prev) = last_number {
                if n <= prev {
                    return Err(ParseError::at_line(line_no, format!("frame {n} follows frame {prev}")));
                }
            }
            last_number = Some(n);
            seen.clear();
            let mut pose = Pose::identity(skeleton);
            if any_bone_translation {
                pose.joint_translations = vec![[0.0; 3]; skeleton.animated_count()];
            }
            frames.push(pose);
            continue;
        }
        let Some(pose) = frames.last_mut() else {
            return Err(ParseError::at_line(line_no, "bone values before the first frame number"));
        };
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ParseError::at_line(line_no, format!("non-numeric value `{t}`")))
            })
            .collect::<PResult<Vec<f64>>>()?;
        if !seen.insert(head.to_string()) {
            return Err(ParseError::at_line(line_no, format!("bone `{head}` given twice in one frame")));
        }
        if head == "root" {
            let dofs = &asf.root.order;
            if values.len() != dofs.len() {
                return Err(ParseError::at_line(
                    line_no,
                    format!("root expects {} values, found {}", dofs.len(), values.len()),
                ));
            }
            let (angles, t) = split_dofs(dofs, &values, unit);
            pose.root_translation = t;
            pose.rotations[0] = bone_local_rotation(&root_c, dofs, &angles);
            continue;
        }
        let Some((bone, joint)) = asf.bone(head) else {
            if asf.bones.iter().any(|b| b.name == head) {
                // defined but not attached to the hierarchy
                continue;
            }
            return Err(ParseError::at_line(line_no, format!("unknown bone `{head}`")));
        };
        if values.len() != bone.dof.len() {
            return Err(ParseError::at_line(
                line_no,
                format!("bone `{head}` expects {} values, found {}", bone.dof.len(), values.len()),
            ));
        }
        let (angles, t) = split_dofs(&bone.dof, &values, unit);
        let slot = skeleton.animated_index(joint).expect("bones are animated joints");
        pose.rotations[slot] = bone_local_rotation(&bone.axis_rotation(), &bone.dof, &angles);
        if any_bone_translation {
            pose.joint_translations[slot] = t;
        }
    }
    MotionClip::new(skeleton.clone(), frame_time.unwrap_or(DEFAULT_AMC_FRAME_TIME), frames, None)
        .map_err(|e| ParseError::new(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::asf::parse_asf;
    use crate::rotation::Axis;

    const SKEL: &str = "\
:root
   order TX TY TZ RX RY RZ
   axis XYZ
   position 0 0 0
   orientation 0 0 0
:bonedata
  begin
     name upper
     direction 0 1 0
     length 2
     axis 0 0 0 XYZ
     dof rx ry rz
  end
  begin
     name lower
     direction 0 1 0
     length 1
     axis 0 0 30 XYZ
     dof rx
  end
:hierarchy
  begin
    root upper
    upper lower
  end
";

    #[test]
    fn zero_values_give_identity() {
        let asf = parse_asf(SKEL).unwrap();
        let amc = ":FULLY-SPECIFIED\n:DEGREES\n1\nroot 0 0 0 0 0 0\nupper 0 0 0\nlower 0\n2\nroot 0 0 0 0 0 0\n";
        let clip = parse_amc(amc, &asf, None).unwrap();
        assert_eq!(clip.len(), 2);
        assert_eq!(clip.frame_time(), 1.0 / 120.0);
        for f in clip.frames() {
            for r in &f.rotations {
                assert!(r.angle_to(&Rotation::IDENTITY) < 1e-12);
            }
        }
    }

    #[test]
    fn single_axis_with_identity_frame() {
        let asf = parse_asf(SKEL).unwrap();
        let clip = parse_amc("1\nupper 90 0 0\n", &asf, Some(0.01)).unwrap();
        let expected = Rotation::about_axis(Axis::X, 90f64.to_radians());
        assert!(clip.frames()[0].rotations[1].angle_to(&expected) < 1e-12);
        assert_eq!(clip.frame_time(), 0.01);
    }

    #[test]
    fn errors() {
        let asf = parse_asf(SKEL).unwrap();
        for bad in [
            "1\nupper 0 0\n",
            "1\nlower 0 0\n",
            "2\nroot 0 0 0 0 0 0\n1\nroot 0 0 0 0 0 0\n",
            "upper 0 0 0\n",
            "1\nghost 1\n",
            "1\nupper 0 x 0\n",
            "1\nupper 0 0 0\nupper 0 0 0\n",
        ] {
            assert!(parse_amc(bad, &asf, None).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn radians_header() {
        let asf = parse_asf(SKEL).unwrap();
        let clip = parse_amc(":RADIANS\n1\nupper 0 0 1.0\n", &asf, None).unwrap();
        let expected = Rotation::about_axis(Axis::Z, 1.0);
        assert!(clip.frames()[0].rotations[1].angle_to(&expected) < 1e-12);
    }
}

//! Acclaim skeleton (ASF) reader.
//!
//! Joint limits, masses and documentation are parsed past and discarded.

use std::collections::HashMap;
use std::fmt;

use crate::error::ParseError;
use crate::rotation::{euler_to_quat, norm3, scale, Axis, Rotation, RotationOrder, Vec3};
use crate::skeleton::{default_channels, Joint, Skeleton};

type PResult<T> = std::result::Result<T, ParseError>;

/// Degree of freedom names used by `dof` and `:root order` lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dof {
    Rotation(Axis),
    Translation(Axis),
    /// Bone length channel; its values are read and ignored.
    Length,
}

impl Dof {
    fn parse(t: &str) -> Option<Dof> {
        let d = match t.to_ascii_lowercase().as_str() {
            "rx" => Dof::Rotation(Axis::X),
            "ry" => Dof::Rotation(Axis::Y),
            "rz" => Dof::Rotation(Axis::Z),
            "tx" => Dof::Translation(Axis::X),
            "ty" => Dof::Translation(Axis::Y),
            "tz" => Dof::Translation(Axis::Z),
            "l" => Dof::Length,
            _ => return None,
        };
        Some(d)
    }
}

impl fmt::Display for Dof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dof::Rotation(a) => write!(f, "r{}", a.letter().to_ascii_lowercase()),
            Dof::Translation(a) => write!(f, "t{}", a.letter().to_ascii_lowercase()),
            Dof::Length => f.write_str("l"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngleUnit {
    Degrees,
    Radians,
}

impl AngleUnit {
    pub fn to_degrees(self, v: f64) -> f64 {
        match self {
            AngleUnit::Degrees => v,
            AngleUnit::Radians => v.to_degrees(),
        }
    }
}

/// Acclaim axis/orientation triple: `angles[k]` is about `order.axes()[k]`,
/// applied in listed order, so `XYZ` means `Rz * Ry * Rx`.
pub fn acclaim_rotation(angles_deg: Vec3, order: RotationOrder) -> Rotation {
    euler_to_quat([angles_deg[2], angles_deg[1], angles_deg[0]], order.reversed())
        .expect("finite angles checked by the parser")
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsfBone {
    pub name: String,
    /// Unit vector in the global rest frame.
    pub direction: Vec3,
    pub length: f64,
    /// Local frame angles in degrees.
    pub axis: Vec3,
    pub axis_order: RotationOrder,
    pub dof: Vec<Dof>,
}

impl AsfBone {
    pub fn axis_rotation(&self) -> Rotation {
        acclaim_rotation(self.axis, self.axis_order)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsfRoot {
    pub order: Vec<Dof>,
    pub axis_order: RotationOrder,
    pub position: Vec3,
    /// Degrees.
    pub orientation: Vec3,
}

impl AsfRoot {
    pub fn axis_rotation(&self) -> Rotation {
        acclaim_rotation(self.orientation, self.axis_order)
    }
}

/// A parsed ASF file: the kinematic skeleton plus what AMC decoding needs.
#[derive(Clone, Debug, PartialEq)]
pub struct AsfDocument {
    pub skeleton: Skeleton,
    pub bones: Vec<AsfBone>,
    pub root: AsfRoot,
    pub angle_unit: AngleUnit,
    /// Bone index -> joint index, for bones reachable from the root.
    pub(crate) bone_joint: HashMap<String, (usize, usize)>,
}

impl AsfDocument {
    /// `(bone index, joint index)` of a placed bone.
    pub fn bone(&self, name: &str) -> Option<(&AsfBone, usize)> {
        self.bone_joint.get(name).map(|&(b, j)| (&self.bones[b], j))
    }
}

#[derive(Default)]
struct BoneDraft {
    line: usize,
    name: Option<String>,
    direction: Option<Vec3>,
    length: Option<f64>,
    axis: Option<(Vec3, RotationOrder)>,
    dof: Vec<Dof>,
}

fn num(line: usize, t: Option<&str>, what: &str) -> PResult<f64> {
    let t = t.ok_or_else(|| ParseError::at_line(line, format!("missing {what}")))?;
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseError::at_line(line, format!("expected {what}, found `{t}`")))
}

fn vec3<'a>(line: usize, it: &mut impl Iterator<Item = &'a str>, what: &str) -> PResult<Vec3> {
    Ok([num(line, it.next(), what)?, num(line, it.next(), what)?, num(line, it.next(), what)?])
}

fn order(line: usize, t: Option<&str>) -> PResult<RotationOrder> {
    let t = t.ok_or_else(|| ParseError::at_line(line, "missing axis order"))?;
    t.parse().map_err(|_| ParseError::at_line(line, format!("bad axis order `{t}`")))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Other,
    Units,
    Root,
    BoneData,
    Hierarchy,
}

pub fn parse_asf(text: &str) -> PResult<AsfDocument> {
    let mut section = Section::Other;
    let mut seen_root = false;
    let mut seen_bonedata = false;
    let mut seen_hierarchy = false;
    let mut angle_unit = AngleUnit::Degrees;
    let mut name = String::from("asf");
    let mut root = AsfRoot {
        order: Vec::new(),
        axis_order: RotationOrder::Xyz,
        position: [0.0; 3],
        orientation: [0.0; 3],
    };
    let mut drafts: Vec<BoneDraft> = Vec::new();
    let mut current: Option<BoneDraft> = None;
    let mut hierarchy: Vec<(usize, String, Vec<String>)> = Vec::new();
    let mut in_hierarchy_block = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(keyword) = line.strip_prefix(':') {
            if current.is_some() {
                return Err(ParseError::at_line(line_no, "bone block not closed with `end`"));
            }
            let mut it = keyword.split_whitespace();
            let head = it.next().unwrap_or("");
            section = match head.to_ascii_lowercase().as_str() {
                "units" => Section::Units,
                "root" => {
                    seen_root = true;
                    Section::Root
                }
                "bonedata" => {
                    seen_bonedata = true;
                    Section::BoneData
                }
                "hierarchy" => {
                    seen_hierarchy = true;
                    Section::Hierarchy
                }
                "name" => {
                    if let Some(n) = it.next() {
                        name = n.to_string();
                    }
                    Section::Other
                }
                _ => Section::Other,
            };
            continue;
        }
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or("");
        match section {
            Section::Other => {}
            Section::Units => {
                if key.eq_ignore_ascii_case("angle") {
                    angle_unit = match it.next().map(|s| s.to_ascii_lowercase()) {
                        Some(u) if u.starts_with("deg") => AngleUnit::Degrees,
                        Some(u) if u.starts_with("rad") => AngleUnit::Radians,
                        other => {
                            return Err(ParseError::at_line(line_no, format!("unknown angle unit {other:?}")))
                        }
                    };
                }
            }
            Section::Root => match key.to_ascii_lowercase().as_str() {
                "order" => {
                    root.order = it
                        .map(|t| Dof::parse(t).ok_or_else(|| ParseError::at_line(line_no, format!("unknown dof `{t}`"))))
                        .collect::<PResult<_>>()?;
                }
                "axis" => root.axis_order = order(line_no, it.next())?,
                "position" => root.position = vec3(line_no, &mut it, "root position")?,
                "orientation" => root.orientation = vec3(line_no, &mut it, "root orientation")?,
                _ => {}
            },
            Section::BoneData => {
                if key.eq_ignore_ascii_case("begin") {
                    if current.is_some() {
                        return Err(ParseError::at_line(line_no, "nested `begin`"));
                    }
                    current = Some(BoneDraft { line: line_no, ..Default::default() });
                    continue;
                }
                if key.eq_ignore_ascii_case("end") {
                    let d = current
                        .take()
                        .ok_or_else(|| ParseError::at_line(line_no, "`end` without `begin`"))?;
                    drafts.push(d);
                    continue;
                }
                let Some(d) = current.as_mut() else {
                    return Err(ParseError::at_line(line_no, format!("`{key}` outside a bone block")));
                };
                match key.to_ascii_lowercase().as_str() {
                    "name" => {
                        d.name = Some(
                            it.next().ok_or_else(|| ParseError::at_line(line_no, "missing bone name"))?.to_string(),
                        )
                    }
                    "direction" => d.direction = Some(vec3(line_no, &mut it, "bone direction")?),
                    "length" => d.length = Some(num(line_no, it.next(), "bone length")?),
                    "axis" => {
                        let a = vec3(line_no, &mut it, "bone axis")?;
                        d.axis = Some((a, order(line_no, it.next())?));
                    }
                    "dof" => {
                        d.dof = it
                            .map(|t| {
                                Dof::parse(t).ok_or_else(|| ParseError::at_line(line_no, format!("unknown dof `{t}`")))
                            })
                            .collect::<PResult<_>>()?;
                    }
                    // id, limits and their continuation lines, bodymass, cofmass
                    _ => {}
                }
            }
            Section::Hierarchy => {
                if key.eq_ignore_ascii_case("begin") {
                    in_hierarchy_block = true;
                } else if key.eq_ignore_ascii_case("end") {
                    in_hierarchy_block = false;
                } else if in_hierarchy_block {
                    hierarchy.push((line_no, key.to_string(), it.map(str::to_string).collect()));
                } else {
                    return Err(ParseError::at_line(line_no, "hierarchy entry outside begin/end"));
                }
            }
        }
    }
    if current.is_some() {
        return Err(ParseError::new("unterminated bone block"));
    }
    for (present, s) in [(seen_root, ":root"), (seen_bonedata, ":bonedata"), (seen_hierarchy, ":hierarchy")] {
        if !present {
            return Err(ParseError::new(format!("missing required section {s}")));
        }
    }

    let mut bones = Vec::with_capacity(drafts.len());
    let mut by_name: HashMap<String, usize> = HashMap::new();
    for d in drafts {
        let line = d.line;
        let name = d.name.ok_or_else(|| ParseError::at_line(line, "bone without a name"))?;
        let dir = d.direction.ok_or_else(|| ParseError::at_line(line, format!("bone `{name}` has no direction")))?;
        let length = d.length.ok_or_else(|| ParseError::at_line(line, format!("bone `{name}` has no length")))?;
        let n = norm3(dir);
        if !(n > 1e-12) {
            return Err(ParseError::at_line(line, format!("bone `{name}` has a zero direction")));
        }
        let (axis, axis_order) = d.axis.unwrap_or(([0.0; 3], RotationOrder::Xyz));
        let axis = axis.map(|a| angle_unit.to_degrees(a));
        if name == "root" || by_name.insert(name.clone(), bones.len()).is_some() {
            return Err(ParseError::at_line(line, format!("duplicate bone `{name}`")));
        }
        bones.push(AsfBone { name, direction: scale(dir, 1.0 / n), length, axis, axis_order, dof: d.dof });
    }
    root.orientation = root.orientation.map(|a| angle_unit.to_degrees(a));

    let mut children: HashMap<String, Vec<String>> = HashMap::new();
    let mut has_parent: HashMap<&str, ()> = HashMap::new();
    for (line, parent, kids) in &hierarchy {
        if parent != "root" && !by_name.contains_key(parent) {
            return Err(ParseError::at_line(*line, format!("bone `{parent}` is not defined in :bonedata")));
        }
        for k in kids {
            if !by_name.contains_key(k) {
                return Err(ParseError::at_line(*line, format!("bone `{k}` is not defined in :bonedata")));
            }
            if has_parent.insert(k.as_str(), ()).is_some() {
                return Err(ParseError::at_line(*line, format!("bone `{k}` has two parents")));
            }
        }
        children.entry(parent.clone()).or_default().extend(kids.iter().cloned());
    }

    // depth-first from the root, children in listed order
    let mut joints = vec![Joint::new("root", None, [0.0; 3], default_channels(true))];
    let mut bone_joint = HashMap::new();
    let mut stack: Vec<(String, usize)> = children
        .get("root")
        .map(|k| k.iter().rev().map(|c| (c.clone(), 0usize)).collect())
        .unwrap_or_default();
    while let Some((bone_name, parent_joint)) = stack.pop() {
        if bone_joint.contains_key(&bone_name) {
            return Err(ParseError::new(format!("bone `{bone_name}` appears twice in :hierarchy")));
        }
        let bi = by_name[&bone_name];
        let offset = if parent_joint == 0 {
            [0.0; 3]
        } else {
            let parent_name = &joints[parent_joint].name;
            let pb = &bones[by_name[parent_name]];
            scale(pb.direction, pb.length)
        };
        let ji = joints.len();
        joints.push(Joint::new(bone_name.clone(), Some(parent_joint), offset, default_channels(false)));
        bone_joint.insert(bone_name.clone(), (bi, ji));
        match children.get(&bone_name) {
            Some(kids) if !kids.is_empty() => stack.extend(kids.iter().rev().map(|c| (c.clone(), ji))),
            _ => {
                let b = &bones[bi];
                let end_name = format!("{}_end", b.name);
                if by_name.contains_key(&end_name) {
                    return Err(ParseError::new(format!("bone name `{end_name}` collides with an end site")));
                }
                joints.push(Joint::end_site(end_name, ji, scale(b.direction, b.length)));
            }
        }
    }
    let skeleton = Skeleton::new(name, joints).map_err(|e| ParseError::new(e.to_string()))?;
    Ok(AsfDocument { skeleton, bones, root, angle_unit, bone_joint })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_BONES: &str = "\
:version 1.10
:name two
:units
  mass 1.0
  length 1.0
  angle deg
:documentation
  free text that is ignored
:root
   order TX TY TZ RX RY RZ
   axis XYZ
   position 0 0 0
   orientation 0 0 0
:bonedata
  begin
     id 1
     name upper
     direction 0 1 0
     length 2
     axis 0 0 0  XYZ
     dof rx ry rz
     limits (-180 180)
            (-90 90)
            (-180 180)
  end
  begin
     id 2
     name lower
     direction 0 0 2
     length 1.5
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
    fn root_only() {
        let text = ":root\n order TX TY TZ RX RY RZ\n axis XYZ\n position 0 0 0\n orientation 0 0 0\n:bonedata\n:hierarchy\n begin\n end\n";
        let doc = parse_asf(text).unwrap();
        assert_eq!(doc.skeleton.len(), 1);
        assert!(doc.bones.is_empty());
    }

    #[test]
    fn child_offset_is_parent_direction_times_length() {
        let doc = parse_asf(TWO_BONES).unwrap();
        let s = &doc.skeleton;
        let names: Vec<&str> = s.joints().iter().map(|j| j.name.as_str()).collect();
        assert_eq!(names, vec!["root", "upper", "lower", "lower_end"]);
        assert_eq!(s.joint(1).offset, [0.0; 3]);
        assert_eq!(s.joint(2).offset, [0.0, 2.0, 0.0]);
        assert_eq!(s.joint(3).offset, [0.0, 0.0, 1.5]);
        assert_eq!(doc.bones[1].direction, [0.0, 0.0, 1.0]);
        assert_eq!(doc.bones[1].dof, vec![Dof::Rotation(Axis::X)]);
        assert_eq!(s.name(), "two");
    }

    #[test]
    fn radians_are_converted() {
        let text = TWO_BONES.replace("angle deg", "angle rad").replace("axis 0 0 30 XYZ", "axis 0 0 0.5 XYZ");
        let doc = parse_asf(&text).unwrap();
        assert!((doc.bones[1].axis[2] - 0.5f64.to_degrees()).abs() < 1e-12);
    }

    #[test]
    fn missing_sections_and_bones() {
        assert!(parse_asf(&TWO_BONES.replace(":hierarchy", ":other")).is_err());
        assert!(parse_asf(&TWO_BONES.replace(":root", ":nope")).is_err());
        let err = parse_asf(&TWO_BONES.replace("upper lower", "upper lower ghost")).unwrap_err();
        assert!(err.reason.contains("ghost"), "{err}");
        assert!(parse_asf(&TWO_BONES.replace("direction 0 1 0", "direction 0 0 0")).is_err());
        assert!(parse_asf(&TWO_BONES.replace("     length 2\n", "")).is_err());
        assert!(parse_asf(&TWO_BONES.replace("dof rx\n", "dof rq\n")).is_err());
        assert!(parse_asf(&TWO_BONES.replace("    upper lower\n", "    upper lower\n    root lower\n")).is_err());
    }

    #[test]
    fn sections_in_any_order() {
        let (head, rest) = TWO_BONES.split_at(TWO_BONES.find(":root").unwrap());
        let (root, tail) = rest.split_at(rest.find(":bonedata").unwrap());
        let reordered = format!("{head}{tail}{root}");
        let doc = parse_asf(&reordered).unwrap();
        assert_eq!(doc.skeleton.len(), 4);
    }
}

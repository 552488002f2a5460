//! Biovision hierarchy (BVH) reader and writer.
//!
//! The reader walks the `HIERARCHY` block as a token stream (so line breaks
//! between tokens do not matter) and reads the `MOTION` block line by line,
//! one frame per line. Nesting is tracked with an explicit stack so arbitrarily
//! deep input cannot exhaust the call stack.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::ParseError;
use crate::formats::channels::{pose_to_row, row_to_pose};
use crate::rotation::Vec3;
use crate::skeleton::{Channel, Joint, MotionClip, Pose, Skeleton};

type PResult<T> = std::result::Result<T, ParseError>;

struct Tokens<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    current: Vec<&'a str>,
    pos: usize,
    line_no: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens { lines: text.lines().enumerate().peekable(), current: Vec::new(), pos: 0, line_no: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        while self.pos >= self.current.len() {
            let (i, line) = self.lines.next()?;
            self.line_no = i + 1;
            self.current = line.split_whitespace().collect();
            self.pos = 0;
        }
        let t = self.current[self.pos];
        self.pos += 1;
        Some((self.line_no, t))
    }

    fn expect_any(&mut self, what: &str) -> PResult<(usize, &'a str)> {
        self.next().ok_or_else(|| ParseError::at_line(self.line_no, format!("unexpected end of input, expected {what}")))
    }

    fn expect(&mut self, keyword: &str) -> PResult<usize> {
        let (line, t) = self.expect_any(&format!("`{keyword}`"))?;
        if t != keyword {
            return Err(ParseError::at_line(line, format!("expected `{keyword}`, found `{t}`")));
        }
        Ok(line)
    }

    fn number(&mut self, what: &str) -> PResult<f64> {
        let (line, t) = self.expect_any(what)?;
        parse_number(t).ok_or_else(|| ParseError::at_line(line, format!("expected {what}, found `{t}`")))
    }

    fn rest_of_line_is_empty(&self) -> bool {
        self.pos >= self.current.len()
    }
}

fn parse_number(t: &str) -> Option<f64> {
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct Builder {
    joints: Vec<Joint>,
    has_offset: Vec<bool>,
    names: HashSet<String>,
}

impl Builder {
    fn push(&mut self, line: usize, joint: Joint) -> PResult<usize> {
        if !self.names.insert(joint.name.clone()) {
            return Err(ParseError::at_line(line, format!("duplicate joint name `{}`", joint.name)));
        }
        self.joints.push(joint);
        self.has_offset.push(false);
        Ok(self.joints.len() - 1)
    }

    fn end_site_name(&self, parent: usize) -> String {
        let base = format!("{}_end", self.joints[parent].name);
        if !self.names.contains(&base) {
            return base;
        }
        (1..).map(|k| format!("{base}{k}")).find(|n| !self.names.contains(n)).expect("unbounded search")
    }
}

fn parse_hierarchy(tokens: &mut Tokens<'_>) -> PResult<Skeleton> {
    tokens.expect("HIERARCHY")?;
    let root_line = tokens.expect("ROOT")?;
    let (_, root_name) = tokens.expect_any("root name")?;
    let mut b = Builder { joints: Vec::new(), has_offset: Vec::new(), names: HashSet::new() };
    b.push(root_line, Joint::new(root_name, None, [0.0; 3], Vec::new()))?;
    tokens.expect("{")?;
    let mut stack = vec![0usize];

    while let Some(&current) = stack.last() {
        let (line, t) = tokens.expect_any("joint contents or `}`")?;
        match t {
            "OFFSET" => {
                if b.has_offset[current] {
                    return Err(ParseError::at_line(line, "joint has two OFFSET entries"));
                }
                let offset = [tokens.number("offset x")?, tokens.number("offset y")?, tokens.number("offset z")?];
                b.joints[current].offset = offset;
                b.has_offset[current] = true;
            }
            "CHANNELS" => {
                if b.joints[current].is_end_site {
                    return Err(ParseError::at_line(line, "End Site cannot have channels"));
                }
                if !b.joints[current].channels.is_empty() {
                    return Err(ParseError::at_line(line, "joint has two CHANNELS entries"));
                }
                let (nl, nt) = tokens.expect_any("channel count")?;
                let n: usize = nt.parse().map_err(|_| ParseError::at_line(nl, format!("bad channel count `{nt}`")))?;
                if n > 6 {
                    return Err(ParseError::at_line(nl, format!("{n} channels declared, at most 6 allowed")));
                }
                let mut channels = Vec::with_capacity(n);
                for _ in 0..n {
                    let (cl, ct) = tokens.expect_any("channel name")?;
                    let ch: Channel = ct.parse().map_err(|_| ParseError::at_line(cl, format!("unknown channel `{ct}`")))?;
                    if channels.contains(&ch) {
                        return Err(ParseError::at_line(cl, format!("channel `{ct}` listed twice")));
                    }
                    channels.push(ch);
                }
                let rot = channels.iter().filter(|c| c.is_rotation()).count();
                if rot != 0 && rot != 3 {
                    return Err(ParseError::at_line(line, format!("{rot} rotation channels; expected 0 or 3")));
                }
                b.joints[current].channels = channels;
            }
            "JOINT" => {
                if b.joints[current].is_end_site {
                    return Err(ParseError::at_line(line, "End Site cannot have children"));
                }
                let (_, name) = tokens.expect_any("joint name")?;
                let idx = b.push(line, Joint::new(name, Some(current), [0.0; 3], Vec::new()))?;
                tokens.expect("{")?;
                stack.push(idx);
            }
            "End" => {
                if b.joints[current].is_end_site {
                    return Err(ParseError::at_line(line, "End Site cannot have children"));
                }
                tokens.expect("Site")?;
                let name = b.end_site_name(current);
                let idx = b.push(line, Joint::end_site(name, current, [0.0; 3]))?;
                tokens.expect("{")?;
                stack.push(idx);
            }
            "}" => {
                if !b.has_offset[current] {
                    return Err(ParseError::at_line(line, format!("joint `{}` has no OFFSET", b.joints[current].name)));
                }
                stack.pop();
            }
            "ROOT" => return Err(ParseError::at_line(line, "only one ROOT is supported")),
            "MOTION" => return Err(ParseError::at_line(line, "unbalanced braces: MOTION inside the hierarchy")),
            other => return Err(ParseError::at_line(line, format!("unexpected token `{other}`"))),
        }
    }

    let name = b.joints[0].name.clone();
    Skeleton::new(name, b.joints).map_err(|e| ParseError::at_line(tokens.line_no, e.to_string()))
}

/// Parses a complete BVH document.
///
/// Rotation channels become quaternions using each joint's own channel order.
/// End sites are named `<parent>_end`.
pub fn parse_bvh(text: &str) -> PResult<MotionClip> {
    let mut tokens = Tokens::new(text);
    let skeleton = parse_hierarchy(&mut tokens)?;

    tokens.expect("MOTION")?;
    tokens.expect("Frames:")?;
    let (fl, ft) = tokens.expect_any("frame count")?;
    let frame_count: usize = ft.parse().map_err(|_| ParseError::at_line(fl, format!("bad frame count `{ft}`")))?;
    tokens.expect("Frame")?;
    tokens.expect("Time:")?;
    let frame_time = tokens.number("frame time")?;
    if frame_time <= 0.0 {
        return Err(ParseError::at_line(tokens.line_no, "frame time must be positive"));
    }
    if !tokens.rest_of_line_is_empty() {
        return Err(ParseError::at_line(tokens.line_no, "unexpected data after the frame time"));
    }

    let cols = skeleton.channel_count();
    if cols == 0 && frame_count > 0 {
        return Err(ParseError::at_line(tokens.line_no, "skeleton has no channels but the clip has frames"));
    }
    let mut frames: Vec<Pose> = Vec::with_capacity(frame_count.min(1 << 16));
    let mut row = Vec::with_capacity(cols);
    for (i, line) in tokens.lines.by_ref() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if frames.len() == frame_count {
            return Err(ParseError::at_line(line_no, format!("more motion rows than the declared {frame_count} frames")));
        }
        row.clear();
        for t in line.split_whitespace() {
            let v = parse_number(t)
                .ok_or_else(|| ParseError::at_line(line_no, format!("frame {}: non-numeric value `{t}`", frames.len())))?;
            row.push(v);
        }
        if row.len() != cols {
            return Err(ParseError::at_line(
                line_no,
                format!("frame {}: expected {cols} channel values, found {}", frames.len(), row.len()),
            ));
        }
        let pose = row_to_pose(&skeleton, &row).map_err(|e| ParseError::at_line(line_no, e.to_string()))?;
        frames.push(pose);
    }
    if frames.len() != frame_count {
        return Err(ParseError::at_line(
            tokens.line_no.max(1),
            format!("declared {frame_count} frames, found {}", frames.len()),
        ));
    }
    MotionClip::new(skeleton, frame_time, frames, None).map_err(|e| ParseError::new(e.to_string()))
}

/// The channel layout [`write_bvh`] emits: translation then `Zrotation
/// Xrotation Yrotation` on the root and on joints that carry translation,
/// rotation only everywhere else.
pub fn bvh_layout(skeleton: &Skeleton) -> Skeleton {
    let rot = [Channel::Zrotation, Channel::Xrotation, Channel::Yrotation];
    let pos = [Channel::Xposition, Channel::Yposition, Channel::Zposition];
    let joints = skeleton
        .joints()
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let channels = if j.is_end_site {
                Vec::new()
            } else if i == 0 || j.has_translation() {
                pos.iter().chain(rot.iter()).copied().collect()
            } else {
                rot.to_vec()
            };
            Joint { channels, ..j.clone() }
        })
        .collect();
    Skeleton::new(skeleton.name(), joints).expect("relayout keeps topology")
}

/// Depth-first preorder with children in index order. BVH text can only
/// express this order.
fn preorder(skeleton: &Skeleton) -> Vec<usize> {
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); skeleton.len()];
    for (i, j) in skeleton.joints().iter().enumerate() {
        if let Some(p) = j.parent {
            children[p].push(i);
        }
    }
    let mut order = Vec::with_capacity(skeleton.len());
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        order.push(i);
        stack.extend(children[i].iter().rev());
    }
    order
}

/// Reindexes a clip's skeleton into depth-first preorder.
fn in_preorder(clip: &MotionClip) -> MotionClip {
    let skeleton = clip.skeleton();
    let order = preorder(skeleton);
    if order.iter().enumerate().all(|(a, b)| a == *b) {
        return clip.clone();
    }
    let mut new_index = vec![0usize; order.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let joints: Vec<Joint> = order
        .iter()
        .map(|&old| {
            let j = skeleton.joint(old);
            Joint { parent: j.parent.map(|p| new_index[p]), ..j.clone() }
        })
        .collect();
    let reordered = Skeleton::new(skeleton.name(), joints).expect("preorder is topological");
    let slots: Vec<usize> = order.iter().filter_map(|&old| skeleton.animated_index(old)).collect();
    let frames = clip
        .frames()
        .iter()
        .map(|p| Pose {
            root_translation: p.root_translation,
            rotations: slots.iter().map(|&s| p.rotations[s]).collect(),
            joint_translations: if p.joint_translations.is_empty() {
                Vec::new()
            } else {
                slots.iter().map(|&s| p.joint_translations[s]).collect()
            },
        })
        .collect();
    MotionClip::new(reordered, clip.frame_time(), frames, clip.label().map(str::to_owned))
        .expect("reordering keeps frames valid")
}

fn push_num(out: &mut String, v: f64) {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        out.push_str("0.000000");
    } else {
        out.push_str(&s);
    }
}

fn push_vec(out: &mut String, v: Vec3) {
    for (k, c) in v.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        push_num(out, *c);
    }
}

/// Serializes a clip as BVH with two-space indentation and six decimals.
pub fn write_bvh(clip: &MotionClip) -> String {
    let clip = in_preorder(clip);
    let skeleton = bvh_layout(clip.skeleton());
    let mut out = String::from("HIERARCHY\n");

    enum Step {
        Open(usize),
        Close(usize),
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); skeleton.len()];
    for (i, j) in skeleton.joints().iter().enumerate() {
        if let Some(p) = j.parent {
            children[p].push(i);
        }
    }
    let mut stack = vec![Step::Open(0)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Open(i) => {
                let j = skeleton.joint(i);
                let depth = skeleton.depth(i);
                let pad = "  ".repeat(depth);
                if j.parent.is_none() {
                    let _ = writeln!(out, "ROOT {}", j.name);
                } else if j.is_end_site {
                    let _ = writeln!(out, "{pad}End Site");
                } else {
                    let _ = writeln!(out, "{pad}JOINT {}", j.name);
                }
                let _ = writeln!(out, "{pad}{{");
                out.push_str(&pad);
                out.push_str("  OFFSET ");
                push_vec(&mut out, j.offset);
                out.push('\n');
                if !j.channels.is_empty() {
                    let _ = write!(out, "{pad}  CHANNELS {}", j.channels.len());
                    for c in &j.channels {
                        out.push(' ');
                        out.push_str(c.name());
                    }
                    out.push('\n');
                }
                stack.push(Step::Close(i));
                stack.extend(children[i].iter().rev().map(|&c| Step::Open(c)));
            }
            Step::Close(i) => {
                let pad = "  ".repeat(skeleton.depth(i));
                let _ = writeln!(out, "{pad}}}");
            }
        }
    }

    out.push_str("MOTION\n");
    let _ = writeln!(out, "Frames: {}", clip.len());
    // sub-microsecond frame times would round to an unparseable zero
    let ft = clip.frame_time();
    if ft < 5e-7 {
        let _ = writeln!(out, "Frame Time: {ft}");
    } else {
        out.push_str("Frame Time: ");
        push_num(&mut out, ft);
        out.push('\n');
    }
    let mut row = Vec::with_capacity(skeleton.channel_count());
    for pose in clip.frames() {
        row.clear();
        pose_to_row(&skeleton, pose, &mut row);
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            push_num(&mut out, *v);
        }
        out.push('\n');
    }
    out
}

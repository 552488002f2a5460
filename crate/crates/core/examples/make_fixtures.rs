//! Regenerates the generated files under `fixtures/`.
//!
//! ```text
//! cargo run -p motionkit --example make_fixtures [FIXTURES_DIR]
//! ```
//!
//! * `synthetic/walk/*.bvh`: every channel a sinusoid with a per-channel
//!   frequency and offset and a per-clip amplitude and phase.
//! * `synthetic/reach/*.bvh`: every channel a linear ramp with a per-clip
//!   start and slope.
//! * `bvh/humanoid.bvh`: a 20-joint body with ZYX rotation channels and a
//!   translating neck, written in a non-default layout on purpose.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use motionkit::formats::{clip_from_channels, write_bvh, ChannelMatrix};
use motionkit::rng::SplitMix64;
use motionkit::skeleton::default_channels;
use motionkit::{Channel, Joint, Skeleton};

const CLIPS_PER_LABEL: usize = 50;
const FRAMES: usize = 90;
const FRAME_TIME: f64 = 1.0 / 30.0;

fn synthetic_skeleton() -> Skeleton {
    let j = |name: &str, parent: usize, offset: [f64; 3]| Joint::new(name, Some(parent), offset, default_channels(false));
    Skeleton::new(
        "Hips",
        vec![
            Joint::new("Hips", None, [0.0, 0.0, 0.0], default_channels(true)),
            j("Spine", 0, [0.0, 10.0, 0.0]),
            j("Head", 1, [0.0, 8.0, 0.0]),
            Joint::end_site("Head_end", 2, [0.0, 4.0, 0.0]),
            j("Arm", 1, [6.0, 6.0, 0.0]),
            Joint::end_site("Arm_end", 4, [10.0, 0.0, 0.0]),
        ],
    )
    .expect("valid skeleton")
}

fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

fn write_set(dir: &Path, label: &str, values: impl Fn(usize, &mut SplitMix64) -> Vec<f64>) {
    let skeleton = synthetic_skeleton();
    let cols = skeleton.channel_count();
    let out = dir.join(label);
    fs::create_dir_all(&out).expect("create fixture dir");
    let mut rng = SplitMix64::new(if label == "walk" { 11 } else { 23 });
    for c in 0..CLIPS_PER_LABEL {
        let data = values(cols, &mut rng);
        let m = ChannelMatrix::new(FRAMES, cols, data).expect("finite values");
        let clip = clip_from_channels(&skeleton, FRAME_TIME, &m, None).expect("valid clip");
        fs::write(out.join(format!("{label}_{c:02}.bvh")), write_bvh(&clip)).expect("write fixture");
    }
}

fn walk_values(cols: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let params: Vec<(f64, f64)> = (0..cols).map(|_| (uniform(rng, 10.0, 30.0), uniform(rng, 0.0, TAU))).collect();
    let mut v = Vec::with_capacity(FRAMES * cols);
    for t in 0..FRAMES {
        for (ch, (amp, phase)) in params.iter().enumerate() {
            let period = 20.0 + 3.0 * ch as f64;
            let offset = 5.0 - ch as f64;
            v.push(offset + amp * (TAU * t as f64 / period + phase).sin());
        }
    }
    v
}

fn reach_values(cols: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let params: Vec<(f64, f64)> = (0..cols).map(|_| (uniform(rng, -20.0, 20.0), uniform(rng, -0.6, 0.6))).collect();
    let mut v = Vec::with_capacity(FRAMES * cols);
    for t in 0..FRAMES {
        for (start, slope) in &params {
            v.push(start + slope * t as f64);
        }
    }
    v
}

const HUMANOID: &[(&str, Option<usize>, [f64; 3])] = &[
    ("Hips", None, [0.0, 90.0, 0.0]),
    ("Spine", Some(0), [0.0, 10.0, 0.0]),
    ("Chest", Some(1), [0.0, 12.0, 0.0]),
    ("Neck", Some(2), [0.0, 15.0, 0.0]),
    ("Head", Some(3), [0.0, 8.0, 0.0]),
    ("LeftShoulder", Some(2), [4.0, 12.0, 0.0]),
    ("LeftArm", Some(5), [12.0, 0.0, 0.0]),
    ("LeftForeArm", Some(6), [26.0, 0.0, 0.0]),
    ("LeftHand", Some(7), [24.0, 0.0, 0.0]),
    ("RightShoulder", Some(2), [-4.0, 12.0, 0.0]),
    ("RightArm", Some(9), [-12.0, 0.0, 0.0]),
    ("RightForeArm", Some(10), [-26.0, 0.0, 0.0]),
    ("RightHand", Some(11), [-24.0, 0.0, 0.0]),
    ("LeftUpLeg", Some(0), [9.0, -4.0, 0.0]),
    ("LeftLeg", Some(13), [0.0, -40.0, 0.0]),
    ("LeftFoot", Some(14), [0.0, -40.0, 0.0]),
    ("RightUpLeg", Some(0), [-9.0, -4.0, 0.0]),
    ("RightLeg", Some(16), [0.0, -40.0, 0.0]),
    ("RightFoot", Some(17), [0.0, -40.0, 0.0]),
];

/// Hand-rolled writer so the file keeps ZYX channels and its own layout.
fn humanoid_bvh() -> String {
    let frames = 40;
    let mut rng = SplitMix64::new(5);
    let children = |i: usize| HUMANOID.iter().enumerate().filter(move |(_, j)| j.1 == Some(i)).map(|(c, _)| c);
    let leaves = [4usize, 8, 12, 15, 18];
    let channels = |i: usize| -> Vec<Channel> {
        let mut c = Vec::new();
        if i == 0 || i == 3 {
            c.extend([Channel::Xposition, Channel::Yposition, Channel::Zposition]);
        }
        c.extend([Channel::Zrotation, Channel::Yrotation, Channel::Xrotation]);
        c
    };
    let mut s = String::from("HIERARCHY\n");
    let mut order = Vec::new();
    fn emit(
        s: &mut String,
        order: &mut Vec<usize>,
        i: usize,
        depth: usize,
        children: &dyn Fn(usize) -> Vec<usize>,
        channels: &dyn Fn(usize) -> Vec<Channel>,
        leaves: &[usize],
    ) {
        let pad = "\t".repeat(depth);
        let (name, parent, off) = HUMANOID[i];
        let kw = if parent.is_none() { "ROOT" } else { "JOINT" };
        let _ = writeln!(s, "{pad}{kw} {name}\n{pad}{{\n{pad}\tOFFSET {} {} {}", off[0], off[1], off[2]);
        let ch = channels(i);
        let names: Vec<&str> = ch.iter().map(|c| c.name()).collect();
        let _ = writeln!(s, "{pad}\tCHANNELS {} {}", ch.len(), names.join(" "));
        order.push(i);
        for c in children(i) {
            emit(s, order, c, depth + 1, children, channels, leaves);
        }
        if leaves.contains(&i) {
            let _ = writeln!(s, "{pad}\tEnd Site\n{pad}\t{{\n{pad}\t\tOFFSET 0 6 0\n{pad}\t}}");
        }
        let _ = writeln!(s, "{pad}}}");
    }
    let kids = |i: usize| children(i).collect::<Vec<_>>();
    emit(&mut s, &mut order, 0, 0, &kids, &channels, &leaves);
    let _ = writeln!(s, "MOTION\nFrames: {frames}\nFrame Time: 0.0333333");
    let amps: Vec<f64> = (0..HUMANOID.len() * 6).map(|_| uniform(&mut rng, 2.0, 25.0)).collect();
    for t in 0..frames {
        let mut row = Vec::new();
        let mut k = 0;
        for &i in &order {
            for ch in channels(i) {
                let a = amps[k];
                k += 1;
                let phase = t as f64 * TAU / 40.0 + k as f64;
                let v = if ch.is_rotation() {
                    a * phase.sin()
                } else if i == 0 {
                    HUMANOID[0].2[ch.axis().index()] + 0.2 * a * phase.cos()
                } else {
                    0.05 * a * phase.sin()
                };
                row.push(format!("{v:.4}"));
            }
        }
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
    });
    let synthetic = dir.join("synthetic");
    write_set(&synthetic, "walk", walk_values);
    write_set(&synthetic, "reach", reach_values);
    fs::create_dir_all(dir.join("bvh")).expect("create bvh dir");
    fs::write(dir.join("bvh/humanoid.bvh"), humanoid_bvh()).expect("write humanoid");
    println!("fixtures written under {}", dir.display());
}

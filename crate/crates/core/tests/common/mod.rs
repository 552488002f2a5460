//! Shared generators and oracles for the integration tests.
#![allow(dead_code)]

pub mod session_ref;

use motionkit::formats::{clip_from_channels, ChannelMatrix};
use motionkit::rng::SplitMix64;
use motionkit::skeleton::default_channels;
use motionkit::{euler_to_quat, Axis, Channel, Joint, MotionClip, Pose, RotationOrder, Skeleton, Vec3};

pub struct Gen(pub SplitMix64);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(SplitMix64::new(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.below(n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.0.next_f64() < p
    }

    pub fn vec3(&mut self, r: f64) -> Vec3 {
        [self.uniform(-r, r), self.uniform(-r, r), self.uniform(-r, r)]
    }

    /// Euler angles with the middle angle kept away from gimbal lock.
    pub fn euler(&mut self) -> Vec3 {
        [self.uniform(-179.0, 179.0), self.uniform(-85.0, 85.0), self.uniform(-179.0, 179.0)]
    }

    pub fn order(&mut self) -> RotationOrder {
        RotationOrder::ALL[self.below(6)]
    }
}

pub struct SkeletonOptions {
    pub max_joints: usize,
    /// Allow non-root joints with position channels.
    pub translations: bool,
    /// Random rotation orders instead of the default ZXY.
    pub random_orders: bool,
}

fn channels_for(g: &mut Gen, is_root: bool, opts: &SkeletonOptions) -> Vec<Channel> {
    let order = if opts.random_orders { g.order() } else { RotationOrder::Zxy };
    let mut c = Vec::new();
    if is_root || (opts.translations && g.chance(0.2)) {
        c.extend(Axis::ALL.iter().map(|a| Channel::position(*a)));
    }
    c.extend(order.axes().iter().map(|a| Channel::rotation(*a)));
    c
}

/// Random tree in depth-first preorder. Every joint is a rotating joint or
/// an end site named `<parent>_end`; no joint has two end sites.
pub fn random_skeleton(g: &mut Gen, opts: &SkeletonOptions) -> Skeleton {
    let n = 1 + g.below(opts.max_joints);
    let mut joints = vec![Joint::new("j0", None, g.vec3(5.0), channels_for(g, true, opts))];
    let mut path = vec![0usize];
    let mut has_end = vec![false];
    for i in 1..n {
        let d = g.below(path.len());
        let parent = path[d];
        path.truncate(d + 1);
        if !has_end[parent] && g.chance(0.25) {
            has_end[parent] = true;
            has_end.push(true);
            let name = format!("{}_end", joints[parent].name);
            joints.push(Joint::end_site(name, parent, g.vec3(10.0)));
        } else {
            has_end.push(false);
            let ch = channels_for(g, false, opts);
            joints.push(Joint::new(format!("j{i}"), Some(parent), g.vec3(10.0), ch));
            path.push(i);
        }
    }
    Skeleton::new("j0", joints).expect("generator builds valid skeletons")
}

/// Random channel values: positions in [-100, 100], Euler angles from
/// [`Gen::euler`] in each joint's own channel order.
pub fn random_channels(g: &mut Gen, skeleton: &Skeleton, frames: usize) -> ChannelMatrix {
    let mut v = Vec::with_capacity(frames * skeleton.channel_count());
    for _ in 0..frames {
        for j in skeleton.joints() {
            let e = g.euler();
            let mut k = 0;
            for c in &j.channels {
                if c.is_rotation() {
                    v.push(e[k]);
                    k += 1;
                } else {
                    v.push(g.uniform(-100.0, 100.0));
                }
            }
        }
    }
    ChannelMatrix::new(frames, skeleton.channel_count(), v).unwrap()
}

pub fn random_clip(g: &mut Gen, skeleton: &Skeleton, frames: usize) -> MotionClip {
    let m = random_channels(g, skeleton, frames);
    let ft = [1.0 / 30.0, 1.0 / 60.0, 1.0 / 120.0, 0.0125][g.below(4)];
    clip_from_channels(skeleton, ft, &m, None).unwrap()
}

pub fn default_skeleton_chain(n: usize) -> Skeleton {
    let mut joints = vec![Joint::new("j0", None, [0.0; 3], default_channels(true))];
    for i in 1..n {
        joints.push(Joint::new(format!("j{i}"), Some(i - 1), [0.0, 1.0, 0.0], default_channels(false)));
    }
    Skeleton::new("j0", joints).unwrap()
}

type M4 = [[f64; 4]; 4];

fn mat_mul(a: &M4, b: &M4) -> M4 {
    let mut r = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    r
}

fn axis_m4(axis: Axis, deg: f64) -> M4 {
    let (s, c) = deg.to_radians().sin_cos();
    match axis {
        Axis::X => [[1.0, 0.0, 0.0, 0.0], [0.0, c, -s, 0.0], [0.0, s, c, 0.0], [0.0, 0.0, 0.0, 1.0]],
        Axis::Y => [[c, 0.0, s, 0.0], [0.0, 1.0, 0.0, 0.0], [-s, 0.0, c, 0.0], [0.0, 0.0, 0.0, 1.0]],
        Axis::Z => [[c, -s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
    }
}

fn translation_m4(t: Vec3) -> M4 {
    [[1.0, 0.0, 0.0, t[0]], [0.0, 1.0, 0.0, t[1]], [0.0, 0.0, 1.0, t[2]], [0.0, 0.0, 0.0, 1.0]]
}

/// Pose input for the FK oracle: Euler angles per animated joint in that
/// joint's channel order, plus translations.
pub struct EulerPose {
    pub root: Vec3,
    pub angles: Vec<Vec3>,
    pub joint_translations: Vec<Vec3>,
}

pub fn random_euler_pose(g: &mut Gen, skeleton: &Skeleton, with_translations: bool) -> EulerPose {
    let n = skeleton.animated_count();
    EulerPose {
        root: g.vec3(50.0),
        angles: (0..n).map(|_| g.euler()).collect(),
        joint_translations: if with_translations { (0..n).map(|_| g.vec3(3.0)).collect() } else { Vec::new() },
    }
}

/// The library pose for an [`EulerPose`], built through `euler_to_quat`.
pub fn to_pose(skeleton: &Skeleton, p: &EulerPose) -> Pose {
    let rotations = skeleton
        .joints()
        .iter()
        .filter(|j| !j.is_end_site)
        .zip(&p.angles)
        .map(|(j, a)| euler_to_quat(*a, j.rotation_order().unwrap()).unwrap())
        .collect();
    Pose { root_translation: p.root, rotations, joint_translations: p.joint_translations.clone() }
}

/// Global joint positions by chaining 4x4 homogeneous matrices:
/// `G_j = G_parent * T(offset + t_j) * R_a0 * R_a1 * R_a2`.
pub fn fk_oracle(skeleton: &Skeleton, p: &EulerPose) -> Vec<Vec3> {
    let mut globals: Vec<M4> = Vec::with_capacity(skeleton.len());
    let mut slot = 0;
    for j in skeleton.joints() {
        let mut local = if j.parent.is_none() {
            translation_m4([p.root[0] + j.offset[0], p.root[1] + j.offset[1], p.root[2] + j.offset[2]])
        } else {
            let t = if j.is_end_site || p.joint_translations.is_empty() {
                [0.0; 3]
            } else {
                p.joint_translations[slot]
            };
            translation_m4([j.offset[0] + t[0], j.offset[1] + t[1], j.offset[2] + t[2]])
        };
        if !j.is_end_site {
            let order = j.rotation_order().unwrap();
            for (axis, a) in order.axes().iter().zip(p.angles[slot]) {
                local = mat_mul(&local, &axis_m4(*axis, a));
            }
            slot += 1;
        }
        let g = match j.parent {
            None => local,
            Some(pi) => mat_mul(&globals[pi], &local),
        };
        globals.push(g);
    }
    globals.iter().map(|g| [g[0][3], g[1][3], g[2][3]]).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn configs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

mod common;

use std::collections::HashMap;

use common::{fixtures_dir, max_abs_diff, random_clip, random_skeleton, Gen, SkeletonOptions};
use motionkit::formats::{self, clip_to_channels, from_canonical, parse_amc, parse_asf, parse_bvh, to_canonical, write_bvh, Format};
use motionkit::{forward_kinematics, MotionClip, Skeleton};
use proptest::prelude::*;

const BVH_OPTS: SkeletonOptions = SkeletonOptions { max_joints: 30, translations: true, random_orders: false };

fn same_topology(a: &Skeleton, b: &Skeleton) -> bool {
    a.len() == b.len()
        && a.joints().iter().zip(b.joints()).all(|(x, y)| {
            x.name == y.name
                && x.parent == y.parent
                && x.channels == y.channels
                && x.is_end_site == y.is_end_site
                && max_abs_diff(&x.offset, &y.offset) <= 5e-7
        })
}

fn assert_bvh_round_trip(clip: &MotionClip) {
    let text = write_bvh(clip);
    let back = parse_bvh(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    assert!(same_topology(clip.skeleton(), back.skeleton()));
    assert_eq!(back.len(), clip.len());
    let a = clip_to_channels(clip);
    let b = clip_to_channels(&back);
    assert!(max_abs_diff(a.values(), b.values()) <= 1e-5);
    assert!((back.frame_time() - clip.frame_time()).abs() <= 5e-7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bvh_round_trip(seed in any::<u64>(), frames in 0usize..40) {
        let mut g = Gen::new(seed);
        let s = random_skeleton(&mut g, &BVH_OPTS);
        let clip = random_clip(&mut g, &s, frames);
        assert_bvh_round_trip(&clip);
    }

    #[test]
    fn canonical_round_trip_is_exact(seed in any::<u64>(), frames in 0usize..40) {
        let mut g = Gen::new(seed);
        let opts = SkeletonOptions { max_joints: 30, translations: false, random_orders: true };
        let s = random_skeleton(&mut g, &opts).with_default_channels();
        let clip = random_clip(&mut g, &s, frames).with_label(if seed % 2 == 0 { Some("walk".into()) } else { None });
        let back = from_canonical(&to_canonical(&clip)).unwrap();
        prop_assert_eq!(back, clip);
    }

    #[test]
    fn bvh_parser_never_panics(text in "\\PC{0,400}") {
        let _ = parse_bvh(&text);
    }
}

#[test]
fn writer_is_a_fixed_point_after_one_pass() {
    let clip = formats::load_clip(&fixtures_dir().join("bvh/humanoid.bvh"), None, None).unwrap();
    let first = write_bvh(&clip);
    let second = write_bvh(&parse_bvh(&first).unwrap());
    let third = write_bvh(&parse_bvh(&second).unwrap());
    assert_eq!(second, third);
}

#[test]
fn humanoid_fixture() {
    let clip = formats::load_clip(&fixtures_dir().join("bvh/humanoid.bvh"), None, None).unwrap();
    let s = clip.skeleton();
    assert_eq!(s.len(), 24);
    assert_eq!(s.animated_count(), 19);
    assert_eq!(s.channel_count(), 19 * 3 + 6);
    assert_eq!(clip.len(), 40);
    let neck = s.find("Neck").unwrap();
    assert!(s.joint(neck).has_translation());
    assert_eq!(s.joint(1).rotation_order(), Some(motionkit::RotationOrder::Zyx));
    // Converting to ZXY and back to channel values keeps the pose.
    let converted = parse_bvh(&write_bvh(&clip)).unwrap();
    for (a, b) in clip.frames().iter().zip(converted.frames()) {
        let fa = forward_kinematics(s, a).unwrap();
        let fb = forward_kinematics(converted.skeleton(), b).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            assert!(max_abs_diff(&x.position, &y.position) < 1e-4);
        }
    }
}

#[test]
fn asf_amc_matches_reference_positions() {
    let dir = fixtures_dir().join("asf");
    let clip = formats::load_clip(&dir.join("walk.amc"), None, None).unwrap();
    assert_eq!(clip.len(), 3);
    assert_eq!(clip.frame_time(), formats::DEFAULT_AMC_FRAME_TIME);
    let csv = std::fs::read_to_string(dir.join("cmu_style_fk.csv")).unwrap();
    let mut expected: HashMap<(usize, String), [f64; 3]> = HashMap::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let p = [f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap()];
        expected.insert((f[0].parse().unwrap(), f[1].to_string()), p);
    }
    let s = clip.skeleton();
    assert_eq!(expected.len(), 3 * s.len());
    for (fi, pose) in clip.frames().iter().enumerate() {
        let fk = forward_kinematics(s, pose).unwrap();
        for (j, t) in s.joints().iter().zip(&fk) {
            let e = expected[&(fi, j.name.clone())];
            assert!(max_abs_diff(&t.position, &e) < 1e-9, "frame {fi} joint {}: {:?} vs {e:?}", j.name, t.position);
        }
    }
}

#[test]
fn asf_fixture_structure() {
    let text = std::fs::read_to_string(fixtures_dir().join("asf/cmu_style.asf")).unwrap();
    let doc = parse_asf(&text).unwrap();
    assert_eq!(doc.bones.len(), 13);
    let s = &doc.skeleton;
    assert_eq!(s.name(), "cmu_style");
    for leaf in ["lfoot_end", "rtibia_end", "head_end", "lradius_end"] {
        assert!(s.joint(s.find(leaf).unwrap()).is_end_site, "{leaf}");
    }
    assert_eq!(s.joint(s.find("ltibia").unwrap()).parent, s.find("lfemur"));
    assert!(parse_amc("1\nlfemur 1 2\n", &doc, None).is_err());
}

#[test]
fn save_clip_picks_format_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let clip = formats::load_clip(&fixtures_dir().join("bvh/minimal.bvh"), None, None).unwrap();
    let json = dir.path().join("m.json");
    formats::save_clip(&json, &clip, None).unwrap();
    let back = formats::load_clip(&json, None, None).unwrap();
    assert_eq!(back, clip);
    assert!(formats::save_clip(&dir.path().join("m.amc"), &clip, None).is_err());
    assert!(formats::save_clip(&dir.path().join("m.txt"), &clip, None).is_err());
    let bvh = dir.path().join("m.txt");
    formats::save_clip(&bvh, &clip, Some(Format::Bvh)).unwrap();
    let fast = formats::load_clip(&bvh, Some(Format::Bvh), Some(120.0)).unwrap();
    assert_eq!(fast.frame_time(), 1.0 / 120.0);
}

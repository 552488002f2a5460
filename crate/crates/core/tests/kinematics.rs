mod common;

use common::{fk_oracle, max_abs_diff, random_euler_pose, random_skeleton, to_pose, Gen, SkeletonOptions};
use motionkit::{euler_to_quat, forward_kinematics, quat_mul, quat_to_euler, Rotation, RotationOrder};
use proptest::prelude::*;

proptest! {
    #[test]
    fn fk_matches_matrix_oracle(seed in any::<u64>(), translations in any::<bool>()) {
        let mut g = Gen::new(seed);
        let opts = SkeletonOptions { max_joints: 30, translations, random_orders: true };
        let s = random_skeleton(&mut g, &opts);
        let any_t = s.joints().iter().skip(1).any(|j| j.has_translation());
        let ep = random_euler_pose(&mut g, &s, any_t);
        let fk = forward_kinematics(&s, &to_pose(&s, &ep)).unwrap();
        let oracle = fk_oracle(&s, &ep);
        for (a, b) in fk.iter().zip(&oracle) {
            prop_assert!(max_abs_diff(&a.position, b) <= 1e-9);
        }
    }

    #[test]
    fn euler_round_trip_all_orders(a in -180.0f64..180.0, b in -88.9f64..88.9, c in -180.0f64..180.0, o in 0usize..6) {
        let order = RotationOrder::ALL[o];
        let q = euler_to_quat([a, b, c], order).unwrap();
        let back = quat_to_euler(q.wxyz(), order).unwrap();
        let q2 = euler_to_quat(back, order).unwrap();
        prop_assert!(q.angle_to(&q2).to_degrees() <= 1e-6);
    }

    #[test]
    fn quaternion_group_laws(a in -180.0f64..180.0, b in -89.0f64..89.0, c in -180.0f64..180.0, d in -180.0f64..180.0) {
        let q = euler_to_quat([a, b, c], RotationOrder::Xyz).unwrap();
        let r = euler_to_quat([d, c, b / 2.0], RotationOrder::Zyx).unwrap();
        prop_assert!(quat_mul(&Rotation::IDENTITY, &q).angle_to(&q) <= 1e-9);
        prop_assert!(quat_mul(&q, &Rotation::IDENTITY).angle_to(&q) <= 1e-9);
        prop_assert!(quat_mul(&q, &q.conjugate()).angle_to(&Rotation::IDENTITY) <= 1e-9);
        // Hamilton product written out, up to the sign of the double cover.
        let h = hamilton(q.wxyz(), r.wxyz());
        let m = quat_mul(&q, &r).wxyz();
        let s = if h[0] * m[0] + h[1] * m[1] + h[2] * m[2] + h[3] * m[3] < 0.0 { -1.0 } else { 1.0 };
        prop_assert!(max_abs_diff(&h.map(|v| v * s), &m) <= 1e-12);
    }
}

fn hamilton(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let [w1, x1, y1, z1] = a;
    let [w2, x2, y2, z2] = b;
    [
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ]
}

mod common;

use std::collections::BTreeMap;

use common::max_abs_diff;
use motionkit::dataset::{NormStats, WindowSet};
use motionkit::formats::canonical::fingerprint;
use motionkit::formats::{clip_from_channels, clip_to_channels, ChannelMatrix};
use motionkit::models::{self, evaluate, fit, fit_conditioned, rollout, sample, select_best, ArModel, ChannelCoefficients, EvalReport, Model, RIDGE_LAMBDA};
use motionkit::rng::Gaussian;
use motionkit::skeleton::default_channels;
use motionkit::{Error, Joint, Skeleton};
use proptest::prelude::*;

const COLS: usize = 6;

fn root_skeleton() -> Skeleton {
    Skeleton::new(
        "r",
        vec![Joint::new("r", None, [0.0; 3], default_channels(true)), Joint::end_site("r_end", 0, [0.0, 1.0, 0.0])],
    )
    .unwrap()
}

/// Windows where every channel follows `f(channel, window, t)`.
fn windows(n: usize, len: usize, label: Option<&str>, f: impl Fn(usize, usize, usize) -> f64) -> Vec<(ChannelMatrix, Option<String>)> {
    (0..n)
        .map(|w| {
            let v = (0..len).flat_map(|t| (0..COLS).map(move |c| (c, t))).map(|(c, t)| f(c, w, t)).collect();
            (ChannelMatrix::new(len, COLS, v).unwrap(), label.map(str::to_owned))
        })
        .collect()
}

fn set(seqs: Vec<(ChannelMatrix, Option<String>)>) -> WindowSet {
    WindowSet::from_sequences(root_skeleton(), seqs).unwrap()
}

/// Ridge normal equations for one channel solved by Gaussian elimination
/// with partial pivoting. Returns `[b, w_1, .., w_k]`.
fn oracle_fit(ws: &WindowSet, c: usize, k: usize) -> Vec<f64> {
    let n = k + 1;
    let mut a = vec![vec![0.0; n + 1]; n];
    for w in ws.windows() {
        for t in k..w.values.rows() {
            let mut x = vec![1.0];
            x.extend((1..=k).map(|i| w.values.get(t - i, c)));
            let y = w.values.get(t, c);
            for r in 0..n {
                for s in 0..n {
                    a[r][s] += x[r] * x[s];
                }
                a[r][n] += x[r] * y;
            }
        }
    }
    for (r, row) in a.iter_mut().enumerate() {
        row[r] += RIDGE_LAMBDA;
    }
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for s in col..=n {
                    a[r][s] -= f * a[col][s];
                }
            }
        }
    }
    (0..n).map(|r| a[r][n] / a[r][r]).collect()
}

fn sse(ws: &WindowSet, c: usize, ch: &ChannelCoefficients) -> f64 {
    let k = ch.coeffs.len();
    let mut s = 0.0;
    for w in ws.windows() {
        for t in k..w.values.rows() {
            let r = w.values.get(t, c) - ch.predict((1..=k).map(|i| w.values.get(t - i, c)));
            s += r * r;
        }
    }
    s
}

#[test]
fn recovers_noiseless_ar1() {
    let ws = set(windows(8, 20, None, |c, w, t| (1.0 + w as f64 + c as f64) * 0.5f64.powi(t as i32)));
    let m = fit(&ws, 1).unwrap();
    for (c, ch) in m.channels().iter().enumerate() {
        assert!((ch.coeffs[0] - 0.5).abs() < 1e-6, "{ch:?}");
        assert!(ch.intercept.abs() < 1e-6);
        let o = oracle_fit(&ws, c, 1);
        assert!((o[0] - ch.intercept).abs() < 1e-9 && (o[1] - ch.coeffs[0]).abs() < 1e-9);
    }
}

#[test]
fn recovers_sinusoid_ar2_identity() {
    let omega = 0.3;
    let ws = set(windows(6, 40, None, |c, w, t| (omega * t as f64 + 0.7 * w as f64 + c as f64).sin()));
    let m = fit(&ws, 2).unwrap();
    for (c, ch) in m.channels().iter().enumerate() {
        assert!((ch.coeffs[0] - 2.0 * omega.cos()).abs() < 1e-4, "{ch:?}");
        assert!((ch.coeffs[1] + 1.0).abs() < 1e-4);
        let o = oracle_fit(&ws, c, 2);
        assert!(max_abs_diff(&o[1..], &ch.coeffs) < 1e-6);
    }
}

#[test]
fn constant_signal_is_predicted_exactly() {
    let ws = set(windows(4, 10, None, |c, _, _| c as f64 * 0.25));
    let m = fit(&ws, 3).unwrap();
    for (c, ch) in m.channels().iter().enumerate() {
        let v = c as f64 * 0.25;
        assert!((ch.intercept + v * ch.coeffs.iter().sum::<f64>() - v).abs() < 1e-9);
    }
    let report = evaluate(&Model::Ar(m), &ws).unwrap();
    assert!(report.one_step_mse <= 1e-12, "{report:?}");
}

#[test]
fn fitted_coefficients_are_stationary() {
    let mut g = Gaussian::new(17);
    let mut data = Vec::new();
    for _ in 0..5 {
        let mut xs = vec![0.3, -0.2];
        for t in 2..200 {
            let x = 0.6 * xs[t - 1] - 0.3 * xs[t - 2] + 0.1 + 0.2 * g.sample();
            xs.push(x);
        }
        data.push(xs);
    }
    let ws = set(windows(5, 200, None, |c, w, t| data[w][t] * (1.0 + c as f64)));
    let m = fit(&ws, 2).unwrap();
    for (c, ch) in m.channels().iter().enumerate() {
        let base = sse(&ws, c, ch);
        for i in 0..=ch.coeffs.len() {
            for d in [1e-4, -1e-4] {
                let mut p = ch.clone();
                if i == 0 {
                    p.intercept += d;
                } else {
                    p.coeffs[i - 1] += d;
                }
                assert!(sse(&ws, c, &p) >= base, "channel {c} param {i} delta {d}");
            }
        }
    }
}

#[test]
fn fit_rejects_short_windows_and_zero_order() {
    let ws = set(windows(2, 3, None, |_, _, t| t as f64));
    assert!(matches!(fit(&ws, 3), Err(Error::InvalidArgument(_))));
    assert!(matches!(fit(&ws, 0), Err(Error::InvalidArgument(_))));
    let empty = set(Vec::new());
    assert!(matches!(fit(&empty, 1), Err(Error::InvalidArgument(_))));
}

fn two_label_set() -> WindowSet {
    let mut seqs = windows(4, 30, Some("walk"), |c, w, t| (0.4 * t as f64 + w as f64 + c as f64).sin());
    seqs.extend(windows(4, 30, Some("jump"), |c, w, t| (2.0 + w as f64 + c as f64) * 0.9f64.powi(t as i32)));
    set(seqs)
}

#[test]
fn conditioned_matches_per_group_fits() {
    let ws = two_label_set();
    let cm = fit_conditioned(&ws, 2).unwrap();
    assert_eq!(cm.labels().len(), 2);
    for (label, group) in ws.by_label() {
        assert_eq!(cm.labels()[&label], fit(&group, 2).unwrap());
    }
    assert_ne!(cm.labels()["walk"].channels(), cm.labels()["jump"].channels());
    assert_eq!(cm.fallback().unwrap(), &fit(&ws, 2).unwrap());
}

#[test]
fn single_label_fallback_equals_member() {
    let ws = set(windows(3, 20, Some("walk"), |c, w, t| (0.2 * t as f64 + w as f64 + c as f64).cos()));
    let cm = fit_conditioned(&ws, 2).unwrap();
    assert_eq!(cm.labels().len(), 1);
    assert_eq!(cm.labels()["walk"].channels(), cm.fallback().unwrap().channels());
    assert!(fit_conditioned(&set(windows(2, 20, None, |_, _, t| t as f64)), 1).is_err());
}

#[test]
fn label_resolution() {
    let ws = two_label_set();
    let cm = fit_conditioned(&ws, 1).unwrap();
    let m = Model::Conditioned(cm.clone());
    assert_eq!(m.resolve(Some("walk")).unwrap(), &cm.labels()["walk"]);
    assert_eq!(m.resolve(Some("swim")).unwrap(), cm.fallback().unwrap());
    let no_fallback = Model::Conditioned(models::ConditionedModel::new(cm.labels().clone(), None).unwrap());
    assert!(matches!(no_fallback.resolve(Some("swim")), Err(Error::InvalidArgument(_))));
    assert!(matches!(no_fallback.resolve(None), Err(Error::InvalidArgument(_))));
}

fn sinusoid_values(frames: usize, phase: f64) -> ChannelMatrix {
    let v = (0..frames)
        .flat_map(|t| (0..COLS).map(move |c| (c, t)))
        .map(|(c, t)| {
            let amp = if c < 3 { 5.0 } else { 30.0 };
            amp * (0.25 * t as f64 + phase + c as f64).sin()
        })
        .collect();
    ChannelMatrix::new(frames, COLS, v).unwrap()
}

#[test]
fn sample_continues_sinusoid() {
    let s = root_skeleton();
    let seqs = (0..5).map(|w| (sinusoid_values(40, w as f64 * 0.9), None)).collect();
    let m = Model::Ar(fit(&WindowSet::from_sequences(s.clone(), seqs).unwrap(), 2).unwrap());
    let truth = sinusoid_values(60, 0.33);
    let seed = clip_from_channels(&s, 1.0 / 30.0, &truth.slice_rows(0, 10), None).unwrap();
    let out = sample(&m, &seed, 50, 0.0, 1, None).unwrap();
    assert_eq!(out.len(), 50);
    let got = clip_to_channels(&out);
    assert!(max_abs_diff(got.values(), truth.slice_rows(10, 50).values()) < 1e-3);
    for p in out.frames() {
        p.check(&s).unwrap();
    }
}

#[test]
fn sampling_is_deterministic_and_checks_skeleton() {
    let s = root_skeleton();
    let seqs = (0..5).map(|w| (sinusoid_values(40, w as f64), None)).collect();
    let mut m = fit(&WindowSet::from_sequences(s.clone(), seqs).unwrap(), 2).unwrap();
    // give the model some noise to draw
    let chans = m.channels().iter().map(|c| ChannelCoefficients { noise_std: 0.5, ..c.clone() }).collect();
    m = ArModel::new(2, chans, m.skeleton_fingerprint(), m.norm().clone(), "t").unwrap();
    let model = Model::Ar(m);
    let seed = clip_from_channels(&s, 1.0 / 30.0, &sinusoid_values(5, 0.0), None).unwrap();
    let a = sample(&model, &seed, 30, 1.0, 99, None).unwrap();
    let b = sample(&model, &seed, 30, 1.0, 99, None).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample(&model, &seed, 30, 1.0, 100, None).unwrap());

    let other = common::default_skeleton_chain(2);
    let wrong = clip_from_channels(&other, 1.0 / 30.0, &ChannelMatrix::new(3, 9, vec![0.0; 27]).unwrap(), None).unwrap();
    assert!(matches!(sample(&model, &wrong, 5, 0.0, 0, None), Err(Error::InvalidArgument(_))));
    let short = clip_from_channels(&s, 1.0 / 30.0, &sinusoid_values(1, 0.0), None).unwrap();
    assert!(matches!(sample(&model, &short, 5, 0.0, 0, None), Err(Error::InvalidArgument(_))));
}

fn hand_model(w: f64, b: f64) -> ArModel {
    let ch = ChannelCoefficients { coeffs: vec![w], intercept: b, noise_std: 0.0 };
    ArModel::new(1, vec![ch; COLS], fingerprint(&root_skeleton()), NormStats::identity(COLS), "hand").unwrap()
}

#[test]
fn evaluation_metrics() {
    // perfect model on its own process
    let ws = set(windows(4, 20, None, |c, w, t| (1.0 + w as f64 + c as f64) * 0.5f64.powi(t as i32)));
    let r = evaluate(&Model::Ar(hand_model(0.5, 0.0)), &ws).unwrap();
    assert!(r.one_step_mse <= 1e-10 && r.joint_position_error <= 1e-9, "{r:?}");

    // identical predictions give zero position error
    let flat = set(windows(2, 5, None, |c, _, _| c as f64));
    let r = evaluate(&Model::Ar(hand_model(1.0, 0.0)), &flat).unwrap();
    assert_eq!((r.one_step_mse, r.joint_position_error), (0.0, 0.0));

    // zero model on white noise: mse close to the variance
    let mut g = Gaussian::new(3);
    let noise: Vec<f64> = (0..10_000 * COLS / COLS * COLS).map(|_| g.sample()).collect();
    let ws = set(windows(10, 1001, None, |c, w, t| noise[(w * 1000 + t.min(999)) * COLS % noise.len() + c]));
    let r = evaluate(&Model::Ar(hand_model(0.0, 0.0)), &ws).unwrap();
    assert!((r.one_step_mse - 1.0).abs() < 0.1, "{r:?}");

    assert!(matches!(evaluate(&Model::Ar(hand_model(0.5, 0.0)), &set(Vec::new())), Err(Error::InvalidArgument(_))));
    let other_norm = WindowSet::new(
        "x",
        root_skeleton(),
        NormStats { means: vec![1.0; COLS], stds: vec![1.0; COLS] },
        ws.windows().to_vec(),
        motionkit::dataset::SplitTag::Val,
    )
    .unwrap();
    assert!(evaluate(&Model::Ar(hand_model(0.5, 0.0)), &other_norm).is_err());
}

#[test]
fn per_label_breakdown() {
    let ws = two_label_set();
    let m = Model::Conditioned(fit_conditioned(&ws, 2).unwrap());
    let r = evaluate(&m, &ws).unwrap();
    assert_eq!(r.per_label.keys().collect::<Vec<_>>(), ["jump", "walk"]);
    assert!(r.per_label.values().all(|l| l.windows == 4 && l.one_step_mse >= 0.0));
}

fn report(mse: f64) -> EvalReport {
    EvalReport { one_step_mse: mse, joint_position_error: 0.0, per_label: BTreeMap::new() }
}

fn order_k(k: usize) -> Model {
    let ch = ChannelCoefficients { coeffs: vec![0.0; k], intercept: 0.0, noise_std: 0.0 };
    Model::Ar(ArModel::new(k, vec![ch; COLS], "fp", NormStats::identity(COLS), "x").unwrap())
}

#[test]
fn select_best_rules() {
    assert_eq!(select_best(&[(order_k(1), report(0.3))]).unwrap(), 0);
    let c = vec![(order_k(1), report(0.5)), (order_k(1), report(0.2)), (order_k(1), report(0.9))];
    assert_eq!(select_best(&c).unwrap(), 1);
    assert_eq!(select_best(&[(order_k(3), report(0.2)), (order_k(2), report(0.2))]).unwrap(), 1);
    assert_eq!(select_best(&[(order_k(2), report(0.2)), (order_k(2), report(0.2))]).unwrap(), 0);
    assert!(select_best(&[]).is_err());
}

#[test]
fn model_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ws = two_label_set();
    for m in [Model::Ar(fit(&ws, 2).unwrap()), Model::Conditioned(fit_conditioned(&ws, 3).unwrap())] {
        let p = dir.path().join(format!("{}.model", m.kind()));
        m.save(&p).unwrap();
        assert_eq!(Model::load(&p).unwrap(), m);
        let text = std::fs::read_to_string(&p).unwrap();
        std::fs::write(&p, &text[..text.len() - 20]).unwrap();
        assert!(matches!(Model::load(&p), Err(Error::Parse { .. })));
    }
}

#[test]
fn training_is_deterministic() {
    let ws = two_label_set();
    assert_eq!(fit_conditioned(&ws, 2).unwrap(), fit_conditioned(&ws, 2).unwrap());
}

proptest! {
    /// With sum |w_i| < 1 the recursion is a contraction in the max norm, so
    /// a noiseless rollout never leaves the seed envelope.
    #[test]
    fn stable_rollouts_stay_bounded(
        w in proptest::collection::vec(-1.0f64..1.0, 1..5),
        seed in proptest::collection::vec(-10.0f64..10.0, 4),
    ) {
        let total: f64 = w.iter().map(|v| v.abs()).sum();
        let w: Vec<f64> = w.iter().map(|v| v * 0.99 / total.max(1.0)).collect();
        let k = w.len();
        let ch = ChannelCoefficients { coeffs: w, intercept: 0.0, noise_std: 1.0 };
        let m = ArModel::new(k, vec![ch], "fp", NormStats::identity(1), "p").unwrap();
        let s = ChannelMatrix::new(k, 1, seed[..k].to_vec()).unwrap();
        let envelope = seed[..k].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let out = rollout(&m, &s, 1000, 0.0, 5).unwrap();
        prop_assert!(out.values().iter().all(|v| v.abs() <= envelope + 1e-12));
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Model;
use crate::dataset::WindowSet;
use crate::error::{Error, Result};
use crate::formats::canonical::fingerprint;
use crate::formats::channels::row_to_pose;
use crate::kinematics::forward_kinematics;
use crate::rotation::norm3;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub one_step_mse: f64,
    pub joint_position_error: f64,
    pub windows: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean squared one-step error in normalized units.
    pub one_step_mse: f64,
    /// Mean distance between predicted and true global joint positions.
    pub joint_position_error: f64,
    pub per_label: BTreeMap<String, LabelReport>,
}

#[derive(Default)]
struct Acc {
    sq: f64,
    values: usize,
    dist: f64,
    joints: usize,
    windows: usize,
}

impl Acc {
    fn add(&mut self, other: &Acc) {
        self.sq += other.sq;
        self.values += other.values;
        self.dist += other.dist;
        self.joints += other.joints;
        self.windows += other.windows;
    }

    fn mse(&self) -> f64 {
        self.sq / self.values.max(1) as f64
    }

    fn jpe(&self) -> f64 {
        self.dist / self.joints.max(1) as f64
    }
}

/// Teacher-forced one-step evaluation over every window.
pub fn evaluate(model: &Model, windows: &WindowSet) -> Result<EvalReport> {
    if windows.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty window set"));
    }
    let skeleton = windows.skeleton();
    if fingerprint(skeleton) != model.skeleton_fingerprint() {
        return Err(Error::invalid("window skeleton does not match the model's skeleton"));
    }
    let k = model.order();
    let len = windows.window_length().unwrap_or(0);
    if len < k + 1 {
        return Err(Error::invalid(format!("windows of {len} frames are too short for order {k}")));
    }
    let cols = skeleton.channel_count();
    let mut total = Acc::default();
    let mut per_label: BTreeMap<String, Acc> = BTreeMap::new();
    let mut pred = vec![0.0; cols];
    let mut truth = vec![0.0; cols];
    for w in windows.windows() {
        let ar = model.resolve(w.label.as_deref())?;
        if ar.norm() != windows.norm() {
            return Err(Error::invalid("windows were normalized with different statistics than the model"));
        }
        let m = &w.values;
        let mut acc = Acc { windows: 1, ..Acc::default() };
        for t in k..m.rows() {
            for (c, ch) in ar.channels().iter().enumerate() {
                pred[c] = ch.predict((1..=k).map(|i| m.get(t - i, c)));
                truth[c] = m.get(t, c);
                let d = pred[c] - truth[c];
                acc.sq += d * d;
            }
            acc.values += cols;
            windows.norm().denormalize_row(&mut pred);
            windows.norm().denormalize_row(&mut truth);
            let fp = forward_kinematics(skeleton, &row_to_pose(skeleton, &pred)?)?;
            let ft = forward_kinematics(skeleton, &row_to_pose(skeleton, &truth)?)?;
            for (a, b) in fp.iter().zip(&ft) {
                acc.dist += norm3([a.position[0] - b.position[0], a.position[1] - b.position[1], a.position[2] - b.position[2]]);
            }
            acc.joints += fp.len();
        }
        total.add(&acc);
        if let Some(l) = &w.label {
            per_label.entry(l.clone()).or_default().add(&acc);
        }
    }
    if !(total.mse().is_finite() && total.jpe().is_finite()) {
        return Err(Error::Numerical("evaluation produced non-finite errors".into()));
    }
    Ok(EvalReport {
        one_step_mse: total.mse(),
        joint_position_error: total.jpe(),
        per_label: per_label
            .into_iter()
            .map(|(l, a)| (l, LabelReport { one_step_mse: a.mse(), joint_position_error: a.jpe(), windows: a.windows }))
            .collect(),
    })
}

/// Index of the candidate with the lowest `one_step_mse`; ties go to the
/// lower order, then to the earlier candidate.
pub fn select_best(candidates: &[(Model, EvalReport)]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate models to select from"));
    }
    let best = candidates
        .iter()
        .enumerate()
        .min_by(|(i, (ma, ra)), (j, (mb, rb))| {
            ra.one_step_mse
                .total_cmp(&rb.one_step_mse)
                .then(ma.order().cmp(&mb.order()))
                .then(i.cmp(j))
        })
        .map(|(i, _)| i)
        .expect("nonempty");
    Ok(best)
}

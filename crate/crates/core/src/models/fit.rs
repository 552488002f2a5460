use std::collections::BTreeMap;

use super::{ArModel, ChannelCoefficients, ConditionedModel};
use crate::dataset::WindowSet;
use crate::error::{Error, Result};
use crate::formats::canonical::fingerprint;

/// Ridge damping added to every diagonal entry of the normal matrix.
pub const RIDGE_LAMBDA: f64 = 1e-8;

/// In-place Cholesky solve of `a x = b` for a symmetric positive-definite
/// `n x n` row-major matrix. Returns `None` when a pivot is not positive.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0 && d.is_finite()) {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(())
}

fn fit_channel(windows: &WindowSet, c: usize, k: usize) -> Result<ChannelCoefficients> {
    let n = k + 1;
    let mut ata = vec![0.0; n * n];
    let mut atb = vec![0.0; n];
    let mut feat = vec![0.0; n];
    feat[0] = 1.0;
    for w in windows.windows() {
        let m = &w.values;
        for t in k..m.rows() {
            for i in 1..=k {
                feat[i] = m.get(t - i, c);
            }
            let y = m.get(t, c);
            for r in 0..n {
                atb[r] += feat[r] * y;
                for s in 0..=r {
                    ata[r * n + s] += feat[r] * feat[s];
                }
            }
        }
    }
    for r in 0..n {
        for s in 0..r {
            ata[s * n + r] = ata[r * n + s];
        }
        ata[r * n + r] += RIDGE_LAMBDA;
    }
    let mut theta = atb;
    if cholesky_solve(&mut ata, &mut theta, n).is_none() || !theta.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical(format!("normal matrix for channel {c} is singular after ridge damping")));
    }

    let mut sq = 0.0;
    let mut count = 0usize;
    for w in windows.windows() {
        let m = &w.values;
        for t in k..m.rows() {
            let mut pred = theta[0];
            for i in 1..=k {
                pred += theta[i] * m.get(t - i, c);
            }
            let r = m.get(t, c) - pred;
            sq += r * r;
            count += 1;
        }
    }
    let noise_std = (sq / count as f64).sqrt();
    if !noise_std.is_finite() {
        return Err(Error::Numerical(format!("residuals for channel {c} are not finite")));
    }
    Ok(ChannelCoefficients { coeffs: theta[1..].to_vec(), intercept: theta[0], noise_std })
}

/// Least-squares AR(k) fit per channel over all windows.
pub fn fit(windows: &WindowSet, k: usize) -> Result<ArModel> {
    if k == 0 {
        return Err(Error::invalid("model order must be at least 1"));
    }
    let len = windows.window_length().ok_or_else(|| Error::invalid("cannot fit a model to zero windows"))?;
    if len < k + 1 {
        return Err(Error::invalid(format!("windows of {len} frames are too short for order {k}")));
    }
    let cols = windows.skeleton().channel_count();
    let channels = (0..cols).map(|c| fit_channel(windows, c, k)).collect::<Result<Vec<_>>>()?;
    ArModel::new(k, channels, fingerprint(windows.skeleton()), windows.norm().clone(), windows.name())
}

fn with_label(label: &str, e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("label `{label}`: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("label `{label}`: {m}")),
        other => other,
    }
}

/// One model per label plus a fallback fitted on every window in the set.
pub fn fit_conditioned(windows: &WindowSet, k: usize) -> Result<ConditionedModel> {
    let groups = windows.by_label();
    if groups.is_empty() {
        return Err(Error::invalid("no labelled windows to condition on"));
    }
    let mut labels = BTreeMap::new();
    for (label, set) in &groups {
        labels.insert(label.clone(), fit(set, k).map_err(|e| with_label(label, e))?);
    }
    let fallback = fit(windows, k)?;
    ConditionedModel::new(labels, Some(fallback))
}

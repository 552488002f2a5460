use super::{ArModel, Model};
use crate::error::{Error, Result};
use crate::formats::canonical::fingerprint;
use crate::formats::channels::{rotation_mask, unwrap_rotations};
use crate::formats::{clip_from_channels, clip_to_channels, ChannelMatrix};
use crate::rng::Gaussian;
use crate::skeleton::MotionClip;

/// Generates `n` frames after the last `k` rows of `seed` (normalized space).
///
/// Each step draws one standard normal per channel, in channel order, from
/// a generator seeded with `rng_seed`; the noise term is
/// `temperature * noise_std * g`.
pub fn rollout(model: &ArModel, seed: &ChannelMatrix, n: usize, temperature: f64, rng_seed: u64) -> Result<ChannelMatrix> {
    let k = model.order();
    let cols = model.channel_count();
    if seed.cols() != cols {
        return Err(Error::invalid(format!("seed has {} channels, model expects {cols}", seed.cols())));
    }
    if seed.rows() < k {
        return Err(Error::invalid(format!("need at least {k} seed frames, got {}", seed.rows())));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::invalid(format!("temperature must be finite and >= 0, got {temperature}")));
    }
    let mut rng = Gaussian::new(rng_seed);
    let mut buf: Vec<f64> = seed.slice_rows(seed.rows() - k, k).values().to_vec();
    buf.reserve(n * cols);
    for t in k..k + n {
        for (c, ch) in model.channels().iter().enumerate() {
            let history = (1..=k).map(|i| buf[(t - i) * cols + c]);
            let g = rng.sample();
            buf.push(ch.predict(history) + temperature * ch.noise_std * g);
        }
    }
    if let Some(pos) = buf.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("rollout diverged at frame {}", pos / cols - k)));
    }
    ChannelMatrix::new(n, cols, buf.split_off(k * cols))
}

/// Samples `n` new frames continuing `seed_clip`.
///
/// The last `k` frames of the seed clip prime the model; the returned clip
/// holds only the generated frames, with the seed clip's skeleton and frame
/// time and `label` attached.
pub fn sample(
    model: &Model,
    seed_clip: &MotionClip,
    n: usize,
    temperature: f64,
    rng_seed: u64,
    label: Option<&str>,
) -> Result<MotionClip> {
    let ar = model.resolve(label)?;
    let skeleton = seed_clip.skeleton();
    if fingerprint(skeleton) != ar.skeleton_fingerprint() {
        return Err(Error::invalid("seed clip skeleton does not match the model's skeleton"));
    }
    let mut seed = clip_to_channels(seed_clip);
    unwrap_rotations(&mut seed, &rotation_mask(skeleton));
    ar.norm().normalize(&mut seed);
    let mut out = rollout(ar, &seed, n, temperature, rng_seed)?;
    ar.norm().denormalize(&mut out);
    if out.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("denormalized samples are not finite".into()));
    }
    clip_from_channels(skeleton, seed_clip.frame_time(), &out, label.map(str::to_owned))
}

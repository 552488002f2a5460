use crate::rng::{shuffle, SplitMix64};

/// Number of validation items: `ceil(n * fraction)`, with a tiny tolerance so
/// that products like `10 * 0.7` land on the intended integer.
pub fn val_count(n: usize, val_fraction: f64) -> usize {
    if val_fraction <= 0.0 || n == 0 {
        return 0;
    }
    let x = n as f64 * val_fraction;
    ((x - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Sorts `items`, shuffles them with splitmix64-driven Fisher-Yates keyed by
/// `seed`, and returns `(train, val)` where val is the first
/// `ceil(n * val_fraction)` shuffled items.
pub fn split<T: Ord>(mut items: Vec<T>, val_fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    items.sort();
    shuffle(&mut items, &mut SplitMix64::new(seed));
    let k = val_count(items.len(), val_fraction);
    let train = items.split_off(k);
    (train, items)
}

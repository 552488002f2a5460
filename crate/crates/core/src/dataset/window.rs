use crate::formats::ChannelMatrix;

/// Windows of `length` frames starting at 0, stride, 2*stride, ... while the
/// window fits. Returns `(start, window)` pairs; short clips yield nothing.
pub fn window(frames: &ChannelMatrix, length: usize, stride: usize) -> Vec<(usize, ChannelMatrix)> {
    assert!(length >= 2 && stride >= 1, "window length >= 2 and stride >= 1");
    let mut out = Vec::new();
    let mut start = 0;
    while start + length <= frames.rows() {
        out.push((start, frames.slice_rows(start, length)));
        start += stride;
    }
    out
}

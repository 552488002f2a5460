//! Dataset descriptors, discovery, normalization and windowing.
//!
//! A dataset is loaded in four steps: [`discover`] lists clip files under the
//! descriptor's `data_path`, [`Dataset::load`] parses them into channel
//! matrices bound to one common skeleton, [`Dataset::split_clips`] assigns
//! whole clips to train or validation, and [`Dataset::prepare`] cuts windows,
//! computes [`NormStats`] over the training windows and normalizes both sides.

mod descriptor;
mod split;
mod stats;
mod window;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

pub use descriptor::DatasetDescriptor;
pub use split::{split, val_count};
pub use stats::{compute_stats, NormStats, STD_FLOOR};
pub use window::window;

use crate::error::{Error, Result};
use crate::formats::canonical::fingerprint;
use crate::formats::channels::{rotation_mask, unwrap_rotations};
use crate::formats::{self, clip_to_channels, AsfDocument, ChannelMatrix, Format};
use crate::skeleton::Skeleton;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DiscoveredFile {
    /// Path relative to `data_path`, `/`-separated; the sort key.
    pub rel_path: String,
    pub path: PathBuf,
    /// The `.asf` paired with an `.amc` file.
    pub skeleton_path: Option<PathBuf>,
    pub label: Option<String>,
}

fn rel_string(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

/// Recursively lists clip files for the descriptor's format, sorted by
/// relative path. Labels come from the first-level subdirectory via
/// `label_rule`. For ASF/AMC every `.amc` is paired with the unique `.asf`
/// in its directory.
pub fn discover(d: &DatasetDescriptor) -> Result<Vec<DiscoveredFile>> {
    let root = &d.data_path;
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory does not exist"),
        ));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.clone());
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() || Format::from_path(entry.path()) != Some(d.format) {
            continue;
        }
        let path = entry.path().to_path_buf();
        let rel_path = rel_string(root, &path);
        let label = match (&d.label_rule, rel_path.split_once('/')) {
            (Some(rule), Some((first, _))) => rule.get(first).cloned(),
            _ => None,
        };
        let skeleton_path = match d.format {
            Format::AsfAmc => Some(formats::companion_asf(&path)?),
            _ => None,
        };
        files.push(DiscoveredFile { rel_path, path, skeleton_path, label });
    }
    files.sort();
    Ok(files)
}

/// One clip as training data: channel values with rotation columns unwrapped.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedClip {
    pub rel_path: String,
    pub label: Option<String>,
    pub frame_time: f64,
    pub channels: ChannelMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Val,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub values: ChannelMatrix,
    pub label: Option<String>,
    /// Index of the source clip in [`Dataset::clips`].
    pub clip: usize,
    /// First frame of the window within that clip.
    pub start: usize,
}

/// Equal-shape windows over one skeleton, normalized with `norm`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSet {
    name: String,
    skeleton: Skeleton,
    norm: NormStats,
    windows: Vec<Window>,
    split: SplitTag,
}

impl WindowSet {
    pub fn new(name: impl Into<String>, skeleton: Skeleton, norm: NormStats, windows: Vec<Window>, split: SplitTag) -> Result<Self> {
        let cols = skeleton.channel_count();
        if norm.len() != cols {
            return Err(Error::invalid(format!("stats cover {} channels, skeleton has {cols}", norm.len())));
        }
        if let Some(first) = windows.first() {
            let rows = first.values.rows();
            if windows.iter().any(|w| w.values.rows() != rows || w.values.cols() != cols) {
                return Err(Error::invalid("windows differ in shape"));
            }
        }
        Ok(WindowSet { name: name.into(), skeleton, norm, windows, split })
    }

    /// Wraps already-normalized sequences with identity statistics.
    pub fn from_sequences(skeleton: Skeleton, sequences: Vec<(ChannelMatrix, Option<String>)>) -> Result<Self> {
        let norm = NormStats::identity(skeleton.channel_count());
        let windows = sequences
            .into_iter()
            .enumerate()
            .map(|(i, (values, label))| Window { values, label, clip: i, start: 0 })
            .collect();
        WindowSet::new("inline", skeleton, norm, windows, SplitTag::Train)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn norm(&self) -> &NormStats {
        &self.norm
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn window_length(&self) -> Option<usize> {
        self.windows.first().map(|w| w.values.rows())
    }

    pub fn labels(&self) -> Vec<String> {
        let mut l: Vec<String> = self.windows.iter().filter_map(|w| w.label.clone()).collect();
        l.sort();
        l.dedup();
        l
    }

    /// Labelled windows grouped per label, each group keeping this set's stats.
    pub fn by_label(&self) -> BTreeMap<String, WindowSet> {
        let mut groups: BTreeMap<String, Vec<Window>> = BTreeMap::new();
        for w in &self.windows {
            if let Some(l) = &w.label {
                groups.entry(l.clone()).or_default().push(w.clone());
            }
        }
        groups
            .into_iter()
            .map(|(label, windows)| {
                let set = WindowSet {
                    name: self.name.clone(),
                    skeleton: self.skeleton.clone(),
                    norm: self.norm.clone(),
                    windows,
                    split: self.split,
                };
                (label, set)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub descriptor: DatasetDescriptor,
    pub skeleton: Skeleton,
    pub clips: Vec<LoadedClip>,
}

/// Train/validation windows plus the statistics used to normalize them.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub stats: NormStats,
    pub train: WindowSet,
    pub val: WindowSet,
}

impl Dataset {
    pub fn load(descriptor: DatasetDescriptor) -> Result<Self> {
        descriptor.validate()?;
        let files = discover(&descriptor)?;
        if files.is_empty() {
            return Err(Error::invalid(format!(
                "no {} files under {}",
                descriptor.format,
                descriptor.data_path.display()
            )));
        }
        let frame_time = descriptor.frame_time_override();
        let mut asf_cache: HashMap<PathBuf, AsfDocument> = HashMap::new();
        let mut skeleton: Option<(Skeleton, String)> = None;
        let mut clips = Vec::with_capacity(files.len());
        for f in &files {
            let clip = match (&descriptor.format, &f.skeleton_path) {
                (Format::AsfAmc, Some(asf_path)) => {
                    if !asf_cache.contains_key(asf_path) {
                        asf_cache.insert(asf_path.clone(), formats::load_asf(asf_path)?);
                    }
                    let text = formats::read_text(&f.path)?;
                    formats::parse_amc(&text, &asf_cache[asf_path], frame_time)
                        .map_err(|e| Error::parse(f.path.display().to_string(), e))?
                }
                _ => formats::load_clip(&f.path, Some(descriptor.format), descriptor.fps_override)?,
            };
            let fp = fingerprint(clip.skeleton());
            match &skeleton {
                None => skeleton = Some((clip.skeleton().clone(), fp)),
                Some((_, expected)) if *expected != fp => {
                    return Err(Error::invalid(format!(
                        "{} uses a different skeleton from the first clip; retargeting is not supported",
                        f.rel_path
                    )))
                }
                Some(_) => {}
            }
            let mut channels = clip_to_channels(&clip);
            unwrap_rotations(&mut channels, &rotation_mask(clip.skeleton()));
            clips.push(LoadedClip {
                rel_path: f.rel_path.clone(),
                label: f.label.clone(),
                frame_time: clip.frame_time(),
                channels,
            });
        }
        let (skeleton, _) = skeleton.expect("at least one clip loaded");
        Ok(Dataset { descriptor, skeleton, clips })
    }

    pub fn from_config(path: &Path) -> Result<Self> {
        Dataset::load(DatasetDescriptor::load(path)?)
    }

    /// Clip indices for train and validation, split by relative path.
    pub fn split_clips(&self) -> (Vec<usize>, Vec<usize>) {
        let keyed: Vec<(&str, usize)> = self.clips.iter().enumerate().map(|(i, c)| (c.rel_path.as_str(), i)).collect();
        let (train, val) = split(keyed, self.descriptor.val_fraction, self.descriptor.split_seed);
        (train.into_iter().map(|(_, i)| i).collect(), val.into_iter().map(|(_, i)| i).collect())
    }

    /// Raw (unnormalized) windows of the given clips, in the given clip order.
    pub fn raw_windows(&self, clips: &[usize]) -> Vec<Window> {
        let d = &self.descriptor;
        let mut out = Vec::new();
        for &ci in clips {
            let clip = &self.clips[ci];
            if clip.channels.rows() < d.window_length {
                log::warn!(
                    "skipping {}: {} frames is shorter than the {}-frame window",
                    clip.rel_path,
                    clip.channels.rows(),
                    d.window_length
                );
                continue;
            }
            for (start, values) in window(&clip.channels, d.window_length, d.window_stride) {
                out.push(Window { values, label: clip.label.clone(), clip: ci, start });
            }
        }
        out
    }

    pub fn prepare(&self) -> Result<PreparedData> {
        let (train_clips, val_clips) = self.split_clips();
        let mut train = self.raw_windows(&train_clips);
        let mut val = self.raw_windows(&val_clips);
        if train.is_empty() {
            return Err(Error::invalid("the training split produced no windows"));
        }
        let cols = self.skeleton.channel_count();
        let stats = if self.descriptor.normalize {
            compute_stats(&train.iter().map(|w| &w.values).collect::<Vec<_>>())?
        } else {
            NormStats::identity(cols)
        };
        for w in train.iter_mut().chain(val.iter_mut()) {
            stats.normalize(&mut w.values);
        }
        let name = self.descriptor.name.clone();
        Ok(PreparedData {
            train: WindowSet::new(name.clone(), self.skeleton.clone(), stats.clone(), train, SplitTag::Train)?,
            val: WindowSet::new(name, self.skeleton.clone(), stats.clone(), val, SplitTag::Val)?,
            stats,
        })
    }
}

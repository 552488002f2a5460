//! Mocap file formats and the conversions between them.

pub mod amc;
pub mod asf;
pub mod bvh;
pub mod canonical;
pub mod channels;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use amc::{parse_amc, DEFAULT_AMC_FRAME_TIME};
pub use asf::{parse_asf, AsfBone, AsfDocument};
pub use bvh::{parse_bvh, write_bvh};
pub use canonical::{from_canonical, to_canonical};
pub use channels::{clip_from_channels, clip_to_channels, ChannelMatrix};

use crate::error::{Error, Result};
use crate::skeleton::MotionClip;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Bvh,
    #[serde(rename = "asfamc")]
    AsfAmc,
    Canonical,
}

impl Format {
    /// Clip file extensions recognised for this format.
    pub fn extensions(self) -> &'static [&'static str] {
        match self {
            Format::Bvh => &["bvh"],
            Format::AsfAmc => &["amc"],
            Format::Canonical => &["json"],
        }
    }

    pub fn from_path(path: &Path) -> Option<Format> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        [Format::Bvh, Format::AsfAmc, Format::Canonical].into_iter().find(|f| f.extensions().contains(&ext.as_str()))
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Bvh => "bvh",
            Format::AsfAmc => "asfamc",
            Format::Canonical => "canonical",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bvh" => Ok(Format::Bvh),
            "asfamc" | "amc" => Ok(Format::AsfAmc),
            "canonical" | "json" => Ok(Format::Canonical),
            _ => Err(Error::invalid(format!("unknown format `{s}` (expected bvh, asfamc or canonical)"))),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// The single `.asf` file in the directory of an `.amc` file.
pub fn companion_asf(amc: &Path) -> Result<PathBuf> {
    let dir = amc.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path();
        if p.is_file() && p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("asf")) {
            found.push(p);
        }
    }
    match found.len() {
        1 => Ok(found.pop().expect("one element")),
        0 => Err(Error::invalid(format!("no .asf skeleton next to {}", amc.display()))),
        n => Err(Error::invalid(format!("{n} .asf files next to {}; expected exactly one", amc.display()))),
    }
}

pub fn load_asf(path: &Path) -> Result<AsfDocument> {
    parse_asf(&read_text(path)?).map_err(|e| Error::parse(path.display().to_string(), e))
}

/// Loads a clip, choosing the parser from `format` or the file extension.
/// AMC files are paired with the unique `.asf` in their directory.
pub fn load_clip(path: &Path, format: Option<Format>, fps: Option<f64>) -> Result<MotionClip> {
    let format = format
        .or_else(|| Format::from_path(path))
        .ok_or_else(|| Error::invalid(format!("cannot tell the format of {}", path.display())))?;
    let frame_time = match fps {
        Some(f) if f.is_finite() && f > 0.0 => Some(1.0 / f),
        Some(f) => return Err(Error::invalid(format!("fps must be positive, got {f}"))),
        None => None,
    };
    let text = read_text(path)?;
    let name = path.display().to_string();
    let clip = match format {
        Format::Bvh => parse_bvh(&text).map_err(|e| Error::parse(&name, e))?,
        Format::Canonical => from_canonical(&text).map_err(|e| Error::parse(&name, e))?,
        Format::AsfAmc => {
            let asf = load_asf(&companion_asf(path)?)?;
            return parse_amc(&text, &asf, frame_time).map_err(|e| Error::parse(&name, e));
        }
    };
    match frame_time {
        Some(t) => clip.with_frame_time(t),
        None => Ok(clip),
    }
}

pub fn render_clip(clip: &MotionClip, format: Format) -> Result<String> {
    match format {
        Format::Bvh => Ok(write_bvh(clip)),
        Format::Canonical => Ok(to_canonical(clip)),
        Format::AsfAmc => Err(Error::invalid("writing ASF/AMC is not supported")),
    }
}

pub fn save_clip(path: &Path, clip: &MotionClip, format: Option<Format>) -> Result<()> {
    let format = format
        .or_else(|| Format::from_path(path))
        .ok_or_else(|| Error::invalid(format!("cannot tell the format of {}", path.display())))?;
    let text = render_clip(clip, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

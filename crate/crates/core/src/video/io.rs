use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{Frame, FrameSource, KeyframeSet, Result, VideoError};

/// A directory of sequentially numbered PNG frames, decoded lazily.
///
/// Files are ordered by the first run of digits in their stem, so both
/// `frame_9.png, frame_10.png` and zero-padded names sort correctly.
#[derive(Debug, Clone)]
pub struct FrameDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

fn frame_number(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse().ok()
}

impl FrameDir {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let io_err = |source| VideoError::Io { path: root.clone(), source };
        let mut files: Vec<PathBuf> = fs::read_dir(&root)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png"))
            })
            .collect();
        files.sort_by(|a, b| {
            frame_number(a)
                .cmp(&frame_number(b))
                .then_with(|| a.file_name().cmp(&b.file_name()))
        });
        Ok(Self { root, files })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}

fn load_png(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)
        .map_err(|source| VideoError::Image { path: path.to_path_buf(), source })?
        .to_rgb8())
}

impl FrameSource for FrameDir {
    fn len(&self) -> usize {
        self.files.len()
    }

    fn frame(&self, index: usize) -> Result<RgbImage> {
        load_png(&self.files[index])
    }

    fn source_id(&self) -> String {
        self.root
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("frames")
            .to_string()
    }
}

/// One line of a keyframe manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub source_index: usize,
    /// Relative to the manifest's directory.
    pub path: String,
}

pub const MANIFEST_NAME: &str = "keyframes.jsonl";

/// Writes `keyframe_NNNN.png` per keyframe plus the manifest into `dir`.
/// The manifest is written last, through a rename, so a failed export never
/// leaves a partial manifest behind.
pub fn write_keyframes(keys: &KeyframeSet, dir: &Path) -> Result<PathBuf> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| VideoError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut lines = String::new();
    for (pos, frame) in keys.frames().iter().enumerate() {
        let name = format!("keyframe_{:04}.png", pos + 1);
        let path = dir.join(&name);
        frame
            .image
            .save(&path)
            .map_err(|source| VideoError::Image { path: path.clone(), source })?;
        let record = ManifestRecord { source_index: frame.index, path: name };
        lines.push_str(&serde_json::to_string(&record).expect("record serializes"));
        lines.push('\n');
    }
    let manifest = dir.join(MANIFEST_NAME);
    let tmp = dir.join(format!(".{MANIFEST_NAME}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(lines.as_bytes()).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, &manifest).map_err(io_err(&manifest))?;
    Ok(manifest)
}

/// Loads a manifest and its referenced PNGs back into a [`KeyframeSet`].
pub fn read_manifest(path: &Path) -> Result<KeyframeSet> {
    let file = fs::File::open(path).map_err(|source| VideoError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut frames = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| VideoError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(&line).map_err(|e| VideoError::Manifest {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        frames.push(Frame::new(record.source_index, load_png(&base.join(&record.path))?)?);
    }
    let id = base
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("manifest")
        .to_string();
    KeyframeSet::new(id, frames).map_err(|e| match e {
        VideoError::EmptyInput => VideoError::Manifest {
            path: path.to_path_buf(),
            line: 0,
            message: "manifest lists no keyframes".into(),
        },
        other => other,
    })
}

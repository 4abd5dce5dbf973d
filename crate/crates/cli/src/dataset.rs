use std::path::{Path, PathBuf};

use hemoforge_core::imaging::{decode_image, resize_bilinear, RasterImage};
use hemoforge_core::model::LWCNN_INPUT;
use hemoforge_core::watershed::BinaryMask;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub path: PathBuf,
    pub class_id: usize,
    pub mask: Option<PathBuf>,
}

/// Images of a `<root>/<ClassName>/<image>` tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    pub root: PathBuf,
    /// Class names in byte-wise order; the position is the class id.
    pub classes: Vec<String>,
    pub entries: Vec<IndexEntry>,
    /// Non-image files that were ignored.
    pub skipped: usize,
}

impl DatasetIndex {
    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.class_id).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for e in &self.entries {
            counts[e.class_id] += 1;
        }
        counts
    }
}

pub(crate) fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}

fn sorted_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|r| r.map(|d| d.path()).map_err(|e| CliError::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.file_name().map(|n| n.as_encoded_bytes()).cmp(&b.file_name().map(|n| n.as_encoded_bytes())));
    Ok(out)
}

/// Sibling mask tree: `<root>-masks`.
pub fn mask_root(root: &Path) -> PathBuf {
    let mut name = root.file_name().unwrap_or_default().to_os_string();
    name.push("-masks");
    root.with_file_name(name)
}

pub fn ingest(root: &Path) -> Result<DatasetIndex> {
    let masks = mask_root(root);
    let mut classes = Vec::new();
    let mut entries = Vec::new();
    let mut skipped = 0;
    for dir in sorted_dir(root)?.into_iter().filter(|p| p.is_dir()) {
        let name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let class_id = classes.len();
        let before = entries.len();
        for file in sorted_dir(&dir)? {
            if file.is_file() && is_image(&file) {
                let stem = file.file_stem().unwrap_or_default();
                let mask = masks.join(&name).join(stem).with_extension("png");
                entries.push(IndexEntry {
                    path: file,
                    class_id,
                    mask: mask.is_file().then_some(mask),
                });
            } else {
                skipped += 1;
            }
        }
        if entries.len() == before {
            log::warn!("class directory {} holds no images", dir.display());
        }
        classes.push(name);
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} non-image file(s) under {}", root.display());
    }
    if classes.is_empty() {
        return Err(CliError::NoClassDirectories(root.to_path_buf()));
    }
    if entries.is_empty() {
        return Err(CliError::EmptyDataset(root.to_path_buf()));
    }
    Ok(DatasetIndex {
        root: root.to_path_buf(),
        classes,
        entries,
        skipped,
    })
}

/// Every image file below `dir` (or `dir` itself if it is a file), in path order.
pub fn collect_images(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut out = Vec::new();
    for p in sorted_dir(dir)? {
        if p.is_dir() {
            out.extend(collect_images(&p)?);
        } else if is_image(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Three-channel version of an image; gray is replicated.
pub fn to_rgb(img: &RasterImage) -> Result<RasterImage> {
    let img = img.to_byte();
    match img.channels() {
        3 => Ok(img),
        1 => {
            let bytes = img.as_bytes().expect("byte depth");
            let data = bytes.iter().flat_map(|&v| [v, v, v]).collect();
            Ok(RasterImage::from_bytes(img.width(), img.height(), 3, data)?)
        }
        c => Err(CliError::Config(format!("unsupported channel count {c}"))),
    }
}

/// Classifier input: the crop centered on a zero square canvas, then resized to 64x64.
pub fn classifier_input(crop: &RasterImage) -> Result<RasterImage> {
    let crop = to_rgb(crop)?;
    let (w, h) = (crop.width(), crop.height());
    let side = w.max(h);
    let (ox, oy) = ((side - w) / 2, (side - h) / 2);
    let src = crop.as_bytes().expect("byte depth");
    let mut data = vec![0u8; side * side * 3];
    for y in 0..h {
        let row = &src[y * w * 3..(y + 1) * w * 3];
        let at = ((y + oy) * side + ox) * 3;
        data[at..at + w * 3].copy_from_slice(row);
    }
    let square = RasterImage::from_bytes(side, side, 3, data)?;
    if side == LWCNN_INPUT {
        Ok(square)
    } else {
        Ok(resize_bilinear(&square, LWCNN_INPUT, LWCNN_INPUT)?)
    }
}

pub fn load_image(path: &Path) -> Result<RasterImage> {
    decode_image(path).map_err(|e| CliError::from(e).at(path))
}

/// Mask image as foreground bits (any nonzero sample of the first channel), resized with
/// a half-level threshold when the size differs.
pub fn load_mask(path: &Path, width: usize, height: usize) -> Result<BinaryMask> {
    let img = load_image(path)?.to_byte();
    let img = if (img.width(), img.height()) == (width, height) {
        img
    } else {
        resize_bilinear(&img, width, height)?
    };
    let c = img.channels();
    let bytes = img.as_bytes().expect("byte depth");
    Ok(BinaryMask::new(width, height, bytes.iter().step_by(c).map(|&v| v >= 128).collect()))
}

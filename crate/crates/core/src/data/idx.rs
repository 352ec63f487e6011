//! IDX (MNIST-family) reader.
//!
//! Image files: magic `0x00000803`, then big-endian u32 count, rows, cols,
//! then `count × rows × cols` unsigned bytes. Label files: magic
//! `0x00000801`, u32 count, then `count` unsigned bytes. Pixels are scaled by
//! 1/255 and each image is flattened row-major.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::Format(format!("truncated IDX header reading {what}")))
}

/// Parses in-memory IDX image and label payloads.
///
/// Returns the dataset and the `(rows, cols)` image shape.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<(Dataset, (usize, usize))> {
    let magic = be_u32(images, 0, "image magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "image file magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"
        )));
    }
    let count = be_u32(images, 4, "image count")? as usize;
    let rows = be_u32(images, 8, "row count")? as usize;
    let cols = be_u32(images, 12, "column count")? as usize;
    let pixels = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let body = &images[16..];
    if body.len() != pixels {
        return Err(Error::Format(format!(
            "image payload has {} bytes, header promises {pixels}",
            body.len()
        )));
    }

    let lmagic = be_u32(labels, 0, "label magic")?;
    if lmagic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "label file magic {lmagic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"
        )));
    }
    let lcount = be_u32(labels, 4, "label count")? as usize;
    if lcount != count {
        return Err(Error::Format(format!("{count} images but {lcount} labels")));
    }
    let lbody = &labels[8..];
    if lbody.len() != lcount {
        return Err(Error::Format(format!(
            "label payload has {} bytes, header promises {lcount}",
            lbody.len()
        )));
    }

    let mut distinct: Vec<u8> = lbody.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let ids = lbody
        .iter()
        .map(|b| distinct.binary_search(b).expect("present"))
        .collect();
    let features = Matrix::from_vec(
        count,
        rows * cols,
        body.iter().map(|&b| f64::from(b) / 255.0).collect(),
    )?;
    let mut ds = Dataset::new("idx", features, Some(ids))?;
    ds.label_names = Some(distinct.iter().map(|d| d.to_string()).collect());
    Ok((ds, (rows, cols)))
}

pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(Dataset, (usize, usize))> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let images = std::fs::read(ip).map_err(|e| Error::io(ip, e))?;
    let labels = std::fs::read(lp).map_err(|e| Error::io(lp, e))?;
    let (mut ds, shape) = parse_idx(&images, &labels)?;
    if let Some(stem) = ip.file_stem() {
        ds.name = stem.to_string_lossy().into_owned();
    }
    Ok((ds, shape))
}

/// Centres a single-channel `height × width` image on a zero canvas of
/// `target_h × target_w` and copies it into three channels. Output is
/// flattened height-major with the channel innermost.
pub fn pad_and_replicate(
    image: &[f64],
    height: usize,
    width: usize,
    target_h: usize,
    target_w: usize,
) -> Result<Vec<f64>> {
    if image.len() != height * width {
        return Err(Error::shape(
            "pad_and_replicate",
            format!("{} pixels for a {height}x{width} image", image.len()),
        ));
    }
    if target_h < height || target_w < width {
        return Err(Error::Config(format!(
            "target {target_h}x{target_w} is smaller than source {height}x{width}"
        )));
    }
    let top = (target_h - height) / 2;
    let left = (target_w - width) / 2;
    let mut out = vec![0.0; target_h * target_w * 3];
    for r in 0..height {
        for c in 0..width {
            let v = image[r * width + c];
            let base = ((r + top) * target_w + (c + left)) * 3;
            out[base..base + 3].fill(v);
        }
    }
    Ok(out)
}

pub fn pad_and_replicate_dataset(
    dataset: &Dataset,
    height: usize,
    width: usize,
    target_h: usize,
    target_w: usize,
) -> Result<Dataset> {
    let mut data = Vec::with_capacity(dataset.len() * target_h * target_w * 3);
    for row in dataset.features.iter_rows() {
        data.extend(pad_and_replicate(row, height, width, target_h, target_w)?);
    }
    let features = Matrix::from_vec(dataset.len(), target_h * target_w * 3, data)?;
    let mut out = Dataset::new(dataset.name.clone(), features, dataset.labels.clone())?;
    out.label_names = dataset.label_names.clone();
    Ok(out)
}

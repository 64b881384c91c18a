//! Big-endian IDX files (MNIST / Fashion-MNIST distribution format).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dataset;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::parse(path, offset as u64, "truncated header"))
}

/// Parses an IDX image/label file pair; pixels are scaled to `[0, 1]`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images = fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let labels = fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    parse_idx(&images, images_path, &labels, labels_path)
}

pub(crate) fn parse_idx(images: &[u8], images_path: &Path, labels: &[u8], labels_path: &Path) -> Result<Dataset> {
    let magic = read_u32(images, 0, images_path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::parse(
            images_path,
            0,
            format!("bad magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}"),
        ));
    }
    let count = read_u32(images, 4, images_path)? as usize;
    let rows = read_u32(images, 8, images_path)? as usize;
    let cols = read_u32(images, 12, images_path)? as usize;
    let pixels = rows * cols;
    let body = &images[16..];
    if body.len() < count * pixels {
        return Err(Error::parse(
            images_path,
            images.len() as u64,
            format!("truncated: {count} images of {pixels} pixels need {} bytes", 16 + count * pixels),
        ));
    }

    let magic = read_u32(labels, 0, labels_path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::parse(
            labels_path,
            0,
            format!("bad magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}"),
        ));
    }
    let label_count = read_u32(labels, 4, labels_path)? as usize;
    if label_count != count {
        return Err(Error::parse(
            labels_path,
            4,
            format!("label count {label_count} does not match image count {count}"),
        ));
    }
    let label_body = &labels[8..];
    if label_body.len() < count {
        return Err(Error::parse(
            labels_path,
            labels.len() as u64,
            format!("truncated: {count} labels need {} bytes", 8 + count),
        ));
    }

    let features = body[..count * pixels].iter().map(|&b| f64::from(b) / 255.0).collect();
    let labels: Vec<usize> = label_body[..count].iter().map(|&b| usize::from(b)).collect();
    let classes = labels.iter().max().map_or(1, |&m| m + 1).max(10);
    let name = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    Dataset::new(name, features, pixels, labels, classes)
}


#[cfg(test)]
mod tests {
    use super::fixtures::encode;
    use super::*;

    fn paths() -> (&'static Path, &'static Path) {
        (Path::new("img.idx"), Path::new("lab.idx"))
    }

    #[test]
    fn two_image_round_trip() {
        let (img, lab) = encode(&[vec![0, 255, 51, 102], vec![255, 0, 0, 204]], 2, 2, &[7, 3]);
        let (ip, lp) = paths();
        let d = parse_idx(&img, ip, &lab, lp).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 4);
        assert_eq!(d.row(0), &[0.0, 1.0, 0.2, 0.4]);
        assert_eq!(d.row(1), &[1.0, 0.0, 0.0, 0.8]);
        assert_eq!(d.labels(), &[7, 3]);
    }

    #[test]
    fn bad_magic_names_offset_zero() {
        let (mut img, lab) = encode(&[vec![1, 2]], 1, 2, &[0]);
        img[3] = 0x01;
        let (ip, lp) = paths();
        let err = parse_idx(&img, ip, &lab, lp).unwrap_err();
        assert!(matches!(err, Error::Parse { offset: 0, .. }), "{err}");
    }

    #[test]
    fn truncated_images() {
        let (img, lab) = encode(&[vec![1, 2], vec![3, 4]], 1, 2, &[0, 1]);
        let (ip, lp) = paths();
        let err = parse_idx(&img[..img.len() - 1], ip, &lab, lp).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn count_mismatch() {
        let (img, _) = encode(&[vec![1, 2], vec![3, 4]], 1, 2, &[0, 1]);
        let (_, lab) = encode(&[], 1, 2, &[0, 1, 2]);
        let (ip, lp) = paths();
        let err = parse_idx(&img, ip, &lab, lp).unwrap_err();
        assert!(err.to_string().contains("does not match"), "{err}");
    }
}

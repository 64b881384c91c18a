//! CIFAR-10 binary batches: 3073-byte records of one label byte followed by
//! 3072 pixel bytes (R, G, B planes of 32 × 32).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dataset;

pub const RECORD_BYTES: usize = 3073;
pub const PIXELS: usize = 3072;

pub fn load_cifar_bin<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        append_records(&bytes, path, &mut features, &mut labels)?;
    }
    if labels.is_empty() {
        return Err(Error::Config("no CIFAR records supplied".into()));
    }
    Dataset::new("cifar10", features, PIXELS, labels, 10)
}

pub(crate) fn append_records(bytes: &[u8], path: &Path, features: &mut Vec<f64>, labels: &mut Vec<usize>) -> Result<()> {
    if !bytes.len().is_multiple_of(RECORD_BYTES) {
        let complete = bytes.len() / RECORD_BYTES * RECORD_BYTES;
        return Err(Error::parse(
            path,
            complete as u64,
            format!("file length {} is not a multiple of {RECORD_BYTES}", bytes.len()),
        ));
    }
    for (r, record) in bytes.chunks_exact(RECORD_BYTES).enumerate() {
        let label = usize::from(record[0]);
        if label >= 10 {
            return Err(Error::parse(path, (r * RECORD_BYTES) as u64, format!("label {label} ≥ 10")));
        }
        labels.push(label);
        features.extend(record[1..].iter().map(|&b| f64::from(b) / 255.0));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record_round_trip() {
        let mut rec = vec![6u8];
        rec.extend((0..PIXELS).map(|i| (i % 256) as u8));
        let (mut f, mut l) = (Vec::new(), Vec::new());
        append_records(&rec, Path::new("b.bin"), &mut f, &mut l).unwrap();
        let d = Dataset::new("c", f, PIXELS, l, 10).unwrap();
        assert_eq!(d.labels(), &[6]);
        for (i, &v) in d.row(0).iter().enumerate() {
            assert_eq!(v, ((i % 256) as f64) / 255.0);
        }
    }

    #[test]
    fn truncated_file_reports_position() {
        let rec = vec![0u8; RECORD_BYTES * 2 - 10];
        let err = append_records(&rec, Path::new("b.bin"), &mut Vec::new(), &mut Vec::new()).unwrap_err();
        assert!(matches!(err, Error::Parse { offset, .. } if offset == RECORD_BYTES as u64), "{err}");
    }
}

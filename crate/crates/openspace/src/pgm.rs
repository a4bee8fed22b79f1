//! Binary portable graymap (P5) export of label masks.

use std::io::Write;
use std::path::Path;

use openspace_core::simulate::{IGNORE, NOT_OPEN, OPEN};

use crate::error::{Error, Result};

/// Grey level for a label: open 255, not-open 128, everything else 0.
pub fn gray_level(label: u8) -> u8 {
    match label {
        OPEN => 255,
        NOT_OPEN => 128,
        _ => 0,
    }
}

/// Encodes an `h × w` row-major mask as a P5 image.
pub fn encode_pgm(mask: &[u8], h: usize, w: usize) -> Result<Vec<u8>> {
    if mask.len() != h * w {
        return Err(Error::InvalidRecord(format!(
            "mask of {} cells does not fill {h}x{w}",
            mask.len()
        )));
    }
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(mask.iter().map(|&l| gray_level(l)));
    Ok(out)
}

/// Prediction as shown next to its ground truth: cells ignored in `gt` are
/// ignored in the image too.
pub fn masked_prediction(pred: &[u8], gt: &[u8]) -> Vec<u8> {
    pred.iter()
        .zip(gt)
        .map(|(&p, &g)| if g == IGNORE { IGNORE } else { p })
        .collect()
}

pub fn write_pgm(path: &Path, mask: &[u8], h: usize, w: usize) -> Result<()> {
    let bytes = encode_pgm(mask, h, w)?;
    let mut f = std::fs::File::create(path).map_err(Error::io(path))?;
    f.write_all(&bytes).map_err(Error::io(path))
}

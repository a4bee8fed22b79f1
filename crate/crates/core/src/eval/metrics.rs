use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use crate::error::{Error, Result};
use crate::numerics::{Real, Tensor};
use crate::simulate::{IGNORE, NOT_OPEN, OPEN};

/// Binary confusion counts; rows are ground truth, columns prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
    pub ignored: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IouReport {
    pub per_class: [f64; 2],
    pub mean: f64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum::<u64>() + self.ignored
    }

    pub fn evaluated(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Per-class `TP / (TP + FP + FN)` and their mean. A class absent from
    /// both prediction and ground truth scores 1.
    pub fn iou(&self) -> Result<IouReport> {
        if self.evaluated() == 0 {
            return Err(Error::EmptyConfusion);
        }
        let mut per_class = [0.0; 2];
        for (c, slot) in per_class.iter_mut().enumerate() {
            let tp = self.counts[c][c];
            let fp = self.counts[1 - c][c];
            let fn_ = self.counts[c][1 - c];
            let union = tp + fp + fn_;
            *slot = if union == 0 { 1.0 } else { tp as f64 / union as f64 };
        }
        Ok(IouReport {
            per_class,
            mean: (per_class[0] + per_class[1]) / 2.0,
        })
    }

    pub fn mean_iou(&self) -> Result<f64> {
        self.iou().map(|r| r.mean)
    }

    /// Pixel accuracy over evaluated cells.
    pub fn accuracy(&self) -> Result<f64> {
        let n = self.evaluated();
        if n == 0 {
            return Err(Error::EmptyConfusion);
        }
        Ok((self.counts[0][0] + self.counts[1][1]) as f64 / n as f64)
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, rhs: Self) {
        for r in 0..2 {
            for c in 0..2 {
                self.counts[r][c] += rhs.counts[r][c];
            }
        }
        self.ignored += rhs.ignored;
    }
}

impl Add for ConfusionMatrix {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

/// Counts `(gt, pred)` pairs; cells whose ground truth is [`IGNORE`] are
/// only tallied in `ignored`.
pub fn confusion(pred: &[u8], gt: &[u8]) -> Result<ConfusionMatrix> {
    if pred.len() != gt.len() {
        return Err(Error::shape("confusion", &[gt.len()], &[pred.len()]));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &g) in pred.iter().zip(gt) {
        if g == IGNORE {
            cm.ignored += 1;
            continue;
        }
        if !matches!(g, NOT_OPEN | OPEN) || !matches!(p, NOT_OPEN | OPEN) {
            return Err(Error::invalid(alloc::format!("non-binary label pair ({g}, {p})")));
        }
        cm.counts[g as usize][p as usize] += 1;
    }
    Ok(cm)
}

/// Per-pixel arg-max over the channel axis of NHWC logits (ties → lower class).
pub fn argmax_labels<T: Real>(logits: &Tensor<T>) -> Result<Vec<u8>> {
    if logits.ndim() != 4 {
        return Err(Error::shape("logits", &[0, 0, 0, 2], logits.shape()));
    }
    let c = logits.shape()[3];
    Ok(logits
        .data()
        .chunks_exact(c)
        .map(|row| {
            let mut best = 0;
            for (i, v) in row.iter().enumerate().skip(1) {
                if *v > row[best] {
                    best = i;
                }
            }
            best as u8
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn perfect_prediction() {
        let gt = [0, 1, 1, 0, 255];
        let cm = confusion(&[0, 1, 1, 0, 1], &gt).unwrap();
        assert_eq!(cm.counts, [[2, 0], [0, 2]]);
        assert_eq!(cm.ignored, 1);
        assert_eq!(cm.mean_iou().unwrap(), 1.0);
        assert_eq!(cm.total(), 5);
    }

    #[test]
    fn all_ignore_is_empty() {
        let cm = confusion(&[0, 1, 1], &[255; 3]).unwrap();
        assert_eq!(cm.counts, [[0, 0], [0, 0]]);
        assert_eq!(cm.ignored, 3);
        assert_eq!(cm.mean_iou(), Err(Error::EmptyConfusion));
    }

    #[test]
    fn hand_enumerated_case() {
        let cm = confusion(&[0, 1, 1, 0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(cm.counts, [[1, 1], [1, 1]]);
        let r = cm.iou().unwrap();
        assert_eq!(r.per_class, [1.0 / 3.0, 1.0 / 3.0]);
        assert!((r.mean - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn everything_predicted_open() {
        let cm = confusion(&[1, 1, 1, 1], &[0, 0, 1, 1]).unwrap();
        let r = cm.iou().unwrap();
        assert_eq!(r.per_class, [0.0, 0.5]);
        assert_eq!(r.mean, 0.25);
    }

    #[test]
    fn absent_class_scores_one() {
        let cm = confusion(&[1, 1], &[1, 1]).unwrap();
        assert_eq!(cm.iou().unwrap().per_class, [1.0, 1.0]);
    }

    #[test]
    fn rejects_shape_mismatch_and_bad_labels() {
        assert!(matches!(confusion(&[0, 1], &[0]), Err(Error::ShapeMismatch { .. })));
        assert!(confusion(&[2], &[0]).is_err());
    }

    #[test]
    fn argmax_picks_largest_channel() {
        let t = Tensor::new(&[1, 1, 3, 2], vec![0.0f32, 1.0, 2.0, -1.0, 0.5, 0.5]).unwrap();
        assert_eq!(argmax_labels(&t).unwrap(), vec![1, 0, 0]);
    }
}

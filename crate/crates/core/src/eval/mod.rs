//! Segmentation metrics, the published reference results and throughput
//! measurement.

#[cfg(feature = "std")]
mod bench;
mod metrics;
mod reference;

#[cfg(feature = "std")]
pub use bench::{benchmark_fps, hardware_descriptor, FpsReport};
pub use metrics::{argmax_labels, confusion, ConfusionMatrix, IouReport};
pub use reference::{reference_mean_iou, reference_table, TableRow, TABLE_ROWS};

//! Dataset container, training loop and command-line operations for radar
//! open-space segmentation, built on `openspace-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod container;
pub mod dataset;
pub mod error;
pub mod kv;
pub mod manifest;
pub mod pgm;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::ExperimentConfig;
pub use container::{read_container, write_container, FrameRecord, Payload, PayloadData, PayloadKind};
pub use dataset::{build_synthetic_dataset, load_split, DatasetOptions, SplitData};
pub use error::{Error, Result};
pub use manifest::{DatasetManifest, Split};
pub use train::{train, Model, TrainOptions, TrainReport};

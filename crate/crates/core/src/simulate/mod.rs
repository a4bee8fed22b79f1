//! Synthetic parking-lot scenes, LFMCW TDM-MIMO frame synthesis and
//! analytic open-space ground truth.

mod config;
mod geometry;
mod mask;
mod scene;
mod synth;

pub use config::{default_config, RadarConfig, SPEED_OF_LIGHT};
pub use geometry::{in_wedge, Footprint, OpenRegion, Point2};
pub use mask::{
    ground_truth_mask, CartesianGrid, GridGeometry, LabelDomain, Mask, PolarGrid, IGNORE,
    NOT_OPEN, OPEN,
};
pub use scene::{make_parking_scene, ParkingLot, Scatterer, Scene};
pub use synth::{predict_bins, synthesize_frame, BinTriple, ScaCube};

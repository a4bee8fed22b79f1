//! Cube processing chain: SCA → RDA → RA → DoA, plus the RAD network input,
//! label-domain transfer and input normalization.

mod cube;
mod maps;
mod modality;
mod normalize;

pub use cube::{sca_to_rda, RdaCube, Window};
pub use maps::{mask_to_polar, ra_to_doa, rad_input, rda_to_ra, DoaMap, RaMap};
pub use modality::Modality;
pub use normalize::{normalize, NormStats, RunningStats};

use crate::models::Arch;
use crate::pipeline::Modality;
use crate::simulate::LabelDomain;

/// One row of the published mean-IoU table (percent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub input: Modality,
    pub labels: LabelDomain,
    pub fcn_tiny: f64,
    pub fcn: f64,
    pub deeplab: f64,
}

impl TableRow {
    pub fn get(&self, arch: Arch) -> f64 {
        match arch {
            Arch::FcnTiny => self.fcn_tiny,
            Arch::Fcn => self.fcn,
            Arch::DeepLabV3Plus => self.deeplab,
        }
    }

    /// Input and labels share a grid.
    pub fn same_domain(&self) -> bool {
        self.input.native_domain() == self.labels
    }
}

/// Published results on real recordings, row order as reported.
pub const TABLE_ROWS: [TableRow; 5] = [
    row(Modality::Rad, LabelDomain::Polar, 83.61, 83.76, 82.88),
    row(Modality::Rad, LabelDomain::Cartesian, 73.24, 78.05, 73.92),
    row(Modality::Ra, LabelDomain::Polar, 81.99, 82.59, 81.14),
    row(Modality::Ra, LabelDomain::Cartesian, 77.96, 78.24, 77.22),
    row(Modality::Doa, LabelDomain::Cartesian, 79.00, 80.75, 78.05),
];

const fn row(input: Modality, labels: LabelDomain, fcn_tiny: f64, fcn: f64, deeplab: f64) -> TableRow {
    TableRow {
        input,
        labels,
        fcn_tiny,
        fcn,
        deeplab,
    }
}

pub fn reference_table() -> &'static [TableRow; 5] {
    &TABLE_ROWS
}

/// Published mean-IoU for one cell, if that pairing was reported.
pub fn reference_mean_iou(input: Modality, labels: LabelDomain, arch: Arch) -> Option<f64> {
    TABLE_ROWS
        .iter()
        .find(|r| r.input == input && r.labels == labels)
        .map(|r| r.get(arch))
}

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::config::RadarConfig;
use super::geometry::Point2;
use super::scene::Scene;
use crate::error::{Error, Result};

pub const NOT_OPEN: u8 = 0;
pub const OPEN: u8 = 1;
pub const IGNORE: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelDomain {
    Polar,
    Cartesian,
}

/// Bird's-eye grid in the sensor frame. Rows run along boresight (+x) from
/// the sensor outwards, columns across it from −`y_half` to +`y_half`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianGrid {
    pub rows: usize,
    pub cols: usize,
    pub x_max: f64,
    pub y_half: f64,
}

impl CartesianGrid {
    pub const DEFAULT: CartesianGrid = CartesianGrid {
        rows: 128,
        cols: 128,
        x_max: 15.0,
        y_half: 10.65,
    };

    pub fn cell_size(&self) -> (f64, f64) {
        (self.x_max / self.rows as f64, 2.0 * self.y_half / self.cols as f64)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point2 {
        let (dx, dy) = self.cell_size();
        Point2::new((row as f64 + 0.5) * dx, -self.y_half + (col as f64 + 0.5) * dy)
    }

    /// Cell containing `p`, if inside the grid.
    pub fn locate(&self, p: Point2) -> Option<(usize, usize)> {
        let (dx, dy) = self.cell_size();
        let r = (p.x / dx).floor();
        let c = ((p.y + self.y_half) / dy).floor();
        if r < 0.0 || c < 0.0 || r >= self.rows as f64 || c >= self.cols as f64 {
            None
        } else {
            Some((r as usize, c as usize))
        }
    }
}

/// Range × azimuth grid of the cropped RA map.
///
/// Azimuth comes from a zero-padded FFT of length `n_az`; bin `b` sits at
/// `sin(az) = 2·(b − n_az/2)/n_az`. Bins `crop_lo..=crop_hi` cover the FOV;
/// they are laid out from column `pad_lo` onwards and the remaining columns
/// up to `width` repeat the edge bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub n_range: usize,
    pub range_res: f64,
    pub n_az: usize,
    pub crop_lo: usize,
    pub crop_hi: usize,
    pub pad_lo: usize,
    pub width: usize,
}

impl PolarGrid {
    /// Azimuth FFT length (8 virtual channels zero-padded).
    pub const AZIMUTH_FFT: usize = 64;

    pub fn from_config(cfg: &RadarConfig) -> Self {
        Self::with_azimuth_bins(cfg, Self::AZIMUTH_FFT)
    }

    pub fn with_azimuth_bins(cfg: &RadarConfig, n_az: usize) -> Self {
        let center = n_az / 2;
        // floor keeps every retained bin inside the FOV
        let half = (n_az as f64 * cfg.half_fov().sin() / 2.0 + 1e-9).floor() as usize;
        let cropped = 2 * half + 1;
        // width rounded up to a multiple of 16 so three stride-2 stages divide it
        let width = cropped.div_ceil(16) * 16;
        Self {
            n_range: cfg.n_samples,
            range_res: cfg.range_res,
            n_az,
            crop_lo: center - half,
            crop_hi: center + half,
            pad_lo: (width - cropped) / 2,
            width,
        }
    }

    pub fn cropped_bins(&self) -> usize {
        self.crop_hi - self.crop_lo + 1
    }

    /// Azimuth FFT bin shown in `col`, with padding columns clamped to the
    /// edge bins.
    pub fn column_bin(&self, col: usize) -> usize {
        let b = self.crop_lo as i64 + col as i64 - self.pad_lo as i64;
        b.clamp(self.crop_lo as i64, self.crop_hi as i64) as usize
    }

    pub fn bin_sin(&self, bin: usize) -> f64 {
        2.0 * (bin as f64 - (self.n_az / 2) as f64) / self.n_az as f64
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point2 {
        let range = row as f64 * self.range_res;
        let s = self.bin_sin(self.column_bin(col));
        Point2::new(range * (1.0 - s * s).sqrt(), range * s)
    }

    /// Continuous (row, column) coordinates of a Cartesian point.
    pub fn coords_of(&self, p: Point2) -> (f64, f64) {
        let r = p.norm();
        let s = if r > 0.0 { p.y / r } else { 0.0 };
        let bin = (self.n_az / 2) as f64 + s * self.n_az as f64 / 2.0;
        (r / self.range_res, bin - self.crop_lo as f64 + self.pad_lo as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridGeometry {
    Polar(PolarGrid),
    Cartesian(CartesianGrid),
}

impl GridGeometry {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            GridGeometry::Polar(g) => (g.n_range, g.width),
            GridGeometry::Cartesian(g) => (g.rows, g.cols),
        }
    }

    pub fn domain(&self) -> LabelDomain {
        match self {
            GridGeometry::Polar(_) => LabelDomain::Polar,
            GridGeometry::Cartesian(_) => LabelDomain::Cartesian,
        }
    }
}

/// Per-cell labels: [`OPEN`], [`NOT_OPEN`] or [`IGNORE`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub labels: Vec<u8>,
    pub geometry: GridGeometry,
}

impl Mask {
    pub fn new(labels: Vec<u8>, geometry: GridGeometry) -> Result<Self> {
        let (h, w) = geometry.dims();
        if labels.len() != h * w {
            return Err(Error::shape("mask", &[h, w], &[labels.len()]));
        }
        if let Some(v) = labels.iter().find(|v| !matches!(**v, NOT_OPEN | OPEN | IGNORE)) {
            return Err(Error::invalid(alloc::format!("invalid mask label {v}")));
        }
        Ok(Self { labels, geometry })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.geometry.dims()
    }

    pub fn domain(&self) -> LabelDomain {
        self.geometry.domain()
    }

    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.dims().1 + col]
    }
}

/// Analytic labels: a cell is open iff its centre is in the FOV and the
/// sensor-to-centre ray crosses no car. Cartesian cells outside the wedge
/// are ignored; every polar cell is inside the cropped FOV by construction.
pub fn ground_truth_mask(scene: &Scene, geometry: GridGeometry) -> Mask {
    let region = &scene.open_region;
    let (h, w) = geometry.dims();
    let mut labels = Vec::with_capacity(h * w);
    for row in 0..h {
        for col in 0..w {
            let label = match geometry {
                GridGeometry::Cartesian(g) => {
                    let p = g.cell_center(row, col);
                    if !region.in_fov(p) {
                        IGNORE
                    } else if region.is_free(p) {
                        OPEN
                    } else {
                        NOT_OPEN
                    }
                }
                GridGeometry::Polar(g) => {
                    if region.is_free(g.cell_center(row, col)) {
                        OPEN
                    } else {
                        NOT_OPEN
                    }
                }
            };
            labels.push(label);
        }
    }
    Mask { labels, geometry }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{default_config, Footprint};

    #[test]
    fn polar_grid_layout() {
        let g = PolarGrid::from_config(&default_config());
        assert_eq!((g.crop_lo, g.crop_hi, g.cropped_bins()), (10, 54, 45));
        assert_eq!((g.width, g.pad_lo), (48, 1));
        assert_eq!(g.column_bin(0), 10);
        assert_eq!(g.column_bin(1), 10);
        assert_eq!(g.column_bin(23), 32);
        assert_eq!(g.column_bin(45), 54);
        assert_eq!(g.column_bin(47), 54);
        assert!(g.bin_sin(g.crop_hi) <= core::f64::consts::FRAC_1_SQRT_2);
        assert!(g.bin_sin(g.crop_hi + 1) > core::f64::consts::FRAC_1_SQRT_2);
        let (r, c) = g.coords_of(Point2::new(6.0, 0.0));
        assert!((r - 50.0).abs() < 1e-9 && (c - 23.0).abs() < 1e-12);
    }

    #[test]
    fn cartesian_locate_inverts_center() {
        let g = CartesianGrid::DEFAULT;
        for &(r, c) in &[(0, 0), (5, 100), (127, 127), (64, 3)] {
            assert_eq!(g.locate(g.cell_center(r, c)), Some((r, c)));
        }
        assert_eq!(g.locate(Point2::new(-0.1, 0.0)), None);
        assert_eq!(g.locate(Point2::new(1.0, 10.7)), None);
    }

    #[test]
    fn empty_scene_all_open_in_fov() {
        let cfg = default_config();
        let scene = Scene::empty(&cfg, 0);
        let m = ground_truth_mask(&scene, GridGeometry::Cartesian(CartesianGrid::DEFAULT));
        let g = CartesianGrid::DEFAULT;
        for row in 0..128 {
            for col in 0..128 {
                let p = g.cell_center(row, col);
                let outside = p.y.abs() > p.x || p.norm() > 15.0;
                assert_eq!(m.at(row, col), if outside { IGNORE } else { OPEN });
            }
        }
        let pm = ground_truth_mask(&scene, GridGeometry::Polar(PolarGrid::from_config(&cfg)));
        assert!(pm.labels.iter().all(|&v| v == OPEN));
    }

    #[test]
    fn cells_behind_a_car_are_not_open() {
        let cfg = default_config();
        let mut scene = Scene::empty(&cfg, 0);
        scene
            .open_region
            .footprints
            .push(Footprint::rect(Point2::new(6.0, 0.0), 2.0, 2.0, 0.0));
        let g = CartesianGrid::DEFAULT;
        let m = ground_truth_mask(&scene, GridGeometry::Cartesian(g));
        let (near, _) = g.locate(Point2::new(3.0, 0.1)).unwrap();
        let (far, col) = g.locate(Point2::new(10.0, 0.1)).unwrap();
        assert_eq!(m.at(near, col), OPEN);
        assert_eq!(m.at(far, col), NOT_OPEN);
        let pg = PolarGrid::from_config(&cfg);
        let pm = ground_truth_mask(&scene, GridGeometry::Polar(pg));
        assert_eq!(pm.at(50, 23), NOT_OPEN);
        assert_eq!(pm.at(20, 23), OPEN);
        assert_eq!(pm.at(100, 23), NOT_OPEN);
    }

    #[test]
    fn mask_validation() {
        let g = GridGeometry::Cartesian(CartesianGrid { rows: 2, cols: 2, x_max: 1.0, y_half: 1.0 });
        assert!(Mask::new(alloc::vec![0, 1, 255, 0], g).is_ok());
        assert!(Mask::new(alloc::vec![0, 1, 2, 0], g).is_err());
        assert!(Mask::new(alloc::vec![0, 1], g).is_err());
    }
}

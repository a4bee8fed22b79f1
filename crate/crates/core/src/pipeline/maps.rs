use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::cube::RdaCube;
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::simulate::{
    in_wedge, CartesianGrid, GridGeometry, Mask, PolarGrid, RadarConfig, IGNORE, NOT_OPEN,
};

/// Log-domain range × azimuth map on the cropped polar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RaMap {
    pub data: Tensor<f32>,
    pub grid: PolarGrid,
}

/// Cartesian bird's-eye power map; cells outside the FOV hold `fill`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaMap {
    pub data: Tensor<f32>,
    pub grid: CartesianGrid,
    pub fill: f32,
}

fn check_grid(rda: &RdaCube, grid: &PolarGrid) -> Result<()> {
    let (nr, _, na) = rda.dims();
    if nr != grid.n_range || na != grid.n_az {
        return Err(Error::shape("rda vs polar grid", &[grid.n_range, grid.n_az], &[nr, na]));
    }
    Ok(())
}

/// Doppler-summed magnitudes, `ln(Σ + epsilon)`, cropped to the FOV bins.
pub fn rda_to_ra(rda: &RdaCube, grid: &PolarGrid, epsilon: f64) -> Result<RaMap> {
    check_grid(rda, grid)?;
    let (nr, nd, na) = rda.dims();
    let src = rda.data.data();
    let mut out = Vec::with_capacity(nr * grid.width);
    for r in 0..nr {
        for col in 0..grid.width {
            let a = grid.column_bin(col);
            let sum: f64 = (0..nd).map(|d| src[(r * nd + d) * na + a] as f64).sum();
            out.push((sum + epsilon).ln() as f32);
        }
    }
    Ok(RaMap {
        data: Tensor::new(&[nr, grid.width], out)?,
        grid: *grid,
    })
}

/// Per-Doppler log power on the cropped polar grid, laid out
/// `[range, azimuth, doppler]` so Doppler becomes the channel axis.
pub fn rad_input(rda: &RdaCube, grid: &PolarGrid, epsilon: f64) -> Result<Tensor<f32>> {
    check_grid(rda, grid)?;
    let (nr, nd, na) = rda.dims();
    let src = rda.data.data();
    let mut out = Vec::with_capacity(nr * grid.width * nd);
    for r in 0..nr {
        for col in 0..grid.width {
            let a = grid.column_bin(col);
            for d in 0..nd {
                out.push((src[(r * nd + d) * na + a] as f64 + epsilon).ln() as f32);
            }
        }
    }
    Tensor::new(&[nr, grid.width, nd], out)
}

fn bilinear(data: &[f32], rows: usize, cols: usize, r: f64, c: f64) -> f32 {
    let r = r.clamp(0.0, (rows - 1) as f64);
    let c = c.clamp(0.0, (cols - 1) as f64);
    let r0 = (r.floor() as usize).min(rows.saturating_sub(2));
    let c0 = (c.floor() as usize).min(cols.saturating_sub(2));
    let (fr, fc) = (r - r0 as f64, c - c0 as f64);
    let at = |i: usize, j: usize| data[i.min(rows - 1) * cols + j.min(cols - 1)] as f64;
    let top = at(r0, c0) * (1.0 - fc) + at(r0, c0 + 1) * fc;
    let bottom = at(r0 + 1, c0) * (1.0 - fc) + at(r0 + 1, c0 + 1) * fc;
    (top * (1.0 - fr) + bottom * fr) as f32
}

/// Polar-to-Cartesian resampling: bilinear in (range bin, azimuth column)
/// at each in-FOV cell centre, `fill` elsewhere.
pub fn ra_to_doa(ra: &RaMap, grid: &CartesianGrid, cfg: &RadarConfig, fill: f32) -> DoaMap {
    let (rows, cols) = (ra.data.shape()[0], ra.data.shape()[1]);
    let half = cfg.half_fov();
    let mut out = Vec::with_capacity(grid.rows * grid.cols);
    for i in 0..grid.rows {
        for j in 0..grid.cols {
            let p = grid.cell_center(i, j);
            if in_wedge(p, half, cfg.max_range) {
                let (r, c) = ra.grid.coords_of(p);
                out.push(bilinear(ra.data.data(), rows, cols, r, c));
            } else {
                out.push(fill);
            }
        }
    }
    DoaMap {
        data: Tensor::new(&[grid.rows, grid.cols], out).expect("grid dims are positive"),
        grid: *grid,
        fill,
    }
}

/// Nearest-neighbour transfer of Cartesian labels onto the polar grid.
/// Polar cells whose centre falls on an ignored (or off-grid) Cartesian
/// cell take the label of the closest labelled cell instead.
pub fn mask_to_polar(mask: &Mask, polar: &PolarGrid) -> Result<Mask> {
    let GridGeometry::Cartesian(cart) = mask.geometry else {
        return Err(Error::invalid("mask_to_polar expects a Cartesian mask"));
    };
    let (dx, dy) = cart.cell_size();
    let mut labels = Vec::with_capacity(polar.n_range * polar.width);
    for row in 0..polar.n_range {
        for col in 0..polar.width {
            let p = polar.cell_center(row, col);
            let direct = cart.locate(p).map(|(i, j)| mask.at(i, j));
            let label = match direct {
                Some(v) if v != IGNORE => v,
                _ => nearest_labelled(mask, &cart, p, dx, dy).unwrap_or(NOT_OPEN),
            };
            labels.push(label);
        }
    }
    Mask::new(labels, GridGeometry::Polar(*polar))
}

/// Closest non-ignored cell centre within a few cells of `p`.
fn nearest_labelled(
    mask: &Mask,
    cart: &CartesianGrid,
    p: crate::simulate::Point2,
    dx: f64,
    dy: f64,
) -> Option<u8> {
    const REACH: i64 = 6;
    let ci = ((p.x / dx).floor() as i64).clamp(0, cart.rows as i64 - 1);
    let cj = (((p.y + cart.y_half) / dy).floor() as i64).clamp(0, cart.cols as i64 - 1);
    let rows = (ci - REACH).max(0)..=(ci + REACH).min(cart.rows as i64 - 1);
    let mut best: Option<(f64, u8)> = None;
    for i in rows {
        for j in (cj - REACH).max(0)..=(cj + REACH).min(cart.cols as i64 - 1) {
            let v = mask.at(i as usize, j as usize);
            if v == IGNORE {
                continue;
            }
            let d = cart.cell_center(i as usize, j as usize).sub(p).norm();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, v));
            }
        }
    }
    best.map(|(_, v)| v)
}

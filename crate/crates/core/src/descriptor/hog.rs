//! Histogram of oriented gradients as a whole-image descriptor.
//!
//! Pipeline: BT.601 luma, bilinear resize to a fixed frame, central
//! differences `[-1, 0, 1]` (edges replicated), unsigned orientation
//! histograms per cell with linear interpolation between the two nearest
//! bins, L2-Hys normalisation per block, and concatenation of all blocks in
//! row-major order.
//!
//! Bin `k` is centred on `k * 180 / bins` degrees, so a purely horizontal
//! gradient lands entirely in bin 0.

use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use super::DescriptorVector;
use crate::codec::luma;
use crate::error::{Error, Result};

/// Technique label written to descriptor files.
pub const LABEL: &str = "hog";

/// Clipping threshold of L2-Hys.
pub const L2HYS_CLIP: f64 = 0.2;

const BLOCK_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HogParams {
    /// Frame the luma image is resized to, `(width, height)`.
    pub resize: (u32, u32),
    /// Cell side in pixels.
    pub cell: u32,
    /// Block side in cells.
    pub block: u32,
    /// Block stride in cells.
    pub stride: u32,
    /// Orientation bins over `[0, 180)` degrees.
    pub bins: u32,
}

impl Default for HogParams {
    fn default() -> Self {
        HogParams {
            resize: (128, 128),
            cell: 8,
            block: 2,
            stride: 1,
            bins: 9,
        }
    }
}

impl HogParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let (w, h) = self.resize;
        if self.cell == 0 || self.block == 0 || self.stride == 0 {
            return bad("cell, block and stride must be positive".into());
        }
        if w == 0 || h == 0 || w % self.cell != 0 || h % self.cell != 0 {
            return bad(format!("resize {w}x{h} is not a multiple of cell {}", self.cell));
        }
        if self.block > w / self.cell || self.block > h / self.cell {
            return bad(format!(
                "block of {} cells does not fit in {}x{} cells",
                self.block,
                w / self.cell,
                h / self.cell
            ));
        }
        if self.bins < 2 {
            return bad(format!("need at least 2 orientation bins, got {}", self.bins));
        }
        Ok(())
    }

    pub fn cells(&self) -> (usize, usize) {
        (
            (self.resize.0 / self.cell) as usize,
            (self.resize.1 / self.cell) as usize,
        )
    }

    pub fn blocks(&self) -> (usize, usize) {
        let (cx, cy) = self.cells();
        let (b, s) = (self.block as usize, self.stride as usize);
        ((cx - b) / s + 1, (cy - b) / s + 1)
    }

    /// `blocks_x * blocks_y * block^2 * bins`.
    pub fn dim(&self) -> usize {
        let (bx, by) = self.blocks();
        bx * by * (self.block * self.block * self.bins) as usize
    }
}

pub fn compute_hog(image: &RgbImage, params: &HogParams) -> Result<DescriptorVector> {
    hog_from_luma(&luma(image), params)
}

pub fn hog_from_luma(gray: &GrayImage, params: &HogParams) -> Result<DescriptorVector> {
    params.validate()?;
    if gray.width() == 0 || gray.height() == 0 {
        return Err(Error::EmptyImage);
    }
    let (w, h) = (params.resize.0 as usize, params.resize.1 as usize);
    let plane = resize_bilinear(gray, w, h);
    let cells = cell_histograms(&plane, w, h, params);
    let out = normalize_blocks(&cells, params);
    DescriptorVector::new(out)
}

/// Bilinear resample with pixel-centre alignment. An identity-sized resize
/// returns the input samples unchanged.
pub(crate) fn resize_bilinear(gray: &GrayImage, w: usize, h: usize) -> Vec<f64> {
    let (sw, sh) = (gray.width() as usize, gray.height() as usize);
    let src = gray.as_raw();
    let at = |x: usize, y: usize| src[y * sw + x] as f64;
    let axis = |dst: usize, n_dst: usize, n_src: usize| -> (usize, usize, f64) {
        let pos = ((dst as f64 + 0.5) * n_src as f64 / n_dst as f64 - 0.5)
            .clamp(0.0, (n_src - 1) as f64);
        let i0 = pos.floor() as usize;
        let i1 = (i0 + 1).min(n_src - 1);
        (i0, i1, pos - i0 as f64)
    };
    let columns: Vec<_> = (0..w).map(|x| axis(x, w, sw)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1, fy) = axis(y, h, sh);
        for &(x0, x1, fx) in &columns {
            let top = lerp(at(x0, y0), at(x1, y0), fx);
            let bottom = lerp(at(x0, y1), at(x1, y1), fx);
            out.push(lerp(top, bottom, fy));
        }
    }
    out
}

// `a + t * (b - a)` keeps flat regions exactly flat.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Per-cell orientation histograms, cell-row-major, `bins` values per cell.
fn cell_histograms(plane: &[f64], w: usize, h: usize, params: &HogParams) -> Vec<f64> {
    let cell = params.cell as usize;
    let bins = params.bins as usize;
    let (cells_x, _) = params.cells();
    let mut hist = vec![0.0f64; plane.len() / (cell * cell) * bins];
    let bin_width = 180.0 / bins as f64;

    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            let gx = plane[y * w + right] - plane[y * w + left];
            let gy = plane[down * w + x] - plane[up * w + x];
            let magnitude = gx.hypot(gy);
            if magnitude == 0.0 {
                continue;
            }
            let angle = gy.atan2(gx).to_degrees().rem_euclid(180.0);
            let pos = angle / bin_width;
            let lower = pos.floor();
            let frac = pos - lower;
            let b0 = lower as usize % bins;
            let b1 = (b0 + 1) % bins;
            let base = ((y / cell) * cells_x + x / cell) * bins;
            hist[base + b0] += magnitude * (1.0 - frac);
            hist[base + b1] += magnitude * frac;
        }
    }
    hist
}

fn normalize_blocks(cells: &[f64], params: &HogParams) -> Vec<f32> {
    let bins = params.bins as usize;
    let block = params.block as usize;
    let stride = params.stride as usize;
    let (cells_x, _) = params.cells();
    let (blocks_x, blocks_y) = params.blocks();
    let block_len = block * block * bins;

    let mut out = Vec::with_capacity(params.dim());
    let mut buf = Vec::with_capacity(block_len);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            buf.clear();
            for cy in 0..block {
                for cx in 0..block {
                    let cell = (by * stride + cy) * cells_x + bx * stride + cx;
                    buf.extend_from_slice(&cells[cell * bins..(cell + 1) * bins]);
                }
            }
            l2_hys(&mut buf);
            out.extend(buf.iter().map(|&v| v as f32));
        }
    }
    out
}

fn l2_hys(v: &mut [f64]) {
    let scale = |v: &mut [f64]| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= BLOCK_EPSILON {
            v.iter_mut().for_each(|x| *x = 0.0);
        } else {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    };
    scale(v);
    v.iter_mut().for_each(|x| *x = x.min(L2HYS_CLIP));
    scale(v);
}

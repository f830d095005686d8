//! Dense differential optical flow between consecutive frames.
//!
//! Both classical solvers of the brightness constancy constraint are
//! provided: windowed least squares (Lucas-Kanade) and global smoothness
//! Jacobi iteration (Horn-Schunck). Frames are converted to Rec.601 luma
//! scaled to [0, 1] before differentiation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::media::{Clip, FlowField, Frame};

/// Structure-tensor eigenvalue threshold below which a pixel is treated as
/// texture-free (aperture degeneracy) and given zero flow.
pub const LK_MIN_EIGENVALUE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMethod {
    LucasKanade,
    HornSchunck,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub method: FlowMethod,
    /// Lucas-Kanade window side; odd, at least 3.
    pub window: usize,
    /// Horn-Schunck smoothness weight.
    pub hs_alpha: f64,
    /// Horn-Schunck iteration count.
    pub hs_iters: usize,
}

impl FlowParams {
    pub fn lucas_kanade(window: usize) -> Result<Self> {
        if window < 3 || window.is_multiple_of(2) {
            return Err(Error::invalid("window must be odd and at least 3"));
        }
        Ok(FlowParams {
            method: FlowMethod::LucasKanade,
            window,
            hs_alpha: 1.0,
            hs_iters: 200,
        })
    }

    pub fn horn_schunck(alpha: f64, iters: usize) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::invalid("hs_alpha must be positive"));
        }
        if iters < 1 {
            return Err(Error::invalid("hs_iters must be at least 1"));
        }
        Ok(FlowParams {
            method: FlowMethod::HornSchunck,
            window: 15,
            hs_alpha: alpha,
            hs_iters: iters,
        })
    }
}

/// Scalar field over the image plane with edge-replicated indexing.
#[derive(Debug, Clone)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        Grid { width, height, data }
    }

    pub fn from_frame(frame: &Frame) -> Self {
        let data = frame.luma().iter().map(|y| y / 255.0).collect();
        Grid::new(frame.width(), frame.height(), data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Edge-replicated lookup.
    #[inline]
    fn at_clamped(&self, x: isize, y: isize) -> f64 {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.at(xi, yi)
    }
}

/// Spatial and temporal gradients of a frame pair on luma grids.
///
/// Ix and Iy are central differences of the two-frame average with
/// edge replication; It is the pointwise difference second minus first.
pub fn gradients_of_grids(a: &Grid, b: &Grid) -> (Grid, Grid, Grid) {
    let (w, h) = (a.width, a.height);
    let mut ix = vec![0.0; w * h];
    let mut iy = vec![0.0; w * h];
    let mut it = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (xi, yi) = (x as isize, y as isize);
            let avg = |px: isize, py: isize| 0.5 * (a.at_clamped(px, py) + b.at_clamped(px, py));
            ix[i] = 0.5 * (avg(xi + 1, yi) - avg(xi - 1, yi));
            iy[i] = 0.5 * (avg(xi, yi + 1) - avg(xi, yi - 1));
            it[i] = b.at(x, y) - a.at(x, y);
        }
    }
    (Grid::new(w, h, ix), Grid::new(w, h, iy), Grid::new(w, h, it))
}

pub fn gradients(f1: &Frame, f2: &Frame) -> Result<(Grid, Grid, Grid)> {
    check_same_size(f1, f2)?;
    Ok(gradients_of_grids(&Grid::from_frame(f1), &Grid::from_frame(f2)))
}

fn check_same_size(f1: &Frame, f2: &Frame) -> Result<()> {
    if f1.width() != f2.width() || f1.height() != f2.height() {
        return Err(Error::invalid(format!(
            "frame dimensions differ: {}x{} vs {}x{}",
            f1.width(),
            f1.height(),
            f2.width(),
            f2.height()
        )));
    }
    Ok(())
}

/// Summed-area table for O(1) window sums.
struct Integral {
    width: usize,
    table: Vec<f64>, // (w+1) x (h+1)
}

impl Integral {
    fn build(grid: &[f64], w: usize, h: usize) -> Self {
        let mut table = vec![0.0; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += grid[y * w + x];
                table[(y + 1) * (w + 1) + (x + 1)] = table[y * (w + 1) + (x + 1)] + row;
            }
        }
        Integral { width: w, table }
    }

    /// Sum over the inclusive pixel rectangle [x0, x1] x [y0, y1].
    #[inline]
    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let w1 = self.width + 1;
        self.table[(y1 + 1) * w1 + (x1 + 1)] + self.table[y0 * w1 + x0]
            - self.table[y0 * w1 + (x1 + 1)]
            - self.table[(y1 + 1) * w1 + x0]
    }
}

/// Dense Lucas-Kanade flow.
///
/// Returns the field plus a per-pixel low-confidence mask: pixels whose
/// structure tensor has smaller eigenvalue below [`LK_MIN_EIGENVALUE`] get
/// zero flow and a set mask bit. Windows are clipped at the image border.
pub fn lucas_kanade(f1: &Frame, f2: &Frame, window: usize) -> Result<(FlowField, Vec<bool>)> {
    check_same_size(f1, f2)?;
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::invalid("window must be odd and at least 3"));
    }
    let a = Grid::from_frame(f1);
    let b = Grid::from_frame(f2);
    let (ix, iy, it) = gradients_of_grids(&a, &b);
    let (w, h) = (a.width, a.height);
    let n = w * h;
    let mut xx = vec![0.0; n];
    let mut xy = vec![0.0; n];
    let mut yy = vec![0.0; n];
    let mut xt = vec![0.0; n];
    let mut yt = vec![0.0; n];
    for i in 0..n {
        let (gx, gy, gt) = (ix.data[i], iy.data[i], it.data[i]);
        xx[i] = gx * gx;
        xy[i] = gx * gy;
        yy[i] = gy * gy;
        xt[i] = gx * gt;
        yt[i] = gy * gt;
    }
    let ixx = Integral::build(&xx, w, h);
    let ixy = Integral::build(&xy, w, h);
    let iyy = Integral::build(&yy, w, h);
    let ixt = Integral::build(&xt, w, h);
    let iyt = Integral::build(&yt, w, h);

    let r = window / 2;
    let mut vectors = vec![(0.0f32, 0.0f32); n];
    let mut low_confidence = vec![false; n];
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1);
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1);
            let sxx = ixx.sum(x0, y0, x1, y1);
            let sxy = ixy.sum(x0, y0, x1, y1);
            let syy = iyy.sum(x0, y0, x1, y1);
            let trace = sxx + syy;
            let disc = ((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy).max(0.0).sqrt();
            let lambda_min = 0.5 * (trace - disc);
            let i = y * w + x;
            if lambda_min < LK_MIN_EIGENVALUE {
                low_confidence[i] = true;
                continue;
            }
            let sxt = ixt.sum(x0, y0, x1, y1);
            let syt = iyt.sum(x0, y0, x1, y1);
            let det = sxx * syy - sxy * sxy;
            let u = (sxy * syt - syy * sxt) / det;
            let v = (sxy * sxt - sxx * syt) / det;
            if u.is_finite() && v.is_finite() {
                vectors[i] = (u as f32, v as f32);
            } else {
                low_confidence[i] = true;
            }
        }
    }
    Ok((FlowField::new(w, h, vectors)?, low_confidence))
}

/// Horn-Schunck flow: Jacobi iteration of the classical update
/// u <- ubar - Ix (Ix ubar + Iy vbar + It) / (alpha^2 + Ix^2 + Iy^2)
/// with 4-neighbor averages (edge-replicated), zero initialization, and
/// exactly `iters` iterations.
pub fn horn_schunck(f1: &Frame, f2: &Frame, alpha: f64, iters: usize) -> Result<FlowField> {
    check_same_size(f1, f2)?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid("hs_alpha must be positive"));
    }
    let a = Grid::from_frame(f1);
    let b = Grid::from_frame(f2);
    let (ix, iy, it) = gradients_of_grids(&a, &b);
    let (w, h) = (a.width, a.height);
    let n = w * h;
    let denom: Vec<f64> = (0..n)
        .map(|i| alpha * alpha + ix.data[i] * ix.data[i] + iy.data[i] * iy.data[i])
        .collect();

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut u_next = vec![0.0f64; n];
    let mut v_next = vec![0.0f64; n];
    let neighbor_avg = |field: &[f64], x: usize, y: usize| -> f64 {
        let pick = |px: isize, py: isize| {
            let xi = px.clamp(0, w as isize - 1) as usize;
            let yi = py.clamp(0, h as isize - 1) as usize;
            field[yi * w + xi]
        };
        let (xi, yi) = (x as isize, y as isize);
        0.25 * (pick(xi - 1, yi) + pick(xi + 1, yi) + pick(xi, yi - 1) + pick(xi, yi + 1))
    };
    for _ in 0..iters {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let ubar = neighbor_avg(&u, x, y);
                let vbar = neighbor_avg(&v, x, y);
                let t = (ix.data[i] * ubar + iy.data[i] * vbar + it.data[i]) / denom[i];
                u_next[i] = ubar - ix.data[i] * t;
                v_next[i] = vbar - iy.data[i] * t;
            }
        }
        std::mem::swap(&mut u, &mut u_next);
        std::mem::swap(&mut v, &mut v_next);
    }
    let vectors: Vec<(f32, f32)> = u
        .iter()
        .zip(v.iter())
        .map(|(&du, &dv)| (du as f32, dv as f32))
        .collect();
    FlowField::new(w, h, vectors)
}

/// Brightness-constancy residual sum((Ix u + Iy v + It)^2) of a flow field
/// against the gradients of a frame pair.
pub fn brightness_residual(f1: &Frame, f2: &Frame, field: &FlowField) -> Result<f64> {
    check_same_size(f1, f2)?;
    let (ix, iy, it) = gradients(f1, f2)?;
    let mut total = 0.0;
    for (i, &(u, v)) in field.vectors().iter().enumerate() {
        let r = ix.data[i] * u as f64 + iy.data[i] * v as f64 + it.data[i];
        total += r * r;
    }
    Ok(total)
}

/// Flow fields for all consecutive pairs of a clip.
#[derive(Debug, Clone)]
pub struct ClipFlow {
    pub fields: Vec<FlowField>,
    /// Field i involved an all-zero (padding) frame and was forced to zero.
    pub is_padding: Vec<bool>,
}

/// Compute N-1 fields for an N-frame clip. Pairs that touch an all-zero
/// padding frame yield a zero field instead of spurious gradients.
pub fn clip_flow(clip: &Clip, params: &FlowParams) -> Result<ClipFlow> {
    if clip.len() < 2 {
        return Err(Error::invalid("clip flow needs at least two frames"));
    }
    let frames = clip.frames();
    let blank: Vec<bool> = frames.iter().map(Frame::is_black).collect();
    let results: Vec<(FlowField, bool)> = (0..clip.len() - 1)
        .into_par_iter()
        .map(|i| -> Result<(FlowField, bool)> {
            if blank[i] || blank[i + 1] {
                return Ok((FlowField::zero(clip.width(), clip.height()), true));
            }
            let field = match params.method {
                FlowMethod::LucasKanade => lucas_kanade(&frames[i], &frames[i + 1], params.window)?.0,
                FlowMethod::HornSchunck => {
                    horn_schunck(&frames[i], &frames[i + 1], params.hs_alpha, params.hs_iters)?
                }
            };
            Ok((field, false))
        })
        .collect::<Result<Vec<_>>>()?;
    let (fields, is_padding) = results.into_iter().unzip();
    Ok(ClipFlow { fields, is_padding })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Smooth deterministic texture: coarse random lattice, bilinearly
    /// upsampled. Gray so luma equals the channel value.
    fn noise_frame(seed: u64, w: usize, h: usize, cell: usize, lo: u8, hi: u8) -> Frame {
        let gw = w / cell + 2;
        let gh = h / cell + 2;
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut lattice = vec![0.0f64; gw * gh];
        for v in &mut lattice {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = lo as f64 + (hi - lo) as f64 * ((state >> 11) as f64 / (1u64 << 53) as f64);
        }
        let mut pixels = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                let fx = x as f64 / cell as f64;
                let fy = y as f64 / cell as f64;
                let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
                let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
                let g = |gx: usize, gy: usize| lattice[gy * gw + gx];
                let top = (1.0 - tx) * g(x0, y0) + tx * g(x0 + 1, y0);
                let bot = (1.0 - tx) * g(x0, y0 + 1) + tx * g(x0 + 1, y0 + 1);
                let v = ((1.0 - ty) * top + ty * bot).round().clamp(0.0, 255.0) as u8;
                pixels.extend_from_slice(&[v, v, v]);
            }
        }
        Frame::new(w, h, pixels).unwrap()
    }

    /// Random wave field: a sum of sinusoids with seeded random directions,
    /// wavelengths, and phases. Smooth enough for the differential
    /// linearization at 1 px shifts, with enough gradient energy everywhere
    /// for Horn-Schunck to converge in a couple hundred iterations.
    fn wave_frame(seed: u64, w: usize, h: usize) -> Frame {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let waves: Vec<(f64, f64, f64)> = (0..5)
            .map(|_| {
                let theta = next() * std::f64::consts::TAU;
                let lambda = 8.0 + next() * 5.0;
                let phase = next() * std::f64::consts::TAU;
                (theta, lambda, phase)
            })
            .collect();
        let mut pixels = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                let mut v = 127.5;
                for &(theta, lambda, phase) in &waves {
                    let proj = x as f64 * theta.cos() + y as f64 * theta.sin();
                    v += 55.0 * (std::f64::consts::TAU * proj / lambda + phase).sin();
                }
                let q = v.round().clamp(0.0, 255.0) as u8;
                pixels.extend_from_slice(&[q, q, q]);
            }
        }
        Frame::new(w, h, pixels).unwrap()
    }

    /// Crop a horizontal window so that (before, after) is a rightward shift
    /// by `dx` pixels with no border artifacts.
    fn shifted_pair(seed: u64, w: usize, h: usize, dx: usize) -> (Frame, Frame) {
        let wide = wave_frame(seed, w + dx, h);
        let crop = |x0: usize| {
            let mut pixels = Vec::with_capacity(w * h * 3);
            for y in 0..h {
                let start = (y * wide.width() + x0) * 3;
                pixels.extend_from_slice(&wide.pixels()[start..start + w * 3]);
            }
            Frame::new(w, h, pixels).unwrap()
        };
        (crop(dx), crop(0))
    }

    fn interior_mean_epe(field: &FlowField, truth: (f64, f64), margin: usize) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for y in margin..field.height() - margin {
            for x in margin..field.width() - margin {
                let (u, v) = field.at(x, y);
                let du = u as f64 - truth.0;
                let dv = v as f64 - truth.1;
                total += (du * du + dv * dv).sqrt();
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn gradients_zero_for_identical_constant() {
        let f = Frame::filled(8, 8, [77, 77, 77]).unwrap();
        let (ix, iy, it) = gradients(&f, &f).unwrap();
        assert!(ix.data().iter().all(|&g| g == 0.0));
        assert!(iy.data().iter().all(|&g| g == 0.0));
        assert!(it.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradients_uniform_temporal_step() {
        let a = Grid::new(4, 4, vec![0.3; 16]);
        let b = Grid::new(4, 4, vec![0.4; 16]);
        let (ix, iy, it) = gradients_of_grids(&a, &b);
        assert!(it.data().iter().all(|&g| (g - 0.1).abs() < 1e-12));
        assert!(ix.data().iter().all(|&g| g == 0.0));
        assert!(iy.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradients_horizontal_ramp() {
        let w = 9;
        let slope = 0.05;
        let data: Vec<f64> = (0..w * 5).map(|i| slope * (i % w) as f64).collect();
        let g = Grid::new(w, 5, data);
        let (ix, iy, _) = gradients_of_grids(&g, &g);
        for y in 0..5 {
            for x in 1..w - 1 {
                assert!((ix.data()[y * w + x] - slope).abs() < 1e-12);
                assert!(iy.data()[y * w + x].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_reject_size_mismatch() {
        let a = Frame::black(4, 4).unwrap();
        let b = Frame::black(5, 4).unwrap();
        assert!(gradients(&a, &b).is_err());
    }

    #[test]
    fn lk_zero_motion_exact() {
        let f = noise_frame(5, 48, 40, 8, 20, 230);
        let (field, _) = lucas_kanade(&f, &f, 15).unwrap();
        assert!(field.vectors().iter().all(|&(u, v)| u == 0.0 && v == 0.0));
    }

    #[test]
    fn lk_recovers_unit_shift() {
        let (f1, f2) = shifted_pair(11, 64, 64, 1);
        let (field, _) = lucas_kanade(&f1, &f2, 15).unwrap();
        let epe = interior_mean_epe(&field, (1.0, 0.0), 12);
        assert!(epe <= 0.2, "mean endpoint error {epe}");
    }

    #[test]
    fn lk_textureless_is_low_confidence() {
        let f = Frame::filled(16, 16, [128, 128, 128]).unwrap();
        let (field, low) = lucas_kanade(&f, &f, 5).unwrap();
        assert!(low.iter().all(|&b| b));
        assert!(field.vectors().iter().all(|&(u, v)| u == 0.0 && v == 0.0));
    }

    #[test]
    fn lk_window_validation() {
        let f = Frame::black(8, 8).unwrap();
        assert!(lucas_kanade(&f, &f, 4).is_err());
        assert!(lucas_kanade(&f, &f, 1).is_err());
    }

    #[test]
    fn hs_zero_motion_exact() {
        let f = noise_frame(6, 32, 32, 8, 20, 230);
        let field = horn_schunck(&f, &f, 1.0, 50).unwrap();
        assert!(field.vectors().iter().all(|&(u, v)| u == 0.0 && v == 0.0));
    }

    #[test]
    fn hs_recovers_unit_shift() {
        let (f1, f2) = shifted_pair(21, 64, 64, 1);
        let field = horn_schunck(&f1, &f2, 1.0, 200).unwrap();
        let epe = interior_mean_epe(&field, (1.0, 0.0), 12);
        assert!(epe <= 0.3, "mean endpoint error {epe}");
    }

    #[test]
    fn hs_residual_non_increasing() {
        let (f1, f2) = shifted_pair(31, 48, 48, 1);
        let mut last = f64::INFINITY;
        for iters in [10, 50, 100, 200] {
            let field = horn_schunck(&f1, &f2, 1.0, iters).unwrap();
            let res = brightness_residual(&f1, &f2, &field).unwrap();
            assert!(res <= last + 1e-12, "residual rose at {iters}: {res} > {last}");
            last = res;
        }
    }

    #[test]
    fn translation_antisymmetry() {
        let (f1, f2) = shifted_pair(41, 64, 64, 1);
        let (fwd, _) = lucas_kanade(&f1, &f2, 15).unwrap();
        let (bwd, _) = lucas_kanade(&f2, &f1, 15).unwrap();
        let margin = 12;
        let mut total = 0.0;
        let mut count = 0;
        for y in margin..64 - margin {
            for x in margin..64 - margin {
                let (u1, v1) = fwd.at(x, y);
                let (u2, v2) = bwd.at(x, y);
                let du = (u1 + u2) as f64;
                let dv = (v1 + v2) as f64;
                total += (du * du + dv * dv).sqrt();
                count += 1;
            }
        }
        assert!(total / count as f64 <= 0.1);
    }

    #[test]
    fn extreme_inputs_stay_finite() {
        let black = Frame::black(16, 16).unwrap();
        let white = Frame::filled(16, 16, [255, 255, 255]).unwrap();
        for (a, b) in [(&black, &white), (&white, &black), (&black, &black)] {
            // FlowField construction rejects non-finite components.
            lucas_kanade(a, b, 5).unwrap();
            horn_schunck(a, b, 0.5, 25).unwrap();
        }
    }

    #[test]
    fn clip_flow_static_and_counts() {
        let f = noise_frame(51, 24, 20, 6, 40, 200);
        let clip = Clip::new(vec![f.clone(), f.clone(), f], None).unwrap();
        let params = FlowParams::lucas_kanade(7).unwrap();
        let out = clip_flow(&clip, &params).unwrap();
        assert_eq!(out.fields.len(), 2);
        assert!(out.fields[0].vectors().iter().all(|&(u, v)| u == 0.0 && v == 0.0));
        assert!(!out.is_padding[0]);
    }

    #[test]
    fn clip_flow_rejects_single_frame() {
        let clip = Clip::new(vec![Frame::black(4, 4).unwrap()], None).unwrap();
        assert!(clip_flow(&clip, &FlowParams::lucas_kanade(5).unwrap()).is_err());
    }

    #[test]
    fn clip_flow_padding_frames_are_flagged_zero() {
        let f = noise_frame(61, 24, 20, 6, 40, 200);
        let clip = Clip::new(
            vec![Frame::black(24, 20).unwrap(), f.clone(), f],
            None,
        )
        .unwrap();
        let out = clip_flow(&clip, &FlowParams::lucas_kanade(7).unwrap()).unwrap();
        assert!(out.is_padding[0]);
        assert!(out.fields[0].vectors().iter().all(|&(u, v)| u == 0.0 && v == 0.0));
        assert!(!out.is_padding[1]);
    }

    #[test]
    fn clip_flow_tracks_translating_square() {
        // A smoothly textured square translating 2 px right per frame on a
        // black background; mean u inside the square should be near 2.
        let (w, h) = (64, 48);
        let texture = noise_frame(71, w, h, 6, 50, 230);
        let mut frames = Vec::new();
        for t in 0..4usize {
            let mut pixels = vec![0u8; w * h * 3];
            let x0 = 10 + 2 * t;
            for y in 12..36 {
                for x in x0..x0 + 24 {
                    // texture anchored to the square so it moves with it
                    let v = texture.pixel(x - 2 * t, y)[0];
                    let i = (y * w + x) * 3;
                    pixels[i] = v;
                    pixels[i + 1] = v;
                    pixels[i + 2] = v;
                }
            }
            frames.push(Frame::new(w, h, pixels).unwrap());
        }
        let clip = Clip::new(frames, None).unwrap();
        let out = clip_flow(&clip, &FlowParams::lucas_kanade(15).unwrap()).unwrap();
        for (t, field) in out.fields.iter().enumerate() {
            let x0 = 10 + 2 * t;
            let mut total = 0.0;
            let mut count = 0;
            for y in 18..30 {
                for x in x0 + 6..x0 + 18 {
                    total += field.at(x, y).0 as f64;
                    count += 1;
                }
            }
            let mean_u = total / count as f64;
            assert!((mean_u - 2.0).abs() <= 0.5, "field {t}: mean u {mean_u}");
        }
    }
}

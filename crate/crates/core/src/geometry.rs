//! Resize strategies: center crop, maxcenter crop, and direct bilinear scaling.

use crate::error::{Error, Result};
use crate::media::{quantize_channel, Frame};

fn crop_rect(frame: &Frame, x0: usize, y0: usize, w: usize, h: usize) -> Frame {
    let mut pixels = Vec::with_capacity(w * h * 3);
    for y in y0..y0 + h {
        let row = (y * frame.width() + x0) * 3;
        pixels.extend_from_slice(&frame.pixels()[row..row + w * 3]);
    }
    Frame::new(w, h, pixels).expect("crop rect stays in bounds")
}

/// Centered side x side crop; odd margins floor on the top/left.
pub fn center_crop(frame: &Frame, side: usize) -> Result<Frame> {
    if side == 0 {
        return Err(Error::invalid("crop side must be at least 1"));
    }
    if frame.width() < side || frame.height() < side {
        return Err(Error::invalid(format!(
            "frame {}x{} smaller than crop side {}",
            frame.width(),
            frame.height(),
            side
        )));
    }
    let x0 = (frame.width() - side) / 2;
    let y0 = (frame.height() - side) / 2;
    Ok(crop_rect(frame, x0, y0, side, side))
}

/// Centered square crop spanning the full shorter dimension by default.
///
/// `side = None` uses min(width, height), which is the "maxcenter" reading:
/// from a 170x128 frame it keeps the full-height centered 128x128 window.
/// An explicit side behaves like [`center_crop`] with that window.
pub fn maxcenter_crop(frame: &Frame, side: Option<usize>) -> Result<Frame> {
    let side = side.unwrap_or_else(|| frame.width().min(frame.height()));
    center_crop(frame, side)
}

/// Bilinear resample with half-pixel-centered mapping and edge clamping.
///
/// src = (dst + 0.5) * (in / out) - 0.5 per axis, so resizing to the same
/// dimensions reproduces the input exactly.
pub fn scale_bilinear(frame: &Frame, out_h: usize, out_w: usize) -> Result<Frame> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid("output dimensions must be at least 1x1"));
    }
    let (in_w, in_h) = (frame.width(), frame.height());
    let x_ratio = in_w as f64 / out_w as f64;
    let y_ratio = in_h as f64 / out_h as f64;
    let mut pixels = Vec::with_capacity(out_w * out_h * 3);
    for dy in 0..out_h {
        let sy = (dy as f64 + 0.5) * y_ratio - 0.5;
        let y0 = sy.floor();
        let fy = sy - y0;
        let yi0 = (y0 as isize).clamp(0, in_h as isize - 1) as usize;
        let yi1 = (y0 as isize + 1).clamp(0, in_h as isize - 1) as usize;
        for dx in 0..out_w {
            let sx = (dx as f64 + 0.5) * x_ratio - 0.5;
            let x0 = sx.floor();
            let fx = sx - x0;
            let xi0 = (x0 as isize).clamp(0, in_w as isize - 1) as usize;
            let xi1 = (x0 as isize + 1).clamp(0, in_w as isize - 1) as usize;
            let p00 = frame.pixel(xi0, yi0);
            let p10 = frame.pixel(xi1, yi0);
            let p01 = frame.pixel(xi0, yi1);
            let p11 = frame.pixel(xi1, yi1);
            for c in 0..3 {
                let top = (1.0 - fx) * p00[c] as f64 + fx * p10[c] as f64;
                let bot = (1.0 - fx) * p01[c] as f64 + fx * p11[c] as f64;
                pixels.push(quantize_channel((1.0 - fy) * top + fy * bot));
            }
        }
    }
    Frame::new(out_w, out_h, pixels)
}

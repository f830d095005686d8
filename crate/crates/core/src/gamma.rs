//! Independent gamma intensity correction.
//!
//! Every frame gets its own gamma: either solved in closed loop against a
//! target mean intensity, predicted by a small regressor over brightness
//! statistics, or fixed. Darkening with the inverse transfer builds labeled
//! training pairs for the regressor.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::media::{quantize_channel, Clip, Frame};

/// Upper bound on usable gamma; darkening beyond this destroys 8-bit content.
pub const GAMMA_MAX: f64 = 10.0;

/// A validated gamma in [1, GAMMA_MAX].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaValue(f64);

impl GammaValue {
    pub fn new(value: f64) -> Result<Self> {
        if !(1.0..=GAMMA_MAX).contains(&value) {
            return Err(Error::invalid(format!(
                "gamma {value} out of range [1, {GAMMA_MAX}]"
            )));
        }
        Ok(GammaValue(value))
    }

    /// Clamp an arbitrary real into the valid range.
    pub fn clamped(value: f64) -> Self {
        GammaValue(value.clamp(1.0, GAMMA_MAX))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn power_lut(exponent: f64) -> [u8; 256] {
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = quantize_channel(255.0 * (v as f64 / 255.0).powf(exponent));
    }
    lut
}

/// Brighten: p -> 255 * (p/255)^(1/gamma), rounded and clamped per channel.
pub fn apply_gamma(frame: &Frame, gamma: GammaValue) -> Frame {
    let lut = power_lut(1.0 / gamma.value());
    frame.map_channels(|p| lut[p as usize])
}

/// Darken with the inverse transfer: p -> 255 * (p/255)^gamma.
/// Darkening a frame with gamma g and labeling it g yields a training pair.
pub fn darken(frame: &Frame, gamma: GammaValue) -> Frame {
    let lut = power_lut(gamma.value());
    frame.map_channels(|p| lut[p as usize])
}

/// Channel-value counts pooled over all three channels.
fn channel_histogram(frame: &Frame) -> [u64; 256] {
    let mut counts = [0u64; 256];
    for &p in frame.pixels() {
        counts[p as usize] += 1;
    }
    counts
}

fn mean_enhanced_from_counts(counts: &[u64; 256], gamma: f64) -> f64 {
    let total: u64 = counts.iter().sum();
    let exponent = 1.0 / gamma;
    let sum: f64 = counts
        .iter()
        .enumerate()
        .map(|(v, &c)| c as f64 * 255.0 * (v as f64 / 255.0).powf(exponent))
        .sum();
    sum / total as f64
}

/// Mean enhanced intensity over all channel values, in real arithmetic:
/// (1 / 3WH) * sum of 255 * (p/255)^(1/gamma). No rounding.
pub fn mean_enhanced_intensity(frame: &Frame, gamma: GammaValue) -> f64 {
    mean_enhanced_from_counts(&channel_histogram(frame), gamma.value())
}

/// Closed-loop gamma estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    pub gamma: GammaValue,
    /// Set when the input was all-black: no gamma can brighten it.
    pub degenerate: bool,
}

const BISECTION_ITERS: u32 = 30;

fn estimate_from_counts(counts: &[u64; 256], target_mean: f64) -> Result<GammaEstimate> {
    if !(0.0 < target_mean && target_mean < 255.0) {
        return Err(Error::invalid(format!(
            "target mean {target_mean} must lie strictly inside (0, 255)"
        )));
    }
    if counts[1..].iter().all(|&c| c == 0) {
        return Ok(GammaEstimate {
            gamma: GammaValue(GAMMA_MAX),
            degenerate: true,
        });
    }
    if mean_enhanced_from_counts(counts, 1.0) >= target_mean {
        return Ok(GammaEstimate { gamma: GammaValue(1.0), degenerate: false });
    }
    if mean_enhanced_from_counts(counts, GAMMA_MAX) <= target_mean {
        return Ok(GammaEstimate { gamma: GammaValue(GAMMA_MAX), degenerate: false });
    }
    // gamma -> mean enhanced intensity is monotone non-decreasing: bisect.
    let (mut lo, mut hi) = (1.0f64, GAMMA_MAX);
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mean_enhanced_from_counts(counts, mid) < target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammaEstimate {
        gamma: GammaValue(0.5 * (lo + hi)),
        degenerate: false,
    })
}

/// Find the gamma whose mean enhanced intensity best matches `target_mean`.
///
/// Returns 1.0 when the frame is already at or above the target, GAMMA_MAX
/// when even the strongest correction cannot reach it, and GAMMA_MAX with the
/// degenerate flag for an all-black frame.
pub fn estimate_gamma_target(frame: &Frame, target_mean: f64) -> Result<GammaEstimate> {
    estimate_from_counts(&channel_histogram(frame), target_mean)
}

// ---------------------------------------------------------------------------
// Brightness features and the gamma regressor
// ---------------------------------------------------------------------------

/// Length of the `bf-v1` brightness feature schema.
pub const BRIGHTNESS_FEATURE_LEN: usize = 13;

/// Schema identifier written into serialized regressors.
pub const BRIGHTNESS_SCHEMA: &str = "bf-v1";

/// The `bf-v1` schema, in order:
/// luma mean, luma std (both on the raw 0..255 scale),
/// luma percentiles {5,25,50,75,95} scaled to [0,1],
/// per-channel means scaled to [0,1],
/// fraction of pixels with luma < 26, fraction with luma > 229,
/// ln(1 + mean luma).
pub fn brightness_features(frame: &Frame) -> [f64; BRIGHTNESS_FEATURE_LEN] {
    let luma = frame.luma();
    let n = luma.len() as f64;
    let mean = luma.iter().sum::<f64>() / n;
    let var = luma.iter().map(|&y| (y - mean) * (y - mean)).sum::<f64>() / n;

    let mut sorted = luma.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // nearest-rank percentile: index ceil(p/100 * n) - 1
    let pct = |p: f64| -> f64 {
        let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
        sorted[rank.saturating_sub(1)]
    };

    let mut channel_sums = [0f64; 3];
    for px in frame.pixels().chunks_exact(3) {
        for c in 0..3 {
            channel_sums[c] += px[c] as f64;
        }
    }

    let frac_dark = luma.iter().filter(|&&y| y < 26.0).count() as f64 / n;
    let frac_bright = luma.iter().filter(|&&y| y > 229.0).count() as f64 / n;

    [
        mean,
        var.sqrt(),
        pct(5.0) / 255.0,
        pct(25.0) / 255.0,
        pct(50.0) / 255.0,
        pct(75.0) / 255.0,
        pct(95.0) / 255.0,
        channel_sums[0] / n / 255.0,
        channel_sums[1] / n / 255.0,
        channel_sums[2] / n / 255.0,
        frac_dark,
        frac_bright,
        (1.0 + mean).ln(),
    ]
}

/// Ridge-regularized linear predictor of log gamma over `bf-v1` features.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRegressor {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub trained_on: usize,
}

const RIDGE_LAMBDA: f64 = 1e-6;

/// Least squares of log(gamma) on brightness features with a small ridge
/// term for conditioning. Requires more pairs than the feature dimension.
pub fn fit_gamma_regressor(pairs: &[(Frame, GammaValue)]) -> Result<GammaRegressor> {
    let dim = BRIGHTNESS_FEATURE_LEN + 1; // features plus bias column
    if pairs.len() < dim {
        return Err(Error::invalid(format!(
            "insufficient training data: need at least {dim} pairs, got {}",
            pairs.len()
        )));
    }
    let mut xtx = vec![vec![0.0f64; dim]; dim];
    let mut xty = vec![0.0f64; dim];
    for (frame, gamma) in pairs {
        let feats = brightness_features(frame);
        let mut row = [0.0f64; BRIGHTNESS_FEATURE_LEN + 1];
        row[..BRIGHTNESS_FEATURE_LEN].copy_from_slice(&feats);
        row[BRIGHTNESS_FEATURE_LEN] = 1.0;
        let y = gamma.value().ln();
        for i in 0..dim {
            xty[i] += row[i] * y;
            for j in 0..dim {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    for (i, row) in xtx.iter_mut().enumerate() {
        row[i] += RIDGE_LAMBDA;
    }
    let beta = cholesky_solve(&xtx, &xty)
        .ok_or_else(|| Error::numeric("singular normal equations after ridge"))?;
    Ok(GammaRegressor {
        weights: beta[..BRIGHTNESS_FEATURE_LEN].to_vec(),
        bias: beta[BRIGHTNESS_FEATURE_LEN],
        trained_on: pairs.len(),
    })
}

/// Solve A x = b for symmetric positive-definite A.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0f64; n]; n];
    for j in 0..n {
        let d = a[j][j] - l[j][..j].iter().map(|v| v * v).sum::<f64>();
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let cross: f64 = l[i][..j].iter().zip(&l[j][..j]).map(|(p, q)| p * q).sum();
            l[i][j] = (a[i][j] - cross) / l[j][j];
        }
    }
    // forward: L y = b
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let cross: f64 = l[i][..i].iter().zip(&y[..i]).map(|(p, q)| p * q).sum();
        y[i] = (b[i] - cross) / l[i][i];
    }
    // backward: L^T x = y
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

impl GammaRegressor {
    /// Predicted gamma: clamp(exp(w . features + bias), 1, GAMMA_MAX).
    pub fn predict(&self, frame: &Frame) -> GammaValue {
        self.predict_from_features(&brightness_features(frame))
    }

    pub fn predict_from_features(&self, feats: &[f64; BRIGHTNESS_FEATURE_LEN]) -> GammaValue {
        let z: f64 = self
            .weights
            .iter()
            .zip(feats.iter())
            .map(|(w, f)| w * f)
            .sum::<f64>()
            + self.bias;
        GammaValue::clamped(z.exp())
    }

    /// Serialize as CSV: header `bf-v1,<trained_on>`, 13 weight lines, bias line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", BRIGHTNESS_SCHEMA, self.trained_on);
        for w in &self.weights {
            out.push_str(&format!("{w}\n"));
        }
        out.push_str(&format!("{}\n", self.bias));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::format("empty regressor file"))?;
        let mut parts = header.split(',');
        let schema = parts.next().unwrap_or("");
        if schema != BRIGHTNESS_SCHEMA {
            return Err(Error::SchemaMismatch {
                expected: BRIGHTNESS_SCHEMA.into(),
                got: schema.into(),
            });
        }
        let trained_on: usize = parts
            .next()
            .unwrap_or("0")
            .trim()
            .parse()
            .map_err(|_| Error::format("bad trained-on count in regressor header"))?;
        let values: Vec<f64> = lines
            .map(|l| l.trim().parse::<f64>().map_err(|_| Error::format("bad number in regressor file")))
            .collect::<Result<_>>()?;
        if values.len() != BRIGHTNESS_FEATURE_LEN + 1 {
            return Err(Error::format(format!(
                "regressor file must carry {} weights plus bias, got {} values",
                BRIGHTNESS_FEATURE_LEN,
                values.len()
            )));
        }
        Ok(GammaRegressor {
            weights: values[..BRIGHTNESS_FEATURE_LEN].to_vec(),
            bias: values[BRIGHTNESS_FEATURE_LEN],
            trained_on,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }
}

// ---------------------------------------------------------------------------
// Clip enhancement
// ---------------------------------------------------------------------------

/// How to pick the gamma for each frame.
#[derive(Debug, Clone)]
pub enum EnhanceMode {
    /// One fixed gamma for every frame.
    Fixed(GammaValue),
    /// Closed-loop estimate against a target mean intensity.
    Target { target_mean: f64 },
    /// Predict from brightness features with a fitted regressor.
    Regressor(GammaRegressor),
}

/// Enhance every frame with its own gamma and return the per-frame trace.
///
/// With `per_video` the gamma is estimated once from the whole clip (pooled
/// histogram for target mode, mean features for the regressor) and applied
/// to every frame; the trace still has one entry per frame.
pub fn enhance_clip(
    clip: &Clip,
    mode: &EnhanceMode,
    per_video: bool,
) -> Result<(Clip, Vec<GammaValue>)> {
    let gammas: Vec<GammaValue> = if per_video {
        let g = match mode {
            EnhanceMode::Fixed(g) => *g,
            EnhanceMode::Target { target_mean } => {
                let mut pooled = [0u64; 256];
                for frame in clip.frames() {
                    for (slot, c) in pooled.iter_mut().zip(channel_histogram(frame)) {
                        *slot += c;
                    }
                }
                estimate_from_counts(&pooled, *target_mean)?.gamma
            }
            EnhanceMode::Regressor(model) => {
                let mut mean_feats = [0.0f64; BRIGHTNESS_FEATURE_LEN];
                for frame in clip.frames() {
                    for (m, f) in mean_feats.iter_mut().zip(brightness_features(frame)) {
                        *m += f;
                    }
                }
                for m in &mut mean_feats {
                    *m /= clip.len() as f64;
                }
                model.predict_from_features(&mean_feats)
            }
        };
        vec![g; clip.len()]
    } else {
        clip.frames()
            .iter()
            .map(|frame| match mode {
                EnhanceMode::Fixed(g) => Ok(*g),
                EnhanceMode::Target { target_mean } => {
                    Ok(estimate_gamma_target(frame, *target_mean)?.gamma)
                }
                EnhanceMode::Regressor(model) => Ok(model.predict(frame)),
            })
            .collect::<Result<Vec<_>>>()?
    };

    let frames: Vec<Frame> = clip
        .frames()
        .par_iter()
        .zip(gammas.par_iter())
        .map(|(frame, &g)| apply_gamma(frame, g))
        .collect();
    let enhanced = Clip::new(frames, clip.label().map(str::to_owned))?;
    Ok((enhanced, gammas))
}

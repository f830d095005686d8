//! Delta sampling: stride jitter with blank-frame padding.
//!
//! A clip of N frames sampled at base stride omega normally yields
//! floor(N/omega) frames. Delta sampling draws a jitter delta from
//! [alpha, beta], samples at S = min(omega + delta, sigma), and pads with
//! blank frames before and after the kept frames so the output length stays
//! exactly floor(N/omega).

use rand::Rng;

use crate::error::{Error, Result};
use crate::media::{Clip, Frame};

/// Sampling parameters: base stride, jitter bounds, and the stride cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingParams {
    pub omega: usize,
    pub alpha: usize,
    pub beta: usize,
    pub sigma: usize,
}

impl SamplingParams {
    pub fn new(omega: usize, alpha: usize, beta: usize, sigma: usize) -> Result<Self> {
        if omega < 1 {
            return Err(Error::invalid("omega must be at least 1"));
        }
        if alpha > beta {
            return Err(Error::invalid(format!("alpha {alpha} must not exceed beta {beta}")));
        }
        if sigma < omega {
            return Err(Error::invalid(format!(
                "sigma {sigma} must be at least omega {omega}"
            )));
        }
        Ok(SamplingParams { omega, alpha, beta, sigma })
    }
}

/// How one clip was sampled; enough to replay or audit the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    pub delta: usize,
    pub stride: usize,
    pub p1: usize,
    pub p2: usize,
    pub kept_indices: Vec<usize>,
}

impl SamplePlan {
    pub fn csv_header() -> &'static str {
        "clip_id,seed,delta,stride,p1,p2,kept_indices"
    }

    /// One CSV row; kept indices are `;`-joined inside the last cell.
    pub fn to_csv_row(&self, clip_id: &str, seed: u64) -> String {
        let idx = self
            .kept_indices
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{},{},{},{},{},{},{}",
            clip_id, seed, self.delta, self.stride, self.p1, self.p2, idx
        )
    }
}

/// Draw the stride jitter: uniform on the closed integer range [alpha, beta].
pub fn draw_delta(rng: &mut impl Rng, params: &SamplingParams) -> usize {
    rng.random_range(params.alpha..=params.beta)
}

/// Effective stride: S = min(omega + delta, sigma).
pub fn effective_stride(params: &SamplingParams, delta: usize) -> usize {
    (params.omega + delta).min(params.sigma)
}

/// Split the padding budget: with L = floor(N/omega) output slots and
/// K = floor(N/S) kept frames, p1 is uniform on [0, L-K] and p2 takes the rest.
pub fn pad_layout(rng: &mut impl Rng, n: usize, omega: usize, stride: usize) -> (usize, usize) {
    assert!(omega >= 1 && stride >= omega && n >= stride);
    let slots = n / omega;
    let kept = n / stride;
    debug_assert!(slots >= kept);
    let p1 = rng.random_range(0..=slots - kept);
    (p1, slots - kept - p1)
}

/// Sample a clip. The output has exactly floor(N/omega) frames: p1 blank
/// frames, the frames at source indices 0, S, 2S, ..., then p2 blanks.
pub fn delta_sample(
    clip: &Clip,
    params: &SamplingParams,
    rng: &mut impl Rng,
) -> Result<(Clip, SamplePlan)> {
    let n = clip.len();
    if n < params.sigma {
        return Err(Error::invalid(format!(
            "clip too short for sampling params: {} frames, sigma {}",
            n, params.sigma
        )));
    }
    let delta = draw_delta(rng, params);
    let stride = effective_stride(params, delta);
    let (p1, p2) = pad_layout(rng, n, params.omega, stride);
    let kept = n / stride;
    let kept_indices: Vec<usize> = (0..kept).map(|i| i * stride).collect();

    let blank = Frame::black(clip.width(), clip.height())?;
    let mut frames = Vec::with_capacity(n / params.omega);
    frames.extend(std::iter::repeat_n(blank.clone(), p1));
    frames.extend(kept_indices.iter().map(|&i| clip.frames()[i].clone()));
    frames.extend(std::iter::repeat_n(blank, p2));

    let sampled = Clip::new(frames, clip.label().map(str::to_owned))?;
    let plan = SamplePlan { delta, stride, p1, p2, kept_indices };
    Ok((sampled, plan))
}

//! Deterministic synthetic dark-action dataset generator.
//!
//! Each clip renders a textured shape moving over a textured background at
//! normal brightness, then darkens the whole clip with a gamma drawn from
//! the configured range. The true gamma lands in the manifest, so the
//! enhancement stage can be scored against ground truth.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiment::{Manifest, ManifestEntry, Split};
use crate::gamma::{darken, GammaValue};
use crate::media::{save_clip, Clip, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionClass {
    TranslateH,
    TranslateV,
    Diagonal,
    Circular,
    GrowShrink,
}

impl MotionClass {
    pub const ALL: [MotionClass; 5] = [
        MotionClass::TranslateH,
        MotionClass::TranslateV,
        MotionClass::Diagonal,
        MotionClass::Circular,
        MotionClass::GrowShrink,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionClass::TranslateH => "translate_h",
            MotionClass::TranslateV => "translate_v",
            MotionClass::Diagonal => "diagonal",
            MotionClass::Circular => "circular",
            MotionClass::GrowShrink => "grow_shrink",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown motion class `{name}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: Vec<MotionClass>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub frames_per_clip: usize,
    pub width: usize,
    pub height: usize,
    /// Texture contrast around the background/shape base levels, in gray
    /// levels.
    pub noise_amplitude: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    /// Optional per-frame gamma jitter amplitude; 0 keeps one gamma per clip.
    pub per_frame_jitter: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes.len() < 2 {
            return Err(Error::invalid("need at least two motion classes"));
        }
        if self.train_per_class == 0 {
            return Err(Error::invalid("need at least one training clip per class"));
        }
        if self.frames_per_clip == 0 {
            return Err(Error::invalid("need at least one frame per clip"));
        }
        if self.width < 64 || self.height < 64 {
            return Err(Error::invalid("frames must be at least 64x64"));
        }
        if !(1.0..=10.0).contains(&self.gamma_lo)
            || !(1.0..=10.0).contains(&self.gamma_hi)
            || self.gamma_lo > self.gamma_hi
        {
            return Err(Error::invalid("gamma range must satisfy 1 <= lo <= hi <= 10"));
        }
        if self.per_frame_jitter < 0.0 {
            return Err(Error::invalid("per-frame jitter must be non-negative"));
        }
        Ok(())
    }
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: MotionClass::ALL.to_vec(),
            train_per_class: 100,
            test_per_class: 40,
            frames_per_clip: 64,
            width: 170,
            height: 128,
            noise_amplitude: 20.0,
            gamma_lo: 2.0,
            gamma_hi: 5.0,
            per_frame_jitter: 0.0,
            seed: 42,
        }
    }
}

/// One float draw regardless of range, so clips generated under different
/// gamma ranges consume identical RNG sequences and render identically.
fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + rng.random::<f64>() * (hi - lo)
}

/// Coarse random lattice sampled with bilinear interpolation; `sample`
/// accepts fractional coordinates in lattice space times `cell`.
struct Texture {
    cell: f64,
    gw: usize,
    gh: usize,
    values: Vec<f64>,
}

impl Texture {
    fn generate(rng: &mut ChaCha8Rng, extent_x: f64, extent_y: f64, cell: f64, lo: f64, hi: f64) -> Self {
        let gw = (extent_x / cell).ceil() as usize + 2;
        let gh = (extent_y / cell).ceil() as usize + 2;
        let values = (0..gw * gh).map(|_| uniform(rng, lo, hi)).collect();
        Texture { cell, gw, gh, values }
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let fx = (x / self.cell).max(0.0);
        let fy = (y / self.cell).max(0.0);
        let x0 = (fx.floor() as usize).min(self.gw - 2);
        let y0 = (fy.floor() as usize).min(self.gh - 2);
        let tx = (fx - x0 as f64).clamp(0.0, 1.0);
        let ty = (fy - y0 as f64).clamp(0.0, 1.0);
        let g = |gx: usize, gy: usize| self.values[gy * self.gw + gx];
        let top = (1.0 - tx) * g(x0, y0) + tx * g(x0 + 1, y0);
        let bot = (1.0 - tx) * g(x0, y0 + 1) + tx * g(x0 + 1, y0 + 1);
        (1.0 - ty) * top + ty * bot
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-clip motion path: shape center and radius at frame t.
struct MotionPath {
    kind: MotionClass,
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    orbit_radius: f64,
    angular_speed: f64,
    phase: f64,
    radius0: f64,
    radius_amp: f64,
    radius_period: f64,
}

impl MotionPath {
    fn at(&self, t: f64) -> (f64, f64, f64) {
        match self.kind {
            MotionClass::TranslateH | MotionClass::TranslateV | MotionClass::Diagonal => {
                (self.x0 + self.dx * t, self.y0 + self.dy * t, self.radius0)
            }
            MotionClass::Circular => {
                let a = self.phase + self.angular_speed * t;
                (
                    self.x0 + self.orbit_radius * a.cos(),
                    self.y0 + self.orbit_radius * a.sin(),
                    self.radius0,
                )
            }
            MotionClass::GrowShrink => {
                let r = self.radius0
                    + self.radius_amp
                        * (self.phase + std::f64::consts::TAU * t / self.radius_period).sin();
                (self.x0, self.y0, r)
            }
        }
    }
}

fn plan_motion(class: MotionClass, spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> MotionPath {
    let (w, h) = (spec.width as f64, spec.height as f64);
    let n = spec.frames_per_clip as f64;
    let radius0 = uniform(rng, 12.0, 16.0);
    let margin = radius0 + 3.0;
    let speed = uniform(rng, 0.4, 0.6);
    // speed is capped so displacement between sampled frames stays within
    // what single-level differential flow can track
    let mut path = MotionPath {
        kind: class,
        x0: 0.0,
        y0: 0.0,
        dx: 0.0,
        dy: 0.0,
        orbit_radius: 0.0,
        angular_speed: 0.0,
        phase: uniform(rng, 0.0, std::f64::consts::TAU),
        radius0,
        radius_amp: 0.0,
        radius_period: 128.0,
    };
    let travel = speed * (n - 1.0);
    let place = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| uniform(rng, lo, hi.max(lo + 1e-9));
    // translation classes move in one canonical direction each (right,
    // down, down-right); start position and speed still vary per clip.
    // A class that mixed opposite directions would be a union of disjoint
    // flow signatures, which the linear head cannot represent.
    match class {
        MotionClass::TranslateH => {
            path.dx = speed;
            path.y0 = place(rng, margin, h - margin);
            path.x0 = place(rng, margin, (w - margin - travel).max(margin));
        }
        MotionClass::TranslateV => {
            path.dy = speed;
            path.x0 = place(rng, margin, w - margin);
            path.y0 = place(rng, margin, (h - margin - travel).max(margin));
        }
        MotionClass::Diagonal => {
            let step = speed / std::f64::consts::SQRT_2;
            path.dx = step;
            path.dy = step;
            let reach = step * (n - 1.0);
            path.x0 = place(rng, margin, (w - margin - reach).max(margin));
            path.y0 = place(rng, margin, (h - margin - reach).max(margin));
        }
        MotionClass::Circular => {
            // small orbit so the clip covers most of a revolution while the
            // tangential speed stays trackable by differential flow
            path.orbit_radius = uniform(rng, 7.0, 10.0);
            let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
            path.angular_speed = dir * speed / path.orbit_radius;
            let reach = path.orbit_radius + margin;
            path.x0 = place(rng, reach, w - reach);
            path.y0 = place(rng, reach, h - reach);
        }
        MotionClass::GrowShrink => {
            path.x0 = w / 2.0 + uniform(rng, -10.0, 10.0);
            path.y0 = h / 2.0 + uniform(rng, -10.0, 10.0);
            path.radius_amp = uniform(rng, 6.0, 8.0);
            // short enough that most clips see both the grow and the
            // shrink phase, keeping the radial signature bimodal
            path.radius_period = uniform(rng, 80.0, 112.0);
        }
    }
    path
}

/// Render one clip at normal brightness. Draw order is fixed so that specs
/// differing only in gamma range produce identical renders.
fn render_clip(class: MotionClass, spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Clip {
    let (w, h) = (spec.width, spec.height);
    let amp = spec.noise_amplitude;
    let background = Texture::generate(rng, w as f64, h as f64, 16.0, 110.0 - amp, 110.0 + amp);
    // shape texture lives in shape-local coordinates, offset to stay positive;
    // coarse enough that the largest sampled-frame displacement stays within
    // the differential-flow linearization range
    let shape_tex = Texture::generate(rng, 160.0, 160.0, 10.0, 185.0 - amp, 185.0 + amp);
    let path = plan_motion(class, spec, rng);
    // fixed-pattern sensor noise: static across frames, so darkness-amplified
    // enhancement does not turn it into fake temporal signal
    let dither_seed = rng.random::<u64>();

    let mut bg_pixels = vec![0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let hash = splitmix(dither_seed ^ ((y * w + x) as u64));
            let dither = (hash % 5) as f64 - 2.0;
            bg_pixels[y * w + x] = background.sample(x as f64, y as f64) + dither;
        }
    }

    let frames: Vec<Frame> = (0..spec.frames_per_clip)
        .map(|t| {
            let (cx, cy, r) = path.at(t as f64);
            let mut pixels = Vec::with_capacity(w * h * 3);
            let r2 = r * r;
            for y in 0..h {
                for x in 0..w {
                    let ddx = x as f64 - cx;
                    let ddy = y as f64 - cy;
                    let base = if ddx * ddx + ddy * ddy <= r2 {
                        // texture anchored to (and scaled with) the shape
                        let scale = path.radius0 / r;
                        shape_tex.sample(ddx * scale + 80.0, ddy * scale + 80.0)
                    } else {
                        bg_pixels[y * w + x]
                    };
                    // mild warm/cool channel tinting
                    let px = [base * 1.02, base, base * 0.97];
                    for c in px {
                        pixels.push(c.round().clamp(0.0, 255.0) as u8);
                    }
                }
            }
            Frame::new(w, h, pixels).expect("rendered frame is well-formed")
        })
        .collect();
    Clip::new(frames, Some(class.name().to_string())).expect("rendered clip is well-formed")
}

/// Generate the dataset under `out_dir`: one DLV1 file per clip plus
/// `manifest.csv`. Fully deterministic from the spec's master seed; clip i
/// uses RNG stream i.
pub fn gen_synthetic(spec: &SyntheticSpec, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;

    struct Task {
        class: MotionClass,
        within_class: usize,
        stream: u64,
        split: Split,
    }
    let mut tasks = Vec::new();
    for &class in &spec.classes {
        for i in 0..spec.train_per_class + spec.test_per_class {
            let split = if i < spec.train_per_class { Split::Train } else { Split::Test };
            tasks.push(Task { class, within_class: i, stream: tasks.len() as u64, split });
        }
    }

    let entries: Vec<ManifestEntry> = tasks
        .par_iter()
        .map(|task| -> Result<ManifestEntry> {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(task.stream);
            // gamma first: the clip's label-of-record
            let clip_gamma = uniform(&mut rng, spec.gamma_lo, spec.gamma_hi);
            let rendered = render_clip(task.class, spec, &mut rng);
            let frames = rendered
                .frames()
                .iter()
                .map(|frame| {
                    let g = if spec.per_frame_jitter > 0.0 {
                        let j = uniform(&mut rng, -spec.per_frame_jitter, spec.per_frame_jitter);
                        GammaValue::clamped(clip_gamma + j)
                    } else {
                        GammaValue::clamped(clip_gamma)
                    };
                    darken(frame, g)
                })
                .collect();
            let dark = Clip::new(frames, rendered.label().map(str::to_owned))?;
            let file_name = format!("{}_{:04}.dlv", task.class.name(), task.within_class);
            save_clip(&dark, out_dir.join(&file_name))?;
            Ok(ManifestEntry {
                path: file_name,
                label: task.class.name().to_string(),
                seed: task.stream,
                gamma: clip_gamma,
                split: task.split,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest::new(out_dir, entries)?;
    manifest.save(out_dir.join("manifest.csv"))?;
    Ok(manifest)
}

//! Pipeline configuration and the end-to-end clip scoring path:
//! delta-sample, crop, enhance, extract the dark/light/flow streams,
//! fuse, and classify.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{softmax, ClassifierModel, TrainHyper};
use crate::error::{Error, Result};
use crate::features::{extract_appearance, extract_hof, fuse, FeatureVector, FusionMode};
use crate::flow::{clip_flow, ClipFlow, FlowMethod, FlowParams};
use crate::gamma::{enhance_clip, EnhanceMode, GammaRegressor, GammaValue};
use crate::geometry::{center_crop, maxcenter_crop, scale_bilinear};
use crate::media::{Clip, Frame};
use crate::sampling::{delta_sample, SamplePlan, SamplingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CropMode {
    Center,
    Maxcenter,
    Scale,
}

impl CropMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CropMode::Center => "center",
            CropMode::Maxcenter => "maxcenter",
            CropMode::Scale => "scale",
        }
    }
}

impl std::str::FromStr for CropMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(CropMode::Center),
            "maxcenter" => Ok(CropMode::Maxcenter),
            "scale" => Ok(CropMode::Scale),
            other => Err(Error::invalid(format!("unknown crop mode `{other}`"))),
        }
    }
}

/// One resize strategy with its output side length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropSpec {
    pub mode: CropMode,
    pub size: usize,
}

impl CropSpec {
    pub fn apply(&self, frame: &Frame) -> Result<Frame> {
        match self.mode {
            CropMode::Center => center_crop(frame, self.size),
            CropMode::Maxcenter => maxcenter_crop(frame, Some(self.size)),
            CropMode::Scale => scale_bilinear(frame, self.size, self.size),
        }
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.mode.as_str(), self.size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnhanceKind {
    /// No light stream: dark appearance plus flow only.
    Off,
    Fixed,
    Target,
    Regressor,
}

impl EnhanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnhanceKind::Off => "off",
            EnhanceKind::Fixed => "fixed",
            EnhanceKind::Target => "target",
            EnhanceKind::Regressor => "regressor",
        }
    }
}

impl std::str::FromStr for EnhanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(EnhanceKind::Off),
            "fixed" => Ok(EnhanceKind::Fixed),
            "target" => Ok(EnhanceKind::Target),
            "regressor" => Ok(EnhanceKind::Regressor),
            other => Err(Error::invalid(format!("unknown enhance mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceConfig {
    pub kind: EnhanceKind,
    /// Gamma for `fixed` mode.
    pub gamma: f64,
    /// Target mean intensity for `target` mode (and the teacher label source
    /// when a regressor is trained from a manifest).
    pub target_mean: f64,
    /// Estimate one gamma per clip instead of per frame.
    pub per_video: bool,
    /// Serialized regressor location for `regressor` mode; empty means
    /// "train one from the training split".
    pub model_path: String,
}

/// Full declarative description of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub sampling: SamplingParams,
    pub crop_train: CropSpec,
    pub crop_test: CropSpec,
    pub enhance: EnhanceConfig,
    pub flow: FlowParams,
    pub fusion: FusionMode,
    pub grid: usize,
    pub hof_bins: usize,
    pub classifier: TrainHyper,
    pub use_softmax_at_eval: bool,
}

impl PipelineConfig {
    /// Benchmark defaults: delta sampling at omega 4, maxcenter 128 crops,
    /// target-mean enhancement, LK flow, concat fusion.
    pub fn benchmark_default() -> Self {
        PipelineConfig {
            seed: 42,
            sampling: SamplingParams::new(4, 0, 2, 8).expect("valid defaults"),
            crop_train: CropSpec { mode: CropMode::Maxcenter, size: 128 },
            crop_test: CropSpec { mode: CropMode::Maxcenter, size: 128 },
            enhance: EnhanceConfig {
                kind: EnhanceKind::Target,
                gamma: 1.0,
                target_mean: 102.0,
                per_video: false,
                model_path: String::new(),
            },
            flow: FlowParams {
                method: FlowMethod::LucasKanade,
                window: 15,
                hs_alpha: 1.0,
                hs_iters: 200,
            },
            fusion: FusionMode::Concat,
            grid: 4,
            hof_bins: 8,
            classifier: TrainHyper::default(),
            use_softmax_at_eval: false,
        }
    }

    /// Canonical flat key=value serialization; keys in fixed order.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "sampling.omega={}", self.sampling.omega);
        let _ = writeln!(s, "sampling.alpha={}", self.sampling.alpha);
        let _ = writeln!(s, "sampling.beta={}", self.sampling.beta);
        let _ = writeln!(s, "sampling.sigma={}", self.sampling.sigma);
        let _ = writeln!(s, "crop_train.mode={}", self.crop_train.mode.as_str());
        let _ = writeln!(s, "crop_train.size={}", self.crop_train.size);
        let _ = writeln!(s, "crop_test.mode={}", self.crop_test.mode.as_str());
        let _ = writeln!(s, "crop_test.size={}", self.crop_test.size);
        let _ = writeln!(s, "enhance.mode={}", self.enhance.kind.as_str());
        let _ = writeln!(s, "enhance.gamma={}", self.enhance.gamma);
        let _ = writeln!(s, "enhance.target_mean={}", self.enhance.target_mean);
        let _ = writeln!(s, "enhance.per_video={}", self.enhance.per_video);
        let _ = writeln!(s, "enhance.model_path={}", self.enhance.model_path);
        let _ = writeln!(
            s,
            "flow.method={}",
            match self.flow.method {
                FlowMethod::LucasKanade => "lk",
                FlowMethod::HornSchunck => "hs",
            }
        );
        let _ = writeln!(s, "flow.window={}", self.flow.window);
        let _ = writeln!(s, "flow.hs_alpha={}", self.flow.hs_alpha);
        let _ = writeln!(s, "flow.hs_iters={}", self.flow.hs_iters);
        let _ = writeln!(
            s,
            "fusion={}",
            match self.fusion {
                FusionMode::Concat => "concat",
                FusionMode::ElementwiseMin => "min",
            }
        );
        let _ = writeln!(s, "features.grid={}", self.grid);
        let _ = writeln!(s, "features.hof_bins={}", self.hof_bins);
        let _ = writeln!(s, "classifier.learning_rate={}", self.classifier.learning_rate);
        let _ = writeln!(s, "classifier.epochs={}", self.classifier.epochs);
        let _ = writeln!(s, "classifier.l2={}", self.classifier.l2);
        let _ = writeln!(s, "eval.use_softmax={}", self.use_softmax_at_eval);
        s
    }

    /// Parse the flat key=value format: one key per line, `#` comments,
    /// every key present exactly once, unknown keys rejected.
    pub fn from_config_string(text: &str) -> Result<Self> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim();
            if map.insert(key, value.trim()).is_some() {
                return Err(Error::format(format!("duplicate key `{key}`")));
            }
        }
        const KNOWN: [&str; 25] = [
            "seed",
            "sampling.omega",
            "sampling.alpha",
            "sampling.beta",
            "sampling.sigma",
            "crop_train.mode",
            "crop_train.size",
            "crop_test.mode",
            "crop_test.size",
            "enhance.mode",
            "enhance.gamma",
            "enhance.target_mean",
            "enhance.per_video",
            "enhance.model_path",
            "flow.method",
            "flow.window",
            "flow.hs_alpha",
            "flow.hs_iters",
            "fusion",
            "features.grid",
            "features.hof_bins",
            "classifier.learning_rate",
            "classifier.epochs",
            "classifier.l2",
            "eval.use_softmax",
        ];
        for key in map.keys() {
            if !KNOWN.contains(key) {
                return Err(Error::format(format!("unknown key `{key}`")));
            }
        }
        let get = |key: &str| -> Result<&str> {
            map.get(key)
                .copied()
                .ok_or_else(|| Error::format(format!("missing key `{key}`")))
        };
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse::<T>()
                .map_err(|_| Error::format(format!("bad value for `{key}`: `{value}`")))
        }

        let sampling = SamplingParams::new(
            parse("sampling.omega", get("sampling.omega")?)?,
            parse("sampling.alpha", get("sampling.alpha")?)?,
            parse("sampling.beta", get("sampling.beta")?)?,
            parse("sampling.sigma", get("sampling.sigma")?)?,
        )?;
        let flow_method = match get("flow.method")? {
            "lk" => FlowMethod::LucasKanade,
            "hs" => FlowMethod::HornSchunck,
            other => return Err(Error::format(format!("unknown flow method `{other}`"))),
        };
        let fusion = match get("fusion")? {
            "concat" => FusionMode::Concat,
            "min" => FusionMode::ElementwiseMin,
            other => return Err(Error::format(format!("unknown fusion mode `{other}`"))),
        };
        let config = PipelineConfig {
            seed: parse("seed", get("seed")?)?,
            sampling,
            crop_train: CropSpec {
                mode: parse("crop_train.mode", get("crop_train.mode")?)?,
                size: parse("crop_train.size", get("crop_train.size")?)?,
            },
            crop_test: CropSpec {
                mode: parse("crop_test.mode", get("crop_test.mode")?)?,
                size: parse("crop_test.size", get("crop_test.size")?)?,
            },
            enhance: EnhanceConfig {
                kind: parse("enhance.mode", get("enhance.mode")?)?,
                gamma: parse("enhance.gamma", get("enhance.gamma")?)?,
                target_mean: parse("enhance.target_mean", get("enhance.target_mean")?)?,
                per_video: parse("enhance.per_video", get("enhance.per_video")?)?,
                model_path: get("enhance.model_path")?.to_string(),
            },
            flow: FlowParams {
                method: flow_method,
                window: parse("flow.window", get("flow.window")?)?,
                hs_alpha: parse("flow.hs_alpha", get("flow.hs_alpha")?)?,
                hs_iters: parse("flow.hs_iters", get("flow.hs_iters")?)?,
            },
            fusion,
            grid: parse("features.grid", get("features.grid")?)?,
            hof_bins: parse("features.hof_bins", get("features.hof_bins")?)?,
            classifier: TrainHyper {
                learning_rate: parse("classifier.learning_rate", get("classifier.learning_rate")?)?,
                epochs: parse("classifier.epochs", get("classifier.epochs")?)?,
                l2: parse("classifier.l2", get("classifier.l2")?)?,
            },
            use_softmax_at_eval: parse("eval.use_softmax", get("eval.use_softmax")?)?,
        };
        Ok(config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_config_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config_string(&fs::read_to_string(path)?)
    }

    /// FNV-1a hash of the canonical serialization, as 16 hex digits.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_config_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Trained models the pipeline needs at inference time.
#[derive(Debug, Clone)]
pub struct PipelineModels {
    pub classifier: ClassifierModel,
    pub gamma: Option<GammaRegressor>,
}

/// Per-stage intermediates of one clip's pass, for debugging dumps.
#[derive(Debug, Clone)]
pub struct PipelineStages {
    pub plan: SamplePlan,
    pub cropped: Clip,
    /// Enhanced clip and per-frame gamma trace; absent when enhancement is off.
    pub enhanced: Option<(Clip, Vec<GammaValue>)>,
    pub flow: ClipFlow,
    pub features: FeatureVector,
}

fn enhance_mode_from_config(
    enhance: &EnhanceConfig,
    gamma_model: Option<&GammaRegressor>,
) -> Result<Option<EnhanceMode>> {
    match enhance.kind {
        EnhanceKind::Off => Ok(None),
        EnhanceKind::Fixed => Ok(Some(EnhanceMode::Fixed(GammaValue::new(enhance.gamma)?))),
        EnhanceKind::Target => Ok(Some(EnhanceMode::Target { target_mean: enhance.target_mean })),
        EnhanceKind::Regressor => {
            let model = gamma_model
                .ok_or_else(|| Error::invalid("regressor enhancement needs a fitted gamma model"))?;
            Ok(Some(EnhanceMode::Regressor(model.clone())))
        }
    }
}

/// Run the preprocessing and feature path for one clip, keeping stage
/// intermediates. `rng_stream` selects the per-clip RNG stream under the
/// config seed so whole datasets stay deterministic regardless of order.
pub fn extract_clip_stages(
    clip: &Clip,
    config: &PipelineConfig,
    crop: &CropSpec,
    gamma_model: Option<&GammaRegressor>,
    rng_stream: u64,
) -> Result<PipelineStages> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(rng_stream);

    let (sampled, plan) = delta_sample(clip, &config.sampling, &mut rng)?;
    let cropped = sampled.map_frames(|f| crop.apply(f))?;

    let dark_app = extract_appearance(&cropped, config.grid)?;
    let mode = enhance_mode_from_config(&config.enhance, gamma_model)?;
    let (appearance, enhanced) = match mode {
        None => (dark_app, None),
        Some(mode) => {
            let (light, trace) = enhance_clip(&cropped, &mode, config.enhance.per_video)?;
            let light_app = extract_appearance(&light, config.grid)?;
            let fused = fuse(&dark_app, &light_app, config.fusion)?;
            (fused, Some((light, trace)))
        }
    };
    // The flow stream always reads the un-enhanced clip: flow is its own
    // input path, and per-frame enhancement would modulate static regions
    // between frames, turning brightness wobble into spurious motion.
    let flow = clip_flow(&cropped, &config.flow)?;
    let hof = extract_hof(&flow.fields, config.grid, config.hof_bins)?;
    let features = appearance.stack(&hof);

    Ok(PipelineStages { plan, cropped, enhanced, flow, features })
}

/// Feature vector for one clip under the given crop strategy.
pub fn extract_clip_features(
    clip: &Clip,
    config: &PipelineConfig,
    crop: &CropSpec,
    gamma_model: Option<&GammaRegressor>,
    rng_stream: u64,
) -> Result<FeatureVector> {
    Ok(extract_clip_stages(clip, config, crop, gamma_model, rng_stream)?.features)
}

/// End-to-end scores for one clip using the test-time crop. Deterministic
/// given (config, models, rng_stream).
pub fn run_pipeline(
    clip: &Clip,
    config: &PipelineConfig,
    models: &PipelineModels,
    rng_stream: u64,
) -> Result<Vec<f64>> {
    let features = extract_clip_features(
        clip,
        config,
        &config.crop_test,
        models.gamma.as_ref(),
        rng_stream,
    )?;
    let scores = models.classifier.scores(&features)?;
    Ok(if config.use_softmax_at_eval {
        softmax(&scores)
    } else {
        scores
    })
}

//! Python extension module exposing the main darklight types and operations.
//!
//! Build with `cargo build -p darklight-py --release`; the resulting
//! `libdarklight.so` imports as the `darklight` module once renamed to
//! `darklight.so` (see python/smoke_test.py).

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use darklight_core as core;
use darklight_core::pipeline::PipelineConfig;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(_) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn gamma_value(g: f64) -> PyResult<core::gamma::GammaValue> {
    core::gamma::GammaValue::new(g).map_err(err)
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Frame {
    inner: core::Frame,
}

#[pymethods]
impl Frame {
    /// Frame from raw interleaved RGB bytes (length = width*height*3).
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<u8>) -> PyResult<Self> {
        Ok(Frame { inner: core::Frame::new(width, height, pixels).map_err(err)? })
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, rgb: (u8, u8, u8)) -> PyResult<Self> {
        Ok(Frame {
            inner: core::Frame::filled(width, height, [rgb.0, rgb.1, rgb.2]).map_err(err)?,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.pixels())
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<(u8, u8, u8)> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("pixel out of bounds"));
        }
        let [r, g, b] = self.inner.pixel(x, y);
        Ok((r, g, b))
    }

    fn mean_luma(&self) -> f64 {
        self.inner.mean_luma()
    }

    fn luma(&self) -> Vec<f64> {
        self.inner.luma()
    }

    fn __repr__(&self) -> String {
        format!("Frame({}x{})", self.inner.width(), self.inner.height())
    }
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Clip {
    inner: core::Clip,
}

#[pymethods]
impl Clip {
    #[new]
    #[pyo3(signature = (frames, label=None))]
    fn new(frames: Vec<Frame>, label: Option<String>) -> PyResult<Self> {
        let frames = frames.into_iter().map(|f| f.inner).collect();
        Ok(Clip { inner: core::Clip::new(frames, label).map_err(err)? })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn label(&self) -> Option<String> {
        self.inner.label().map(str::to_owned)
    }

    fn frame(&self, index: usize) -> PyResult<Frame> {
        self.inner
            .frames()
            .get(index)
            .map(|f| Frame { inner: f.clone() })
            .ok_or_else(|| PyValueError::new_err("frame index out of range"))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Clip({} frames, {}x{}, label={:?})",
            self.inner.len(),
            self.inner.width(),
            self.inner.height(),
            self.inner.label()
        )
    }
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct FlowField {
    inner: core::FlowField,
}

#[pymethods]
impl FlowField {
    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn at(&self, x: usize, y: usize) -> PyResult<(f32, f32)> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("flow index out of bounds"));
        }
        Ok(self.inner.at(x, y))
    }

    fn vectors(&self) -> Vec<(f32, f32)> {
        self.inner.vectors().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("FlowField({}x{})", self.inner.width(), self.inner.height())
    }
}

#[pyclass(frozen)]
struct FeatureVector {
    values: Vec<f64>,
    schema: String,
}

#[pymethods]
impl FeatureVector {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[getter]
    fn schema(&self) -> String {
        self.schema.clone()
    }

    fn __len__(&self) -> usize {
        self.values.len()
    }

    fn __repr__(&self) -> String {
        format!("FeatureVector({}, len {})", self.schema, self.values.len())
    }
}

impl From<core::features::FeatureVector> for FeatureVector {
    fn from(fv: core::features::FeatureVector) -> Self {
        FeatureVector { values: fv.values, schema: fv.schema }
    }
}

#[pyclass(frozen)]
struct GammaRegressor {
    inner: core::gamma::GammaRegressor,
}

#[pymethods]
impl GammaRegressor {
    /// Fit from (frame, gamma) training pairs.
    #[staticmethod]
    fn fit(frames: Vec<Frame>, gammas: Vec<f64>) -> PyResult<Self> {
        if frames.len() != gammas.len() {
            return Err(PyValueError::new_err("frames and gammas must align"));
        }
        let pairs: Vec<(core::Frame, core::gamma::GammaValue)> = frames
            .into_iter()
            .zip(gammas)
            .map(|(f, g)| Ok((f.inner, gamma_value(g)?)))
            .collect::<PyResult<_>>()?;
        Ok(GammaRegressor { inner: core::gamma::fit_gamma_regressor(&pairs).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(GammaRegressor { inner: core::gamma::GammaRegressor::load(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    fn predict(&self, frame: &Frame) -> f64 {
        self.inner.predict(&frame.inner).value()
    }

    #[getter]
    fn trained_on(&self) -> usize {
        self.inner.trained_on
    }
}

// ---------------------------------------------------------------------------
// media I/O
// ---------------------------------------------------------------------------

#[pyfunction]
fn load_ppm(path: &str) -> PyResult<Frame> {
    Ok(Frame { inner: core::media::load_ppm(path).map_err(err)? })
}

#[pyfunction]
fn save_ppm(frame: &Frame, path: &str) -> PyResult<()> {
    core::media::save_ppm(&frame.inner, path).map_err(err)
}

#[pyfunction]
fn load_clip(path: &str) -> PyResult<Clip> {
    Ok(Clip { inner: core::media::load_clip(path).map_err(err)? })
}

#[pyfunction]
fn save_clip(clip: &Clip, path: &str) -> PyResult<()> {
    core::media::save_clip(&clip.inner, path).map_err(err)
}

#[pyfunction]
fn load_flow(path: &str) -> PyResult<FlowField> {
    Ok(FlowField { inner: core::media::load_flow(path).map_err(err)? })
}

#[pyfunction]
fn save_flow(field: &FlowField, path: &str) -> PyResult<()> {
    core::media::save_flow(&field.inner, path).map_err(err)
}

/// Per-channel value counts: 3 lists of 256 integers (R, G, B).
#[pyfunction]
fn histogram(frame: &Frame) -> Vec<Vec<u64>> {
    let h = core::media::histogram(&frame.inner);
    h.bins.iter().map(|b| b.to_vec()).collect()
}

// ---------------------------------------------------------------------------
// gamma
// ---------------------------------------------------------------------------

#[pyfunction]
fn apply_gamma(frame: &Frame, gamma: f64) -> PyResult<Frame> {
    Ok(Frame { inner: core::gamma::apply_gamma(&frame.inner, gamma_value(gamma)?) })
}

#[pyfunction]
fn darken(frame: &Frame, gamma: f64) -> PyResult<Frame> {
    Ok(Frame { inner: core::gamma::darken(&frame.inner, gamma_value(gamma)?) })
}

#[pyfunction]
fn mean_enhanced_intensity(frame: &Frame, gamma: f64) -> PyResult<f64> {
    Ok(core::gamma::mean_enhanced_intensity(&frame.inner, gamma_value(gamma)?))
}

/// Returns (gamma, degenerate): degenerate is true for an all-black frame.
#[pyfunction]
fn estimate_gamma_target(frame: &Frame, target_mean: f64) -> PyResult<(f64, bool)> {
    let est = core::gamma::estimate_gamma_target(&frame.inner, target_mean).map_err(err)?;
    Ok((est.gamma.value(), est.degenerate))
}

/// Enhance a clip; returns (clip, per-frame gamma trace).
/// mode: "target" | "fixed" | "regressor".
#[pyfunction]
#[pyo3(signature = (clip, mode="target", gamma=1.0, target_mean=102.0, model_path=None, per_video=false))]
fn enhance_clip(
    clip: &Clip,
    mode: &str,
    gamma: f64,
    target_mean: f64,
    model_path: Option<&str>,
    per_video: bool,
) -> PyResult<(Clip, Vec<f64>)> {
    let mode = match mode {
        "fixed" => core::gamma::EnhanceMode::Fixed(gamma_value(gamma)?),
        "target" => core::gamma::EnhanceMode::Target { target_mean },
        "regressor" => {
            let path = model_path
                .ok_or_else(|| PyValueError::new_err("regressor mode needs model_path"))?;
            core::gamma::EnhanceMode::Regressor(
                core::gamma::GammaRegressor::load(path).map_err(err)?,
            )
        }
        other => return Err(PyValueError::new_err(format!("unknown enhance mode `{other}`"))),
    };
    let (enhanced, trace) = core::gamma::enhance_clip(&clip.inner, &mode, per_video).map_err(err)?;
    Ok((
        Clip { inner: enhanced },
        trace.into_iter().map(|g| g.value()).collect(),
    ))
}

// ---------------------------------------------------------------------------
// sampling and geometry
// ---------------------------------------------------------------------------

/// (delta, stride, p1, p2, kept source indices) of one sampling run.
type PlanTuple = (usize, usize, usize, usize, Vec<usize>);

/// Delta-sample a clip. Returns (clip, plan) where plan is the tuple
/// (delta, stride, p1, p2, kept_indices).
#[pyfunction]
#[pyo3(signature = (clip, omega, alpha, beta, sigma, seed=42))]
fn delta_sample(
    clip: &Clip,
    omega: usize,
    alpha: usize,
    beta: usize,
    sigma: usize,
    seed: u64,
) -> PyResult<(Clip, PlanTuple)> {
    use rand::SeedableRng;
    let params = core::sampling::SamplingParams::new(omega, alpha, beta, sigma).map_err(err)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (sampled, plan) = core::sampling::delta_sample(&clip.inner, &params, &mut rng).map_err(err)?;
    Ok((
        Clip { inner: sampled },
        (plan.delta, plan.stride, plan.p1, plan.p2, plan.kept_indices),
    ))
}

#[pyfunction]
#[pyo3(signature = (frame, side=112))]
fn center_crop(frame: &Frame, side: usize) -> PyResult<Frame> {
    Ok(Frame { inner: core::geometry::center_crop(&frame.inner, side).map_err(err)? })
}

/// Centered square crop; side defaults to min(width, height).
#[pyfunction]
#[pyo3(signature = (frame, side=None))]
fn maxcenter_crop(frame: &Frame, side: Option<usize>) -> PyResult<Frame> {
    Ok(Frame { inner: core::geometry::maxcenter_crop(&frame.inner, side).map_err(err)? })
}

#[pyfunction]
fn scale_bilinear(frame: &Frame, out_h: usize, out_w: usize) -> PyResult<Frame> {
    Ok(Frame { inner: core::geometry::scale_bilinear(&frame.inner, out_h, out_w).map_err(err)? })
}

// ---------------------------------------------------------------------------
// optical flow and features
// ---------------------------------------------------------------------------

/// Dense Lucas-Kanade flow; returns (field, low_confidence mask).
#[pyfunction]
#[pyo3(signature = (f1, f2, window=15))]
fn lucas_kanade(f1: &Frame, f2: &Frame, window: usize) -> PyResult<(FlowField, Vec<bool>)> {
    let (field, low) = core::flow::lucas_kanade(&f1.inner, &f2.inner, window).map_err(err)?;
    Ok((FlowField { inner: field }, low))
}

#[pyfunction]
#[pyo3(signature = (f1, f2, alpha=1.0, iters=200))]
fn horn_schunck(f1: &Frame, f2: &Frame, alpha: f64, iters: usize) -> PyResult<FlowField> {
    Ok(FlowField {
        inner: core::flow::horn_schunck(&f1.inner, &f2.inner, alpha, iters).map_err(err)?,
    })
}

/// Flow fields for all consecutive frame pairs; returns
/// (fields, padding flags). method: "lk" | "hs".
#[pyfunction]
#[pyo3(signature = (clip, method="lk", window=15, alpha=1.0, iters=200))]
fn clip_flow(
    clip: &Clip,
    method: &str,
    window: usize,
    alpha: f64,
    iters: usize,
) -> PyResult<(Vec<FlowField>, Vec<bool>)> {
    let params = match method {
        "lk" => core::flow::FlowParams::lucas_kanade(window).map_err(err)?,
        "hs" => core::flow::FlowParams::horn_schunck(alpha, iters).map_err(err)?,
        other => return Err(PyValueError::new_err(format!("unknown flow method `{other}`"))),
    };
    let out = core::flow::clip_flow(&clip.inner, &params).map_err(err)?;
    Ok((
        out.fields.into_iter().map(|f| FlowField { inner: f }).collect(),
        out.is_padding,
    ))
}

#[pyfunction]
#[pyo3(signature = (clip, grid=4))]
fn extract_appearance(clip: &Clip, grid: usize) -> PyResult<FeatureVector> {
    Ok(core::features::extract_appearance(&clip.inner, grid).map_err(err)?.into())
}

#[pyfunction]
#[pyo3(signature = (fields, grid=4, bins=8))]
fn extract_hof(fields: Vec<FlowField>, grid: usize, bins: usize) -> PyResult<FeatureVector> {
    let fields: Vec<core::FlowField> = fields.into_iter().map(|f| f.inner).collect();
    Ok(core::features::extract_hof(&fields, grid, bins).map_err(err)?.into())
}

/// Fuse two same-schema feature vectors; mode: "concat" | "min".
#[pyfunction]
#[pyo3(signature = (dark, light, mode="concat"))]
fn fuse(dark: &FeatureVector, light: &FeatureVector, mode: &str) -> PyResult<FeatureVector> {
    let m = match mode {
        "concat" => core::features::FusionMode::Concat,
        "min" => core::features::FusionMode::ElementwiseMin,
        other => return Err(PyValueError::new_err(format!("unknown fusion mode `{other}`"))),
    };
    let a = core::features::FeatureVector::new(dark.values.clone(), dark.schema.clone());
    let b = core::features::FeatureVector::new(light.values.clone(), light.schema.clone());
    Ok(core::features::fuse(&a, &b, m).map_err(err)?.into())
}

// ---------------------------------------------------------------------------
// dataset generation and experiments
// ---------------------------------------------------------------------------

/// Generate a synthetic dark-action dataset; returns the manifest path.
#[pyfunction]
#[pyo3(signature = (out_dir, classes=None, train_per_class=100, test_per_class=40,
                    frames_per_clip=64, width=170, height=128, noise_amplitude=20.0,
                    gamma_lo=2.0, gamma_hi=5.0, seed=42))]
#[allow(clippy::too_many_arguments)]
fn gen_synthetic(
    out_dir: &str,
    classes: Option<Vec<String>>,
    train_per_class: usize,
    test_per_class: usize,
    frames_per_clip: usize,
    width: usize,
    height: usize,
    noise_amplitude: f64,
    gamma_lo: f64,
    gamma_hi: f64,
    seed: u64,
) -> PyResult<String> {
    let classes = match classes {
        None => core::synth::MotionClass::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| core::synth::MotionClass::from_name(n).map_err(err))
            .collect::<PyResult<_>>()?,
    };
    let spec = core::synth::SyntheticSpec {
        classes,
        train_per_class,
        test_per_class,
        frames_per_clip,
        width,
        height,
        noise_amplitude,
        gamma_lo,
        gamma_hi,
        per_frame_jitter: 0.0,
        seed,
    };
    core::synth::gen_synthetic(&spec, out_dir).map_err(err)?;
    Ok(format!("{out_dir}/manifest.csv"))
}

/// Train on the manifest's train split and evaluate its test split;
/// returns (top1, top5). The config file is optional.
#[pyfunction]
#[pyo3(signature = (train_manifest, test_manifest, config_path=None))]
fn run_experiment(
    train_manifest: &str,
    test_manifest: &str,
    config_path: Option<&str>,
) -> PyResult<(f64, f64)> {
    let config = match config_path {
        Some(p) => PipelineConfig::load(p).map_err(err)?,
        None => PipelineConfig::benchmark_default(),
    };
    let train = core::experiment::Manifest::load(train_manifest).map_err(err)?;
    let test = core::experiment::Manifest::load(test_manifest).map_err(err)?;
    let outcome = core::experiment::run_experiment(&config, &train, &test).map_err(err)?;
    Ok((outcome.row.top1, outcome.row.top5))
}

#[pymodule]
fn darklight(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Frame>()?;
    m.add_class::<Clip>()?;
    m.add_class::<FlowField>()?;
    m.add_class::<FeatureVector>()?;
    m.add_class::<GammaRegressor>()?;
    m.add_function(wrap_pyfunction!(load_ppm, m)?)?;
    m.add_function(wrap_pyfunction!(save_ppm, m)?)?;
    m.add_function(wrap_pyfunction!(load_clip, m)?)?;
    m.add_function(wrap_pyfunction!(save_clip, m)?)?;
    m.add_function(wrap_pyfunction!(load_flow, m)?)?;
    m.add_function(wrap_pyfunction!(save_flow, m)?)?;
    m.add_function(wrap_pyfunction!(histogram, m)?)?;
    m.add_function(wrap_pyfunction!(apply_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(darken, m)?)?;
    m.add_function(wrap_pyfunction!(mean_enhanced_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_gamma_target, m)?)?;
    m.add_function(wrap_pyfunction!(enhance_clip, m)?)?;
    m.add_function(wrap_pyfunction!(delta_sample, m)?)?;
    m.add_function(wrap_pyfunction!(center_crop, m)?)?;
    m.add_function(wrap_pyfunction!(maxcenter_crop, m)?)?;
    m.add_function(wrap_pyfunction!(scale_bilinear, m)?)?;
    m.add_function(wrap_pyfunction!(lucas_kanade, m)?)?;
    m.add_function(wrap_pyfunction!(horn_schunck, m)?)?;
    m.add_function(wrap_pyfunction!(clip_flow, m)?)?;
    m.add_function(wrap_pyfunction!(extract_appearance, m)?)?;
    m.add_function(wrap_pyfunction!(extract_hof, m)?)?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(gen_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("GAMMA_MAX", core::gamma::GAMMA_MAX)?;
    Ok(())
}

//! Dataset manifests, the train/eval experiment driver, grid sweeps over
//! crop strategies, and report emission.
//!
//! Reports are append-only CSV keyed by config hash. Everything an
//! experiment writes is a pure function of (config, manifests, seeds);
//! wall-clock timing is returned to the caller for logging but never
//! serialized into report or model files.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::classifier::{softmax, topk_accuracy, train_classifier};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, FusionMode};
use crate::gamma::{estimate_gamma_target, fit_gamma_regressor, GammaRegressor};
use crate::media::{histogram, load_clip, Frame, CHANNEL_NAMES};
use crate::pipeline::{
    extract_clip_features, CropMode, CropSpec, EnhanceKind, PipelineConfig, PipelineModels,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::format(format!("unknown split `{other}`"))),
        }
    }
}

/// One dataset clip: where it lives, its class, and how it was generated.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Path as stored in the CSV; relative paths resolve against the
    /// manifest's directory.
    pub path: String,
    pub label: String,
    /// RNG stream the clip was generated under.
    pub seed: u64,
    /// True darkening gamma applied at generation time.
    pub gamma: f64,
    pub split: Split,
}

pub const MANIFEST_HEADER: &str = "path,label,seed,gamma,split";

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    base_dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(base_dir: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        for e in &entries {
            if e.label.contains(',') || e.label.contains('\n') || e.path.contains(',') {
                return Err(Error::invalid(format!(
                    "manifest labels and paths must not contain commas or newlines: `{}`",
                    e.label
                )));
            }
        }
        Ok(Manifest { base_dir: base_dir.into(), entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn split_entries(&self, split: Split) -> Vec<&ManifestEntry> {
        self.entries.iter().filter(|e| e.split == split).collect()
    }

    /// Keep only one split, preserving order.
    pub fn restricted_to(&self, split: Split) -> Manifest {
        Manifest {
            base_dir: self.base_dir.clone(),
            entries: self.entries.iter().filter(|e| e.split == split).cloned().collect(),
        }
    }

    /// Sorted unique class labels over all entries.
    pub fn classes(&self) -> Vec<String> {
        let mut names: Vec<String> = self.entries.iter().map(|e| e.label.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{MANIFEST_HEADER}\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.path,
                e.label,
                e.seed,
                e.gamma,
                e.split.as_str()
            ));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == MANIFEST_HEADER => {}
            _ => {
                return Err(Error::format(format!(
                    "manifest must start with `{MANIFEST_HEADER}`"
                )))
            }
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 5 {
                return Err(Error::format(format!("manifest row {}: expected 5 cells", i + 2)));
            }
            entries.push(ManifestEntry {
                path: cells[0].to_string(),
                label: cells[1].to_string(),
                seed: cells[2]
                    .parse()
                    .map_err(|_| Error::format(format!("manifest row {}: bad seed", i + 2)))?,
                gamma: cells[3]
                    .parse()
                    .map_err(|_| Error::format(format!("manifest row {}: bad gamma", i + 2)))?,
                split: cells[4].parse()?,
            });
        }
        Manifest::new(base_dir, entries)
    }

    /// Fail fast: every entry must load as a valid clip before any training
    /// compute starts, and stored clip labels must agree with the manifest.
    pub fn verify_clips(&self) -> Result<()> {
        for entry in &self.entries {
            let clip = load_clip(self.resolve(entry)).map_err(|e| {
                Error::invalid(format!("manifest entry `{}` failed to load: {e}", entry.path))
            })?;
            if let Some(label) = clip.label() {
                if label != entry.label {
                    return Err(Error::invalid(format!(
                        "clip `{}` carries label `{}` but manifest says `{}`",
                        entry.path,
                        label,
                        entry.label
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

pub const REPORT_HEADER: &str = "config_hash,crop_train,crop_test,fusion,enhancement,top1,top5";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub config_hash: String,
    pub crop_train: String,
    pub crop_test: String,
    pub fusion: String,
    pub enhancement: String,
    pub top1: f64,
    /// Top-k accuracy at k = min(5, class count).
    pub top5: f64,
}

impl ReportRow {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.config_hash,
            self.crop_train,
            self.crop_test,
            self.fusion,
            self.enhancement,
            self.top1,
            self.top5
        )
    }
}

/// Append rows to a report file, writing the header only when creating it.
pub fn append_report(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<()> {
    let path = path.as_ref();
    let exists = path.exists();
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    if !exists {
        writeln!(file, "{REPORT_HEADER}")?;
    }
    for row in rows {
        writeln!(file, "{}", row.to_csv_row())?;
    }
    Ok(())
}

fn fusion_label(mode: FusionMode) -> &'static str {
    match mode {
        FusionMode::Concat => "concat",
        FusionMode::ElementwiseMin => "min",
    }
}

/// Teacher-labeled regressor training: sample frames from the training
/// split and label each with the closed-loop target estimate, then fit.
/// This keeps the experiment self-contained when no pre-fitted model is
/// given; the CLI `fit-gamma` command covers the darken-and-label protocol
/// for user-supplied normal-light data.
pub fn train_regressor_from_manifest(
    config: &PipelineConfig,
    manifest: &Manifest,
) -> Result<GammaRegressor> {
    const MAX_PAIRS: usize = 240;
    let mut pairs: Vec<(Frame, crate::gamma::GammaValue)> = Vec::new();
    for entry in manifest.split_entries(Split::Train) {
        if pairs.len() >= MAX_PAIRS {
            break;
        }
        let clip = load_clip(manifest.resolve(entry))?;
        let n = clip.len();
        for idx in [0, n / 3, 2 * n / 3] {
            let frame = &clip.frames()[idx.min(n - 1)];
            let est = estimate_gamma_target(frame, config.enhance.target_mean)?;
            if !est.degenerate {
                pairs.push((frame.clone(), est.gamma));
            }
        }
    }
    fit_gamma_regressor(&pairs)
}

fn label_indices(entries: &[&ManifestEntry], class_names: &[String]) -> Result<Vec<usize>> {
    entries
        .iter()
        .map(|e| {
            class_names
                .iter()
                .position(|c| *c == e.label)
                .ok_or_else(|| Error::invalid(format!("label `{}` not in class list", e.label)))
        })
        .collect()
}

fn extract_features_for_split(
    config: &PipelineConfig,
    manifest: &Manifest,
    split: Split,
    crop: &CropSpec,
    gamma_model: Option<&GammaRegressor>,
) -> Result<Vec<FeatureVector>> {
    let entries = manifest.split_entries(split);
    entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let clip = load_clip(manifest.resolve(entry))?;
            extract_clip_features(&clip, config, crop, gamma_model, i as u64)
        })
        .collect()
}

/// Fit the gamma regressor (when configured) and the classifier on the
/// training split.
pub fn train_models(config: &PipelineConfig, train: &Manifest) -> Result<PipelineModels> {
    train.verify_clips()?;
    let gamma = match config.enhance.kind {
        EnhanceKind::Regressor => Some(if config.enhance.model_path.is_empty() {
            train_regressor_from_manifest(config, train)?
        } else {
            GammaRegressor::load(&config.enhance.model_path)?
        }),
        _ => None,
    };
    let class_names = train.classes();
    let entries = train.split_entries(Split::Train);
    if entries.is_empty() {
        return Err(Error::invalid("training manifest has no train-split entries"));
    }
    let features =
        extract_features_for_split(config, train, Split::Train, &config.crop_train, gamma.as_ref())?;
    let labels = label_indices(&entries, &class_names)?;
    let training = train_classifier(&features, &labels, &class_names, &config.classifier)?;
    Ok(PipelineModels { classifier: training.model, gamma })
}

#[derive(Debug, Clone)]
pub struct EvalResult {
    pub top1: f64,
    pub top5: f64,
    /// k actually used for the second metric: min(5, classes).
    pub k_used: usize,
    pub predictions: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// Score the test split and compute top-1 / top-min(5,C) accuracy.
pub fn evaluate(
    config: &PipelineConfig,
    models: &PipelineModels,
    test: &Manifest,
) -> Result<EvalResult> {
    test.verify_clips()?;
    let entries = test.split_entries(Split::Test);
    if entries.is_empty() {
        return Err(Error::invalid("test manifest has no test-split entries"));
    }
    let features = extract_features_for_split(
        config,
        test,
        Split::Test,
        &config.crop_test,
        models.gamma.as_ref(),
    )?;
    let labels = label_indices(&entries, &models.classifier.class_names)?;
    let predictions: Vec<Vec<f64>> = features
        .iter()
        .map(|f| {
            let raw = models.classifier.scores(f)?;
            Ok(if config.use_softmax_at_eval { softmax(&raw) } else { raw })
        })
        .collect::<Result<_>>()?;
    let k_used = models.classifier.num_classes().min(5);
    let top1 = topk_accuracy(&predictions, &labels, 1)?;
    let top5 = topk_accuracy(&predictions, &labels, k_used)?;
    Ok(EvalResult { top1, top5, k_used, predictions, labels })
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub row: ReportRow,
    pub models: PipelineModels,
    pub eval: EvalResult,
    /// Timing for logs; intentionally kept out of the serialized report so
    /// reruns stay byte-identical.
    pub wall_ms: u128,
}

/// Train on the train split, evaluate on the test split, emit one row.
pub fn run_experiment(
    config: &PipelineConfig,
    train: &Manifest,
    test: &Manifest,
) -> Result<ExperimentOutcome> {
    let start = Instant::now();
    let models = train_models(config, train)?;
    let eval = evaluate(config, &models, test)?;
    let row = ReportRow {
        config_hash: config.hash(),
        crop_train: config.crop_train.label(),
        crop_test: config.crop_test.label(),
        fusion: fusion_label(config.fusion).to_string(),
        enhancement: config.enhance.kind.as_str().to_string(),
        top1: eval.top1,
        top5: eval.top5,
    };
    Ok(ExperimentOutcome { row, models, eval, wall_ms: start.elapsed().as_millis() })
}

/// The 3x3 resize ablation grid: every (train, test) pair over
/// center 112, maxcenter 128, and direct 128 scaling.
pub fn grid_crops() -> [CropSpec; 3] {
    [
        CropSpec { mode: CropMode::Center, size: 112 },
        CropSpec { mode: CropMode::Maxcenter, size: 128 },
        CropSpec { mode: CropMode::Scale, size: 128 },
    ]
}

pub fn run_grid(
    config: &PipelineConfig,
    train: &Manifest,
    test: &Manifest,
) -> Result<Vec<ExperimentOutcome>> {
    let mut outcomes = Vec::with_capacity(9);
    for crop_train in grid_crops() {
        for crop_test in grid_crops() {
            let mut cell = config.clone();
            cell.crop_train = crop_train;
            cell.crop_test = crop_test;
            outcomes.push(run_experiment(&cell, train, test)?);
        }
    }
    Ok(outcomes)
}

// ---------------------------------------------------------------------------
// Histogram reports
// ---------------------------------------------------------------------------

/// Paired before/after histogram CSV: 2 x 3 x 256 data rows
/// (`stage,channel,value,count`) plus one trailing summary row carrying the
/// mean luma and per-channel means of both frames.
pub fn histogram_report(before: &Frame, after: &Frame, path: impl AsRef<Path>) -> Result<()> {
    if before.width() != after.width() || before.height() != after.height() {
        return Err(Error::invalid("histogram report needs frames of equal dimensions"));
    }
    let mut out = String::new();
    for (stage, frame) in [("before", before), ("after", after)] {
        let hist = histogram(frame);
        for (c, name) in CHANNEL_NAMES.iter().enumerate() {
            for v in 0..256 {
                out.push_str(&format!("{stage},{name},{v},{}\n", hist.bins[c][v]));
            }
        }
    }
    let channel_means = |f: &Frame| -> [f64; 3] {
        let mut sums = [0f64; 3];
        for px in f.pixels().chunks_exact(3) {
            for c in 0..3 {
                sums[c] += px[c] as f64;
            }
        }
        let n = (f.width() * f.height()) as f64;
        [sums[0] / n, sums[1] / n, sums[2] / n]
    };
    let mb = channel_means(before);
    let ma = channel_means(after);
    out.push_str(&format!(
        "summary,{},{},{},{},{},{},{},{}\n",
        before.mean_luma(),
        after.mean_luma(),
        mb[0],
        mb[1],
        mb[2],
        ma[0],
        ma[1],
        ma[2]
    ));
    fs::write(path, out)?;
    Ok(())
}

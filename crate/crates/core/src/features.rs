//! Hand-crafted spatio-temporal features: grid appearance statistics over a
//! clip and magnitude-weighted orientation histograms over its flow fields,
//! plus the stream fusion operators.

use crate::error::{Error, Result};
use crate::media::{Clip, FlowField};

/// A fixed-length real vector tagged with the schema that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema: String,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema: impl Into<String>) -> Self {
        FeatureVector { values, schema: schema.into() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Concatenate two vectors into a combined stream; the schema records
    /// both parts joined with `+`.
    pub fn stack(&self, other: &FeatureVector) -> FeatureVector {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        FeatureVector::new(values, format!("{}+{}", self.schema, other.schema))
    }
}

/// Floor-partition cell bounds: cell i of g covers [i*len/g, (i+1)*len/g).
fn cell_range(i: usize, g: usize, len: usize) -> std::ops::Range<usize> {
    (i * len / g)..((i + 1) * len / g)
}

/// Grid appearance features, schema `app-g{G}`, length 2*G*G:
/// first G*G entries are per-cell temporal means of cell-mean luma (in [0,1],
/// cells row-major), then G*G per-cell temporal means of the cell-mean
/// absolute luma difference between consecutive frames. Single-frame clips
/// leave the difference half at zero.
pub fn extract_appearance(clip: &Clip, g: usize) -> Result<FeatureVector> {
    if g == 0 {
        return Err(Error::invalid("grid size must be at least 1"));
    }
    let (w, h) = (clip.width(), clip.height());
    if w < g || h < g {
        return Err(Error::invalid(format!("frame {w}x{h} too small for a {g}x{g} grid")));
    }
    let lumas: Vec<Vec<f64>> = clip.frames().iter().map(|f| f.luma()).collect();
    let cells = g * g;
    let n = lumas.len();

    let cell_mean = |data: &[f64], cy: usize, cx: usize| -> f64 {
        let ys = cell_range(cy, g, h);
        let xs = cell_range(cx, g, w);
        let count = (ys.len() * xs.len()) as f64;
        let mut total = 0.0;
        for y in ys {
            for x in xs.clone() {
                total += data[y * w + x];
            }
        }
        total / count
    };

    let mut mean_half = vec![0.0; cells];
    for luma in &lumas {
        for cy in 0..g {
            for cx in 0..g {
                mean_half[cy * g + cx] += cell_mean(luma, cy, cx) / 255.0;
            }
        }
    }
    for v in &mut mean_half {
        *v /= n as f64;
    }

    let mut diff_half = vec![0.0; cells];
    if n > 1 {
        for t in 0..n - 1 {
            let abs_diff: Vec<f64> = lumas[t]
                .iter()
                .zip(lumas[t + 1].iter())
                .map(|(a, b)| (b - a).abs())
                .collect();
            for cy in 0..g {
                for cx in 0..g {
                    diff_half[cy * g + cx] += cell_mean(&abs_diff, cy, cx) / 255.0;
                }
            }
        }
        for v in &mut diff_half {
            *v /= (n - 1) as f64;
        }
    }

    let mut values = mean_half;
    values.extend(diff_half);
    Ok(FeatureVector::new(values, format!("app-g{g}")))
}

/// Histogram-of-flow features, schema `hof-g{G}-b{B}`, length G*G*B:
/// per cell (row-major), flow vectors are binned by angle into B uniform
/// bins over [-pi, pi), weighted by magnitude, accumulated over all fields,
/// and L1-normalized per cell. Cells that saw no motion stay all zero.
pub fn extract_hof(fields: &[FlowField], g: usize, b: usize) -> Result<FeatureVector> {
    if fields.is_empty() {
        return Err(Error::invalid("hof needs at least one flow field"));
    }
    if g == 0 || b == 0 {
        return Err(Error::invalid("grid and bin counts must be at least 1"));
    }
    let (w, h) = (fields[0].width(), fields[0].height());
    if fields.iter().any(|f| f.width() != w || f.height() != h) {
        return Err(Error::invalid("all flow fields must share dimensions"));
    }
    let mut values = vec![0.0f64; g * g * b];
    for field in fields {
        for y in 0..h {
            let cy = (y * g / h).min(g - 1);
            for x in 0..w {
                let cx = (x * g / w).min(g - 1);
                let (u, v) = field.at(x, y);
                let (u, v) = (u as f64, v as f64);
                let mag = (u * u + v * v).sqrt();
                if mag == 0.0 {
                    continue;
                }
                let angle = v.atan2(u);
                let mut bin = (((angle + std::f64::consts::PI) / std::f64::consts::TAU) * b as f64)
                    .floor() as usize;
                if bin >= b {
                    bin = 0; // atan2 returns +pi for (-x, +0); same direction as -pi
                }
                values[(cy * g + cx) * b + bin] += mag;
            }
        }
    }
    for cell in values.chunks_mut(b) {
        let total: f64 = cell.iter().sum();
        if total > 0.0 {
            for v in cell {
                *v /= total;
            }
        }
    }
    Ok(FeatureVector::new(values, format!("hof-g{g}-b{b}")))
}

/// How the dark and light appearance streams are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    /// Concatenate both streams (schema `fused-concat`, length 2D).
    Concat,
    /// Pointwise minimum (length D, schema preserved).
    ElementwiseMin,
}

/// Fuse two same-schema feature vectors.
pub fn fuse(dark: &FeatureVector, light: &FeatureVector, mode: FusionMode) -> Result<FeatureVector> {
    if dark.schema != light.schema {
        return Err(Error::SchemaMismatch {
            expected: dark.schema.clone(),
            got: light.schema.clone(),
        });
    }
    match mode {
        FusionMode::Concat => {
            let mut values = dark.values.clone();
            values.extend_from_slice(&light.values);
            Ok(FeatureVector::new(values, "fused-concat"))
        }
        FusionMode::ElementwiseMin => {
            let values = dark
                .values
                .iter()
                .zip(light.values.iter())
                .map(|(a, b)| a.min(*b))
                .collect();
            Ok(FeatureVector::new(values, dark.schema.clone()))
        }
    }
}

//! Frames, clips, histograms, flow fields, and their on-disk formats.
//!
//! Formats are deliberately minimal and bit-exact:
//! - images: binary PPM (P6, maxval 255)
//! - clips: the `DLV1` container (magic, N/H/W header, optional label, raw RGB)
//! - flow: `PIEH` files (magic, dimensions, interleaved little-endian f32 u,v)
//! - histograms: plain CSV

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Quantize a real channel value: round half away from zero, clamp to [0,255].
#[inline]
pub fn quantize_channel(x: f64) -> u8 {
    x.round().clamp(0.0, 255.0) as u8
}

/// Rec.601 luma weights for 8-bit RGB.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// One RGB image. 8-bit channels, row-major, R,G,B interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("frame dimensions must be at least 1x1"));
        }
        if pixels.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "pixel buffer length {} does not match {}x{}x3",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Frame { width, height, pixels })
    }

    /// All-black frame of the given size.
    pub fn black(width: usize, height: usize) -> Result<Self> {
        Frame::new(width, height, vec![0; width * height * 3])
    }

    /// Frame filled with one RGB value.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        Frame::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Rec.601 luma per pixel, row-major, values in [0, 255].
    pub fn luma(&self) -> Vec<f64> {
        self.pixels
            .chunks_exact(3)
            .map(|p| {
                LUMA_WEIGHTS[0] * p[0] as f64
                    + LUMA_WEIGHTS[1] * p[1] as f64
                    + LUMA_WEIGHTS[2] * p[2] as f64
            })
            .collect()
    }

    /// Mean Rec.601 luma over the frame, in [0, 255].
    pub fn mean_luma(&self) -> f64 {
        let n = (self.width * self.height) as f64;
        self.luma().iter().sum::<f64>() / n
    }

    /// True when every channel of every pixel is zero.
    pub fn is_black(&self) -> bool {
        self.pixels.iter().all(|&p| p == 0)
    }

    /// Map every channel value through `f`, keeping dimensions.
    pub fn map_channels(&self, f: impl Fn(u8) -> u8) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }
}

/// An ordered sequence of equally-sized frames, optionally labeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clip {
    frames: Vec<Frame>,
    label: Option<String>,
}

impl Clip {
    pub fn new(frames: Vec<Frame>, label: Option<String>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("clip must contain at least one frame"))?;
        let (w, h) = (first.width(), first.height());
        if frames.iter().any(|f| f.width() != w || f.height() != h) {
            return Err(Error::invalid("all frames in a clip must share dimensions"));
        }
        Ok(Clip { frames, label })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one frame
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn with_label(self, label: Option<String>) -> Clip {
        Clip { label, ..self }
    }

    /// Apply a frame transform to every frame, preserving the label.
    pub fn map_frames(&self, f: impl Fn(&Frame) -> Result<Frame>) -> Result<Clip> {
        let frames = self.frames.iter().map(f).collect::<Result<Vec<_>>>()?;
        Clip::new(frames, self.label.clone())
    }
}

/// Per-channel value counts for one frame: 3 channels x 256 bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramRgb {
    pub bins: [[u64; 256]; 3],
}

pub const CHANNEL_NAMES: [&str; 3] = ["R", "G", "B"];

/// Count channel values: `bins[c][v]` is the number of pixels whose
/// channel-`c` value equals `v`.
pub fn histogram(frame: &Frame) -> HistogramRgb {
    let mut bins = [[0u64; 256]; 3];
    for px in frame.pixels().chunks_exact(3) {
        for c in 0..3 {
            bins[c][px[c] as usize] += 1;
        }
    }
    HistogramRgb { bins }
}

impl HistogramRgb {
    /// CSV dump with a `channel,value,count` header and 768 data rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,value,count\n");
        for (c, name) in CHANNEL_NAMES.iter().enumerate() {
            for v in 0..256 {
                out.push_str(&format!("{},{},{}\n", name, v, self.bins[c][v]));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// PPM (binary P6, maxval 255)
// ---------------------------------------------------------------------------

/// Write a frame as binary PPM: `P6\n<w> <h>\n255\n` followed by raw RGB.
pub fn save_ppm(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P6\n{} {}\n255\n", frame.width(), frame.height())?;
    w.write_all(frame.pixels())?;
    w.flush()?;
    Ok(())
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<Frame> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    parse_ppm(&bytes)
}

/// Parse a binary P6 image. Header tokens may be separated by any whitespace
/// and `#` comments; pixel data starts after the single whitespace byte that
/// terminates the maxval token.
pub fn parse_ppm(bytes: &[u8]) -> Result<Frame> {
    let mut pos = 0usize;

    fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
        // skip whitespace and comments
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::format("malformed header: unexpected end of file"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    }

    let magic = next_token(bytes, &mut pos)?;
    if magic != "P6" {
        return Err(Error::format(format!("malformed header: expected P6, got {magic}")));
    }
    let width: usize = next_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::format("malformed header: bad width"))?;
    let height: usize = next_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::format("malformed header: bad height"))?;
    let maxval: u32 = next_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::format("malformed header: bad maxval"))?;
    if maxval != 255 {
        return Err(Error::format(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from pixel data
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format("malformed header: missing separator"));
    }
    pos += 1;

    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::format("malformed header: dimensions overflow"))?;
    let data = &bytes[pos..];
    if data.len() < expected {
        return Err(Error::format(format!(
            "truncated pixel data: expected {} bytes, got {}",
            expected,
            data.len()
        )));
    }
    Frame::new(width, height, data[..expected].to_vec())
}

// ---------------------------------------------------------------------------
// Clip container (DLV1)
// ---------------------------------------------------------------------------

pub const CLIP_MAGIC: &[u8; 4] = b"DLV1";

/// Serialize a clip to the `DLV1` layout:
/// magic, u32le N/H/W, u8 label length + UTF-8 label, raw RGB frames.
pub fn clip_to_bytes(clip: &Clip) -> Result<Vec<u8>> {
    let label = clip.label().unwrap_or("");
    if label.len() > u8::MAX as usize {
        return Err(Error::invalid("clip label longer than 255 bytes"));
    }
    let mut out = Vec::new();
    out.extend_from_slice(CLIP_MAGIC);
    out.extend_from_slice(&(clip.len() as u32).to_le_bytes());
    out.extend_from_slice(&(clip.height() as u32).to_le_bytes());
    out.extend_from_slice(&(clip.width() as u32).to_le_bytes());
    out.push(label.len() as u8);
    out.extend_from_slice(label.as_bytes());
    for frame in clip.frames() {
        out.extend_from_slice(frame.pixels());
    }
    Ok(out)
}

pub fn clip_from_bytes(bytes: &[u8]) -> Result<Clip> {
    if bytes.len() < 4 || &bytes[..4] != CLIP_MAGIC {
        return Err(Error::format("bad magic"));
    }
    if bytes.len() < 17 {
        return Err(Error::format("truncated clip header"));
    }
    let read_u32 = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let n = read_u32(4) as usize;
    let h = read_u32(8) as usize;
    let w = read_u32(12) as usize;
    if n == 0 || h == 0 || w == 0 {
        return Err(Error::format("zero dimension in clip header"));
    }
    let label_len = bytes[16] as usize;
    let label_end = 17 + label_len;
    if bytes.len() < label_end {
        return Err(Error::format("truncated clip label"));
    }
    let label = if label_len == 0 {
        None
    } else {
        Some(
            std::str::from_utf8(&bytes[17..label_end])
                .map_err(|_| Error::format("clip label is not valid UTF-8"))?
                .to_owned(),
        )
    };
    let frame_bytes = w * h * 3;
    let expected = label_end + n * frame_bytes;
    if bytes.len() < expected {
        return Err(Error::format(format!(
            "truncated clip data: expected {} bytes, got {}",
            expected,
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(Error::format("trailing bytes after clip data"));
    }
    let frames = (0..n)
        .map(|i| {
            let start = label_end + i * frame_bytes;
            Frame::new(w, h, bytes[start..start + frame_bytes].to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Clip::new(frames, label)
}

pub fn save_clip(clip: &Clip, path: impl AsRef<Path>) -> Result<()> {
    let bytes = clip_to_bytes(clip)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn load_clip(path: impl AsRef<Path>) -> Result<Clip> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    clip_from_bytes(&bytes)
}

// ---------------------------------------------------------------------------
// Flow fields (PIEH)
// ---------------------------------------------------------------------------

/// Dense per-pixel displacement field between two frames, in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    vectors: Vec<(f32, f32)>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, vectors: Vec<(f32, f32)>) -> Result<Self> {
        if vectors.len() != width * height {
            return Err(Error::invalid(format!(
                "flow vector count {} does not match {}x{}",
                vectors.len(),
                width,
                height
            )));
        }
        if vectors.iter().any(|(u, v)| !u.is_finite() || !v.is_finite()) {
            return Err(Error::invalid("flow components must be finite"));
        }
        Ok(FlowField { width, height, vectors })
    }

    pub fn zero(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            vectors: vec![(0.0, 0.0); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vectors(&self) -> &[(f32, f32)] {
        &self.vectors
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        self.vectors[y * self.width + x]
    }
}

pub const FLOW_MAGIC: &[u8; 4] = b"PIEH";

pub fn flow_to_bytes(field: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + field.vectors.len() * 8);
    out.extend_from_slice(FLOW_MAGIC);
    out.extend_from_slice(&(field.width as u32).to_le_bytes());
    out.extend_from_slice(&(field.height as u32).to_le_bytes());
    for &(u, v) in &field.vectors {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn flow_from_bytes(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < 4 || &bytes[..4] != FLOW_MAGIC {
        return Err(Error::format("bad magic"));
    }
    if bytes.len() < 12 {
        return Err(Error::format("truncated flow header"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 12 + width * height * 8;
    if bytes.len() != expected {
        return Err(Error::format(format!(
            "flow payload size {} does not match {}x{}",
            bytes.len() - 12,
            width,
            height
        )));
    }
    let mut vectors = Vec::with_capacity(width * height);
    for chunk in bytes[12..].chunks_exact(8) {
        let u = f32::from_le_bytes(chunk[0..4].try_into().unwrap());
        let v = f32::from_le_bytes(chunk[4..8].try_into().unwrap());
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::format("non-finite flow component"));
        }
        vectors.push((u, v));
    }
    FlowField::new(width, height, vectors)
}

pub fn save_flow(field: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&flow_to_bytes(field))?;
    w.flush()?;
    Ok(())
}

pub fn load_flow(path: impl AsRef<Path>) -> Result<FlowField> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    flow_from_bytes(&bytes)
}

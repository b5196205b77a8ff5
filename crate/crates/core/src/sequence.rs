//! Frame I/O (binary PGM) and the sliding-window construction of the input
//! tensor from an image sequence, plus per-frame map reconstruction.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Grayscale frame with pixels normalized to [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "pixel count {} != {width}x{height}",
                pixels.len()
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        GrayImage { width, height, pixels: vec![0.0; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }
}

/// Ordered frames of uniform size.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<GrayImage>,
    pub sources: Vec<String>,
}

impl FrameSequence {
    pub fn new(frames: Vec<GrayImage>, sources: Vec<String>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::DimensionMismatch("empty frame sequence".into()));
        }
        let (w, h) = (frames[0].width, frames[0].height);
        if !frames.iter().all(|f| f.width == w && f.height == h) {
            return Err(Error::DimensionMismatch("frames differ in size".into()));
        }
        Ok(FrameSequence { frames, sources })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Temporal windows over a frame sequence; each window is a full-frame
/// `height x width x window_len` tensor.
#[derive(Debug, Clone)]
pub struct WindowPlan {
    pub window_len: usize,
    pub step: usize,
    /// `(start_frame, tensor)` pairs, in order of start frame.
    pub windows: Vec<(usize, Tensor3)>,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
}

/// Consecutive temporal windows of `window_len` frames starting at 0,
/// `step`, 2*`step`, ...; a final window anchored at `len - window_len` is
/// appended if the stride leaves trailing frames uncovered.
pub fn build_windows(seq: &FrameSequence, window_len: usize, step: usize) -> Result<WindowPlan> {
    assert!(step >= 1, "step must be >= 1");
    assert!(window_len >= 1, "window length must be >= 1");
    let len = seq.len();
    if len < window_len {
        return Err(Error::TooFewFrames { got: len, need: window_len });
    }
    let mut starts: Vec<usize> = Vec::new();
    let mut s = 0;
    while s + window_len <= len {
        starts.push(s);
        s += step;
    }
    let last_covered = starts.last().map(|s| s + window_len - 1).unwrap_or(0);
    if last_covered + 1 < len {
        starts.push(len - window_len);
    }
    let (w, h) = (seq.frames[0].width, seq.frames[0].height);
    let windows = starts
        .into_iter()
        .map(|start| {
            let t = Tensor3::from_fn(h, w, window_len, |i, j, k| seq.frames[start + k].get(j, i));
            (start, t)
        })
        .collect();
    Ok(WindowPlan { window_len, step, windows, frame_count: len, width: w, height: h })
}

/// Per-frame mean of the contributing window slices, without any
/// normalization. Negative values are kept as-is.
pub fn reconstruct_raw(plan: &WindowPlan, targets: &[Tensor3]) -> Result<Vec<GrayImage>> {
    if targets.len() != plan.windows.len() {
        return Err(Error::AlignmentMismatch(format!(
            "{} targets for {} windows",
            targets.len(),
            plan.windows.len()
        )));
    }
    for (t, (_, w)) in targets.iter().zip(plan.windows.iter()) {
        if t.shape() != w.shape() {
            return Err(Error::AlignmentMismatch(format!(
                "target shape {:?} != window shape {:?}",
                t.shape(),
                w.shape()
            )));
        }
    }
    let mut sums = vec![GrayImage::zeros(plan.width, plan.height); plan.frame_count];
    let mut counts = vec![vec![0u32; plan.width * plan.height]; plan.frame_count];
    for ((start, _), t) in plan.windows.iter().zip(targets.iter()) {
        for k in 0..plan.window_len {
            let frame = start + k;
            for j in 0..plan.width {
                for i in 0..plan.height {
                    let idx = i * plan.width + j;
                    sums[frame].pixels[idx] += t[(i, j, k)];
                    counts[frame][idx] += 1;
                }
            }
        }
    }
    for (img, cnt) in sums.iter_mut().zip(counts.iter()) {
        for (p, &c) in img.pixels.iter_mut().zip(cnt.iter()) {
            if c > 0 {
                *p /= c as f64;
            }
        }
    }
    Ok(sums)
}

/// Per-frame maps, averaged over overlapping windows, clamped below at 0
/// and renormalized to [0, 1] by the global maximum (all-zero maps if the
/// maximum is 0).
pub fn reconstruct_maps(plan: &WindowPlan, targets: &[Tensor3]) -> Result<Vec<GrayImage>> {
    let mut maps = reconstruct_raw(plan, targets)?;
    normalize_maps(&mut maps);
    Ok(maps)
}

/// Spatio-temporal patch windows: like [`build_windows`] but each window
/// covers a `patch_h x patch_w` spatial region, swept with `spatial_step`
/// and the same tail rule on every axis.
#[derive(Debug, Clone)]
pub struct PatchPlan {
    pub window_len: usize,
    pub step: usize,
    pub patch_h: usize,
    pub patch_w: usize,
    pub spatial_step: usize,
    /// `(start_frame, y0, x0, tensor)`, ordered by frame, then row, then
    /// column offset.
    pub windows: Vec<(usize, usize, usize, Tensor3)>,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
}

fn axis_starts(extent: usize, span: usize, step: usize) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut s = 0;
    while s + span <= extent {
        starts.push(s);
        s += step;
    }
    if starts.last().map(|s| s + span).unwrap_or(0) < extent {
        starts.push(extent - span);
    }
    starts
}

/// Patch-mode windowing; `build_windows` is the special case of a single
/// full-frame patch.
pub fn build_patches(
    seq: &FrameSequence,
    window_len: usize,
    step: usize,
    patch_h: usize,
    patch_w: usize,
    spatial_step: usize,
) -> Result<PatchPlan> {
    assert!(step >= 1 && spatial_step >= 1, "steps must be >= 1");
    let len = seq.len();
    if len < window_len {
        return Err(Error::TooFewFrames { got: len, need: window_len });
    }
    let (w, h) = (seq.frames[0].width, seq.frames[0].height);
    if patch_h > h || patch_w > w || patch_h == 0 || patch_w == 0 {
        return Err(Error::DimensionMismatch(format!(
            "patch {patch_h}x{patch_w} does not fit frames of {h}x{w}"
        )));
    }
    let mut windows = Vec::new();
    for &start in &axis_starts(len, window_len, step) {
        for &y0 in &axis_starts(h, patch_h, spatial_step) {
            for &x0 in &axis_starts(w, patch_w, spatial_step) {
                let t = Tensor3::from_fn(patch_h, patch_w, window_len, |i, j, k| {
                    seq.frames[start + k].get(x0 + j, y0 + i)
                });
                windows.push((start, y0, x0, t));
            }
        }
    }
    Ok(PatchPlan {
        window_len,
        step,
        patch_h,
        patch_w,
        spatial_step,
        windows,
        frame_count: len,
        width: w,
        height: h,
    })
}

/// Patch-mode counterpart of [`reconstruct_raw`]: per-pixel mean over all
/// covering patches.
pub fn reconstruct_raw_patches(plan: &PatchPlan, targets: &[Tensor3]) -> Result<Vec<GrayImage>> {
    if targets.len() != plan.windows.len() {
        return Err(Error::AlignmentMismatch(format!(
            "{} targets for {} windows",
            targets.len(),
            plan.windows.len()
        )));
    }
    let mut sums = vec![GrayImage::zeros(plan.width, plan.height); plan.frame_count];
    let mut counts = vec![vec![0u32; plan.width * plan.height]; plan.frame_count];
    for ((start, y0, x0, win), t) in plan.windows.iter().zip(targets.iter()) {
        if t.shape() != win.shape() {
            return Err(Error::AlignmentMismatch(format!(
                "target shape {:?} != window shape {:?}",
                t.shape(),
                win.shape()
            )));
        }
        for k in 0..plan.window_len {
            let frame = start + k;
            for j in 0..plan.patch_w {
                for i in 0..plan.patch_h {
                    let idx = (y0 + i) * plan.width + (x0 + j);
                    sums[frame].pixels[idx] += t[(i, j, k)];
                    counts[frame][idx] += 1;
                }
            }
        }
    }
    for (img, cnt) in sums.iter_mut().zip(counts.iter()) {
        for (p, &c) in img.pixels.iter_mut().zip(cnt.iter()) {
            if c > 0 {
                *p /= c as f64;
            }
        }
    }
    Ok(sums)
}

/// Patch-mode counterpart of [`reconstruct_maps`].
pub fn reconstruct_maps_patches(plan: &PatchPlan, targets: &[Tensor3]) -> Result<Vec<GrayImage>> {
    let mut maps = reconstruct_raw_patches(plan, targets)?;
    normalize_maps(&mut maps);
    Ok(maps)
}

fn normalize_maps(maps: &mut [GrayImage]) {
    let mut max = 0.0f64;
    for m in maps.iter_mut() {
        for p in m.pixels.iter_mut() {
            *p = p.max(0.0);
            max = max.max(*p);
        }
    }
    if max > 0.0 {
        for m in maps.iter_mut() {
            for p in m.pixels.iter_mut() {
                *p /= max;
            }
        }
    }
}

fn skip_pgm_separators(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_pgm_int(bytes: &[u8], pos: usize) -> Result<(u32, usize)> {
    let start = skip_pgm_separators(bytes, pos);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(Error::BadMagic("malformed PGM header".into()));
    }
    let s = std::str::from_utf8(&bytes[start..end]).unwrap();
    Ok((s.parse::<u32>().unwrap(), end))
}

/// Read a binary PGM ("P5") file, 8-bit or big-endian 16-bit, normalizing
/// samples to [0, 1].
pub fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::BadMagic(magic));
    }
    let (width, pos) = read_pgm_int(&bytes, 2)?;
    let (height, pos) = read_pgm_int(&bytes, pos)?;
    let (maxval, pos) = read_pgm_int(&bytes, pos)?;
    if maxval != 255 && maxval != 65535 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    // A single whitespace byte separates the header from the payload.
    let payload = pos + 1;
    let (w, h) = (width as usize, height as usize);
    let bpp = if maxval == 255 { 1 } else { 2 };
    let expected = w * h * bpp;
    if bytes.len() < payload + expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: bytes.len().saturating_sub(payload),
        });
    }
    let raw = &bytes[payload..payload + expected];
    let scale = 1.0 / maxval as f64;
    let pixels: Vec<f64> = if bpp == 1 {
        raw.iter().map(|&b| b as f64 * scale).collect()
    } else {
        raw.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    GrayImage::new(w, h, pixels)
}

/// Bit depth selector for [`write_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmDepth {
    Eight,
    Sixteen,
}

/// Write a binary PGM, quantizing [0, 1] values (clamped) to the requested
/// depth. The write is atomic: temp file in the same directory, then rename.
pub fn write_image(img: &GrayImage, path: &Path, depth: PgmDepth) -> Result<()> {
    let maxval: u32 = match depth {
        PgmDepth::Eight => 255,
        PgmDepth::Sixteen => 65535,
    };
    let mut out = Vec::with_capacity(32 + img.pixels.len() * 2);
    write!(out, "P5\n{} {}\n{}\n", img.width, img.height, maxval)?;
    for &p in &img.pixels {
        let q = (p.clamp(0.0, 1.0) * maxval as f64).round() as u32;
        match depth {
            PgmDepth::Eight => out.push(q as u8),
            PgmDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    write_atomic(path, &out)
}

/// Write bytes via a sibling temp file plus rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp: PathBuf = path.with_extension("tmp_write");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a manifest (one image path per line, ordered; blank lines and
/// `#` comments skipped) into a frame sequence. Relative paths resolve
/// against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<FrameSequence> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut frames = Vec::new();
    let mut sources = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let p = base.join(line);
        frames.push(read_image(&p)?);
        sources.push(line.to_string());
    }
    FrameSequence::new(frames, sources)
}

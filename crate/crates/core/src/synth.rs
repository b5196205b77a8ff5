//! Synthetic infrared sequence generator: a smooth low-rank background with
//! slow global drift, small moving Gaussian targets, and additive white
//! Gaussian noise, all reproducible from a seed.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sequence::{FrameSequence, GrayImage};

/// One point target: explicit per-frame centroid trajectory, peak
/// amplitude (in normalized intensity units), and Gaussian radius.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub trajectory: Vec<(f64, f64)>,
    pub amplitude: f64,
    pub radius_sigma: f64,
}

impl TargetSpec {
    /// Linear trajectory `(x0 + vx·f, y0 + vy·f)` over `frames` frames.
    pub fn linear(
        x0: f64,
        y0: f64,
        vx: f64,
        vy: f64,
        frames: usize,
        amplitude: f64,
        radius_sigma: f64,
    ) -> Self {
        let trajectory = (0..frames)
            .map(|f| (x0 + vx * f as f64, y0 + vy * f as f64))
            .collect();
        TargetSpec { trajectory, amplitude, radius_sigma }
    }
}

/// Full description of a synthetic sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Number of rank-1 components in the static background.
    pub background_rank: usize,
    /// Largest spatial frequency (cycles per image) drawn for background
    /// components.
    pub freq_cap: usize,
    /// Standard deviation of the additive pixel noise.
    pub noise_sigma: f64,
    /// Relative amplitude of the sinusoidal global intensity drift.
    pub drift: f64,
    pub targets: Vec<TargetSpec>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            width: 64,
            height: 64,
            frames: 9,
            background_rank: 2,
            freq_cap: 4,
            noise_sigma: 0.02,
            drift: 0.02,
            targets: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return Err(Error::InvalidSpec("width, height, frames must be positive".into()));
        }
        if self.freq_cap < 2 {
            return Err(Error::InvalidSpec("freq_cap must be >= 2".into()));
        }
        if self.background_rank == 0 {
            return Err(Error::InvalidSpec("background_rank must be >= 1".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidSpec("noise_sigma must be finite and nonnegative".into()));
        }
        for (i, t) in self.targets.iter().enumerate() {
            if t.trajectory.len() != self.frames {
                return Err(Error::InvalidSpec(format!(
                    "target {i}: trajectory has {} entries, expected {}",
                    t.trajectory.len(),
                    self.frames
                )));
            }
            if !(t.amplitude > 0.0) || !(t.radius_sigma > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "target {i}: amplitude and radius_sigma must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// True target centers per frame, `(x, y)` in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub centers: Vec<Vec<(f64, f64)>>,
}

/// Generator output: the frames, the per-frame true centers, and the
/// standard deviation of the clean background (useful for scaling target
/// amplitudes).
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub sequence: FrameSequence,
    pub truth: GroundTruth,
    pub background_std: f64,
}

fn sample_gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; both uniforms drawn unconditionally for reproducibility.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// The static clean background for `spec` (row-major) and its standard
/// deviation. Deterministic per seed; [`generate`] uses the identical
/// construction, so amplitudes can be chosen relative to the returned std
/// before generating frames.
pub fn background(spec: &SynthSpec) -> Result<(Vec<f64>, f64)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (bg, std) = background_with_rng(spec, &mut rng)?;
    Ok((bg, std))
}

fn background_with_rng(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
    let (w, h) = (spec.width, spec.height);
    let ncomp = spec.background_rank - 1;
    let max_f = spec.freq_cap.min(w.min(h) / 2).max(2);
    if ncomp > max_f - 1 {
        return Err(Error::InvalidSpec(format!(
            "background_rank {} needs {} distinct frequencies but only {} are available below the cap",
            spec.background_rank,
            ncomp,
            max_f - 1
        )));
    }
    // Distinct frequencies in [1, max_f) keep the cosine components
    // mutually orthogonal, so the spectrum of the sum stays spread out.
    let mut freq_pool: Vec<usize> = (1..max_f).collect();
    let mut bg = vec![0.0f64; w * h];
    for _ in 0..ncomp {
        let f = freq_pool.swap_remove(rng.gen_range(0..freq_pool.len()));
        let py = rng.gen::<f64>() * std::f64::consts::TAU;
        let px = rng.gen::<f64>() * std::f64::consts::TAU;
        for y in 0..h {
            let cy = (std::f64::consts::TAU * f as f64 * y as f64 / h as f64 + py).cos();
            for x in 0..w {
                let cx = (std::f64::consts::TAU * f as f64 * x as f64 / w as f64 + px).cos();
                bg[y * w + x] += cy * cx;
            }
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &bg {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if ncomp == 0 || hi - lo < 1e-12 {
        bg.iter_mut().for_each(|v| *v = 0.3);
    } else {
        // Affine rescale into [0.2, 0.8]; the constant offset is the final
        // rank-1 component, so the frame's matrix rank stays ≤ background_rank.
        let s = 0.6 / (hi - lo);
        bg.iter_mut().for_each(|v| *v = 0.2 + (*v - lo) * s);
    }
    let mean = bg.iter().sum::<f64>() / bg.len() as f64;
    let std = (bg.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / bg.len() as f64).sqrt();
    Ok((bg, std))
}

/// Generate the sequence described by `spec`: background times a slow
/// sinusoidal gain, plus each target's Gaussian blob at its per-frame
/// centroid, plus i.i.d. Gaussian noise, clipped to [0, 1].
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let (bg, background_std) = background_with_rng(spec, &mut rng)?;

    let mut frames = Vec::with_capacity(spec.frames);
    let mut centers = Vec::with_capacity(spec.frames);
    for f in 0..spec.frames {
        let gain =
            1.0 + spec.drift * (std::f64::consts::TAU * f as f64 / spec.frames as f64).sin();
        let mut img: Vec<f64> = bg.iter().map(|&v| v * gain).collect();
        let mut frame_centers = Vec::with_capacity(spec.targets.len());
        for t in &spec.targets {
            let (cx, cy) = t.trajectory[f];
            let two_sig2 = 2.0 * t.radius_sigma * t.radius_sigma;
            for y in 0..h {
                let dy = y as f64 - cy;
                for x in 0..w {
                    let dx = x as f64 - cx;
                    img[y * w + x] += t.amplitude * (-(dx * dx + dy * dy) / two_sig2).exp();
                }
            }
            frame_centers.push((cx, cy));
        }
        for p in img.iter_mut() {
            let g = sample_gaussian(&mut rng); // drawn unconditionally: stream stays aligned
            if spec.noise_sigma > 0.0 {
                *p += spec.noise_sigma * g;
            }
            *p = p.clamp(0.0, 1.0);
        }
        frames.push(GrayImage::new(w, h, img)?);
        centers.push(frame_centers);
    }
    let sources = (0..spec.frames).map(|i| format!("frame_{i:04}.pgm")).collect();
    Ok(SynthOutput {
        sequence: FrameSequence::new(frames, sources)?,
        truth: GroundTruth { centers },
        background_std,
    })
}

/// The default demonstration scene: three targets moving across a rank-2
/// background at `amplitude_factor` times the background's standard
/// deviation.
pub fn demo_spec(seed: u64, amplitude_factor: f64) -> Result<SynthSpec> {
    let mut spec = SynthSpec { seed, ..SynthSpec::default() };
    let (_, bstd) = background(&spec)?;
    let amp = amplitude_factor * bstd;
    let frames = spec.frames;
    spec.targets = vec![
        TargetSpec::linear(10.0, 12.0, 3.0, 2.0, frames, amp, 1.5),
        TargetSpec::linear(40.0, 20.0, -2.0, 3.0, frames, amp, 1.5),
        TargetSpec::linear(25.0, 50.0, 2.5, -2.5, frames, amp, 1.5),
    ];
    Ok(spec)
}

/// Parse a spec from `key = value` lines. `#` starts a comment; unknown
/// keys are rejected. Targets are repeated lines of either
/// `target = x0,y0,vx,vy,amplitude,radius_sigma` (linear trajectory) or
/// `target = x0,y0,vx,vy` with `amplitude_factor` (default 3) scaling the
/// background std. Target lines must come after any `frames` override.
pub fn parse_spec(text: &str) -> Result<SynthSpec> {
    let mut spec = SynthSpec::default();
    let mut pending: Vec<(f64, f64, f64, f64, Option<f64>, f64)> = Vec::new();
    let mut amplitude_factor = 3.0;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidSpec(format!("line {}: expected key = value", ln + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| Error::InvalidSpec(format!("line {}: bad {what}: {value}", ln + 1));
        let usize_of = || value.parse::<usize>().map_err(|_| bad("integer"));
        let f64_of = || value.parse::<f64>().map_err(|_| bad("number"));
        match key {
            "width" => spec.width = usize_of()?,
            "height" => spec.height = usize_of()?,
            "frames" => spec.frames = usize_of()?,
            "background_rank" => spec.background_rank = usize_of()?,
            "freq_cap" => spec.freq_cap = usize_of()?,
            "seed" => spec.seed = value.parse().map_err(|_| bad("integer"))?,
            "noise_sigma" => spec.noise_sigma = f64_of()?,
            "drift" => spec.drift = f64_of()?,
            "amplitude_factor" => amplitude_factor = f64_of()?,
            "target" => {
                let nums: Vec<f64> = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("target tuple"))?;
                match nums.len() {
                    4 => pending.push((nums[0], nums[1], nums[2], nums[3], None, 1.5)),
                    6 => pending.push((
                        nums[0],
                        nums[1],
                        nums[2],
                        nums[3],
                        Some(nums[4]),
                        nums[5],
                    )),
                    _ => return Err(bad("target tuple (need 4 or 6 numbers)")),
                }
            }
            other => {
                return Err(Error::InvalidSpec(format!("line {}: unknown key {other:?}", ln + 1)))
            }
        }
    }
    let default_amp = if pending.iter().any(|p| p.4.is_none()) {
        amplitude_factor * background(&spec)?.1
    } else {
        0.0
    };
    spec.targets = pending
        .into_iter()
        .map(|(x0, y0, vx, vy, amp, rs)| {
            TargetSpec::linear(x0, y0, vx, vy, spec.frames, amp.unwrap_or(default_amp), rs)
        })
        .collect();
    spec.validate()?;
    Ok(spec)
}

pub fn read_spec(path: &Path) -> Result<SynthSpec> {
    parse_spec(&std::fs::read_to_string(path)?)
}

/// Ground-truth CSV: `frame,x,y` header plus one row per true center.
pub fn truth_csv(truth: &GroundTruth) -> String {
    let mut out = String::from("frame,x,y\n");
    for (f, centers) in truth.centers.iter().enumerate() {
        for (x, y) in centers {
            let _ = writeln!(out, "{f},{x:.4},{y:.4}");
        }
    }
    out
}

/// Parse the CSV produced by [`truth_csv`]. `frame_count` pads trailing
/// frames that have no targets.
pub fn parse_truth_csv(text: &str, frame_count: usize) -> Result<GroundTruth> {
    let mut centers: Vec<Vec<(f64, f64)>> = vec![Vec::new(); frame_count];
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (ln == 0 && line.starts_with("frame")) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidSpec(format!("truth line {}: expected 3 fields", ln + 1)));
        }
        let frame: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("truth line {}: bad frame", ln + 1)))?;
        let x: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("truth line {}: bad x", ln + 1)))?;
        let y: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("truth line {}: bad y", ln + 1)))?;
        while centers.len() <= frame {
            centers.push(Vec::new());
        }
        centers[frame].push((x, y));
    }
    Ok(GroundTruth { centers })
}

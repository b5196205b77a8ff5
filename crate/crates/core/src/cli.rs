//! Command-line front end: config resolution, the synth/detect/roc
//! pipeline, and a self-test harness, all with reproducible outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::admm::{solve, SolverParams};
use crate::error::{Error, Result};
use crate::eval::{auc_csv, roc_csv, roc_curves};
use crate::sequence::{
    build_patches, build_windows, read_manifest, reconstruct_maps, reconstruct_maps_patches,
    write_atomic, write_image, PgmDepth,
};
use crate::synth::{demo_spec, parse_truth_csv, read_spec, truth_csv};
use crate::tensor::Tensor3;

/// Small-target detection in infrared sequences by low-rank + sparse
/// tensor decomposition.
#[derive(Debug, Parser)]
#[command(name = "irdetect", version, about)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonOpts {
    /// Plain-text key=value config file; command-line flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Tri-factorization rank r.
    #[arg(long)]
    pub r: Option<usize>,
    /// Frames per temporal window (L).
    #[arg(long)]
    pub frames_per_window: Option<usize>,
    /// Sparsity tuning constant H in lambda_s = H / sqrt(max(M,N) * L).
    #[arg(long)]
    pub h_tuning: Option<f64>,
    /// Total-variation weight.
    #[arg(long)]
    pub lambda_tv: Option<f64>,
    /// Noise-term weight.
    #[arg(long)]
    pub lambda3: Option<f64>,
    /// Temporal-vs-spatial TV asymmetry factor.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Seed for synthesis.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of ROC thresholds.
    #[arg(long)]
    pub thresholds: Option<usize>,
    /// Truth-matching radius in pixels.
    #[arg(long)]
    pub match_radius: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic sequence plus ground truth.
    Synth {
        #[command(flatten)]
        common: CommonOpts,
        /// Synthesis spec file; a built-in demo scene when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Decompose a sequence and write target/background maps.
    Detect {
        #[command(flatten)]
        common: CommonOpts,
        /// Manifest listing the input frames, one path per line.
        #[arg(long)]
        input: PathBuf,
    },
    /// Score target maps against ground truth.
    Roc {
        #[command(flatten)]
        common: CommonOpts,
        /// Manifest listing the target maps.
        #[arg(long)]
        input: PathBuf,
        /// Ground-truth CSV (frame,x,y).
        #[arg(long)]
        truth: PathBuf,
    },
    /// Run the built-in numerical checks.
    Selftest {
        #[command(flatten)]
        common: CommonOpts,
    },
}

/// Everything a run needs, after merging defaults, config file, and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out: PathBuf,
    pub params: SolverParams,
    pub window_step: Option<usize>,
    /// `(patch_h, patch_w, spatial_step)` when patch mode is enabled.
    pub patch: Option<(usize, usize, usize)>,
    pub seed: u64,
    pub thresholds: usize,
    pub match_radius: f64,
    pub amplitude_factor: f64,
    /// Intensity scale applied to frames before the solver.
    pub intensity_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out: PathBuf::from("out"),
            params: SolverParams::default(),
            window_step: None,
            patch: None,
            seed: 0,
            thresholds: 101,
            match_radius: 4.0,
            amplitude_factor: 3.0,
            intensity_scale: 1.0,
        }
    }
}

impl RunConfig {
    /// Apply one `key = value` config entry; unknown keys are rejected.
    fn apply(&mut self, key: &str, value: &str, ln: usize) -> Result<()> {
        let bad = |what: &str| Error::InvalidConfig(format!("line {ln}: bad {what}: {value}"));
        match key {
            "r" => self.params.r = value.parse().map_err(|_| bad("integer"))?,
            "frames_per_window" => self.params.l = value.parse().map_err(|_| bad("integer"))?,
            "window_step" => self.window_step = Some(value.parse().map_err(|_| bad("integer"))?),
            "h_tuning" => self.params.h = value.parse().map_err(|_| bad("number"))?,
            "lambda_s" => self.params.lambda_s = Some(value.parse().map_err(|_| bad("number"))?),
            "lambda_tv" => self.params.lambda_tv = value.parse().map_err(|_| bad("number"))?,
            "lambda3" => self.params.lambda3 = value.parse().map_err(|_| bad("number"))?,
            "delta" => self.params.delta = value.parse().map_err(|_| bad("number"))?,
            "mu0" => self.params.mu0 = value.parse().map_err(|_| bad("number"))?,
            "rho" => self.params.rho = value.parse().map_err(|_| bad("number"))?,
            "mu_max" => self.params.mu_max = value.parse().map_err(|_| bad("number"))?,
            "xi" => self.params.xi = value.parse().map_err(|_| bad("number"))?,
            "max_outer_iters" => {
                self.params.max_outer_iters = value.parse().map_err(|_| bad("integer"))?
            }
            "inner_iters" => self.params.inner_iters = value.parse().map_err(|_| bad("integer"))?,
            "residual_includes_multiplier" => {
                self.params.residual_includes_multiplier =
                    value.parse().map_err(|_| bad("bool"))?
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("integer"))?,
            "thresholds" => self.thresholds = value.parse().map_err(|_| bad("integer"))?,
            "match_radius" => self.match_radius = value.parse().map_err(|_| bad("number"))?,
            "amplitude_factor" => {
                self.amplitude_factor = value.parse().map_err(|_| bad("number"))?
            }
            "intensity_scale" => {
                self.intensity_scale = value.parse().map_err(|_| bad("number"))?
            }
            "patch" => {
                let nums: Vec<usize> = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("patch triple h,w,step"))?;
                if nums.len() != 3 {
                    return Err(bad("patch triple h,w,step"));
                }
                self.patch = Some((nums[0], nums[1], nums[2]));
            }
            other => {
                return Err(Error::InvalidConfig(format!("line {ln}: unknown key {other:?}")))
            }
        }
        Ok(())
    }

    pub fn from_opts(opts: &CommonOpts) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &opts.config {
            let text = std::fs::read_to_string(path)?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap().trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::InvalidConfig(format!("line {}: expected key = value", i + 1))
                })?;
                cfg.apply(key.trim(), value.trim(), i + 1)?;
            }
        }
        cfg.out = opts.out.clone();
        if let Some(r) = opts.r {
            cfg.params.r = r;
        }
        if let Some(l) = opts.frames_per_window {
            cfg.params.l = l;
        }
        if let Some(h) = opts.h_tuning {
            cfg.params.h = h;
        }
        if let Some(v) = opts.lambda_tv {
            cfg.params.lambda_tv = v;
        }
        if let Some(v) = opts.lambda3 {
            cfg.params.lambda3 = v;
        }
        if let Some(v) = opts.delta {
            cfg.params.delta = v;
        }
        if let Some(v) = opts.seed {
            cfg.seed = v;
        }
        if let Some(v) = opts.thresholds {
            cfg.thresholds = v;
        }
        if let Some(v) = opts.match_radius {
            cfg.match_radius = v;
        }
        cfg.params.validate()?;
        if cfg.thresholds < 2 {
            return Err(Error::InvalidConfig("thresholds must be >= 2".into()));
        }
        if !(cfg.match_radius > 0.0) {
            return Err(Error::InvalidConfig("match_radius must be positive".into()));
        }
        Ok(cfg)
    }

    /// The fully resolved parameter set, one key per line.
    pub fn render_log(&self, command: &str) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "command = {command}");
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "r = {}", p.r);
        let _ = writeln!(s, "frames_per_window = {}", p.l);
        let _ = writeln!(s, "window_step = {}", self.window_step.unwrap_or(p.l));
        let _ = writeln!(s, "h_tuning = {}", p.h);
        match p.lambda_s {
            Some(v) => {
                let _ = writeln!(s, "lambda_s = {v}");
            }
            None => {
                let _ = writeln!(s, "lambda_s = auto (H / sqrt(max(M,N) * L))");
            }
        }
        let _ = writeln!(s, "lambda_tv = {}", p.lambda_tv);
        let _ = writeln!(s, "lambda3 = {}", p.lambda3);
        let _ = writeln!(s, "delta = {}", p.delta);
        let _ = writeln!(s, "mu0 = {}", p.mu0);
        let _ = writeln!(s, "rho = {}", p.rho);
        let _ = writeln!(s, "mu_max = {}", p.mu_max);
        let _ = writeln!(s, "xi = {}", p.xi);
        let _ = writeln!(s, "max_outer_iters = {}", p.max_outer_iters);
        let _ = writeln!(s, "inner_iters = {}", p.inner_iters);
        let _ = writeln!(s, "residual_includes_multiplier = {}", p.residual_includes_multiplier);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "thresholds = {}", self.thresholds);
        let _ = writeln!(s, "match_radius = {}", self.match_radius);
        let _ = writeln!(s, "amplitude_factor = {}", self.amplitude_factor);
        let _ = writeln!(s, "intensity_scale = {}", self.intensity_scale);
        match self.patch {
            Some((h, w, st)) => {
                let _ = writeln!(s, "patch = {h},{w},{st}");
            }
            None => {
                let _ = writeln!(s, "patch = none (full frame)");
            }
        }
        s
    }
}

fn write_run_log(cfg: &RunConfig, command: &str) -> Result<()> {
    write_atomic(&cfg.out.join("run.log"), cfg.render_log(command).as_bytes())
}

fn run_synth(common: &CommonOpts, spec_path: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::from_opts(common)?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut spec = match spec_path {
        Some(p) => read_spec(p)?,
        None => demo_spec(cfg.seed, cfg.amplitude_factor)?,
    };
    if common.seed.is_some() {
        spec.seed = cfg.seed;
    }
    let out = crate::synth::generate(&spec)?;
    let mut manifest = String::new();
    for (img, name) in out.sequence.frames.iter().zip(out.sequence.sources.iter()) {
        write_image(img, &cfg.out.join(name), PgmDepth::Sixteen)?;
        let _ = writeln!(manifest, "{name}");
    }
    write_atomic(&cfg.out.join("manifest.txt"), manifest.as_bytes())?;
    write_atomic(&cfg.out.join("truth.csv"), truth_csv(&out.truth).as_bytes())?;
    write_run_log(&cfg, "synth")?;
    println!(
        "synth: wrote {} frames ({}x{}) to {}",
        out.sequence.len(),
        spec.width,
        spec.height,
        cfg.out.display()
    );
    Ok(())
}

fn scaled(t: &Tensor3, s: f64) -> Tensor3 {
    if s == 1.0 {
        t.clone()
    } else {
        t.scale(s)
    }
}

fn run_detect(common: &CommonOpts, input: &Path) -> Result<()> {
    let cfg = RunConfig::from_opts(common)?;
    std::fs::create_dir_all(&cfg.out)?;
    let seq = read_manifest(input)?;
    let l = cfg.params.l;
    let step = cfg.window_step.unwrap_or(l);
    let mut diagnostics = String::from("window,iterations,final_residual,wall_time_secs\n");
    let s = cfg.intensity_scale;
    let inv = if s == 1.0 { 1.0 } else { 1.0 / s };
    let t0 = Instant::now();
    let (target_maps, background_maps) = if let Some((ph, pw, sstep)) = cfg.patch {
        let plan = build_patches(&seq, l, step, ph, pw, sstep)?;
        let mut targets = Vec::with_capacity(plan.windows.len());
        let mut backgrounds = Vec::with_capacity(plan.windows.len());
        for (wi, (_, _, _, k)) in plan.windows.iter().enumerate() {
            let dec = solve(&scaled(k, s), &cfg.params)?;
            let _ = writeln!(
                diagnostics,
                "{wi},{},{:.3e},{:.3}",
                dec.iterations, dec.final_residual, dec.wall_time_secs
            );
            targets.push(dec.target.map(|v| v.abs() * inv));
            backgrounds.push(dec.background.scale(inv));
        }
        (
            reconstruct_maps_patches(&plan, &targets)?,
            crate::sequence::reconstruct_raw_patches(&plan, &backgrounds)?,
        )
    } else {
        let plan = build_windows(&seq, l, step)?;
        let mut targets = Vec::with_capacity(plan.windows.len());
        let mut backgrounds = Vec::with_capacity(plan.windows.len());
        for (wi, (_, k)) in plan.windows.iter().enumerate() {
            let dec = solve(&scaled(k, s), &cfg.params)?;
            let _ = writeln!(
                diagnostics,
                "{wi},{},{:.3e},{:.3}",
                dec.iterations, dec.final_residual, dec.wall_time_secs
            );
            targets.push(dec.target.map(|v| v.abs() * inv));
            backgrounds.push(dec.background.scale(inv));
        }
        (
            reconstruct_maps(&plan, &targets)?,
            crate::sequence::reconstruct_raw(&plan, &backgrounds)?,
        )
    };
    let mut map_manifest = String::new();
    for (i, (t, b)) in target_maps.iter().zip(background_maps.iter()).enumerate() {
        let tname = format!("target_{i:04}.pgm");
        write_image(t, &cfg.out.join(&tname), PgmDepth::Sixteen)?;
        write_image(b, &cfg.out.join(format!("background_{i:04}.pgm")), PgmDepth::Sixteen)?;
        let _ = writeln!(map_manifest, "{tname}");
    }
    write_atomic(&cfg.out.join("maps.txt"), map_manifest.as_bytes())?;
    write_atomic(&cfg.out.join("diagnostics.csv"), diagnostics.as_bytes())?;
    write_run_log(&cfg, "detect")?;
    println!(
        "detect: {} frames -> {} maps in {:.2}s, outputs in {}",
        seq.len(),
        target_maps.len(),
        t0.elapsed().as_secs_f64(),
        cfg.out.display()
    );
    Ok(())
}

fn run_roc(common: &CommonOpts, input: &Path, truth_path: &Path) -> Result<()> {
    let cfg = RunConfig::from_opts(common)?;
    std::fs::create_dir_all(&cfg.out)?;
    let maps = read_manifest(input)?;
    let truth = parse_truth_csv(&std::fs::read_to_string(truth_path)?, maps.len())?;
    let roc = roc_curves(&maps.frames, &truth, cfg.thresholds, cfg.match_radius)?;
    write_atomic(&cfg.out.join("roc.csv"), roc_csv(&roc).as_bytes())?;
    write_atomic(&cfg.out.join("auc.csv"), auc_csv(&roc).as_bytes())?;
    write_run_log(&cfg, "roc")?;
    println!(
        "roc: auc_pf_pd={:.4} auc_pf_tau={:.4} auc_pd_tau={:.4}",
        roc.auc_pf_pd, roc.auc_pf_tau, roc.auc_pd_tau
    );
    Ok(())
}

fn run_selftest(common: &CommonOpts) -> Result<()> {
    let cfg = RunConfig::from_opts(common)?;
    let mut failures = 0;
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // t-product against the unfolded block-circulant construction.
    {
        use crate::tensor::{bcirc_oracle, fold, norm, t_product, unfold, NormKind};
        let a = Tensor3::from_fn(3, 4, 3, |i, j, k| ((i * 7 + j * 3 + k * 5) % 11) as f64 - 5.0);
        let b = Tensor3::from_fn(4, 2, 3, |i, j, k| ((i * 5 + j * 7 + k * 3) % 13) as f64 - 6.0);
        let fast = t_product(&a, &b)?;
        let slow = fold(&bcirc_oracle(&a).matmul(&unfold(&b)), a.n1, a.n3);
        let err = norm(&fast.sub(&slow), NormKind::Frobenius)
            / norm(&slow, NormKind::Frobenius).max(1e-300);
        check("t_product matches block-circulant oracle", err <= 1e-10);
    }
    // T-QR reconstruction and orthonormality.
    {
        use crate::tensor::{conj_transpose, norm, t_product, NormKind};
        let a = Tensor3::from_fn(6, 4, 3, |i, j, k| ((i * 3 + j * 11 + k * 7) % 17) as f64 - 8.0);
        let qr = crate::qr::t_qr(&a)?;
        let rec = t_product(&qr.q, &qr.r)?;
        let err = norm(&rec.sub(&a), NormKind::Frobenius) / norm(&a, NormKind::Frobenius);
        let qtq = t_product(&conj_transpose(&qr.q), &qr.q)?;
        let eye = Tensor3::identity(qtq.n1, qtq.n3);
        let orth = norm(&qtq.sub(&eye), NormKind::Frobenius);
        check("t_qr reconstructs and is orthonormal", err <= 1e-10 && orth <= 1e-10);
    }
    // Solver on a tiny synthetic window: residual decreases and stays finite.
    {
        let spec = demo_spec(7, 3.0)?;
        let out = crate::synth::generate(&spec)?;
        let plan = build_windows(&out.sequence, 3, 3)?;
        let mut params = cfg.params.clone();
        params.r = params.r.min(plan.windows[0].1.n1.min(plan.windows[0].1.n2));
        let dec = solve(&plan.windows[0].1, &params)?;
        check(
            "solver converges on the demo scene",
            dec.final_residual <= params.xi || dec.iterations == params.max_outer_iters,
        );
    }
    if failures > 0 {
        return Err(Error::SelftestFailed(failures));
    }
    println!("selftest: all checks passed");
    Ok(())
}

/// Run a parsed command; returns the process exit code.
pub fn dispatch(args: CliArgs) -> i32 {
    let result = match &args.command {
        Command::Synth { common, spec } => run_synth(common, spec.as_deref()),
        Command::Detect { common, input } => run_detect(common, input),
        Command::Roc { common, input, truth } => run_roc(common, input, truth),
        Command::Selftest { common } => run_selftest(common),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// 1 usage, 2 data, 3 numerical.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => 1,
        Error::NonFinite(_)
        | Error::ImaginaryResidueTooLarge { .. }
        | Error::SelftestFailed(_) => 3,
        _ => 2,
    }
}

//! `tagforge`: generate auto-labeled person images, calibrate option
//! estimators, extract target profiles, and compare distributions.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 generation error.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use tagforge_core::distribution::{
    build_distribution, load_profile, save_profile, text_histogram, wasserstein1,
    EmpiricalDistribution, TargetProfile,
};
use tagforge_core::estimation::{
    fit, load_estimator, save_estimator, ExtractorTag, ESTIMATOR_VERSION,
};
use tagforge_core::imageproc::{derive_color_bias, load_image, pick_background, write_png, BackgroundCorpus};
use tagforge_core::pipeline::{
    generate_dataset, make_gamma_variant, render_calibration_set, CalibrationSweep,
    GenerationConfig, PoseLibrary, OUT_H, OUT_W,
};
use tagforge_core::renderer::ImageBuffer;
use tagforge_core::scene::{derive_person_spec, OptionKey, PoseRef, RenderOptions};

const EXIT_CONFIG: i32 = 1;
const EXIT_GENERATION: i32 = 2;

#[derive(Parser)]
#[command(
    name = "tagforge",
    version,
    about = "Seeded person-image synthesis with target-aware option distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from a config (and optionally a target profile).
    Generate {
        /// Generation config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Target profile for options in "profile" mode.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Override the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = machine parallelism).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Render a labeled sweep and fit an estimator for one option.
    Calibrate {
        /// Option to calibrate (e.g. gamma, camera_depression_deg).
        #[arg(long)]
        option: String,
        /// Base config supplying the randomized context.
        #[arg(long)]
        config: PathBuf,
        /// Number of calibration images.
        #[arg(long, default_value_t = 600)]
        n: usize,
        /// Sweep lower bound (default: the option's range minimum).
        #[arg(long)]
        lo: Option<f64>,
        /// Sweep upper bound (default: the option's range maximum).
        #[arg(long)]
        hi: Option<f64>,
        /// Neighbors used at prediction time.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Calibration seed (default: the config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Profile supplying options the config sets to "profile" mode
        /// (sequential target-aware calibration).
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Output estimator file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate an option over an image directory into a profile file.
    Estimate {
        /// Estimator file from `calibrate`.
        #[arg(long)]
        estimator: PathBuf,
        /// Directory of 128x256 images.
        #[arg(long)]
        images: PathBuf,
        /// Profile file to create or merge into.
        #[arg(long)]
        out: PathBuf,
        /// Also dump the histogram as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Histogram bins.
        #[arg(long, default_value_t = 18)]
        bins: usize,
    },
    /// Print per-key Wasserstein-1 distances between two profiles.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Render one image with explicit options.
    Preview {
        /// Comma-separated overrides, e.g.
        /// "camera_depression_deg=30,gamma=1.2,pose=builtin:walk_0".
        #[arg(long)]
        options: Option<String>,
        /// Identity and background seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Identity id (default 0).
        #[arg(long, default_value_t = 0)]
        identity: u32,
        /// Background corpus directory (default: flat gray).
        #[arg(long)]
        background: Option<PathBuf>,
        /// Output PNG path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-encode a directory of images with per-image random gamma.
    GammaVariant {
        /// Input image directory.
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (images + gamma_values.csv sidecar).
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }

    fn generation(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_GENERATION, message: message.into() }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(summary) => {
            print!("{summary}");
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(f.code);
        }
    }
}

fn now_unix_s() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// `TAGFORGE_SEED` overrides the config seed when set.
fn apply_env_seed(cfg: &mut GenerationConfig) -> Result<(), Failure> {
    if let Ok(v) = std::env::var("TAGFORGE_SEED") {
        cfg.seed = v
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("TAGFORGE_SEED `{v}` is not a u64")))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Generate { config, profile, out, workers } => {
            cmd_generate(&config, profile.as_deref(), out, workers)
        }
        Command::Calibrate { option, config, n, lo, hi, k, seed, profile, out } => {
            cmd_calibrate(&option, &config, n, lo, hi, k, seed, profile.as_deref(), &out)
        }
        Command::Estimate { estimator, images, out, csv, bins } => {
            cmd_estimate(&estimator, &images, &out, csv.as_deref(), bins)
        }
        Command::Compare { a, b } => cmd_compare(&a, &b),
        Command::Preview { options, seed, identity, background, out } => {
            cmd_preview(options.as_deref(), seed, identity, background.as_deref(), &out)
        }
        Command::GammaVariant { images, lo, hi, seed, out } => {
            cmd_gamma_variant(&images, lo, hi, seed, &out)
        }
    }
}

fn cmd_generate(
    config: &Path,
    profile_path: Option<&Path>,
    out: Option<PathBuf>,
    workers: usize,
) -> Result<String, Failure> {
    let mut cfg = GenerationConfig::load(config).map_err(|e| Failure::config(e.to_string()))?;
    apply_env_seed(&mut cfg)?;
    if let Some(out) = out {
        cfg.output_dir = Some(out);
    }
    if cfg.output_dir.is_none() {
        return Err(Failure::config("no output directory: set output_dir in the config or pass --out"));
    }

    let profile = match profile_path {
        Some(p) => Some(load_profile(p).map_err(|e| Failure::config(e.to_string()))?),
        None => None,
    };
    let profile_keys = cfg.profile_keys();
    let mut summary = String::new();
    if profile.is_some() && profile_keys.is_empty() {
        summary.push_str("warning: --profile given but no option is in \"profile\" mode; profile unused\n");
    }

    let manifest = generate_dataset(&cfg, profile.as_ref(), workers)
        .map_err(|e| Failure::generation(e.to_string()))?;

    summary.push_str(&format!(
        "generated {} images ({} identities x {}) into {}\n",
        manifest.records.len(),
        cfg.num_identities,
        cfg.images_per_identity,
        cfg.output_dir.as_ref().unwrap().display()
    ));
    summary.push_str(&format!("seed {}  config {}\n", manifest.seed, manifest.config_hash));
    summary.push_str("option                      mean       min       max\n");
    for key in OptionKey::ALL {
        let values = manifest.option_values(key);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        summary.push_str(&format!("{:<24} {mean:>9.3} {min:>9.3} {max:>9.3}\n", key.name()));
    }
    Ok(summary)
}

/// Option keys estimators can target, or a config-level failure explaining
/// why not.
fn estimable_key(name: &str) -> Result<OptionKey, Failure> {
    match name.parse::<OptionKey>() {
        Ok(OptionKey::CameraId) => Err(Failure::config("option `camera_id` not estimable")),
        Ok(key) => Ok(key),
        Err(_) if name == "pose" || name == "background_ref" => {
            Err(Failure::config(format!("option `{name}` not estimable")))
        }
        Err(e) => Err(Failure::config(e.to_string())),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_calibrate(
    option: &str,
    config: &Path,
    n: usize,
    lo: Option<f64>,
    hi: Option<f64>,
    k: usize,
    seed: Option<u64>,
    profile_path: Option<&Path>,
    out: &Path,
) -> Result<String, Failure> {
    let key = estimable_key(option)?;
    let mut cfg = GenerationConfig::load(config).map_err(|e| Failure::config(e.to_string()))?;
    apply_env_seed(&mut cfg)?;
    if n < k {
        return Err(Failure::config(format!("need at least k={k} calibration images, got n={n}")));
    }
    let range = key.range();
    let default_hi = if range.hi_exclusive { range.hi - 1e-6 } else { range.hi };
    let sweep = CalibrationSweep {
        option: key,
        lo: lo.unwrap_or(range.lo),
        hi: hi.unwrap_or(default_hi),
        n,
        seed: seed.unwrap_or(cfg.seed),
    };
    if !(range.contains(sweep.lo) && sweep.lo <= sweep.hi && sweep.hi <= range.hi) {
        return Err(Failure::config(format!(
            "sweep [{}, {}] outside the {} range [{}, {}]",
            sweep.lo,
            sweep.hi,
            key.name(),
            range.lo,
            range.hi
        )));
    }

    let profile = match profile_path {
        Some(p) => Some(load_profile(p).map_err(|e| Failure::config(e.to_string()))?),
        None => None,
    };
    let labeled = render_calibration_set(&cfg, &sweep, profile.as_ref())
        .map_err(|e| Failure::generation(e.to_string()))?;
    let tag = ExtractorTag::default_for(key);
    let est = fit(key, &labeled, tag, k).map_err(|e| Failure::config(e.to_string()))?;
    save_estimator(&est, out).map_err(|e| Failure::generation(e.to_string()))?;
    Ok(format!(
        "calibrated {} on {} renders, sweep [{}, {}], extractor {}, k={}\nwrote {}\n",
        key.name(),
        n,
        sweep.lo,
        sweep.hi,
        tag.name(),
        k,
        out.display()
    ))
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::config(format!("cannot read `{}`: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

fn cmd_estimate(
    estimator: &Path,
    images_dir: &Path,
    out: &Path,
    csv: Option<&Path>,
    bins: usize,
) -> Result<String, Failure> {
    let est = load_estimator(estimator).map_err(|e| Failure::config(e.to_string()))?;
    let files = list_images(images_dir)?;
    if files.is_empty() {
        return Err(Failure::config(format!("no images in `{}`", images_dir.display())));
    }
    let mut images = Vec::with_capacity(files.len());
    for f in &files {
        images.push(
            load_image(f)
                .map_err(|e| Failure::generation(format!("{}: {e}", f.display())))?,
        );
    }
    let source = format!("estimated from {}", images_dir.display());
    let dist = build_distribution(&est, &images, source)
        .map_err(|e| Failure::generation(e.to_string()))?;

    let mut profile = if out.exists() {
        load_profile(out).map_err(|e| Failure::config(e.to_string()))?
    } else {
        TargetProfile::new(0, now_unix_s(), ESTIMATOR_VERSION)
    };
    let key = dist.key();
    let mut summary = format!(
        "estimated {} over {} images: mean {:.4}, min {:.4}, max {:.4}\n",
        key.name(),
        dist.len(),
        dist.mean(),
        dist.min(),
        dist.max()
    );
    summary.push_str(&text_histogram(&dist, bins, 40));
    if let Some(csv_path) = csv {
        write_histogram_csv(&dist, bins, csv_path)
            .map_err(|e| Failure::generation(e.to_string()))?;
        summary.push_str(&format!("histogram csv: {}\n", csv_path.display()));
    }
    profile.insert(dist);
    save_profile(&profile, out).map_err(|e| Failure::generation(e.to_string()))?;
    summary.push_str(&format!(
        "profile {} now holds {} key(s): {}\n",
        out.display(),
        profile.len(),
        profile.keys().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    ));
    Ok(summary)
}

fn write_histogram_csv(
    dist: &EmpiricalDistribution,
    bins: usize,
    path: &Path,
) -> std::io::Result<()> {
    let range = dist.key().range();
    let step = range.span() / bins as f64;
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (i, c) in dist.histogram(bins).iter().enumerate() {
        let lo = range.lo + i as f64 * step;
        out.push_str(&format!("{lo},{},{c}\n", lo + step));
    }
    std::fs::write(path, out)
}

fn cmd_compare(a_path: &Path, b_path: &Path) -> Result<String, Failure> {
    let a = load_profile(a_path).map_err(|e| Failure::config(e.to_string()))?;
    let b = load_profile(b_path).map_err(|e| Failure::config(e.to_string()))?;
    let shared: Vec<OptionKey> = a.keys().filter(|k| b.get(*k).is_some()).collect();
    if shared.is_empty() {
        return Err(Failure::config("profiles share no option keys"));
    }
    let mut summary = String::new();
    for key in shared {
        let w = wasserstein1(a.get(key).unwrap(), b.get(key).unwrap())
            .map_err(|e| Failure::generation(e.to_string()))?;
        summary.push_str(&format!("{:<24} W1 = {w}\n", key.name()));
    }
    Ok(summary)
}

fn parse_preview_options(spec: &str) -> Result<RenderOptions, Failure> {
    let mut opts = RenderOptions::default();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (field, value) = part
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("bad option `{part}`: expected field=value")))?;
        let (field, value) = (field.trim(), value.trim());
        if field == "pose" {
            opts.pose = value
                .parse::<PoseRef>()
                .map_err(|e| Failure::config(format!("field pose: {e}")))?;
            continue;
        }
        let key = field
            .parse::<OptionKey>()
            .map_err(|_| Failure::config(format!("unknown field `{field}`")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| Failure::config(format!("field {field}: bad number `{value}`")))?;
        opts.set_scalar(key, v).map_err(|e| Failure::config(e.to_string()))?;
    }
    Ok(opts)
}

fn cmd_preview(
    option_spec: Option<&str>,
    seed: u64,
    identity: u32,
    background: Option<&Path>,
    out: &Path,
) -> Result<String, Failure> {
    let mut opts = match option_spec {
        Some(s) => parse_preview_options(s)?,
        None => RenderOptions::default(),
    };
    let spec = derive_person_spec(seed, identity);
    let poses = PoseLibrary::load(std::slice::from_ref(&opts.pose))
        .map_err(|e| Failure::config(e.to_string()))?;
    let pose = poses.resolve(&opts.pose).map_err(|e| Failure::config(e.to_string()))?;

    let bg = match background {
        Some(dir) => {
            let corpus = BackgroundCorpus::load_dir(dir, None, seed)
                .map_err(|e| Failure::config(e.to_string()))?;
            let (bg_ref, crop) = pick_background(&corpus, seed, OUT_W, OUT_H);
            opts.background_ref = bg_ref;
            crop
        }
        None => ImageBuffer::filled(OUT_W, OUT_H, [0.5, 0.5, 0.5, 1.0]),
    };
    let bias = derive_color_bias(opts.camera_id, seed, 0.08)
        .map_err(|e| Failure::config(e.to_string()))?;
    let img = tagforge_core::pipeline::synthesize_image(&spec, pose, &opts, &bg, &bias)
        .map_err(|e| Failure::generation(e.to_string()))?;
    write_png(&img, out).map_err(|e| Failure::generation(e.to_string()))?;
    Ok(format!(
        "wrote {} ({}x{})\nmean luma {:.4}\n{}",
        out.display(),
        img.width(),
        img.height(),
        img.mean_luma(),
        opts.to_kv()
    ))
}

fn cmd_gamma_variant(
    images: &Path,
    lo: f64,
    hi: f64,
    seed: u64,
    out: &Path,
) -> Result<String, Failure> {
    let report = make_gamma_variant(images, lo, hi, seed, out).map_err(|e| {
        // Range/empty-input problems are configuration errors.
        match e {
            tagforge_core::pipeline::PipelineError::Config(m) => Failure::config(m),
            other => Failure::generation(other.to_string()),
        }
    })?;
    let applied = report.gamma_values().len();
    let mut summary = format!(
        "re-encoded {applied} images with gamma in [{lo}, {hi}] into {}\n",
        out.display()
    );
    for w in &report.warnings {
        summary.push_str(&format!("warning: {w}\n"));
    }
    summary.push_str(&format!("sidecar: {}\n", out.join("gamma_values.csv").display()));
    Ok(summary)
}

//! Dataset generation: resolve per-image options, render, post-process,
//! and write auto-labeled images plus a manifest.
//!
//! Per-image randomness derives from `(seed, identity, image_index)`, never
//! from shared counters, so any worker count produces byte-identical trees.
//! The manifest is written last; its absence marks a partial run.

mod config;
mod manifest;

pub use config::{GenerationConfig, OptionMode};
pub use manifest::{output_file_name, parse_output_name, DatasetManifest, ManifestRecord};

use crate::bvh;
use crate::distribution::{sample_option, DistError, TargetProfile};
use crate::estimation::EstimatorError;
use crate::imageproc::{
    apply_color_bias, apply_gamma, composite, degrade_resolution, derive_color_bias, load_image,
    pick_background, write_png, BackgroundCorpus, ColorBias, ImageProcError,
};
use crate::renderer::{build_mesh, render, ImageBuffer, RenderError};
use crate::rng::Stream;
use crate::scene::{
    builtin_pose, derive_person_spec, BackgroundRef, OptionKey, PersonSpec, Pose, PoseRef,
    RenderOptions, SceneError,
};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Output geometry: 128 wide by 256 tall.
pub const OUT_W: u32 = 128;
pub const OUT_H: u32 = 256;

const SALT_OPTS: u64 = 0x4f50_5453;
const SALT_BG_PICK: u64 = 0x4247_504b;
const SALT_GVAR: u64 = 0x4756_4152;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("option `{0}` is in profile mode but the loaded profile has no such key")]
    MissingProfileKey(&'static str),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    ImageProc(#[from] ImageProcError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Bvh(#[from] bvh::BvhError),
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("identity {identity} image {index}: {message}")]
    Stage { identity: u32, index: u32, message: String },
    #[error("unknown pose reference `{0}` (not in the configured pose set)")]
    UnknownPoseRef(String),
}

/// Resolved pose tables for every [`PoseRef`] a config names.
pub struct PoseLibrary {
    entries: Vec<(PoseRef, Pose)>,
}

impl PoseLibrary {
    /// Resolve built-ins directly and parse each BVH file once.
    pub fn load(pose_set: &[PoseRef]) -> Result<PoseLibrary, PipelineError> {
        let mut docs: BTreeMap<String, bvh::BvhDocument> = BTreeMap::new();
        let mut entries = Vec::with_capacity(pose_set.len());
        for r in pose_set {
            let pose = match r {
                PoseRef::Builtin(name) => builtin_pose(*name),
                PoseRef::BvhFrame { path, frame } => {
                    if !docs.contains_key(path) {
                        let text = std::fs::read_to_string(path).map_err(|e| {
                            PipelineError::Config(format!("cannot read bvh `{path}`: {e}"))
                        })?;
                        docs.insert(path.clone(), bvh::parse_bvh(&text)?);
                    }
                    let doc = &docs[path];
                    bvh::pose_from_frame(doc, *frame, &bvh::matching_joint_map(doc))?
                }
            };
            entries.push((r.clone(), pose));
        }
        Ok(PoseLibrary { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, r: &PoseRef) -> Result<&Pose, PipelineError> {
        self.entries
            .iter()
            .find(|(pr, _)| pr == r)
            .map(|(_, p)| p)
            .ok_or_else(|| PipelineError::UnknownPoseRef(r.to_string()))
    }

    fn pick(&self, rng: &mut Stream) -> &(PoseRef, Pose) {
        &self.entries[rng.index(self.entries.len())]
    }
}

fn background_for(
    cfg: &GenerationConfig,
    corpus: &BackgroundCorpus,
    identity_id: u32,
    image_index: u32,
) -> (BackgroundRef, ImageBuffer) {
    if cfg.background_fixed {
        corpus.fixed_pick(OUT_W, OUT_H)
    } else {
        let bg_seed = Stream::derive(cfg.seed, &[identity_id as u64, image_index as u64, SALT_BG_PICK])
            .next_u64();
        pick_background(corpus, bg_seed, OUT_W, OUT_H)
    }
}

/// Resolve the full option set for one image.
///
/// The per-image stream is `derive(seed, identity, image_index)`; draw
/// order is fixed (camera, pose, then scalar options in key order), so
/// results are independent of generation order and worker count.
pub fn resolve_options(
    cfg: &GenerationConfig,
    corpus: &BackgroundCorpus,
    poses: &PoseLibrary,
    profile: Option<&TargetProfile>,
    identity_id: u32,
    image_index: u32,
) -> Result<RenderOptions, PipelineError> {
    let mut rng = Stream::derive(cfg.seed, &[identity_id as u64, image_index as u64, SALT_OPTS]);
    let mut opts = RenderOptions::default();
    opts.camera_id = 1 + rng.index(cfg.num_cameras as usize) as u32;
    opts.pose = poses.pick(&mut rng).0.clone();
    for key in OptionKey::CONFIGURABLE {
        let mode = &cfg.modes[&key];
        let v = match mode {
            OptionMode::Fixed(v) => *v,
            OptionMode::Uniform(lo, hi) => rng.uniform(*lo, *hi),
            OptionMode::Choice(vs) => vs[rng.index(vs.len())],
            OptionMode::Profile => {
                let dist = profile
                    .and_then(|p| p.get(key))
                    .ok_or(PipelineError::MissingProfileKey(key.name()))?;
                sample_option(dist, &mut rng)
            }
        };
        opts.set_scalar(key, v)?;
    }
    opts.background_ref = background_for(cfg, corpus, identity_id, image_index).0;
    Ok(opts)
}

/// The fixed post-processing chain: render, composite over the background,
/// camera color bias, gamma, resolution degradation.
pub fn synthesize_image(
    spec: &PersonSpec,
    pose: &Pose,
    opts: &RenderOptions,
    background: &ImageBuffer,
    bias: &ColorBias,
) -> Result<ImageBuffer, PipelineError> {
    let mesh = build_mesh(spec, pose);
    let fg = render(&mesh, opts, OUT_W, OUT_H)?;
    let over = composite(&fg, background)?;
    let biased = apply_color_bias(&over, bias);
    let toned = apply_gamma(&biased, opts.gamma);
    Ok(degrade_resolution(&toned, opts.working_height_px, OUT_W, OUT_H))
}

struct JobOutput {
    identity_id: u32,
    image_index: u32,
    record: ManifestRecord,
}

fn run_job(
    cfg: &GenerationConfig,
    corpus: &BackgroundCorpus,
    poses: &PoseLibrary,
    profile: Option<&TargetProfile>,
    out_dir: &Path,
    identity_id: u32,
    image_index: u32,
) -> Result<JobOutput, PipelineError> {
    let opts = resolve_options(cfg, corpus, poses, profile, identity_id, image_index)?;
    let spec = derive_person_spec(cfg.seed, identity_id);
    let pose = poses.resolve(&opts.pose)?;
    let (_, background) = background_for(cfg, corpus, identity_id, image_index);
    let bias = derive_color_bias(opts.camera_id, cfg.seed, cfg.beta)?;
    let img = synthesize_image(&spec, pose, &opts, &background, &bias)?;
    let file = output_file_name(identity_id, opts.camera_id, image_index);
    write_png(&img, &out_dir.join(&file))?;
    Ok(JobOutput {
        identity_id,
        image_index,
        record: ManifestRecord { file, identity_id, camera_id: opts.camera_id, options: opts },
    })
}

/// Generate the full dataset under `cfg.output_dir`. `workers == 0` uses
/// the machine's parallelism. Byte-identical across runs and worker counts.
pub fn generate_dataset(
    cfg: &GenerationConfig,
    profile: Option<&TargetProfile>,
    workers: usize,
) -> Result<DatasetManifest, PipelineError> {
    let out_dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| PipelineError::Config("output_dir is not set".into()))?;
    for key in cfg.profile_keys() {
        if profile.and_then(|p| p.get(key)).is_none() {
            return Err(PipelineError::MissingProfileKey(key.name()));
        }
    }
    let corpus = BackgroundCorpus::load_dir(
        &cfg.background_corpus,
        cfg.crop_manifest.as_deref(),
        cfg.seed,
    )?;
    let poses = PoseLibrary::load(&cfg.pose_set)?;
    std::fs::create_dir_all(&out_dir)?;

    let jobs: Vec<(u32, u32)> = (1..=cfg.num_identities)
        .flat_map(|id| (0..cfg.images_per_identity).map(move |i| (id, i)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
    let mut outputs: Vec<JobOutput> = pool.install(|| {
        jobs.par_iter()
            .map(|&(identity_id, image_index)| {
                run_job(cfg, &corpus, &poses, profile, &out_dir, identity_id, image_index).map_err(
                    |e| match e {
                        e @ PipelineError::Stage { .. } => e,
                        other => PipelineError::Stage {
                            identity: identity_id,
                            index: image_index,
                            message: other.to_string(),
                        },
                    },
                )
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    outputs.sort_by_key(|o| (o.identity_id, o.image_index));
    let manifest = DatasetManifest {
        seed: cfg.seed,
        config_hash: cfg.config_hash.clone(),
        records: outputs.into_iter().map(|o| o.record).collect(),
    };
    manifest.validate()?;
    manifest.save(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}

/// Sweep description for estimator calibration.
#[derive(Clone, Debug)]
pub struct CalibrationSweep {
    pub option: OptionKey,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub seed: u64,
}

/// Render a calibration set: `n` images whose target option is swept
/// evenly over `[lo, hi]` while everything else (identity, pose, camera,
/// light, background, the other options) randomizes under `cfg`.
///
/// Options in profile mode draw from `profile`, which supports sequential
/// target-aware calibration: extract one option's profile first, then
/// calibrate the next estimator under it so its tone context matches the
/// target domain.
pub fn render_calibration_set(
    cfg: &GenerationConfig,
    sweep: &CalibrationSweep,
    profile: Option<&TargetProfile>,
) -> Result<Vec<(ImageBuffer, f64)>, PipelineError> {
    for key in cfg.profile_keys() {
        if key != sweep.option && profile.and_then(|p| p.get(key)).is_none() {
            return Err(PipelineError::MissingProfileKey(key.name()));
        }
    }
    if !OptionKey::CONFIGURABLE.contains(&sweep.option) {
        return Err(PipelineError::Config(format!(
            "option `{}` cannot be calibrated",
            sweep.option.name()
        )));
    }
    if sweep.n < 1 {
        return Err(PipelineError::Config("calibration n must be >= 1".into()));
    }
    let range = sweep.option.range();
    if !(range.contains(sweep.lo) && sweep.lo <= sweep.hi && sweep.hi <= range.hi) {
        return Err(PipelineError::Config(format!(
            "sweep [{}, {}] outside {} range [{}, {}]",
            sweep.lo,
            sweep.hi,
            sweep.option.name(),
            range.lo,
            range.hi
        )));
    }
    let mut cal_cfg = cfg.clone();
    cal_cfg.seed = sweep.seed;
    // The swept option's own mode never applies (the sweep overrides it);
    // pin it so a profile-mode entry on that key cannot block resolution.
    cal_cfg.modes.insert(sweep.option, OptionMode::Fixed(range.clamp(sweep.lo)));
    let corpus = BackgroundCorpus::load_dir(
        &cal_cfg.background_corpus,
        cal_cfg.crop_manifest.as_deref(),
        cal_cfg.seed,
    )?;
    let poses = PoseLibrary::load(&cal_cfg.pose_set)?;

    let values: Vec<f64> = (0..sweep.n)
        .map(|i| {
            if sweep.n == 1 {
                sweep.lo
            } else {
                let t = i as f64 / (sweep.n - 1) as f64;
                range.clamp(sweep.lo + (sweep.hi - sweep.lo) * t)
            }
        })
        .collect();

    values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let identity_id = i as u32 + 1;
            let mut opts = resolve_options(&cal_cfg, &corpus, &poses, profile, identity_id, 0)?;
            opts.set_scalar(sweep.option, value)?;
            let spec = derive_person_spec(cal_cfg.seed, identity_id);
            let pose = poses.resolve(&opts.pose)?;
            let (_, background) = background_for(&cal_cfg, &corpus, identity_id, 0);
            let bias = derive_color_bias(opts.camera_id, cal_cfg.seed, cal_cfg.beta)?;
            let img = synthesize_image(&spec, pose, &opts, &background, &bias)?;
            Ok((img, value))
        })
        .collect()
}

/// Report of a gamma-variant run: per input file, the applied gamma or
/// `None` when the file was skipped.
#[derive(Clone, Debug)]
pub struct GammaVariantReport {
    pub entries: Vec<(String, Option<f64>)>,
    pub warnings: Vec<String>,
}

impl GammaVariantReport {
    pub fn gamma_values(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|(_, g)| *g).collect()
    }
}

/// Re-encode every image in `input_dir` with a per-image random gamma in
/// `[lo, hi]`, writing results plus a `gamma_values.csv` sidecar to
/// `out_dir`. Unreadable images are skipped with a warning in the sidecar.
pub fn make_gamma_variant(
    input_dir: &Path,
    lo: f64,
    hi: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<GammaVariantReport, PipelineError> {
    if !(0.4..=2.5).contains(&lo) || !(0.4..=2.5).contains(&hi) || lo > hi {
        return Err(PipelineError::Config(format!(
            "gamma range [{lo}, {hi}] must satisfy 0.4 <= lo <= hi <= 2.5"
        )));
    }
    let mut files: Vec<_> = std::fs::read_dir(input_dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(PipelineError::Config(format!(
            "no images found in `{}`",
            input_dir.display()
        )));
    }
    std::fs::create_dir_all(out_dir)?;

    let mut entries = Vec::with_capacity(files.len());
    let mut warnings = Vec::new();
    let mut sidecar = String::from("file,gamma\n");
    for (i, path) in files.iter().enumerate() {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("?").to_string();
        let g = Stream::derive(seed, &[i as u64, SALT_GVAR]).uniform(lo, hi);
        match load_image(path) {
            Ok(img) => {
                let out_name = format!(
                    "{}.png",
                    path.file_stem().and_then(|s| s.to_str()).unwrap_or("image")
                );
                write_png(&apply_gamma(&img, g), &out_dir.join(&out_name))?;
                sidecar.push_str(&format!("{out_name},{g}\n"));
                entries.push((out_name, Some(g)));
            }
            Err(e) => {
                warnings.push(format!("skipped `{name}`: {e}"));
                sidecar.push_str(&format!("{name},skipped\n"));
                entries.push((name, None));
            }
        }
    }
    std::fs::write(out_dir.join("gamma_values.csv"), sidecar)?;
    Ok(GammaVariantReport { entries, warnings })
}

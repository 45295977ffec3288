//! Generation config: a TOML file with global settings, a pose source
//! block, and one mode entry per scalar rendering option.
//!
//! ```toml
//! seed = 42
//! num_identities = 64
//! images_per_identity = 8
//! num_cameras = 6
//! background_corpus = "assets/backgrounds"
//! beta = 0.08
//!
//! [poses]
//! builtin = ["stand", "walk_0", "walk_1", "walk_2", "walk_3"]
//! # bvh = { path = "assets/walk_sample.bvh", frames = [0, 2] }
//!
//! [options]
//! camera_azimuth_deg = { uniform = [0.0, 360.0] }
//! camera_depression_deg = { uniform = [0.0, 30.0] }
//! camera_distance_m = { uniform = [3.0, 5.0] }
//! light_azimuth_deg = { uniform = [0.0, 360.0] }
//! light_elevation_deg = { uniform = [20.0, 70.0] }
//! light_intensity = { uniform = [0.6, 1.3] }
//! ambient = { fixed = 0.25 }
//! gamma = { uniform = [0.8, 1.2] }
//! working_height_px = { choice = [64, 96, 128, 192, 256] }
//! ```
//!
//! `"profile"` as a mode samples that option from a loaded target profile.
//! `camera_id` has no entry: it is drawn uniformly from `1..=num_cameras`.

use super::PipelineError;
use crate::scene::{BuiltinPose, OptionKey, PoseRef};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawConfig {
    seed: u64,
    num_identities: u32,
    images_per_identity: u32,
    num_cameras: u32,
    background_corpus: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    crop_manifest: Option<String>,
    #[serde(default = "default_beta")]
    beta: f64,
    #[serde(default)]
    background_fixed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<String>,
    poses: RawPoses,
    options: BTreeMap<String, RawMode>,
}

fn default_beta() -> f64 {
    0.08
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawPoses {
    #[serde(default)]
    builtin: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bvh: Option<RawBvhPoses>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawBvhPoses {
    path: String,
    frames: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawMode {
    Fixed { fixed: f64 },
    Uniform { uniform: [f64; 2] },
    Choice { choice: Vec<f64> },
    Keyword(String),
}

/// How one option's value is drawn per image.
#[derive(Clone, Debug, PartialEq)]
pub enum OptionMode {
    Fixed(f64),
    /// Uniform in [lo, hi).
    Uniform(f64, f64),
    Choice(Vec<f64>),
    /// Sample from the loaded target profile.
    Profile,
}

/// Validated generation configuration.
#[derive(Clone, Debug)]
pub struct GenerationConfig {
    pub seed: u64,
    pub num_identities: u32,
    pub images_per_identity: u32,
    pub num_cameras: u32,
    pub background_corpus: PathBuf,
    pub crop_manifest: Option<PathBuf>,
    /// Color-bias magnitude in [0, 0.5].
    pub beta: f64,
    /// Pin the background to the first corpus image, full frame
    /// (ablation: background variation off).
    pub background_fixed: bool,
    pub output_dir: Option<PathBuf>,
    pub pose_set: Vec<PoseRef>,
    pub modes: BTreeMap<OptionKey, OptionMode>,
    /// Hex digest of the canonical config text; recorded in manifests.
    pub config_hash: String,
}

impl GenerationConfig {
    pub fn load(path: &Path) -> Result<GenerationConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        // Relative paths resolve against the config file's directory.
        if let Some(dir) = path.parent() {
            if cfg.background_corpus.is_relative() {
                cfg.background_corpus = dir.join(&cfg.background_corpus);
            }
            if let Some(m) = &cfg.crop_manifest {
                if m.is_relative() {
                    cfg.crop_manifest = Some(dir.join(m));
                }
            }
            for pose in cfg.pose_set.iter_mut() {
                if let PoseRef::BvhFrame { path: bvh_path, .. } = pose {
                    if Path::new(bvh_path.as_str()).is_relative() {
                        *bvh_path = dir.join(bvh_path.as_str()).to_string_lossy().into_owned();
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<GenerationConfig, PipelineError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(format!("config parse: {e}")))?;
        Self::validate(raw)
    }

    fn validate(raw: RawConfig) -> Result<GenerationConfig, PipelineError> {
        let cfg_err = |m: String| PipelineError::Config(m);
        if raw.num_identities < 1 {
            return Err(cfg_err("num_identities must be >= 1".into()));
        }
        if raw.images_per_identity < 1 {
            return Err(cfg_err("images_per_identity must be >= 1".into()));
        }
        if raw.num_cameras < 1 {
            return Err(cfg_err("num_cameras must be >= 1".into()));
        }
        if !(0.0..=0.5).contains(&raw.beta) {
            return Err(cfg_err(format!("beta {} outside [0, 0.5]", raw.beta)));
        }

        let mut pose_set = Vec::new();
        for name in &raw.poses.builtin {
            let p = BuiltinPose::from_name(name)
                .map_err(|_| cfg_err(format!("unknown builtin pose `{name}`")))?;
            pose_set.push(PoseRef::Builtin(p));
        }
        if let Some(bvh) = &raw.poses.bvh {
            if bvh.frames.is_empty() {
                return Err(cfg_err("poses.bvh.frames must not be empty".into()));
            }
            for &frame in &bvh.frames {
                pose_set.push(PoseRef::BvhFrame { path: bvh.path.clone(), frame });
            }
        }
        if pose_set.is_empty() {
            return Err(cfg_err("pose set is empty: list builtin poses and/or a bvh source".into()));
        }

        let mut modes = BTreeMap::new();
        for (name, raw_mode) in &raw.options {
            if name == "camera_id" {
                return Err(cfg_err(
                    "camera_id is drawn from num_cameras and cannot appear in [options]".into(),
                ));
            }
            let key: OptionKey = name
                .parse()
                .map_err(|_| cfg_err(format!("unknown option `{name}` in [options]")))?;
            let range = key.range();
            let in_range = |v: f64| range.contains(v);
            let mode = match raw_mode {
                RawMode::Fixed { fixed } => {
                    if !in_range(*fixed) {
                        return Err(cfg_err(format!(
                            "{name}: fixed value {fixed} outside [{}, {}]",
                            range.lo, range.hi
                        )));
                    }
                    OptionMode::Fixed(*fixed)
                }
                RawMode::Uniform { uniform: [lo, hi] } => {
                    // hi is an exclusive draw bound, so hi == range.hi is
                    // fine even for wrap-around ranges like azimuth.
                    if !in_range(*lo) || *hi < *lo || *hi > range.hi {
                        return Err(cfg_err(format!(
                            "{name}: uniform [{lo}, {hi}] outside [{}, {}]",
                            range.lo, range.hi
                        )));
                    }
                    OptionMode::Uniform(*lo, *hi)
                }
                RawMode::Choice { choice } => {
                    if choice.is_empty() {
                        return Err(cfg_err(format!("{name}: choice list is empty")));
                    }
                    for v in choice {
                        if !in_range(*v) {
                            return Err(cfg_err(format!(
                                "{name}: choice value {v} outside [{}, {}]",
                                range.lo, range.hi
                            )));
                        }
                    }
                    OptionMode::Choice(choice.clone())
                }
                RawMode::Keyword(word) if word == "profile" => OptionMode::Profile,
                RawMode::Keyword(word) => {
                    return Err(cfg_err(format!(
                        "{name}: unknown mode `{word}` (expected fixed/uniform/choice/\"profile\")"
                    )))
                }
            };
            modes.insert(key, mode);
        }
        for key in OptionKey::CONFIGURABLE {
            if !modes.contains_key(&key) {
                return Err(cfg_err(format!("[options] is missing `{}`", key.name())));
            }
        }

        // Canonical re-serialization pins the hash to content, not styling.
        let canonical =
            toml::to_string(&raw).map_err(|e| cfg_err(format!("config hash: {e}")))?;
        let digest = Sha256::digest(canonical.as_bytes());
        let config_hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();

        Ok(GenerationConfig {
            seed: raw.seed,
            num_identities: raw.num_identities,
            images_per_identity: raw.images_per_identity,
            num_cameras: raw.num_cameras,
            background_corpus: PathBuf::from(raw.background_corpus),
            crop_manifest: raw.crop_manifest.map(PathBuf::from),
            beta: raw.beta,
            background_fixed: raw.background_fixed,
            output_dir: raw.output_dir.map(PathBuf::from),
            pose_set,
            modes,
            config_hash,
        })
    }

    /// Keys configured in `"profile"` mode.
    pub fn profile_keys(&self) -> Vec<OptionKey> {
        self.modes
            .iter()
            .filter(|(_, m)| **m == OptionMode::Profile)
            .map(|(k, _)| *k)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(super) const BASE_TOML: &str = r#"
seed = 42
num_identities = 4
images_per_identity = 2
num_cameras = 6
background_corpus = "bg"

[poses]
builtin = ["stand", "walk_0"]

[options]
camera_azimuth_deg = { uniform = [0.0, 360.0] }
camera_depression_deg = { uniform = [0.0, 30.0] }
camera_distance_m = { uniform = [3.0, 5.0] }
light_azimuth_deg = { uniform = [0.0, 360.0] }
light_elevation_deg = { uniform = [20.0, 70.0] }
light_intensity = { uniform = [0.6, 1.3] }
ambient = { fixed = 0.25 }
gamma = { uniform = [0.8, 1.2] }
working_height_px = { choice = [64, 128, 256] }
"#;

    #[test]
    fn base_config_parses() {
        let cfg = GenerationConfig::from_toml_str(BASE_TOML).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.pose_set.len(), 2);
        assert_eq!(cfg.modes.len(), 9);
        assert_eq!(cfg.beta, 0.08);
        assert_eq!(cfg.config_hash.len(), 16);
        assert!(cfg.profile_keys().is_empty());
    }

    #[test]
    fn profile_mode_is_recognized() {
        let toml = BASE_TOML.replace(
            "gamma = { uniform = [0.8, 1.2] }",
            "gamma = \"profile\"",
        );
        let cfg = GenerationConfig::from_toml_str(&toml).unwrap();
        assert_eq!(cfg.profile_keys(), vec![OptionKey::Gamma]);
    }

    #[test]
    fn out_of_range_modes_are_rejected() {
        for (needle, replacement) in [
            ("gamma = { uniform = [0.8, 1.2] }", "gamma = { fixed = 3.0 }"),
            ("gamma = { uniform = [0.8, 1.2] }", "gamma = { uniform = [0.2, 1.0] }"),
            ("gamma = { uniform = [0.8, 1.2] }", "gamma = { choice = [0.9, 2.6] }"),
            ("gamma = { uniform = [0.8, 1.2] }", "gamma = \"target\""),
        ] {
            let toml = BASE_TOML.replace(needle, replacement);
            assert!(
                GenerationConfig::from_toml_str(&toml).is_err(),
                "accepted `{replacement}`"
            );
        }
    }

    #[test]
    fn missing_option_entry_is_rejected() {
        let toml = BASE_TOML.replace("ambient = { fixed = 0.25 }\n", "");
        let err = GenerationConfig::from_toml_str(&toml).unwrap_err();
        assert!(err.to_string().contains("ambient"), "{err}");
    }

    #[test]
    fn camera_id_entry_is_rejected() {
        let toml = format!("{BASE_TOML}camera_id = {{ fixed = 1 }}\n");
        assert!(GenerationConfig::from_toml_str(&toml).is_err());
    }

    #[test]
    fn empty_pose_set_is_rejected() {
        let toml = BASE_TOML.replace("builtin = [\"stand\", \"walk_0\"]", "builtin = []");
        assert!(GenerationConfig::from_toml_str(&toml).is_err());
    }

    #[test]
    fn config_hash_tracks_content_not_formatting() {
        let a = GenerationConfig::from_toml_str(BASE_TOML).unwrap();
        let reformatted = BASE_TOML.replace("seed = 42", "seed       = 42 # comment");
        let b = GenerationConfig::from_toml_str(&reformatted).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        let changed = BASE_TOML.replace("seed = 42", "seed = 43");
        let c = GenerationConfig::from_toml_str(&changed).unwrap();
        assert_ne!(a.config_hash, c.config_hash);
    }
}

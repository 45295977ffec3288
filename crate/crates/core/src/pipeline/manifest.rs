//! Dataset manifest: one header line with seed and config hash, one column
//! line, then one comma-separated record per image. Every rendering option
//! of every image is recorded, so generated data is fully auto-labeled and
//! can feed calibration directly.

use super::PipelineError;
use crate::scene::{OptionKey, RenderOptions};
use std::path::Path;

pub const MANIFEST_VERSION: &str = "tagforge-manifest v1";

/// Label row for one generated image.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRecord {
    pub file: String,
    pub identity_id: u32,
    pub camera_id: u32,
    pub options: RenderOptions,
}

/// The generated dataset's label table.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub config_hash: String,
    pub records: Vec<ManifestRecord>,
}

/// Market-style output name: `{identity:04}_c{camera}_{index:06}.png`.
pub fn output_file_name(identity_id: u32, camera_id: u32, image_index: u32) -> String {
    format!("{identity_id:04}_c{camera_id}_{image_index:06}.png")
}

/// Parse an output name back into (identity, camera, index).
pub fn parse_output_name(name: &str) -> Option<(u32, u32, u32)> {
    let stem = name.strip_suffix(".png")?;
    let mut parts = stem.split('_');
    let identity = parts.next()?.parse().ok()?;
    let camera = parts.next()?.strip_prefix('c')?.parse().ok()?;
    let index = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((identity, camera, index))
}

const COLUMNS: [&str; 14] = [
    "file",
    "identity_id",
    "camera_id",
    "pose",
    "camera_azimuth_deg",
    "camera_depression_deg",
    "camera_distance_m",
    "light_azimuth_deg",
    "light_elevation_deg",
    "light_intensity",
    "ambient",
    "gamma",
    "working_height_px",
    "background_ref",
];

/// Scalar columns 4..=12, in file order.
const SCALAR_COLUMNS: [OptionKey; 9] = [
    OptionKey::CameraAzimuthDeg,
    OptionKey::CameraDepressionDeg,
    OptionKey::CameraDistanceM,
    OptionKey::LightAzimuthDeg,
    OptionKey::LightElevationDeg,
    OptionKey::LightIntensity,
    OptionKey::Ambient,
    OptionKey::Gamma,
    OptionKey::WorkingHeightPx,
];

impl DatasetManifest {
    /// Check record invariants: unique file names, camera consistency,
    /// options within range.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let mut names = std::collections::BTreeSet::new();
        for r in &self.records {
            if !names.insert(&r.file) {
                return Err(PipelineError::Manifest(format!("duplicate file name `{}`", r.file)));
            }
            if r.camera_id != r.options.camera_id {
                return Err(PipelineError::Manifest(format!(
                    "record `{}`: camera_id column {} disagrees with options {}",
                    r.file, r.camera_id, r.options.camera_id
                )));
            }
            r.options
                .validate()
                .map_err(|e| PipelineError::Manifest(format!("record `{}`: {e}", r.file)))?;
        }
        Ok(())
    }

    /// All recorded values of one scalar option, in record order.
    pub fn option_values(&self, key: OptionKey) -> Vec<f64> {
        self.records.iter().map(|r| r.options.scalar(key)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# {MANIFEST_VERSION} seed={} config={}\n",
            self.seed, self.config_hash
        ));
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for r in &self.records {
            let mut fields: Vec<String> = Vec::with_capacity(COLUMNS.len());
            fields.push(r.file.clone());
            fields.push(r.identity_id.to_string());
            fields.push(r.camera_id.to_string());
            fields.push(r.options.pose.to_string());
            for key in SCALAR_COLUMNS {
                if key.is_integer() {
                    fields.push(format!("{}", r.options.scalar(key) as u64));
                } else {
                    fields.push(r.options.scalar(key).to_string());
                }
            }
            fields.push(r.options.background_ref.to_string());
            debug_assert!(fields.iter().all(|f| !f.contains(',')));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<DatasetManifest, PipelineError> {
        let merr = |line: usize, m: String| PipelineError::Manifest(format!("line {line}: {m}"));
        let mut lines = text.lines().enumerate();

        let (_, header) = lines
            .next()
            .ok_or_else(|| PipelineError::Manifest("empty manifest".into()))?;
        let header = header.trim();
        let rest = header
            .strip_prefix(&format!("# {MANIFEST_VERSION} "))
            .ok_or_else(|| merr(1, format!("bad version line `{header}`")))?;
        let mut seed = None;
        let mut config_hash = None;
        for tok in rest.split_whitespace() {
            if let Some(v) = tok.strip_prefix("seed=") {
                seed = v.parse().ok();
            } else if let Some(v) = tok.strip_prefix("config=") {
                config_hash = Some(v.to_string());
            }
        }
        let seed = seed.ok_or_else(|| merr(1, "missing seed".into()))?;
        let config_hash = config_hash.ok_or_else(|| merr(1, "missing config hash".into()))?;

        let (_, columns) = lines
            .next()
            .ok_or_else(|| PipelineError::Manifest("missing column line".into()))?;
        if columns.trim() != COLUMNS.join(",") {
            return Err(merr(2, format!("unexpected columns `{columns}`")));
        }

        let mut records = Vec::new();
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != COLUMNS.len() {
                return Err(merr(no + 1, format!("expected {} fields, found {}", COLUMNS.len(), fields.len())));
            }
            let mut options = RenderOptions {
                pose: fields[3].parse().map_err(|e| merr(no + 1, format!("{e}")))?,
                background_ref: fields[13].parse().map_err(|e| merr(no + 1, format!("{e}")))?,
                ..Default::default()
            };
            for (key, raw) in SCALAR_COLUMNS.iter().zip(&fields[4..13]) {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| merr(no + 1, format!("bad number `{raw}` for {}", key.name())))?;
                options
                    .set_scalar(*key, v)
                    .map_err(|e| merr(no + 1, e.to_string()))?;
            }
            let camera_id: u32 = fields[2]
                .parse()
                .map_err(|_| merr(no + 1, format!("bad camera_id `{}`", fields[2])))?;
            options
                .set_scalar(OptionKey::CameraId, camera_id as f64)
                .map_err(|e| merr(no + 1, e.to_string()))?;
            records.push(ManifestRecord {
                file: fields[0].to_string(),
                identity_id: fields[1]
                    .parse()
                    .map_err(|_| merr(no + 1, format!("bad identity_id `{}`", fields[1])))?,
                camera_id,
                options,
            });
        }
        let manifest = DatasetManifest { seed, config_hash, records };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_csv()).map_err(PipelineError::Io)
    }

    pub fn load(path: &Path) -> Result<DatasetManifest, PipelineError> {
        Self::from_csv(&std::fs::read_to_string(path).map_err(PipelineError::Io)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{BackgroundRef, PoseRef};

    fn record(i: u32, cam: u32, idx: u32) -> ManifestRecord {
        let mut options = RenderOptions {
            camera_azimuth_deg: 123.456 + i as f64,
            gamma: 1.05,
            background_ref: BackgroundRef { image_id: format!("bg_{i}"), x: 1, y: 2, w: 30, h: 40 },
            camera_id: cam,
            ..Default::default()
        };
        options.pose = PoseRef::BvhFrame { path: "assets/walk_sample.bvh".into(), frame: idx as usize };
        ManifestRecord { file: output_file_name(i, cam, idx), identity_id: i, camera_id: cam, options }
    }

    #[test]
    fn output_names_round_trip() {
        assert_eq!(output_file_name(1, 3, 42), "0001_c3_000042.png");
        assert_eq!(parse_output_name("0001_c3_000042.png"), Some((1, 3, 42)));
        assert_eq!(parse_output_name("0001_c3_000042.jpg"), None);
        assert_eq!(parse_output_name("0001_x3_000042.png"), None);
        for (id, cam, idx) in [(1u32, 1u32, 0u32), (64, 6, 511), (9999, 123, 999_999)] {
            assert_eq!(parse_output_name(&output_file_name(id, cam, idx)), Some((id, cam, idx)));
        }
    }

    #[test]
    fn manifest_round_trips_through_csv() {
        let manifest = DatasetManifest {
            seed: 42,
            config_hash: "deadbeef00112233".into(),
            records: vec![record(1, 3, 0), record(1, 2, 1), record(2, 6, 0)],
        };
        manifest.validate().unwrap();
        let csv = manifest.to_csv();
        let back = DatasetManifest::from_csv(&csv).unwrap();
        assert_eq!(back, manifest);
    }

    #[test]
    fn duplicate_file_names_fail_validation() {
        let manifest = DatasetManifest {
            seed: 1,
            config_hash: "x".into(),
            records: vec![record(1, 1, 0), record(1, 1, 0)],
        };
        assert!(manifest.validate().is_err());
    }

    #[test]
    fn out_of_range_option_fails_load() {
        let manifest = DatasetManifest {
            seed: 1,
            config_hash: "x".into(),
            records: vec![record(1, 1, 0)],
        };
        let csv = manifest.to_csv().replace(",1.05,", ",9.99,");
        assert!(DatasetManifest::from_csv(&csv).is_err());
    }

    #[test]
    fn option_values_extracts_column() {
        let manifest = DatasetManifest {
            seed: 1,
            config_hash: "x".into(),
            records: vec![record(1, 1, 0), record(2, 1, 0)],
        };
        assert_eq!(manifest.option_values(OptionKey::Gamma), vec![1.05, 1.05]);
        assert_eq!(
            manifest.option_values(OptionKey::CameraAzimuthDeg),
            vec![124.456, 125.456]
        );
    }
}

//! Empirical rendering-option distributions, the Wasserstein-1 diagnostic,
//! and Monte Carlo resampling.
//!
//! A target profile is the only artifact a data owner hands back: per-option
//! value lists in a human-readable text file, auditable at a glance. The
//! discrepancy between a synthetic set and a target is never minimized by an
//! optimizer; sampling option values straight from the target's empirical
//! distribution drives it toward zero by construction, and `wasserstein1`
//! just reports how close the result landed.

use crate::renderer::ImageBuffer;
use crate::rng::Stream;
use crate::scene::OptionKey;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("empty value list for {0}")]
    Empty(&'static str),
    #[error("option key mismatch: {0} vs {1}")]
    KeyMismatch(&'static str, &'static str),
    #[error("{key} value {value} outside its range")]
    ValueOutOfRange { key: &'static str, value: f64 },
    #[error("profile line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("profile has no entries")]
    EmptyProfile,
    #[error("unsupported profile version `{0}`")]
    UnsupportedVersion(String),
}

/// Per-image estimates of one option over a collection of images.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    key: OptionKey,
    values: Vec<f64>,
    /// Free-text provenance, e.g. `estimated from target_images/`.
    source: String,
}

impl EmpiricalDistribution {
    /// Non-empty values, each inside the option's declared range.
    pub fn new(
        key: OptionKey,
        values: Vec<f64>,
        source: impl Into<String>,
    ) -> Result<EmpiricalDistribution, DistError> {
        if values.is_empty() {
            return Err(DistError::Empty(key.name()));
        }
        for &v in &values {
            if !key.range().contains(v) {
                return Err(DistError::ValueOutOfRange { key: key.name(), value: v });
            }
        }
        Ok(EmpiricalDistribution { key, values, source: source.into() })
    }

    pub fn key(&self) -> OptionKey {
        self.key
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Histogram with `bins` equal-width bins over the option's range.
    pub fn histogram(&self, bins: usize) -> Vec<usize> {
        let range = self.key.range();
        let mut counts = vec![0usize; bins];
        for &v in &self.values {
            let t = ((v - range.lo) / range.span()).clamp(0.0, 1.0);
            let b = ((t * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        counts
    }

    /// One stored value chosen uniformly; deterministic in the stream state.
    pub fn sample(&self, rng: &mut Stream) -> f64 {
        self.values[rng.index(self.values.len())]
    }
}

/// Uniform draw from the distribution (Monte Carlo resampling step).
pub fn sample_option(dist: &EmpiricalDistribution, rng: &mut Stream) -> f64 {
    dist.sample(rng)
}

/// Run the estimator over every image; `values[i]` is the estimate for
/// `images[i]`. Estimation failures carry the offending image index.
pub fn build_distribution(
    est: &crate::estimation::Estimator,
    images: &[ImageBuffer],
    source: impl Into<String>,
) -> Result<EmpiricalDistribution, BuildError> {
    if images.is_empty() {
        return Err(BuildError::NoImages);
    }
    let mut values = Vec::with_capacity(images.len());
    for (index, img) in images.iter().enumerate() {
        values.push(
            crate::estimation::predict(est, img)
                .map_err(|source| BuildError::Predict { index, source })?,
        );
    }
    EmpiricalDistribution::new(est.option_key(), values, source).map_err(BuildError::Dist)
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("no input images")]
    NoImages,
    #[error("image {index}: {source}")]
    Predict {
        index: usize,
        source: crate::estimation::EstimatorError,
    },
    #[error(transparent)]
    Dist(DistError),
}

/// Wasserstein-1 distance between two empirical distributions over the same
/// option, via the CDF-difference integral over the merged support.
pub fn wasserstein1(
    a: &EmpiricalDistribution,
    b: &EmpiricalDistribution,
) -> Result<f64, DistError> {
    if a.key != b.key {
        return Err(DistError::KeyMismatch(a.key.name(), b.key.name()));
    }
    Ok(w1_cdf(&a.values, &b.values))
}

/// CDF-integral route: integral of |F_a - F_b| over the merged support.
/// Works for unequal sample counts.
pub fn w1_cdf(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = Vec::with_capacity(a.len() + b.len());
    xs.extend_from_slice(a);
    xs.extend_from_slice(b);
    xs.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut sa: Vec<f64> = a.to_vec();
    let mut sb: Vec<f64> = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let (mut ia, mut ib) = (0usize, 0usize);
    let mut total = 0.0;
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        while ia < sa.len() && sa[ia] <= x0 {
            ia += 1;
        }
        while ib < sb.len() && sb[ib] <= x0 {
            ib += 1;
        }
        let fa = ia as f64 / sa.len() as f64;
        let fb = ib as f64 / sb.len() as f64;
        total += (fa - fb).abs() * (x1 - x0);
    }
    total
}

/// Sorted-pairing route: mean |a_(i) - b_(i)|. Equal sample counts only;
/// agrees with [`w1_cdf`] to 1e-9 there.
pub fn w1_sorted_pairs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "sorted-pairing W1 needs equal sample counts");
    assert!(!a.is_empty());
    let mut sa: Vec<f64> = a.to_vec();
    let mut sb: Vec<f64> = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / sa.len() as f64
}

/// Union of per-option empirical distributions extracted from one target
/// image set, plus creation metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetProfile {
    entries: BTreeMap<OptionKey, EmpiricalDistribution>,
    pub seed: u64,
    /// Unix seconds at creation; informational.
    pub created_unix_s: u64,
    pub estimator_version: String,
}

pub const PROFILE_VERSION: &str = "tagforge-profile v1";

impl TargetProfile {
    pub fn new(seed: u64, created_unix_s: u64, estimator_version: impl Into<String>) -> TargetProfile {
        TargetProfile {
            entries: BTreeMap::new(),
            seed,
            created_unix_s,
            estimator_version: estimator_version.into(),
        }
    }

    /// Insert or replace one option's distribution.
    pub fn insert(&mut self, dist: EmpiricalDistribution) {
        self.entries.insert(dist.key(), dist);
    }

    pub fn get(&self, key: OptionKey) -> Option<&EmpiricalDistribution> {
        self.entries.get(&key)
    }

    pub fn keys(&self) -> impl Iterator<Item = OptionKey> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Serialize to the documented text form:
    ///
    /// ```text
    /// tagforge-profile v1
    /// seed 42
    /// created_unix_s 1755000000
    /// estimator_version tagforge-estimator v1
    ///
    /// [gamma]
    /// source estimated from renders
    /// values 3
    /// 1.5
    /// 1.52
    /// 1.48
    /// ```
    pub fn to_text(&self) -> Result<String, DistError> {
        if self.entries.is_empty() {
            return Err(DistError::EmptyProfile);
        }
        let mut out = String::new();
        out.push_str(PROFILE_VERSION);
        out.push('\n');
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("created_unix_s {}\n", self.created_unix_s));
        out.push_str(&format!("estimator_version {}\n", self.estimator_version));
        for (key, dist) in &self.entries {
            out.push('\n');
            out.push_str(&format!("[{}]\n", key.name()));
            out.push_str(&format!("source {}\n", dist.source));
            out.push_str(&format!("values {}\n", dist.values.len()));
            for v in &dist.values {
                out.push_str(&format!("{v}\n"));
            }
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<TargetProfile, DistError> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, message: String| DistError::Parse { line: line + 1, message };

        let (first_no, first) = lines.next().ok_or(DistError::UnsupportedVersion("".into()))?;
        if first.trim() != PROFILE_VERSION {
            let _ = first_no;
            return Err(DistError::UnsupportedVersion(first.trim().to_string()));
        }

        let mut profile = TargetProfile::new(0, 0, "");
        let mut header_done = false;
        let mut pending: Option<(OptionKey, String, usize, Vec<f64>, usize)> = None;

        let finish =
            |profile: &mut TargetProfile,
             pending: &mut Option<(OptionKey, String, usize, Vec<f64>, usize)>|
             -> Result<(), DistError> {
                if let Some((key, source, declared, values, line)) = pending.take() {
                    if values.len() != declared {
                        return Err(DistError::Parse {
                            line: line + 1,
                            message: format!(
                                "block [{}] declares {declared} values but lists {}",
                                key.name(),
                                values.len()
                            ),
                        });
                    }
                    let dist = EmpiricalDistribution::new(key, values, source)?;
                    profile.insert(dist);
                }
                Ok(())
            };

        for (no, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                finish(&mut profile, &mut pending)?;
                header_done = true;
                let key: OptionKey = name
                    .parse()
                    .map_err(|_| err(no, format!("unknown option key `{name}`")))?;
                pending = Some((key, String::new(), 0, Vec::new(), no));
                continue;
            }
            match &mut pending {
                None => {
                    if header_done {
                        return Err(err(no, format!("unexpected line `{line}`")));
                    }
                    let (k, v) = line
                        .split_once(' ')
                        .ok_or_else(|| err(no, format!("bad header line `{line}`")))?;
                    match k {
                        "seed" => {
                            profile.seed =
                                v.trim().parse().map_err(|_| err(no, format!("bad seed `{v}`")))?
                        }
                        "created_unix_s" => {
                            profile.created_unix_s = v
                                .trim()
                                .parse()
                                .map_err(|_| err(no, format!("bad timestamp `{v}`")))?
                        }
                        "estimator_version" => profile.estimator_version = v.trim().to_string(),
                        other => return Err(err(no, format!("unknown header field `{other}`"))),
                    }
                }
                Some((_, source, declared, values, _)) => {
                    if let Some(v) = line.strip_prefix("source ") {
                        *source = v.to_string();
                    } else if line == "source" {
                        *source = String::new();
                    } else if let Some(v) = line.strip_prefix("values ") {
                        *declared = v
                            .trim()
                            .parse()
                            .map_err(|_| err(no, format!("bad value count `{v}`")))?;
                    } else {
                        let v: f64 = line
                            .parse()
                            .map_err(|_| err(no, format!("bad value `{line}`")))?;
                        values.push(v);
                    }
                }
            }
        }
        finish(&mut profile, &mut pending)?;
        if profile.entries.is_empty() {
            return Err(DistError::EmptyProfile);
        }
        Ok(profile)
    }
}

/// Render a text histogram (one bar line per bin) for CLI output.
pub fn text_histogram(dist: &EmpiricalDistribution, bins: usize, bar_width: usize) -> String {
    let counts = dist.histogram(bins);
    let max = counts.iter().copied().max().unwrap_or(1).max(1);
    let range = dist.key().range();
    let step = range.span() / bins as f64;
    let mut out = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let lo = range.lo + i as f64 * step;
        let hi = lo + step;
        let bar = "#".repeat(c * bar_width / max);
        out.push_str(&format!("{lo:>9.3} .. {hi:>9.3} | {bar} {c}\n"));
    }
    out
}

/// File-level profile errors (the in-memory grammar errors stay [`DistError`]).
#[derive(Debug, Error)]
pub enum ProfileIoError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Dist(#[from] DistError),
}

pub fn save_profile(profile: &TargetProfile, path: &std::path::Path) -> Result<(), ProfileIoError> {
    Ok(std::fs::write(path, profile.to_text()?)?)
}

pub fn load_profile(path: &std::path::Path) -> Result<TargetProfile, ProfileIoError> {
    Ok(TargetProfile::from_text(&std::fs::read_to_string(path)?)?)
}

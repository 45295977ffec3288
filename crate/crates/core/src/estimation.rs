//! Per-option estimators: regress one rendering-option value from an image.
//!
//! Estimators are k-nearest-neighbor over engineered features (a luminance
//! histogram for tone-curve options, a grayscale thumbnail for geometric
//! ones). They train in one pass by storing calibration pairs, predict by
//! exact nearest-neighbor scan, and serialize to a small versioned text
//! container so they can be shipped to a data owner.

use crate::renderer::ImageBuffer;
use crate::scene::OptionKey;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("image is {w}x{h}; estimators take {expected_w}x{expected_h}")]
    WrongDimensions { w: u32, h: u32, expected_w: u32, expected_h: u32 },
    #[error("need at least k={k} calibration pairs, got {n}")]
    TooFewPairs { k: usize, n: usize },
    #[error("k must be >= 1")]
    ZeroK,
    #[error("calibration label {value} outside the range of {key}")]
    LabelOutOfRange { key: &'static str, value: f64 },
    #[error("feature vector length {found}, extractor {tag} expects {expected}")]
    BadFeatureLength { tag: &'static str, expected: usize, found: usize },
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("unsupported estimator version `{0}`")]
    UnsupportedVersion(String),
    #[error("estimator file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Expected input geometry: width x height of pipeline output images.
pub const INPUT_W: u32 = 128;
pub const INPUT_H: u32 = 256;

/// Feature extractor identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtractorTag {
    /// 32-bin normalized histogram of luma (0.2126 R + 0.7152 G + 0.0722 B).
    LuminanceHistogram32,
    /// Grayscale box-average to 16x8 (16 wide, 8 tall), flattened row-major.
    Thumbnail16x8,
}

impl ExtractorTag {
    pub fn name(self) -> &'static str {
        match self {
            ExtractorTag::LuminanceHistogram32 => "luminance_histogram_32",
            ExtractorTag::Thumbnail16x8 => "thumbnail_16x8",
        }
    }

    pub fn from_name(s: &str) -> Option<ExtractorTag> {
        match s {
            "luminance_histogram_32" => Some(ExtractorTag::LuminanceHistogram32),
            "thumbnail_16x8" => Some(ExtractorTag::Thumbnail16x8),
            _ => None,
        }
    }

    pub fn feature_len(self) -> usize {
        match self {
            ExtractorTag::LuminanceHistogram32 => 32,
            ExtractorTag::Thumbnail16x8 => 128,
        }
    }

    /// Default extractor for an option: tone-curve options read the
    /// histogram, geometric ones read the thumbnail.
    pub fn default_for(key: OptionKey) -> ExtractorTag {
        match key {
            OptionKey::Gamma => ExtractorTag::LuminanceHistogram32,
            _ => ExtractorTag::Thumbnail16x8,
        }
    }
}

/// Fixed-length feature vector plus the extractor that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub tag: ExtractorTag,
    pub values: Vec<f32>,
}

impl FeatureVector {
    fn validate(&self) -> Result<(), EstimatorError> {
        if self.values.len() != self.tag.feature_len() {
            return Err(EstimatorError::BadFeatureLength {
                tag: self.tag.name(),
                expected: self.tag.feature_len(),
                found: self.values.len(),
            });
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(EstimatorError::NonFiniteFeature);
        }
        Ok(())
    }
}

#[inline]
fn luma(px: [f32; 4]) -> f32 {
    0.2126 * px[0] + 0.7152 * px[1] + 0.0722 * px[2]
}

/// Extract features from a 128x256 image.
pub fn extract_features(img: &ImageBuffer, tag: ExtractorTag) -> Result<FeatureVector, EstimatorError> {
    if img.width() != INPUT_W || img.height() != INPUT_H {
        return Err(EstimatorError::WrongDimensions {
            w: img.width(),
            h: img.height(),
            expected_w: INPUT_W,
            expected_h: INPUT_H,
        });
    }
    let values = match tag {
        ExtractorTag::LuminanceHistogram32 => {
            let mut hist = vec![0.0f32; 32];
            for px in img.pixels() {
                let l = luma(*px).clamp(0.0, 1.0);
                let bin = ((l * 32.0) as usize).min(31);
                hist[bin] += 1.0;
            }
            let n = (INPUT_W * INPUT_H) as f32;
            for h in hist.iter_mut() {
                *h /= n;
            }
            hist
        }
        ExtractorTag::Thumbnail16x8 => {
            // 16 columns x 8 rows; each cell averages an 8x32 pixel block.
            let (cols, rows) = (16u32, 8u32);
            let (bw, bh) = (INPUT_W / cols, INPUT_H / rows);
            let mut out = Vec::with_capacity((cols * rows) as usize);
            for r in 0..rows {
                for c in 0..cols {
                    let mut sum = 0.0f64;
                    for y in r * bh..(r + 1) * bh {
                        for x in c * bw..(c + 1) * bw {
                            sum += luma(img.get(x, y)) as f64;
                        }
                    }
                    out.push((sum / (bw * bh) as f64) as f32);
                }
            }
            out
        }
    };
    let fv = FeatureVector { tag, values };
    fv.validate()?;
    Ok(fv)
}

/// k-NN regressor from image features to one option value.
///
/// Immutable after fit; prediction is an exact scan with ties broken by
/// lower calibration index, so results are independent of any search
/// acceleration and of pair insertion order (for distinct distances).
#[derive(Clone, Debug, PartialEq)]
pub struct Estimator {
    option_key: OptionKey,
    tag: ExtractorTag,
    k: usize,
    features: Vec<Vec<f32>>,
    labels: Vec<f64>,
}

pub const ESTIMATOR_VERSION: &str = "tagforge-estimator v1";

impl Estimator {
    pub fn option_key(&self) -> OptionKey {
        self.option_key
    }

    pub fn tag(&self) -> ExtractorTag {
        self.tag
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Store calibration pairs. No iterative training.
pub fn fit(
    option_key: OptionKey,
    labeled: &[(ImageBuffer, f64)],
    tag: ExtractorTag,
    k: usize,
) -> Result<Estimator, EstimatorError> {
    if k == 0 {
        return Err(EstimatorError::ZeroK);
    }
    if labeled.len() < k {
        return Err(EstimatorError::TooFewPairs { k, n: labeled.len() });
    }
    let range = option_key.range();
    let mut features = Vec::with_capacity(labeled.len());
    let mut labels = Vec::with_capacity(labeled.len());
    for (img, label) in labeled {
        if !range.contains(*label) {
            return Err(EstimatorError::LabelOutOfRange { key: option_key.name(), value: *label });
        }
        features.push(extract_features(img, tag)?.values);
        labels.push(*label);
    }
    Ok(Estimator { option_key, tag, k, features, labels })
}

fn sq_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (*x - *y) as f64;
            d * d
        })
        .sum()
}

/// Mean label of the k nearest calibration features under Euclidean
/// distance, clamped to the option's declared range.
pub fn predict(est: &Estimator, img: &ImageBuffer) -> Result<f64, EstimatorError> {
    let query = extract_features(img, est.tag)?;
    Ok(predict_features(est, &query.values))
}

/// Prediction from a pre-extracted feature vector.
pub fn predict_features(est: &Estimator, query: &[f32]) -> f64 {
    let mut scored: Vec<(f64, usize)> = est
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| (sq_distance(query, f), i))
        .collect();
    // Ties resolved by lower calibration index.
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let sum: f64 = scored[..est.k].iter().map(|&(_, i)| est.labels[i]).sum();
    est.option_key.range().clamp(sum / est.k as f64)
}

/// Serialize to the versioned text container.
///
/// ```text
/// tagforge-estimator v1
/// option_key gamma
/// extractor luminance_histogram_32
/// k 5
/// pairs 600
/// dim 32
/// <label> <f_0> <f_1> ... <f_dim-1>      (one line per pair)
/// ```
pub fn estimator_to_text(est: &Estimator) -> String {
    let mut out = String::new();
    out.push_str(ESTIMATOR_VERSION);
    out.push('\n');
    out.push_str(&format!("option_key {}\n", est.option_key.name()));
    out.push_str(&format!("extractor {}\n", est.tag.name()));
    out.push_str(&format!("k {}\n", est.k));
    out.push_str(&format!("pairs {}\n", est.labels.len()));
    out.push_str(&format!("dim {}\n", est.tag.feature_len()));
    for (f, label) in est.features.iter().zip(&est.labels) {
        out.push_str(&label.to_string());
        for v in f {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn estimator_from_text(text: &str) -> Result<Estimator, EstimatorError> {
    let mut lines = text.lines().enumerate();
    let err = |line: usize, message: String| EstimatorError::Parse { line: line + 1, message };

    match lines.next() {
        Some((_, l)) if l.trim() == ESTIMATOR_VERSION => {}
        Some((_, l)) => return Err(EstimatorError::UnsupportedVersion(l.trim().to_string())),
        None => return Err(EstimatorError::UnsupportedVersion(String::new())),
    }

    let mut option_key: Option<OptionKey> = None;
    let mut tag: Option<ExtractorTag> = None;
    let mut k = 0usize;
    let mut pairs = usize::MAX;
    let mut dim = 0usize;
    for _ in 0..5 {
        let (no, line) = lines
            .next()
            .ok_or_else(|| err(0, "truncated header".to_string()))?;
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| err(no, format!("bad header line `{line}`")))?;
        let value = value.trim();
        match key {
            "option_key" => {
                option_key =
                    Some(value.parse().map_err(|_| err(no, format!("unknown option key `{value}`")))?)
            }
            "extractor" => {
                tag = Some(
                    ExtractorTag::from_name(value)
                        .ok_or_else(|| err(no, format!("unknown extractor `{value}`")))?,
                )
            }
            "k" => k = value.parse().map_err(|_| err(no, format!("bad k `{value}`")))?,
            "pairs" => pairs = value.parse().map_err(|_| err(no, format!("bad pair count `{value}`")))?,
            "dim" => dim = value.parse().map_err(|_| err(no, format!("bad dim `{value}`")))?,
            other => return Err(err(no, format!("unknown header field `{other}`"))),
        }
    }
    let option_key = option_key.ok_or_else(|| err(0, "missing option_key".into()))?;
    let tag = tag.ok_or_else(|| err(0, "missing extractor".into()))?;
    if dim != tag.feature_len() {
        return Err(EstimatorError::BadFeatureLength {
            tag: tag.name(),
            expected: tag.feature_len(),
            found: dim,
        });
    }

    let mut features = Vec::with_capacity(pairs.min(1 << 20));
    let mut labels = Vec::with_capacity(pairs.min(1 << 20));
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let label: f64 = toks
            .next()
            .unwrap()
            .parse()
            .map_err(|_| err(no, "bad label".to_string()))?;
        let fv: Result<Vec<f32>, _> = toks.map(str::parse::<f32>).collect();
        let fv = fv.map_err(|_| err(no, "bad feature value".to_string()))?;
        if fv.len() != dim {
            return Err(err(no, format!("expected {dim} features, found {}", fv.len())));
        }
        if !fv.iter().all(|v| v.is_finite()) || !label.is_finite() {
            return Err(EstimatorError::NonFiniteFeature);
        }
        features.push(fv);
        labels.push(label);
    }
    if labels.len() != pairs {
        return Err(err(0, format!("header declares {pairs} pairs, file has {}", labels.len())));
    }
    if k == 0 {
        return Err(EstimatorError::ZeroK);
    }
    if labels.len() < k {
        return Err(EstimatorError::TooFewPairs { k, n: labels.len() });
    }
    let range = option_key.range();
    for &label in &labels {
        if !range.contains(label) {
            return Err(EstimatorError::LabelOutOfRange { key: option_key.name(), value: label });
        }
    }
    Ok(Estimator { option_key, tag, k, features, labels })
}

/// File-level estimator errors.
#[derive(Debug, Error)]
pub enum EstimatorIoError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

pub fn save_estimator(est: &Estimator, path: &std::path::Path) -> Result<(), EstimatorIoError> {
    Ok(std::fs::write(path, estimator_to_text(est))?)
}

pub fn load_estimator(path: &std::path::Path) -> Result<Estimator, EstimatorIoError> {
    Ok(estimator_from_text(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn img_filled(v: f32) -> ImageBuffer {
        ImageBuffer::filled(INPUT_W, INPUT_H, [v, v, v, 1.0])
    }

    fn random_img(s: &mut Stream) -> ImageBuffer {
        let mut img = ImageBuffer::new(INPUT_W, INPUT_H);
        for y in 0..INPUT_H {
            for x in 0..INPUT_W {
                let v = s.next_f64() as f32;
                img.set(x, y, [v, (v * 0.5 + 0.2).min(1.0), 1.0 - v, 1.0]);
            }
        }
        img
    }

    #[test]
    fn black_image_histogram_concentrates_in_bin_zero() {
        let fv = extract_features(&img_filled(0.0), ExtractorTag::LuminanceHistogram32).unwrap();
        assert_eq!(fv.values[0], 1.0);
        assert!(fv.values[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn histogram_sums_to_one() {
        let mut s = Stream::new(8);
        let img = random_img(&mut s);
        let fv = extract_features(&img, ExtractorTag::LuminanceHistogram32).unwrap();
        let sum: f32 = fv.values.iter().sum();
        assert!((sum - 1.0).abs() < 1e-4);
    }

    #[test]
    fn white_image_thumbnail_is_all_ones() {
        let fv = extract_features(&img_filled(1.0), ExtractorTag::Thumbnail16x8).unwrap();
        assert_eq!(fv.values.len(), 128);
        for v in fv.values {
            assert!((v - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn half_split_image_thumbnail_splits_columns() {
        let mut img = ImageBuffer::new(INPUT_W, INPUT_H);
        for y in 0..INPUT_H {
            for x in 0..INPUT_W {
                let v = if x < INPUT_W / 2 { 0.0 } else { 1.0 };
                img.set(x, y, [v, v, v, 1.0]);
            }
        }
        let fv = extract_features(&img, ExtractorTag::Thumbnail16x8).unwrap();
        // Row-major 8 rows x 16 columns: first 8 columns 0, last 8 columns 1.
        for row in 0..8 {
            for col in 0..16 {
                let v = fv.values[row * 16 + col];
                if col < 8 {
                    assert_eq!(v, 0.0, "row {row} col {col}");
                } else {
                    assert!((v - 1.0).abs() < 1e-5, "row {row} col {col}");
                }
            }
        }
    }

    #[test]
    fn wrong_dimensions_are_rejected() {
        let img = ImageBuffer::new(64, 64);
        assert!(matches!(
            extract_features(&img, ExtractorTag::Thumbnail16x8),
            Err(EstimatorError::WrongDimensions { .. })
        ));
    }

    #[test]
    fn one_nn_returns_training_label_on_training_point() {
        let mut s = Stream::new(3);
        let labeled: Vec<(ImageBuffer, f64)> =
            (0..10).map(|i| (random_img(&mut s), 0.5 + 0.1 * i as f64)).collect();
        let est = fit(OptionKey::Gamma, &labeled, ExtractorTag::LuminanceHistogram32, 1).unwrap();
        for (img, label) in &labeled {
            assert_eq!(predict(&est, img).unwrap(), *label);
        }
    }

    #[test]
    fn k_larger_than_calibration_set_is_rejected() {
        let mut s = Stream::new(4);
        let labeled: Vec<(ImageBuffer, f64)> = (0..3).map(|_| (random_img(&mut s), 1.0)).collect();
        assert_eq!(
            fit(OptionKey::Gamma, &labeled, ExtractorTag::LuminanceHistogram32, 5).unwrap_err(),
            EstimatorError::TooFewPairs { k: 5, n: 3 }
        );
        assert_eq!(
            fit(OptionKey::Gamma, &[], ExtractorTag::LuminanceHistogram32, 1).unwrap_err(),
            EstimatorError::TooFewPairs { k: 1, n: 0 }
        );
    }

    #[test]
    fn equidistant_pair_averages_labels() {
        // Two constant images at 0.25 and 0.75 luma; query at 0.5 is
        // equidistant in thumbnail space.
        let labeled = vec![(img_filled(0.25), 0.5), (img_filled(0.75), 1.5)];
        let est = fit(OptionKey::Gamma, &labeled, ExtractorTag::Thumbnail16x8, 2).unwrap();
        let got = predict(&est, &img_filled(0.5)).unwrap();
        assert!((got - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prediction_clamps_to_option_range() {
        let labeled = vec![(img_filled(0.1), 0.4), (img_filled(0.2), 0.4)];
        let est = fit(OptionKey::Gamma, &labeled, ExtractorTag::Thumbnail16x8, 2).unwrap();
        let got = predict(&est, &img_filled(0.9)).unwrap();
        assert!((0.4..=2.5).contains(&got));
    }

    #[test]
    fn tie_break_prefers_lower_calibration_index() {
        // Identical features, different labels: k=1 must take index 0.
        let labeled = vec![(img_filled(0.5), 2.0), (img_filled(0.5), 0.5)];
        let est = fit(OptionKey::Gamma, &labeled, ExtractorTag::Thumbnail16x8, 1).unwrap();
        assert_eq!(predict(&est, &img_filled(0.5)).unwrap(), 2.0);
    }

    #[test]
    fn insertion_order_does_not_change_predictions() {
        let mut s = Stream::new(5);
        let labeled: Vec<(ImageBuffer, f64)> =
            (0..12).map(|i| (random_img(&mut s), 0.5 + 0.12 * i as f64)).collect();
        let mut reversed = labeled.clone();
        reversed.reverse();
        let a = fit(OptionKey::Gamma, &labeled, ExtractorTag::LuminanceHistogram32, 3).unwrap();
        let b = fit(OptionKey::Gamma, &reversed, ExtractorTag::LuminanceHistogram32, 3).unwrap();
        for _ in 0..10 {
            let q = random_img(&mut s);
            assert_eq!(predict(&a, &q).unwrap(), predict(&b, &q).unwrap());
        }
    }

    /// Brute-force oracle: sort all (distance, index) pairs and average the
    /// k best labels. Must agree exactly with `predict`.
    #[test]
    fn exact_nn_oracle_equivalence() {
        let mut s = Stream::new(6);
        let labeled: Vec<(ImageBuffer, f64)> =
            (0..60).map(|_| (random_img(&mut s), s.uniform(0.4, 2.5))).collect();
        let est = fit(OptionKey::Gamma, &labeled, ExtractorTag::LuminanceHistogram32, 5).unwrap();
        for _ in 0..20 {
            let q = random_img(&mut s);
            let query = extract_features(&q, ExtractorTag::LuminanceHistogram32).unwrap();
            // independent oracle
            let mut scored: Vec<(f64, usize, f64)> = labeled
                .iter()
                .enumerate()
                .map(|(i, (img, label))| {
                    let f = extract_features(img, ExtractorTag::LuminanceHistogram32).unwrap();
                    let d: f64 = f
                        .values
                        .iter()
                        .zip(&query.values)
                        .map(|(a, b)| ((a - b) as f64).powi(2))
                        .sum();
                    (d, i, *label)
                })
                .collect();
            scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expect = OptionKey::Gamma
                .range()
                .clamp(scored[..5].iter().map(|t| t.2).sum::<f64>() / 5.0);
            assert_eq!(predict(&est, &q).unwrap(), expect);
        }
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gamma.tfest");
        let mut s = Stream::new(7);
        let labeled: Vec<(ImageBuffer, f64)> =
            (0..20).map(|_| (random_img(&mut s), s.uniform(0.4, 2.5))).collect();
        let est = fit(OptionKey::Gamma, &labeled, ExtractorTag::LuminanceHistogram32, 5).unwrap();
        save_estimator(&est, &path).unwrap();
        let back = load_estimator(&path).unwrap();
        assert_eq!(back, est);
        for _ in 0..100 {
            let q = random_img(&mut s);
            let a = predict(&est, &q).unwrap();
            let b = predict(&back, &q).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_and_wrong_version_files_error() {
        let mut s = Stream::new(8);
        let labeled: Vec<(ImageBuffer, f64)> = (0..6).map(|_| (random_img(&mut s), 1.0)).collect();
        let est = fit(OptionKey::Gamma, &labeled, ExtractorTag::LuminanceHistogram32, 2).unwrap();
        let text = estimator_to_text(&est);

        let truncated = &text[..text.len() / 2];
        assert!(estimator_from_text(truncated).is_err());

        let wrong_version = text.replacen("v1", "v9", 1);
        assert!(matches!(
            estimator_from_text(&wrong_version),
            Err(EstimatorError::UnsupportedVersion(_))
        ));
    }
}

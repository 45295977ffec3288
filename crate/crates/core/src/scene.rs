//! Identity and rendering-option data model.
//!
//! An output image is fully described by a [`PersonSpec`] (who is in the
//! picture) and [`RenderOptions`] (everything environmental about how the
//! picture was taken). Both are plain immutable values; both serialize to
//! a line-oriented `key=value` text form with the field names below.

use crate::rng::Stream;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

const SALT_PERSON: u64 = 0x5045_5253;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("unknown pose")]
    UnknownPose,
    #[error("unknown option key `{0}`")]
    UnknownOptionKey(String),
    #[error("option {key} value {value} outside range {lo}..{hi}")]
    OptionOutOfRange {
        key: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
        hi_exclusive: bool,
    },
    #[error("bad pose reference `{0}`: expected `builtin:<name>` or `bvh:<path>:<frame>`")]
    BadPoseRef(String),
    #[error("bad background reference `{0}`: expected `<id>:<x>:<y>:<w>:<h>`")]
    BadBackgroundRef(String),
    #[error("bad image id `{0}`: only [A-Za-z0-9._-] allowed")]
    BadImageId(String),
    #[error("key-value text: {0}")]
    KeyValue(String),
    #[error("pose rotation for {joint} is not finite or exceeds 180 degrees")]
    BadRotation { joint: &'static str },
}

// ---------------------------------------------------------------------------
// Skeleton joints and poses
// ---------------------------------------------------------------------------

/// The 12 humanoid joints, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Joint {
    Pelvis,
    Spine,
    Neck,
    Head,
    LShoulder,
    RShoulder,
    LElbow,
    RElbow,
    LHip,
    RHip,
    LKnee,
    RKnee,
}

impl Joint {
    pub const ALL: [Joint; 12] = [
        Joint::Pelvis,
        Joint::Spine,
        Joint::Neck,
        Joint::Head,
        Joint::LShoulder,
        Joint::RShoulder,
        Joint::LElbow,
        Joint::RElbow,
        Joint::LHip,
        Joint::RHip,
        Joint::LKnee,
        Joint::RKnee,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Joint::Pelvis => "pelvis",
            Joint::Spine => "spine",
            Joint::Neck => "neck",
            Joint::Head => "head",
            Joint::LShoulder => "l_shoulder",
            Joint::RShoulder => "r_shoulder",
            Joint::LElbow => "l_elbow",
            Joint::RElbow => "r_elbow",
            Joint::LHip => "l_hip",
            Joint::RHip => "r_hip",
            Joint::LKnee => "l_knee",
            Joint::RKnee => "r_knee",
        }
    }

    pub fn index(self) -> usize {
        Joint::ALL.iter().position(|&j| j == self).unwrap()
    }
}

/// Joint rotations in degrees, Euler ZXY order (Z applied first).
///
/// All 12 joints are always present; magnitudes are capped at 180 degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    rotations: [[f64; 3]; 12],
}

impl Pose {
    /// All-zero rotations (the rest pose: standing, arms hanging).
    pub fn rest() -> Pose {
        Pose {
            rotations: [[0.0; 3]; 12],
        }
    }

    pub fn from_rotations(rotations: [[f64; 3]; 12]) -> Result<Pose, SceneError> {
        let pose = Pose { rotations };
        pose.validate()?;
        Ok(pose)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        for joint in Joint::ALL {
            let r = self.rotations[joint.index()];
            if r.iter().any(|v| !v.is_finite() || v.abs() > 180.0) {
                return Err(SceneError::BadRotation { joint: joint.name() });
            }
        }
        Ok(())
    }

    /// Rotation triple (Z, X, Y) in degrees for one joint.
    pub fn rotation(&self, joint: Joint) -> [f64; 3] {
        self.rotations[joint.index()]
    }

    pub fn set_rotation(&mut self, joint: Joint, zxy_deg: [f64; 3]) {
        self.rotations[joint.index()] = zxy_deg;
    }
}

/// Built-in pose table names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinPose {
    TPose,
    Stand,
    Walk0,
    Walk1,
    Walk2,
    Walk3,
}

impl BuiltinPose {
    pub const ALL: [BuiltinPose; 6] = [
        BuiltinPose::TPose,
        BuiltinPose::Stand,
        BuiltinPose::Walk0,
        BuiltinPose::Walk1,
        BuiltinPose::Walk2,
        BuiltinPose::Walk3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinPose::TPose => "t_pose",
            BuiltinPose::Stand => "stand",
            BuiltinPose::Walk0 => "walk_0",
            BuiltinPose::Walk1 => "walk_1",
            BuiltinPose::Walk2 => "walk_2",
            BuiltinPose::Walk3 => "walk_3",
        }
    }

    pub fn from_name(name: &str) -> Result<BuiltinPose, SceneError> {
        BuiltinPose::ALL
            .iter()
            .copied()
            .find(|p| p.name() == name)
            .ok_or(SceneError::UnknownPose)
    }
}

/// Fixed joint-angle table for a built-in pose.
pub fn builtin_pose(name: BuiltinPose) -> Pose {
    let mut pose = Pose::rest();
    match name {
        BuiltinPose::TPose => {
            // Arms raised to horizontal: +-90 degrees about the forward (z) axis.
            pose.set_rotation(Joint::LShoulder, [90.0, 0.0, 0.0]);
            pose.set_rotation(Joint::RShoulder, [-90.0, 0.0, 0.0]);
        }
        BuiltinPose::Stand => {
            // Slight A-pose so arms clear the torso.
            pose.set_rotation(Joint::LShoulder, [8.0, 0.0, 0.0]);
            pose.set_rotation(Joint::RShoulder, [-8.0, 0.0, 0.0]);
        }
        BuiltinPose::Walk0 => {
            // Left leg forward, right leg trailing, arms counter-swinging.
            pose.set_rotation(Joint::LHip, [0.0, -24.0, 0.0]);
            pose.set_rotation(Joint::RHip, [0.0, 17.0, 0.0]);
            pose.set_rotation(Joint::LKnee, [0.0, 9.0, 0.0]);
            pose.set_rotation(Joint::RKnee, [0.0, 34.0, 0.0]);
            pose.set_rotation(Joint::LShoulder, [8.0, 19.0, 0.0]);
            pose.set_rotation(Joint::RShoulder, [-8.0, -19.0, 0.0]);
            pose.set_rotation(Joint::LElbow, [0.0, 12.0, 0.0]);
            pose.set_rotation(Joint::RElbow, [0.0, -20.0, 0.0]);
            pose.set_rotation(Joint::Spine, [0.0, -3.0, 5.0]);
        }
        BuiltinPose::Walk1 => {
            // Passing position, left leg planting.
            pose.set_rotation(Joint::LHip, [0.0, -6.0, 0.0]);
            pose.set_rotation(Joint::RHip, [0.0, 3.0, 0.0]);
            pose.set_rotation(Joint::LKnee, [0.0, 6.0, 0.0]);
            pose.set_rotation(Joint::RKnee, [0.0, 22.0, 0.0]);
            pose.set_rotation(Joint::LShoulder, [8.0, 6.0, 0.0]);
            pose.set_rotation(Joint::RShoulder, [-8.0, -6.0, 0.0]);
            pose.set_rotation(Joint::LElbow, [0.0, 8.0, 0.0]);
            pose.set_rotation(Joint::RElbow, [0.0, -10.0, 0.0]);
        }
        BuiltinPose::Walk2 => {
            // Mirror phase of walk_0: right leg forward.
            pose.set_rotation(Joint::LHip, [0.0, 17.0, 0.0]);
            pose.set_rotation(Joint::RHip, [0.0, -24.0, 0.0]);
            pose.set_rotation(Joint::LKnee, [0.0, 34.0, 0.0]);
            pose.set_rotation(Joint::RKnee, [0.0, 9.0, 0.0]);
            pose.set_rotation(Joint::LShoulder, [8.0, -19.0, 0.0]);
            pose.set_rotation(Joint::RShoulder, [-8.0, 19.0, 0.0]);
            pose.set_rotation(Joint::LElbow, [0.0, -20.0, 0.0]);
            pose.set_rotation(Joint::RElbow, [0.0, 12.0, 0.0]);
            pose.set_rotation(Joint::Spine, [0.0, -3.0, -5.0]);
        }
        BuiltinPose::Walk3 => {
            // Passing position, right leg planting.
            pose.set_rotation(Joint::LHip, [0.0, 3.0, 0.0]);
            pose.set_rotation(Joint::RHip, [0.0, -6.0, 0.0]);
            pose.set_rotation(Joint::LKnee, [0.0, 22.0, 0.0]);
            pose.set_rotation(Joint::RKnee, [0.0, 6.0, 0.0]);
            pose.set_rotation(Joint::LShoulder, [8.0, -6.0, 0.0]);
            pose.set_rotation(Joint::RShoulder, [-8.0, 6.0, 0.0]);
            pose.set_rotation(Joint::LElbow, [0.0, -10.0, 0.0]);
            pose.set_rotation(Joint::RElbow, [0.0, 8.0, 0.0]);
        }
    }
    pose
}

/// Look up a built-in pose by its table name.
pub fn builtin_pose_by_name(name: &str) -> Result<Pose, SceneError> {
    Ok(builtin_pose(BuiltinPose::from_name(name)?))
}

/// Reference to a pose: a built-in table or a BVH clip frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PoseRef {
    Builtin(BuiltinPose),
    BvhFrame { path: String, frame: usize },
}

impl fmt::Display for PoseRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoseRef::Builtin(p) => write!(f, "builtin:{}", p.name()),
            PoseRef::BvhFrame { path, frame } => write!(f, "bvh:{path}:{frame}"),
        }
    }
}

impl FromStr for PoseRef {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, SceneError> {
        if let Some(name) = s.strip_prefix("builtin:") {
            return Ok(PoseRef::Builtin(BuiltinPose::from_name(name)?));
        }
        if let Some(rest) = s.strip_prefix("bvh:") {
            if let Some((path, frame)) = rest.rsplit_once(':') {
                if let Ok(frame) = frame.parse::<usize>() {
                    if !path.is_empty() {
                        return Ok(PoseRef::BvhFrame { path: path.to_string(), frame });
                    }
                }
            }
        }
        Err(SceneError::BadPoseRef(s.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Identity: PersonSpec
// ---------------------------------------------------------------------------

/// Torso garment pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorsoPattern {
    Solid,
    Stripes,
    Checker,
}

impl TorsoPattern {
    pub fn name(self) -> &'static str {
        match self {
            TorsoPattern::Solid => "solid",
            TorsoPattern::Stripes => "stripes",
            TorsoPattern::Checker => "checker",
        }
    }

    pub fn from_name(s: &str) -> Result<Self, SceneError> {
        match s {
            "solid" => Ok(TorsoPattern::Solid),
            "stripes" => Ok(TorsoPattern::Stripes),
            "checker" => Ok(TorsoPattern::Checker),
            other => Err(SceneError::KeyValue(format!("unknown torso_pattern `{other}`"))),
        }
    }
}

/// Identity-related appearance parameters, derived deterministically from
/// a seed and identity id.
#[derive(Clone, Debug, PartialEq)]
pub struct PersonSpec {
    pub identity_id: u32,
    pub seed: u64,
    /// Standing height in meters, in [1.45, 1.95].
    pub stature_m: f64,
    /// Limb length multiplier in [0.85, 1.15].
    pub limb_scale: f64,
    /// Girth multiplier in [0.85, 1.2].
    pub bulk_scale: f64,
    pub skin_rgb: [f32; 3],
    pub hair_rgb: [f32; 3],
    pub torso_rgb: [f32; 3],
    pub legs_rgb: [f32; 3],
    pub shoes_rgb: [f32; 3],
    pub torso_pattern: TorsoPattern,
    pub pattern_rgb: [f32; 3],
    /// Pattern cell size in meters, in [0.06, 0.25].
    pub pattern_scale: f64,
}

const SKIN_LIGHT: [f32; 3] = [0.93, 0.78, 0.64];
const SKIN_DEEP: [f32; 3] = [0.34, 0.21, 0.14];
const HAIR_PALETTE: [[f32; 3]; 5] = [
    [0.05, 0.04, 0.03],
    [0.32, 0.20, 0.10],
    [0.82, 0.68, 0.38],
    [0.52, 0.18, 0.09],
    [0.68, 0.68, 0.66],
];

fn jittered(base: [f32; 3], stream: &mut Stream, amount: f32) -> [f32; 3] {
    let mut out = [0.0f32; 3];
    for (o, b) in out.iter_mut().zip(base) {
        let j = (stream.next_f64() as f32 * 2.0 - 1.0) * amount;
        *o = (b + j).clamp(0.0, 1.0);
    }
    out
}

fn garment_color(stream: &mut Stream) -> [f32; 3] {
    // Dark, bright, or saturated; mid-gray clothing is rare in practice
    // and would vanish against typical backgrounds.
    match stream.index(3) {
        0 => [
            stream.uniform(0.02, 0.34) as f32,
            stream.uniform(0.02, 0.34) as f32,
            stream.uniform(0.02, 0.34) as f32,
        ],
        1 => [
            stream.uniform(0.62, 0.98) as f32,
            stream.uniform(0.62, 0.98) as f32,
            stream.uniform(0.62, 0.98) as f32,
        ],
        _ => {
            let hot = stream.index(3);
            let mut c = [0.0f32; 3];
            for (i, ch) in c.iter_mut().enumerate() {
                *ch = if i == hot {
                    stream.uniform(0.6, 0.98) as f32
                } else {
                    stream.uniform(0.02, 0.45) as f32
                };
            }
            c
        }
    }
}

/// Derive a person's appearance from `(seed, identity_id)`. Pure.
pub fn derive_person_spec(seed: u64, identity_id: u32) -> PersonSpec {
    let mut s = Stream::derive(seed, &[identity_id as u64, SALT_PERSON]);
    let stature_m = s.uniform(1.45, 1.95);
    let limb_scale = s.uniform(0.85, 1.15);
    let bulk_scale = s.uniform(0.85, 1.2);
    let skin_t = s.next_f64() as f32;
    let mut skin_rgb = [0.0f32; 3];
    for i in 0..3 {
        skin_rgb[i] = SKIN_LIGHT[i] + (SKIN_DEEP[i] - SKIN_LIGHT[i]) * skin_t;
    }
    let skin_rgb = jittered(skin_rgb, &mut s, 0.03);
    let hair_rgb = jittered(HAIR_PALETTE[s.index(HAIR_PALETTE.len())], &mut s, 0.05);
    let torso_rgb = garment_color(&mut s);
    let legs_rgb = garment_color(&mut s);
    let shoes_rgb = garment_color(&mut s);
    let torso_pattern = match s.index(3) {
        0 => TorsoPattern::Solid,
        1 => TorsoPattern::Stripes,
        _ => TorsoPattern::Checker,
    };
    let pattern_rgb = garment_color(&mut s);
    let pattern_scale = s.uniform(0.06, 0.25);
    PersonSpec {
        identity_id,
        seed,
        stature_m,
        limb_scale,
        bulk_scale,
        skin_rgb,
        hair_rgb,
        torso_rgb,
        legs_rgb,
        shoes_rgb,
        torso_pattern,
        pattern_rgb,
        pattern_scale,
    }
}

fn rgb_to_kv(c: [f32; 3]) -> String {
    format!("{},{},{}", c[0], c[1], c[2])
}

fn rgb_from_kv(s: &str) -> Result<[f32; 3], SceneError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(SceneError::KeyValue(format!("bad rgb triple `{s}`")));
    }
    let mut out = [0.0f32; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p
            .parse::<f32>()
            .map_err(|_| SceneError::KeyValue(format!("bad rgb component `{p}`")))?;
        if !(0.0..=1.0).contains(o) {
            return Err(SceneError::KeyValue(format!("rgb component {o} outside [0,1]")));
        }
    }
    Ok(out)
}

impl PersonSpec {
    /// Line-oriented `key=value` form; parseable by [`PersonSpec::from_kv`].
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("identity_id={}\n", self.identity_id));
        out.push_str(&format!("seed={}\n", self.seed));
        out.push_str(&format!("stature_m={}\n", self.stature_m));
        out.push_str(&format!("limb_scale={}\n", self.limb_scale));
        out.push_str(&format!("bulk_scale={}\n", self.bulk_scale));
        out.push_str(&format!("skin_rgb={}\n", rgb_to_kv(self.skin_rgb)));
        out.push_str(&format!("hair_rgb={}\n", rgb_to_kv(self.hair_rgb)));
        out.push_str(&format!("torso_rgb={}\n", rgb_to_kv(self.torso_rgb)));
        out.push_str(&format!("legs_rgb={}\n", rgb_to_kv(self.legs_rgb)));
        out.push_str(&format!("shoes_rgb={}\n", rgb_to_kv(self.shoes_rgb)));
        out.push_str(&format!("torso_pattern={}\n", self.torso_pattern.name()));
        out.push_str(&format!("pattern_rgb={}\n", rgb_to_kv(self.pattern_rgb)));
        out.push_str(&format!("pattern_scale={}\n", self.pattern_scale));
        out
    }

    pub fn from_kv(text: &str) -> Result<PersonSpec, SceneError> {
        let map = parse_kv(text)?;
        let get = |k: &str| -> Result<&String, SceneError> {
            map.get(k).ok_or_else(|| SceneError::KeyValue(format!("missing key `{k}`")))
        };
        let num = |k: &str| -> Result<f64, SceneError> {
            get(k)?.parse::<f64>().map_err(|_| SceneError::KeyValue(format!("bad number for `{k}`")))
        };
        Ok(PersonSpec {
            identity_id: num("identity_id")? as u32,
            seed: get("seed")?
                .parse::<u64>()
                .map_err(|_| SceneError::KeyValue("bad number for `seed`".into()))?,
            stature_m: num("stature_m")?,
            limb_scale: num("limb_scale")?,
            bulk_scale: num("bulk_scale")?,
            skin_rgb: rgb_from_kv(get("skin_rgb")?)?,
            hair_rgb: rgb_from_kv(get("hair_rgb")?)?,
            torso_rgb: rgb_from_kv(get("torso_rgb")?)?,
            legs_rgb: rgb_from_kv(get("legs_rgb")?)?,
            shoes_rgb: rgb_from_kv(get("shoes_rgb")?)?,
            torso_pattern: TorsoPattern::from_name(get("torso_pattern")?)?,
            pattern_rgb: rgb_from_kv(get("pattern_rgb")?)?,
            pattern_scale: num("pattern_scale")?,
        })
    }
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, SceneError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| SceneError::KeyValue(format!("line {}: missing `=`", lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// Rendering options
// ---------------------------------------------------------------------------

/// Background choice: source image id plus crop rectangle in source pixels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BackgroundRef {
    pub image_id: String,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BackgroundRef {
    /// Placeholder for renders composited over a flat background.
    pub fn flat() -> BackgroundRef {
        BackgroundRef { image_id: "none".into(), x: 0, y: 0, w: 0, h: 0 }
    }
}

/// `true` for ids safe to embed in manifests and crop-manifest lines.
pub fn valid_image_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-')
}

impl fmt::Display for BackgroundRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}:{}", self.image_id, self.x, self.y, self.w, self.h)
    }
}

impl FromStr for BackgroundRef {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, SceneError> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 5 {
            return Err(SceneError::BadBackgroundRef(s.to_string()));
        }
        if !valid_image_id(parts[0]) {
            return Err(SceneError::BadImageId(parts[0].to_string()));
        }
        let mut nums = [0u32; 4];
        for (n, p) in nums.iter_mut().zip(&parts[1..]) {
            *n = p.parse().map_err(|_| SceneError::BadBackgroundRef(s.to_string()))?;
        }
        Ok(BackgroundRef {
            image_id: parts[0].to_string(),
            x: nums[0],
            y: nums[1],
            w: nums[2],
            h: nums[3],
        })
    }
}

/// Valid range of one scalar option.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptionRange {
    pub lo: f64,
    pub hi: f64,
    /// Azimuths wrap: the upper bound is excluded.
    pub hi_exclusive: bool,
}

impl OptionRange {
    pub fn contains(&self, v: f64) -> bool {
        if !v.is_finite() || v < self.lo {
            return false;
        }
        if self.hi_exclusive {
            v < self.hi
        } else {
            v <= self.hi
        }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        let hi = if self.hi_exclusive { self.hi - 1e-9 } else { self.hi };
        v.clamp(self.lo, hi)
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }
}

/// One key per scalar field of [`RenderOptions`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OptionKey {
    CameraAzimuthDeg,
    CameraDepressionDeg,
    CameraDistanceM,
    LightAzimuthDeg,
    LightElevationDeg,
    LightIntensity,
    Ambient,
    CameraId,
    Gamma,
    WorkingHeightPx,
}

impl OptionKey {
    pub const ALL: [OptionKey; 10] = [
        OptionKey::CameraAzimuthDeg,
        OptionKey::CameraDepressionDeg,
        OptionKey::CameraDistanceM,
        OptionKey::LightAzimuthDeg,
        OptionKey::LightElevationDeg,
        OptionKey::LightIntensity,
        OptionKey::Ambient,
        OptionKey::CameraId,
        OptionKey::Gamma,
        OptionKey::WorkingHeightPx,
    ];

    /// Keys an option table in a generation config may set.
    /// `camera_id` is excluded: it is drawn from `num_cameras`.
    pub const CONFIGURABLE: [OptionKey; 9] = [
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

    pub fn name(self) -> &'static str {
        match self {
            OptionKey::CameraAzimuthDeg => "camera_azimuth_deg",
            OptionKey::CameraDepressionDeg => "camera_depression_deg",
            OptionKey::CameraDistanceM => "camera_distance_m",
            OptionKey::LightAzimuthDeg => "light_azimuth_deg",
            OptionKey::LightElevationDeg => "light_elevation_deg",
            OptionKey::LightIntensity => "light_intensity",
            OptionKey::Ambient => "ambient",
            OptionKey::CameraId => "camera_id",
            OptionKey::Gamma => "gamma",
            OptionKey::WorkingHeightPx => "working_height_px",
        }
    }

    pub fn range(self) -> OptionRange {
        let (lo, hi, hi_exclusive) = match self {
            OptionKey::CameraAzimuthDeg => (0.0, 360.0, true),
            OptionKey::CameraDepressionDeg => (-10.0, 80.0, false),
            OptionKey::CameraDistanceM => (2.0, 12.0, false),
            OptionKey::LightAzimuthDeg => (0.0, 360.0, true),
            OptionKey::LightElevationDeg => (0.0, 90.0, false),
            OptionKey::LightIntensity => (0.3, 1.6, false),
            OptionKey::Ambient => (0.1, 0.5, false),
            OptionKey::CameraId => (1.0, u32::MAX as f64, false),
            OptionKey::Gamma => (0.4, 2.5, false),
            OptionKey::WorkingHeightPx => (32.0, 256.0, false),
        };
        OptionRange { lo, hi, hi_exclusive }
    }

    /// Integer-valued options are rounded on assignment.
    pub fn is_integer(self) -> bool {
        matches!(self, OptionKey::CameraId | OptionKey::WorkingHeightPx)
    }
}

impl FromStr for OptionKey {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, SceneError> {
        OptionKey::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| SceneError::UnknownOptionKey(s.to_string()))
    }
}

/// Identity-unrelated environmental factors for one render.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderOptions {
    pub pose: PoseRef,
    /// Camera orbit angle around the person, degrees in [0, 360).
    pub camera_azimuth_deg: f64,
    /// Downward camera tilt, degrees in [-10, 80]; 0 is level.
    pub camera_depression_deg: f64,
    /// Camera distance from the anchor, meters in [2, 12].
    pub camera_distance_m: f64,
    pub light_azimuth_deg: f64,
    pub light_elevation_deg: f64,
    pub light_intensity: f64,
    pub ambient: f64,
    pub background_ref: BackgroundRef,
    /// Drives the per-camera color bias; positive.
    pub camera_id: u32,
    /// Tone-curve exponent in [0.4, 2.5]; values above 1 darken.
    pub gamma: f64,
    /// Effective resolution before the final resize, pixels in [32, 256].
    pub working_height_px: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            pose: PoseRef::Builtin(BuiltinPose::Stand),
            camera_azimuth_deg: 0.0,
            camera_depression_deg: 10.0,
            camera_distance_m: 2.6,
            light_azimuth_deg: 40.0,
            light_elevation_deg: 55.0,
            light_intensity: 1.0,
            ambient: 0.25,
            background_ref: BackgroundRef::flat(),
            camera_id: 1,
            gamma: 1.0,
            working_height_px: 256,
        }
    }
}

impl RenderOptions {
    /// Value of one scalar option.
    pub fn scalar(&self, key: OptionKey) -> f64 {
        match key {
            OptionKey::CameraAzimuthDeg => self.camera_azimuth_deg,
            OptionKey::CameraDepressionDeg => self.camera_depression_deg,
            OptionKey::CameraDistanceM => self.camera_distance_m,
            OptionKey::LightAzimuthDeg => self.light_azimuth_deg,
            OptionKey::LightElevationDeg => self.light_elevation_deg,
            OptionKey::LightIntensity => self.light_intensity,
            OptionKey::Ambient => self.ambient,
            OptionKey::CameraId => self.camera_id as f64,
            OptionKey::Gamma => self.gamma,
            OptionKey::WorkingHeightPx => self.working_height_px as f64,
        }
    }

    /// Assign one scalar option; integer options are rounded.
    pub fn set_scalar(&mut self, key: OptionKey, v: f64) -> Result<(), SceneError> {
        if !key.range().contains(v) {
            let r = key.range();
            return Err(SceneError::OptionOutOfRange {
                key: key.name(),
                value: v,
                lo: r.lo,
                hi: r.hi,
                hi_exclusive: r.hi_exclusive,
            });
        }
        match key {
            OptionKey::CameraAzimuthDeg => self.camera_azimuth_deg = v,
            OptionKey::CameraDepressionDeg => self.camera_depression_deg = v,
            OptionKey::CameraDistanceM => self.camera_distance_m = v,
            OptionKey::LightAzimuthDeg => self.light_azimuth_deg = v,
            OptionKey::LightElevationDeg => self.light_elevation_deg = v,
            OptionKey::LightIntensity => self.light_intensity = v,
            OptionKey::Ambient => self.ambient = v,
            OptionKey::CameraId => self.camera_id = v.round() as u32,
            OptionKey::Gamma => self.gamma = v,
            OptionKey::WorkingHeightPx => self.working_height_px = v.round() as u32,
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        for key in OptionKey::ALL {
            let v = self.scalar(key);
            if !key.range().contains(v) {
                let r = key.range();
                return Err(SceneError::OptionOutOfRange {
                    key: key.name(),
                    value: v,
                    lo: r.lo,
                    hi: r.hi,
                    hi_exclusive: r.hi_exclusive,
                });
            }
        }
        Ok(())
    }

    /// Line-oriented `key=value` form; parseable by [`RenderOptions::from_kv`].
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("pose={}\n", self.pose));
        for key in OptionKey::ALL {
            match key {
                OptionKey::CameraId => out.push_str(&format!("camera_id={}\n", self.camera_id)),
                OptionKey::WorkingHeightPx => {
                    out.push_str(&format!("working_height_px={}\n", self.working_height_px))
                }
                _ => out.push_str(&format!("{}={}\n", key.name(), self.scalar(key))),
            }
        }
        out.push_str(&format!("background_ref={}\n", self.background_ref));
        out
    }

    pub fn from_kv(text: &str) -> Result<RenderOptions, SceneError> {
        let map = parse_kv(text)?;
        let get = |k: &str| -> Result<&String, SceneError> {
            map.get(k).ok_or_else(|| SceneError::KeyValue(format!("missing key `{k}`")))
        };
        let mut opts = RenderOptions {
            pose: get("pose")?.parse()?,
            background_ref: get("background_ref")?.parse()?,
            ..Default::default()
        };
        for key in OptionKey::ALL {
            let raw = get(key.name())?;
            let v = raw
                .parse::<f64>()
                .map_err(|_| SceneError::KeyValue(format!("bad number for `{}`", key.name())))?;
            opts.set_scalar(key, v)?;
        }
        Ok(opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_person_spec_is_deterministic() {
        let a = derive_person_spec(42, 7);
        let b = derive_person_spec(42, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn neighboring_identities_differ() {
        let a = derive_person_spec(42, 7);
        let b = derive_person_spec(42, 8);
        assert_ne!(a, b);
        let max_diff = color_pair_max_diff(&a, &b);
        assert!(max_diff > 0.05, "ids 7/8 too similar: {max_diff}");
    }

    #[test]
    fn different_seeds_differ() {
        assert_ne!(derive_person_spec(42, 7), derive_person_spec(43, 7));
    }

    fn color_pair_max_diff(a: &PersonSpec, b: &PersonSpec) -> f32 {
        let colors = |s: &PersonSpec| {
            [s.skin_rgb, s.hair_rgb, s.torso_rgb, s.legs_rgb, s.shoes_rgb, s.pattern_rgb]
        };
        colors(a)
            .iter()
            .flatten()
            .zip(colors(b).iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f32::max)
    }

    /// Exhaustive distinctness check: >= 99.9% of id pairs must differ in
    /// some color channel by more than 0.05. 142 ids give 10,011 pairs.
    #[test]
    fn identity_colors_are_distinct_over_10k_pairs() {
        let specs: Vec<PersonSpec> = (0..142).map(|id| derive_person_spec(42, id)).collect();
        let mut pairs = 0u32;
        let mut close = 0u32;
        for i in 0..specs.len() {
            for j in (i + 1)..specs.len() {
                pairs += 1;
                if color_pair_max_diff(&specs[i], &specs[j]) <= 0.05 {
                    close += 1;
                }
            }
        }
        assert!(pairs >= 10_000, "need at least 10,000 pairs, got {pairs}");
        let limit = pairs / 1000; // 0.1%
        assert!(close <= limit, "{close} of {pairs} pairs nearly identical");
    }

    #[test]
    fn person_spec_fields_stay_in_range() {
        let mut s = Stream::new(7);
        for _ in 0..1_000 {
            let seed = s.next_u64();
            let id = (s.next_u64() % 10_000) as u32;
            let spec = derive_person_spec(seed, id);
            assert_eq!(spec, derive_person_spec(seed, id));
            assert!((1.45..=1.95).contains(&spec.stature_m));
            assert!((0.85..=1.15).contains(&spec.limb_scale));
            assert!((0.85..=1.2).contains(&spec.bulk_scale));
            for c in [spec.skin_rgb, spec.hair_rgb, spec.torso_rgb, spec.legs_rgb, spec.shoes_rgb, spec.pattern_rgb]
            {
                assert!(c.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            assert!((0.06..=0.25).contains(&spec.pattern_scale));
        }
    }

    #[test]
    fn person_spec_kv_round_trips() {
        let spec = derive_person_spec(123, 45);
        let text = spec.to_kv();
        assert_eq!(PersonSpec::from_kv(&text).unwrap(), spec);
    }

    #[test]
    fn t_pose_is_zero_except_shoulders() {
        let pose = builtin_pose(BuiltinPose::TPose);
        for joint in Joint::ALL {
            let r = pose.rotation(joint);
            match joint {
                Joint::LShoulder => assert_eq!(r, [90.0, 0.0, 0.0]),
                Joint::RShoulder => assert_eq!(r, [-90.0, 0.0, 0.0]),
                _ => assert_eq!(r, [0.0, 0.0, 0.0]),
            }
        }
    }

    #[test]
    fn stand_has_hanging_arms() {
        let pose = builtin_pose(BuiltinPose::Stand);
        for joint in [Joint::LShoulder, Joint::RShoulder] {
            let [z, x, y] = pose.rotation(joint);
            assert!(z.abs() <= 10.0 && x == 0.0 && y == 0.0);
        }
    }

    #[test]
    fn walk_phases_swing_hips_oppositely() {
        let a = builtin_pose(BuiltinPose::Walk0);
        let b = builtin_pose(BuiltinPose::Walk2);
        assert!(a.rotation(Joint::LHip)[1] * b.rotation(Joint::LHip)[1] < 0.0);
        assert!(a.rotation(Joint::RHip)[1] * b.rotation(Joint::RHip)[1] < 0.0);
    }

    #[test]
    fn unknown_pose_name_errors() {
        assert_eq!(builtin_pose_by_name("moonwalk").unwrap_err(), SceneError::UnknownPose);
    }

    #[test]
    fn option_key_field_mapping_is_total_and_injective() {
        let base = RenderOptions::default();
        for key in OptionKey::ALL {
            let mut opts = base.clone();
            let range = key.range();
            let probe = if key.is_integer() {
                (range.lo + 1.0).round()
            } else {
                range.lo + range.span() * 0.37
            };
            opts.set_scalar(key, probe).unwrap();
            assert_eq!(opts.scalar(key), if key.is_integer() { probe.round() } else { probe });
            // Setting `key` must change no other scalar.
            for other in OptionKey::ALL {
                if other != key {
                    assert_eq!(opts.scalar(other), base.scalar(other), "{:?} leaked into {:?}", key, other);
                }
            }
        }
    }

    #[test]
    fn render_options_kv_round_trips() {
        let mut opts = RenderOptions::default();
        opts.pose = PoseRef::BvhFrame { path: "assets/walk_sample.bvh".into(), frame: 3 };
        opts.camera_azimuth_deg = 123.456;
        opts.gamma = 1.75;
        opts.background_ref = BackgroundRef { image_id: "bg_02".into(), x: 10, y: 20, w: 300, h: 400 };
        let text = opts.to_kv();
        assert_eq!(RenderOptions::from_kv(&text).unwrap(), opts);
    }

    #[test]
    fn out_of_range_scalar_is_rejected() {
        let mut opts = RenderOptions::default();
        assert!(opts.set_scalar(OptionKey::Gamma, 3.0).is_err());
        assert!(opts.set_scalar(OptionKey::CameraAzimuthDeg, 360.0).is_err());
        assert!(opts.set_scalar(OptionKey::CameraAzimuthDeg, 359.9999).is_ok());
    }

    #[test]
    fn pose_ref_round_trips() {
        for s in ["builtin:walk_2", "bvh:a/b.bvh:17"] {
            let p: PoseRef = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("builtin:nope".parse::<PoseRef>().is_err());
        assert!("bvh:missing_frame".parse::<PoseRef>().is_err());
    }

    #[test]
    fn pose_rotation_magnitude_is_capped() {
        let mut rotations = [[0.0; 3]; 12];
        rotations[0] = [181.0, 0.0, 0.0];
        assert!(Pose::from_rotations(rotations).is_err());
        rotations[0] = [f64::NAN, 0.0, 0.0];
        assert!(Pose::from_rotations(rotations).is_err());
    }
}

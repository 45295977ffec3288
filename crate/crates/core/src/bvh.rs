//! BVH motion-capture file parsing and pose extraction.
//!
//! Supports the two channel layouts found in CMU-style files:
//! six channels (`Xposition Yposition Zposition Zrotation Xrotation
//! Yrotation`) on the root and three rotation channels elsewhere. Anything
//! else is a parse error rather than a guess.

use crate::scene::{builtin_pose, BuiltinPose, Joint, Pose};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BvhError {
    #[error("line {line}: missing HIERARCHY")]
    MissingHierarchy { line: usize },
    #[error("line {line}: missing MOTION")]
    MissingMotion { line: usize },
    #[error("line {line}: expected {expected}, found `{found}`")]
    Unexpected { line: usize, expected: &'static str, found: String },
    #[error("line {line}: unsupported channel set `{channels}`")]
    UnsupportedChannels { line: usize, channels: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    FrameArity { line: usize, expected: usize, found: usize },
    #[error("line {line}: non-numeric value `{token}`")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("frame index {index} out of range (frame count {count})")]
    FrameOutOfRange { index: usize, count: usize },
    #[error("joint map references absent BVH joint `{name}`")]
    UnknownBvhJoint { name: String },
}

/// Rotation channel order as written in the file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Zrotation,
    Xrotation,
    Yrotation,
}

impl Channel {
    fn parse(s: &str) -> Option<Channel> {
        match s {
            "Xposition" => Some(Channel::Xposition),
            "Yposition" => Some(Channel::Yposition),
            "Zposition" => Some(Channel::Zposition),
            "Zrotation" => Some(Channel::Zrotation),
            "Xrotation" => Some(Channel::Xrotation),
            "Yrotation" => Some(Channel::Yrotation),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Zrotation => "Zrotation",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
        }
    }
}

/// One joint of the skeleton tree.
#[derive(Clone, Debug, PartialEq)]
pub struct BvhJoint {
    pub name: String,
    pub offset: [f64; 3],
    pub channels: Vec<Channel>,
    /// Offset of the `End Site` block, if this joint is a leaf.
    pub end_site: Option<[f64; 3]>,
    pub children: Vec<BvhJoint>,
}

/// A parsed BVH file: skeleton hierarchy plus motion frames.
#[derive(Clone, Debug, PartialEq)]
pub struct BvhDocument {
    pub root: BvhJoint,
    pub frame_time_s: f64,
    /// `frame_count` rows of `channel_count()` values each.
    pub frames: Vec<Vec<f64>>,
}

impl BvhDocument {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn channel_count(&self) -> usize {
        fn count(j: &BvhJoint) -> usize {
            j.channels.len() + j.children.iter().map(count).sum::<usize>()
        }
        count(&self.root)
    }

    /// Joints in hierarchy order with the index of their first channel.
    pub fn joint_channel_offsets(&self) -> Vec<(&BvhJoint, usize)> {
        fn walk<'a>(j: &'a BvhJoint, next: &mut usize, out: &mut Vec<(&'a BvhJoint, usize)>) {
            out.push((j, *next));
            *next += j.channels.len();
            for c in &j.children {
                walk(c, next, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut 0, &mut out);
        out
    }
}

struct Lines<'a> {
    // (1-based line number, tokens)
    items: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Lines<'a> {
        let items = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, toks)| !toks.is_empty())
            .collect();
        Lines { items, pos: 0 }
    }

    fn next(&mut self) -> Option<&(usize, Vec<&'a str>)> {
        let item = self.items.get(self.pos);
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn last_line(&self) -> usize {
        self.items.last().map(|(n, _)| *n).unwrap_or(0)
    }
}

const ROOT_CHANNELS: [Channel; 6] = [
    Channel::Xposition,
    Channel::Yposition,
    Channel::Zposition,
    Channel::Zrotation,
    Channel::Xrotation,
    Channel::Yrotation,
];
const ROT_CHANNELS: [Channel; 3] = [Channel::Zrotation, Channel::Xrotation, Channel::Yrotation];

fn parse_f64(line: usize, token: &str) -> Result<f64, BvhError> {
    let v: f64 = token
        .parse()
        .map_err(|_| BvhError::BadNumber { line, token: token.to_string() })?;
    if !v.is_finite() {
        return Err(BvhError::BadNumber { line, token: token.to_string() });
    }
    Ok(v)
}

/// Parse BVH text into a document. Whitespace-tolerant; never panics on
/// arbitrary input.
pub fn parse_bvh(text: &str) -> Result<BvhDocument, BvhError> {
    let mut lines = Lines::new(text);

    match lines.next() {
        Some((_, toks)) if toks[0] == "HIERARCHY" => {}
        Some((line, toks)) => {
            return Err(BvhError::Unexpected {
                line: *line,
                expected: "HIERARCHY",
                found: toks.join(" "),
            })
        }
        None => return Err(BvhError::MissingHierarchy { line: 1 }),
    }

    let root = match lines.next() {
        Some((line, toks)) if toks[0] == "ROOT" && toks.len() == 2 => {
            let name = toks[1].to_string();
            let line = *line;
            parse_joint_body(&mut lines, name, true, line)?
        }
        Some((line, toks)) => {
            return Err(BvhError::Unexpected {
                line: *line,
                expected: "ROOT <name>",
                found: toks.join(" "),
            })
        }
        None => return Err(BvhError::Malformed { line: lines.last_line(), message: "missing ROOT".into() }),
    };

    match lines.next() {
        Some((_, toks)) if toks[0] == "MOTION" => {}
        Some((line, toks)) => {
            return Err(BvhError::Unexpected {
                line: *line,
                expected: "MOTION",
                found: toks.join(" "),
            })
        }
        None => return Err(BvhError::MissingMotion { line: lines.last_line() }),
    }

    let frame_count = match lines.next() {
        Some((line, toks)) if toks[0] == "Frames:" && toks.len() == 2 => {
            let line = *line;
            let tok = toks[1];
            tok.parse::<usize>()
                .map_err(|_| BvhError::BadNumber { line, token: tok.to_string() })?
        }
        Some((line, toks)) => {
            return Err(BvhError::Unexpected {
                line: *line,
                expected: "Frames: <count>",
                found: toks.join(" "),
            })
        }
        None => return Err(BvhError::Malformed { line: lines.last_line(), message: "missing Frames:".into() }),
    };
    if frame_count == 0 {
        return Err(BvhError::Malformed { line: lines.last_line(), message: "frame count must be >= 1".into() });
    }

    let frame_time_s = match lines.next() {
        Some((line, toks)) if toks.len() >= 3 && toks[0] == "Frame" && toks[1] == "Time:" => {
            parse_f64(*line, toks[2])?
        }
        Some((line, toks)) => {
            return Err(BvhError::Unexpected {
                line: *line,
                expected: "Frame Time: <seconds>",
                found: toks.join(" "),
            })
        }
        None => {
            return Err(BvhError::Malformed { line: lines.last_line(), message: "missing Frame Time:".into() })
        }
    };

    let doc_shell = BvhDocument { root, frame_time_s, frames: Vec::new() };
    let channels = doc_shell.channel_count();
    let mut frames = Vec::with_capacity(frame_count);
    for _ in 0..frame_count {
        match lines.next() {
            Some((line, toks)) => {
                if toks.len() != channels {
                    return Err(BvhError::FrameArity { line: *line, expected: channels, found: toks.len() });
                }
                let line = *line;
                let toks = toks.clone();
                let mut row = Vec::with_capacity(channels);
                for tok in toks {
                    row.push(parse_f64(line, tok)?);
                }
                frames.push(row);
            }
            None => {
                return Err(BvhError::FrameArity { line: lines.last_line(), expected: channels, found: 0 })
            }
        }
    }
    if let Some((line, toks)) = lines.next() {
        return Err(BvhError::Unexpected {
            line: *line,
            expected: "end of file",
            found: toks.join(" "),
        });
    }

    Ok(BvhDocument { frames, ..doc_shell })
}

fn parse_joint_body(
    lines: &mut Lines<'_>,
    name: String,
    is_root: bool,
    decl_line: usize,
) -> Result<BvhJoint, BvhError> {
    match lines.next() {
        Some((_, toks)) if toks[0] == "{" && toks.len() == 1 => {}
        Some((line, toks)) => {
            return Err(BvhError::Unexpected { line: *line, expected: "{", found: toks.join(" ") })
        }
        None => return Err(BvhError::Malformed { line: decl_line, message: format!("unclosed joint `{name}`") }),
    }

    let offset = match lines.next() {
        Some((line, toks)) if toks[0] == "OFFSET" && toks.len() == 4 => {
            let line = *line;
            let toks = toks.clone();
            [
                parse_f64(line, toks[1])?,
                parse_f64(line, toks[2])?,
                parse_f64(line, toks[3])?,
            ]
        }
        Some((line, toks)) => {
            return Err(BvhError::Unexpected {
                line: *line,
                expected: "OFFSET <x> <y> <z>",
                found: toks.join(" "),
            })
        }
        None => return Err(BvhError::Malformed { line: decl_line, message: "missing OFFSET".into() }),
    };

    let channels = match lines.next() {
        Some((line, toks)) if toks[0] == "CHANNELS" => {
            let line = *line;
            let toks = toks.clone();
            let declared: usize = toks
                .get(1)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| BvhError::Malformed { line, message: "bad CHANNELS count".into() })?;
            let names = &toks[2..];
            if names.len() != declared {
                return Err(BvhError::Malformed {
                    line,
                    message: format!("CHANNELS declares {declared} but lists {}", names.len()),
                });
            }
            let mut channels = Vec::with_capacity(declared);
            for n in names {
                channels.push(Channel::parse(n).ok_or_else(|| BvhError::UnsupportedChannels {
                    line,
                    channels: names.join(" "),
                })?);
            }
            let ok = (is_root && channels == ROOT_CHANNELS) || channels == ROT_CHANNELS;
            if !ok {
                return Err(BvhError::UnsupportedChannels { line, channels: names.join(" ") });
            }
            channels
        }
        Some((line, toks)) => {
            return Err(BvhError::Unexpected {
                line: *line,
                expected: "CHANNELS",
                found: toks.join(" "),
            })
        }
        None => return Err(BvhError::Malformed { line: decl_line, message: "missing CHANNELS".into() }),
    };

    let mut children = Vec::new();
    let mut end_site = None;
    loop {
        match lines.next() {
            Some((_, toks)) if toks[0] == "}" && toks.len() == 1 => break,
            Some((line, toks)) if toks[0] == "JOINT" && toks.len() == 2 => {
                let child_name = toks[1].to_string();
                let line = *line;
                children.push(parse_joint_body(lines, child_name, false, line)?);
            }
            Some((line, toks)) if toks[0] == "End" && toks.get(1) == Some(&"Site") => {
                let line = *line;
                match lines.next() {
                    Some((_, toks)) if toks[0] == "{" => {}
                    _ => return Err(BvhError::Malformed { line, message: "End Site missing `{`".into() }),
                }
                end_site = Some(match lines.next() {
                    Some((line, toks)) if toks[0] == "OFFSET" && toks.len() == 4 => {
                        let line = *line;
                        let toks = toks.clone();
                        [
                            parse_f64(line, toks[1])?,
                            parse_f64(line, toks[2])?,
                            parse_f64(line, toks[3])?,
                        ]
                    }
                    Some((line, toks)) => {
                        return Err(BvhError::Unexpected {
                            line: *line,
                            expected: "OFFSET <x> <y> <z>",
                            found: toks.join(" "),
                        })
                    }
                    None => return Err(BvhError::Malformed { line, message: "End Site missing OFFSET".into() }),
                });
                match lines.next() {
                    Some((_, toks)) if toks[0] == "}" => {}
                    _ => return Err(BvhError::Malformed { line, message: "End Site missing `}`".into() }),
                }
            }
            Some((line, toks)) => {
                return Err(BvhError::Unexpected {
                    line: *line,
                    expected: "JOINT, End Site, or }",
                    found: toks.join(" "),
                })
            }
            None => {
                return Err(BvhError::Malformed { line: decl_line, message: format!("unclosed joint `{name}`") })
            }
        }
    }

    Ok(BvhJoint { name, offset, channels, end_site, children })
}

/// Serialize a document back to BVH text. `parse_bvh(to_bvh_text(d)) == d`
/// structurally (float formatting is shortest round-trip).
pub fn to_bvh_text(doc: &BvhDocument) -> String {
    fn write_joint(j: &BvhJoint, is_root: bool, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        let kw = if is_root { "ROOT" } else { "JOINT" };
        out.push_str(&format!("{pad}{kw} {}\n{pad}{{\n", j.name));
        let ipad = "  ".repeat(indent + 1);
        out.push_str(&format!("{ipad}OFFSET {} {} {}\n", j.offset[0], j.offset[1], j.offset[2]));
        let names: Vec<&str> = j.channels.iter().map(|c| c.name()).collect();
        out.push_str(&format!("{ipad}CHANNELS {} {}\n", j.channels.len(), names.join(" ")));
        for c in &j.children {
            write_joint(c, false, indent + 1, out);
        }
        if let Some(end) = j.end_site {
            out.push_str(&format!("{ipad}End Site\n{ipad}{{\n"));
            out.push_str(&format!("{}OFFSET {} {} {}\n", "  ".repeat(indent + 2), end[0], end[1], end[2]));
            out.push_str(&format!("{ipad}}}\n"));
        }
        out.push_str(&format!("{pad}}}\n"));
    }

    let mut out = String::from("HIERARCHY\n");
    write_joint(&doc.root, true, 0, &mut out);
    out.push_str("MOTION\n");
    out.push_str(&format!("Frames: {}\n", doc.frame_count()));
    out.push_str(&format!("Frame Time: {}\n", doc.frame_time_s));
    for row in &doc.frames {
        let toks: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&toks.join(" "));
        out.push('\n');
    }
    out
}

/// Wrap a rotation into (-180, 180].
fn wrap_deg(v: f64) -> f64 {
    let mut v = v % 360.0;
    if v <= -180.0 {
        v += 360.0;
    } else if v > 180.0 {
        v -= 360.0;
    }
    v
}

/// Extract one frame as a humanoid [`Pose`].
///
/// Mapped joints take the frame's rotation channels (converted to the ZXY
/// pose convention and wrapped into (-180, 180]); unmapped humanoid joints
/// keep the `stand` pose values. Root translation channels are ignored.
pub fn pose_from_frame(
    doc: &BvhDocument,
    frame_index: usize,
    joint_map: &BTreeMap<String, Joint>,
) -> Result<Pose, BvhError> {
    if frame_index >= doc.frame_count() {
        return Err(BvhError::FrameOutOfRange { index: frame_index, count: doc.frame_count() });
    }
    let offsets = doc.joint_channel_offsets();
    for name in joint_map.keys() {
        if !offsets.iter().any(|(j, _)| &j.name == name) {
            return Err(BvhError::UnknownBvhJoint { name: name.clone() });
        }
    }

    let row = &doc.frames[frame_index];
    let mut pose = builtin_pose(BuiltinPose::Stand);
    for (joint, first_channel) in &offsets {
        let Some(&target) = joint_map.get(&joint.name) else { continue };
        let mut zxy = [0.0f64; 3];
        for (ci, ch) in joint.channels.iter().enumerate() {
            let v = row[first_channel + ci];
            match ch {
                Channel::Zrotation => zxy[0] = wrap_deg(v),
                Channel::Xrotation => zxy[1] = wrap_deg(v),
                Channel::Yrotation => zxy[2] = wrap_deg(v),
                _ => {} // translation ignored
            }
        }
        pose.set_rotation(target, zxy);
    }
    debug_assert!(pose.validate().is_ok());
    Ok(pose)
}

/// Default mapping from common CMU-style joint names to the humanoid rig.
pub fn default_joint_map() -> BTreeMap<String, Joint> {
    let mut m = BTreeMap::new();
    for (name, joint) in [
        ("Hips", Joint::Pelvis),
        ("Chest", Joint::Spine),
        ("Spine", Joint::Spine),
        ("Neck", Joint::Neck),
        ("Head", Joint::Head),
        ("LeftShoulder", Joint::LShoulder),
        ("LeftArm", Joint::LShoulder),
        ("RightShoulder", Joint::RShoulder),
        ("RightArm", Joint::RShoulder),
        ("LeftForeArm", Joint::LElbow),
        ("LeftElbow", Joint::LElbow),
        ("RightForeArm", Joint::RElbow),
        ("RightElbow", Joint::RElbow),
        ("LeftUpLeg", Joint::LHip),
        ("LeftHip", Joint::LHip),
        ("RightUpLeg", Joint::RHip),
        ("RightHip", Joint::RHip),
        ("LeftLeg", Joint::LKnee),
        ("LeftKnee", Joint::LKnee),
        ("RightLeg", Joint::RKnee),
        ("RightKnee", Joint::RKnee),
    ] {
        m.insert(name.to_string(), joint);
    }
    m
}

/// Restrict [`default_joint_map`] to names present in the document.
pub fn matching_joint_map(doc: &BvhDocument) -> BTreeMap<String, Joint> {
    let names: Vec<String> = doc.joint_channel_offsets().iter().map(|(j, _)| j.name.clone()).collect();
    default_joint_map()
        .into_iter()
        .filter(|(name, _)| names.contains(name))
        .collect()
}

impl fmt::Display for BvhDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BVH: {} channels, {} frames @ {:.4}s",
            self.channel_count(),
            self.frame_count(),
            self.frame_time_s
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-joint sample used across the tests. Hand-parsed expectations:
    /// Hips has 6 channels, Chest 3, so each frame row carries 9 values.
    const SAMPLE: &str = "\
HIERARCHY
ROOT Hips
{
  OFFSET 0.0 1.0 0.0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT Chest
  {
    OFFSET 0.0 0.3 0.0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0.0 0.25 0.0
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.033333
0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0
0.1 0.9 0.2 10.0 -20.0 30.0 5.0 6.0 7.0
";

    #[test]
    fn sample_parses_to_two_frames_nine_channels() {
        let doc = parse_bvh(SAMPLE).unwrap();
        assert_eq!(doc.frame_count(), 2);
        assert_eq!(doc.channel_count(), 9);
        assert_eq!(doc.root.name, "Hips");
        assert_eq!(doc.root.offset, [0.0, 1.0, 0.0]);
        assert_eq!(doc.root.children.len(), 1);
        assert_eq!(doc.root.children[0].name, "Chest");
        assert_eq!(doc.root.children[0].end_site, Some([0.0, 0.25, 0.0]));
        assert_eq!(doc.frames[1][3], 10.0);
        assert!((doc.frame_time_s - 0.033333).abs() < 1e-12);
    }

    #[test]
    fn empty_input_reports_missing_hierarchy() {
        assert_eq!(parse_bvh("").unwrap_err(), BvhError::MissingHierarchy { line: 1 });
        assert_eq!(parse_bvh("   \n\n").unwrap_err(), BvhError::MissingHierarchy { line: 1 });
    }

    #[test]
    fn wrong_frame_arity_names_the_line() {
        let bad = SAMPLE.replace("0.1 0.9 0.2 10.0 -20.0 30.0 5.0 6.0 7.0", "0.1 0.9");
        match parse_bvh(&bad).unwrap_err() {
            BvhError::FrameArity { line, expected, found } => {
                assert_eq!(line, 20);
                assert_eq!(expected, 9);
                assert_eq!(found, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_numeric_value_names_the_line() {
        let bad = SAMPLE.replace("0.1 0.9 0.2 10.0 -20.0 30.0 5.0 6.0 7.0", "0.1 x 0.2 10.0 -20.0 30.0 5.0 6.0 7.0");
        match parse_bvh(&bad).unwrap_err() {
            BvhError::BadNumber { line, token } => {
                assert_eq!(line, 20);
                assert_eq!(token, "x");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unsupported_channel_sets_are_rejected() {
        let bad = SAMPLE.replace(
            "CHANNELS 3 Zrotation Xrotation Yrotation",
            "CHANNELS 3 Xrotation Yrotation Zrotation",
        );
        assert!(matches!(parse_bvh(&bad).unwrap_err(), BvhError::UnsupportedChannels { .. }));
    }

    #[test]
    fn round_trip_is_structurally_equal() {
        let doc = parse_bvh(SAMPLE).unwrap();
        let text = to_bvh_text(&doc);
        let doc2 = parse_bvh(&text).unwrap();
        assert_eq!(doc, doc2);
    }

    #[test]
    fn zero_frame_gives_stand_on_unmapped_and_zero_on_mapped() {
        let doc = parse_bvh(SAMPLE).unwrap();
        let mut map = BTreeMap::new();
        map.insert("Hips".to_string(), Joint::Pelvis);
        let pose = pose_from_frame(&doc, 0, &map).unwrap();
        let stand = builtin_pose(BuiltinPose::Stand);
        assert_eq!(pose.rotation(Joint::Pelvis), [0.0, 0.0, 0.0]);
        for joint in Joint::ALL {
            if joint != Joint::Pelvis {
                assert_eq!(pose.rotation(joint), stand.rotation(joint));
            }
        }
    }

    #[test]
    fn frame_one_maps_hips_rotations_to_pelvis() {
        // Row 1 rotation channels for Hips are Z=10, X=-20, Y=30.
        let doc = parse_bvh(SAMPLE).unwrap();
        let mut map = BTreeMap::new();
        map.insert("Hips".to_string(), Joint::Pelvis);
        let pose = pose_from_frame(&doc, 1, &map).unwrap();
        assert_eq!(pose.rotation(Joint::Pelvis), [10.0, -20.0, 30.0]);
    }

    #[test]
    fn frame_index_bound_is_enforced() {
        let doc = parse_bvh(SAMPLE).unwrap();
        let map = BTreeMap::new();
        assert_eq!(
            pose_from_frame(&doc, 2, &map).unwrap_err(),
            BvhError::FrameOutOfRange { index: 2, count: 2 }
        );
    }

    #[test]
    fn absent_bvh_joint_in_map_is_reported() {
        let doc = parse_bvh(SAMPLE).unwrap();
        let mut map = BTreeMap::new();
        map.insert("Pelvis".to_string(), Joint::Pelvis);
        assert_eq!(
            pose_from_frame(&doc, 0, &map).unwrap_err(),
            BvhError::UnknownBvhJoint { name: "Pelvis".to_string() }
        );
    }

    #[test]
    fn rotations_wrap_into_symmetric_range() {
        let text = SAMPLE.replace("0.1 0.9 0.2 10.0 -20.0 30.0 5.0 6.0 7.0", "0 0 0 270.0 -190.0 360.0 0 0 0");
        let doc = parse_bvh(&text).unwrap();
        let mut map = BTreeMap::new();
        map.insert("Hips".to_string(), Joint::Pelvis);
        let pose = pose_from_frame(&doc, 1, &map).unwrap();
        assert_eq!(pose.rotation(Joint::Pelvis), [-90.0, 170.0, 0.0]);
    }
}

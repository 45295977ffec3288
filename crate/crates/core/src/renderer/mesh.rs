//! Procedural low-poly humanoid assembled from primitives (sphere head,
//! box torso, capsule limbs) and posed by forward kinematics over the
//! 12-joint skeleton.
//!
//! Geometry is constructed to be exactly left/right symmetric in the rest
//! pose: ring tables and grids are sign-symmetric by construction, and the
//! rasterizer relies on that for its mirror-symmetry guarantee.

use crate::math::{grid_coord, ring_table, vec3, Mat3, Transform, Vec3};
use crate::scene::{Joint, PersonSpec, Pose, TorsoPattern};

/// Triangle mesh in world space (meters). Flat per-triangle materials.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub positions: Vec<Vec3>,
    /// Per-vertex unit normals.
    pub normals: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// Linear-RGB material per triangle.
    pub colors: Vec<[f32; 3]>,
}

impl Mesh {
    fn new() -> Mesh {
        Mesh { positions: Vec::new(), normals: Vec::new(), triangles: Vec::new(), colors: Vec::new() }
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Axis-aligned bounds: (min, max).
    pub fn bbox(&self) -> (Vec3, Vec3) {
        let mut lo = vec3(f32::INFINITY, f32::INFINITY, f32::INFINITY);
        let mut hi = vec3(f32::NEG_INFINITY, f32::NEG_INFINITY, f32::NEG_INFINITY);
        for p in &self.positions {
            lo = vec3(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = vec3(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        (lo, hi)
    }

    /// Check the structural invariants; used by tests.
    pub fn validate(&self) -> Result<(), String> {
        if self.triangles.is_empty() {
            return Err("no triangles".into());
        }
        if self.positions.len() != self.normals.len() {
            return Err("positions/normals length mismatch".into());
        }
        if self.triangles.len() != self.colors.len() {
            return Err("triangles/colors length mismatch".into());
        }
        for t in &self.triangles {
            if t.iter().any(|&i| i as usize >= self.positions.len()) {
                return Err("triangle index out of range".into());
            }
        }
        for (i, n) in self.normals.iter().enumerate() {
            if !n.is_finite() || (n.length() - 1.0).abs() > 1e-4 {
                return Err(format!("normal {i} not unit length"));
            }
        }
        if !self.positions.iter().all(|p| p.is_finite()) {
            return Err("non-finite vertex".into());
        }
        Ok(())
    }
}

/// Mesh part under construction, in a local joint frame.
struct Part {
    positions: Vec<Vec3>,
    normals: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    colors: Vec<[f32; 3]>,
}

impl Part {
    fn new() -> Part {
        Part { positions: Vec::new(), normals: Vec::new(), triangles: Vec::new(), colors: Vec::new() }
    }

    fn vertex(&mut self, p: Vec3, n: Vec3) -> u32 {
        self.positions.push(p);
        self.normals.push(n);
        (self.positions.len() - 1) as u32
    }

    fn tri(&mut self, a: u32, b: u32, c: u32, color: [f32; 3]) {
        self.triangles.push([a, b, c]);
        self.colors.push(color);
    }

    /// Split quad (a b d c) into two triangles, alternating the diagonal by
    /// column parity. Mirrored columns then carry slot-exact mirrored
    /// triangles, which the rasterizer's mirror guarantee depends on.
    /// Degenerate triangles (shared corners at ring poles) are dropped.
    fn quad(&mut self, a: u32, b: u32, c: u32, d: u32, col: usize, color: impl Fn(Vec3) -> [f32; 3]) {
        let tris: [[u32; 3]; 2] = if col % 2 == 0 {
            [[a, b, c], [b, d, c]]
        } else {
            [[b, a, d], [a, c, d]]
        };
        for [x, y, z] in tris {
            if x != y && y != z && x != z {
                let centroid = (self.positions[x as usize]
                    + self.positions[y as usize]
                    + self.positions[z as usize])
                    * (1.0 / 3.0);
                self.tri(x, y, z, color(centroid));
            }
        }
    }

    /// Append this part to `mesh`, transformed into world space.
    fn emit(self, mesh: &mut Mesh, world: &Transform) {
        let base = mesh.positions.len() as u32;
        for (p, n) in self.positions.into_iter().zip(self.normals) {
            mesh.positions.push(world.apply(p));
            mesh.normals.push(world.apply_dir(n).normalized());
        }
        for (t, c) in self.triangles.into_iter().zip(self.colors) {
            mesh.triangles.push([t[0] + base, t[1] + base, t[2] + base]);
            mesh.colors.push(c);
        }
    }
}

const RING_SEGS: usize = 12;

/// Capsule from `p0` to `p1` (local frame, axis must lie in the y-z plane
/// so the ring frame stays exactly x-symmetric).
fn capsule(part: &mut Part, p0: Vec3, p1: Vec3, r: f32, color: [f32; 3]) {
    debug_assert!(p0.x == 0.0 && p1.x == 0.0, "capsule axis must lie in the y-z plane");
    let axis = p1 - p0;
    let u = axis.normalized();
    let e1 = vec3(1.0, 0.0, 0.0);
    let e2 = vec3(0.0, u.z, -u.y); // cross(u, e1) for u in the y-z plane
    let ring = ring_table(RING_SEGS);
    let cap_stacks = 3usize;

    // Rings from bottom apex to top apex. Each entry: (center, ring radius,
    // axial normal component).
    let mut levels: Vec<(Vec3, f32, f32)> = Vec::new();
    levels.push((p0 + u * (-r), 0.0, -1.0)); // bottom apex
    for j in (0..cap_stacks).rev() {
        let beta = (j as f64 + 0.5) * (std::f64::consts::FRAC_PI_2) / cap_stacks as f64;
        let (sb, cb) = (beta.sin() as f32, beta.cos() as f32);
        levels.push((p0 + u * (-r * sb), r * cb, -sb));
    }
    levels.push((p0, r, 0.0));
    levels.push((p1, r, 0.0));
    for j in 0..cap_stacks {
        let beta = (j as f64 + 0.5) * (std::f64::consts::FRAC_PI_2) / cap_stacks as f64;
        let (sb, cb) = (beta.sin() as f32, beta.cos() as f32);
        levels.push((p1 + u * (r * sb), r * cb, sb));
    }
    levels.push((p1 + u * r, 0.0, 1.0));

    let mut rows: Vec<Vec<u32>> = Vec::new();
    for &(center, ring_r, axial) in &levels {
        let mut row = Vec::with_capacity(RING_SEGS);
        if ring_r == 0.0 {
            let idx = part.vertex(center, u * axial);
            row = vec![idx; RING_SEGS];
        } else {
            let radial_scale = (1.0 - axial * axial).max(0.0).sqrt();
            for &(c, s) in &ring {
                let dir = e1 * c + e2 * s;
                let pos = center + dir * ring_r;
                let normal = (dir * radial_scale + u * axial).normalized();
                row.push(part.vertex(pos, normal));
            }
        }
        rows.push(row);
    }
    for lv in 0..rows.len() - 1 {
        for k in 0..RING_SEGS {
            let k2 = (k + 1) % RING_SEGS;
            let (a, b) = (rows[lv][k], rows[lv][k2]);
            let (c, d) = (rows[lv + 1][k], rows[lv + 1][k2]);
            part.quad(a, b, c, d, k, |_| color);
        }
    }
}

/// UV sphere; `color(centroid_local) -> rgb` picks per-triangle material.
fn sphere(part: &mut Part, center: Vec3, r: f32, color: impl Fn(Vec3) -> [f32; 3]) {
    let stacks = 8usize;
    let ring = ring_table(RING_SEGS);
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for i in 0..=stacks {
        let polar = i as f64 * std::f64::consts::PI / stacks as f64;
        let (sp, cp) = (polar.sin() as f32, polar.cos() as f32);
        let mut row = Vec::with_capacity(RING_SEGS);
        if i == 0 || i == stacks {
            let n = vec3(0.0, cp.signum(), 0.0);
            let idx = part.vertex(center + vec3(0.0, r * cp, 0.0), n);
            row = vec![idx; RING_SEGS];
        } else {
            for &(c, s) in &ring {
                let n = vec3(sp * c, cp, sp * s).normalized();
                row.push(part.vertex(center + n * r, n));
            }
        }
        rows.push(row);
    }
    for lv in 0..stacks {
        for k in 0..RING_SEGS {
            let k2 = (k + 1) % RING_SEGS;
            let (a, b) = (rows[lv][k], rows[lv][k2]);
            let (c, d) = (rows[lv + 1][k], rows[lv + 1][k2]);
            part.quad(a, b, c, d, k, |centroid| color(centroid - center));
        }
    }
}

/// Axis-aligned box with subdivided faces (flat normals).
/// `color(centroid_local) -> rgb` picks per-triangle material.
fn boxed(
    part: &mut Part,
    center: Vec3,
    half: Vec3,
    subdiv: [usize; 3],
    color: impl Fn(Vec3) -> [f32; 3],
) {
    let [nx, ny, nz] = subdiv;
    // (normal, grid u axis, grid v axis, u subdiv, v subdiv)
    let faces: [(Vec3, Vec3, Vec3, usize, usize); 6] = [
        (vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0), vec3(0.0, 0.0, 1.0), ny, nz),
        (vec3(-1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0), vec3(0.0, 0.0, 1.0), ny, nz),
        (vec3(0.0, 1.0, 0.0), vec3(1.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0), nx, nz),
        (vec3(0.0, -1.0, 0.0), vec3(1.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0), nx, nz),
        (vec3(0.0, 0.0, 1.0), vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0), nx, ny),
        (vec3(0.0, 0.0, -1.0), vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0), nx, ny),
    ];
    for (n, ua, va, nu, nv) in faces {
        let scale = |axis: Vec3| vec3(axis.x * half.x, axis.y * half.y, axis.z * half.z);
        let origin = center + scale(n);
        let mut grid = vec![vec![0u32; nv + 1]; nu + 1];
        for (i, grow) in grid.iter_mut().enumerate() {
            for (j, cell) in grow.iter_mut().enumerate() {
                let p = origin + scale(ua) * grid_coord(i, nu) + scale(va) * grid_coord(j, nv);
                *cell = part.vertex(p, n);
            }
        }
        for i in 0..nu {
            for j in 0..nv {
                let (a, b, c, d) = (grid[i][j], grid[i + 1][j], grid[i][j + 1], grid[i + 1][j + 1]);
                part.quad(a, b, c, d, i, |centroid| color(centroid - center));
            }
        }
    }
}

/// World transforms of all 12 joints for a spec and pose.
struct Rig {
    world: [Transform; 12],
    dims: RigDims,
}

struct RigDims {
    stature: f32,
    foot_h: f32,
    lower_leg: f32,
    upper_leg: f32,
    head_r: f32,
    neck_len: f32,
    spine_rise: f32,
    torso_len: f32,
    shoulder_half: f32,
    hip_half: f32,
    upper_arm: f32,
    lower_arm: f32,
    arm_r: f32,
    leg_r: f32,
    torso_half_x: f32,
    torso_half_z: f32,
}

fn rig_dims(spec: &PersonSpec) -> RigDims {
    let s = spec.stature_m as f32;
    let ls = spec.limb_scale as f32;
    let bs = spec.bulk_scale as f32;
    let foot_h = 0.04 * s;
    let lower_leg = 0.22 * s * ls;
    let upper_leg = 0.26 * s * ls;
    let head_r = 0.066 * s;
    let neck_len = 0.03 * s;
    let spine_rise = 0.02 * s;
    let pelvis_y = foot_h + lower_leg + upper_leg;
    let neck_base_y = s - 2.0 * head_r - neck_len;
    RigDims {
        stature: s,
        foot_h,
        lower_leg,
        upper_leg,
        head_r,
        neck_len,
        spine_rise,
        torso_len: neck_base_y - (pelvis_y + spine_rise),
        shoulder_half: 0.11 * s * bs,
        hip_half: 0.055 * s * bs,
        upper_arm: 0.16 * s * ls,
        lower_arm: 0.15 * s * ls,
        arm_r: 0.028 * s * bs,
        leg_r: 0.045 * s * bs,
        torso_half_x: 0.085 * s * bs,
        torso_half_z: 0.05 * s * bs,
    }
}

fn rig(spec: &PersonSpec, pose: &Pose) -> Rig {
    let d = rig_dims(spec);
    let pelvis_y = d.foot_h + d.lower_leg + d.upper_leg;

    let local = |joint: Joint, offset: Vec3| -> Transform {
        let [z, x, y] = pose.rotation(joint);
        Transform { rot: Mat3::euler_zxy(z, x, y), pos: offset }
    };

    let mut world = [Transform::IDENTITY; 12];
    let pelvis = local(Joint::Pelvis, vec3(0.0, pelvis_y, 0.0));
    world[Joint::Pelvis.index()] = pelvis;
    let spine = pelvis.then(&local(Joint::Spine, vec3(0.0, d.spine_rise, 0.0)));
    world[Joint::Spine.index()] = spine;
    let neck = spine.then(&local(Joint::Neck, vec3(0.0, d.torso_len, 0.0)));
    world[Joint::Neck.index()] = neck;
    world[Joint::Head.index()] = neck.then(&local(Joint::Head, vec3(0.0, d.neck_len, 0.0)));

    let shoulder_y = d.torso_len - 0.02 * d.stature;
    let l_shoulder = spine.then(&local(Joint::LShoulder, vec3(d.shoulder_half, shoulder_y, 0.0)));
    let r_shoulder = spine.then(&local(Joint::RShoulder, vec3(-d.shoulder_half, shoulder_y, 0.0)));
    world[Joint::LShoulder.index()] = l_shoulder;
    world[Joint::RShoulder.index()] = r_shoulder;
    world[Joint::LElbow.index()] = l_shoulder.then(&local(Joint::LElbow, vec3(0.0, -d.upper_arm, 0.0)));
    world[Joint::RElbow.index()] = r_shoulder.then(&local(Joint::RElbow, vec3(0.0, -d.upper_arm, 0.0)));

    let l_hip = pelvis.then(&local(Joint::LHip, vec3(d.hip_half, 0.0, 0.0)));
    let r_hip = pelvis.then(&local(Joint::RHip, vec3(-d.hip_half, 0.0, 0.0)));
    world[Joint::LHip.index()] = l_hip;
    world[Joint::RHip.index()] = r_hip;
    world[Joint::LKnee.index()] = l_hip.then(&local(Joint::LKnee, vec3(0.0, -d.upper_leg, 0.0)));
    world[Joint::RKnee.index()] = r_hip.then(&local(Joint::RKnee, vec3(0.0, -d.upper_leg, 0.0)));

    Rig { world, dims: d }
}

/// Build the posed humanoid mesh for one person. Pure and deterministic.
pub fn build_mesh(spec: &PersonSpec, pose: &Pose) -> Mesh {
    let rig = rig(spec, pose);
    let d = &rig.dims;
    let mut mesh = Mesh::new();
    let at = |j: Joint| &rig.world[j.index()];

    let skin = spec.skin_rgb;
    let hair = spec.hair_rgb;
    let torso_rgb = spec.torso_rgb;
    let legs = spec.legs_rgb;
    let shoes = spec.shoes_rgb;

    // Head: sphere, top cap in hair color.
    {
        let mut part = Part::new();
        let hair_cut = d.head_r * 0.30;
        sphere(&mut part, vec3(0.0, d.head_r, 0.0), d.head_r, |local| {
            if local.y > hair_cut {
                hair
            } else {
                skin
            }
        });
        part.emit(&mut mesh, at(Joint::Head));
    }

    // Neck.
    {
        let mut part = Part::new();
        capsule(&mut part, vec3(0.0, -0.005 * d.stature, 0.0), vec3(0.0, d.neck_len, 0.0), 0.020 * d.stature, skin);
        part.emit(&mut mesh, at(Joint::Neck));
    }

    // Torso box with the garment pattern.
    {
        let mut part = Part::new();
        let y_min = -d.spine_rise;
        let half_y = (d.torso_len + d.spine_rise) * 0.5;
        let center_y = y_min + half_y;
        let pattern = spec.torso_pattern;
        let pattern_rgb = spec.pattern_rgb;
        let scale = spec.pattern_scale as f32;
        boxed(
            &mut part,
            vec3(0.0, center_y, 0.0),
            vec3(d.torso_half_x, half_y, d.torso_half_z),
            [4, 6, 2],
            |local| {
                let from_bottom = local.y + half_y;
                let on = match pattern {
                    TorsoPattern::Solid => false,
                    TorsoPattern::Stripes => (from_bottom / scale).floor() as i64 % 2 == 1,
                    TorsoPattern::Checker => {
                        let cell = scale * 0.6;
                        let ix = (local.x.abs() / cell).floor() as i64;
                        let iy = (from_bottom / cell).floor() as i64;
                        (ix + iy) % 2 == 1
                    }
                };
                if on {
                    pattern_rgb
                } else {
                    torso_rgb
                }
            },
        );
        part.emit(&mut mesh, at(Joint::Spine));
    }

    // Pelvis block.
    {
        let mut part = Part::new();
        boxed(
            &mut part,
            vec3(0.0, -0.015 * d.stature, 0.0),
            vec3(d.hip_half + d.leg_r * 0.9, 0.045 * d.stature, d.torso_half_z),
            [2, 2, 1],
            |_| legs,
        );
        part.emit(&mut mesh, at(Joint::Pelvis));
    }

    // Arms: sleeve-colored upper arm, skin forearm.
    for (shoulder, elbow) in [(Joint::LShoulder, Joint::LElbow), (Joint::RShoulder, Joint::RElbow)] {
        let mut part = Part::new();
        capsule(&mut part, Vec3::ZERO, vec3(0.0, -d.upper_arm, 0.0), d.arm_r, torso_rgb);
        part.emit(&mut mesh, at(shoulder));
        let mut part = Part::new();
        capsule(&mut part, Vec3::ZERO, vec3(0.0, -d.lower_arm, 0.0), d.arm_r * 0.9, skin);
        part.emit(&mut mesh, at(elbow));
    }

    // Legs and shoes.
    for (hip, knee) in [(Joint::LHip, Joint::LKnee), (Joint::RHip, Joint::RKnee)] {
        let mut part = Part::new();
        capsule(&mut part, Vec3::ZERO, vec3(0.0, -d.upper_leg, 0.0), d.leg_r, legs);
        part.emit(&mut mesh, at(hip));
        let mut part = Part::new();
        // End the shank so its cap apex sits at the ankle, above the shoe.
        let shank_r = d.leg_r * 0.85;
        capsule(&mut part, Vec3::ZERO, vec3(0.0, -(d.lower_leg - shank_r), 0.0), shank_r, legs);
        // Shoe: bottom tangent to y=0 in the rest pose.
        let shoe_r = d.foot_h * 0.55;
        let p0 = vec3(0.0, -d.lower_leg - d.foot_h + shoe_r, 0.0);
        let p1 = p0 + vec3(0.0, 0.0, 0.075 * d.stature);
        capsule(&mut part, p0, p1, shoe_r, shoes);
        part.emit(&mut mesh, at(knee));
    }

    debug_assert!(mesh.validate().is_ok());
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{builtin_pose, derive_person_spec, BuiltinPose};

    #[test]
    fn mesh_passes_structural_validation() {
        let spec = derive_person_spec(42, 1);
        for pose in BuiltinPose::ALL {
            let mesh = build_mesh(&spec, &builtin_pose(pose));
            mesh.validate().unwrap();
            assert!(mesh.triangle_count() > 500);
        }
    }

    #[test]
    fn stand_bbox_height_matches_stature() {
        for id in 0..20 {
            let spec = derive_person_spec(42, id);
            let mesh = build_mesh(&spec, &builtin_pose(BuiltinPose::Stand));
            let (lo, hi) = mesh.bbox();
            let height = (hi.y - lo.y) as f64;
            assert!(
                (height - spec.stature_m).abs() <= 0.02 * spec.stature_m,
                "id {id}: height {height} vs stature {}",
                spec.stature_m
            );
            // Feet rest on the ground plane.
            assert!(lo.y.abs() < 0.01 * spec.stature_m as f32, "feet at {}", lo.y);
        }
    }

    #[test]
    fn build_mesh_is_deterministic() {
        let spec = derive_person_spec(7, 3);
        let pose = builtin_pose(BuiltinPose::Walk1);
        assert_eq!(build_mesh(&spec, &pose), build_mesh(&spec, &pose));
    }

    /// Widths measured once on the two fixtures and frozen here.
    #[test]
    fn t_pose_is_wider_than_stand_along_arm_axis() {
        let spec = derive_person_spec(42, 1);
        let stand = build_mesh(&spec, &builtin_pose(BuiltinPose::Stand));
        let tpose = build_mesh(&spec, &builtin_pose(BuiltinPose::TPose));
        let width = |m: &Mesh| {
            let (lo, hi) = m.bbox();
            hi.x - lo.x
        };
        let (w_stand, w_tpose) = (width(&stand), width(&tpose));
        assert!(w_tpose > w_stand * 1.5, "t-pose {w_tpose} vs stand {w_stand}");
        // Frozen from a reference run (stature 1.9337 m, bulk 1.0174).
        assert!((w_stand - 0.6804).abs() < 5e-3, "stand width {w_stand}");
        assert!((w_tpose - 1.6042).abs() < 5e-3, "t-pose width {w_tpose}");
    }

    #[test]
    fn rest_geometry_is_exactly_mirror_symmetric() {
        let spec = derive_person_spec(42, 1);
        let mut pose = builtin_pose(BuiltinPose::Stand);
        // Mirror-consistent pose: negate Z and Y rotations, swap sides.
        for (l, r) in [
            (Joint::LShoulder, Joint::RShoulder),
            (Joint::LElbow, Joint::RElbow),
            (Joint::LHip, Joint::RHip),
            (Joint::LKnee, Joint::RKnee),
        ] {
            let [z, x, y] = pose.rotation(l);
            pose.set_rotation(r, [-z, x, -y]);
        }
        let mesh = build_mesh(&spec, &pose);
        // Every vertex must have an exact mirror partner.
        let mut mirrored: Vec<(u32, u32, u32)> = mesh
            .positions
            .iter()
            .map(|p| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits()))
            .collect();
        let mut originals: Vec<(u32, u32, u32)> = mesh
            .positions
            .iter()
            .map(|p| ((-p.x).to_bits(), p.y.to_bits(), p.z.to_bits()))
            .collect();
        mirrored.sort_unstable();
        originals.sort_unstable();
        // -0.0 and 0.0 differ in bits; normalize x bits of zero.
        let canon = |v: &mut Vec<(u32, u32, u32)>| {
            for t in v.iter_mut() {
                if t.0 == (-0.0f32).to_bits() {
                    t.0 = 0;
                }
            }
            v.sort_unstable();
        };
        canon(&mut mirrored);
        canon(&mut originals);
        assert_eq!(mirrored, originals);
    }
}

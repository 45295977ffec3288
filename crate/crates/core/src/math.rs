//! Minimal 3D vector/matrix math for the mesh builder and rasterizer.
//!
//! Hand-rolled on purpose: the renderer guarantees bit-exact left/right
//! mirror symmetry, which requires full control over operation order and
//! sign handling (IEEE negation is exact; generic linear-algebra crates
//! make no such promise about their internals).

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3 {
    pub x: f32,
    pub y: f32,
    pub z: f32,
}

pub const fn vec3(x: f32, y: f32, z: f32) -> Vec3 {
    Vec3 { x, y, z }
}

impl Vec3 {
    pub const ZERO: Vec3 = vec3(0.0, 0.0, 0.0);

    #[inline]
    pub fn dot(self, o: Vec3) -> f32 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn length(self) -> f32 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn normalized(self) -> Vec3 {
        let len = self.length();
        vec3(self.x / len, self.y / len, self.z / len)
    }

    /// Mirror across the x = 0 plane. Exact.
    #[inline]
    pub fn mirror_x(self) -> Vec3 {
        vec3(-self.x, self.y, self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        vec3(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        vec3(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f32> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f32) -> Vec3 {
        vec3(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        vec3(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub rows: [[f32; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let r = &self.rows;
        vec3(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0f32; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.rows[i][0] * o.rows[0][j]
                    + self.rows[i][1] * o.rows[1][j]
                    + self.rows[i][2] * o.rows[2][j];
            }
        }
        Mat3 { rows: out }
    }

    pub fn rot_x(deg: f64) -> Mat3 {
        let (s, c) = sincos_deg(deg);
        Mat3 {
            rows: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        }
    }

    pub fn rot_y(deg: f64) -> Mat3 {
        let (s, c) = sincos_deg(deg);
        Mat3 {
            rows: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        }
    }

    pub fn rot_z(deg: f64) -> Mat3 {
        let (s, c) = sincos_deg(deg);
        Mat3 {
            rows: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Intrinsic Z, then X, then Y rotation: `Rz * Rx * Ry`.
    pub fn euler_zxy(z_deg: f64, x_deg: f64, y_deg: f64) -> Mat3 {
        Mat3::rot_z(z_deg).mul(&Mat3::rot_x(x_deg)).mul(&Mat3::rot_y(y_deg))
    }
}

/// Degrees to (sin, cos) in f32, computed through f64 trig.
///
/// libm sine is odd-exact, so `sincos_deg(-a).0 == -sincos_deg(a).0`
/// bit for bit; the mirror-symmetry guarantee of the renderer rests on it.
#[inline]
pub fn sincos_deg(deg: f64) -> (f32, f32) {
    let rad = deg * (std::f64::consts::PI / 180.0);
    (rad.sin() as f32, rad.cos() as f32)
}

/// Rigid transform: rotate, then translate.
#[derive(Clone, Copy, Debug)]
pub struct Transform {
    pub rot: Mat3,
    pub pos: Vec3,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        rot: Mat3::IDENTITY,
        pos: Vec3::ZERO,
    };

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.rot.apply(v) + self.pos
    }

    #[inline]
    pub fn apply_dir(&self, v: Vec3) -> Vec3 {
        self.rot.apply(v)
    }

    /// `self` then `child` (child expressed in self's frame).
    pub fn then(&self, child: &Transform) -> Transform {
        Transform {
            rot: self.rot.mul(&child.rot),
            pos: self.rot.apply(child.pos) + self.pos,
        }
    }
}

/// (cos, sin) pairs for `n` equally spaced ring angles, constructed so the
/// table is exactly symmetric under x-negation (angle -> pi - angle) and
/// z-negation (angle -> -angle). `n` must be a multiple of 4.
pub fn ring_table(n: usize) -> Vec<(f32, f32)> {
    assert!(n >= 4 && n % 4 == 0, "ring segments must be a multiple of 4");
    let mut table = vec![(0.0f32, 0.0f32); n];
    table[0] = (1.0, 0.0);
    table[n / 4] = (0.0, 1.0);
    table[n / 2] = (-1.0, 0.0);
    table[3 * n / 4] = (0.0, -1.0);
    for k in 1..n / 4 {
        let a = k as f64 * (2.0 * std::f64::consts::PI) / n as f64;
        let (s, c) = (a.sin() as f32, a.cos() as f32);
        table[k] = (c, s);
        table[n / 2 - k] = (-c, s);
        table[n / 2 + k] = (-c, -s);
        table[n - k] = (c, -s);
    }
    table
}

/// Symmetric grid coordinate: i/n mapped to [-1, 1] with exact negation
/// symmetry between i and n-i.
#[inline]
pub fn grid_coord(i: usize, n: usize) -> f32 {
    (2 * i as i64 - n as i64) as f32 / n as f32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_is_odd_exact() {
        for deg in [5.0, 17.3, 30.0, 45.0, 88.8, 90.0, 135.0, 179.0] {
            let (sp, cp) = sincos_deg(deg);
            let (sn, cn) = sincos_deg(-deg);
            assert_eq!(sn.to_bits(), (-sp).to_bits(), "sin not odd at {deg}");
            assert_eq!(cn.to_bits(), cp.to_bits(), "cos not even at {deg}");
        }
    }

    #[test]
    fn ring_table_is_mirror_symmetric() {
        let n = 12;
        let t = ring_table(n);
        for k in 0..n {
            let (c, s) = t[k];
            // x-mirror partner: angle -> pi - angle. Compare as values so
            // -0.0 == 0.0; value equality is what the renderer relies on.
            let (cm, sm) = t[(n / 2 + n - k) % n];
            assert!(cm == -c && sm == s, "k={k}: ({c},{s}) vs ({cm},{sm})");
        }
    }

    #[test]
    fn grid_coord_is_negation_symmetric() {
        for n in [2usize, 4, 6, 8] {
            for i in 0..=n {
                assert!(grid_coord(i, n) == -grid_coord(n - i, n));
            }
        }
    }

    #[test]
    fn euler_zxy_matches_manual_composition() {
        let m = Mat3::euler_zxy(30.0, 40.0, 50.0);
        let manual = Mat3::rot_z(30.0).mul(&Mat3::rot_x(40.0)).mul(&Mat3::rot_y(50.0));
        assert_eq!(m, manual);
    }

    #[test]
    fn transform_composition_applies_child_in_parent_frame() {
        let parent = Transform {
            rot: Mat3::rot_y(90.0),
            pos: vec3(1.0, 0.0, 0.0),
        };
        let child = Transform {
            rot: Mat3::IDENTITY,
            pos: vec3(0.0, 0.0, 1.0),
        };
        let world = parent.then(&child);
        let p = world.apply(Vec3::ZERO);
        // Child offset (0,0,1) rotated by +90 deg about y lands on +x.
        assert!((p.x - 2.0).abs() < 1e-6);
        assert!(p.y.abs() < 1e-6);
        assert!(p.z.abs() < 1e-6);
    }
}

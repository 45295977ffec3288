//! Perspective camera and z-buffered triangle rasterization.
//!
//! Screen coordinates are kept centered on the canvas midpoint throughout.
//! Centered coordinates make x-negation exact in IEEE arithmetic, which is
//! what gives the mirror-symmetry guarantee: azimuths phi and -phi produce
//! pixel-exact mirrored images under a zenith light.

use super::{ImageBuffer, Mesh, RenderError};
use crate::math::{sincos_deg, vec3};
use crate::scene::RenderOptions;

/// Vertical field of view, fixed; distance alone controls apparent size.
const FOV_Y_DEG: f64 = 45.0;
/// Triangles with any vertex closer than this are dropped.
const NEAR_M: f32 = 0.05;

#[inline]
fn edge(ax: f32, ay: f32, bx: f32, by: f32, px: f32, py: f32) -> f32 {
    (px - ax) * (by - ay) - (py - ay) * (bx - ax)
}

/// Render the mesh under the camera/light in `opts` onto a transparent
/// canvas. Alpha is 1 on person pixels, 0 elsewhere.
///
/// The camera sits at `anchor + d * (cos th sin ph, sin th, cos th cos ph)`
/// with the anchor at the mesh's mid-height point, and looks at the anchor
/// roll-free. Returns an error if nothing lands inside the frustum.
pub fn render(
    mesh: &Mesh,
    opts: &RenderOptions,
    canvas_w: u32,
    canvas_h: u32,
) -> Result<ImageBuffer, RenderError> {
    if canvas_w < 16 || canvas_h < 16 {
        return Err(RenderError::CanvasTooSmall { w: canvas_w, h: canvas_h });
    }
    if mesh.triangles.is_empty() {
        return Err(RenderError::EmptyMesh);
    }

    let (lo, hi) = mesh.bbox();
    let anchor = vec3((lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5, (lo.z + hi.z) * 0.5);

    let (sin_th, cos_th) = sincos_deg(opts.camera_depression_deg);
    let (sin_ph, cos_ph) = sincos_deg(opts.camera_azimuth_deg);
    let dist = opts.camera_distance_m as f32;
    // Unit by construction; doubles as the camera backward axis.
    let back = vec3(cos_th * sin_ph, sin_th, cos_th * cos_ph);
    let eye = anchor + back * dist;
    let right = vec3(0.0, 1.0, 0.0).cross(back).normalized();
    let upv = back.cross(right);

    let (sin_le, cos_le) = sincos_deg(opts.light_elevation_deg);
    let (sin_la, cos_la) = sincos_deg(opts.light_azimuth_deg);
    let light = vec3(cos_le * sin_la, sin_le, cos_le * cos_la);
    let ambient = opts.ambient as f32;
    let intensity = opts.light_intensity as f32;

    let focal = (1.0 / (FOV_Y_DEG / 2.0).to_radians().tan()) as f32;
    let scale = focal * canvas_h as f32 * 0.5;
    let half_w = canvas_w as f32 * 0.5;
    let half_h = canvas_h as f32 * 0.5;

    // Project every vertex once: centered screen x/y and inverse depth.
    let mut screen = Vec::with_capacity(mesh.positions.len());
    for v in &mesh.positions {
        let rel = *v - eye;
        let depth = -rel.dot(back);
        if depth <= NEAR_M {
            screen.push(None);
            continue;
        }
        let sx = rel.dot(right) / depth * scale;
        let sy = -(rel.dot(upv) / depth) * scale;
        screen.push(Some((sx, sy, 1.0 / depth)));
    }

    let mut img = ImageBuffer::new(canvas_w, canvas_h);
    let mut zbuf = vec![f32::NEG_INFINITY; (canvas_w * canvas_h) as usize];
    let mut covered = 0u64;

    for (tri, color) in mesh.triangles.iter().zip(&mesh.colors) {
        let (Some(s0), Some(s1), Some(s2)) = (
            screen[tri[0] as usize],
            screen[tri[1] as usize],
            screen[tri[2] as usize],
        ) else {
            continue;
        };
        let area2 = edge(s0.0, s0.1, s1.0, s1.1, s2.0, s2.1);
        if area2.abs() < 1e-12 {
            continue;
        }

        let min_sx = s0.0.min(s1.0).min(s2.0);
        let max_sx = s0.0.max(s1.0).max(s2.0);
        let min_sy = s0.1.min(s1.1).min(s2.1);
        let max_sy = s0.1.max(s1.1).max(s2.1);
        let x0 = ((min_sx + half_w - 0.5).floor() as i64 - 1).max(0) as u32;
        let x1 = ((max_sx + half_w - 0.5).ceil() as i64 + 1).min(canvas_w as i64 - 1);
        let y0 = ((min_sy + half_h - 0.5).floor() as i64 - 1).max(0) as u32;
        let y1 = ((max_sy + half_h - 0.5).ceil() as i64 + 1).min(canvas_h as i64 - 1);
        if x1 < 0 || y1 < 0 || x0 as i64 > x1 || y0 as i64 > y1 {
            continue;
        }
        let (x1, y1) = (x1 as u32, y1 as u32);

        let n0 = mesh.normals[tri[0] as usize];
        let n1 = mesh.normals[tri[1] as usize];
        let n2 = mesh.normals[tri[2] as usize];

        for py_i in y0..=y1 {
            let py = (py_i as f32 + 0.5) - half_h;
            for px_i in x0..=x1 {
                let px = (px_i as f32 + 0.5) - half_w;
                let e0 = edge(s1.0, s1.1, s2.0, s2.1, px, py);
                let e1 = edge(s2.0, s2.1, s0.0, s0.1, px, py);
                let e2 = edge(s0.0, s0.1, s1.0, s1.1, px, py);
                let inside = (e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0)
                    || (e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0);
                if !inside {
                    continue;
                }
                let l0 = e0 / area2;
                let l1 = e1 / area2;
                let l2 = e2 / area2;
                let inv_d = l0 * s0.2 + l1 * s1.2 + l2 * s2.2;
                let zi = (py_i * canvas_w + px_i) as usize;
                if inv_d <= zbuf[zi] {
                    continue;
                }
                zbuf[zi] = inv_d;
                // Perspective-correct normal blend; normalization absorbs
                // the weight sum.
                let w0 = l0 * s0.2;
                let w1 = l1 * s1.2;
                let w2 = l2 * s2.2;
                let n = (n0 * w0 + n1 * w1 + n2 * w2).normalized();
                let lambert = n.dot(light).max(0.0);
                let shade = (ambient + intensity * lambert).clamp(0.0, 1.0);
                let prev = img.get(px_i, py_i);
                if prev[3] == 0.0 {
                    covered += 1;
                }
                img.set(px_i, py_i, [color[0] * shade, color[1] * shade, color[2] * shade, 1.0]);
            }
        }
    }

    if covered == 0 {
        return Err(RenderError::SubjectOutOfFrame);
    }
    Ok(img)
}

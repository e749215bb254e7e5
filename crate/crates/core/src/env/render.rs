//! Orthographic top-down rasterizer. Height is encoded as size: the gripper
//! disc grows with altitude and a lifted object grows slightly.

use crate::env::{EnvConfig, Observation, WorldState};
use crate::tensor::Tensor;

pub const BACKGROUND: [f32; 3] = [0.30, 0.32, 0.36];
pub const TRAY: [f32; 3] = [0.55, 0.45, 0.32];
pub const OBJECT: [f32; 3] = [0.85, 0.20, 0.20];
pub const GRIPPER: [f32; 3] = [0.20, 0.90, 0.35];
const GRIPPER_ALPHA: f32 = 0.6;
const OBJECT_HALF_EXTENTS: [f64; 2] = [0.07, 0.035];
const GRIPPER_MIN_RADIUS: f64 = 0.05;
const GRIPPER_RADIUS_SPAN: f64 = 0.10;

/// Renders `state` into a `[3, H, W]` image with values in `[0, 1]`.
pub fn render(state: &WorldState, config: &EnvConfig) -> Observation {
    let n = config.image_size;
    let (lo, hi) = (config.workspace_min, config.workspace_max);
    let height_frac = |z: f64| ((z - lo[2]) / (hi[2] - lo[2])).clamp(0.0, 1.0);

    let object_scale = 1.0 + 0.5 * height_frac(state.object[2]);
    let (sin, cos) = state.orientation.sin_cos();
    let gripper_radius = GRIPPER_MIN_RADIUS + GRIPPER_RADIUS_SPAN * height_frac(state.gripper[2]);

    let mut data = vec![0.0f32; 3 * n * n];
    for row in 0..n {
        let y = lo[1] + (row as f64 + 0.5) / n as f64 * (hi[1] - lo[1]);
        for col in 0..n {
            let x = lo[0] + (col as f64 + 0.5) / n as f64 * (hi[0] - lo[0]);
            let in_tray = x >= config.tray_min[0]
                && x <= config.tray_max[0]
                && y >= config.tray_min[1]
                && y <= config.tray_max[1];
            let mut color = if in_tray { TRAY } else { BACKGROUND };

            // object frame
            let (dx, dy) = (x - state.object[0], y - state.object[1]);
            let u = cos * dx + sin * dy;
            let v = -sin * dx + cos * dy;
            if u.abs() <= OBJECT_HALF_EXTENTS[0] * object_scale
                && v.abs() <= OBJECT_HALF_EXTENTS[1] * object_scale
            {
                color = OBJECT;
            }

            let (gx, gy) = (x - state.gripper[0], y - state.gripper[1]);
            if gx * gx + gy * gy <= gripper_radius * gripper_radius {
                for c in 0..3 {
                    color[c] = GRIPPER_ALPHA * GRIPPER[c] + (1.0 - GRIPPER_ALPHA) * color[c];
                }
            }

            for c in 0..3 {
                data[(c * n + row) * n + col] = color[c];
            }
        }
    }
    Tensor::new(vec![3, n, n], data).expect("render dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{reset, EnvConfig};

    #[test]
    fn deterministic() {
        let cfg = EnvConfig::default();
        let (s, _) = reset(&cfg, 0).unwrap();
        assert_eq!(render(&s, &cfg).data(), render(&s, &cfg).data());
    }

    #[test]
    fn one_pixel_shift_changes_image() {
        let cfg = EnvConfig::default();
        let (mut s, _) = reset(&cfg, 0).unwrap();
        s.gripper = [0.1, 0.1, 0.5];
        let before = render(&s, &cfg);
        let pixel = (cfg.workspace_max[0] - cfg.workspace_min[0]) / cfg.image_size as f64;
        for axis in 0..2 {
            let mut moved = s.clone();
            moved.object[axis] += pixel;
            let after = render(&moved, &cfg);
            let differing = before.data().iter().zip(after.data()).filter(|(a, b)| a != b).count();
            assert!(differing >= 1, "axis {axis}");
        }
    }

    #[test]
    fn corner_is_background() {
        let cfg = EnvConfig::default();
        let (s, obs) = reset(&cfg, 0).unwrap();
        assert_eq!(s.steps, 0);
        let n = cfg.image_size;
        for c in 0..3 {
            assert_eq!(obs.data()[c * n * n], BACKGROUND[c]);
        }
        assert!(obs.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn gripper_disc_grows_with_height() {
        let cfg = EnvConfig::default();
        let (mut s, _) = reset(&cfg, 0).unwrap();
        s.gripper = [0.15, 0.15, 0.0];
        let count = |s: &WorldState| {
            let img = render(s, &cfg);
            let n = cfg.image_size;
            (0..n * n).filter(|&i| img.data()[n * n + i] > 0.6).count()
        };
        let low = count(&s);
        s.gripper[2] = 0.5;
        assert!(count(&s) > low);
    }
}

//! Roadside camera localization: pixel → angular coordinates → flat-ground
//! world position, plus the forward projection used for synthesis.
//!
//! Angles are degrees at the interface and radians internally. Pixel origin
//! is the top-left corner with `u` to the right and `v` downward, so `u = 0`
//! maps to `+fov_h/2` (left of the optical axis) and `v = 0` to `+fov_v/2`.
//!
//! The camera frame has `x` along the optical axis, `y` to the left and `z`
//! up. It is placed in the world by pitching down by `tilt` and then yawing
//! by `yaw` about the world `z` axis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{SensorSource, TrackId, Trajectory, WorldPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub width_px: u32,
    pub height_px: u32,
    /// Horizontal field of view, degrees.
    pub fov_h: f64,
    /// Vertical field of view, degrees. Derived from `fov_h` and the aspect
    /// ratio when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov_v: Option<f64>,
    /// Pitch below the horizon, degrees.
    pub tilt: f64,
    /// Rotation about world `z`, degrees; 0 looks down the `+x` axis.
    pub yaw: f64,
    /// Optical center; `position.z` is the mount height.
    pub position: WorldPoint,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width_px: 1200,
            height_px: 1200,
            fov_h: 90.0,
            fov_v: None,
            tilt: 8.0,
            yaw: 0.0,
            position: WorldPoint::new(780.0, -8.0, 6.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelDetection {
    pub t: f64,
    pub track_id: TrackId,
    pub u: f64,
    pub v: f64,
    /// Detector confidence in `[0, 1]`; carried through, unused by geometry.
    pub conf: f64,
}

impl PixelDetection {
    pub fn pixel(&self) -> Pixel {
        Pixel { u: self.u, v: self.v }
    }
}

/// Angular position of a pixel: per-axis angle from the optical axis with
/// yaw added to `az` and tilt subtracted from `el`. `el` is an elevation, so
/// rays below the horizon have `el < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularCoordinate {
    pub az: f64,
    pub el: f64,
}

impl AngularCoordinate {
    pub fn depression(&self) -> f64 {
        -self.el
    }
}

/// Maps one pixel axis to an angle: `atan(((L - 2c) / L) * tan(fov / 2)) + offset`.
pub fn pixel_axis_to_angle(coord: f64, length: f64, fov_deg: f64, offset_deg: f64) -> f64 {
    let half = (fov_deg / 2.0).to_radians().tan();
    (((length - 2.0 * coord) / length) * half).atan().to_degrees() + offset_deg
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("camera: {m}")));
        if self.width_px == 0 || self.height_px == 0 {
            return bad("image dimensions must be at least 1 px");
        }
        for fov in [Some(self.fov_h), self.fov_v].into_iter().flatten() {
            if !(fov > 0.0 && fov < 180.0) {
                return bad("field of view must lie in (0, 180) degrees");
            }
        }
        if !(self.tilt > -90.0 && self.tilt < 90.0) {
            return bad("tilt must lie in (-90, 90) degrees");
        }
        if !self.position.is_finite() || self.position.z <= 0.0 {
            return bad("mount height must be positive");
        }
        if !self.yaw.is_finite() {
            return bad("yaw must be finite");
        }
        Ok(())
    }

    pub fn fov_v_deg(&self) -> f64 {
        self.fov_v.unwrap_or_else(|| {
            let aspect = self.height_px as f64 / self.width_px as f64;
            2.0 * ((self.fov_h / 2.0).to_radians().tan() * aspect).atan().to_degrees()
        })
    }

    fn half_tans(&self) -> (f64, f64) {
        (
            (self.fov_h / 2.0).to_radians().tan(),
            (self.fov_v_deg() / 2.0).to_radians().tan(),
        )
    }

    pub fn contains(&self, px: Pixel) -> bool {
        px.u >= 0.0 && px.u <= self.width_px as f64 && px.v >= 0.0 && px.v <= self.height_px as f64
    }

    pub fn pixel_to_angle(&self, px: Pixel) -> Result<AngularCoordinate> {
        if !self.contains(px) {
            return Err(Error::PixelOutOfBounds {
                u: px.u,
                v: px.v,
                width: self.width_px,
                height: self.height_px,
            });
        }
        Ok(AngularCoordinate {
            az: pixel_axis_to_angle(px.u, self.width_px as f64, self.fov_h, self.yaw),
            el: pixel_axis_to_angle(px.v, self.height_px as f64, self.fov_v_deg(), -self.tilt),
        })
    }

    /// Intersects the viewing ray for `ang` with the road plane `z = 0`.
    pub fn angle_to_ground(&self, ang: AngularCoordinate) -> Result<WorldPoint> {
        let a = (ang.az - self.yaw).to_radians();
        let e = (ang.el + self.tilt).to_radians();
        // Pinhole ray (1, tan a, tan e) scaled by cos a * cos e so that it stays
        // finite at the nadir.
        let cam = [a.cos() * e.cos(), a.sin() * e.cos(), a.cos() * e.sin()];
        let dir = self.camera_to_world(cam);
        if dir[2] >= -1e-12 {
            return Err(Error::NoGroundIntersection);
        }
        let c = self.position;
        let s = -c.z / dir[2];
        Ok(WorldPoint::new(c.x + s * dir[0], c.y + s * dir[1], 0.0))
    }

    pub fn localize_pixel(&self, px: Pixel) -> Result<WorldPoint> {
        self.angle_to_ground(self.pixel_to_angle(px)?)
    }

    /// Forward pinhole projection; `None` behind the camera or outside the image.
    pub fn project_to_pixel(&self, p: WorldPoint) -> Option<Pixel> {
        let c = self.position;
        let d = self.world_to_camera([p.x - c.x, p.y - c.y, p.z - c.z]);
        if d[0] <= 1e-12 {
            return None;
        }
        let (th, tv) = self.half_tans();
        let (w, h) = (self.width_px as f64, self.height_px as f64);
        let u = w * (1.0 - (d[1] / d[0]) / th) / 2.0;
        let v = h * (1.0 - (d[2] / d[0]) / tv) / 2.0;
        // Rounding at the image border must not push an edge pixel out.
        const EDGE: f64 = 1e-9;
        if !(-EDGE..=w + EDGE).contains(&u) || !(-EDGE..=h + EDGE).contains(&v) {
            return None;
        }
        Some(Pixel {
            u: u.clamp(0.0, w),
            v: v.clamp(0.0, h),
        })
    }

    fn camera_to_world(&self, d: [f64; 3]) -> [f64; 3] {
        let (st, ct) = self.tilt.to_radians().sin_cos();
        let (sy, cy) = self.yaw.to_radians().sin_cos();
        // Pitch down by tilt: forward (1,0,0) -> (cos, 0, -sin).
        let p = [d[0] * ct + d[2] * st, d[1], -d[0] * st + d[2] * ct];
        [p[0] * cy - p[1] * sy, p[0] * sy + p[1] * cy, p[2]]
    }

    fn world_to_camera(&self, d: [f64; 3]) -> [f64; 3] {
        let (st, ct) = self.tilt.to_radians().sin_cos();
        let (sy, cy) = self.yaw.to_radians().sin_cos();
        let p = [d[0] * cy + d[1] * sy, -d[0] * sy + d[1] * cy, d[2]];
        [p[0] * ct - p[2] * st, p[1], p[0] * st + p[2] * ct]
    }
}

/// Localizes pixel detections and groups them into one camera trajectory
/// per track id. Detections outside the image or above the horizon are
/// dropped, as are repeated timestamps within a track.
pub fn localize_detections(cam: &CameraModel, detections: &[PixelDetection]) -> Vec<Trajectory> {
    let mut by_track: BTreeMap<TrackId, Vec<(f64, WorldPoint)>> = BTreeMap::new();
    for det in detections {
        match cam.localize_pixel(det.pixel()) {
            Ok(p) => by_track.entry(det.track_id).or_default().push((det.t, p)),
            Err(e) => log::debug!("dropping detection of track {} at t={}: {e}", det.track_id, det.t),
        }
    }
    by_track
        .into_iter()
        .map(|(id, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut traj = Trajectory::new(id, SensorSource::Camera);
            for (t, p) in pts {
                if traj.push(t, p).is_err() {
                    log::warn!("track {id}: duplicate camera timestamp {t}, keeping the first");
                }
            }
            traj
        })
        .collect()
}

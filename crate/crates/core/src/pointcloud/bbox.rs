use serde::{Deserialize, Serialize};

use super::LidarPoint;
use crate::error::{Error, Result};
use crate::frames::WorldPoint;

/// Box with vertical sides, rotated by `yaw` degrees about `z`.
/// `length` runs along the yaw direction and is never shorter than `width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox3D {
    pub center: WorldPoint,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// Degrees in `(-90, 90]`.
    pub yaw: f64,
}

impl BoundingBox3D {
    /// Membership test with a small absolute slack for rounding.
    pub fn contains(&self, p: &LidarPoint, slack: f64) -> bool {
        let (s, c) = self.yaw.to_radians().sin_cos();
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        u.abs() <= self.length / 2.0 + slack
            && v.abs() <= self.width / 2.0 + slack
            && (p.z - self.center.z).abs() <= self.height / 2.0 + slack
    }
}

fn normalize_yaw(mut deg: f64) -> f64 {
    deg %= 180.0;
    if deg <= -90.0 {
        deg += 180.0;
    } else if deg > 90.0 {
        deg -= 180.0;
    }
    deg
}

/// Oriented box from the principal axis of the xy covariance.
pub fn fit_box(points: &[LidarPoint]) -> Result<BoundingBox3D> {
    if points.len() < 3 {
        return Err(Error::DegenerateBox(points.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - mx, p.y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (s, c) = theta.sin_cos();

    let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut zmin, mut zmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let (dx, dy) = (p.x - mx, p.y - my);
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
        zmin = zmin.min(p.z);
        zmax = zmax.max(p.z);
    }
    let (mut length, mut width) = (umax - umin, vmax - vmin);
    if !(length > 0.0) && !(width > 0.0) {
        return Err(Error::DegenerateBox(points.len()));
    }
    let (uc, vc) = ((umax + umin) / 2.0, (vmax + vmin) / 2.0);
    let center = WorldPoint::new(mx + c * uc - s * vc, my + s * uc + c * vc, (zmax + zmin) / 2.0);
    let mut yaw = theta.to_degrees();
    if width > length {
        std::mem::swap(&mut length, &mut width);
        yaw += 90.0;
    }
    Ok(BoundingBox3D {
        center,
        length,
        width,
        height: zmax - zmin,
        yaw: normalize_yaw(yaw),
    })
}

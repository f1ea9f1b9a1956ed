use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;

use super::{LidarPoint, PointCloud};
use crate::error::{Error, Result};
use crate::rng::{keyed_rng, stream};

/// Plane `normal · p = offset` with a unit normal pointing up (`normal.z > 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPlane {
    pub normal: [f64; 3],
    pub offset: f64,
    pub inlier_count: usize,
}

impl GroundPlane {
    pub fn horizontal(height: f64) -> Self {
        Self {
            normal: [0.0, 0.0, 1.0],
            offset: height,
            inlier_count: 0,
        }
    }

    /// Normalizes and orients `normal`; `offset` is scaled accordingly.
    pub fn from_normal(normal: [f64; 3], offset: f64, inlier_count: usize) -> Self {
        let n = Vector3::from(normal);
        let norm = n.norm();
        let sign = if n.z < 0.0 { -1.0 } else { 1.0 };
        let n = n * (sign / norm);
        Self {
            normal: [n.x, n.y, n.z],
            offset: offset * sign / norm,
            inlier_count,
        }
    }

    pub fn signed_distance(&self, p: &LidarPoint) -> f64 {
        self.normal[0] * p.x + self.normal[1] * p.y + self.normal[2] * p.z - self.offset
    }

    /// Angle between the plane normal and world up, degrees.
    pub fn tilt_deg(&self) -> f64 {
        self.normal[2].clamp(-1.0, 1.0).acos().to_degrees()
    }
}

fn hypothesis(a: &LidarPoint, b: &LidarPoint, c: &LidarPoint) -> Option<([f64; 3], f64)> {
    let (a, b, c) = (Vector3::from(a.xyz()), Vector3::from(b.xyz()), Vector3::from(c.xyz()));
    let n = (b - a).cross(&(c - a));
    let norm = n.norm();
    let scale = (b - a).norm().max((c - a).norm()).max(1e-300);
    if norm <= 1e-9 * scale * scale {
        return None;
    }
    let n = n / norm;
    Some(([n.x, n.y, n.z], n.dot(&a)))
}

/// Total least-squares plane through `points`.
fn refit(points: &[&LidarPoint]) -> Option<([f64; 3], f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let c = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(p.xyz()))
        / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::from(p.xyz()) - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n);
    let (imin, _) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    let normal: Vector3<f64> = eig.eigenvectors.column(imin).into_owned();
    Some(([normal.x, normal.y, normal.z], normal.dot(&c)))
}

/// RANSAC ground segmentation.
///
/// Draws `iters` three-point plane hypotheses from a stream keyed by `seed`,
/// discards those tilted more than `max_tilt_deg` from horizontal, keeps the
/// one with the most points within `threshold`, refits it to those inliers by
/// total least squares and splits the cloud against the refit plane. Returns
/// the plane and the non-ground remainder.
///
/// The tilt bound keeps dense vertical surfaces (vehicle sides, walls) from
/// outvoting a sparser road surface; pass 90 to disable it.
pub fn ransac_ground(
    cloud: &PointCloud,
    threshold: f64,
    iters: usize,
    max_tilt_deg: f64,
    seed: u64,
) -> Result<(GroundPlane, PointCloud)> {
    let pts = &cloud.points;
    if pts.len() < 3 {
        return Err(Error::NoPlane(format!("{} points, need at least 3", pts.len())));
    }
    let mut rng = keyed_rng(seed, stream::RANSAC, 0);
    let min_nz = max_tilt_deg.clamp(0.0, 90.0).to_radians().cos();
    let count = |n: &[f64; 3], d: f64| {
        pts.iter()
            .filter(|p| (n[0] * p.x + n[1] * p.y + n[2] * p.z - d).abs() <= threshold)
            .count()
    };
    let mut best: Option<([f64; 3], f64, usize)> = None;
    for _ in 0..iters {
        let i = rng.random_range(0..pts.len());
        let mut j = rng.random_range(0..pts.len() - 1);
        if j >= i {
            j += 1;
        }
        let mut k = rng.random_range(0..pts.len() - 2);
        for m in [i.min(j), i.max(j)] {
            if k >= m {
                k += 1;
            }
        }
        let Some((n, d)) = hypothesis(&pts[i], &pts[j], &pts[k]) else {
            continue;
        };
        if n[2].abs() < min_nz - 1e-12 {
            continue;
        }
        let c = count(&n, d);
        if best.is_none_or(|b| c > b.2) {
            best = Some((n, d, c));
        }
    }
    let Some((n, d, _)) = best else {
        return Err(Error::NoPlane(format!(
            "no sampled triple gave a plane within {max_tilt_deg}° of horizontal"
        )));
    };
    let inliers: Vec<&LidarPoint> = pts
        .iter()
        .filter(|p| (n[0] * p.x + n[1] * p.y + n[2] * p.z - d).abs() <= threshold)
        .collect();
    let (n, d) = refit(&inliers).unwrap_or((n, d));
    let mut plane = GroundPlane::from_normal(n, d, 0);
    let (ground, rest): (Vec<LidarPoint>, Vec<LidarPoint>) =
        pts.iter().partition(|p| plane.signed_distance(p).abs() <= threshold);
    plane.inlier_count = ground.len();
    Ok((plane, cloud.with_points(rest)))
}

#[cfg(test)]
mod tests {
    use super::super::FrameTag;
    use super::*;

    fn pc(points: Vec<LidarPoint>) -> PointCloud {
        PointCloud::new(FrameTag::World, 0.0, points)
    }

    #[test]
    fn plane_with_objects() {
        let mut points: Vec<LidarPoint> = (0..100)
            .map(|i| LidarPoint::new((i % 10) as f64, (i / 10) as f64, 0.0, 1.0))
            .collect();
        points.extend((0..5).map(|i| LidarPoint::new(i as f64, 2.0, 5.0, 1.0)));
        let (plane, rest) = ransac_ground(&pc(points), 0.1, 100, 10.0, 3).unwrap();
        assert!(plane.inlier_count >= 100);
        assert_eq!(rest.len(), 5);
        assert!(plane.tilt_deg() < 1e-6);
        assert!(plane.offset.abs() < 1e-9);
    }

    #[test]
    fn exact_plane() {
        let points: Vec<LidarPoint> = (0..50)
            .map(|i| LidarPoint::new((i % 7) as f64 * 0.7, (i / 7) as f64 * 1.3, 1.0, 1.0))
            .collect();
        let (plane, rest) = ransac_ground(&pc(points), 0.05, 20, 10.0, 9).unwrap();
        assert!((plane.normal[2] - 1.0).abs() < 1e-12);
        assert!((plane.offset - 1.0).abs() < 1e-12);
        assert_eq!(plane.inlier_count, 50);
        assert!(rest.is_empty());
    }

    #[test]
    fn too_few_points() {
        let points = vec![LidarPoint::default(), LidarPoint::new(1.0, 0.0, 0.0, 0.0)];
        assert!(matches!(
            ransac_ground(&pc(points), 0.1, 10, 10.0, 0),
            Err(Error::NoPlane(_))
        ));
    }

    #[test]
    fn collinear_points() {
        let points: Vec<LidarPoint> = (0..20)
            .map(|i| LidarPoint::new(i as f64, 2.0 * i as f64, 0.0, 0.0))
            .collect();
        assert!(matches!(
            ransac_ground(&pc(points), 0.1, 50, 90.0, 0),
            Err(Error::NoPlane(_))
        ));
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let points: Vec<LidarPoint> = (0..400)
            .map(|i| {
                let (x, y) = ((i % 20) as f64, (i / 20) as f64);
                LidarPoint::new(
                    x,
                    y,
                    0.01 * ((i * 7919) % 13) as f64 + if i % 9 == 0 { 2.0 } else { 0.0 },
                    1.0,
                )
            })
            .collect();
        let a = ransac_ground(&pc(points.clone()), 0.2, 50, 10.0, 42).unwrap();
        let b = ransac_ground(&pc(points), 0.2, 50, 10.0, 42).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn tilt_bound_rejects_a_denser_wall() {
        // 200-point wall at y = 0 and a 100-point floor at z = 0.
        let mut points: Vec<LidarPoint> = (0..200)
            .map(|i| LidarPoint::new((i % 20) as f64 * 0.5, 0.0, 0.3 + (i / 20) as f64 * 0.3, 1.0))
            .collect();
        points.extend((0..100).map(|i| LidarPoint::new((i % 10) as f64, 1.0 + (i / 10) as f64, 0.0, 1.0)));
        let (wall, _) = ransac_ground(&pc(points.clone()), 0.05, 200, 90.0, 1).unwrap();
        assert!((wall.tilt_deg() - 90.0).abs() < 1e-6);
        let (floor, rest) = ransac_ground(&pc(points), 0.05, 200, 10.0, 1).unwrap();
        assert!(floor.tilt_deg() < 1e-6);
        assert_eq!(rest.len(), 200);
    }

    #[test]
    fn normal_orientation_is_canonical() {
        let p = GroundPlane::from_normal([0.0, 0.0, -2.0], -4.0, 0);
        assert_eq!(p.normal, [0.0, 0.0, 1.0]);
        assert_eq!(p.offset, 2.0);
    }
}

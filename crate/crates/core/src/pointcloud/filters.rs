use std::collections::HashMap;

use super::ground::GroundPlane;
use super::spatial::KdTree;
use super::{PointCloud, Roi};

pub fn crop_roi(cloud: &PointCloud, roi: &Roi) -> PointCloud {
    cloud.with_points(cloud.points.iter().filter(|p| roi.contains(p)).copied().collect())
}

/// Keeps points with `intensity >= intensity_min`.
pub fn filter_intensity(cloud: &PointCloud, intensity_min: f64) -> PointCloud {
    cloud.with_points(
        cloud
            .points
            .iter()
            .filter(|p| p.intensity >= intensity_min)
            .copied()
            .collect(),
    )
}

/// Replaces the members of every occupied voxel (grid anchored at the
/// origin) by their centroid, intensity averaged. Output order follows the
/// first appearance of each voxel.
pub fn voxel_downsample(cloud: &PointCloud, voxel_size: f64) -> PointCloud {
    assert!(voxel_size > 0.0, "voxel_size must be positive");
    let mut slot: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut acc: Vec<([f64; 4], usize)> = Vec::new();
    for p in &cloud.points {
        let key = (
            (p.x / voxel_size).floor() as i64,
            (p.y / voxel_size).floor() as i64,
            (p.z / voxel_size).floor() as i64,
        );
        let i = *slot.entry(key).or_insert_with(|| {
            acc.push(([0.0; 4], 0));
            acc.len() - 1
        });
        let (s, n) = &mut acc[i];
        s[0] += p.x;
        s[1] += p.y;
        s[2] += p.z;
        s[3] += p.intensity;
        *n += 1;
    }
    cloud.with_points(
        acc.into_iter()
            .map(|(s, n)| {
                let n = n as f64;
                super::LidarPoint::new(s[0] / n, s[1] / n, s[2] / n, s[3] / n)
            })
            .collect(),
    )
}

/// Keeps points whose signed height above `plane` lies in `[z_min, z_max]`.
pub fn filter_height(cloud: &PointCloud, plane: &GroundPlane, height_range: [f64; 2]) -> PointCloud {
    let [lo, hi] = height_range;
    cloud.with_points(
        cloud
            .points
            .iter()
            .filter(|p| {
                let h = plane.signed_distance(p);
                h >= lo && h <= hi
            })
            .copied()
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierResult {
    pub cloud: PointCloud,
    /// Set when the cloud was too small to evaluate and was passed through.
    pub skipped: bool,
}

/// Statistical outlier removal: a point is dropped when the mean distance
/// to its `k` nearest neighbors exceeds `mean + alpha * std` of that
/// quantity over the whole cloud.
pub fn remove_outliers(cloud: &PointCloud, k: usize, alpha: f64) -> OutlierResult {
    if k == 0 || cloud.len() <= k {
        if k > 0 && !cloud.is_empty() {
            log::warn!("outlier removal skipped: {} points, k = {k}", cloud.len());
        }
        return OutlierResult {
            cloud: cloud.clone(),
            skipped: true,
        };
    }
    let tree = KdTree::new(cloud.points.iter().map(|p| p.xyz()).collect());
    let mean_d: Vec<f64> = (0..cloud.len())
        .map(|i| {
            let nn = tree.nearest(&tree.point(i), k, Some(i));
            nn.iter().map(|(d2, _)| d2.sqrt()).sum::<f64>() / k as f64
        })
        .collect();
    let n = mean_d.len() as f64;
    let mean = mean_d.iter().sum::<f64>() / n;
    let std = (mean_d.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
    // Relative slack so that a zero-variance cloud is never thinned by rounding.
    let threshold = mean + alpha * std + 1e-12 * mean.abs();
    OutlierResult {
        cloud: cloud.with_points(
            cloud
                .points
                .iter()
                .zip(&mean_d)
                .filter(|(_, &d)| d <= threshold)
                .map(|(p, _)| *p)
                .collect(),
        ),
        skipped: false,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{FrameTag, LidarPoint};
    use super::*;

    fn pc(points: Vec<LidarPoint>) -> PointCloud {
        PointCloud::new(FrameTag::World, 0.0, points)
    }

    fn grid(n: usize, spacing: f64) -> Vec<LidarPoint> {
        (0..n * n)
            .map(|i| LidarPoint::new((i % n) as f64 * spacing, (i / n) as f64 * spacing, 0.0, 10.0))
            .collect()
    }

    #[test]
    fn crop_examples() {
        let points: Vec<LidarPoint> = (0..10).map(|i| LidarPoint::new(i as f64, 0.0, 0.0, 1.0)).collect();
        let all = Roi {
            min: [-1.0; 3],
            max: [20.0; 3],
        };
        assert_eq!(crop_roi(&pc(points.clone()), &all).points, points);
        let none = Roi {
            min: [100.0; 3],
            max: [101.0; 3],
        };
        assert!(crop_roi(&pc(points.clone()), &none).is_empty());
        // Closed box on x in [3, 6].
        let some = Roi {
            min: [3.0, -1.0, -1.0],
            max: [6.0, 1.0, 1.0],
        };
        let xs: Vec<f64> = crop_roi(&pc(points), &some).points.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn intensity_examples() {
        let points: Vec<LidarPoint> = [1.0, 5.0, 9.0]
            .iter()
            .map(|&i| LidarPoint::new(0.0, 0.0, 0.0, i))
            .collect();
        assert_eq!(filter_intensity(&pc(points.clone()), 0.0).len(), 3);
        assert!(filter_intensity(&pc(points.clone()), 10.0).is_empty());
        let kept: Vec<f64> = filter_intensity(&pc(points), 5.0)
            .points
            .iter()
            .map(|p| p.intensity)
            .collect();
        assert_eq!(kept, vec![5.0, 9.0]);
    }

    #[test]
    fn voxel_single_cell() {
        let points: Vec<LidarPoint> = (0..8)
            .map(|i| {
                LidarPoint::new(
                    0.1 + 0.1 * (i & 1) as f64,
                    0.2 + 0.1 * ((i >> 1) & 1) as f64,
                    0.3 + 0.1 * (i >> 2) as f64,
                    i as f64,
                )
            })
            .collect();
        let out = voxel_downsample(&pc(points), 1.0);
        assert_eq!(out.len(), 1);
        let p = out.points[0];
        assert!((p.x - 0.15).abs() < 1e-12 && (p.y - 0.25).abs() < 1e-12 && (p.z - 0.35).abs() < 1e-12);
        assert!((p.intensity - 3.5).abs() < 1e-12);
    }

    #[test]
    fn voxel_sparse_identity() {
        let points = grid(5, 2.0)
            .into_iter()
            .map(|p| LidarPoint {
                x: p.x + 0.5,
                y: p.y + 0.5,
                ..p
            })
            .collect::<Vec<_>>();
        let out = voxel_downsample(&pc(points.clone()), 1.0);
        assert_eq!(out.points, points);
    }

    #[test]
    fn voxel_four_cells_of_25() {
        // 10x10 grid with 0.1 m spacing offset into the cells [0,0.5)^2 etc.
        let points: Vec<LidarPoint> = (0..100)
            .map(|i| {
                let (a, b) = (i % 10, i / 10);
                LidarPoint::new(0.02 + a as f64 * 0.1, 0.02 + b as f64 * 0.1, 0.0, 1.0)
            })
            .collect();
        let out = voxel_downsample(&pc(points.clone()), 0.5);
        assert_eq!(out.len(), 4);
        for q in &out.points {
            let members: Vec<&LidarPoint> = points
                .iter()
                .filter(|p| (p.x / 0.5).floor() == (q.x / 0.5).floor() && (p.y / 0.5).floor() == (q.y / 0.5).floor())
                .collect();
            assert_eq!(members.len(), 25);
            let mx = members.iter().map(|p| p.x).sum::<f64>() / 25.0;
            let my = members.iter().map(|p| p.y).sum::<f64>() / 25.0;
            assert!((q.x - mx).abs() < 1e-12 && (q.y - my).abs() < 1e-12);
        }
    }

    #[test]
    fn height_band() {
        let plane = GroundPlane::horizontal(0.0);
        let points = vec![
            LidarPoint::new(0.0, 0.0, 1.0, 1.0),
            LidarPoint::new(0.0, 0.0, 5.0, 1.0),
            LidarPoint::new(0.0, 0.0, -0.5, 1.0),
        ];
        let out = filter_height(&pc(points), &plane, [0.2, 3.0]);
        assert_eq!(out.len(), 1);
        assert_eq!(out.points[0].z, 1.0);
        assert!(filter_height(&pc(vec![]), &plane, [0.2, 3.0]).is_empty());
    }

    #[test]
    fn height_band_on_tilted_plane() {
        // Plane pitched by 10 degrees through the origin.
        let th = 10f64.to_radians();
        let plane = GroundPlane::from_normal([-th.sin(), 0.0, th.cos()], 0.0, 0);
        // One meter along the normal from a plane point at x = 20, where the
        // plane itself is already 20 tan(10 deg) ~ 3.5 m high.
        let base = [20.0, 0.0, 20.0 * th.tan()];
        let p = LidarPoint::new(base[0] - th.sin(), 0.0, base[2] + th.cos(), 1.0);
        assert!((plane.signed_distance(&p) - 1.0).abs() < 1e-12);
        let out = filter_height(&pc(vec![p]), &plane, [0.2, 3.0]);
        assert_eq!(out.len(), 1);
        assert!(p.z > 3.0);
    }

    #[test]
    fn outlier_far_point_dropped() {
        let mut points = grid(10, 1.0);
        points.push(LidarPoint::new(60.0, 4.5, 0.0, 1.0));
        let res = remove_outliers(&pc(points.clone()), 4, 2.0);
        assert!(!res.skipped);
        assert_eq!(res.cloud.len(), 100);
        assert!(res.cloud.points.iter().all(|p| p.x < 50.0));

        // Brute-force statistics: the far point sits well above the cut.
        let md: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut d: Vec<f64> = points
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| p.dist2(q).sqrt())
                    .collect();
                d.sort_by(|a, b| a.total_cmp(b));
                d[..4].iter().sum::<f64>() / 4.0
            })
            .collect();
        let n = md.len() as f64;
        let mean = md.iter().sum::<f64>() / n;
        let std = (md.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
        let cut = mean + 2.0 * std;
        assert!(md[100] > cut && md[..100].iter().all(|&d| d <= cut));
    }

    #[test]
    fn outlier_uniform_ring_identity() {
        // Points on a circle are all equivalent: zero variance of kNN distances.
        let points: Vec<LidarPoint> = (0..36)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 36.0;
                LidarPoint::new(a.cos() * 5.0, a.sin() * 5.0, 0.0, 1.0)
            })
            .collect();
        let res = remove_outliers(&pc(points), 4, 2.0);
        assert_eq!(res.cloud.len(), 36);
    }

    #[test]
    fn outlier_degenerate_size() {
        let points = grid(2, 1.0)[..3].to_vec();
        let res = remove_outliers(&pc(points.clone()), 5, 2.0);
        assert!(res.skipped);
        assert_eq!(res.cloud.points, points);
    }
}

use serde::{Deserialize, Serialize};

use super::{
    agglomerative_merge, crop_roi, dbscan, filter_height, filter_intensity, fit_box, ransac_ground, remove_outliers,
    voxel_downsample, BoundingBox3D, LidarParams, LidarPoint, PointCloud,
};
use crate::error::Result;
use crate::frames::WorldPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox3D,
    /// Mean of the cluster's points. Biased toward the sensor-facing
    /// surfaces; `bbox.center` is the better object-center estimate.
    pub centroid: WorldPoint,
    pub point_count: usize,
}

/// Runs the full detector on one frame. Deterministic for a given
/// `(cloud, params, seed)`.
pub fn detect_objects(cloud: &PointCloud, params: &LidarParams, seed: u64) -> Result<Vec<Detection>> {
    params.validate()?;
    let c = crop_roi(cloud, &params.roi);
    let c = filter_intensity(&c, params.intensity_min);
    let c = voxel_downsample(&c, params.voxel_size);
    let (plane, above) = ransac_ground(
        &c,
        params.ransac_threshold,
        params.ransac_iters,
        params.ransac_max_tilt_deg,
        seed,
    )?;
    let c = filter_height(&above, &plane, params.height_range);
    let c = remove_outliers(&c, params.outlier_k, params.outlier_alpha).cloud;
    let clusters = dbscan(&c, params.dbscan_eps, params.dbscan_min_pts).clusters;
    let clusters = agglomerative_merge(clusters, &c.points, params.agglom_merge_dist);

    let mut out = Vec::new();
    for cl in clusters.into_iter().filter(|cl| cl.len() >= params.min_cluster_size) {
        let pts: Vec<LidarPoint> = cl.points(&c.points).collect();
        match fit_box(&pts) {
            Ok(bbox) => out.push(Detection {
                bbox,
                centroid: cl.centroid,
                point_count: cl.len(),
            }),
            Err(e) => log::debug!("skipping cluster at t={}: {e}", cloud.t),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::FrameTag;
    use super::*;
    use crate::error::Error;

    fn ground(x0: f64, x1: f64, y0: f64, y1: f64, step: f64) -> Vec<LidarPoint> {
        let mut pts = Vec::new();
        let mut x = x0;
        let mut k = 0u64;
        while x <= x1 {
            let mut y = y0;
            while y <= y1 {
                // Deterministic centimeter-scale roughness.
                let dz = 0.02 * (((k * 2_654_435_761) % 1000) as f64 / 1000.0 - 0.5);
                pts.push(LidarPoint::new(x, y, dz, 40.0));
                y += step;
                k += 1;
            }
            x += step;
        }
        pts
    }

    fn slab(x0: f64, x1: f64, y0: f64, y1: f64, z0: f64, z1: f64, step: f64) -> Vec<LidarPoint> {
        let mut pts = Vec::new();
        let mut x = x0;
        while x <= x1 + 1e-9 {
            let mut y = y0;
            while y <= y1 + 1e-9 {
                let mut z = z0;
                while z <= z1 + 1e-9 {
                    pts.push(LidarPoint::new(x, y, z, 100.0));
                    z += step;
                }
                y += step;
            }
            x += step;
        }
        pts
    }

    fn params() -> LidarParams {
        LidarParams {
            roi: super::super::Roi {
                min: [-50.0, -50.0, -2.0],
                max: [50.0, 50.0, 6.0],
            },
            ..LidarParams::default()
        }
    }

    #[test]
    fn ground_only_frame() {
        let cloud = PointCloud::new(FrameTag::World, 0.0, ground(-10.0, 10.0, -10.0, 10.0, 0.3));
        assert!(detect_objects(&cloud, &params(), 1).unwrap().is_empty());
    }

    #[test]
    fn empty_frame_has_no_plane() {
        let cloud = PointCloud::new(FrameTag::World, 0.0, vec![]);
        assert!(matches!(detect_objects(&cloud, &params(), 1), Err(Error::NoPlane(_))));
    }

    #[test]
    fn single_box_on_ground() {
        let mut pts = ground(-10.0, 10.0, -10.0, 10.0, 0.3);
        // Side face of a car and its roof.
        pts.extend(slab(-2.3, 2.3, -0.9, -0.9, 0.3, 1.5, 0.15));
        pts.extend(slab(-2.3, 2.3, -0.9, 0.9, 1.5, 1.5, 0.15));
        let dets = detect_objects(&PointCloud::new(FrameTag::World, 0.0, pts), &params(), 1).unwrap();
        assert_eq!(dets.len(), 1);
        let b = dets[0].bbox;
        assert!(b.center.x.abs() < 0.2 && b.center.y.abs() < 0.2);
        assert!((b.length - 4.6).abs() < 0.3);
    }

    #[test]
    fn shadow_split_vehicle_is_merged() {
        // A low skirt band and the upper body are separated by a 0.7 m gap,
        // which a 0.5 m DBSCAN radius cannot bridge.
        let mut pts = ground(-10.0, 10.0, -10.0, 10.0, 0.3);
        pts.extend(slab(-2.3, 2.3, -0.9, -0.9, 0.25, 0.4, 0.15));
        pts.extend(slab(-2.3, 2.3, -0.9, -0.9, 1.1, 1.5, 0.15));
        pts.extend(slab(-2.3, 2.3, -0.9, 0.9, 1.5, 1.5, 0.15));
        let cloud = PointCloud::new(FrameTag::World, 0.0, pts);
        let p = LidarParams {
            dbscan_eps: 0.5,
            ..params()
        };
        let unmerged = LidarParams {
            agglom_merge_dist: 1e-6,
            ..p.clone()
        };
        assert_eq!(detect_objects(&cloud, &unmerged, 1).unwrap().len(), 2);
        assert_eq!(detect_objects(&cloud, &p, 1).unwrap().len(), 1);
    }

    #[test]
    fn deterministic() {
        let mut pts = ground(-10.0, 10.0, -10.0, 10.0, 0.3);
        pts.extend(slab(3.0, 7.0, 2.0, 2.0, 0.3, 1.5, 0.15));
        let cloud = PointCloud::new(FrameTag::World, 0.0, pts);
        assert_eq!(
            detect_objects(&cloud, &params(), 9).unwrap(),
            detect_objects(&cloud, &params(), 9).unwrap()
        );
    }
}

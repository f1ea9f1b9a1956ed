//! Bottom-up LiDAR object detection.
//!
//! Raw returns pass through a chain of filters and partitions:
//! region-of-interest crop, intensity threshold, voxel downsampling, RANSAC
//! ground removal, height band, statistical outlier removal, DBSCAN,
//! agglomerative merging by centroid distance and finally an oriented
//! bounding box per cluster. Each stage is a pure function; see
//! [`detect_objects`] for the composed pipeline.

mod bbox;
mod cluster;
mod filters;
mod ground;
mod pipeline;
pub mod spatial;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::TrackId;

pub use bbox::{fit_box, BoundingBox3D};
pub use cluster::{agglomerative_merge, dbscan, Cluster, DbscanResult};
pub use filters::{crop_roi, filter_height, filter_intensity, remove_outliers, voxel_downsample, OutlierResult};
pub use ground::{ransac_ground, GroundPlane};
pub use pipeline::{detect_objects, Detection};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LidarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Return strength, unitless, non-negative.
    pub intensity: f64,
}

impl LidarPoint {
    pub const fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Self { x, y, z, intensity }
    }

    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dist2(&self, other: &LidarPoint) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        dx * dx + dy * dy + dz * dz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameTag {
    Sensor,
    #[default]
    World,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub frame: FrameTag,
    pub t: f64,
    pub points: Vec<LidarPoint>,
}

impl PointCloud {
    pub fn new(frame: FrameTag, t: f64, points: Vec<LidarPoint>) -> Self {
        Self { frame, t, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// A cloud with the same frame and time but different points.
    pub fn with_points(&self, points: Vec<LidarPoint>) -> PointCloud {
        PointCloud {
            frame: self.frame,
            t: self.t,
            points,
        }
    }
}

/// A detected box at a frame time; `track_id` is absent until a tracker or
/// the simulator supplies one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedDetection {
    pub t: f64,
    pub track_id: Option<TrackId>,
    pub bbox: BoundingBox3D,
}

/// Closed axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roi {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Roi {
    pub fn contains(&self, p: &LidarPoint) -> bool {
        let q = p.xyz();
        (0..3).all(|i| q[i] >= self.min[i] && q[i] <= self.max[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarParams {
    pub roi: Roi,
    pub intensity_min: f64,
    pub voxel_size: f64,
    pub ransac_threshold: f64,
    pub ransac_iters: usize,
    /// Ground hypotheses tilted further than this from horizontal are
    /// rejected, degrees.
    pub ransac_max_tilt_deg: f64,
    /// Kept band of heights above the fitted ground, `[z_min, z_max]`.
    pub height_range: [f64; 2],
    pub outlier_k: usize,
    pub outlier_alpha: f64,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub agglom_merge_dist: f64,
    pub min_cluster_size: usize,
}

impl Default for LidarParams {
    fn default() -> Self {
        Self {
            roi: Roi {
                min: [785.0, -6.0, -2.0],
                max: [980.0, 8.0, 6.0],
            },
            intensity_min: 5.0,
            voxel_size: 0.15,
            ransac_threshold: 0.2,
            ransac_iters: 200,
            ransac_max_tilt_deg: 10.0,
            height_range: [0.2, 4.0],
            outlier_k: 8,
            outlier_alpha: 2.0,
            dbscan_eps: 0.8,
            dbscan_min_pts: 8,
            agglom_merge_dist: 1.5,
            min_cluster_size: 10,
        }
    }
}

impl LidarParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("lidar_params: {m}")));
        if (0..3).any(|i| self.roi.min[i] > self.roi.max[i]) {
            return bad("roi min must not exceed max");
        }
        if self.intensity_min < 0.0 {
            return bad("intensity_min must be non-negative");
        }
        for (name, v) in [
            ("voxel_size", self.voxel_size),
            ("ransac_threshold", self.ransac_threshold),
            ("outlier_alpha", self.outlier_alpha),
            ("dbscan_eps", self.dbscan_eps),
            ("agglom_merge_dist", self.agglom_merge_dist),
        ] {
            if !(v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(self.ransac_max_tilt_deg > 0.0 && self.ransac_max_tilt_deg <= 90.0) {
            return bad("ransac_max_tilt_deg must be in (0, 90]");
        }
        if self.ransac_iters == 0 || self.outlier_k == 0 || self.dbscan_min_pts == 0 || self.min_cluster_size == 0 {
            return bad("iteration and count parameters must be at least 1");
        }
        if self.height_range[0] >= self.height_range[1] {
            return bad("height_range must satisfy z_min < z_max");
        }
        Ok(())
    }
}

//! Python bindings: camera localization, LiDAR detection, clustering and
//! Kalman fusion on plain Python sequences.
//!
//! Configuration objects cross the boundary as JSON strings with the same
//! schema as the command-line config sections; omitted keys take defaults.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;

use roadfuse_core::camera::{CameraModel, Pixel};
use roadfuse_core::kalman::{run_fusion, FilterConfig};
use roadfuse_core::pointcloud::{dbscan as core_dbscan, detect_objects, FrameTag, LidarParams, LidarPoint, PointCloud};
use roadfuse_core::scenario::{generate_ground_truth, ScenarioConfig};
use roadfuse_core::{Error, SensorSource, TrackId, Trajectory, WorldPoint};

/// `(t, x, y)`.
type Sample = (f64, f64, f64);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: DeserializeOwned + Default>(json: Option<&str>) -> PyResult<T> {
    match json {
        None => Ok(T::default()),
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(format!("invalid config: {e}"))),
    }
}

fn track(id: u64, source: SensorSource, samples: Vec<Sample>) -> PyResult<Trajectory> {
    Trajectory::from_points(
        TrackId(id),
        source,
        samples.into_iter().map(|(t, x, y)| (t, WorldPoint::ground(x, y))),
    )
    .map_err(to_py)
}

/// Ground position `(x, y)` of pixel `(u, v)`.
#[pyfunction]
#[pyo3(signature = (u, v, camera_json=None))]
fn localize_pixel(u: f64, v: f64, camera_json: Option<&str>) -> PyResult<(f64, f64)> {
    let cam: CameraModel = parse(camera_json)?;
    cam.validate().map_err(to_py)?;
    let p = cam.localize_pixel(Pixel { u, v }).map_err(to_py)?;
    Ok((p.x, p.y))
}

/// Pixel `(u, v)` of ground point `(x, y)`, or `None` outside the image.
#[pyfunction]
#[pyo3(signature = (x, y, camera_json=None))]
fn project_to_pixel(x: f64, y: f64, camera_json: Option<&str>) -> PyResult<Option<(f64, f64)>> {
    let cam: CameraModel = parse(camera_json)?;
    cam.validate().map_err(to_py)?;
    Ok(cam.project_to_pixel(WorldPoint::ground(x, y)).map(|p| (p.u, p.v)))
}

/// DBSCAN cluster label per point, `-1` for noise.
#[pyfunction]
fn dbscan(points: Vec<(f64, f64, f64)>, eps: f64, min_pts: usize) -> PyResult<Vec<i64>> {
    if eps.is_nan() || eps <= 0.0 || min_pts == 0 {
        return Err(PyValueError::new_err("eps must be positive and min_pts at least 1"));
    }
    let cloud = PointCloud::new(
        FrameTag::World,
        0.0,
        points.iter().map(|&(x, y, z)| LidarPoint::new(x, y, z, 0.0)).collect(),
    );
    let res = core_dbscan(&cloud, eps, min_pts);
    let mut labels = vec![-1; points.len()];
    for (c, cluster) in res.clusters.iter().enumerate() {
        for &i in &cluster.indices {
            labels[i] = c as i64;
        }
    }
    Ok(labels)
}

/// Runs the LiDAR detector on `(x, y, z, intensity)` points. Returns one
/// `(cx, cy, cz, length, width, height, yaw_deg, point_count)` per object.
#[pyfunction]
#[pyo3(signature = (points, params_json=None, seed=0))]
#[allow(clippy::type_complexity)]
fn detect(
    points: Vec<(f64, f64, f64, f64)>,
    params_json: Option<&str>,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64, f64, f64, f64, f64, usize)>> {
    let params: LidarParams = parse(params_json)?;
    let cloud = PointCloud::new(
        FrameTag::World,
        0.0,
        points
            .into_iter()
            .map(|(x, y, z, i)| LidarPoint::new(x, y, z, i))
            .collect(),
    );
    let dets = detect_objects(&cloud, &params, seed).map_err(to_py)?;
    Ok(dets
        .iter()
        .map(|d| {
            let b = &d.bbox;
            (
                b.center.x,
                b.center.y,
                b.center.z,
                b.length,
                b.width,
                b.height,
                b.yaw,
                d.point_count,
            )
        })
        .collect())
}

/// Fuses camera and LiDAR samples `(t, x, y)` of one object; either may be
/// empty. Returns fused `(t, x, y)` samples.
#[pyfunction]
#[pyo3(signature = (camera, lidar, filter_json=None))]
fn fuse(camera: Vec<Sample>, lidar: Vec<Sample>, filter_json: Option<&str>) -> PyResult<Vec<Sample>> {
    let cfg: FilterConfig = parse(filter_json)?;
    cfg.validate().map_err(to_py)?;
    let cam = track(1, SensorSource::Camera, camera)?;
    let lid = track(1, SensorSource::Lidar, lidar)?;
    let fused = run_fusion(TrackId(1), Some(&cam), Some(&lid), &cfg).map_err(to_py)?;
    Ok(fused
        .samples()
        .iter()
        .map(|s| (s.t, s.position.x, s.position.y))
        .collect())
}

/// Ground-truth trajectories of a synthetic scenario as
/// `{vehicle_id: [(t, x, y), ...]}`.
#[pyfunction]
#[pyo3(signature = (scenario_json=None))]
fn simulate_truth(scenario_json: Option<&str>) -> PyResult<BTreeMap<u64, Vec<Sample>>> {
    let cfg: ScenarioConfig = parse(scenario_json)?;
    let truth = generate_ground_truth(&cfg).map_err(to_py)?;
    Ok(truth
        .iter()
        .map(|g| {
            let samples = g
                .trajectory
                .samples()
                .iter()
                .map(|s| (s.t, s.position.x, s.position.y))
                .collect();
            (g.id.0, samples)
        })
        .collect())
}

#[pymodule]
fn roadfuse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(localize_pixel, m)?)?;
    m.add_function(wrap_pyfunction!(project_to_pixel, m)?)?;
    m.add_function(wrap_pyfunction!(dbscan, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_truth, m)?)?;
    Ok(())
}

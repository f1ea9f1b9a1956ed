//! Deterministic synthetic work-zone scenes.
//!
//! A two-lane road narrows to one lane: vehicles in the closing lane shift
//! laterally along a smoothstep profile between `merge_start` and
//! `merge_end`. Sensors are a roadside camera (rendered through the true
//! projection model) and a roadside LiDAR (rendered either as sampled box
//! surfaces or, on the fast path, as noisy box centers).
//!
//! Every random draw comes from a stream keyed by `(seed, stream, index)`,
//! so outputs are pure functions of the configuration and frames can be
//! rendered in parallel.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, PixelDetection};
use crate::error::{Error, Result};
use crate::frames::{SensorSource, TrackId, Trajectory, WorldPoint};
use crate::pointcloud::{BoundingBox3D, FrameTag, LidarPoint, PointCloud, TimedDetection};
use crate::rng::{keyed_rng, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadConfig {
    pub start_x: f64,
    pub end_x: f64,
    pub lane_width: f64,
    /// Lateral center of the lane that continues through the work zone.
    pub surviving_lane_y: f64,
    pub merge_start: f64,
    pub merge_end: f64,
}

impl Default for RoadConfig {
    fn default() -> Self {
        Self {
            start_x: 600.0,
            end_x: 1000.0,
            lane_width: 3.6,
            surviving_lane_y: 0.0,
            merge_start: 760.0,
            merge_end: 880.0,
        }
    }
}

impl RoadConfig {
    pub fn closing_lane_y(&self) -> f64 {
        self.surviving_lane_y + self.lane_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub count: usize,
    /// Mean gap of the raw arrival process before thinning, seconds.
    pub arrival_mean_gap: f64,
    /// Arrivals closer than this to the previous vehicle are discarded.
    pub min_headway: f64,
    pub speed_mean: f64,
    pub speed_std: f64,
    /// Amplitude of the sinusoidal speed perturbation, m/s; capped at
    /// `speed_std`.
    pub speed_perturbation: f64,
    pub perturbation_period: f64,
    pub closing_lane_fraction: f64,
    pub truck_fraction: f64,
    /// Length, width, height in meters.
    pub car_dims: [f64; 3],
    pub truck_dims: [f64; 3],
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            count: 100,
            arrival_mean_gap: 0.8,
            min_headway: 2.0,
            speed_mean: 24.0,
            speed_std: 1.5,
            speed_perturbation: 0.5,
            perturbation_period: 12.0,
            closing_lane_fraction: 0.5,
            truck_fraction: 0.1,
            car_dims: [4.6, 1.8, 1.5],
            truck_dims: [12.0, 2.5, 3.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarSensorConfig {
    pub position: WorldPoint,
    /// Lowest and highest beam elevation, degrees.
    pub vertical_fov: [f64; 2],
    pub max_range: f64,
    /// Samples per square meter of visible vehicle surface.
    pub face_density: f64,
    /// Samples per square meter of road surface.
    pub ground_density: f64,
    /// Covered road area `[x_min, x_max, y_min, y_max]`.
    pub area: [f64; 4],
    pub ground_z_noise: f64,
    /// Low-intensity clutter returns per frame.
    pub spurious_points: usize,
}

impl Default for LidarSensorConfig {
    fn default() -> Self {
        Self {
            position: WorldPoint::new(780.0, -8.0, 6.0),
            vertical_fov: [-30.0, 11.0],
            max_range: 200.0,
            face_density: 20.0,
            ground_density: 2.0,
            area: [785.0, 980.0, -6.0, 8.0],
            ground_z_noise: 0.02,
            spurious_points: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub pixel_jitter_px: f64,
    /// Difference between the true and the calibrated camera tilt, degrees.
    /// Negative values make the camera under-estimate range.
    pub camera_tilt_error_deg: f64,
    pub camera_lon_bias: f64,
    pub camera_lat_bias: f64,
    /// Longitudinal bias growth while a vehicle is in view, m/s.
    pub camera_lon_drift: f64,
    pub camera_dropout: f64,
    pub lidar_range_noise: f64,
    /// Fast-path white noise on box centers, meters.
    pub lidar_centroid_std: f64,
    pub lidar_lon_drift: f64,
    pub lidar_dropout: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            pixel_jitter_px: 0.5,
            camera_tilt_error_deg: -0.1,
            camera_lon_bias: 0.0,
            camera_lat_bias: 1.5,
            camera_lon_drift: 0.0,
            camera_dropout: 0.05,
            lidar_range_noise: 0.02,
            lidar_centroid_std: 0.1,
            lidar_lon_drift: 0.4,
            lidar_dropout: 0.05,
        }
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        Self {
            pixel_jitter_px: 0.0,
            camera_tilt_error_deg: 0.0,
            camera_lon_bias: 0.0,
            camera_lat_bias: 0.0,
            camera_lon_drift: 0.0,
            camera_dropout: 0.0,
            lidar_range_noise: 0.0,
            lidar_centroid_std: 0.0,
            lidar_lon_drift: 0.0,
            lidar_dropout: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration: f64,
    pub truth_rate: f64,
    pub frame_rate_camera: f64,
    pub frame_rate_lidar: f64,
    pub road: RoadConfig,
    pub traffic: TrafficConfig,
    /// Calibrated camera; the rendering camera adds the tilt error.
    pub camera: CameraModel,
    pub camera_max_range: f64,
    pub lidar: LidarSensorConfig,
    pub noise: NoiseConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            duration: 300.0,
            truth_rate: 20.0,
            frame_rate_camera: 10.0,
            frame_rate_lidar: 20.0,
            road: RoadConfig::default(),
            traffic: TrafficConfig::default(),
            camera: CameraModel::default(),
            camera_max_range: 150.0,
            lidar: LidarSensorConfig::default(),
            noise: NoiseConfig::default(),
        }
    }
}

pub const PRESETS: &[&str] = &[
    "default",
    "case1",
    "case2",
    "asymmetric-rate",
    "clean",
    "reduced-density",
];

impl ScenarioConfig {
    /// Named scenario variants.
    ///
    /// * `case1`: ten vehicles, camera under-ranging through a tilt error,
    ///   LiDAR drifting forward: opposing longitudinal biases.
    /// * `case2`: ten vehicles, near-perfect camera, drifting LiDAR.
    /// * `asymmetric-rate`: camera 10 Hz, LiDAR 1 Hz, 20% dropout on both;
    ///   noisy sensors with only a small camera lateral bias.
    /// * `clean`: no sensor noise of any kind.
    /// * `reduced-density`: default traffic with sparser LiDAR sampling.
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = Self::default();
        match name {
            "default" => {}
            "case1" => {
                c.traffic.count = 10;
                c.duration = 50.0;
                c.noise.camera_tilt_error_deg = -0.35;
                c.noise.camera_lat_bias = 0.5;
                c.noise.lidar_lon_drift = 1.2;
                c.noise.camera_dropout = 0.0;
                c.noise.lidar_dropout = 0.0;
            }
            "case2" => {
                c.traffic.count = 10;
                c.duration = 50.0;
                c.noise = NoiseConfig {
                    pixel_jitter_px: 0.1,
                    lidar_lon_drift: 1.5,
                    lidar_centroid_std: 0.1,
                    ..NoiseConfig::zero()
                };
            }
            "asymmetric-rate" => {
                c.traffic.count = 20;
                c.duration = 80.0;
                c.frame_rate_lidar = 1.0;
                c.noise = NoiseConfig {
                    pixel_jitter_px: 0.5,
                    camera_lat_bias: 0.15,
                    camera_dropout: 0.2,
                    lidar_range_noise: 0.02,
                    lidar_centroid_std: 0.3,
                    lidar_dropout: 0.2,
                    ..NoiseConfig::zero()
                };
            }
            "clean" => c.noise = NoiseConfig::zero(),
            "reduced-density" => {
                c.lidar.face_density = 6.0;
                c.lidar.ground_density = 0.5;
                c.lidar.spurious_points = 10;
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset '{other}' (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("scenario: {m}")));
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return bad("duration must be a non-negative number".into());
        }
        for (name, r) in [
            ("truth_rate", self.truth_rate),
            ("frame_rate_camera", self.frame_rate_camera),
            ("frame_rate_lidar", self.frame_rate_lidar),
        ] {
            if !(r > 0.0) || !r.is_finite() {
                return bad(format!("{name} must be positive"));
            }
        }
        let road = &self.road;
        if !(road.merge_start < road.merge_end) {
            return bad("merge_start must be less than merge_end".into());
        }
        if !(road.start_x < road.end_x) || !(road.lane_width > 0.0) {
            return bad("road must have start_x < end_x and a positive lane_width".into());
        }
        let t = &self.traffic;
        if !(t.speed_mean > 0.0) || !(t.speed_std >= 0.0) || !(t.speed_perturbation >= 0.0) {
            return bad("speed_mean must be positive and speed_std, speed_perturbation non-negative".into());
        }
        if !(t.min_headway >= 0.0) || !(t.arrival_mean_gap > 0.0) || !(t.perturbation_period > 0.0) {
            return bad("headway and period parameters must be positive".into());
        }
        for (name, f) in [
            ("closing_lane_fraction", t.closing_lane_fraction),
            ("truck_fraction", t.truck_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if t.car_dims.iter().chain(&t.truck_dims).any(|d| !(*d > 0.0)) {
            return bad("vehicle dimensions must be positive".into());
        }
        for (name, p) in [
            ("camera_dropout", self.noise.camera_dropout),
            ("lidar_dropout", self.noise.lidar_dropout),
        ] {
            if !(0.0..1.0).contains(&p) && p != 1.0 {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        let n = &self.noise;
        if [
            n.pixel_jitter_px,
            n.lidar_range_noise,
            n.lidar_centroid_std,
            self.lidar.ground_z_noise,
        ]
        .iter()
        .any(|s| !(*s >= 0.0))
        {
            return bad("noise standard deviations must be non-negative".into());
        }
        let l = &self.lidar;
        if !(l.vertical_fov[0] < l.vertical_fov[1]) || !(l.max_range > 0.0) {
            return bad("lidar needs vertical_fov[0] < vertical_fov[1] and a positive max_range".into());
        }
        if !(l.face_density >= 0.0) || !(l.ground_density >= 0.0) || !(l.area[0] < l.area[1] && l.area[2] < l.area[3]) {
            return bad("lidar densities must be non-negative and area non-empty".into());
        }
        self.camera.validate()
    }

    pub fn camera_frame_times(&self) -> Vec<f64> {
        frame_times(self.duration, self.frame_rate_camera)
    }

    pub fn lidar_frame_times(&self) -> Vec<f64> {
        frame_times(self.duration, self.frame_rate_lidar)
    }

    /// The camera as it is physically mounted, including the tilt error.
    pub fn true_camera(&self) -> CameraModel {
        CameraModel {
            tilt: self.camera.tilt + self.noise.camera_tilt_error_deg,
            ..self.camera.clone()
        }
    }
}

fn frame_times(duration: f64, rate: f64) -> Vec<f64> {
    let n = (duration * rate + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 / rate).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lane {
    Surviving,
    Closing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleDims {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

/// Closed-form longitudinal motion and lane-change profile of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleMotion {
    pub arrival: f64,
    /// Time the vehicle leaves the road or the scenario ends.
    pub departure: f64,
    pub start_x: f64,
    pub speed: f64,
    pub amplitude: f64,
    pub period: f64,
    pub phase: f64,
    pub lane: Lane,
    pub road: (f64, f64, f64, f64),
}

/// Instantaneous ground-truth pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Footprint center on the road surface.
    pub center: WorldPoint,
    /// Heading from the `x` axis, radians.
    pub heading: f64,
    pub speed: f64,
}

impl VehicleMotion {
    fn x(&self, tau: f64) -> f64 {
        let w = std::f64::consts::TAU / self.period;
        self.start_x + self.speed * tau + self.amplitude / w * ((w * tau + self.phase).sin() - self.phase.sin())
    }

    fn vx(&self, tau: f64) -> f64 {
        let w = std::f64::consts::TAU / self.period;
        self.speed + self.amplitude * (w * tau + self.phase).cos()
    }

    /// Lateral position and its derivative with respect to `x`.
    fn lateral(&self, x: f64) -> (f64, f64) {
        let (surv, close, m0, m1) = self.road;
        match self.lane {
            Lane::Surviving => (surv, 0.0),
            Lane::Closing => {
                let xi = ((x - m0) / (m1 - m0)).clamp(0.0, 1.0);
                let s = xi * xi * (3.0 - 2.0 * xi);
                let ds = if (0.0..1.0).contains(&xi) && x > m0 {
                    6.0 * xi * (1.0 - xi) / (m1 - m0)
                } else {
                    0.0
                };
                (close + (surv - close) * s, (surv - close) * ds)
            }
        }
    }

    pub fn state_at(&self, t: f64) -> Option<VehicleState> {
        if t < self.arrival || t > self.departure {
            return None;
        }
        let tau = t - self.arrival;
        let (x, vx) = (self.x(tau), self.vx(tau));
        let (y, dy_dx) = self.lateral(x);
        let vy = dy_dx * vx;
        Some(VehicleState {
            center: WorldPoint::ground(x, y),
            heading: vy.atan2(vx),
            speed: vx.hypot(vy),
        })
    }

    /// Lane occupied at time `t`: closing-lane vehicles count as merged once
    /// past the midpoint of the merge.
    pub fn lane_at(&self, t: f64) -> Option<Lane> {
        let s = self.state_at(t)?;
        let (_, _, m0, m1) = self.road;
        Some(match self.lane {
            Lane::Closing if s.center.x < 0.5 * (m0 + m1) => Lane::Closing,
            _ => Lane::Surviving,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub id: TrackId,
    pub trajectory: Trajectory,
    pub dims: VehicleDims,
    pub motion: VehicleMotion,
}

impl GroundTruth {
    pub fn state_at(&self, t: f64) -> Option<VehicleState> {
        self.motion.state_at(t)
    }
}

/// Generates vehicle trajectories.
///
/// The first vehicle enters at `t = 0`; later arrivals follow an exponential
/// gap process thinned so that consecutive entries are at least
/// `min_headway` apart. Vehicles arriving after `duration` are not created.
/// Trajectories are sampled at `truth_rate` on the global clock and end when
/// the vehicle passes `end_x` or the scenario ends.
pub fn generate_ground_truth(cfg: &ScenarioConfig) -> Result<Vec<GroundTruth>> {
    cfg.validate()?;
    let t = &cfg.traffic;
    let road = &cfg.road;
    let mut arrivals_rng = keyed_rng(cfg.seed, stream::TRAFFIC, 0);
    let gap = Exp::new(1.0 / t.arrival_mean_gap).map_err(|e| Error::InvalidConfig(format!("arrival gap: {e}")))?;
    let mut arrivals = Vec::with_capacity(t.count);
    let (mut clock, mut last) = (0.0, f64::NEG_INFINITY);
    while arrivals.len() < t.count && clock <= cfg.duration {
        if clock - last >= t.min_headway {
            arrivals.push(clock);
            last = clock;
        }
        clock += gap.sample(&mut arrivals_rng);
    }

    let amplitude = t.speed_perturbation.min(t.speed_std);
    let speed_noise = Normal::new(0.0, 1.0).expect("unit normal");
    let out = arrivals
        .iter()
        .enumerate()
        .map(|(i, &arrival)| {
            let mut rng = keyed_rng(cfg.seed, stream::TRAFFIC, 1 + i as u64);
            let z: f64 = speed_noise.sample(&mut rng);
            let speed = (t.speed_mean + t.speed_std * z.clamp(-3.0, 3.0)).max(amplitude + 0.1);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let lane = if rng.random::<f64>() < t.closing_lane_fraction {
                Lane::Closing
            } else {
                Lane::Surviving
            };
            let d = if rng.random::<f64>() < t.truck_fraction {
                t.truck_dims
            } else {
                t.car_dims
            };
            let mut motion = VehicleMotion {
                arrival,
                departure: cfg.duration,
                start_x: road.start_x,
                speed,
                amplitude,
                period: t.perturbation_period,
                phase,
                lane,
                road: (
                    road.surviving_lane_y,
                    road.closing_lane_y(),
                    road.merge_start,
                    road.merge_end,
                ),
            };
            motion.departure = exit_time(&motion, road.end_x).min(cfg.duration);
            let id = TrackId(i as u64 + 1);
            let k0 = (arrival * cfg.truth_rate - 1e-9).ceil().max(0.0) as u64;
            let mut traj = Trajectory::new(id, SensorSource::GroundTruth);
            let mut k = k0;
            loop {
                let tk = k as f64 / cfg.truth_rate;
                match motion.state_at(tk) {
                    Some(s) => traj.push(tk, s.center)?,
                    None if tk > motion.departure => break,
                    None => {}
                }
                k += 1;
            }
            Ok(GroundTruth {
                id,
                trajectory: traj,
                dims: VehicleDims {
                    length: d[0],
                    width: d[1],
                    height: d[2],
                },
                motion,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out)
}

/// First time the vehicle reaches `end_x` (bisection; `x` is monotone).
fn exit_time(m: &VehicleMotion, end_x: f64) -> f64 {
    let min_speed = m.speed - m.amplitude;
    let (mut lo, mut hi) = (0.0, (end_x - m.start_x) / min_speed + 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if m.x(mid) < end_x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    m.arrival + hi
}

/// First frame time at which each vehicle satisfies `visible`; the
/// per-sensor bias drift is integrated from there.
fn entry_times(
    truth: &[GroundTruth],
    times: &[f64],
    visible: impl Fn(&VehicleState) -> bool + Sync,
) -> Vec<Option<f64>> {
    truth
        .par_iter()
        .map(|g| {
            let start = times.partition_point(|&t| t < g.motion.arrival);
            times[start..]
                .iter()
                .take_while(|&&t| t <= g.motion.departure)
                .find(|&&t| g.state_at(t).is_some_and(|s| visible(&s)))
                .copied()
        })
        .collect()
}

fn camera_visible(cfg: &ScenarioConfig, p: WorldPoint) -> bool {
    let cam = &cfg.camera;
    p.distance(&cam.position) <= cfg.camera_max_range && cam.project_to_pixel(p).is_some()
}

fn lidar_covers(cfg: &ScenarioConfig, p: WorldPoint) -> bool {
    let a = cfg.lidar.area;
    (a[0]..=a[1]).contains(&p.x)
        && (a[2]..=a[3]).contains(&p.y)
        && p.distance(&cfg.lidar.position) <= cfg.lidar.max_range
}

fn gaussian(rng: &mut impl Rng, std: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
    std * z
}

/// Simulated detector output: each vehicle's ground reference point,
/// offset by the camera biases, projected through the true camera, jittered
/// and randomly dropped. Sorted by time, then track id.
pub fn render_camera(truth: &[GroundTruth], cfg: &ScenarioConfig) -> Vec<PixelDetection> {
    let times = cfg.camera_frame_times();
    let entries = entry_times(truth, &times, |s| camera_visible(cfg, s.center));
    let true_cam = cfg.true_camera();
    let n = &cfg.noise;
    times
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, &t)| {
            let mut rng = keyed_rng(cfg.seed, stream::CAMERA, k as u64);
            let mut out = Vec::new();
            for (g, entry) in truth.iter().zip(&entries) {
                let (Some(s), Some(t0)) = (g.state_at(t), entry) else {
                    continue;
                };
                if t < *t0 || !camera_visible(cfg, s.center) {
                    continue;
                }
                // Draw every variate even when dropped so streams stay aligned.
                let drop = rng.random::<f64>() < n.camera_dropout;
                let (ju, jv) = (
                    gaussian(&mut rng, n.pixel_jitter_px),
                    gaussian(&mut rng, n.pixel_jitter_px),
                );
                if drop {
                    continue;
                }
                let p = WorldPoint::ground(
                    s.center.x + n.camera_lon_bias + n.camera_lon_drift * (t - t0),
                    s.center.y + n.camera_lat_bias,
                );
                let Some(px) = true_cam.project_to_pixel(p) else {
                    continue;
                };
                let (u, v) = (px.u + ju, px.v + jv);
                if !(0.0..=cfg.camera.width_px as f64).contains(&u) || !(0.0..=cfg.camera.height_px as f64).contains(&v)
                {
                    continue;
                }
                out.push(PixelDetection {
                    t,
                    track_id: g.id,
                    u,
                    v,
                    conf: 0.9,
                });
            }
            out
        })
        .collect()
}

fn bbox_at(g: &GroundTruth, s: &VehicleState, shift_x: f64) -> BoundingBox3D {
    BoundingBox3D {
        center: WorldPoint::new(s.center.x + shift_x, s.center.y, g.dims.height / 2.0),
        length: g.dims.length,
        width: g.dims.width,
        height: g.dims.height,
        yaw: s.heading.to_degrees(),
    }
}

/// Fast-path LiDAR: one noisy box per covered vehicle and frame, carrying
/// the true vehicle id. The longitudinal bias grows at `lidar_lon_drift`
/// from the first frame the vehicle is covered.
pub fn render_lidar_detections(truth: &[GroundTruth], cfg: &ScenarioConfig) -> Vec<TimedDetection> {
    let times = cfg.lidar_frame_times();
    let entries = entry_times(truth, &times, |s| lidar_covers(cfg, s.center));
    let n = &cfg.noise;
    times
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, &t)| {
            let mut rng = keyed_rng(cfg.seed, stream::LIDAR_DETECTIONS, k as u64);
            let mut out = Vec::new();
            for (g, entry) in truth.iter().zip(&entries) {
                let (Some(s), Some(t0)) = (g.state_at(t), entry) else {
                    continue;
                };
                if t < *t0 || !lidar_covers(cfg, s.center) {
                    continue;
                }
                let drop = rng.random::<f64>() < n.lidar_dropout;
                let (ex, ey) = (
                    gaussian(&mut rng, n.lidar_centroid_std),
                    gaussian(&mut rng, n.lidar_centroid_std),
                );
                if drop {
                    continue;
                }
                let mut bbox = bbox_at(g, &s, n.lidar_lon_drift * (t - t0));
                bbox.center.x += ex;
                bbox.center.y += ey;
                out.push(TimedDetection {
                    t,
                    track_id: Some(g.id),
                    bbox,
                });
            }
            out
        })
        .collect()
}

/// Oriented box in the scene, used for surface sampling and occlusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneBox {
    pub bbox: BoundingBox3D,
    pub intensity: f64,
}

impl SceneBox {
    fn frame(&self) -> (f64, f64) {
        self.bbox.yaw.to_radians().sin_cos()
    }

    fn local_coords(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.frame();
        let (dx, dy) = (p[0] - self.bbox.center.x, p[1] - self.bbox.center.y);
        [c * dx + s * dy, -s * dx + c * dy, p[2] - self.bbox.center.z]
    }

    fn world_coords(&self, l: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.frame();
        [
            self.bbox.center.x + c * l[0] - s * l[1],
            self.bbox.center.y + s * l[0] + c * l[1],
            self.bbox.center.z + l[2],
        ]
    }

    fn half(&self) -> [f64; 3] {
        [self.bbox.length / 2.0, self.bbox.width / 2.0, self.bbox.height / 2.0]
    }

    /// Whether the open segment `from → to` passes through the box interior.
    pub fn blocks(&self, from: [f64; 3], to: [f64; 3]) -> bool {
        let (a, b) = (self.local_coords(from), self.local_coords(to));
        let h = self.half();
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for i in 0..3 {
            let d = b[i] - a[i];
            if d.abs() < 1e-15 {
                if a[i].abs() >= h[i] {
                    return false;
                }
                continue;
            }
            let (mut ta, mut tb) = ((-h[i] - a[i]) / d, (h[i] - a[i]) / d);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
        // Tolerances keep points sampled on this box's own faces, or grazing
        // a neighbor's surface, from counting as blocked.
        t1 - t0 > 1e-9 && t0 < 1.0 - 1e-9 && t1 > 1e-9
    }

    /// Faces visible from `eye`: `(local axis, sign)` with the outward normal
    /// pointing toward the eye. The bottom face is never visible.
    fn visible_faces(&self, eye: [f64; 3]) -> Vec<(usize, f64)> {
        let e = self.local_coords(eye);
        let h = self.half();
        let mut faces = Vec::new();
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                if axis == 2 && sign < 0.0 {
                    continue;
                }
                if sign * e[axis] > h[axis] {
                    faces.push((axis, sign));
                }
            }
        }
        faces
    }
}

/// Renders one LiDAR sweep of arbitrary boxes: visible faces sampled at
/// `face_density`, ground points over the covered area, low-intensity
/// clutter, range noise along each ray, range and vertical field-of-view
/// cuts, and occlusion by nearer boxes. `frame_index` keys the random
/// stream.
pub fn render_boxes(boxes: &[SceneBox], cfg: &ScenarioConfig, frame_index: u64, t: f64) -> PointCloud {
    let lc = &cfg.lidar;
    let eye = [lc.position.x, lc.position.y, lc.position.z];
    let mut rng = keyed_rng(cfg.seed, stream::LIDAR_CLOUD, frame_index);
    let mut raw: Vec<(LidarPoint, Option<usize>)> = Vec::new();

    for (bi, b) in boxes.iter().enumerate() {
        let h = b.half();
        for (axis, sign) in b.visible_faces(eye) {
            let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
            let area = 4.0 * h[ua] * h[va];
            let count = (area * lc.face_density).round() as usize;
            for _ in 0..count {
                let mut l = [0.0; 3];
                l[axis] = sign * h[axis];
                l[ua] = rng.random_range(-h[ua]..=h[ua]);
                l[va] = rng.random_range(-h[va]..=h[va]);
                let w = b.world_coords(l);
                let inten = b.intensity + rng.random_range(-10.0..=10.0);
                raw.push((LidarPoint::new(w[0], w[1], w[2], inten), Some(bi)));
            }
        }
    }

    let a = lc.area;
    let ground_count = ((a[1] - a[0]) * (a[3] - a[2]) * lc.ground_density).round() as usize;
    let road = &cfg.road;
    let marking_y = road.surviving_lane_y + road.lane_width / 2.0;
    for _ in 0..ground_count {
        let x = rng.random_range(a[0]..=a[1]);
        let y = rng.random_range(a[2]..=a[3]);
        let z = gaussian(&mut rng, lc.ground_z_noise);
        let on_marking = (y - marking_y).abs() < 0.1;
        let inten = if on_marking { 150.0 } else { 20.0 } + rng.random_range(-5.0..=5.0);
        raw.push((LidarPoint::new(x, y, z, inten), None));
    }
    for _ in 0..lc.spurious_points {
        let x = rng.random_range(a[0]..=a[1]);
        let y = rng.random_range(a[2]..=a[3]);
        let z = rng.random_range(0.3..=3.0);
        let inten = rng.random_range(0.0..4.0);
        raw.push((LidarPoint::new(x, y, z, inten), None));
    }

    let (el_lo, el_hi) = (lc.vertical_fov[0].to_radians(), lc.vertical_fov[1].to_radians());
    let mut points = Vec::with_capacity(raw.len());
    for (mut p, owner) in raw {
        let noise = gaussian(&mut rng, cfg.noise.lidar_range_noise);
        let d = [p.x - eye[0], p.y - eye[1], p.z - eye[2]];
        let range = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if range == 0.0 || range > lc.max_range {
            continue;
        }
        let el = (d[2] / range).asin();
        if el < el_lo || el > el_hi {
            continue;
        }
        let target = p.xyz();
        if boxes
            .iter()
            .enumerate()
            .any(|(j, b)| Some(j) != owner && b.blocks(eye, target))
        {
            continue;
        }
        if noise != 0.0 {
            let s = (range + noise) / range;
            p.x = eye[0] + d[0] * s;
            p.y = eye[1] + d[1] * s;
            p.z = eye[2] + d[2] * s;
        }
        points.push(p);
    }
    PointCloud::new(FrameTag::World, t, points)
}

/// Renders scenario LiDAR sweeps one frame at a time, so long captures can
/// be streamed without holding every cloud in memory.
pub struct CloudRenderer<'a> {
    truth: &'a [GroundTruth],
    cfg: &'a ScenarioConfig,
    times: Vec<f64>,
    entries: Vec<Option<f64>>,
}

impl<'a> CloudRenderer<'a> {
    pub fn new(truth: &'a [GroundTruth], cfg: &'a ScenarioConfig) -> Self {
        let times = cfg.lidar_frame_times();
        let entries = entry_times(truth, &times, |s| lidar_covers(cfg, s.center));
        Self {
            truth,
            cfg,
            times,
            entries,
        }
    }

    pub fn frame_times(&self) -> &[f64] {
        &self.times
    }

    /// The sweep at `frame_index`; indices past the end extrapolate the
    /// frame clock.
    pub fn render(&self, frame_index: usize) -> PointCloud {
        let cfg = self.cfg;
        let t = self
            .times
            .get(frame_index)
            .copied()
            .unwrap_or(frame_index as f64 / cfg.frame_rate_lidar);
        let boxes: Vec<SceneBox> = self
            .truth
            .iter()
            .zip(&self.entries)
            .filter_map(|(g, entry)| {
                let s = g.state_at(t)?;
                let shift = entry
                    .filter(|t0| t >= *t0)
                    .map_or(0.0, |t0| cfg.noise.lidar_lon_drift * (t - t0));
                Some(SceneBox {
                    bbox: bbox_at(g, &s, shift),
                    intensity: 80.0 + 10.0 * (g.id.0 % 5) as f64,
                })
            })
            .collect();
        render_boxes(&boxes, cfg, frame_index as u64, t)
    }
}

/// Renders the LiDAR sweep at frame `frame_index` of the scenario.
pub fn render_lidar_cloud(truth: &[GroundTruth], cfg: &ScenarioConfig, frame_index: usize) -> PointCloud {
    CloudRenderer::new(truth, cfg).render(frame_index)
}

/// Every LiDAR sweep of the scenario, in frame order.
pub fn render_lidar_clouds(truth: &[GroundTruth], cfg: &ScenarioConfig) -> Vec<PointCloud> {
    let r = CloudRenderer::new(truth, cfg);
    (0..r.frame_times().len())
        .into_par_iter()
        .map(|k| r.render(k))
        .collect()
}

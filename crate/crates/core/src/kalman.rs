//! Constant-velocity Kalman filter over the state `[x, y, vx, vy]`.
//!
//! The same predict/update pair drives single-sensor smoothing
//! ([`smooth_track`]) and the sequential camera-then-LiDAR fusion loop
//! ([`fuse_step`], [`run_fusion`]). Measurements observe position only.
//! Covariance updates use the Joseph form and are re-symmetrized after
//! every step.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{bucket_times, SensorSource, TrackId, Trajectory, WorldPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub x: Vector4<f64>,
    pub p: Matrix4<f64>,
    pub t: f64,
}

impl FilterState {
    pub fn position(&self) -> WorldPoint {
        WorldPoint::ground(self.x[0], self.x[1])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.x[2], self.x[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    /// White-noise acceleration intensity, m/s².
    pub sigma_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    pub sensor: SensorSource,
    pub r: Matrix2<f64>,
}

impl MeasurementModel {
    pub fn new(sensor: SensorSource, r: Matrix2<f64>) -> Self {
        Self { sensor, r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub z: Vector2<f64>,
    pub t: f64,
    pub sensor: SensorSource,
}

impl Measurement {
    pub fn new(t: f64, x: f64, y: f64, sensor: SensorSource) -> Self {
        Self {
            z: Vector2::new(x, y),
            t,
            sensor,
        }
    }
}

/// Residual and its covariance from one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Innovation {
    pub y: Vector2<f64>,
    pub s: Matrix2<f64>,
}

impl Innovation {
    /// Normalized innovation squared, `yᵀ S⁻¹ y`.
    pub fn nis(&self) -> f64 {
        self.s
            .try_inverse()
            .map_or(f64::NAN, |si| (self.y.transpose() * si * self.y)[0])
    }
}

/// Position-only observation matrix.
pub fn observation_matrix() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

/// State transition `F` and discretized white-noise-acceleration `Q`.
pub fn make_f_q(dt: f64, pm: &ProcessModel) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveDt(dt));
    }
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    let q2 = pm.sigma_a * pm.sigma_a;
    let (a, b, c) = (dt.powi(4) / 4.0 * q2, dt.powi(3) / 2.0 * q2, dt * dt * q2);
    #[rustfmt::skip]
    let q = Matrix4::new(
        a, 0.0, b, 0.0,
        0.0, a, 0.0, b,
        b, 0.0, c, 0.0,
        0.0, b, 0.0, c,
    );
    Ok((f, q))
}

fn symmetrize(p: &Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

pub fn predict(state: &FilterState, dt: f64, pm: &ProcessModel) -> Result<FilterState> {
    let (f, q) = make_f_q(dt, pm)?;
    Ok(FilterState {
        x: f * state.x,
        p: symmetrize(&(f * state.p * f.transpose() + q)),
        t: state.t + dt,
    })
}

/// Measurement update. The caller is responsible for predicting to `m.t`.
pub fn update(state: &FilterState, m: &Measurement, mm: &MeasurementModel) -> Result<(FilterState, Innovation)> {
    let h = observation_matrix();
    let y = m.z - h * state.x;
    let s = h * state.p * h.transpose() + mm.r;
    let s_inv = s.try_inverse().ok_or(Error::FilterDivergence)?;
    if !s_inv.iter().all(|v| v.is_finite()) {
        return Err(Error::FilterDivergence);
    }
    let k: Matrix4x2<f64> = state.p * h.transpose() * s_inv;
    let i_kh = Matrix4::identity() - k * h;
    let p = i_kh * state.p * i_kh.transpose() + k * mm.r * k.transpose();
    Ok((
        FilterState {
            x: state.x + k * y,
            p: symmetrize(&p),
            t: state.t,
        },
        Innovation { y, s },
    ))
}

/// How a filter is started from its first measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitPolicy {
    pub initial_velocity: [f64; 2],
    /// Velocity standard deviation, m/s.
    pub velocity_std: f64,
    /// Full diagonal of `P₀`; overrides the `R`-derived position variances
    /// and `velocity_std` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0_diag: Option<[f64; 4]>,
}

impl Default for InitPolicy {
    fn default() -> Self {
        Self {
            initial_velocity: [0.0, 0.0],
            velocity_std: 5.0,
            p0_diag: None,
        }
    }
}

impl InitPolicy {
    pub fn initial_state(&self, m: &Measurement, mm: &MeasurementModel) -> FilterState {
        let vv = self.velocity_std * self.velocity_std;
        let d = self.p0_diag.unwrap_or([mm.r[(0, 0)], mm.r[(1, 1)], vv, vv]);
        FilterState {
            x: Vector4::new(m.z[0], m.z[1], self.initial_velocity[0], self.initial_velocity[1]),
            p: Matrix4::from_diagonal(&Vector4::from(d)),
            t: m.t,
        }
    }
}

/// Filters one sensor's time-ordered measurements, returning the posterior
/// state after each.
pub fn filter_measurements(
    measurements: &[Measurement],
    pm: &ProcessModel,
    mm: &MeasurementModel,
    init: &InitPolicy,
) -> Result<Vec<FilterState>> {
    let Some(first) = measurements.first() else {
        return Ok(Vec::new());
    };
    let mut state = init.initial_state(first, mm);
    let mut out = Vec::with_capacity(measurements.len());
    out.push(state);
    for m in &measurements[1..] {
        let dt = m.t - state.t;
        if dt < 0.0 {
            return Err(Error::InvalidInput(format!("measurements out of order at t={}", m.t)));
        }
        if dt > 0.0 {
            state = predict(&state, dt, pm)?;
        }
        state = update(&state, m, mm)?.0;
        out.push(state);
    }
    Ok(out)
}

/// Smooths a single-sensor trajectory; the output keeps its id and source.
pub fn smooth_track(
    track: &Trajectory,
    pm: &ProcessModel,
    mm: &MeasurementModel,
    init: &InitPolicy,
) -> Result<Trajectory> {
    let ms: Vec<Measurement> = track
        .samples()
        .iter()
        .map(|s| Measurement::new(s.t, s.position.x, s.position.y, track.source()))
        .collect();
    let states = filter_measurements(&ms, pm, mm, init)?;
    Trajectory::from_points(
        track.track_id(),
        track.source(),
        states.iter().map(|s| (s.t, s.position())),
    )
}

/// One fusion frame: predict by `dt` (skipped when `dt == 0`), then apply the
/// camera update followed by the LiDAR update for whichever are present.
#[allow(clippy::too_many_arguments)]
pub fn fuse_step(
    state: &FilterState,
    camera: Option<&Measurement>,
    lidar: Option<&Measurement>,
    dt: f64,
    pm: &ProcessModel,
    mm_cam: &MeasurementModel,
    mm_lidar: &MeasurementModel,
) -> Result<FilterState> {
    let mut s = if dt == 0.0 { *state } else { predict(state, dt, pm)? };
    if let Some(m) = camera {
        s = update(&s, m, mm_cam)?.0;
    }
    if let Some(m) = lidar {
        s = update(&s, m, mm_lidar)?.0;
    }
    Ok(s)
}

/// Filter settings shared by smoothing and fusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub sigma_a: f64,
    /// Row-major 2×2 camera measurement covariance, m².
    pub r_camera: [f64; 4],
    /// Row-major 2×2 LiDAR measurement covariance, m².
    pub r_lidar: [f64; 4],
    pub init: InitPolicy,
    /// Stamps closer than this (seconds) form one fusion frame.
    pub frame_tolerance: f64,
    /// Insert prediction-only frames across gaps in the measurement stream.
    pub fill_gaps: bool,
    /// Smooth each single-sensor track before fusing it.
    pub use_smoothed_inputs: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            sigma_a: 2.0,
            r_camera: [4.0, 0.0, 0.0, 1.0],
            r_lidar: [0.25, 0.0, 0.0, 0.25],
            init: InitPolicy::default(),
            frame_tolerance: 0.025,
            fill_gaps: true,
            use_smoothed_inputs: false,
        }
    }
}

fn spd(r: &[f64; 4], name: &str) -> Result<Matrix2<f64>> {
    let m = Matrix2::new(r[0], r[1], r[2], r[3]);
    let symmetric = (r[1] - r[2]).abs() <= 1e-12 * (r[0].abs() + r[3].abs()).max(1.0);
    if !r.iter().all(|v| v.is_finite()) || !symmetric || m.cholesky().is_none() {
        return Err(Error::InvalidConfig(format!(
            "filter.{name} must be symmetric positive definite"
        )));
    }
    Ok(m)
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_a >= 0.0) || !self.sigma_a.is_finite() {
            return Err(Error::InvalidConfig("filter.sigma_a must be non-negative".into()));
        }
        spd(&self.r_camera, "r_camera")?;
        spd(&self.r_lidar, "r_lidar")?;
        if !(self.frame_tolerance >= 0.0) {
            return Err(Error::InvalidConfig(
                "filter.frame_tolerance must be non-negative".into(),
            ));
        }
        if !(self.init.velocity_std >= 0.0) {
            return Err(Error::InvalidConfig(
                "filter.init.velocity_std must be non-negative".into(),
            ));
        }
        if let Some(d) = self.init.p0_diag {
            if d.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::InvalidConfig(
                    "filter.init.p0_diag entries must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn process_model(&self) -> ProcessModel {
        ProcessModel { sigma_a: self.sigma_a }
    }

    pub fn camera_model(&self) -> MeasurementModel {
        let r = self.r_camera;
        MeasurementModel::new(SensorSource::Camera, Matrix2::new(r[0], r[1], r[2], r[3]))
    }

    pub fn lidar_model(&self) -> MeasurementModel {
        let r = self.r_lidar;
        MeasurementModel::new(SensorSource::Lidar, Matrix2::new(r[0], r[1], r[2], r[3]))
    }

    /// Measurement model for a trajectory source: camera-like sources use
    /// the camera covariance, everything else the LiDAR one.
    pub fn model_for(&self, source: SensorSource) -> MeasurementModel {
        match source {
            SensorSource::Camera | SensorSource::RadarCamera => self.camera_model(),
            _ => MeasurementModel {
                sensor: source,
                ..self.lidar_model()
            },
        }
    }

    /// Filters one trajectory exactly as [`run_fusion`] would with no
    /// partner track (same bucketing and gap filling); the output keeps the
    /// input's id and source.
    pub fn smooth(&self, track: &Trajectory) -> Result<Trajectory> {
        let cfg = FilterConfig {
            use_smoothed_inputs: false,
            ..self.clone()
        };
        let camera_like = matches!(track.source(), SensorSource::Camera | SensorSource::RadarCamera);
        let (c, l) = if camera_like {
            (Some(track), None)
        } else {
            (None, Some(track))
        };
        Ok(run_fusion(track.track_id(), c, l, &cfg)?.relabeled(track.track_id(), track.source()))
    }
}

fn median_period(track: Option<&Trajectory>) -> Option<f64> {
    let t: Vec<f64> = track?.times().collect();
    if t.len() < 2 {
        return None;
    }
    let mut d: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    Some(d[d.len() / 2])
}

/// Fuses a camera track and a LiDAR track of the same object.
///
/// Both streams are merged onto the union of their stamps, bucketed at the
/// frame tolerance, and filtered with [`fuse_step`]. The filter starts from
/// the first frame's camera measurement when present. With `fill_gaps`,
/// gaps longer than 1.5 periods of the denser stream receive evenly spaced
/// prediction-only frames, so the output is at least as dense as the denser
/// input. Either track may be absent or empty, in which case the result is
/// the other track filtered alone.
pub fn run_fusion(
    track_id: TrackId,
    camera: Option<&Trajectory>,
    lidar: Option<&Trajectory>,
    cfg: &FilterConfig,
) -> Result<Trajectory> {
    let smoothed;
    let (camera, lidar) = if cfg.use_smoothed_inputs {
        smoothed = (
            camera.map(|c| cfg.smooth(c)).transpose()?,
            lidar.map(|l| cfg.smooth(l)).transpose()?,
        );
        (smoothed.0.as_ref(), smoothed.1.as_ref())
    } else {
        (camera, lidar)
    };

    let mut stamps: Vec<Measurement> = Vec::new();
    for (track, sensor) in [(camera, SensorSource::Camera), (lidar, SensorSource::Lidar)] {
        if let Some(tr) = track {
            stamps.extend(
                tr.samples()
                    .iter()
                    .map(|s| Measurement::new(s.t, s.position.x, s.position.y, sensor)),
            );
        }
    }
    let mut out = Trajectory::new(track_id, SensorSource::Fused);
    if stamps.is_empty() {
        return Ok(out);
    }
    // Stable sort keeps camera before LiDAR at equal stamps.
    stamps.sort_by(|a, b| a.t.total_cmp(&b.t));
    let times: Vec<f64> = stamps.iter().map(|m| m.t).collect();
    let frames = bucket_times(&times, cfg.frame_tolerance);

    let period = match (median_period(camera), median_period(lidar)) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
    .filter(|p| *p > 0.0 && cfg.fill_gaps);

    let pm = cfg.process_model();
    let (mm_cam, mm_lidar) = (cfg.camera_model(), cfg.lidar_model());
    let mut state: Option<FilterState> = None;
    for (frame_t, members) in frames {
        let ms: Vec<&Measurement> = members.iter().map(|&i| &stamps[i]).collect();
        // Camera updates precede LiDAR updates within a frame.
        let ordered: Vec<&Measurement> = ms
            .iter()
            .filter(|m| m.sensor == SensorSource::Camera)
            .chain(ms.iter().filter(|m| m.sensor == SensorSource::Lidar))
            .copied()
            .collect();
        let mut s = match state {
            None => {
                let first = ordered[0];
                let mm = if first.sensor == SensorSource::Camera {
                    &mm_cam
                } else {
                    &mm_lidar
                };
                let mut s = cfg.init.initial_state(first, mm);
                s.t = frame_t;
                s
            }
            Some(prev) => {
                if let Some(period) = period {
                    let gap = frame_t - prev.t;
                    let n = (gap / period).round();
                    if n >= 2.0 {
                        let mut coast = prev;
                        for k in 1..n as usize {
                            let tk = prev.t + gap * k as f64 / n;
                            coast = predict(&coast, tk - coast.t, &pm)?;
                            out.push(tk, coast.position())?;
                        }
                        state = Some(coast);
                    }
                }
                let base = state.expect("set above");
                predict(&base, frame_t - base.t, &pm)?
            }
        };
        let skip_first = state.is_none();
        for m in &ordered[usize::from(skip_first)..] {
            let mm = if m.sensor == SensorSource::Camera {
                &mm_cam
            } else {
                &mm_lidar
            };
            s = update(&s, m, mm)?.0;
        }
        out.push(frame_t, s.position())?;
        state = Some(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(x: [f64; 4], p: Matrix4<f64>) -> FilterState {
        FilterState {
            x: Vector4::from(x),
            p,
            t: 0.0,
        }
    }

    fn cam_r(r: Matrix2<f64>) -> MeasurementModel {
        MeasurementModel::new(SensorSource::Camera, r)
    }

    #[test]
    fn q_entries() {
        let (f, q) = make_f_q(1.0, &ProcessModel { sigma_a: 1.0 }).unwrap();
        assert_eq!((q[(0, 0)], q[(0, 2)], q[(2, 2)]), (0.25, 0.5, 1.0));
        assert_eq!(q, q.transpose());
        assert_eq!(f[(0, 2)], 1.0);
        let (_, q) = make_f_q(0.1, &ProcessModel { sigma_a: 1.0 }).unwrap();
        assert!((q[(1, 1)] - 2.5e-5).abs() < 1e-18);
        assert!((q[(1, 3)] - 5e-4).abs() < 1e-16);
        assert!((q[(3, 3)] - 1e-2).abs() < 1e-15);
        let (f, _) = make_f_q(0.5, &ProcessModel { sigma_a: 1.0 }).unwrap();
        assert_eq!(f * Vector4::new(0.0, 0.0, 2.0, 0.0), Vector4::new(1.0, 0.0, 2.0, 0.0));
    }

    #[test]
    fn non_positive_dt_rejected() {
        let pm = ProcessModel { sigma_a: 1.0 };
        assert!(matches!(make_f_q(0.0, &pm), Err(Error::NonPositiveDt(_))));
        assert!(predict(&state([0.0; 4], Matrix4::identity()), -1.0, &pm).is_err());
    }

    #[test]
    fn predict_examples() {
        let s = predict(
            &state([0.0, 0.0, 1.0, 0.0], Matrix4::identity()),
            1.0,
            &ProcessModel { sigma_a: 0.0 },
        )
        .unwrap();
        assert_eq!(s.x, Vector4::new(1.0, 0.0, 1.0, 0.0));
        assert_eq!(s.t, 1.0);
        let pm = ProcessModel { sigma_a: 1.0 };
        let s = predict(&state([0.0; 4], Matrix4::zeros()), 1.0, &pm).unwrap();
        assert_eq!(s.p, make_f_q(1.0, &pm).unwrap().1);
        let s = predict(&state([5.0, 3.0, -1.0, 2.0], Matrix4::identity()), 2.0, &pm).unwrap();
        assert_eq!(s.x, Vector4::new(3.0, 7.0, -1.0, 2.0));
    }

    #[test]
    fn update_examples() {
        let m = Measurement::new(0.0, 1.0, 0.0, SensorSource::Camera);
        let (s, inn) = update(&state([0.0; 4], Matrix4::identity()), &m, &cam_r(Matrix2::identity())).unwrap();
        assert!((s.x - Vector4::new(0.5, 0.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((s.p[(0, 0)] - 0.5).abs() < 1e-15 && (s.p[(1, 1)] - 0.5).abs() < 1e-15);
        assert_eq!((s.p[(2, 2)], s.p[(3, 3)]), (1.0, 1.0));
        assert_eq!(inn.y, Vector2::new(1.0, 0.0));

        let m = Measurement::new(0.0, 3.0, -2.0, SensorSource::Camera);
        let (s, _) = update(
            &state([0.0; 4], Matrix4::identity()),
            &m,
            &cam_r(Matrix2::identity() * 1e-12),
        )
        .unwrap();
        assert!((s.x[0] - 3.0).abs() < 1e-6 && (s.x[1] + 2.0).abs() < 1e-6);

        let prior = state([2.0, 1.0, 0.5, 0.0], Matrix4::identity() * 3.0);
        let m = Measurement::new(0.0, 2.0, 1.0, SensorSource::Camera);
        let (s, _) = update(&prior, &m, &cam_r(Matrix2::identity())).unwrap();
        assert_eq!(s.x, prior.x);
        assert!(s.p.trace() < prior.p.trace());
    }

    #[test]
    fn singular_innovation_is_divergence() {
        let m = Measurement::new(0.0, 1.0, 0.0, SensorSource::Camera);
        let res = update(&state([0.0; 4], Matrix4::zeros()), &m, &cam_r(Matrix2::zeros()));
        assert!(matches!(res, Err(Error::FilterDivergence)));
    }

    #[test]
    fn fuse_step_equal_sensors_is_half_r() {
        let pm = ProcessModel { sigma_a: 1.0 };
        let prior = state([0.0, 0.0, 1.0, 0.0], Matrix4::identity() * 2.0);
        let r = Matrix2::new(0.8, 0.1, 0.1, 0.5);
        let m = Measurement::new(0.1, 0.4, -0.2, SensorSource::Camera);
        let both = fuse_step(&prior, Some(&m), Some(&m), 0.1, &pm, &cam_r(r), &cam_r(r)).unwrap();
        let pred = predict(&prior, 0.1, &pm).unwrap();
        let single = update(&pred, &m, &cam_r(r / 2.0)).unwrap().0;
        assert!((both.x - single.x).norm() < 1e-12);
        assert!((both.p - single.p).norm() < 1e-12);
    }

    #[test]
    fn fuse_step_optional_branches() {
        let pm = ProcessModel { sigma_a: 1.0 };
        let prior = state([0.0, 0.0, 2.0, 1.0], Matrix4::identity());
        let m = Measurement::new(0.1, 0.3, 0.1, SensorSource::Lidar);
        let lidar_mm = MeasurementModel::new(SensorSource::Lidar, Matrix2::identity() * 0.25);
        let a = fuse_step(&prior, None, Some(&m), 0.1, &pm, &cam_r(Matrix2::identity()), &lidar_mm).unwrap();
        let b = update(&predict(&prior, 0.1, &pm).unwrap(), &m, &lidar_mm).unwrap().0;
        assert_eq!(a, b);

        let mut s = prior;
        for k in 1..=3 {
            let next = fuse_step(&s, None, None, 0.1, &pm, &cam_r(Matrix2::identity()), &lidar_mm).unwrap();
            assert!(next.p.trace() > s.p.trace());
            assert!((next.x[0] - 0.2 * k as f64).abs() < 1e-12);
            assert!((next.x[1] - 0.1 * k as f64).abs() < 1e-12);
            s = next;
        }
    }

    #[test]
    fn smooth_single_and_empty() {
        let cfg = FilterConfig::default();
        let tr =
            Trajectory::from_points(TrackId(4), SensorSource::Lidar, [(1.0, WorldPoint::ground(3.0, 4.0))]).unwrap();
        let out = cfg.smooth(&tr).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.samples()[0].position, WorldPoint::ground(3.0, 4.0));
        assert_eq!(out.source(), SensorSource::Lidar);
        let empty = Trajectory::new(TrackId(1), SensorSource::Camera);
        assert!(cfg.smooth(&empty).unwrap().is_empty());
    }

    #[test]
    fn fusion_is_as_dense_as_camera() {
        let cam = Trajectory::from_points(
            TrackId(1),
            SensorSource::Camera,
            (0..=100).map(|i| (i as f64 * 0.1, WorldPoint::ground(20.0 * i as f64 * 0.1, 0.0))),
        )
        .unwrap();
        let lid = Trajectory::from_points(
            TrackId(2),
            SensorSource::Lidar,
            (0..=20).map(|i| (i as f64 * 0.5, WorldPoint::ground(20.0 * i as f64 * 0.5, 0.0))),
        )
        .unwrap();
        let fused = run_fusion(TrackId(1), Some(&cam), Some(&lid), &FilterConfig::default()).unwrap();
        assert!(fused.len() >= 100);
        assert_eq!(fused.source(), SensorSource::Fused);
    }

    #[test]
    fn fusion_fills_gaps() {
        let times = [0.0, 0.1, 0.2, 0.3, 0.7, 0.8, 0.9];
        let cam = Trajectory::from_points(
            TrackId(1),
            SensorSource::Camera,
            times.iter().map(|&t| (t, WorldPoint::ground(10.0 * t, 0.0))),
        )
        .unwrap();
        let fused = run_fusion(TrackId(1), Some(&cam), None, &FilterConfig::default()).unwrap();
        let t: Vec<f64> = fused.times().collect();
        assert_eq!(t.len(), 10);
        assert!(t.windows(2).all(|w| w[1] - w[0] < 0.1 + 1e-9));
    }

    #[test]
    fn fusion_of_nothing_is_empty() {
        assert!(run_fusion(TrackId(1), None, None, &FilterConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(FilterConfig::default().validate().is_ok());
        let bad = FilterConfig {
            r_camera: [1.0, 2.0, 2.0, 1.0],
            ..FilterConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
    }
}

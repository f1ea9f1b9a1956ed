//! World-frame conventions and the timestamped trajectory container.
//!
//! The world frame is shared by every module: `x` runs longitudinally along
//! the roadway centerline in the direction of travel, `y` is lateral and `z`
//! points up with the road surface at `z = 0`. Units are meters and seconds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// A point on the road surface.
    pub const fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &WorldPoint) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Distance in the road plane, ignoring height.
    pub fn distance_xy(&self, other: &WorldPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &WorldPoint, s: f64) -> WorldPoint {
        WorldPoint {
            x: self.x + s * (other.x - self.x),
            y: self.y + s * (other.y - self.y),
            z: self.z + s * (other.z - self.z),
        }
    }
}

/// Opaque per-source track identity. Identity across sources is only
/// established by the association module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackId(pub u64);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensorSource {
    Camera,
    Lidar,
    RadarCamera,
    Gps,
    Fused,
    GroundTruth,
    Average,
}

impl SensorSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SensorSource::Camera => "camera",
            SensorSource::Lidar => "lidar",
            SensorSource::RadarCamera => "radar-camera",
            SensorSource::Gps => "gps",
            SensorSource::Fused => "fused",
            SensorSource::GroundTruth => "ground-truth",
            SensorSource::Average => "average",
        }
    }
}

impl fmt::Display for SensorSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensorSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "camera" => SensorSource::Camera,
            "lidar" => SensorSource::Lidar,
            "radar-camera" => SensorSource::RadarCamera,
            "gps" => SensorSource::Gps,
            "fused" => SensorSource::Fused,
            "ground-truth" => SensorSource::GroundTruth,
            "average" => SensorSource::Average,
            other => return Err(Error::InvalidInput(format!("unknown sensor source '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub track_id: TrackId,
    pub position: WorldPoint,
    pub source: SensorSource,
}

/// Samples of one object seen by one source, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    track_id: TrackId,
    source: SensorSource,
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(track_id: TrackId, source: SensorSource) -> Self {
        Self {
            track_id,
            source,
            samples: Vec::new(),
        }
    }

    /// Builds a trajectory from `(t, position)` pairs, which must be strictly
    /// increasing in time.
    pub fn from_points(
        track_id: TrackId,
        source: SensorSource,
        points: impl IntoIterator<Item = (f64, WorldPoint)>,
    ) -> Result<Self> {
        let mut traj = Self::new(track_id, source);
        for (t, p) in points {
            traj.push(t, p)?;
        }
        Ok(traj)
    }

    pub fn push(&mut self, t: f64, position: WorldPoint) -> Result<()> {
        if !t.is_finite() || !position.is_finite() {
            return Err(Error::InvalidInput(format!(
                "track {}: non-finite sample at t={t}",
                self.track_id
            )));
        }
        if let Some(last) = self.samples.last() {
            if t <= last.t {
                return Err(Error::InvalidInput(format!(
                    "track {} ({}): sample time {t} does not follow {}",
                    self.track_id, self.source, last.t
                )));
            }
        }
        self.samples.push(TrajectorySample {
            t,
            track_id: self.track_id,
            position,
            source: self.source,
        });
        Ok(())
    }

    pub fn track_id(&self) -> TrackId {
        self.track_id
    }

    pub fn source(&self) -> SensorSource {
        self.source
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> Option<f64> {
        self.samples.first().map(|s| s.t)
    }

    pub fn end_time(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn positions(&self) -> impl Iterator<Item = WorldPoint> + '_ {
        self.samples.iter().map(|s| s.position)
    }

    /// Same samples under a different identity.
    pub fn relabeled(&self, track_id: TrackId, source: SensorSource) -> Trajectory {
        Trajectory {
            track_id,
            source,
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample { track_id, source, ..*s })
                .collect(),
        }
    }

    pub fn interpolate_at(&self, t: f64) -> Option<WorldPoint> {
        interpolate_at(self, t, 0.0)
    }
}

/// Piecewise-linear position at time `t`.
///
/// Times outside the sampled span are linearly extrapolated from the end
/// segment when they fall within `extrapolation_window` seconds of it, and
/// are absent otherwise. A single-sample trajectory answers with that sample
/// inside the window.
pub fn interpolate_at(traj: &Trajectory, t: f64, extrapolation_window: f64) -> Option<WorldPoint> {
    let s = traj.samples();
    let (first, last) = (s.first()?, s.last()?);
    if !t.is_finite() || t < first.t - extrapolation_window || t > last.t + extrapolation_window {
        return None;
    }
    if s.len() == 1 {
        return Some(first.position);
    }
    // Index of the first sample strictly after t, clamped to a valid segment.
    let hi = s.partition_point(|x| x.t <= t).clamp(1, s.len() - 1);
    let (a, b) = (&s[hi - 1], &s[hi]);
    if t == a.t {
        return Some(a.position);
    }
    if t == b.t {
        return Some(b.position);
    }
    let u = (t - a.t) / (b.t - a.t);
    Some(a.position.lerp(&b.position, u))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedPair {
    pub t: f64,
    pub a: WorldPoint,
    pub b: WorldPoint,
}

/// Pairs every sample of `a` with `b` evaluated at the same instant, when `b`
/// is available within `tolerance` seconds of its own span.
pub fn align_pairs(a: &Trajectory, b: &Trajectory, tolerance: f64) -> Vec<AlignedPair> {
    a.samples()
        .iter()
        .filter_map(|s| {
            interpolate_at(b, s.t, tolerance).map(|pb| AlignedPair {
                t: s.t,
                a: s.position,
                b: pb,
            })
        })
        .collect()
}

/// Groups sorted timestamps into frames: each frame opens at the earliest
/// unassigned stamp and absorbs every later stamp within `tolerance` of it.
/// Returns `(frame_time, member_indices)` pairs.
pub fn bucket_times(sorted_times: &[f64], tolerance: f64) -> Vec<(f64, Vec<usize>)> {
    let mut frames: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &t) in sorted_times.iter().enumerate() {
        match frames.last_mut() {
            Some((start, members)) if t - *start <= tolerance => members.push(i),
            _ => frames.push((t, vec![i])),
        }
    }
    frames
}

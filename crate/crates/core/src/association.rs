//! Cross-sensor matching and frame-to-frame identity.
//!
//! All distances are planar (`x`, `y`): camera positions lie on the road
//! surface while LiDAR box centers sit at mid-height, and the height offset
//! carries no identity information.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{interpolate_at, SensorSource, TrackId, Trajectory, WorldPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub t: f64,
    pub camera_track_id: TrackId,
    pub lidar_track_id: TrackId,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationConfig {
    /// Largest cross-sensor match distance, meters.
    pub gate: f64,
    /// Largest frame-to-frame jump for one track, meters.
    pub id_gate: f64,
    /// Frames a track may go undetected before it is closed.
    pub coast_frames: usize,
    /// Velocity assumed for a track seen only once, m/s. Zero suits high
    /// frame rates; at low rates, the prevailing traffic velocity keeps new
    /// tracks within `id_gate` of their next detection.
    pub prior_velocity: [f64; 2],
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            gate: 3.0,
            id_gate: 2.5,
            coast_frames: 5,
            prior_velocity: [0.0, 0.0],
        }
    }
}

impl AssociationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate > 0.0) || !(self.id_gate > 0.0) {
            return Err(Error::InvalidConfig(
                "association: gate and id_gate must be positive".into(),
            ));
        }
        if !self.prior_velocity.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig(
                "association: prior_velocity must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Greedy globally-nearest assignment between two point sets. Returns
/// `(index_a, index_b, distance)` in the order the pairs were taken.
fn greedy_assign(a: &[(TrackId, WorldPoint)], b: &[(TrackId, WorldPoint)], gate: f64) -> Vec<(usize, usize, f64)> {
    let mut cand: Vec<(f64, TrackId, TrackId, usize, usize)> = Vec::new();
    for (i, (ia, pa)) in a.iter().enumerate() {
        for (j, (ib, pb)) in b.iter().enumerate() {
            let d = pa.distance_xy(pb);
            if d <= gate {
                cand.push((d, *ia, *ib, i, j));
            }
        }
    }
    cand.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
            .then(x.3.cmp(&y.3))
            .then(x.4.cmp(&y.4))
    });
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut out = Vec::new();
    for (d, _, _, i, j) in cand {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            out.push((i, j, d));
        }
    }
    out
}

/// Matches camera and LiDAR objects observed at one instant.
///
/// Repeatedly takes the closest unmatched pair within `gate`; equal
/// distances are resolved by `(camera id, lidar id)`.
pub fn match_frame(
    t: f64,
    camera: &[(TrackId, WorldPoint)],
    lidar: &[(TrackId, WorldPoint)],
    gate: f64,
) -> Vec<MatchPair> {
    greedy_assign(camera, lidar, gate)
        .into_iter()
        .map(|(i, j, d)| MatchPair {
            t,
            camera_track_id: camera[i].0,
            lidar_track_id: lidar[j].0,
            distance: d,
        })
        .collect()
}

/// Detections of one frame that have not been given an identity yet.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledFrame {
    pub t: f64,
    pub positions: Vec<WorldPoint>,
}

struct OpenTrack {
    id: TrackId,
    pos: WorldPoint,
    t: f64,
    vel: Option<(f64, f64)>,
    missed: usize,
}

impl OpenTrack {
    fn predicted(&self, t: f64, prior: [f64; 2]) -> WorldPoint {
        let (vx, vy) = self.vel.unwrap_or((prior[0], prior[1]));
        let dt = t - self.t;
        WorldPoint::new(self.pos.x + vx * dt, self.pos.y + vy * dt, self.pos.z)
    }
}

/// Assigns stable identities to time-ordered detections.
///
/// Each open track predicts its position with a constant-velocity estimate
/// (exponentially averaged frame-to-frame displacement; `prior_velocity`
/// until a second detection) and claims the nearest detection within
/// `id_gate`, globally nearest pairs first.
/// Unclaimed detections open new tracks, numbered from `first_id` upward;
/// tracks unseen for more than `coast_frames` frames are closed.
/// Returns one id per detection, parallel to the input.
pub fn track_ids(frames: &[UnlabeledFrame], cfg: &AssociationConfig, first_id: u64) -> Vec<Vec<TrackId>> {
    let mut next = first_id;
    let mut open: Vec<OpenTrack> = Vec::new();
    let mut out = Vec::with_capacity(frames.len());
    for frame in frames {
        let predicted: Vec<(TrackId, WorldPoint)> = open
            .iter()
            .map(|tr| (tr.id, tr.predicted(frame.t, cfg.prior_velocity)))
            .collect();
        let dets: Vec<(TrackId, WorldPoint)> = frame.positions.iter().map(|p| (TrackId(0), *p)).collect();
        let mut ids = vec![TrackId(0); dets.len()];
        let mut claimed = vec![false; dets.len()];
        let mut seen = vec![false; open.len()];
        for (i, j, _) in greedy_assign(&predicted, &dets, cfg.id_gate) {
            let tr = &mut open[i];
            let p = dets[j].1;
            let dt = frame.t - tr.t;
            if dt > 0.0 {
                let v = ((p.x - tr.pos.x) / dt, (p.y - tr.pos.y) / dt);
                tr.vel = Some(match tr.vel {
                    Some((vx, vy)) => (0.5 * (vx + v.0), 0.5 * (vy + v.1)),
                    None => v,
                });
            }
            tr.pos = p;
            tr.t = frame.t;
            tr.missed = 0;
            ids[j] = tr.id;
            claimed[j] = true;
            seen[i] = true;
        }
        for (tr, seen) in open.iter_mut().zip(&seen) {
            if !seen {
                tr.missed += 1;
            }
        }
        open.retain(|tr| tr.missed <= cfg.coast_frames);
        for (j, p) in frame.positions.iter().enumerate() {
            if !claimed[j] {
                ids[j] = TrackId(next);
                open.push(OpenTrack {
                    id: TrackId(next),
                    pos: *p,
                    t: frame.t,
                    vel: None,
                    missed: 0,
                });
                next += 1;
            }
        }
        out.push(ids);
    }
    out
}

/// Builds one trajectory per identity from labeled frames.
pub fn trajectories_from_labels(
    frames: &[UnlabeledFrame],
    labels: &[Vec<TrackId>],
    source: SensorSource,
) -> Result<Vec<Trajectory>> {
    let mut by_id: BTreeMap<TrackId, Trajectory> = BTreeMap::new();
    for (frame, ids) in frames.iter().zip(labels) {
        for (p, id) in frame.positions.iter().zip(ids) {
            by_id
                .entry(*id)
                .or_insert_with(|| Trajectory::new(*id, source))
                .push(frame.t, *p)?;
        }
    }
    Ok(by_id.into_values().collect())
}

/// A camera track and a LiDAR track judged to be the same object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPair {
    pub camera_track_id: TrackId,
    pub lidar_track_id: TrackId,
    pub frames_matched: usize,
    pub mean_distance: f64,
}

/// Pairs tracks by majority vote over per-frame matches.
///
/// Every distinct sample time of either set is a frame; both sets are
/// interpolated there (no extrapolation) and matched with [`match_frame`].
/// A camera track and a LiDAR track are paired when each is the other's
/// most frequent partner (ties to the lower id). Output is sorted by
/// camera id.
pub fn pair_tracks(camera: &[Trajectory], lidar: &[Trajectory], cfg: &AssociationConfig) -> Vec<TrackPair> {
    let mut times: Vec<f64> = camera.iter().chain(lidar).flat_map(|tr| tr.times()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let at = |tracks: &[Trajectory], t: f64| -> Vec<(TrackId, WorldPoint)> {
        tracks
            .iter()
            .filter_map(|tr| interpolate_at(tr, t, 0.0).map(|p| (tr.track_id(), p)))
            .collect()
    };
    let mut votes: BTreeMap<(TrackId, TrackId), (usize, f64)> = BTreeMap::new();
    for t in times {
        let (c, l) = (at(camera, t), at(lidar, t));
        if c.is_empty() || l.is_empty() {
            continue;
        }
        for m in match_frame(t, &c, &l, cfg.gate) {
            let e = votes.entry((m.camera_track_id, m.lidar_track_id)).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += m.distance;
        }
    }
    let best = |key: fn(&(TrackId, TrackId)) -> TrackId| {
        let mut best: BTreeMap<TrackId, ((TrackId, TrackId), usize)> = BTreeMap::new();
        for (pair, (n, _)) in &votes {
            let e = best.entry(key(pair)).or_insert((*pair, 0));
            if *n > e.1 {
                *e = (*pair, *n);
            }
        }
        best
    };
    let by_cam = best(|p| p.0);
    let by_lidar = best(|p| p.1);
    by_cam
        .values()
        .filter(|(pair, _)| by_lidar.get(&pair.1).is_some_and(|(p, _)| p == pair))
        .map(|(pair, n)| TrackPair {
            camera_track_id: pair.0,
            lidar_track_id: pair.1,
            frames_matched: *n,
            mean_distance: votes[pair].1 / *n as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(id: u64, x: f64, y: f64) -> (TrackId, WorldPoint) {
        (TrackId(id), WorldPoint::ground(x, y))
    }

    #[test]
    fn unique_nearest() {
        let m = match_frame(0.0, &[obj(1, 0.0, 0.0)], &[obj(11, 0.5, 0.0), obj(12, 5.0, 0.0)], 2.0);
        assert_eq!(m.len(), 1);
        assert_eq!(
            (m[0].camera_track_id, m[0].lidar_track_id, m[0].distance),
            (TrackId(1), TrackId(11), 0.5)
        );
    }

    #[test]
    fn all_beyond_gate() {
        assert!(match_frame(0.0, &[obj(1, 0.0, 0.0)], &[obj(2, 9.0, 0.0)], 2.0).is_empty());
    }

    #[test]
    fn crossing_configuration() {
        let cam = [obj(1, 0.0, 0.0), obj(2, 3.0, 0.0)];
        let lid = [obj(11, 2.9, 0.0), obj(12, 0.2, 0.0)];
        let m = match_frame(0.0, &cam, &lid, 2.0);
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].camera_track_id, m[0].lidar_track_id), (TrackId(2), TrackId(11)));
        assert!((m[0].distance - 0.1).abs() < 1e-12);
        assert_eq!((m[1].camera_track_id, m[1].lidar_track_id), (TrackId(1), TrackId(12)));
        assert!((m[1].distance - 0.2).abs() < 1e-12);
    }

    #[test]
    fn equal_distances_break_by_ids() {
        let cam = [obj(2, 0.0, 0.0), obj(1, 2.0, 0.0)];
        let lid = [obj(5, 1.0, 0.0)];
        let m = match_frame(0.0, &cam, &lid, 2.0);
        assert_eq!(m[0].camera_track_id, TrackId(1));
    }

    fn frames(positions: impl Fn(usize) -> Vec<WorldPoint>, n: usize, dt: f64) -> Vec<UnlabeledFrame> {
        (0..n)
            .map(|k| UnlabeledFrame {
                t: k as f64 * dt,
                positions: positions(k),
            })
            .collect()
    }

    #[test]
    fn single_moving_object_keeps_id() {
        let f = frames(|k| vec![WorldPoint::ground(0.5 * k as f64, 0.0)], 50, 0.05);
        let ids = track_ids(
            &f,
            &AssociationConfig {
                id_gate: 2.0,
                ..Default::default()
            },
            1,
        );
        assert!(ids.iter().all(|v| v == &vec![TrackId(1)]));
    }

    #[test]
    fn long_absence_opens_new_id() {
        let cfg = AssociationConfig::default();
        let gap = cfg.coast_frames + 1;
        let f = frames(
            |k| {
                if (5..5 + gap).contains(&k) {
                    vec![]
                } else {
                    vec![WorldPoint::ground(0.0, 0.0)]
                }
            },
            20,
            0.05,
        );
        let ids = track_ids(&f, &cfg, 1);
        assert_eq!(ids[0], vec![TrackId(1)]);
        assert_eq!(ids[5 + gap], vec![TrackId(2)]);

        // One frame shorter: the track survives.
        let f = frames(
            |k| {
                if (5..5 + gap - 1).contains(&k) {
                    vec![]
                } else {
                    vec![WorldPoint::ground(0.0, 0.0)]
                }
            },
            20,
            0.05,
        );
        assert!(track_ids(&f, &cfg, 1).iter().flatten().all(|id| *id == TrackId(1)));
    }

    #[test]
    fn passing_objects_never_swap() {
        // Opposite directions, 4 m lateral separation.
        let f = frames(
            |k| {
                let s = 0.5 * k as f64;
                vec![WorldPoint::ground(s, 0.0), WorldPoint::ground(30.0 - s, 4.0)]
            },
            60,
            0.05,
        );
        let ids = track_ids(
            &f,
            &AssociationConfig {
                id_gate: 2.0,
                ..Default::default()
            },
            1,
        );
        assert!(ids.iter().all(|v| v == &vec![TrackId(1), TrackId(2)]));
    }

    #[test]
    fn prior_velocity_bridges_low_rate_frames() {
        // 1 Hz frames, 24 m/s: the first jump is far outside the gate
        // unless new tracks are assumed to move with the traffic.
        let f = frames(|k| vec![WorldPoint::ground(24.0 * k as f64, 0.0)], 6, 1.0);
        let cfg = AssociationConfig {
            id_gate: 5.0,
            ..Default::default()
        };
        assert_eq!(track_ids(&f, &cfg, 1).concat().len(), 6);
        assert!(track_ids(&f, &cfg, 1)[5][0] != TrackId(1));
        let cfg = AssociationConfig {
            prior_velocity: [24.0, 0.0],
            ..cfg
        };
        assert!(track_ids(&f, &cfg, 1).iter().flatten().all(|id| *id == TrackId(1)));
    }

    fn line(id: u64, source: SensorSource, y: f64, dt: f64, n: usize) -> Trajectory {
        Trajectory::from_points(
            TrackId(id),
            source,
            (0..n).map(|k| (k as f64 * dt, WorldPoint::ground(20.0 * k as f64 * dt, y))),
        )
        .unwrap()
    }

    #[test]
    fn pair_one_vehicle() {
        let cam = [line(1, SensorSource::Camera, 0.5, 0.1, 50)];
        let lid = [line(7, SensorSource::Lidar, 0.0, 0.05, 100)];
        let pairs = pair_tracks(&cam, &lid, &AssociationConfig::default());
        assert_eq!(pairs.len(), 1);
        assert_eq!(
            (pairs[0].camera_track_id, pairs[0].lidar_track_id),
            (TrackId(1), TrackId(7))
        );
        assert!((pairs[0].mean_distance - 0.5).abs() < 1e-9);
    }

    #[test]
    fn lidar_only_vehicle_is_unpaired() {
        let lid = [line(7, SensorSource::Lidar, 0.0, 0.05, 100)];
        assert!(pair_tracks(&[], &lid, &AssociationConfig::default()).is_empty());
    }
}

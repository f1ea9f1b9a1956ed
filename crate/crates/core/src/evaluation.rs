//! Error profiles against ground truth and the per-vehicle method
//! comparison behind the cumulative-error tables.
//!
//! Errors are signed `estimate − truth`; `lon` is the `x` component and
//! `lat` the `y` component.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{interpolate_at, SensorSource, TrackId, Trajectory, WorldPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub t: f64,
    pub gt_x: f64,
    pub err_lon: f64,
    pub err_lat: f64,
}

/// Mean of the two tracks where both are available (each interpolated on
/// the union of their stamps), the available one elsewhere.
pub fn average_baseline(track_id: TrackId, camera: Option<&Trajectory>, lidar: Option<&Trajectory>) -> Trajectory {
    let mut times: Vec<f64> = camera.into_iter().chain(lidar).flat_map(|t| t.times()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut out = Trajectory::new(track_id, SensorSource::Average);
    for t in times {
        let c = camera.and_then(|tr| interpolate_at(tr, t, 0.0));
        let l = lidar.and_then(|tr| interpolate_at(tr, t, 0.0));
        let p = match (c, l) {
            (Some(a), Some(b)) => a.lerp(&b, 0.5),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => continue,
        };
        out.push(t, p).expect("times are strictly increasing");
    }
    out
}

/// Errors at the estimate's own stamps where the truth is available and its
/// longitudinal position lies within `segment` (inclusive).
pub fn error_profile(estimate: &Trajectory, truth: &Trajectory, segment: [f64; 2]) -> Vec<ErrorSample> {
    estimate
        .samples()
        .iter()
        .filter_map(|s| {
            let gt = interpolate_at(truth, s.t, 0.0)?;
            (gt.x >= segment[0] && gt.x <= segment[1]).then_some(ErrorSample {
                t: s.t,
                gt_x: gt.x,
                err_lon: s.position.x - gt.x,
                err_lat: s.position.y - gt.y,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CumulativeError {
    pub lon: f64,
    pub lat: f64,
    pub n: usize,
}

impl CumulativeError {
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mae_lon(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.lon / self.n as f64
        }
    }

    pub fn mae_lat(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.lat / self.n as f64
        }
    }
}

pub fn cumulative_abs_error(profile: &[ErrorSample]) -> CumulativeError {
    profile
        .iter()
        .fold(CumulativeError::default(), |acc, e| CumulativeError {
            lon: acc.lon + e.err_lon.abs(),
            lat: acc.lat + e.err_lat.abs(),
            n: acc.n + 1,
        })
}

/// Mean planar error magnitude, `None` for an empty profile.
pub fn mean_position_error(profile: &[ErrorSample]) -> Option<f64> {
    if profile.is_empty() {
        return None;
    }
    Some(profile.iter().map(|e| e.err_lon.hypot(e.err_lat)).sum::<f64>() / profile.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Camera,
    Lidar,
    KfFused,
    Average,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Camera, Method::Lidar, Method::KfFused, Method::Average];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Camera => "camera",
            Method::Lidar => "lidar",
            Method::KfFused => "kf_fused",
            Method::Average => "average",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Longitudinal window `[x_min, x_max]` over which errors are summed.
    pub segment: [f64; 2],
    /// Largest mean planar distance for an estimate track to be attributed
    /// to a ground-truth vehicle, meters.
    pub association_gate: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            segment: [818.0, 833.0],
            association_gate: 10.0,
        }
    }
}

impl EvaluationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment[0] <= self.segment[1]) {
            return Err(Error::InvalidConfig(
                "evaluation.segment must satisfy x_min <= x_max".into(),
            ));
        }
        if !(self.association_gate > 0.0) {
            return Err(Error::InvalidConfig(
                "evaluation.association_gate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub vehicle_id: TrackId,
    pub method: Method,
    pub cumulative: CumulativeError,
    /// Estimate track the row was computed from.
    pub track_id: Option<TrackId>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Winner {
    pub vehicle_id: TrackId,
    pub lon: Option<Method>,
    pub lat: Option<Method>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub gt_x: f64,
    /// Longitudinal error per method, in [`Method::ALL`] order.
    pub err_lon: [Option<f64>; 4],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    /// Ordered by vehicle id, then method.
    pub rows: Vec<ReportRow>,
    pub winners: Vec<Winner>,
    pub plots: BTreeMap<TrackId, Vec<PlotRow>>,
}

impl ErrorReport {
    pub fn row(&self, vehicle: TrackId, method: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.vehicle_id == vehicle && r.method == method)
    }
}

/// Mean planar distance from `estimate` to `truth` over shared stamps.
fn track_distance(estimate: &Trajectory, truth: &Trajectory) -> Option<f64> {
    let (es, ee) = (estimate.start_time()?, estimate.end_time()?);
    let (ts, te) = (truth.start_time()?, truth.end_time()?);
    if ee < ts || es > te {
        return None;
    }
    let d: Vec<f64> = estimate
        .samples()
        .iter()
        .filter_map(|s| interpolate_at(truth, s.t, 0.0).map(|g: WorldPoint| s.position.distance_xy(&g)))
        .collect();
    (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
}

/// Attributes each estimate track to the nearest truth vehicle (mean planar
/// distance within the gate, ties to the lower id).
fn attribute(truth: &[Trajectory], estimates: &[Trajectory], gate: f64) -> Vec<Option<(TrackId, f64)>> {
    estimates
        .par_iter()
        .map(|e| {
            truth
                .iter()
                .filter_map(|g| track_distance(e, g).map(|d| (g.track_id(), d)))
                .filter(|(_, d)| *d <= gate)
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        })
        .collect()
}

/// Per-vehicle, per-method cumulative errors over the evaluation segment.
///
/// Estimate tracks are attributed to vehicles geometrically, so their ids
/// need not match the truth. Rows carry warnings instead of being dropped:
/// `missing` (no track for this vehicle), `fragmented:N` (N tracks
/// attributed; the one with most in-segment samples is scored) and
/// `id_mismatch:ID` (a track carrying the vehicle's id was attributed
/// elsewhere or not at all). Winners are chosen by mean absolute error so
/// that methods with different rates compare fairly.
pub fn compare_methods(
    truth: &[Trajectory],
    estimates: &[(Method, Vec<Trajectory>)],
    cfg: &EvaluationConfig,
) -> ErrorReport {
    let mut truth: Vec<&Trajectory> = truth.iter().collect();
    truth.sort_by_key(|t| t.track_id());
    let truth_owned: Vec<Trajectory> = truth.iter().map(|t| (*t).clone()).collect();

    let mut rows = Vec::new();
    let mut plots: BTreeMap<TrackId, BTreeMap<u64, PlotRow>> = BTreeMap::new();
    let mut by_method: BTreeMap<Method, Vec<Trajectory>> = BTreeMap::new();
    for (m, tracks) in estimates {
        by_method.entry(*m).or_default().extend(tracks.iter().cloned());
    }
    let mut scored: BTreeMap<(TrackId, Method), ReportRow> = BTreeMap::new();
    for (method, mut tracks) in by_method {
        tracks.sort_by_key(|t| t.track_id());
        let attributed = attribute(&truth_owned, &tracks, cfg.association_gate);
        for g in &truth_owned {
            let vid = g.track_id();
            let mut candidates: Vec<(&Trajectory, Vec<ErrorSample>)> = tracks
                .iter()
                .zip(&attributed)
                .filter(|(_, a)| a.is_some_and(|(v, _)| v == vid))
                .map(|(tr, _)| (tr, error_profile(tr, g, cfg.segment)))
                .collect();
            let mut warnings = Vec::new();
            if let Some((i, _)) = tracks.iter().enumerate().find(|(_, t)| t.track_id() == vid) {
                if attributed[i].is_none_or(|(v, _)| v != vid) {
                    warnings.push(format!("id_mismatch:{vid}"));
                }
            }
            if candidates.len() > 1 {
                warnings.push(format!("fragmented:{}", candidates.len()));
            }
            // Most in-segment samples wins; ties to the lower track id.
            candidates.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.track_id().cmp(&b.0.track_id())));
            let (track_id, profile) = match candidates.into_iter().next() {
                Some((tr, p)) => (Some(tr.track_id()), p),
                None => {
                    warnings.push("missing".into());
                    (None, Vec::new())
                }
            };
            let col = Method::ALL.iter().position(|m| *m == method).expect("known method");
            let plot = plots.entry(vid).or_default();
            for e in &profile {
                let row = plot.entry(e.t.to_bits()).or_insert(PlotRow {
                    gt_x: e.gt_x,
                    err_lon: [None; 4],
                });
                row.err_lon[col] = Some(e.err_lon);
            }
            scored.insert(
                (vid, method),
                ReportRow {
                    vehicle_id: vid,
                    method,
                    cumulative: cumulative_abs_error(&profile),
                    track_id,
                    warnings,
                },
            );
        }
    }
    rows.extend(scored.into_values());

    let mut winners = Vec::new();
    for g in &truth_owned {
        let vid = g.track_id();
        let pick = |key: fn(&CumulativeError) -> f64| {
            rows.iter()
                .filter(|r| r.vehicle_id == vid && !r.cumulative.is_empty())
                .min_by(|a, b| {
                    key(&a.cumulative)
                        .total_cmp(&key(&b.cumulative))
                        .then(a.method.cmp(&b.method))
                })
                .map(|r| r.method)
        };
        winners.push(Winner {
            vehicle_id: vid,
            lon: pick(CumulativeError::mae_lon),
            lat: pick(CumulativeError::mae_lat),
        });
    }

    let plots = plots
        .into_iter()
        .map(|(vid, m)| {
            let mut v: Vec<PlotRow> = m.into_values().collect();
            v.sort_by(|a, b| a.gt_x.total_cmp(&b.gt_x));
            (vid, v)
        })
        .collect();
    ErrorReport { rows, winners, plots }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(id: u64, source: SensorSource, pts: &[(f64, f64, f64)]) -> Trajectory {
        Trajectory::from_points(
            TrackId(id),
            source,
            pts.iter().map(|&(t, x, y)| (t, WorldPoint::ground(x, y))),
        )
        .unwrap()
    }

    fn straight(id: u64, source: SensorSource, dx: f64, dy: f64) -> Trajectory {
        let pts: Vec<(f64, f64, f64)> = (0..=40)
            .map(|k| (k as f64 * 0.05, 810.0 + 20.0 * k as f64 * 0.05 + dx, dy))
            .collect();
        track(id, source, &pts)
    }

    #[test]
    fn average_examples() {
        let a = straight(1, SensorSource::Camera, 0.0, 0.0);
        assert_eq!(
            average_baseline(TrackId(1), Some(&a), Some(&a))
                .positions()
                .collect::<Vec<_>>(),
            a.positions().collect::<Vec<_>>()
        );
        let c = track(1, SensorSource::Camera, &[(0.0, 10.0, 0.0)]);
        let l = track(2, SensorSource::Lidar, &[(0.0, 20.0, 0.0)]);
        let avg = average_baseline(TrackId(1), Some(&c), Some(&l));
        assert_eq!(avg.samples()[0].position.x, 15.0);
        assert_eq!(avg.source(), SensorSource::Average);
        let only = average_baseline(TrackId(1), Some(&a), None);
        assert_eq!(only.positions().collect::<Vec<_>>(), a.positions().collect::<Vec<_>>());
    }

    #[test]
    fn profile_examples() {
        let truth = straight(1, SensorSource::GroundTruth, 0.0, 0.0);
        let p = error_profile(&truth, &truth, [818.0, 833.0]);
        assert!(!p.is_empty() && p.iter().all(|e| e.err_lon == 0.0 && e.err_lat == 0.0));
        let shifted = straight(1, SensorSource::Camera, 2.0, 0.0);
        let p = error_profile(&shifted, &truth, [818.0, 833.0]);
        assert!(p.iter().all(|e| (e.err_lon - 2.0).abs() < 1e-9 && e.err_lat == 0.0));
        assert!(p.iter().all(|e| (818.0..=833.0).contains(&e.gt_x)));
        assert!(error_profile(&shifted, &truth, [0.0, 10.0]).is_empty());
    }

    #[test]
    fn cumulative_examples() {
        let p: Vec<ErrorSample> = [1.0, -2.0, 3.0]
            .iter()
            .map(|&e| ErrorSample {
                t: 0.0,
                gt_x: 0.0,
                err_lon: e,
                err_lat: 0.0,
            })
            .collect();
        let c = cumulative_abs_error(&p);
        assert_eq!((c.lon, c.lat, c.n), (6.0, 0.0, 3));
        assert_eq!(c.mae_lon(), 2.0);
        let e = cumulative_abs_error(&[]);
        assert!(e.is_empty() && e.lon == 0.0 && e.lat == 0.0);
    }

    #[test]
    fn compare_flags_missing_and_mismatch() {
        let truth = vec![
            straight(1, SensorSource::GroundTruth, 0.0, 0.0),
            straight(2, SensorSource::GroundTruth, 0.0, 30.0),
        ];
        // Camera track labeled 2 actually follows vehicle 1.
        let cams = vec![straight(2, SensorSource::Camera, 0.5, 0.0)];
        let report = compare_methods(&truth, &[(Method::Camera, cams)], &EvaluationConfig::default());
        let r1 = report.row(TrackId(1), Method::Camera).unwrap();
        assert_eq!(r1.track_id, Some(TrackId(2)));
        assert!((r1.cumulative.mae_lon() - 0.5).abs() < 1e-9);
        let r2 = report.row(TrackId(2), Method::Camera).unwrap();
        assert!(r2.warnings.contains(&"missing".to_string()));
        assert!(r2.warnings.contains(&"id_mismatch:2".to_string()));
        assert_eq!(report.winners[0].lon, Some(Method::Camera));
        assert_eq!(report.winners[1].lon, None);
    }

    #[test]
    fn compare_is_order_invariant() {
        let truth = vec![
            straight(1, SensorSource::GroundTruth, 0.0, 0.0),
            straight(2, SensorSource::GroundTruth, 0.0, 30.0),
        ];
        let est = vec![
            straight(1, SensorSource::Camera, 0.5, 0.1),
            straight(2, SensorSource::Camera, -0.3, 30.2),
        ];
        let lid = vec![straight(7, SensorSource::Lidar, 0.2, 0.0)];
        let a = compare_methods(
            &truth,
            &[(Method::Camera, est.clone()), (Method::Lidar, lid.clone())],
            &EvaluationConfig::default(),
        );
        let rev_truth: Vec<Trajectory> = truth.iter().rev().cloned().collect();
        let rev_est: Vec<Trajectory> = est.iter().rev().cloned().collect();
        let b = compare_methods(
            &rev_truth,
            &[(Method::Lidar, lid), (Method::Camera, rev_est)],
            &EvaluationConfig::default(),
        );
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 4);
    }
}

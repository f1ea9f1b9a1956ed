use std::collections::BTreeMap;

use roadfuse_core::association::{pair_tracks, track_ids, trajectories_from_labels, AssociationConfig, UnlabeledFrame};
use roadfuse_core::camera::localize_detections;
use roadfuse_core::frames::bucket_times;
use roadfuse_core::scenario::{
    generate_ground_truth, render_camera, render_lidar_detections, NoiseConfig, ScenarioConfig,
};
use roadfuse_core::{SensorSource, TrackId, WorldPoint};

fn ten_vehicles(noise: NoiseConfig) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        seed: 11,
        ..ScenarioConfig::default()
    };
    cfg.traffic.count = 10;
    cfg.duration = 50.0;
    cfg.noise = noise;
    cfg
}

#[test]
fn ten_vehicles_pair_with_their_true_identities() {
    // Sensors disagree by well under a meter inside the shared coverage.
    let cfg = ten_vehicles(NoiseConfig {
        pixel_jitter_px: 0.1,
        camera_lat_bias: 0.5,
        lidar_centroid_std: 0.1,
        lidar_lon_drift: 0.1,
        ..NoiseConfig::zero()
    });
    let truth = generate_ground_truth(&cfg).unwrap();
    assert_eq!(truth.len(), 10);

    let camera = localize_detections(&cfg.camera, &render_camera(&truth, &cfg));
    let dets = render_lidar_detections(&truth, &cfg);

    // Forget the LiDAR identities, re-track, and remember the hidden truth.
    let times: Vec<f64> = dets.iter().map(|d| d.t).collect();
    let frames_idx = bucket_times(&times, 0.025);
    let frames: Vec<UnlabeledFrame> = frames_idx
        .iter()
        .map(|(t, members)| UnlabeledFrame {
            t: *t,
            positions: members
                .iter()
                .map(|&i| WorldPoint::ground(dets[i].bbox.center.x, dets[i].bbox.center.y))
                .collect(),
        })
        .collect();
    let assoc = AssociationConfig::default();
    let labels = track_ids(&frames, &assoc, 1_000_000);
    let mut hidden: BTreeMap<TrackId, BTreeMap<TrackId, usize>> = BTreeMap::new();
    for ((_, members), ids) in frames_idx.iter().zip(&labels) {
        for (&i, id) in members.iter().zip(ids) {
            *hidden
                .entry(*id)
                .or_default()
                .entry(dets[i].track_id.unwrap())
                .or_default() += 1;
        }
    }
    let lidar = trajectories_from_labels(&frames, &labels, SensorSource::Lidar).unwrap();
    assert_eq!(lidar.len(), 10, "one LiDAR track per vehicle");

    let pairs = pair_tracks(&camera, &lidar, &assoc);
    assert_eq!(pairs.len(), 10);
    for p in &pairs {
        let votes = &hidden[&p.lidar_track_id];
        assert_eq!(votes.len(), 1, "LiDAR track {} mixes vehicles", p.lidar_track_id);
        let true_id = *votes.keys().next().unwrap();
        assert_eq!(p.camera_track_id, true_id);
        assert!(p.mean_distance < 1.0);
    }
}

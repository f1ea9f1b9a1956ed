//! Pipeline stages. Each stage reads and writes files in the run's output
//! directory (or explicit paths) and is deterministic given its inputs and
//! the configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use roadfuse_core::association::{pair_tracks, track_ids, trajectories_from_labels, TrackPair, UnlabeledFrame};
use roadfuse_core::camera::localize_detections;
use roadfuse_core::evaluation::{average_baseline, compare_methods, ErrorReport, Method};
use roadfuse_core::frames::bucket_times;
use roadfuse_core::io;
use roadfuse_core::kalman::run_fusion;
use roadfuse_core::pointcloud::{detect_objects, TimedDetection};
use roadfuse_core::rng::{derive_seed, stream};
use roadfuse_core::scenario::{generate_ground_truth, render_camera, render_lidar_detections, CloudRenderer};
use roadfuse_core::{Error, SensorSource, TrackId, Trajectory, WorldPoint};

use crate::config::{LidarMode, RunConfig};
use crate::error::{CliError, CliResult};

/// LiDAR identities assigned by the frame-to-frame tracker start here, well
/// clear of camera and ground-truth ids.
pub const LIDAR_FIRST_ID: u64 = 1_000_000;

/// File names inside an output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn config(&self) -> PathBuf {
        self.file("config.json")
    }
    pub fn truth(&self) -> PathBuf {
        self.file("truth.csv")
    }
    pub fn camera_detections(&self) -> PathBuf {
        self.file("camera_detections.csv")
    }
    pub fn lidar_dir(&self) -> PathBuf {
        self.file("lidar")
    }
    pub fn manifest(&self) -> PathBuf {
        self.lidar_dir().join("manifest.json")
    }
    pub fn lidar_detections(&self) -> PathBuf {
        self.file("lidar_detections.csv")
    }
    pub fn camera_tracks(&self) -> PathBuf {
        self.file("camera_tracks.csv")
    }
    pub fn lidar_tracks(&self) -> PathBuf {
        self.file("lidar_tracks.csv")
    }
    pub fn pairs(&self) -> PathBuf {
        self.file("pairs.csv")
    }
    pub fn camera_smoothed(&self) -> PathBuf {
        self.file("camera_smoothed.csv")
    }
    pub fn lidar_smoothed(&self) -> PathBuf {
        self.file("lidar_smoothed.csv")
    }
    pub fn fused(&self) -> PathBuf {
        self.file("fused.csv")
    }
    pub fn average(&self) -> PathBuf {
        self.file("average.csv")
    }
    pub fn report(&self) -> PathBuf {
        self.file("report.csv")
    }
    pub fn winners(&self) -> PathBuf {
        self.file("winners.csv")
    }
    pub fn plots(&self) -> PathBuf {
        self.file("plots")
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: cannot create directory: {e}", dir.display())))
}

pub fn write_config(cfg: &RunConfig, path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    std::fs::write(path, cfg.to_json()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Ground truth, pixel detections and LiDAR data (clouds plus manifest, or
/// direct detections, per `lidar_mode`).
pub fn simulate(cfg: &RunConfig, out: &Layout) -> CliResult<()> {
    ensure_dir(&out.root)?;
    let sc = &cfg.scenario;
    let truth = generate_ground_truth(sc)?;
    info!("simulated {} vehicles over {} s", truth.len(), sc.duration);
    let tracks: Vec<Trajectory> = truth.iter().map(|g| g.trajectory.clone()).collect();
    io::write_trajectories(&out.truth(), &tracks)?;
    io::write_pixel_detections(&out.camera_detections(), &render_camera(&truth, sc))?;

    match cfg.lidar_mode {
        LidarMode::Detections => {
            // Identities are the simulator's secret; downstream re-tracks.
            let dets: Vec<TimedDetection> = render_lidar_detections(&truth, sc)
                .into_iter()
                .map(|d| TimedDetection { track_id: None, ..d })
                .collect();
            io::write_detections(&out.lidar_detections(), &dets)?;
        }
        LidarMode::Cloud => {
            let dir = out.lidar_dir();
            ensure_dir(&dir)?;
            let renderer = CloudRenderer::new(&truth, sc);
            let entries: Vec<io::ManifestEntry> = renderer
                .frame_times()
                .par_iter()
                .enumerate()
                .map(|(k, &t)| {
                    let name = format!("frame_{k:06}.ply");
                    io::write_ply(&dir.join(&name), &renderer.render(k))?;
                    Ok(io::ManifestEntry { t, file: name.into() })
                })
                .collect::<Result<_, Error>>()?;
            info!("rendered {} LiDAR frames", entries.len());
            io::write_manifest(&out.manifest(), &entries)?;
        }
    }
    Ok(())
}

/// Runs the detector on every frame of a manifest.
pub fn lidar_detect(cfg: &RunConfig, manifest: &Path, output: &Path) -> CliResult<usize> {
    let entries = io::read_manifest(manifest)?;
    let params = &cfg.lidar_params;
    params.validate()?;
    let seed = cfg.scenario.seed;
    let per_frame: Vec<Vec<TimedDetection>> = entries
        .par_iter()
        .enumerate()
        .map(|(k, entry)| {
            let path = io::manifest_file(manifest, entry);
            let cloud = io::read_cloud(&path, entry.t)?;
            match detect_objects(&cloud, params, derive_seed(seed, stream::RANSAC, k as u64)) {
                Ok(dets) => Ok(dets
                    .into_iter()
                    .map(|d| TimedDetection {
                        t: entry.t,
                        track_id: None,
                        bbox: d.bbox,
                    })
                    .collect()),
                Err(Error::NoPlane(why)) => {
                    warn!("{}: no ground plane ({why}); frame skipped", path.display());
                    Ok(Vec::new())
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, Error>>()?;
    let dets: Vec<TimedDetection> = per_frame.into_iter().flatten().collect();
    if let Some(dir) = output.parent() {
        ensure_dir(dir)?;
    }
    io::write_detections(output, &dets)?;
    info!("{} detections in {} frames", dets.len(), entries.len());
    Ok(dets.len())
}

/// Camera trajectories from either a pixel-detection or a trajectory CSV.
pub fn load_camera_tracks(cfg: &RunConfig, path: &Path) -> CliResult<Vec<Trajectory>> {
    let header = io::csv_header(path)?;
    if header == io::PIXEL_HEADER {
        return Ok(localize_detections(
            &cfg.scenario.camera,
            &io::read_pixel_detections(path)?,
        ));
    }
    Ok(io::read_trajectories(path)?)
}

/// Gives LiDAR detections identities with the frame-to-frame tracker; any
/// ids already in the file are ignored.
pub fn track_detections(cfg: &RunConfig, dets: &[TimedDetection]) -> CliResult<Vec<Trajectory>> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[a].t.total_cmp(&dets[b].t));
    let times: Vec<f64> = order.iter().map(|&i| dets[i].t).collect();
    let frames: Vec<UnlabeledFrame> = bucket_times(&times, cfg.filter.frame_tolerance)
        .into_iter()
        .map(|(t, members)| UnlabeledFrame {
            t,
            positions: members
                .iter()
                .map(|&m| {
                    let c = dets[order[m]].bbox.center;
                    WorldPoint::new(c.x, c.y, c.z)
                })
                .collect(),
        })
        .collect();
    let labels = track_ids(&frames, &cfg.association, LIDAR_FIRST_ID);
    Ok(trajectories_from_labels(&frames, &labels, SensorSource::Lidar)?)
}

/// LiDAR trajectories from either a detection or a trajectory CSV.
pub fn load_lidar_tracks(cfg: &RunConfig, path: &Path) -> CliResult<Vec<Trajectory>> {
    let header = io::csv_header(path)?;
    if header == io::DETECTION_HEADER {
        return track_detections(cfg, &io::read_detections(path)?);
    }
    Ok(io::read_trajectories(path)?)
}

pub fn localize(cfg: &RunConfig, pixels: &Path, output: &Path) -> CliResult<usize> {
    let tracks = load_camera_tracks(cfg, pixels)?;
    io::write_trajectories(output, &tracks)?;
    Ok(tracks.len())
}

/// Tracks LiDAR detections and pairs the result with camera tracks.
pub fn match_tracks(
    cfg: &RunConfig,
    camera: &Path,
    lidar: &Path,
    lidar_out: &Path,
    pairs_out: &Path,
) -> CliResult<Vec<TrackPair>> {
    let cam = load_camera_tracks(cfg, camera)?;
    let lid = load_lidar_tracks(cfg, lidar)?;
    let pairs = pair_tracks(&cam, &lid, &cfg.association);
    info!(
        "{} camera tracks, {} LiDAR tracks, {} pairs",
        cam.len(),
        lid.len(),
        pairs.len()
    );
    io::write_trajectories(lidar_out, &lid)?;
    io::write_pairs(pairs_out, &pairs)?;
    Ok(pairs)
}

pub fn smooth_tracks(cfg: &RunConfig, tracks: &[Trajectory]) -> CliResult<Vec<Trajectory>> {
    Ok(tracks
        .par_iter()
        .map(|t| cfg.filter.smooth(t))
        .collect::<Result<_, Error>>()?)
}

pub fn smooth(cfg: &RunConfig, input: &Path, output: &Path) -> CliResult<usize> {
    let tracks = io::read_trajectories(input)?;
    let smoothed = smooth_tracks(cfg, &tracks)?;
    io::write_trajectories(output, &smoothed)?;
    Ok(smoothed.len())
}

/// One object to fuse: camera track, LiDAR track, or both.
#[derive(Debug, Clone, Copy)]
struct FusionJob<'a> {
    id: TrackId,
    camera: Option<&'a Trajectory>,
    lidar: Option<&'a Trajectory>,
}

fn fusion_jobs<'a>(
    camera: &'a [Trajectory],
    lidar: &'a [Trajectory],
    pairs: &[TrackPair],
) -> CliResult<Vec<FusionJob<'a>>> {
    let cam: BTreeMap<TrackId, &Trajectory> = camera.iter().map(|t| (t.track_id(), t)).collect();
    let lid: BTreeMap<TrackId, &Trajectory> = lidar.iter().map(|t| (t.track_id(), t)).collect();
    let mut jobs = Vec::new();
    let mut used_lidar = BTreeSet::new();
    for (&id, &c) in &cam {
        let partner = pairs
            .iter()
            .find(|p| p.camera_track_id == id)
            .and_then(|p| lid.get(&p.lidar_track_id));
        if let Some(l) = partner {
            used_lidar.insert(l.track_id());
        }
        jobs.push(FusionJob {
            id,
            camera: Some(c),
            lidar: partner.copied(),
        });
    }
    for (&id, &l) in &lid {
        if used_lidar.contains(&id) {
            continue;
        }
        if cam.contains_key(&id) {
            return Err(CliError::Data(format!(
                "unpaired LiDAR track {id} collides with a camera track id; renumber one of the inputs"
            )));
        }
        jobs.push(FusionJob {
            id,
            camera: None,
            lidar: Some(l),
        });
    }
    jobs.sort_by_key(|j| j.id);
    Ok(jobs)
}

/// Outputs of [`fuse`].
#[derive(Debug, Clone)]
pub struct Fusion {
    pub fused: Vec<Trajectory>,
    pub average: Vec<Trajectory>,
}

/// Kalman fusion and the averaging baseline for every paired object; an
/// unpaired track is carried through on its own.
pub fn fuse(cfg: &RunConfig, camera: &[Trajectory], lidar: &[Trajectory], pairs: &[TrackPair]) -> CliResult<Fusion> {
    let jobs = fusion_jobs(camera, lidar, pairs)?;
    let results: Vec<(Trajectory, Trajectory)> = jobs
        .par_iter()
        .map(|j| {
            let fused = run_fusion(j.id, j.camera, j.lidar, &cfg.filter)?;
            Ok((fused, average_baseline(j.id, j.camera, j.lidar)))
        })
        .collect::<Result<_, Error>>()?;
    let (fused, average) = results.into_iter().unzip();
    Ok(Fusion { fused, average })
}

/// Reads pairs if the file exists, otherwise pairs the tracks afresh.
fn pairs_for(
    cfg: &RunConfig,
    path: Option<&Path>,
    camera: &[Trajectory],
    lidar: &[Trajectory],
) -> CliResult<Vec<TrackPair>> {
    match path {
        Some(p) if p.exists() => Ok(io::read_pairs(p)?),
        _ => Ok(pair_tracks(camera, lidar, &cfg.association)),
    }
}

pub struct FuseFiles<'a> {
    pub camera: &'a Path,
    pub lidar: &'a Path,
    pub pairs: Option<&'a Path>,
}

pub fn fuse_files(cfg: &RunConfig, input: FuseFiles<'_>, out: &Layout) -> CliResult<usize> {
    ensure_dir(&out.root)?;
    let camera = load_camera_tracks(cfg, input.camera)?;
    let lidar = load_lidar_tracks(cfg, input.lidar)?;
    let pairs = pairs_for(cfg, input.pairs, &camera, &lidar)?;
    let f = fuse(cfg, &camera, &lidar, &pairs)?;
    io::write_trajectories(&out.fused(), &f.fused)?;
    io::write_trajectories(&out.average(), &f.average)?;
    if input.pairs.is_none_or(|p| !p.exists()) {
        io::write_pairs(&out.pairs(), &pairs)?;
    }
    Ok(f.fused.len())
}

/// Default estimate files of a run, per method. The single-sensor methods
/// are the sensors' own tracks.
pub fn default_estimates(out: &Layout) -> Vec<(Method, PathBuf)> {
    vec![
        (Method::Camera, out.camera_tracks()),
        (Method::Lidar, out.lidar_tracks()),
        (Method::KfFused, out.fused()),
        (Method::Average, out.average()),
    ]
}

pub fn evaluate(
    cfg: &RunConfig,
    truth: &Path,
    estimates: &[(Method, PathBuf)],
    out: &Layout,
) -> CliResult<ErrorReport> {
    ensure_dir(&out.root)?;
    let truth = io::read_trajectories(truth)?;
    let mut est = Vec::new();
    for (m, path) in estimates {
        est.push((*m, io::read_trajectories(path)?));
    }
    let report = compare_methods(&truth, &est, &cfg.evaluation);
    io::write_report(&out.root, &report)?;
    Ok(report)
}

/// simulate → lidar-detect → localize → match → smooth → fuse → evaluate.
pub fn pipeline(cfg: &RunConfig, out: &Layout) -> CliResult<ErrorReport> {
    ensure_dir(&out.root)?;
    write_config(cfg, &out.config())?;
    simulate(cfg, out)?;
    if cfg.lidar_mode == LidarMode::Cloud {
        lidar_detect(cfg, &out.manifest(), &out.lidar_detections())?;
    }
    localize(cfg, &out.camera_detections(), &out.camera_tracks())?;
    match_tracks(
        cfg,
        &out.camera_tracks(),
        &out.lidar_detections(),
        &out.lidar_tracks(),
        &out.pairs(),
    )?;
    smooth(cfg, &out.camera_tracks(), &out.camera_smoothed())?;
    smooth(cfg, &out.lidar_tracks(), &out.lidar_smoothed())?;
    fuse_files(
        cfg,
        FuseFiles {
            camera: &out.camera_tracks(),
            lidar: &out.lidar_tracks(),
            pairs: Some(&out.pairs()),
        },
        out,
    )?;
    evaluate(cfg, &out.truth(), &default_estimates(out), out)
}

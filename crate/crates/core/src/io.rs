//! File formats: trajectory, pixel-detection, LiDAR-detection, pair and
//! report CSVs; PLY and CSV point clouds; the JSON capture manifest.
//!
//! Every CSV has a header row. Floats are written in Rust's shortest
//! round-trip form, so a write/read cycle is lossless and repeated writes
//! are byte-identical.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::association::TrackPair;
use crate::camera::PixelDetection;
use crate::error::{Error, Result};
use crate::evaluation::{ErrorReport, Method, PlotRow};
use crate::frames::{SensorSource, TrackId, Trajectory, WorldPoint};
use crate::pointcloud::{BoundingBox3D, FrameTag, LidarPoint, PointCloud, TimedDetection};

pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "track_id", "source", "x", "y", "z"];
pub const PIXEL_HEADER: [&str; 5] = ["t", "track_id", "u", "v", "conf"];
pub const DETECTION_HEADER: [&str; 9] = ["t", "track_id", "cx", "cy", "cz", "length", "width", "height", "yaw"];
pub const PAIR_HEADER: [&str; 4] = ["camera_track_id", "lidar_track_id", "frames_matched", "mean_distance"];
pub const REPORT_HEADER: [&str; 8] = [
    "vehicle_id",
    "method",
    "cum_abs_lon",
    "cum_abs_lat",
    "mae_lon",
    "mae_lat",
    "n_samples",
    "warnings",
];
pub const WINNER_HEADER: [&str; 3] = ["vehicle_id", "lon_winner", "lat_winner"];
pub const PLOT_HEADER: [&str; 5] = ["gt_x", "err_lon_camera", "err_lon_lidar", "err_lon_kf", "err_lon_avg"];

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    Ok(w)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

fn finish(path: &Path, mut w: csv::Writer<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads all records after checking that the header matches exactly.
fn csv_records(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let got = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(Error::parse(
            path,
            format!(
                "expected header '{}', found '{}'",
                header.join(","),
                got.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    r.records().map(|rec| rec.map_err(|e| csv_err(path, e))).collect()
}

/// Reads just the header row of a CSV file.
pub fn csv_header(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    Ok(r.headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect())
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::parse(path, format!("line {line}: invalid {name} '{raw}'")))
}

fn finite(path: &Path, rec: &csv::StringRecord, i: usize, name: &str) -> Result<f64> {
    let v: f64 = field(path, rec, i, name)?;
    if !v.is_finite() {
        let line = rec.position().map_or(0, |p| p.line());
        return Err(Error::parse(path, format!("line {line}: {name} must be finite")));
    }
    Ok(v)
}

pub fn write_trajectories(path: &Path, tracks: &[Trajectory]) -> Result<()> {
    let mut w = csv_writer(path, &TRAJECTORY_HEADER)?;
    for tr in tracks {
        for s in tr.samples() {
            w.write_record([
                s.t.to_string(),
                s.track_id.to_string(),
                s.source.to_string(),
                s.position.x.to_string(),
                s.position.y.to_string(),
                s.position.z.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    finish(path, w)
}

/// Reads trajectories, grouping rows by `(track_id, source)` in any row
/// order. Output is sorted by track id, then source.
pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    let mut groups: BTreeMap<(TrackId, SensorSource), Vec<(f64, WorldPoint)>> = BTreeMap::new();
    for rec in csv_records(path, &TRAJECTORY_HEADER)? {
        let t = finite(path, &rec, 0, "t")?;
        let id = TrackId(field(path, &rec, 1, "track_id")?);
        let source: SensorSource = field(path, &rec, 2, "source")?;
        let p = WorldPoint::new(
            finite(path, &rec, 3, "x")?,
            finite(path, &rec, 4, "y")?,
            finite(path, &rec, 5, "z")?,
        );
        groups.entry((id, source)).or_default().push((t, p));
    }
    groups
        .into_iter()
        .map(|((id, source), mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            Trajectory::from_points(id, source, pts)
                .map_err(|e| Error::parse(path, format!("track {id} ({source}): {e}")))
        })
        .collect()
}

pub fn write_pixel_detections(path: &Path, dets: &[PixelDetection]) -> Result<()> {
    let mut w = csv_writer(path, &PIXEL_HEADER)?;
    for d in dets {
        w.write_record([
            d.t.to_string(),
            d.track_id.to_string(),
            d.u.to_string(),
            d.v.to_string(),
            d.conf.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_pixel_detections(path: &Path) -> Result<Vec<PixelDetection>> {
    csv_records(path, &PIXEL_HEADER)?
        .iter()
        .map(|rec| {
            Ok(PixelDetection {
                t: finite(path, rec, 0, "t")?,
                track_id: TrackId(field(path, rec, 1, "track_id")?),
                u: finite(path, rec, 2, "u")?,
                v: finite(path, rec, 3, "v")?,
                conf: finite(path, rec, 4, "conf")?,
            })
        })
        .collect()
}

pub fn write_detections(path: &Path, dets: &[TimedDetection]) -> Result<()> {
    let mut w = csv_writer(path, &DETECTION_HEADER)?;
    for d in dets {
        let b = &d.bbox;
        w.write_record([
            d.t.to_string(),
            d.track_id.map(|id| id.to_string()).unwrap_or_default(),
            b.center.x.to_string(),
            b.center.y.to_string(),
            b.center.z.to_string(),
            b.length.to_string(),
            b.width.to_string(),
            b.height.to_string(),
            b.yaw.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_detections(path: &Path) -> Result<Vec<TimedDetection>> {
    csv_records(path, &DETECTION_HEADER)?
        .iter()
        .map(|rec| {
            let id = rec.get(1).unwrap_or("");
            Ok(TimedDetection {
                t: finite(path, rec, 0, "t")?,
                track_id: if id.is_empty() {
                    None
                } else {
                    Some(TrackId(field(path, rec, 1, "track_id")?))
                },
                bbox: BoundingBox3D {
                    center: WorldPoint::new(
                        finite(path, rec, 2, "cx")?,
                        finite(path, rec, 3, "cy")?,
                        finite(path, rec, 4, "cz")?,
                    ),
                    length: finite(path, rec, 5, "length")?,
                    width: finite(path, rec, 6, "width")?,
                    height: finite(path, rec, 7, "height")?,
                    yaw: finite(path, rec, 8, "yaw")?,
                },
            })
        })
        .collect()
}

pub fn write_pairs(path: &Path, pairs: &[TrackPair]) -> Result<()> {
    let mut w = csv_writer(path, &PAIR_HEADER)?;
    for p in pairs {
        w.write_record([
            p.camera_track_id.to_string(),
            p.lidar_track_id.to_string(),
            p.frames_matched.to_string(),
            p.mean_distance.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_pairs(path: &Path) -> Result<Vec<TrackPair>> {
    csv_records(path, &PAIR_HEADER)?
        .iter()
        .map(|rec| {
            Ok(TrackPair {
                camera_track_id: TrackId(field(path, rec, 0, "camera_track_id")?),
                lidar_track_id: TrackId(field(path, rec, 1, "lidar_track_id")?),
                frames_matched: field(path, rec, 2, "frames_matched")?,
                mean_distance: finite(path, rec, 3, "mean_distance")?,
            })
        })
        .collect()
}

/// Writes `report.csv`, `winners.csv` and `plots/vehicle_<id>.csv` into `dir`.
pub fn write_report(dir: &Path, report: &ErrorReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("report.csv");
    let mut w = csv_writer(&path, &REPORT_HEADER)?;
    for r in &report.rows {
        let c = &r.cumulative;
        w.write_record([
            r.vehicle_id.to_string(),
            r.method.to_string(),
            c.lon.to_string(),
            c.lat.to_string(),
            c.mae_lon().to_string(),
            c.mae_lat().to_string(),
            c.n.to_string(),
            r.warnings.join(";"),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)?;

    let path = dir.join("winners.csv");
    let mut w = csv_writer(&path, &WINNER_HEADER)?;
    let name = |m: Option<Method>| m.map(|m| m.to_string()).unwrap_or_default();
    for win in &report.winners {
        w.write_record([win.vehicle_id.to_string(), name(win.lon), name(win.lat)])
            .map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)?;

    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    for (vid, rows) in &report.plots {
        write_plot(&plots.join(format!("vehicle_{vid}.csv")), rows)?;
    }
    Ok(())
}

fn write_plot(path: &Path, rows: &[PlotRow]) -> Result<()> {
    let mut w = csv_writer(path, &PLOT_HEADER)?;
    for r in rows {
        let mut rec = vec![r.gt_x.to_string()];
        rec.extend(r.err_lon.iter().map(|e| e.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Report rows as read back from `report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub vehicle_id: TrackId,
    pub method: Method,
    pub cum_abs_lon: f64,
    pub cum_abs_lat: f64,
    pub mae_lon: f64,
    pub mae_lat: f64,
    pub n_samples: usize,
    pub warnings: Vec<String>,
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRecord>> {
    csv_records(path, &REPORT_HEADER)?
        .iter()
        .map(|rec| {
            let w = rec.get(7).unwrap_or("");
            Ok(ReportRecord {
                vehicle_id: TrackId(field(path, rec, 0, "vehicle_id")?),
                method: field(path, rec, 1, "method")?,
                cum_abs_lon: finite(path, rec, 2, "cum_abs_lon")?,
                cum_abs_lat: finite(path, rec, 3, "cum_abs_lat")?,
                mae_lon: finite(path, rec, 4, "mae_lon")?,
                mae_lat: finite(path, rec, 5, "mae_lat")?,
                n_samples: field(path, rec, 6, "n_samples")?,
                warnings: if w.is_empty() {
                    Vec::new()
                } else {
                    w.split(';').map(str::to_owned).collect()
                },
            })
        })
        .collect()
}

/// One entry of a capture manifest: frame time and cloud file, relative to
/// the manifest's directory unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub t: f64,
    pub file: PathBuf,
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let json = serde_json::to_string_pretty(entries).map_err(|e| Error::parse(path, e.to_string()))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    if let Some(e) = entries.iter().find(|e| !e.t.is_finite()) {
        return Err(Error::parse(
            path,
            format!("non-finite frame time for {}", e.file.display()),
        ));
    }
    Ok(entries)
}

/// Resolves a manifest entry's file against the manifest location.
pub fn manifest_file(manifest: &Path, entry: &ManifestEntry) -> PathBuf {
    if entry.file.is_absolute() {
        entry.file.clone()
    } else {
        manifest.parent().unwrap_or(Path::new(".")).join(&entry.file)
    }
}

/// PLY encodings accepted by [`write_ply_as`] and [`read_ply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

/// Writes `x y z intensity` as little-endian float32, the usual LiDAR layout.
pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_ply_as(path, cloud, PlyEncoding::BinaryLittleEndian)
}

pub fn write_ply_as(path: &Path, cloud: &PointCloud, encoding: PlyEncoding) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let (format, ty) = match encoding {
        PlyEncoding::Ascii => ("ascii", "double"),
        PlyEncoding::BinaryLittleEndian => ("binary_little_endian", "float"),
    };
    write!(w, "ply\nformat {format} 1.0\nelement vertex {}\n", cloud.len()).map_err(io)?;
    for name in ["x", "y", "z", "intensity"] {
        writeln!(w, "property {ty} {name}").map_err(io)?;
    }
    w.write_all(b"end_header\n").map_err(io)?;
    for p in &cloud.points {
        match encoding {
            PlyEncoding::Ascii => writeln!(w, "{} {} {} {}", p.x, p.y, p.z, p.intensity).map_err(io)?,
            PlyEncoding::BinaryLittleEndian => {
                for v in [p.x, p.y, p.z, p.intensity] {
                    w.write_all(&(v as f32).to_le_bytes()).map_err(io)?;
                }
            }
        }
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

/// Reads an ASCII or binary little-endian PLY file with (at least) `x`,
/// `y`, `z` and `intensity` vertex properties, in any order. Vertices must
/// be the first element.
pub fn read_ply(path: &Path, t: f64) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    let mut next_line = |r: &mut BufReader<File>| -> Result<Option<String>> {
        line.clear();
        let n = r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        Ok((n > 0).then(|| line.trim_end().to_owned()))
    };
    if next_line(&mut r)?.as_deref() != Some("ply") {
        return Err(Error::parse(path, "missing 'ply' magic line"));
    }
    let mut encoding = None;
    let mut count: Option<usize> = None;
    let mut props: Vec<(String, Scalar)> = Vec::new();
    let mut in_vertex = false;
    loop {
        let Some(header) = next_line(&mut r)? else {
            return Err(Error::parse(path, "unexpected end of header"));
        };
        let words: Vec<&str> = header.split_whitespace().collect();
        match words.as_slice() {
            ["format", "ascii", _] => encoding = Some(PlyEncoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(PlyEncoding::BinaryLittleEndian),
            ["format", fmt, ..] => return Err(Error::parse(path, format!("unsupported PLY format '{fmt}'"))),
            ["element", "vertex", n] => {
                if count.is_some() || !props.is_empty() {
                    return Err(Error::parse(path, "the vertex element must come first"));
                }
                count = Some(
                    n.parse()
                        .map_err(|_| Error::parse(path, format!("bad vertex count '{n}'")))?,
                );
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", "list", ..] if in_vertex => {
                return Err(Error::parse(path, "list properties on vertices are not supported"))
            }
            ["property", ty, name] if in_vertex => {
                let ty =
                    Scalar::parse(ty).ok_or_else(|| Error::parse(path, format!("unknown property type '{ty}'")))?;
                props.push(((*name).to_owned(), ty));
            }
            ["end_header"] => break,
            _ => {}
        }
    }
    let encoding = encoding.ok_or_else(|| Error::parse(path, "missing format line"))?;
    let count = count.ok_or_else(|| Error::parse(path, "no vertex element"))?;
    let col = |name: &str| {
        props
            .iter()
            .position(|p| p.0 == name)
            .ok_or_else(|| Error::parse(path, format!("missing vertex property '{name}'")))
    };
    let cols = [col("x")?, col("y")?, col("z")?, col("intensity")?];
    let mut points = Vec::with_capacity(count);
    let mut vals = vec![0.0; props.len()];
    let stride: usize = props.iter().map(|p| p.1.size()).sum();
    let mut buf = vec![0u8; stride];
    for k in 0..count {
        match encoding {
            PlyEncoding::Ascii => {
                let text = next_line(&mut r)?
                    .ok_or_else(|| Error::parse(path, format!("expected {count} vertices, found {k}")))?;
                let parsed: Vec<f64> = text
                    .split_whitespace()
                    .map(|v| v.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(path, format!("vertex {k}: malformed number")))?;
                if parsed.len() != props.len() {
                    return Err(Error::parse(
                        path,
                        format!("vertex {k}: expected {} values", props.len()),
                    ));
                }
                vals.copy_from_slice(&parsed);
            }
            PlyEncoding::BinaryLittleEndian => {
                std::io::Read::read_exact(&mut r, &mut buf)
                    .map_err(|_| Error::parse(path, format!("expected {count} vertices, file ends at {k}")))?;
                let mut off = 0;
                for (v, (_, ty)) in vals.iter_mut().zip(&props) {
                    *v = ty.decode(&buf[off..]);
                    off += ty.size();
                }
            }
        }
        let [x, y, z, i] = cols.map(|c| vals[c]);
        if ![x, y, z, i].iter().all(|v| v.is_finite()) {
            return Err(Error::parse(path, format!("vertex {k}: non-finite value")));
        }
        points.push(LidarPoint::new(x, y, z, i));
    }
    Ok(PointCloud::new(FrameTag::World, t, points))
}

/// Reads a `x,y,z,intensity` CSV point cloud.
pub fn read_cloud_csv(path: &Path, t: f64) -> Result<PointCloud> {
    let points = csv_records(path, &["x", "y", "z", "intensity"])?
        .iter()
        .map(|rec| {
            Ok(LidarPoint::new(
                finite(path, rec, 0, "x")?,
                finite(path, rec, 1, "y")?,
                finite(path, rec, 2, "z")?,
                finite(path, rec, 3, "intensity")?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PointCloud::new(FrameTag::World, t, points))
}

/// Reads a cloud by extension: `.ply` or `.csv`.
pub fn read_cloud(path: &Path, t: f64) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ply") => read_ply(path, t),
        Some("csv") => read_cloud_csv(path, t),
        _ => Err(Error::parse(path, "point clouds must be .ply or .csv")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let a = Trajectory::from_points(
            TrackId(3),
            SensorSource::Camera,
            [
                (0.1, WorldPoint::new(1.0 / 3.0, -2.5, 0.0)),
                (0.2, WorldPoint::new(1e-7, 4.0, 0.75)),
            ],
        )
        .unwrap();
        let b =
            Trajectory::from_points(TrackId(1), SensorSource::Fused, [(0.0, WorldPoint::ground(5.0, 6.0))]).unwrap();
        write_trajectories(&path, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(read_trajectories(&path).unwrap(), vec![b, a]);
    }

    #[test]
    fn empty_files_keep_headers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_detections(&path, &[]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            DETECTION_HEADER.join(",") + "\n"
        );
        assert!(read_detections(&path).unwrap().is_empty());
    }

    #[test]
    fn wrong_header_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_trajectories(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_stamp_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "t,track_id,source,x,y,z\n0,1,camera,0,0,0\n0,1,camera,1,0,0\n").unwrap();
        assert!(matches!(read_trajectories(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn detection_round_trip_with_and_without_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let bbox = BoundingBox3D {
            center: WorldPoint::new(800.5, 1.25, 0.8),
            length: 4.6,
            width: 1.8,
            height: 1.5,
            yaw: -3.25,
        };
        let dets = vec![
            TimedDetection {
                t: 0.05,
                track_id: None,
                bbox,
            },
            TimedDetection {
                t: 0.1,
                track_id: Some(TrackId(9)),
                bbox,
            },
        ];
        write_detections(&path, &dets).unwrap();
        assert_eq!(read_detections(&path).unwrap(), dets);
    }

    #[test]
    fn ply_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let cloud = PointCloud::new(
            FrameTag::World,
            1.5,
            vec![
                LidarPoint::new(812.125, 2.0, 3.0, 4.0),
                LidarPoint::new(-0.1, 1e-3, 7.25, 0.0),
            ],
        );
        write_ply_as(&path, &cloud, PlyEncoding::Ascii).unwrap();
        assert_eq!(read_cloud(&path, 1.5).unwrap(), cloud);

        write_ply(&path, &cloud).unwrap();
        let back = read_cloud(&path, 1.5).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.points[0], cloud.points[0]);
        for (a, b) in back.points.iter().zip(&cloud.points) {
            assert!((a.x - b.x).abs() < 1e-6 * b.x.abs().max(1.0) && (a.y - b.y).abs() < 1e-7);
        }
    }

    #[test]
    fn truncated_binary_ply_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        write_ply(
            &path,
            &PointCloud::new(FrameTag::World, 0.0, vec![LidarPoint::new(1.0, 2.0, 3.0, 4.0); 3]),
        )
        .unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(read_ply(&path, 0.0), Err(Error::Parse { .. })));
    }

    #[test]
    fn ply_with_reordered_properties() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\ncomment x\nelement vertex 1\nproperty float intensity\nproperty float z\nproperty float y\nproperty float x\nend_header\n9 3 2 1\n",
        )
        .unwrap();
        assert_eq!(
            read_ply(&path, 0.0).unwrap().points,
            vec![LidarPoint::new(1.0, 2.0, 3.0, 9.0)]
        );
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let entries = vec![ManifestEntry {
            t: 0.05,
            file: "clouds/000001.ply".into(),
        }];
        write_manifest(&path, &entries).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), entries);
        assert_eq!(manifest_file(&path, &entries[0]), dir.path().join("clouds/000001.ply"));
    }

    #[test]
    fn missing_file_is_io_error_naming_path() {
        let err = read_cloud(Path::new("/nonexistent/x.ply"), 0.0).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.ply"));
    }
}

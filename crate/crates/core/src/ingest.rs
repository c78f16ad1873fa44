//! Raw sweep sequences and their on-disk interchange layout.
//!
//! A sequence directory holds:
//!
//! ```text
//! manifest.json       sequence_id, frame list (frame_index, optional timestamp), ego_to_sensor
//! poses.json          per-frame world-from-ego quaternion + translation
//! boxes.json          per-frame list of {instance_id, center, quaternion, half_extents}
//! points/NNNNNN.bin   little-endian f32 x,y,z triples in the sensor frame
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedBox, RigidTransform, Vec3};

/// Frame period assumed when a manifest omits timestamps (10 Hz).
pub const DEFAULT_FRAME_PERIOD: f64 = 0.1;

/// One LiDAR scan.
#[derive(Clone, Debug, PartialEq)]
pub struct LidarSweep {
    pub frame_index: usize,
    /// Seconds.
    pub timestamp: f64,
    /// Returns in the sensor frame.
    pub points: Vec<[f32; 3]>,
    /// World-from-ego.
    pub ego_pose: RigidTransform,
    /// Sensor origin in the ego frame.
    pub sensor_origin: Vec3,
}

/// Per-frame boxes of one object.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceBoxTrack {
    pub instance_id: String,
    pub entries: BTreeMap<usize, OrientedBox>,
}

impl InstanceBoxTrack {
    pub fn new(instance_id: impl Into<String>) -> Self {
        Self {
            instance_id: instance_id.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn at(&self, frame: usize) -> Option<&OrientedBox> {
        self.entries.get(&frame)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawSequence {
    pub sequence_id: String,
    pub sweeps: Vec<LidarSweep>,
    /// Sorted by instance id.
    pub tracks: Vec<InstanceBoxTrack>,
    pub ego_to_sensor: RigidTransform,
}

impl RawSequence {
    /// Validates and assembles a sequence; tracks are sorted by id.
    pub fn new(
        sequence_id: impl Into<String>,
        sweeps: Vec<LidarSweep>,
        mut tracks: Vec<InstanceBoxTrack>,
        ego_to_sensor: RigidTransform,
    ) -> Result<Self> {
        tracks.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        let seq = Self {
            sequence_id: sequence_id.into(),
            sweeps,
            tracks,
            ego_to_sensor,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps.is_empty() {
            return Err(Error::Consistency(format!(
                "sequence {} has no sweeps",
                self.sequence_id
            )));
        }
        for pair in self.sweeps.windows(2) {
            if pair[1].frame_index != pair[0].frame_index + 1 {
                return Err(Error::Consistency(format!(
                    "frame {} follows frame {}; frame indices must be consecutive",
                    pair[1].frame_index, pair[0].frame_index
                )));
            }
        }
        for sweep in &self.sweeps {
            if let Some(point) = sweep
                .points
                .iter()
                .position(|p| p.iter().any(|v| !v.is_finite()))
            {
                return Err(Error::Data {
                    frame: sweep.frame_index,
                    point,
                });
            }
        }
        for pair in self.tracks.windows(2) {
            if pair[0].instance_id == pair[1].instance_id {
                return Err(Error::Consistency(format!(
                    "duplicate track {}",
                    pair[0].instance_id
                )));
            }
        }
        for track in &self.tracks {
            for (frame, b) in &track.entries {
                if b.instance_id != track.instance_id {
                    return Err(Error::Consistency(format!(
                        "box {} stored under track {}",
                        b.instance_id, track.instance_id
                    )));
                }
                if self.sweep(*frame).is_none() {
                    return Err(Error::Consistency(format!(
                        "track {} has a box at frame {frame}, which has no sweep",
                        track.instance_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn first_frame(&self) -> usize {
        self.sweeps[0].frame_index
    }

    pub fn last_frame(&self) -> usize {
        self.sweeps[self.sweeps.len() - 1].frame_index
    }

    pub fn sweep(&self, frame: usize) -> Option<&LidarSweep> {
        let first = self.sweeps.first()?.frame_index;
        frame
            .checked_sub(first)
            .and_then(|i| self.sweeps.get(i))
            .filter(|s| s.frame_index == frame)
    }

    /// Boxes annotated at `frame`, in track order.
    pub fn boxes_at(&self, frame: usize) -> impl Iterator<Item = &OrientedBox> {
        self.tracks.iter().filter_map(move |t| t.at(frame))
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    sequence_id: String,
    frames: Vec<FrameRecord>,
    ego_to_sensor: RigidTransform,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    frame_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    frame_index: usize,
    quaternion: [f64; 4],
    translation: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct FrameBoxes {
    frame_index: usize,
    boxes: Vec<OrientedBox>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn point_file_name(frame_index: usize) -> String {
    format!("{frame_index:06}.bin")
}

/// Encodes points as little-endian f32 triples.
pub fn encode_points(points: &[[f32; 3]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * 12);
    for p in points {
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_points(bytes: &[u8]) -> Result<Vec<[f32; 3]>> {
    if bytes.len() % 12 != 0 {
        return Err(Error::Format(format!(
            "point payload of {} bytes is not a whole number of xyz triples",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes([c[i], c[i + 1], c[i + 2], c[i + 3]]);
            [f(0), f(4), f(8)]
        })
        .collect())
}

/// Loads and validates one sequence directory. Points stay in the sensor frame.
pub fn load_sequence(dir: &Path) -> Result<RawSequence> {
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(Error::Format(format!(
            "{} has no manifest.json",
            dir.display()
        )));
    }
    let manifest: ManifestFile = read_json(&manifest_path)?;
    let poses: Vec<PoseRecord> = read_json(&dir.join("poses.json"))?;
    if poses.len() != manifest.frames.len() {
        return Err(Error::Consistency(format!(
            "{}: {} frames in manifest but {} poses",
            dir.display(),
            manifest.frames.len(),
            poses.len()
        )));
    }

    let points_dir = dir.join("points");
    let point_files = fs::read_dir(&points_dir)
        .map_err(|e| Error::io(format!("listing {}", points_dir.display()), e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "bin"))
        .count();
    if point_files != manifest.frames.len() {
        return Err(Error::Consistency(format!(
            "{}: {} frames in manifest but {} point files",
            dir.display(),
            manifest.frames.len(),
            point_files
        )));
    }

    let sensor_origin = manifest.ego_to_sensor.translation();
    let mut sweeps = Vec::with_capacity(manifest.frames.len());
    for (frame, pose) in manifest.frames.iter().zip(&poses) {
        if pose.frame_index != frame.frame_index {
            return Err(Error::Consistency(format!(
                "pose entry for frame {} found where frame {} was expected",
                pose.frame_index, frame.frame_index
            )));
        }
        let path = points_dir.join(point_file_name(frame.frame_index));
        let bytes = fs::read(&path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let points = decode_points(&bytes)?;
        if let Some(point) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Data {
                frame: frame.frame_index,
                point,
            });
        }
        sweeps.push(LidarSweep {
            frame_index: frame.frame_index,
            timestamp: frame
                .timestamp
                .unwrap_or(frame.frame_index as f64 * DEFAULT_FRAME_PERIOD),
            points,
            ego_pose: RigidTransform::from_parts(pose.quaternion, pose.translation)?,
            sensor_origin,
        });
    }

    let boxes_path = dir.join("boxes.json");
    let mut tracks: BTreeMap<String, InstanceBoxTrack> = BTreeMap::new();
    if boxes_path.is_file() {
        let frames: Vec<FrameBoxes> = read_json(&boxes_path)?;
        for fb in frames {
            for b in fb.boxes {
                let id = b.instance_id.clone();
                let track = tracks
                    .entry(id.clone())
                    .or_insert_with(|| InstanceBoxTrack::new(id.clone()));
                if track.entries.insert(fb.frame_index, b).is_some() {
                    return Err(Error::Consistency(format!(
                        "instance {id} annotated twice at frame {}",
                        fb.frame_index
                    )));
                }
            }
        }
    }

    RawSequence::new(
        manifest.sequence_id,
        sweeps,
        tracks.into_values().collect(),
        manifest.ego_to_sensor,
    )
}

/// Writes `seq` in the interchange layout, creating `dir` if needed.
pub fn save_sequence(seq: &RawSequence, dir: &Path) -> Result<()> {
    let points_dir = dir.join("points");
    fs::create_dir_all(&points_dir)
        .map_err(|e| Error::io(format!("creating {}", points_dir.display()), e))?;

    let manifest = ManifestFile {
        sequence_id: seq.sequence_id.clone(),
        frames: seq
            .sweeps
            .iter()
            .map(|s| FrameRecord {
                frame_index: s.frame_index,
                timestamp: Some(s.timestamp),
            })
            .collect(),
        ego_to_sensor: seq.ego_to_sensor,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;

    let poses: Vec<PoseRecord> = seq
        .sweeps
        .iter()
        .map(|s| {
            let t = s.ego_pose.translation();
            PoseRecord {
                frame_index: s.frame_index,
                quaternion: s.ego_pose.quaternion_wxyz(),
                translation: [t.x, t.y, t.z],
            }
        })
        .collect();
    write_json(&dir.join("poses.json"), &poses)?;

    let boxes: Vec<FrameBoxes> = seq
        .sweeps
        .iter()
        .map(|s| FrameBoxes {
            frame_index: s.frame_index,
            boxes: seq
                .boxes_at(s.frame_index)
                .cloned()
                .collect(),
        })
        .collect();
    write_json(&dir.join("boxes.json"), &boxes)?;

    for s in &seq.sweeps {
        let path = points_dir.join(point_file_name(s.frame_index));
        fs::write(&path, encode_points(&s.points))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    Ok(())
}

/// Sequence subdirectories of a raw corpus directory, sorted by name.
pub fn list_sequence_dirs(raw_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut dirs: Vec<_> = fs::read_dir(raw_dir)
        .map_err(|e| Error::io(format!("listing {}", raw_dir.display()), e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.join("manifest.json").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

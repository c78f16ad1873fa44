//! Coordinate unification, static/dynamic segmentation and dynamic-object
//! synchronization of raw sweeps.
//!
//! Everything produced here lives in the ego frame of the sample anchor
//! (`t0`). Dynamic points are re-posed from the box pose at capture time to
//! the box pose at the target frame before they are aggregated, so moving
//! objects do not smear into tubes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{OrientedBox, RigidTransform, Vec3};
use crate::ingest::{LidarSweep, RawSequence};

/// Maps sensor-frame returns of `sweep` into the ego frame at `ego_pose_t0`.
///
/// Returns the points and the sensor origin in that frame.
pub fn unify_frame(
    sweep: &LidarSweep,
    ego_pose_t0: &RigidTransform,
    ego_to_sensor: &RigidTransform,
) -> (Vec<Vec3>, Vec3) {
    let chain = ego_pose_t0
        .inverse()
        .compose(&sweep.ego_pose)
        .compose(ego_to_sensor);
    let points = sweep
        .points
        .iter()
        .map(|p| chain.apply(&Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)))
        .collect();
    (points, chain.translation())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentedSweep {
    pub frame_index: usize,
    pub static_points: Vec<Vec3>,
    /// Points per instance, still at the object's pose for this frame.
    pub dynamic_points: BTreeMap<String, Vec<Vec3>>,
    pub sensor_origin_unified: Vec3,
}

impl SegmentedSweep {
    pub fn point_count(&self) -> usize {
        self.static_points.len() + self.dynamic_points.values().map(Vec::len).sum::<usize>()
    }
}

/// Splits unified points into static background and per-instance sets.
///
/// A point inside several boxes goes to the box with the nearest center;
/// exact ties go to the lexicographically smallest instance id. `margin`
/// inflates every box on all faces (0 disables inflation).
pub fn segment_sweep(
    frame_index: usize,
    points: Vec<Vec3>,
    sensor_origin: Vec3,
    boxes: &[OrientedBox],
    margin: f64,
) -> SegmentedSweep {
    let mut order: Vec<&OrientedBox> = boxes.iter().collect();
    order.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let inverses: Vec<RigidTransform> = order.iter().map(|b| b.pose.inverse()).collect();

    let mut static_points = Vec::with_capacity(points.len());
    let mut dynamic_points: BTreeMap<String, Vec<Vec3>> = BTreeMap::new();
    for p in points {
        let mut best: Option<(usize, f64)> = None;
        for (i, b) in order.iter().enumerate() {
            let local = inverses[i].apply(&p);
            let inside = (0..3).all(|a| local[a].abs() <= b.half_extents[a] + margin);
            if !inside {
                continue;
            }
            let d2 = (p - b.center()).norm_squared();
            // Strict comparison keeps the earlier (smaller) id on ties.
            if best.map_or(true, |(_, bd)| d2 < bd) {
                best = Some((i, d2));
            }
        }
        match best {
            Some((i, _)) => dynamic_points
                .entry(order[i].instance_id.clone())
                .or_default()
                .push(p),
            None => static_points.push(p),
        }
    }
    SegmentedSweep {
        frame_index,
        static_points,
        dynamic_points,
        sensor_origin_unified: sensor_origin,
    }
}

/// Moves points rigidly attached to a box from its `src` pose to its `dst` pose.
pub fn sync_object(points: &[Vec3], box_pose_src: &RigidTransform, box_pose_dst: &RigidTransform) -> Vec<Vec3> {
    let t = box_pose_dst.compose(&box_pose_src.inverse());
    points.iter().map(|p| t.apply(p)).collect()
}

/// Default box inflation. Returns on a box face can round to just outside it.
pub const DEFAULT_BOX_MARGIN: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateOptions {
    /// Re-pose dynamic points to the target frame. Disabling reproduces naive
    /// superimposition, tubes included.
    pub synchronize: bool,
    /// Box inflation for point assignment, meters.
    pub box_margin: f64,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self {
            synchronize: true,
            box_margin: DEFAULT_BOX_MARGIN,
        }
    }
}

/// Points of one window frame after aggregation to a target.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedFrame {
    pub frame_index: usize,
    pub sensor_origin: Vec3,
    pub static_points: Vec<Vec3>,
    pub dynamic_points: BTreeMap<String, Vec<Vec3>>,
}

/// An object whose points were discarded because it has no box at the target frame.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DroppedObject {
    pub instance_id: String,
    pub source_frame: usize,
    pub target_frame: usize,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub target_frame: usize,
    /// One entry per window frame, in window order.
    pub frames: Vec<AggregatedFrame>,
    pub dropped: Vec<DroppedObject>,
}

impl Aggregate {
    pub fn static_points(&self) -> impl Iterator<Item = &Vec3> {
        self.frames.iter().flat_map(|f| f.static_points.iter())
    }

    pub fn dynamic_points(&self) -> impl Iterator<Item = &Vec3> {
        self.frames
            .iter()
            .flat_map(|f| f.dynamic_points.values().flatten())
    }

    /// All synced points per instance, concatenated over the window.
    pub fn dynamic_by_instance(&self) -> BTreeMap<&str, Vec<Vec3>> {
        let mut out: BTreeMap<&str, Vec<Vec3>> = BTreeMap::new();
        for f in &self.frames {
            for (id, pts) in &f.dynamic_points {
                out.entry(id.as_str()).or_default().extend_from_slice(pts);
            }
        }
        out
    }

    pub fn sensor_origins(&self) -> Vec<Vec3> {
        self.frames.iter().map(|f| f.sensor_origin).collect()
    }

    /// `(origin, endpoint)` for every aggregated return.
    pub fn rays(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        self.frames.iter().flat_map(|f| {
            f.static_points
                .iter()
                .chain(f.dynamic_points.values().flatten())
                .map(move |p| (f.sensor_origin, *p))
        })
    }

    pub fn point_count(&self) -> usize {
        self.frames
            .iter()
            .map(|f| f.static_points.len() + f.dynamic_points.values().map(Vec::len).sum::<usize>())
            .sum()
    }
}

/// Segmented sweeps of a window plus every box pose in the t0 frame, shared by
/// all targets aggregated from that window.
#[derive(Clone, Debug)]
pub struct PreparedWindow {
    pub t0_frame: usize,
    pub frames: Vec<SegmentedSweep>,
    box_poses: BTreeMap<String, BTreeMap<usize, RigidTransform>>,
}

impl PreparedWindow {
    pub fn box_pose(&self, instance_id: &str, frame: usize) -> Option<&RigidTransform> {
        self.box_poses.get(instance_id)?.get(&frame)
    }
}

fn require_frame(seq: &RawSequence, frame: usize) -> Result<&LidarSweep> {
    seq.sweep(frame).ok_or_else(|| {
        Error::Range(format!(
            "frame {frame} is not in sequence {} (frames {}..={})",
            seq.sequence_id,
            seq.first_frame(),
            seq.last_frame()
        ))
    })
}

/// Unifies and segments every window frame once.
pub fn prepare_window(
    seq: &RawSequence,
    window: &[usize],
    t0: usize,
    options: &AggregateOptions,
) -> Result<PreparedWindow> {
    let ego_t0 = require_frame(seq, t0)?.ego_pose;
    let t0_from_world = ego_t0.inverse();

    let mut box_poses: BTreeMap<String, BTreeMap<usize, RigidTransform>> = BTreeMap::new();
    for track in &seq.tracks {
        let poses = track
            .entries
            .iter()
            .map(|(f, b)| (*f, t0_from_world.compose(&b.pose)))
            .collect();
        box_poses.insert(track.instance_id.clone(), poses);
    }

    let mut frames = Vec::with_capacity(window.len());
    for &f in window {
        let sweep = require_frame(seq, f)?;
        let (points, origin) = unify_frame(sweep, &ego_t0, &seq.ego_to_sensor);
        let boxes: Vec<OrientedBox> = seq.boxes_at(f).map(|b| b.transformed(&t0_from_world)).collect();
        frames.push(segment_sweep(f, points, origin, &boxes, options.box_margin));
    }
    Ok(PreparedWindow {
        t0_frame: t0,
        frames,
        box_poses,
    })
}

/// Aggregates a prepared window onto `target`.
pub fn aggregate_prepared(prepared: &PreparedWindow, target: usize, options: &AggregateOptions) -> Aggregate {
    let mut dropped = Vec::new();
    let frames = prepared
        .frames
        .iter()
        .map(|seg| {
            let mut dynamic_points = BTreeMap::new();
            for (id, pts) in &seg.dynamic_points {
                if !options.synchronize {
                    dynamic_points.insert(id.clone(), pts.clone());
                    continue;
                }
                let src = prepared.box_pose(id, seg.frame_index);
                let dst = prepared.box_pose(id, target);
                match (src, dst) {
                    (Some(src), Some(dst)) => {
                        dynamic_points.insert(id.clone(), sync_object(pts, src, dst));
                    }
                    _ => dropped.push(DroppedObject {
                        instance_id: id.clone(),
                        source_frame: seg.frame_index,
                        target_frame: target,
                        points: pts.len(),
                    }),
                }
            }
            AggregatedFrame {
                frame_index: seg.frame_index,
                sensor_origin: seg.sensor_origin_unified,
                static_points: seg.static_points.clone(),
                dynamic_points,
            }
        })
        .collect();
    Aggregate {
        target_frame: target,
        frames,
        dropped,
    }
}

/// Superimposes the window's sweeps onto `target`, all in the `t0` ego frame.
pub fn aggregate_to_target(
    seq: &RawSequence,
    window: &[usize],
    target: usize,
    t0: usize,
    options: &AggregateOptions,
) -> Result<Aggregate> {
    require_frame(seq, target)?;
    let prepared = prepare_window(seq, window, t0, options)?;
    Ok(aggregate_prepared(&prepared, target, options))
}

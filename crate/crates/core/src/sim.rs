//! Synthetic scenes and a ray-cast LiDAR with analytically known occupancy.
//!
//! Scenes are boxes and an optional ground plane in a world frame. Dynamic
//! boxes translate with a constant velocity and spin about their vertical
//! axis. [`analytic_occupancy`] gives the surface band and an observability
//! oracle for any frame, used to check the curation pipeline end to end.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, OrientedBox, RigidTransform, Vec3};
use crate::ingest::{InstanceBoxTrack, LidarSweep, RawSequence};
use crate::occupancy::{CellState, OccupancyGrid};

fn default_frame_rate() -> f64 {
    10.0
}

/// Horizontal ring pattern of a spinning LiDAR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    /// Azimuths, uniformly spaced over a full turn.
    pub n_azimuth: usize,
    /// Elevation of each ring, degrees.
    pub elevations_deg: Vec<f64>,
    pub max_range: f64,
    /// Ego-from-sensor.
    #[serde(default)]
    pub mount: RigidTransform,
    /// Azimuth of the first ray, degrees.
    #[serde(default)]
    pub azimuth_offset_deg: f64,
}

impl SensorSpec {
    /// Unit ray directions in the sensor frame, ring by ring.
    pub fn directions(&self) -> Vec<Vec3> {
        let mut dirs = Vec::with_capacity(self.n_azimuth * self.elevations_deg.len());
        for el in &self.elevations_deg {
            let el = el.to_radians();
            for i in 0..self.n_azimuth {
                let az = self.azimuth_offset_deg.to_radians() + 2.0 * PI * i as f64 / self.n_azimuth as f64;
                dirs.push(Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
            }
        }
        dirs
    }

    /// `n` rings evenly spaced between `lo` and `hi` degrees.
    pub fn uniform(n_azimuth: usize, lo: f64, hi: f64, rings: usize, max_range: f64) -> Self {
        let elevations_deg = if rings == 1 {
            vec![lo]
        } else {
            (0..rings).map(|i| lo + (hi - lo) * i as f64 / (rings - 1) as f64).collect()
        };
        Self {
            n_azimuth,
            elevations_deg,
            max_range,
            mount: RigidTransform::identity(),
            azimuth_offset_deg: 0.0,
        }
    }
}

/// A box moving with constant velocity and yaw rate from its t=0 pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicBox {
    #[serde(rename = "box")]
    pub initial: OrientedBox,
    /// m/s in the world frame.
    #[serde(default)]
    pub velocity: [f64; 3],
    /// rad/s about the box's vertical axis.
    #[serde(default)]
    pub yaw_rate: f64,
}

impl DynamicBox {
    pub fn at_time(&self, t: f64) -> OrientedBox {
        let v = Vec3::from(self.velocity);
        let spin = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), self.yaw_rate * t);
        let pose = RigidTransform::from_rotation_translation(
            spin * self.initial.pose.rotation(),
            self.initial.center() + v * t,
        );
        OrientedBox {
            pose,
            half_extents: self.initial.half_extents,
            instance_id: self.initial.instance_id.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeNoise {
    /// Standard deviation of additive range noise, meters.
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Height of the horizontal ground plane, if any.
    #[serde(default)]
    pub ground: Option<f64>,
    #[serde(default)]
    pub static_boxes: Vec<OrientedBox>,
    #[serde(default)]
    pub dynamic_boxes: Vec<DynamicBox>,
    pub sensor: SensorSpec,
    /// World-from-ego per frame; empty keeps the ego at the origin.
    #[serde(default)]
    pub ego_trajectory: Vec<RigidTransform>,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    #[serde(default)]
    pub range_noise: Option<RangeNoise>,
}

impl SceneSpec {
    pub fn new(sensor: SensorSpec) -> Self {
        Self {
            ground: None,
            static_boxes: Vec::new(),
            dynamic_boxes: Vec::new(),
            sensor,
            ego_trajectory: Vec::new(),
            frame_rate: default_frame_rate(),
            range_noise: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sensor.max_range > 0.0) {
            return Err(Error::Config("sensor max_range must be positive".into()));
        }
        if self.sensor.n_azimuth == 0 {
            return Err(Error::Config("sensor needs at least one azimuth".into()));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::Config("frame_rate must be positive".into()));
        }
        let mut ids = BTreeSet::new();
        for d in &self.dynamic_boxes {
            if !ids.insert(d.initial.instance_id.as_str()) {
                return Err(Error::Config(format!("duplicate dynamic box id {}", d.initial.instance_id)));
            }
        }
        if let Some(n) = self.range_noise {
            if !(n.sigma >= 0.0) {
                return Err(Error::Config("range noise sigma must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn time(&self, frame: usize) -> f64 {
        frame as f64 / self.frame_rate
    }

    pub fn ego_pose(&self, frame: usize) -> Result<RigidTransform> {
        if self.ego_trajectory.is_empty() {
            return Ok(RigidTransform::identity());
        }
        self.ego_trajectory.get(frame).copied().ok_or_else(|| {
            Error::Range(format!(
                "frame {frame} is beyond the {}-pose ego trajectory",
                self.ego_trajectory.len()
            ))
        })
    }

    /// Sensor origin in the world frame.
    pub fn sensor_origin(&self, frame: usize) -> Result<Vec3> {
        Ok(self.ego_pose(frame)?.compose(&self.sensor.mount).translation())
    }

    pub fn dynamic_boxes_at(&self, frame: usize) -> Vec<OrientedBox> {
        let t = self.time(frame);
        self.dynamic_boxes.iter().map(|d| d.at_time(t)).collect()
    }

    /// Distance from a world point to the nearest surface at `frame`.
    pub fn surface_distance(&self, p: &Vec3, frame: usize) -> f64 {
        let mut d = self.ground.map_or(f64::INFINITY, |z0| (p.z - z0).abs());
        for b in self.static_boxes.iter().chain(&self.dynamic_boxes_at(frame)) {
            d = d.min(b.surface_distance(p));
        }
        d
    }
}

/// Which scene surface a ray hit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    Ground,
    Static(usize),
    Dynamic(usize),
}

/// One simulated return, kept in double precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub range: f64,
    pub point_sensor: Vec3,
    pub point_world: Vec3,
    pub surface: Surface,
}

/// Entry distance of a ray into a box, or the exit distance when the ray
/// starts inside.
fn ray_box(origin: &Vec3, dir: &Vec3, b: &OrientedBox) -> Option<f64> {
    let inv = b.pose.inverse();
    let o = inv.apply(origin);
    let d = inv.rotate(dir);
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..3 {
        let h = b.half_extents[i];
        if d[i] == 0.0 {
            if o[i].abs() > h {
                return None;
            }
            continue;
        }
        let a = (-h - o[i]) / d[i];
        let c = (h - o[i]) / d[i];
        t0 = t0.max(a.min(c));
        t1 = t1.min(a.max(c));
    }
    if t0 > t1 {
        None
    } else if t0 > 0.0 {
        Some(t0)
    } else if t1 > 0.0 {
        Some(t1)
    } else {
        None
    }
}

/// Nearest surface along a world ray within `max_range`.
pub fn cast_ray(scene: &SceneSpec, dynamic: &[OrientedBox], origin: &Vec3, dir: &Vec3) -> Option<(f64, Surface)> {
    let mut best: Option<(f64, Surface)> = None;
    let mut consider = |t: f64, s: Surface| {
        if t > 0.0 && t <= scene.sensor.max_range && best.map_or(true, |(bt, _)| t < bt) {
            best = Some((t, s));
        }
    };
    if let Some(z0) = scene.ground {
        if dir.z != 0.0 {
            consider((z0 - origin.z) / dir.z, Surface::Ground);
        }
    }
    for (i, b) in scene.static_boxes.iter().enumerate() {
        if let Some(t) = ray_box(origin, dir, b) {
            consider(t, Surface::Static(i));
        }
    }
    for (i, b) in dynamic.iter().enumerate() {
        if let Some(t) = ray_box(origin, dir, b) {
            consider(t, Surface::Dynamic(i));
        }
    }
    best
}

/// Noise-free returns of one frame.
pub fn simulate_hits(scene: &SceneSpec, frame: usize) -> Result<Vec<Hit>> {
    let world_from_sensor = scene.ego_pose(frame)?.compose(&scene.sensor.mount);
    let origin = world_from_sensor.translation();
    let dynamic = scene.dynamic_boxes_at(frame);
    Ok(scene
        .sensor
        .directions()
        .into_iter()
        .filter_map(|d| {
            let dw = world_from_sensor.rotate(&d);
            cast_ray(scene, &dynamic, &origin, &dw).map(|(t, surface)| Hit {
                range: t,
                point_sensor: d * t,
                point_world: origin + dw * t,
                surface,
            })
        })
        .collect())
}

pub fn simulate_sweep(scene: &SceneSpec, frame: usize) -> Result<LidarSweep> {
    scene.validate()?;
    let hits = simulate_hits(scene, frame)?;
    let mut noise = scene.range_noise.filter(|n| n.sigma > 0.0).map(|n| {
        let rng = ChaCha8Rng::seed_from_u64(n.seed.wrapping_add(frame as u64));
        (rng, Normal::new(0.0, n.sigma).expect("sigma is finite and positive"))
    });
    let points = hits
        .iter()
        .map(|h| {
            let p = match &mut noise {
                Some((rng, normal)) => {
                    let r = (h.range + normal.sample(rng)).max(0.0);
                    h.point_sensor * (r / h.range)
                }
                None => h.point_sensor,
            };
            [p.x as f32, p.y as f32, p.z as f32]
        })
        .collect();
    Ok(LidarSweep {
        frame_index: frame,
        timestamp: scene.time(frame),
        points,
        ego_pose: scene.ego_pose(frame)?,
        sensor_origin: scene.sensor.mount.translation(),
    })
}

/// Frames `0..n_frames` with exact per-frame tracks for every dynamic box.
pub fn simulate_sequence(scene: &SceneSpec, n_frames: usize, sequence_id: &str) -> Result<RawSequence> {
    if n_frames == 0 {
        return Err(Error::Config("a sequence needs at least one frame".into()));
    }
    scene.validate()?;
    let sweeps = (0..n_frames)
        .into_par_iter()
        .map(|f| simulate_sweep(scene, f))
        .collect::<Result<Vec<_>>>()?;
    let tracks = scene
        .dynamic_boxes
        .iter()
        .map(|d| {
            let mut track = InstanceBoxTrack::new(d.initial.instance_id.clone());
            for f in 0..n_frames {
                track.entries.insert(f, d.at_time(scene.time(f)));
            }
            track
        })
        .collect();
    RawSequence::new(sequence_id, sweeps, tracks, scene.sensor.mount)
}

/// Ground truth for one frame of a simulated scene.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticOccupancy {
    spec: GridSpec,
    /// Voxel centre within half the band thickness of a surface.
    pub band: Vec<bool>,
    /// A dense ray sample lies strictly inside the voxel.
    pub observed: Vec<bool>,
    /// Some ray sample lies within the oracle tolerance of the voxel.
    pub near: Vec<bool>,
    /// The voxel contains a return endpoint.
    pub hit: Vec<bool>,
}

impl AnalyticOccupancy {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Band voxels OCCUPIED, everything else FREE.
    pub fn grid(&self) -> OccupancyGrid {
        let states = self
            .band
            .iter()
            .map(|b| if *b { CellState::Occupied } else { CellState::Free })
            .collect();
        OccupancyGrid::from_states(self.spec, states).expect("length matches spec")
    }

    /// No ray comes within the oracle tolerance of this voxel.
    pub fn unreachable(&self, i: usize) -> bool {
        !self.near[i]
    }
}

/// Surface band thickness in voxels; a centre counts when it lies within half of it.
pub const BAND_THICKNESS: f64 = 1.5;

/// Oracle ray sample spacing and reach, as a fraction of the smallest voxel edge.
pub const ORACLE_STEP: f64 = 0.1;

/// Analytic occupancy of `frame`, in the ego frame of `ego_pose_t0`.
///
/// The band marks voxels whose centre lies within `BAND_THICKNESS / 2` voxels
/// of a surface at frame time. Observability replays the noise-free returns of
/// every frame in `observing_frames`: returns on dynamic boxes are carried
/// along with their box to `frame`, and each segment from that frame's sensor
/// origin to its return is sampled densely.
pub fn analytic_occupancy(
    scene: &SceneSpec,
    spec: &GridSpec,
    frame: usize,
    ego_pose_t0: &RigidTransform,
    observing_frames: &[usize],
) -> Result<AnalyticOccupancy> {
    scene.validate()?;
    let vs = spec.voxel_size();
    let vmin = vs.min();
    let half_band = 0.5 * BAND_THICKNESS * vmin;

    let band: Vec<bool> = (0..spec.num_voxels())
        .into_par_iter()
        .map(|i| {
            let c = ego_pose_t0.apply(&spec.voxel_center(spec.unravel(i)));
            scene.surface_distance(&c, frame) <= half_band
        })
        .collect();

    let t0_from_world = ego_pose_t0.inverse();
    let at_frame = scene.dynamic_boxes_at(frame);
    let mut segments = Vec::new();
    for &k in observing_frames {
        let origin = t0_from_world.apply(&scene.sensor_origin(k)?);
        let at_k = scene.dynamic_boxes_at(k);
        for h in simulate_hits(scene, k)? {
            let end_world = match h.surface {
                Surface::Dynamic(j) => at_frame[j].pose.compose(&at_k[j].pose.inverse()).apply(&h.point_world),
                _ => h.point_world,
            };
            segments.push((origin, t0_from_world.apply(&end_world)));
        }
    }

    let n = spec.num_voxels();
    let (mut observed, mut near, mut hit) = (vec![false; n], vec![false; n], vec![false; n]);
    let step = ORACLE_STEP * vmin;
    let reach = ORACLE_STEP * vmin;
    let origin = spec.origin();
    for (o, e) in &segments {
        if let Some(idx) = spec.world_to_index(e) {
            hit[spec.linear_index(idx)] = true;
        }
        let len = (e - o).norm();
        let samples = (len / step).ceil().max(1.0) as usize;
        for s in 0..=samples {
            let p = o + (e - o) * (s as f64 / samples as f64);
            if let Some(idx) = spec.world_to_index(&p) {
                let inside = (0..3).all(|a| {
                    let f = (p[a] - origin[a]) / vs[a] - idx[a] as f64;
                    f > 1e-9 && f < 1.0 - 1e-9
                });
                if inside {
                    observed[spec.linear_index(idx)] = true;
                }
            }
            for corner in 0..8 {
                let q = Vec3::new(
                    p.x + if corner & 1 == 0 { -reach } else { reach },
                    p.y + if corner & 2 == 0 { -reach } else { reach },
                    p.z + if corner & 4 == 0 { -reach } else { reach },
                );
                if let Some(idx) = spec.world_to_index(&q) {
                    near[spec.linear_index(idx)] = true;
                }
            }
        }
    }
    for i in 0..n {
        observed[i] |= hit[i];
    }

    Ok(AnalyticOccupancy {
        spec: *spec,
        band,
        observed,
        near,
        hit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::unify_frame;

    fn boxed(id: &str, c: [f64; 3], h: [f64; 3]) -> OrientedBox {
        OrientedBox::new(id, RigidTransform::from_translation(c[0], c[1], c[2]), Vec3::from(h)).unwrap()
    }

    fn one_ray(max_range: f64) -> SensorSpec {
        SensorSpec {
            n_azimuth: 1,
            elevations_deg: vec![0.0],
            max_range,
            mount: RigidTransform::identity(),
            azimuth_offset_deg: 0.0,
        }
    }

    #[test]
    fn empty_scene_has_no_returns() {
        let scene = SceneSpec::new(SensorSpec::uniform(64, -15.0, 15.0, 16, 50.0));
        assert!(simulate_sweep(&scene, 0).unwrap().points.is_empty());
    }

    #[test]
    fn single_ray_hits_box_face() {
        let mut scene = SceneSpec::new(one_ray(50.0));
        scene.static_boxes.push(boxed("b", [3.0, 0.0, 0.0], [1.0, 1.0, 1.0]));
        let hits = simulate_hits(&scene, 0).unwrap();
        assert_eq!(hits.len(), 1);
        assert!((hits[0].range - 2.0).abs() <= 1e-9);
        assert_eq!(hits[0].surface, Surface::Static(0));
        let sweep = simulate_sweep(&scene, 0).unwrap();
        assert_eq!(sweep.points, vec![[2.0, 0.0, 0.0]]);
    }

    #[test]
    fn out_of_range_is_dropped() {
        let mut scene = SceneSpec::new(one_ray(1.5));
        scene.static_boxes.push(boxed("b", [3.0, 0.0, 0.0], [1.0, 1.0, 1.0]));
        assert!(simulate_hits(&scene, 0).unwrap().is_empty());
    }

    fn busy_scene() -> SceneSpec {
        let mut sensor = SensorSpec::uniform(64, -25.0, 10.0, 16, 60.0);
        sensor.mount = RigidTransform::from_translation(0.5, 0.0, 1.8);
        let mut scene = SceneSpec::new(sensor);
        scene.ground = Some(0.0);
        scene.static_boxes.push(
            OrientedBox::new(
                "wall",
                RigidTransform::from_yaw(0.3).with_translation(Vec3::new(8.0, 3.0, 1.5)),
                Vec3::new(0.3, 4.0, 1.5),
            )
            .unwrap(),
        );
        scene.dynamic_boxes.push(DynamicBox {
            initial: boxed("car", [-6.0, -2.0, 0.9], [2.0, 1.0, 0.8]),
            velocity: [3.0, 0.5, 0.0],
            yaw_rate: 0.2,
        });
        scene.ego_trajectory = (0..4).map(|k| RigidTransform::from_yaw(0.05 * k as f64).with_translation(Vec3::new(k as f64, 0.2, 0.0))).collect();
        scene
    }

    #[test]
    fn returns_lie_on_surfaces() {
        let scene = busy_scene();
        for f in 0..4 {
            let hits = simulate_hits(&scene, f).unwrap();
            assert!(hits.len() > 200);
            for h in &hits {
                assert!(scene.surface_distance(&h.point_world, f) <= 1e-6, "{h:?}");
            }
            // The stored f32 sweep maps back onto the same surfaces.
            let sweep = simulate_sweep(&scene, f).unwrap();
            let chain = sweep.ego_pose.compose(&scene.sensor.mount);
            for p in &sweep.points {
                let w = chain.apply(&Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64));
                assert!(scene.surface_distance(&w, f) <= 1e-4);
            }
        }
    }

    #[test]
    fn ray_box_matches_brute_force_march() {
        let scene = busy_scene();
        let b = &scene.static_boxes[0];
        let origin = Vec3::new(0.0, 0.0, 1.0);
        for i in 0..90 {
            let a = (i as f64 - 45.0).to_radians();
            let d = Vec3::new(a.cos(), a.sin(), 0.0);
            let got = ray_box(&origin, &d, b);
            let marched = (1..=20_000).map(|s| s as f64 * 1e-3).find(|t| b.contains(&(origin + d * *t)));
            match (got, marched) {
                (Some(t), Some(m)) => assert!((t - m).abs() <= 1e-3 + 1e-9, "{t} vs {m}"),
                (None, None) => {}
                other => panic!("{other:?} at {i}"),
            }
        }
    }

    #[test]
    fn stationary_static_scene_repeats() {
        let mut scene = busy_scene();
        scene.dynamic_boxes.clear();
        scene.ego_trajectory.clear();
        let seq = simulate_sequence(&scene, 2, "s").unwrap();
        assert_eq!(seq.sweeps[0].points, seq.sweeps[1].points);
        assert!(seq.tracks.is_empty());
    }

    #[test]
    fn unified_sweeps_lie_on_common_surfaces() {
        let mut scene = busy_scene();
        scene.dynamic_boxes.clear();
        let seq = simulate_sequence(&scene, 4, "s").unwrap();
        let t0 = seq.sweeps[0].ego_pose;
        for sweep in &seq.sweeps {
            let (pts, _) = unify_frame(sweep, &t0, &seq.ego_to_sensor);
            for p in pts {
                // Back to world through the t0 pose: must sit on the static surfaces.
                assert!(scene.surface_distance(&t0.apply(&p), 0) <= 1e-4);
            }
        }
    }

    #[test]
    fn dynamic_track_follows_linear_motion() {
        let mut scene = SceneSpec::new(one_ray(50.0));
        scene.dynamic_boxes.push(DynamicBox {
            initial: boxed("car", [10.0, 0.0, 0.0], [1.0, 1.0, 1.0]),
            velocity: [10.0, 0.0, 0.0],
            yaw_rate: 0.0,
        });
        let seq = simulate_sequence(&scene, 5, "s").unwrap();
        for k in 0..5 {
            let c = seq.tracks[0].at(k).unwrap().center();
            assert!((c - Vec3::new(10.0 + k as f64, 0.0, 0.0)).norm() <= 1e-12);
            assert!((seq.sweeps[k].points[0][0] - (9.0 + k as f32)).abs() <= 1e-5);
        }
    }

    #[test]
    fn trajectory_bounds() {
        let mut scene = busy_scene();
        assert!(matches!(simulate_sweep(&scene, 4), Err(Error::Range(_))));
        scene.sensor.max_range = 0.0;
        assert!(matches!(simulate_sweep(&scene, 0), Err(Error::Config(_))));
        let mut dup = busy_scene();
        dup.dynamic_boxes.push(dup.dynamic_boxes[0].clone());
        assert!(dup.validate().is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let mut scene = busy_scene();
        scene.range_noise = Some(RangeNoise { sigma: 0.05, seed: 7 });
        let a = simulate_sweep(&scene, 1).unwrap();
        let b = simulate_sweep(&scene, 1).unwrap();
        assert_eq!(a, b);
        scene.range_noise = None;
        assert_ne!(a.points, simulate_sweep(&scene, 1).unwrap().points);
    }

    #[test]
    fn scene_json_round_trip() {
        let scene = busy_scene();
        let text = serde_json::to_string(&scene).unwrap();
        assert_eq!(serde_json::from_str::<SceneSpec>(&text).unwrap(), scene);
        let minimal: SceneSpec =
            serde_json::from_str(r#"{"sensor":{"n_azimuth":8,"elevations_deg":[0],"max_range":10}}"#).unwrap();
        assert_eq!(minimal.frame_rate, 10.0);
    }

    #[test]
    fn analytic_empty_and_ground() {
        let scene = SceneSpec::new(one_ray(10.0));
        let spec = GridSpec::new([-2.0, -2.0, -2.2], [0.4; 3], [10, 10, 10]).unwrap();
        let a = analytic_occupancy(&scene, &spec, 0, &RigidTransform::identity(), &[]).unwrap();
        assert!(a.band.iter().all(|b| !b));

        let mut ground = scene.clone();
        ground.ground = Some(0.0);
        let a = analytic_occupancy(&ground, &spec, 0, &RigidTransform::identity(), &[]).unwrap();
        let plane_row = spec.world_to_index(&Vec3::zeros()).unwrap()[2];
        for i in 0..spec.num_voxels() {
            assert_eq!(a.band[i], spec.unravel(i)[2] == plane_row);
        }
    }

    #[test]
    fn analytic_band_matches_brute_force_on_rotated_box() {
        let mut scene = SceneSpec::new(one_ray(10.0));
        scene.static_boxes.push(
            OrientedBox::new(
                "r",
                RigidTransform::from_axis_angle(Vec3::new(0.3, -0.5, 1.0), 0.7).with_translation(Vec3::new(0.3, -0.2, 0.1)),
                Vec3::new(1.2, 0.7, 0.5),
            )
            .unwrap(),
        );
        let spec = GridSpec::new([-3.0; 3], [0.25; 3], [24, 24, 24]).unwrap();
        let a = analytic_occupancy(&scene, &spec, 0, &RigidTransform::identity(), &[]).unwrap();
        let b = &scene.static_boxes[0];
        let mut count = 0;
        for i in 0..spec.num_voxels() {
            // Nearest point on each of the six face rectangles.
            let c = spec.voxel_center(spec.unravel(i));
            let local = b.pose.inverse().apply(&c);
            let h = b.half_extents;
            let mut d = f64::INFINITY;
            for axis in 0..3 {
                for sign in [-1.0, 1.0] {
                    let mut q = local.zip_map(&h, |v, e| v.clamp(-e, e));
                    q[axis] = sign * h[axis];
                    d = d.min((local - q).norm());
                }
            }
            assert_eq!(a.band[i], d <= 0.1875 + 1e-12, "voxel {i}");
            count += a.band[i] as usize;
        }
        assert!(count > 100);
    }

    #[test]
    fn observability_oracle_behind_wall() {
        let mut sensor = SensorSpec::uniform(180, 0.0, 0.0, 1, 20.0);
        sensor.mount = RigidTransform::from_translation(0.0, 0.0, 0.3);
        let mut scene = SceneSpec::new(sensor);
        scene.static_boxes.push(boxed("wall", [3.0, 0.0, 0.5], [0.2, 2.0, 1.0]));
        let spec = GridSpec::new([-4.0, -4.0, 0.0], [0.5; 3], [16, 16, 2]).unwrap();
        let a = analytic_occupancy(&scene, &spec, 0, &RigidTransform::identity(), &[0]).unwrap();
        let behind = spec.linear_index(spec.world_to_index(&Vec3::new(3.8, 0.1, 0.2)).unwrap());
        let front = spec.linear_index(spec.world_to_index(&Vec3::new(1.0, 0.1, 0.2)).unwrap());
        assert!(a.unreachable(behind) && !a.observed[behind]);
        assert!(a.observed[front] && !a.band[front]);
        assert!(a.hit.iter().any(|h| *h));
    }
}

//! Voxelization, ray traversal and three-state occupancy grids.

use serde::{Deserialize, Serialize};

use crate::curation::{self, Aggregate, AggregateOptions, DroppedObject, PreparedWindow};
use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Vec3};
use crate::ingest::RawSequence;

/// Voxel state; the numeric codes are the on-disk codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    Free = 0,
    Occupied = 1,
    Unknown = 2,
}

impl CellState {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CellState::Free),
            1 => Some(CellState::Occupied),
            2 => Some(CellState::Unknown),
            _ => None,
        }
    }

    /// Evidence strength: UNKNOWN < FREE < OCCUPIED.
    fn rank(self) -> u8 {
        match self {
            CellState::Unknown => 0,
            CellState::Free => 1,
            CellState::Occupied => 2,
        }
    }

    /// Commutative merge keeping the stronger evidence.
    pub fn merge(self, other: CellState) -> CellState {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    spec: GridSpec,
    states: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn filled(spec: GridSpec, state: CellState) -> Self {
        Self {
            spec,
            states: vec![state; spec.num_voxels()],
        }
    }

    pub fn from_states(spec: GridSpec, states: Vec<CellState>) -> Result<Self> {
        if states.len() != spec.num_voxels() {
            return Err(Error::Shape(format!(
                "{} states for a grid of {} voxels",
                states.len(),
                spec.num_voxels()
            )));
        }
        Ok(Self { spec, states })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn states(&self) -> &[CellState] {
        &self.states
    }

    pub fn get(&self, idx: [usize; 3]) -> CellState {
        self.states[self.spec.linear_index(idx)]
    }

    pub fn set(&mut self, idx: [usize; 3], state: CellState) {
        let i = self.spec.linear_index(idx);
        self.states[i] = state;
    }

    pub fn get_linear(&self, i: usize) -> CellState {
        self.states[i]
    }

    pub fn set_linear(&mut self, i: usize, state: CellState) {
        self.states[i] = state;
    }

    pub fn count(&self, state: CellState) -> usize {
        self.states.iter().filter(|s| **s == state).count()
    }

    pub fn has_unknown(&self) -> bool {
        self.states.contains(&CellState::Unknown)
    }

    /// Voxelwise merge under UNKNOWN < FREE < OCCUPIED.
    pub fn merge_from(&mut self, other: &OccupancyGrid) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Shape("merging grids with different specs".into()));
        }
        for (a, b) in self.states.iter_mut().zip(&other.states) {
            *a = a.merge(*b);
        }
        Ok(())
    }
}

/// Binary grid: OCCUPIED where a voxel holds at least `min_points` points, FREE elsewhere.
pub fn voxelize<'a>(
    points: impl IntoIterator<Item = &'a Vec3>,
    spec: &GridSpec,
    min_points: usize,
) -> OccupancyGrid {
    let mut grid = OccupancyGrid::filled(*spec, CellState::Free);
    mark_occupied(&mut grid, points, min_points.max(1));
    grid
}

fn mark_occupied<'a>(grid: &mut OccupancyGrid, points: impl IntoIterator<Item = &'a Vec3>, min_points: usize) {
    let spec = grid.spec;
    if min_points <= 1 {
        for p in points {
            if let Some(idx) = spec.world_to_index(p) {
                grid.set(idx, CellState::Occupied);
            }
        }
        return;
    }
    let mut counts = vec![0u32; spec.num_voxels()];
    for p in points {
        if let Some(idx) = spec.world_to_index(p) {
            let c = &mut counts[spec.linear_index(idx)];
            *c = c.saturating_add(1);
        }
    }
    for (i, c) in counts.iter().enumerate() {
        if *c as usize >= min_points {
            grid.states[i] = CellState::Occupied;
        }
    }
}

/// Calls `visit` for every voxel whose interior the open segment
/// `origin → endpoint` crosses, in traversal order, stopping before the voxel
/// that contains the endpoint.
///
/// The segment is clipped to the grid first. Where the segment passes exactly
/// through an edge or corner, all tied axes step together so voxels that are
/// only touched at that edge or corner are skipped.
pub fn for_each_ray_voxel(spec: &GridSpec, origin: &Vec3, endpoint: &Vec3, mut visit: impl FnMut([usize; 3])) {
    let dims = spec.dims();
    let size = spec.voxel_size();
    let go = spec.origin();
    let a: [f64; 3] = std::array::from_fn(|i| (origin[i] - go[i]) / size[i]);
    let b: [f64; 3] = std::array::from_fn(|i| (endpoint[i] - go[i]) / size[i]);
    let d: [f64; 3] = std::array::from_fn(|i| b[i] - a[i]);
    if a.iter().chain(&b).any(|v| !v.is_finite()) {
        return;
    }

    let (mut t_enter, mut t_exit) = (0.0f64, 1.0f64);
    for i in 0..3 {
        let n = dims[i] as f64;
        if d[i] == 0.0 {
            if a[i] < 0.0 || a[i] >= n {
                return;
            }
            continue;
        }
        let (t_lo, t_hi) = {
            let ta = -a[i] / d[i];
            let tb = (n - a[i]) / d[i];
            (ta.min(tb), ta.max(tb))
        };
        t_enter = t_enter.max(t_lo);
        t_exit = t_exit.min(t_hi);
    }
    if t_enter >= t_exit {
        return;
    }

    let mut cell = [0i64; 3];
    for i in 0..3 {
        let e = a[i] + d[i] * t_enter;
        let mut c = e.floor();
        // Leaving a boundary in the negative direction starts in the lower voxel.
        if d[i] < 0.0 && e == c {
            c -= 1.0;
        }
        cell[i] = (c as i64).clamp(0, dims[i] as i64 - 1);
    }
    let end_cell = spec.world_to_index(endpoint).map(|c| c.map(|v| v as i64));

    let next_t = |cell: &[i64; 3], i: usize| -> f64 {
        if d[i] > 0.0 {
            (cell[i] as f64 + 1.0 - a[i]) / d[i]
        } else if d[i] < 0.0 {
            (cell[i] as f64 - a[i]) / d[i]
        } else {
            f64::INFINITY
        }
    };

    let max_steps = dims.iter().sum::<usize>() + 3;
    for _ in 0..max_steps {
        if end_cell == Some(cell) {
            return;
        }
        visit(cell.map(|v| v as usize));
        let ts = [next_t(&cell, 0), next_t(&cell, 1), next_t(&cell, 2)];
        let tn = ts[0].min(ts[1]).min(ts[2]);
        if tn >= t_exit {
            return;
        }
        for i in 0..3 {
            if ts[i] == tn {
                cell[i] += if d[i] > 0.0 { 1 } else { -1 };
                if cell[i] < 0 || cell[i] >= dims[i] as i64 {
                    return;
                }
            }
        }
    }
}

/// Voxels crossed by the segment before the endpoint voxel, in order.
pub fn traverse_ray(spec: &GridSpec, origin: &Vec3, endpoint: &Vec3) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for_each_ray_voxel(spec, origin, endpoint, |c| out.push(c));
    out
}

/// Marks FREE every UNKNOWN voxel crossed by a ray.
pub fn carve_free<I>(grid: &mut OccupancyGrid, rays: I)
where
    I: IntoIterator<Item = (Vec3, Vec3)>,
{
    let spec = grid.spec;
    for (o, e) in rays {
        for_each_ray_voxel(&spec, &o, &e, |c| {
            let i = spec.linear_index(c);
            if grid.states[i] == CellState::Unknown {
                grid.states[i] = CellState::Free;
            }
        });
    }
}

/// Three-state target grid: OCCUPIED from the points, FREE where crossed by a
/// ray, UNKNOWN elsewhere.
pub fn build_target_grid(
    static_points: &[Vec3],
    dynamic_points: &[Vec3],
    rays: &[(Vec3, Vec3)],
    spec: &GridSpec,
    min_points: usize,
) -> OccupancyGrid {
    let mut grid = OccupancyGrid::filled(*spec, CellState::Unknown);
    mark_occupied(&mut grid, static_points.iter().chain(dynamic_points), min_points.max(1));
    carve_free(&mut grid, rays.iter().copied());
    grid
}

/// Target grid straight from an aggregate; rays pair each return with its frame's origin.
pub fn target_grid_from_aggregate(agg: &Aggregate, spec: &GridSpec, min_points: usize) -> OccupancyGrid {
    let mut grid = OccupancyGrid::filled(*spec, CellState::Unknown);
    mark_occupied(&mut grid, agg.static_points().chain(agg.dynamic_points()), min_points.max(1));
    carve_free(&mut grid, agg.rays());
    grid
}

/// Which rays decide FREE versus UNKNOWN in target grids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayMode {
    /// Per target: each return, with dynamic returns synchronized to the
    /// target, is cast from its own frame's sensor origin.
    #[default]
    PerTarget,
    /// One ray set for the whole window using returns where they were
    /// captured; shared by every target.
    Pooled,
}

/// One training or evaluation example, all grids in the anchor's ego frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub sequence_id: String,
    pub t0_frame: usize,
    /// Binary grids for t = -T_in ..= 0.
    pub inputs: Vec<OccupancyGrid>,
    /// Three-state grids for t = 0 ..= T_out.
    pub targets: Vec<OccupancyGrid>,
}

impl Sample {
    pub fn t_in(&self) -> usize {
        self.inputs.len().saturating_sub(1)
    }

    pub fn t_out(&self) -> usize {
        self.targets.len().saturating_sub(1)
    }

    pub fn spec(&self) -> &GridSpec {
        self.targets[0].spec()
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() || self.targets.is_empty() {
            return Err(Error::Invariant("sample needs at least one input and one target".into()));
        }
        let spec = self.inputs[0].spec();
        if self.inputs.iter().chain(&self.targets).any(|g| g.spec() != spec) {
            return Err(Error::Invariant("sample grids disagree on their grid spec".into()));
        }
        if self.inputs.iter().any(OccupancyGrid::has_unknown) {
            return Err(Error::Invariant("input grid contains UNKNOWN voxels".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    pub min_points: usize,
    /// Extra frames aggregated on each side of the sample span.
    pub context: usize,
    pub box_margin: f64,
    pub synchronize: bool,
    pub ray_mode: RayMode,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            min_points: 1,
            context: 0,
            box_margin: curation::DEFAULT_BOX_MARGIN,
            synchronize: true,
            ray_mode: RayMode::PerTarget,
        }
    }
}

/// Side information gathered while building a sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleDiagnostics {
    pub dropped: Vec<DroppedObject>,
    /// Distinct instances with points in the window.
    pub dynamic_instances: usize,
}

/// Frames aggregated for a sample anchored at `t0`.
pub fn aggregation_window(seq: &RawSequence, t0: usize, t_in: usize, t_out: usize, context: usize) -> Result<Vec<usize>> {
    let first = seq.first_frame();
    let last = seq.last_frame();
    if t0 < first + t_in || t0 + t_out > last {
        return Err(Error::Range(format!(
            "anchor {t0} with T_in={t_in}, T_out={t_out} needs frames {}..={} but sequence {} has {first}..={last}",
            t0 as i64 - t_in as i64,
            t0 + t_out,
            seq.sequence_id
        )));
    }
    let lo = (t0 - t_in).saturating_sub(context).max(first);
    let hi = (t0 + t_out + context).min(last);
    Ok((lo..=hi).collect())
}

fn input_grid(prepared: &PreparedWindow, frame: usize, spec: &GridSpec, min_points: usize) -> Result<OccupancyGrid> {
    let seg = prepared
        .frames
        .iter()
        .find(|s| s.frame_index == frame)
        .ok_or_else(|| Error::Invariant(format!("frame {frame} missing from prepared window")))?;
    Ok(voxelize(
        seg.static_points.iter().chain(seg.dynamic_points.values().flatten()),
        spec,
        min_points,
    ))
}

pub fn build_sample(
    seq: &RawSequence,
    t0: usize,
    t_in: usize,
    t_out: usize,
    spec: &GridSpec,
    min_points: usize,
) -> Result<Sample> {
    let opts = SampleOptions {
        min_points,
        ..Default::default()
    };
    Ok(build_sample_with(seq, t0, t_in, t_out, spec, &opts)?.0)
}

/// Builds the inputs and targets of one sample anchored at `t0`.
pub fn build_sample_with(
    seq: &RawSequence,
    t0: usize,
    t_in: usize,
    t_out: usize,
    spec: &GridSpec,
    opts: &SampleOptions,
) -> Result<(Sample, SampleDiagnostics)> {
    let window = aggregation_window(seq, t0, t_in, t_out, opts.context)?;
    let agg_opts = AggregateOptions {
        synchronize: opts.synchronize,
        box_margin: opts.box_margin,
    };
    let prepared = curation::prepare_window(seq, &window, t0, &agg_opts)?;

    let inputs = (0..=t_in)
        .map(|k| input_grid(&prepared, t0 - t_in + k, spec, opts.min_points))
        .collect::<Result<Vec<_>>>()?;

    let pooled_free = match opts.ray_mode {
        RayMode::PerTarget => None,
        RayMode::Pooled => {
            let mut g = OccupancyGrid::filled(*spec, CellState::Unknown);
            carve_free(
                &mut g,
                prepared.frames.iter().flat_map(|f| {
                    f.static_points
                        .iter()
                        .chain(f.dynamic_points.values().flatten())
                        .map(move |p| (f.sensor_origin_unified, *p))
                }),
            );
            Some(g)
        }
    };

    let mut diagnostics = SampleDiagnostics {
        dynamic_instances: {
            let mut ids: Vec<&String> = prepared.frames.iter().flat_map(|f| f.dynamic_points.keys()).collect();
            ids.sort();
            ids.dedup();
            ids.len()
        },
        ..Default::default()
    };

    let mut targets = Vec::with_capacity(t_out + 1);
    for k in 0..=t_out {
        let agg = curation::aggregate_prepared(&prepared, t0 + k, &agg_opts);
        let grid = match &pooled_free {
            None => target_grid_from_aggregate(&agg, spec, opts.min_points),
            Some(free) => {
                let mut g = free.clone();
                mark_occupied(&mut g, agg.static_points().chain(agg.dynamic_points()), opts.min_points.max(1));
                g
            }
        };
        diagnostics.dropped.extend(agg.dropped);
        targets.push(grid);
    }

    let sample = Sample {
        sequence_id: seq.sequence_id.clone(),
        t0_frame: t0,
        inputs,
        targets,
    };
    sample.validate()?;
    Ok((sample, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn grid(dims: [usize; 3]) -> GridSpec {
        GridSpec::new([0.0; 3], [1.0; 3], dims).unwrap()
    }

    // Samples the open segment densely and collects the voxels hit, minus the endpoint voxel.
    fn sampled(spec: &GridSpec, o: Vec3, e: Vec3, n: usize) -> BTreeSet<[usize; 3]> {
        let end = spec.world_to_index(&e);
        (1..n)
            .filter_map(|i| spec.world_to_index(&(o + (e - o) * (i as f64 / n as f64))))
            .filter(|c| Some(*c) != end)
            .collect()
    }

    #[test]
    fn axis_ray_example() {
        let spec = grid([4, 4, 1]);
        let o = Vec3::new(0.5, 0.5, 0.5);
        let e = Vec3::new(3.5, 0.5, 0.5);
        let got = traverse_ray(&spec, &o, &e);
        assert_eq!(got, vec![[0, 0, 0], [1, 0, 0], [2, 0, 0]]);
        assert_eq!(got.iter().copied().collect::<BTreeSet<_>>(), sampled(&spec, o, e, 10_000));
    }

    #[test]
    fn same_voxel_is_empty() {
        let spec = grid([4, 4, 1]);
        assert!(traverse_ray(&spec, &Vec3::new(0.2, 0.2, 0.2), &Vec3::new(0.8, 0.7, 0.6)).is_empty());
    }

    #[test]
    fn diagonal_through_corners_skips_touch_cells() {
        let spec = grid([4, 4, 1]);
        let o = Vec3::new(0.5, 0.5, 0.5);
        let e = Vec3::new(2.5, 2.5, 0.5);
        let got = traverse_ray(&spec, &o, &e);
        assert_eq!(got, vec![[0, 0, 0], [1, 1, 0]]);
        assert_eq!(got.iter().copied().collect::<BTreeSet<_>>(), sampled(&spec, o, e, 1_000_000));
    }

    #[test]
    fn ray_outside_grid_is_empty() {
        let spec = grid([4, 4, 4]);
        assert!(traverse_ray(&spec, &Vec3::new(-5.0, 0.5, 0.5), &Vec3::new(-1.0, 3.5, 0.5)).is_empty());
        assert!(traverse_ray(&spec, &Vec3::new(0.5, 0.5, 7.0), &Vec3::new(3.5, 3.5, 9.0)).is_empty());
    }

    #[test]
    fn ray_is_clipped_at_both_ends() {
        let spec = grid([4, 1, 1]);
        let got = traverse_ray(&spec, &Vec3::new(-3.0, 0.5, 0.5), &Vec3::new(9.0, 0.5, 0.5));
        assert_eq!(got, vec![[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]]);
        let back = traverse_ray(&spec, &Vec3::new(9.0, 0.5, 0.5), &Vec3::new(-3.0, 0.5, 0.5));
        assert_eq!(back, vec![[3, 0, 0], [2, 0, 0], [1, 0, 0], [0, 0, 0]]);
    }

    #[test]
    fn negative_direction_from_boundary() {
        let spec = grid([4, 1, 1]);
        // Starting on the x=2 face and moving -x never enters voxel 2.
        let got = traverse_ray(&spec, &Vec3::new(2.0, 0.5, 0.5), &Vec3::new(0.5, 0.5, 0.5));
        assert_eq!(got, vec![[1, 0, 0]]);
    }

    #[test]
    fn voxelize_examples() {
        let spec = grid([3, 3, 3]);
        assert_eq!(voxelize(&[], &spec, 1).count(CellState::Occupied), 0);
        let g = voxelize(&[spec.voxel_center([1, 2, 0])], &spec, 1);
        assert_eq!(g.count(CellState::Occupied), 1);
        assert_eq!(g.get([1, 2, 0]), CellState::Occupied);
        let pts = [Vec3::new(0.1, 0.1, 0.1), Vec3::new(0.2, 0.2, 0.2), Vec3::new(2.5, 0.5, 0.5), Vec3::new(9.0, 0.0, 0.0)];
        let g2 = voxelize(&pts, &spec, 2);
        assert_eq!(g2.count(CellState::Occupied), 1);
        assert_eq!(g2.get([0, 0, 0]), CellState::Occupied);
    }

    #[test]
    fn voxelize_matches_brute_force_binning() {
        use rand::{Rng, SeedableRng};
        let spec = GridSpec::new([-2.0, -3.0, -1.0], [0.5, 0.25, 0.4], [10, 20, 6]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec3> = (0..100)
            .map(|_| Vec3::new(rng.gen_range(-2.0..3.0), rng.gen_range(-3.0..2.0), rng.gen_range(-1.0..1.4)))
            .collect();
        let g = voxelize(&pts, &spec, 1);
        let mut expected = BTreeSet::new();
        for p in &pts {
            let i = ((p.x + 2.0) / 0.5).floor() as usize;
            let j = ((p.y + 3.0) / 0.25).floor() as usize;
            let k = ((p.z + 1.0) / (0.4f32 as f64)).floor() as usize;
            expected.insert([i, j, k]);
        }
        let got: BTreeSet<[usize; 3]> = (0..spec.num_voxels())
            .filter(|l| g.get_linear(*l) == CellState::Occupied)
            .map(|l| spec.unravel(l))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn empty_target_is_unknown() {
        let spec = grid([4, 4, 4]);
        let g = build_target_grid(&[], &[], &[], &spec, 1);
        assert_eq!(g.count(CellState::Unknown), 64);
    }

    #[test]
    fn ray_hitting_wall_leaves_shadow_unknown() {
        let spec = grid([8, 1, 1]);
        let wall = Vec3::new(5.5, 0.5, 0.5);
        let g = build_target_grid(&[wall], &[], &[(Vec3::new(0.5, 0.5, 0.5), wall)], &spec, 1);
        let states: Vec<CellState> = (0..8).map(|i| g.get([i, 0, 0])).collect();
        use CellState::*;
        assert_eq!(states, vec![Free, Free, Free, Free, Free, Occupied, Unknown, Unknown]);
    }

    #[test]
    fn occupied_beats_free() {
        let spec = grid([4, 1, 1]);
        let g = build_target_grid(
            &[Vec3::new(1.5, 0.5, 0.5)],
            &[],
            &[(Vec3::new(0.5, 0.5, 0.5), Vec3::new(3.5, 0.5, 0.5))],
            &spec,
            1,
        );
        assert_eq!(g.get([1, 0, 0]), CellState::Occupied);
        assert_eq!(g.get([2, 0, 0]), CellState::Free);
        assert_eq!(g.get([3, 0, 0]), CellState::Unknown);
    }

    #[test]
    fn merge_is_commutative() {
        use CellState::*;
        for a in [Free, Occupied, Unknown] {
            for b in [Free, Occupied, Unknown] {
                assert_eq!(a.merge(b), b.merge(a));
            }
        }
        assert_eq!(Unknown.merge(Free), Free);
        assert_eq!(Free.merge(Occupied), Occupied);
    }

    fn arb_ray() -> impl Strategy<Value = (Vec3, Vec3)> {
        (prop::array::uniform3(-2.0f64..10.0), prop::array::uniform3(-2.0f64..10.0))
            .prop_map(|(a, b)| (Vec3::from(a), Vec3::from(b)))
    }

    proptest! {
        #[test]
        fn adding_rays_never_loses_evidence(
            pts in prop::collection::vec(prop::array::uniform3(0.0f64..8.0), 0..10),
            rays in prop::collection::vec(arb_ray(), 0..20),
            extra in prop::collection::vec(arb_ray(), 1..10),
        ) {
            let spec = grid([8, 8, 8]);
            let pts: Vec<Vec3> = pts.into_iter().map(Vec3::from).collect();
            let before = build_target_grid(&pts, &[], &rays, &spec, 1);
            let mut all = rays.clone();
            all.extend(extra);
            let after = build_target_grid(&pts, &[], &all, &spec, 1);
            for (b, a) in before.states().iter().zip(after.states()) {
                match b {
                    CellState::Occupied => prop_assert_eq!(*a, CellState::Occupied),
                    CellState::Free => prop_assert_eq!(*a, CellState::Free),
                    CellState::Unknown => {}
                }
            }
        }

        #[test]
        fn split_ray_batches_merge_to_same_grid(
            rays in prop::collection::vec(arb_ray(), 0..30),
            cut in 0usize..30,
        ) {
            let spec = grid([8, 8, 8]);
            let cut = cut.min(rays.len());
            let whole = build_target_grid(&[], &[], &rays, &spec, 1);
            let mut left = build_target_grid(&[], &[], &rays[..cut], &spec, 1);
            let right = build_target_grid(&[], &[], &rays[cut..], &spec, 1);
            left.merge_from(&right).unwrap();
            prop_assert_eq!(left, whole);
        }

        #[test]
        fn traversal_is_contiguous((o, e) in arb_ray()) {
            let spec = grid([8, 8, 8]);
            let cells = traverse_ray(&spec, &o, &e);
            for w in cells.windows(2) {
                let step: i64 = (0..3).map(|i| (w[1][i] as i64 - w[0][i] as i64).abs()).sum();
                prop_assert!((1..=3).contains(&step));
            }
            let end = spec.world_to_index(&e);
            prop_assert!(end.map_or(true, |c| !cells.contains(&c)));
        }
    }
}

//! Non-learned reference forecasters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ProbabilityGrid;
use crate::occupancy::{CellState, OccupancyGrid, Sample};

/// Probability given to UNKNOWN voxels by the static-world forecaster.
pub const UNKNOWN_PROBABILITY: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Repeats the ground-truth t=0 target; an oracle reference, not a deployable method.
    StaticWorld,
    Persistence,
    Union,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::StaticWorld, Method::Persistence, Method::Union];

    pub fn name(self) -> &'static str {
        match self {
            Method::StaticWorld => "static-world",
            Method::Persistence => "persistence",
            Method::Union => "union",
        }
    }

    pub fn is_oracle(self) -> bool {
        self == Method::StaticWorld
    }

    pub fn forecast(self, sample: &Sample) -> Vec<ProbabilityGrid> {
        match self {
            Method::StaticWorld => static_world_forecast(&sample.targets[0], sample.t_out()),
            Method::Persistence => input_persistence_forecast(sample),
            Method::Union => input_union_forecast(sample),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline method {s:?}")))
    }
}

fn repeat(grid: ProbabilityGrid, t_out: usize) -> Vec<ProbabilityGrid> {
    vec![grid; t_out + 1]
}

fn binary_probs(grid: &OccupancyGrid) -> ProbabilityGrid {
    ProbabilityGrid::from_occupancy(grid, 0.0).expect("values are 0 or 1")
}

/// Holds a completed t=0 grid fixed for `t_out + 1` frames.
pub fn static_world_forecast(completed_t0: &OccupancyGrid, t_out: usize) -> Vec<ProbabilityGrid> {
    let p = ProbabilityGrid::from_occupancy(completed_t0, UNKNOWN_PROBABILITY).expect("values are in [0, 1]");
    repeat(p, t_out)
}

/// Holds the last input sweep's voxelization fixed.
pub fn input_persistence_forecast(sample: &Sample) -> Vec<ProbabilityGrid> {
    let last = sample.inputs.last().expect("a valid sample has at least one input");
    repeat(binary_probs(last), sample.t_out())
}

/// Holds the union of all input occupancies fixed.
pub fn input_union_forecast(sample: &Sample) -> Vec<ProbabilityGrid> {
    let mut union = OccupancyGrid::filled(*sample.spec(), CellState::Free);
    for input in &sample.inputs {
        for (i, s) in input.states().iter().enumerate() {
            if *s == CellState::Occupied {
                union.set_linear(i, CellState::Occupied);
            }
        }
    }
    repeat(binary_probs(&union), sample.t_out())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;
    use crate::metrics::sequence_report;

    fn spec() -> GridSpec {
        GridSpec::new([0.0; 3], [1.0; 3], [4, 2, 1]).unwrap()
    }

    fn grid(occupied: &[usize], unknown: &[usize]) -> OccupancyGrid {
        let mut g = OccupancyGrid::filled(spec(), CellState::Free);
        occupied.iter().for_each(|i| g.set_linear(*i, CellState::Occupied));
        unknown.iter().for_each(|i| g.set_linear(*i, CellState::Unknown));
        g
    }

    fn sample(inputs: Vec<OccupancyGrid>, targets: Vec<OccupancyGrid>) -> Sample {
        Sample {
            sequence_id: "s".into(),
            t0_frame: 3,
            inputs,
            targets,
        }
    }

    #[test]
    fn static_world_probabilities() {
        let out = static_world_forecast(&grid(&[0], &[1]), 2);
        assert_eq!(out.len(), 3);
        for f in &out {
            assert_eq!(&f.probs()[..3], &[1.0, 0.5, 0.0]);
        }
        assert_eq!(static_world_forecast(&grid(&[0], &[]), 0).len(), 1);
    }

    #[test]
    fn static_world_scores_one_on_static_targets() {
        let t = grid(&[0, 5], &[7]);
        let rep = sequence_report(&static_world_forecast(&t, 3), &vec![t.clone(); 4], 0.5).unwrap();
        assert_eq!(rep.mean.miou, 1.0);
    }

    #[test]
    fn static_world_on_moving_box_counts_overlap() {
        // A 2-voxel box moving 1 voxel per frame along x.
        let frames: Vec<_> = (0..3).map(|k| grid(&[k, k + 1], &[])).collect();
        let rep = sequence_report(&static_world_forecast(&frames[0], 2), &frames, 0.5).unwrap();
        assert_eq!(rep.iou_curve, vec![1.0, 1.0 / 3.0, 0.0]);
    }

    #[test]
    fn persistence_and_union() {
        let a = grid(&[0], &[]);
        let b = grid(&[2], &[]);
        let s = sample(vec![a.clone(), b.clone()], vec![grid(&[0, 2], &[]); 2]);
        let p = input_persistence_forecast(&s);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0], binary_probs(&b));
        let u = input_union_forecast(&s);
        assert_eq!(u[1].probs()[..3], [1.0, 0.0, 1.0]);

        let single = sample(vec![a.clone()], vec![a.clone()]);
        assert_eq!(input_union_forecast(&single), input_persistence_forecast(&single));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("bogus".parse::<Method>().is_err());
    }
}

//! Forecast evaluation: IoU, precision/recall/F1, average precision and the
//! soft-IoU / BCE losses.
//!
//! Ground-truth voxels in the UNKNOWN state are excluded from every quantity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GridSpec;
use crate::occupancy::{CellState, OccupancyGrid};

/// Clamp applied to probabilities inside the BCE logarithms.
pub const BCE_EPSILON: f64 = 1e-7;

/// Per-voxel occupancy probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityGrid {
    spec: GridSpec,
    probs: Vec<f64>,
}

impl ProbabilityGrid {
    pub fn new(spec: GridSpec, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != spec.num_voxels() {
            return Err(Error::Shape(format!(
                "{} probabilities for {} voxels",
                probs.len(),
                spec.num_voxels()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(format!(
                "probability {} at voxel {i} is outside [0, 1]",
                probs[i]
            )));
        }
        Ok(Self { spec, probs })
    }

    pub fn filled(spec: GridSpec, p: f64) -> Result<Self> {
        Self::new(spec, vec![p; spec.num_voxels()])
    }

    /// Maps each state to a probability: OCCUPIED → 1, FREE → 0, UNKNOWN → `unknown`.
    pub fn from_occupancy(grid: &OccupancyGrid, unknown: f64) -> Result<Self> {
        let probs = grid
            .states()
            .iter()
            .map(|s| match s {
                CellState::Occupied => 1.0,
                CellState::Free => 0.0,
                CellState::Unknown => unknown,
            })
            .collect();
        Self::new(*grid.spec(), probs)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

fn check_spec(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!(
            "prediction grid {:?} does not match ground truth {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// OCCUPIED where `prob >= threshold`, FREE elsewhere.
pub fn binarize(pred: &ProbabilityGrid, threshold: f64) -> OccupancyGrid {
    let states = pred
        .probs
        .iter()
        .map(|p| {
            if *p >= threshold {
                CellState::Occupied
            } else {
                CellState::Free
            }
        })
        .collect();
    OccupancyGrid::from_states(pred.spec, states).expect("same length as spec")
}

/// Confusion counts over a frame; `masked` counts UNKNOWN ground-truth voxels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub masked: u64,
}

impl Confusion {
    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
        self.masked += other.masked;
    }

    /// IoU of the positive class; 1 when prediction and truth are both empty.
    pub fn iou(&self) -> f64 {
        let union = self.tp + self.fp + self.fn_;
        if union == 0 {
            1.0
        } else {
            self.tp as f64 / union as f64
        }
    }

    /// 1 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        let predicted = self.tp + self.fp;
        if predicted == 0 {
            1.0
        } else {
            self.tp as f64 / predicted as f64
        }
    }

    /// 1 when the truth has no positives.
    pub fn recall(&self) -> f64 {
        let actual = self.tp + self.fn_;
        if actual == 0 {
            1.0
        } else {
            self.tp as f64 / actual as f64
        }
    }

    pub fn f1(&self) -> f64 {
        f1_score(self.precision(), self.recall())
    }
}

pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Counts a binary prediction against a three-state truth.
pub fn confusion(pred: &OccupancyGrid, gt: &OccupancyGrid) -> Result<Confusion> {
    check_spec(pred.spec(), gt.spec())?;
    let mut c = Confusion::default();
    for (p, g) in pred.states().iter().zip(gt.states()) {
        let positive = *p == CellState::Occupied;
        match (g, positive) {
            (CellState::Unknown, _) => c.masked += 1,
            (CellState::Occupied, true) => c.tp += 1,
            (CellState::Occupied, false) => c.fn_ += 1,
            (CellState::Free, true) => c.fp += 1,
            (CellState::Free, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn frame_iou(pred: &OccupancyGrid, gt: &OccupancyGrid) -> Result<f64> {
    Ok(confusion(pred, gt)?.iou())
}

/// `(precision, recall, f1)` of a binary prediction.
pub fn frame_pr(pred: &OccupancyGrid, gt: &OccupancyGrid) -> Result<(f64, f64, f64)> {
    let c = confusion(pred, gt)?;
    Ok((c.precision(), c.recall(), c.f1()))
}

/// Area under the precision-recall curve with step integration over every
/// distinct score: `Σ (R_k − R_{k−1}) · P_k`. Voxels sharing a score enter
/// together. 1 when the truth has no positives.
pub fn frame_ap(pred: &ProbabilityGrid, gt: &OccupancyGrid) -> Result<f64> {
    check_spec(pred.spec(), gt.spec())?;
    let mut scored: Vec<(f64, bool)> = pred
        .probs
        .iter()
        .zip(gt.states())
        .filter(|(_, g)| **g != CellState::Unknown)
        .map(|(p, g)| (*p, *g == CellState::Occupied))
        .collect();
    let positives = scored.iter().filter(|(_, pos)| *pos).count();
    if positives == 0 {
        return Ok(1.0);
    }
    scored.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

    let mut ap = 0.0;
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < scored.len() {
        let score = scored[i].0;
        while i < scored.len() && scored[i].0 == score {
            tp += scored[i].1 as usize;
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        if recall > prev_recall {
            ap += (recall - prev_recall) * (tp as f64 / seen as f64);
            prev_recall = recall;
        }
    }
    Ok(ap)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub iou: f64,
    pub ap: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(flatten)]
    pub counts: Confusion,
}

/// Every per-frame metric; all but AP use `threshold`.
pub fn frame_metrics(pred: &ProbabilityGrid, gt: &OccupancyGrid, threshold: f64) -> Result<FrameMetrics> {
    let c = confusion(&binarize(pred, threshold), gt)?;
    Ok(FrameMetrics {
        iou: c.iou(),
        ap: frame_ap(pred, gt)?,
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
        counts: c,
    })
}

/// Means over a set of frames.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub miou: f64,
    pub map: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub frames: usize,
}

impl MeanMetrics {
    pub fn of<'a>(frames: impl IntoIterator<Item = &'a FrameMetrics>) -> Self {
        let mut m = MeanMetrics::default();
        for f in frames {
            m.miou += f.iou;
            m.map += f.ap;
            m.precision += f.precision;
            m.recall += f.recall;
            m.f1 += f.f1;
            m.frames += 1;
        }
        if m.frames > 0 {
            let n = m.frames as f64;
            m.miou /= n;
            m.map /= n;
            m.precision /= n;
            m.recall /= n;
            m.f1 /= n;
        }
        m
    }
}

/// Metrics computed from confusion counts summed over all frames.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PooledMetrics {
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(flatten)]
    pub counts: Confusion,
}

impl PooledMetrics {
    pub fn from_counts(counts: Confusion) -> Self {
        Self {
            iou: counts.iou(),
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    /// One entry per output frame, t = 0 first.
    pub frames: Vec<FrameMetrics>,
    pub mean: MeanMetrics,
    /// IoU at each forecast step, for degradation curves.
    pub iou_curve: Vec<f64>,
}

/// Scores one predicted output sequence against its targets.
pub fn sequence_report(preds: &[ProbabilityGrid], gts: &[OccupancyGrid], threshold: f64) -> Result<SequenceReport> {
    if preds.len() != gts.len() || preds.is_empty() {
        return Err(Error::Shape(format!(
            "{} predicted frames for {} ground-truth frames",
            preds.len(),
            gts.len()
        )));
    }
    let frames = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| frame_metrics(p, g, threshold))
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceReport {
        mean: MeanMetrics::of(&frames),
        iou_curve: frames.iter().map(|f| f.iou).collect(),
        frames,
    })
}

/// One evaluated (sample, frame) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub sample: String,
    pub step: usize,
    #[serde(flatten)]
    pub metrics: FrameMetrics,
}

/// Dataset-level evaluation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub threshold: f64,
    pub samples: usize,
    /// Unweighted mean over every (sample, frame) pair.
    pub averaged: MeanMetrics,
    /// Counts pooled over every frame before computing the ratios.
    pub pooled: PooledMetrics,
    /// Mean IoU per forecast step across samples.
    pub iou_curve: Vec<f64>,
    pub frames: Vec<FrameRecord>,
}

/// Accumulates per-sample reports into an [`EvaluationReport`].
#[derive(Debug, Default)]
pub struct Evaluator {
    threshold: f64,
    samples: usize,
    frames: Vec<FrameRecord>,
}

impl Evaluator {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            ..Default::default()
        }
    }

    pub fn add_sample(&mut self, name: &str, preds: &[ProbabilityGrid], gts: &[OccupancyGrid]) -> Result<()> {
        let rep = sequence_report(preds, gts, self.threshold)?;
        self.push_report(name, &rep);
        Ok(())
    }

    pub fn push_report(&mut self, name: &str, rep: &SequenceReport) {
        self.samples += 1;
        self.frames.extend(rep.frames.iter().enumerate().map(|(step, m)| FrameRecord {
            sample: name.to_owned(),
            step,
            metrics: *m,
        }));
    }

    pub fn finish(self) -> EvaluationReport {
        let averaged = MeanMetrics::of(self.frames.iter().map(|f| &f.metrics));
        let mut counts = Confusion::default();
        for f in &self.frames {
            counts.add(&f.metrics.counts);
        }
        let steps = self.frames.iter().map(|f| f.step + 1).max().unwrap_or(0);
        let iou_curve = (0..steps)
            .map(|k| {
                let (sum, n) = self
                    .frames
                    .iter()
                    .filter(|f| f.step == k)
                    .fold((0.0, 0usize), |(s, n), f| (s + f.metrics.iou, n + 1));
                sum / n as f64
            })
            .collect();
        EvaluationReport {
            threshold: self.threshold,
            samples: self.samples,
            averaged,
            pooled: PooledMetrics::from_counts(counts),
            iou_curve,
            frames: self.frames,
        }
    }
}

fn check_batch(preds: &[Vec<ProbabilityGrid>], gts: &[Vec<OccupancyGrid>]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    if preds.len() != gts.len() {
        return Err(Error::Shape(format!(
            "{} predicted samples for {} targets",
            preds.len(),
            gts.len()
        )));
    }
    for (p, g) in preds.iter().zip(gts) {
        if p.len() != g.len() {
            return Err(Error::Shape(format!("{} predicted frames for {} targets", p.len(), g.len())));
        }
        for (pf, gf) in p.iter().zip(g) {
            check_spec(pf.spec(), gf.spec())?;
        }
    }
    Ok(())
}

// Numerator and denominator of the soft IoU over unmasked voxels.
fn soft_iou_terms<'a>(frames: impl IntoIterator<Item = (&'a ProbabilityGrid, &'a OccupancyGrid)>) -> (f64, f64) {
    let (mut num, mut den) = (0.0, 0.0);
    for (p, g) in frames {
        for (yp, s) in p.probs.iter().zip(g.states()) {
            let y = match s {
                CellState::Unknown => continue,
                CellState::Occupied => 1.0,
                CellState::Free => 0.0,
            };
            num += y * yp;
            den += y + yp - y * yp;
        }
    }
    (num, den)
}

/// Soft-IoU loss: `−(1/|C|) Σ_C [Σ_V y·ŷ / Σ_V (y + ŷ − y·ŷ)]`.
///
/// Each batch element is one sample and `V` spans all of its output frames.
/// A sample whose denominator is zero contributes 0.
pub fn soft_iou_loss(preds: &[Vec<ProbabilityGrid>], gts: &[Vec<OccupancyGrid>]) -> Result<f64> {
    check_batch(preds, gts)?;
    let total: f64 = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| {
            let (num, den) = soft_iou_terms(p.iter().zip(g));
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        })
        .sum();
    Ok(-total / preds.len() as f64)
}

/// Soft-IoU loss of a single frame, for diagnostics.
pub fn soft_iou_frame(pred: &ProbabilityGrid, gt: &OccupancyGrid) -> Result<f64> {
    check_spec(pred.spec(), gt.spec())?;
    let (num, den) = soft_iou_terms([(pred, gt)]);
    Ok(if den == 0.0 { 0.0 } else { -num / den })
}

/// Binary cross-entropy averaged over all unmasked voxels of the batch.
pub fn bce_loss(preds: &[Vec<ProbabilityGrid>], gts: &[Vec<OccupancyGrid>]) -> Result<f64> {
    check_batch(preds, gts)?;
    let (mut sum, mut n) = (0.0, 0u64);
    for (p, g) in preds.iter().zip(gts) {
        for (pf, gf) in p.iter().zip(g) {
            for (yp, s) in pf.probs.iter().zip(gf.states()) {
                let yp = yp.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
                sum -= match s {
                    CellState::Unknown => continue,
                    CellState::Occupied => yp.ln(),
                    CellState::Free => (1.0 - yp).ln(),
                };
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::Config("every voxel in the batch is masked".into()));
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(n: usize) -> GridSpec {
        GridSpec::new([0.0; 3], [1.0; 3], [n, 1, 1]).unwrap()
    }

    fn states(codes: &[u8]) -> OccupancyGrid {
        OccupancyGrid::from_states(spec(codes.len()), codes.iter().map(|c| CellState::from_code(*c).unwrap()).collect()).unwrap()
    }

    fn probs(v: &[f64]) -> ProbabilityGrid {
        ProbabilityGrid::new(spec(v.len()), v.to_vec()).unwrap()
    }

    // Voxels a, b, c, d map to indices 0..4.
    const F: u8 = 0;
    const O: u8 = 1;
    const U: u8 = 2;

    #[test]
    fn binarize_examples() {
        let g = binarize(&probs(&[0.5, 0.499, 0.0]), 0.5);
        assert_eq!(g.states(), &[CellState::Occupied, CellState::Free, CellState::Free]);
        assert_eq!(binarize(&probs(&[0.0, 0.3, 1.0]), 0.0).count(CellState::Occupied), 3);
    }

    #[test]
    fn iou_examples() {
        assert!((frame_iou(&states(&[O, O, F]), &states(&[F, O, O])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(frame_iou(&states(&[O, F, O]), &states(&[O, F, O])).unwrap(), 1.0);
        assert_eq!(frame_iou(&states(&[O, O, F]), &states(&[F, O, U])).unwrap(), 0.5);
        assert_eq!(frame_iou(&states(&[F, F]), &states(&[F, F])).unwrap(), 1.0);
    }

    #[test]
    fn pr_examples() {
        assert_eq!(frame_pr(&states(&[O, F]), &states(&[O, F])).unwrap(), (1.0, 1.0, 1.0));
        assert_eq!(frame_pr(&states(&[O, O, F]), &states(&[F, O, O])).unwrap(), (0.5, 0.5, 0.5));
        let (p, r, f) = frame_pr(&states(&[O, O, O, O]), &states(&[O, O, F, F])).unwrap();
        assert_eq!((p, r), (0.5, 1.0));
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn spec_mismatch_is_shape_error() {
        assert!(matches!(frame_iou(&states(&[O]), &states(&[O, F])), Err(Error::Shape(_))));
        assert!(matches!(frame_ap(&probs(&[0.1]), &states(&[O, F])), Err(Error::Shape(_))));
    }

    #[test]
    fn ap_examples() {
        assert_eq!(frame_ap(&probs(&[0.9, 0.1]), &states(&[O, F])).unwrap(), 1.0);
        assert_eq!(frame_ap(&probs(&[0.1, 0.9]), &states(&[O, F])).unwrap(), 0.5);
        let ap = frame_ap(&probs(&[0.9, 0.2, 0.5]), &states(&[O, O, F])).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(frame_ap(&probs(&[0.9, 0.2]), &states(&[F, F])).unwrap(), 1.0);
    }

    #[test]
    fn sequence_report_means() {
        let gts = vec![states(&[O, O]), states(&[O, O])];
        let preds = vec![probs(&[1.0, 1.0]), probs(&[1.0, 0.0])];
        let rep = sequence_report(&preds, &gts, 0.5).unwrap();
        assert_eq!(rep.iou_curve, vec![1.0, 0.5]);
        assert_eq!(rep.mean.miou, 0.75);
        let single = sequence_report(&preds[..1], &gts[..1], 0.5).unwrap();
        assert_eq!(single.mean.miou, single.frames[0].iou);
        assert_eq!(single.mean.map, single.frames[0].ap);
        assert!(matches!(sequence_report(&preds, &gts[..1], 0.5), Err(Error::Shape(_))));
    }

    #[test]
    fn evaluator_pools_and_averages() {
        let mut ev = Evaluator::new(0.5);
        ev.add_sample("a", &[probs(&[1.0, 1.0, 0.0, 0.0])], &[states(&[O, F, F, F])]).unwrap();
        ev.add_sample("b", &[probs(&[1.0, 1.0, 1.0, 1.0])], &[states(&[O, O, O, O])]).unwrap();
        let rep = ev.finish();
        assert_eq!(rep.averaged.miou, 0.75);
        assert_eq!(rep.pooled.iou, 5.0 / 6.0);
        assert_eq!(rep.iou_curve, vec![0.75]);
    }

    #[test]
    fn soft_iou_examples() {
        let g = vec![vec![states(&[O, F, O])]];
        let exact = vec![vec![probs(&[1.0, 0.0, 1.0])]];
        assert_eq!(soft_iou_loss(&exact, &g).unwrap(), -1.0);

        let all_on = vec![vec![states(&[O, O, O, O])]];
        assert_eq!(soft_iou_loss(&vec![vec![probs(&[0.5; 4])]], &all_on).unwrap(), -0.5);

        let v = soft_iou_loss(&vec![vec![probs(&[0.8, 0.4])]], &vec![vec![states(&[O, F])]]).unwrap();
        assert!((v - (-0.8 / 1.4)).abs() < 1e-15);

        assert!(matches!(soft_iou_loss(&[], &[]), Err(Error::Config(_))));
        let empty = soft_iou_loss(&vec![vec![probs(&[0.0, 0.0])]], &vec![vec![states(&[F, F])]]).unwrap();
        assert_eq!(empty, 0.0);
    }

    #[test]
    fn bce_examples() {
        let g = vec![vec![states(&[O, F])]];
        assert!(bce_loss(&vec![vec![probs(&[1.0, 0.0])]], &g).unwrap() <= 1e-6);
        let half = bce_loss(&vec![vec![probs(&[0.5, 0.5])]], &g).unwrap();
        assert!((half - std::f64::consts::LN_2).abs() < 1e-12);
        let v = bce_loss(&vec![vec![probs(&[0.9, 0.2])]], &g).unwrap();
        assert!((v - (-(0.9f64.ln() + 0.8f64.ln()) / 2.0)).abs() < 1e-12);
        assert!((v - 0.164252).abs() < 1e-6);
        assert!(matches!(bce_loss(&vec![vec![probs(&[0.5])]], &vec![vec![states(&[U])]]), Err(Error::Config(_))));
    }

    // Precision/recall evaluated at every distinct score as threshold.
    fn brute_force_ap(p: &[f64], g: &[u8]) -> f64 {
        let pairs: Vec<(f64, bool)> = p.iter().zip(g).filter(|(_, s)| **s != U).map(|(p, s)| (*p, *s == O)).collect();
        let pos = pairs.iter().filter(|x| x.1).count();
        if pos == 0 {
            return 1.0;
        }
        let mut thresholds: Vec<f64> = pairs.iter().map(|x| x.0).collect();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let mut ap = 0.0;
        let mut prev_r = 0.0;
        for t in thresholds {
            let tp = pairs.iter().filter(|x| x.0 >= t && x.1).count() as f64;
            let pp = pairs.iter().filter(|x| x.0 >= t).count() as f64;
            let r = tp / pos as f64;
            ap += (r - prev_r) * (tp / pp);
            prev_r = r;
        }
        ap
    }

    fn arb_frame() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (1usize..64).prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![(0u32..5).prop_map(|v| v as f64 / 4.0), 0.0f64..=1.0], n),
                prop::collection::vec(0u8..3, n),
            )
        })
    }

    proptest! {
        #[test]
        fn ap_matches_brute_force((p, g) in arb_frame()) {
            let got = frame_ap(&probs(&p), &states(&g)).unwrap();
            prop_assert!((got - brute_force_ap(&p, &g)).abs() <= 1e-12);
        }

        #[test]
        fn masked_voxels_do_not_matter((p, g) in arb_frame(), noise in prop::collection::vec(0.0f64..=1.0, 64)) {
            let mut q = p.clone();
            for (i, s) in g.iter().enumerate() {
                if *s == U { q[i] = noise[i]; }
            }
            let gt = states(&g);
            let a = frame_metrics(&probs(&p), &gt, 0.5).unwrap();
            let b = frame_metrics(&probs(&q), &gt, 0.5).unwrap();
            prop_assert_eq!(a, b);
            let la = soft_iou_loss(&vec![vec![probs(&p)]], &vec![vec![gt.clone()]]).unwrap();
            let lb = soft_iou_loss(&vec![vec![probs(&q)]], &vec![vec![gt]]).unwrap();
            prop_assert_eq!(la, lb);
        }

        #[test]
        fn soft_iou_in_range((p, g) in arb_frame()) {
            let v = soft_iou_loss(&vec![vec![probs(&p)]], &vec![vec![states(&g)]]).unwrap();
            prop_assert!((-1.0..=0.0).contains(&v));
        }

        #[test]
        fn f1_is_harmonic_mean((p, g) in arb_frame()) {
            let m = frame_metrics(&probs(&p), &states(&g), 0.5).unwrap();
            if m.precision + m.recall > 0.0 {
                prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() <= 1e-12);
            }
            let c = m.counts;
            prop_assert_eq!(c.tp + c.fp + c.fn_ + c.tn + c.masked, g.len() as u64);
        }

        #[test]
        fn iou_does_not_grow_with_more_errors(g in prop::collection::vec(0u8..2, 1..40), flips in prop::collection::vec(any::<bool>(), 40)) {
            // Start from a perfect prediction and flip voxels one at a time.
            let gt = states(&g);
            let mut pred: Vec<u8> = g.clone();
            let mut last = frame_iou(&states(&pred), &gt).unwrap();
            for (i, f) in flips.iter().take(g.len()).enumerate() {
                if *f {
                    pred[i] = 1 - pred[i];
                    let now = frame_iou(&states(&pred), &gt).unwrap();
                    prop_assert!(now <= last + 1e-15);
                    last = now;
                }
            }
        }
    }
}

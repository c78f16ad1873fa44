//! Dataset-level workflows: curation, baseline forecasts, evaluation and
//! summary statistics. Work is spread over a bounded thread pool; every
//! output file has exactly one writer.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::Method;
use crate::curation::DEFAULT_BOX_MARGIN;
use crate::error::{Error, Result};
use crate::geometry::GridSpec;
use crate::ingest::{list_sequence_dirs, load_sequence, RawSequence};
use crate::metrics::{sequence_report, EvaluationReport, Evaluator, SequenceReport};
use crate::occupancy::{build_sample_with, CellState, RayMode, SampleOptions};
use crate::store::{
    read_prediction, read_sample, sample_rel_path, split_sequences, write_prediction, write_sample, DatasetManifest,
    SampleEntry, Split, PREDICTION_EXTENSION,
};

/// Scene split ratios used for the public benchmark datasets (120/30/30 of 180).
pub const DEFAULT_SPLIT_RATIOS: [f64; 3] = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];

pub const CONFIG_FILE: &str = "config.json";
pub const PREDICTIONS_FILE: &str = "predictions.json";

/// (T_in, T_out) presets.
pub const PRESETS: [(&str, usize, usize); 3] = [("5/5", 5, 5), ("5/10", 5, 10), ("10/10", 10, 10)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub name: String,
    pub grid: GridSpec,
    pub t_in: usize,
    pub t_out: usize,
    pub min_points: usize,
    /// Frames between consecutive sample anchors.
    pub stride: usize,
    /// Extra frames aggregated on each side of a sample.
    pub context: usize,
    /// Train, val, test.
    pub split_ratios: [f64; 3],
    pub seed: u64,
    pub ray_mode: RayMode,
    pub box_margin: f64,
    pub synchronize: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            name: "ocf".into(),
            grid: GridSpec::default(),
            t_in: 5,
            t_out: 5,
            min_points: 1,
            stride: 1,
            context: 0,
            split_ratios: DEFAULT_SPLIT_RATIOS,
            seed: 0,
            ray_mode: RayMode::PerTarget,
            box_margin: DEFAULT_BOX_MARGIN,
            synchronize: true,
        }
    }
}

impl PipelineConfig {
    pub fn apply_preset(&mut self, preset: &str) -> Result<()> {
        let (_, t_in, t_out) = PRESETS
            .iter()
            .find(|(name, ..)| *name == preset)
            .ok_or_else(|| Error::Config(format!("unknown preset {preset:?}; expected 5/5, 5/10 or 10/10")))?;
        self.t_in = *t_in;
        self.t_out = *t_out;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if self.min_points == 0 {
            return Err(Error::Config("min_points must be at least 1".into()));
        }
        if !(self.box_margin >= 0.0 && self.box_margin.is_finite()) {
            return Err(Error::Config("box_margin must be a non-negative number".into()));
        }
        Ok(())
    }

    pub fn sample_options(&self) -> SampleOptions {
        SampleOptions {
            min_points: self.min_points,
            context: self.context,
            box_margin: self.box_margin,
            synchronize: self.synchronize,
            ray_mode: self.ray_mode,
        }
    }

    /// Anchor frames of `seq` with a complete horizon.
    pub fn anchors(&self, seq: &RawSequence) -> Vec<usize> {
        let first = seq.first_frame() + self.t_in;
        let last = seq.last_frame();
        if last < self.t_out || first > last - self.t_out {
            return Vec::new();
        }
        (first..=last - self.t_out).step_by(self.stride).collect()
    }
}

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invariant(format!("cannot start worker pool: {e}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn check_sequence_id(id: &str) -> Result<()> {
    let ok = !id.is_empty() && id != "." && id != ".." && !id.contains(['/', '\\']);
    if ok {
        Ok(())
    } else {
        Err(Error::Format(format!("sequence id {id:?} is not usable as a directory name")))
    }
}

fn rel_string(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Curates every sequence under `raw_dir` into an OCF1 dataset at `out_dir`.
pub fn curate(raw_dir: &Path, out_dir: &Path, cfg: &PipelineConfig, jobs: usize) -> Result<DatasetManifest> {
    cfg.validate()?;
    let dirs = list_sequence_dirs(raw_dir)?;
    if dirs.is_empty() {
        return Err(Error::Format(format!("no sequences found under {}", raw_dir.display())));
    }
    let pool = thread_pool(jobs)?;

    let sequences: Vec<RawSequence> = pool.install(|| {
        dirs.par_iter()
            .map(|d| load_sequence(d).map_err(|e| e.context(format!("sequence {}", d.display()))))
            .collect::<Result<_>>()
    })?;
    let mut ids = BTreeSet::new();
    for s in &sequences {
        check_sequence_id(&s.sequence_id)?;
        if !ids.insert(s.sequence_id.as_str()) {
            return Err(Error::Consistency(format!("sequence id {} appears twice", s.sequence_id)));
        }
    }
    let ids: Vec<String> = ids.into_iter().map(str::to_owned).collect();
    let assignment = split_sequences(&ids, cfg.split_ratios, cfg.seed)?;
    let split_of: BTreeMap<&str, Split> = assignment
        .iter()
        .flat_map(|(split, ids)| ids.iter().map(move |id| (id.as_str(), *split)))
        .collect();

    let work: Vec<(&RawSequence, usize)> = sequences
        .iter()
        .flat_map(|s| cfg.anchors(s).into_iter().map(move |t0| (s, t0)))
        .collect();
    info!("curating {} samples from {} sequences with {} workers", work.len(), sequences.len(), jobs.max(1));

    create_dir(out_dir)?;
    let opts = cfg.sample_options();
    let entries: Vec<SampleEntry> = pool.install(|| {
        work.par_iter()
            .map(|(seq, t0)| {
                let ctx = || format!("sequence {} anchor {t0}", seq.sequence_id);
                let (sample, diag) =
                    build_sample_with(seq, *t0, cfg.t_in, cfg.t_out, &cfg.grid, &opts).map_err(|e| e.context(ctx()))?;
                sample.validate().map_err(|e| e.context(ctx()))?;
                for d in &diag.dropped {
                    warn!(
                        "event=dropped_object sequence={} anchor={} instance={} source_frame={} target_frame={} points={}",
                        seq.sequence_id, t0, d.instance_id, d.source_frame, d.target_frame, d.points
                    );
                }
                let rel = sample_rel_path(&seq.sequence_id, *t0);
                write_sample(&sample, &out_dir.join(&rel)).map_err(|e| e.context(ctx()))?;
                Ok(SampleEntry {
                    path: rel_string(&rel),
                    sequence_id: seq.sequence_id.clone(),
                    t0_frame: *t0,
                    dynamic_instances: diag.dynamic_instances,
                })
            })
            .collect::<Result<_>>()
    })?;

    let mut splits: BTreeMap<Split, Vec<SampleEntry>> = Split::ALL.iter().map(|s| (*s, Vec::new())).collect();
    for e in entries {
        splits.get_mut(&split_of[e.sequence_id.as_str()]).expect("all splits present").push(e);
    }
    for list in splits.values_mut() {
        list.sort_by(|a, b| (&a.sequence_id, a.t0_frame).cmp(&(&b.sequence_id, b.t0_frame)));
    }
    let manifest = DatasetManifest {
        name: cfg.name.clone(),
        spec: cfg.grid,
        t_in: cfg.t_in,
        t_out: cfg.t_out,
        frame_counts: splits.iter().map(|(s, l)| (*s, l.len())).collect(),
        scene_counts: assignment.iter().map(|(s, l)| (*s, l.len())).collect(),
        splits,
    };
    manifest.save(out_dir)?;
    write_json(&out_dir.join(CONFIG_FILE), cfg)?;
    for s in Split::ALL {
        info!(
            "event=split split={} scenes={} frames={}",
            s.name(),
            manifest.scene_counts[&s],
            manifest.frame_counts[&s]
        );
    }
    Ok(manifest)
}

fn selected<'a>(manifest: &'a DatasetManifest, split: Option<Split>) -> Vec<&'a SampleEntry> {
    manifest
        .entries()
        .filter(|(s, _)| split.map_or(true, |want| *s == want))
        .map(|(_, e)| e)
        .collect()
}

fn prediction_rel_path(sequence_id: &str, t0: usize) -> PathBuf {
    Path::new(sequence_id).join(format!("{t0:06}.{PREDICTION_EXTENSION}"))
}

/// Index written next to baseline predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionIndex {
    pub method: String,
    /// Set when the forecaster reads ground truth and is only a reference.
    pub oracle: bool,
    pub dataset: String,
    pub split: Option<Split>,
    pub t_in: usize,
    pub t_out: usize,
    pub samples: Vec<String>,
}

/// Runs a baseline over a dataset split and writes one prediction file per sample.
pub fn run_baseline(
    dataset_dir: &Path,
    method: Method,
    out_dir: &Path,
    split: Option<Split>,
    jobs: usize,
) -> Result<PredictionIndex> {
    let manifest = DatasetManifest::load(dataset_dir)?;
    let entries = selected(&manifest, split);
    let pool = thread_pool(jobs)?;
    create_dir(out_dir)?;
    let samples: Vec<String> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let sample = read_sample(&dataset_dir.join(&e.path))?;
                let preds = method.forecast(&sample);
                let rel = prediction_rel_path(&e.sequence_id, e.t0_frame);
                write_prediction(&out_dir.join(&rel), &preds, sample.t_in())?;
                Ok(rel_string(&rel))
            })
            .collect::<Result<_>>()
    })?;
    let index = PredictionIndex {
        method: method.name().into(),
        oracle: method.is_oracle(),
        dataset: manifest.name.clone(),
        split,
        t_in: manifest.t_in,
        t_out: manifest.t_out,
        samples,
    };
    write_json(&out_dir.join(PREDICTIONS_FILE), &index)?;
    info!("event=baseline method={} samples={}", method, index.samples.len());
    Ok(index)
}

// Every `<sequence>/<t0>.ocfp` under `dir`.
fn scan_predictions(dir: &Path) -> Result<BTreeSet<(String, usize)>> {
    let mut found = BTreeSet::new();
    let listing = |p: &Path| fs::read_dir(p).map_err(|e| Error::io(format!("listing {}", p.display()), e));
    for seq in listing(dir)? {
        let seq = seq.map_err(|e| Error::io(format!("listing {}", dir.display()), e))?.path();
        if !seq.is_dir() {
            continue;
        }
        let seq_id = seq.file_name().unwrap_or_default().to_string_lossy().into_owned();
        for f in listing(&seq)? {
            let f = f.map_err(|e| Error::io(format!("listing {}", seq.display()), e))?.path();
            if f.extension().and_then(|x| x.to_str()) != Some(PREDICTION_EXTENSION) {
                continue;
            }
            let t0 = f
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format(format!("prediction file name {} is not <t0>.{PREDICTION_EXTENSION}", f.display())))?;
            found.insert((seq_id.clone(), t0));
        }
    }
    Ok(found)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub method: Option<String>,
    pub oracle: bool,
    pub dataset: String,
    pub split: Option<Split>,
    #[serde(flatten)]
    pub report: EvaluationReport,
}

fn describe(ids: &[&(String, usize)]) -> String {
    let shown: Vec<String> = ids.iter().take(5).map(|(s, t)| format!("{s}/{t}")).collect();
    let more = if ids.len() > 5 { format!(" and {} more", ids.len() - 5) } else { String::new() };
    format!("{}{more}", shown.join(", "))
}

/// Scores the predictions in `pred_dir` against the dataset's targets.
///
/// The prediction files must cover exactly the selected samples.
pub fn evaluate(
    pred_dir: &Path,
    dataset_dir: &Path,
    threshold: f64,
    split: Option<Split>,
    jobs: usize,
) -> Result<EvalOutput> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold {threshold} is outside [0, 1]")));
    }
    let manifest = DatasetManifest::load(dataset_dir)?;
    let entries = selected(&manifest, split);
    let expected: BTreeSet<(String, usize)> = entries.iter().map(|e| (e.sequence_id.clone(), e.t0_frame)).collect();
    let found = scan_predictions(pred_dir)?;
    if expected != found {
        let missing: Vec<_> = expected.difference(&found).collect();
        let extra: Vec<_> = found.difference(&expected).collect();
        return Err(Error::Consistency(format!(
            "predictions do not match the dataset samples; missing: [{}]; unexpected: [{}]",
            describe(&missing),
            describe(&extra)
        )));
    }
    let index: Option<PredictionIndex> = {
        let p = pred_dir.join(PREDICTIONS_FILE);
        if p.is_file() {
            Some(read_json(&p)?)
        } else {
            None
        }
    };

    let pool = thread_pool(jobs)?;
    let reports: Vec<(String, SequenceReport)> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let ctx = || format!("sample {}/{}", e.sequence_id, e.t0_frame);
                let sample = read_sample(&dataset_dir.join(&e.path))?;
                let preds = read_prediction(&pred_dir.join(prediction_rel_path(&e.sequence_id, e.t0_frame)))?;
                let rep = sequence_report(&preds, &sample.targets, threshold).map_err(|err| err.context(ctx()))?;
                Ok((format!("{}/{}", e.sequence_id, e.t0_frame), rep))
            })
            .collect::<Result<_>>()
    })?;
    let mut ev = Evaluator::new(threshold);
    for (name, rep) in &reports {
        ev.push_report(name, rep);
    }
    Ok(EvalOutput {
        method: index.as_ref().map(|i| i.method.clone()),
        oracle: index.as_ref().is_some_and(|i| i.oracle),
        dataset: manifest.name.clone(),
        split,
        report: ev.finish(),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub scenes: usize,
    pub samples: usize,
    /// Mean OCCUPIED voxels in the t=0 input sweep.
    pub mean_input_occupied: f64,
    /// Mean OCCUPIED voxels in the t=0 target.
    pub mean_target_occupied: f64,
    /// Target over input occupancy; absent when inputs are empty.
    pub occupied_ratio: Option<f64>,
    /// Share of UNKNOWN voxels over all target grids.
    pub unknown_fraction: f64,
    pub dynamic_instances: usize,
    pub mean_dynamic_instances: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    pub t_in: usize,
    pub t_out: usize,
    pub total: SplitStats,
    pub splits: BTreeMap<Split, SplitStats>,
}

#[derive(Default)]
struct Tally {
    samples: usize,
    input_occupied: usize,
    target_occupied: usize,
    unknown: usize,
    target_voxels: usize,
    dynamic: usize,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.samples += o.samples;
        self.input_occupied += o.input_occupied;
        self.target_occupied += o.target_occupied;
        self.unknown += o.unknown;
        self.target_voxels += o.target_voxels;
        self.dynamic += o.dynamic;
    }

    fn finish(&self, scenes: usize) -> SplitStats {
        let n = self.samples.max(1) as f64;
        let mean_input = self.input_occupied as f64 / n;
        let mean_target = self.target_occupied as f64 / n;
        SplitStats {
            scenes,
            samples: self.samples,
            mean_input_occupied: mean_input,
            mean_target_occupied: mean_target,
            occupied_ratio: (self.input_occupied > 0).then(|| self.target_occupied as f64 / self.input_occupied as f64),
            unknown_fraction: if self.target_voxels == 0 { 0.0 } else { self.unknown as f64 / self.target_voxels as f64 },
            dynamic_instances: self.dynamic,
            mean_dynamic_instances: self.dynamic as f64 / n,
        }
    }
}

/// Per-split sample counts and occupancy statistics of a curated dataset.
pub fn dataset_stats(dataset_dir: &Path, jobs: usize) -> Result<DatasetStats> {
    let manifest = DatasetManifest::load(dataset_dir)?;
    let pool = thread_pool(jobs)?;
    let all: Vec<(Split, &SampleEntry)> = manifest.entries().collect();
    let tallies: Vec<(Split, Tally)> = pool.install(|| {
        all.par_iter()
            .map(|(split, e)| {
                let s = read_sample(&dataset_dir.join(&e.path))?;
                let t = Tally {
                    samples: 1,
                    input_occupied: s.inputs.last().map_or(0, |g| g.count(CellState::Occupied)),
                    target_occupied: s.targets[0].count(CellState::Occupied),
                    unknown: s.targets.iter().map(|g| g.count(CellState::Unknown)).sum(),
                    target_voxels: s.targets.len() * s.spec().num_voxels(),
                    dynamic: e.dynamic_instances,
                };
                Ok((*split, t))
            })
            .collect::<Result<_>>()
    })?;
    let mut per: BTreeMap<Split, Tally> = Split::ALL.iter().map(|s| (*s, Tally::default())).collect();
    let mut total = Tally::default();
    for (split, t) in &tallies {
        per.get_mut(split).expect("all splits present").add(t);
        total.add(t);
    }
    let scenes = |s: &Split| manifest.scene_counts.get(s).copied().unwrap_or(0);
    Ok(DatasetStats {
        name: manifest.name.clone(),
        t_in: manifest.t_in,
        t_out: manifest.t_out,
        total: total.finish(Split::ALL.iter().map(scenes).sum()),
        splits: per.iter().map(|(s, t)| (*s, t.finish(scenes(s)))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{OrientedBox, RigidTransform, Vec3};
    use crate::ingest::save_sequence;
    use crate::sim::{simulate_sequence, DynamicBox, SceneSpec, SensorSpec};

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            name: "tiny".into(),
            grid: GridSpec::new([-8.0, -8.0, -1.0], [0.5; 3], [32, 32, 8]).unwrap(),
            t_in: 2,
            t_out: 2,
            ..Default::default()
        }
    }

    fn scene() -> SceneSpec {
        let mut sensor = SensorSpec::uniform(90, -20.0, 10.0, 6, 20.0);
        sensor.mount = RigidTransform::from_translation(0.0, 0.0, 1.0);
        let mut scene = SceneSpec::new(sensor);
        scene.ground = Some(-0.6);
        scene.static_boxes.push(
            OrientedBox::new("wall", RigidTransform::from_translation(5.0, 0.0, 0.5), Vec3::new(0.3, 3.0, 1.0)).unwrap(),
        );
        scene.dynamic_boxes.push(DynamicBox {
            initial: OrientedBox::new("car", RigidTransform::from_translation(-4.0, 2.0, 0.3), Vec3::new(1.0, 0.6, 0.5))
                .unwrap(),
            velocity: [5.0, 0.0, 0.0],
            yaw_rate: 0.0,
        });
        scene
    }

    fn raw_corpus(dir: &Path, n_seq: usize, frames: usize) {
        for i in 0..n_seq {
            let seq = simulate_sequence(&scene(), frames, &format!("seq{i:02}")).unwrap();
            save_sequence(&seq, &dir.join(format!("seq{i:02}"))).unwrap();
        }
    }

    #[test]
    fn anchors_respect_horizon_and_stride() {
        let seq = simulate_sequence(&scene(), 20, "s").unwrap();
        let mut cfg = PipelineConfig {
            t_in: 5,
            t_out: 5,
            ..Default::default()
        };
        assert_eq!(cfg.anchors(&seq), (5..=14).collect::<Vec<_>>());
        cfg.stride = 20;
        assert_eq!(cfg.anchors(&seq), vec![5]);
        cfg.t_out = 15;
        assert!(cfg.anchors(&seq).is_empty());
    }

    #[test]
    fn presets_and_validation() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_preset("5/10").unwrap();
        assert_eq!((cfg.t_in, cfg.t_out), (5, 10));
        assert!(cfg.apply_preset("3/3").is_err());
        cfg.stride = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let parsed: PipelineConfig = serde_json::from_str(r#"{"t_in": 10}"#).unwrap();
        assert_eq!(parsed.t_in, 10);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn curate_baseline_eval_stats() {
        let tmp = tempfile::tempdir().unwrap();
        let raw = tmp.path().join("raw");
        raw_corpus(&raw, 3, 8);
        let ds = tmp.path().join("ds");
        let cfg = small_config();
        let m = curate(&raw, &ds, &cfg, 2).unwrap();
        assert_eq!(m.entries().count(), 3 * 4);
        assert_eq!(m.scene_counts.values().sum::<usize>(), 3);
        assert_eq!(DatasetManifest::load(&ds).unwrap(), m);

        let preds = tmp.path().join("pred");
        let idx = run_baseline(&ds, Method::StaticWorld, &preds, None, 2).unwrap();
        assert!(idx.oracle);
        let out = evaluate(&preds, &ds, 0.5, None, 2).unwrap();
        assert_eq!(out.report.samples, 12);
        assert_eq!(out.report.iou_curve[0], 1.0);
        assert!(out.report.iou_curve[2] < 1.0);

        let stats = dataset_stats(&ds, 1).unwrap();
        assert_eq!(stats.total.samples, 12);
        assert!(stats.total.occupied_ratio.unwrap() > 1.0);
        assert!(stats.total.unknown_fraction > 0.0);
        assert_eq!(stats.total.mean_dynamic_instances, 1.0);
    }

    #[test]
    fn eval_rejects_mismatched_predictions() {
        let tmp = tempfile::tempdir().unwrap();
        let raw = tmp.path().join("raw");
        raw_corpus(&raw, 1, 6);
        let ds = tmp.path().join("ds");
        let cfg = PipelineConfig {
            split_ratios: [1.0, 0.0, 0.0],
            ..small_config()
        };
        curate(&raw, &ds, &cfg, 1).unwrap();
        let preds = tmp.path().join("pred");
        run_baseline(&ds, Method::Persistence, &preds, None, 1).unwrap();
        fs::remove_file(preds.join("seq00").join("000002.ocfp")).unwrap();
        assert!(matches!(evaluate(&preds, &ds, 0.5, None, 1), Err(Error::Consistency(_))));
    }

    #[test]
    fn curate_is_deterministic_across_job_counts() {
        let tmp = tempfile::tempdir().unwrap();
        let raw = tmp.path().join("raw");
        raw_corpus(&raw, 3, 7);
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        curate(&raw, &a, &small_config(), 1).unwrap();
        curate(&raw, &b, &small_config(), 3).unwrap();
        for rel in ["manifest.json", "config.json", "samples/seq01/000003.ocf"] {
            assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap(), "{rel}");
        }
    }

    #[test]
    fn empty_raw_dir_is_an_input_error() {
        let tmp = tempfile::tempdir().unwrap();
        let err = curate(tmp.path(), &tmp.path().join("out"), &small_config(), 1).unwrap_err();
        assert!(!err.is_internal());
    }
}

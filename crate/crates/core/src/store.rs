//! OCF1 sample files, prediction files, dataset manifests and scene-level splits.
//!
//! OCF1 layout, little-endian:
//!
//! ```text
//! "OCF1"                      magic
//! u16 version                 1 for samples, 2 for probability predictions
//! f32 x3 origin, f32 x3 voxel size, u32 x3 dims
//! u16 T_in, u16 T_out
//! samples:      T_in+1 input grids then T_out+1 target grids, each
//!               u32 run count followed by (u32 length, u8 state) runs
//! predictions:  T_out+1 grids of nx*ny*nz f32 probabilities
//! ```
//!
//! Cells are ordered x fastest, then y, then z.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GridSpec;
use crate::metrics::ProbabilityGrid;
use crate::occupancy::{CellState, OccupancyGrid, Sample};

pub const MAGIC: &[u8; 4] = b"OCF1";
pub const SAMPLE_VERSION: u16 = 1;
pub const PREDICTION_VERSION: u16 = 2;
pub const SAMPLE_EXTENSION: &str = "ocf";
pub const PREDICTION_EXTENSION: &str = "ocfp";
const HEADER_LEN: usize = 4 + 2 + 12 + 12 + 12 + 2 + 2;

/// Maximal runs of equal states in linear cell order.
pub fn run_lengths(states: &[CellState]) -> Vec<(u32, CellState)> {
    let mut runs: Vec<(u32, CellState)> = Vec::new();
    for &s in states {
        match runs.last_mut() {
            Some((n, last)) if *last == s && *n < u32::MAX => *n += 1,
            _ => runs.push((1, s)),
        }
    }
    runs
}

fn put_header(out: &mut Vec<u8>, version: u16, spec: &GridSpec, t_in: usize, t_out: usize) -> Result<()> {
    let t_in = u16::try_from(t_in).map_err(|_| Error::Config(format!("T_in {t_in} exceeds u16")))?;
    let t_out = u16::try_from(t_out).map_err(|_| Error::Config(format!("T_out {t_out} exceeds u16")))?;
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&version.to_le_bytes());
    for v in spec.origin().iter().chain(spec.voxel_size().iter()) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    for d in spec.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&t_in.to_le_bytes());
    out.extend_from_slice(&t_out.to_le_bytes());
    Ok(())
}

fn put_grid(out: &mut Vec<u8>, grid: &OccupancyGrid) {
    let runs = run_lengths(grid.states());
    out.extend_from_slice(&(runs.len() as u32).to_le_bytes());
    for (n, s) in runs {
        out.extend_from_slice(&n.to_le_bytes());
        out.push(s.code());
    }
}

pub fn encode_sample(sample: &Sample) -> Result<Vec<u8>> {
    sample.validate()?;
    let mut out = Vec::new();
    put_header(&mut out, SAMPLE_VERSION, sample.spec(), sample.t_in(), sample.t_out())?;
    for g in sample.inputs.iter().chain(&sample.targets) {
        put_grid(&mut out, g);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| {
            Error::Corruption(format!("truncated at byte {} (needed {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_bits(self.u32()?))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Corruption(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Grid spec, T_in and T_out from an OCF1 header.
pub struct Header {
    pub version: u16,
    pub spec: GridSpec,
    pub t_in: usize,
    pub t_out: usize,
}

fn read_header(r: &mut Reader) -> Result<Header> {
    if r.bytes.len() < 4 || &r.bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, not an OCF1 file".into()));
    }
    r.pos = 4;
    if r.bytes.len() < HEADER_LEN {
        return Err(Error::Corruption("truncated header".into()));
    }
    let version = r.u16()?;
    let mut f = [0f64; 6];
    for v in f.iter_mut() {
        *v = r.f32()? as f64;
    }
    let dims = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    let spec = GridSpec::new([f[0], f[1], f[2]], [f[3], f[4], f[5]], dims)
        .map_err(|e| Error::Format(format!("invalid grid header: {e}")))?;
    let t_in = r.u16()? as usize;
    let t_out = r.u16()? as usize;
    Ok(Header {
        version,
        spec,
        t_in,
        t_out,
    })
}

fn read_grid(r: &mut Reader, spec: &GridSpec) -> Result<OccupancyGrid> {
    let total = spec.num_voxels();
    let n_runs = r.u32()? as usize;
    let mut states = Vec::with_capacity(total);
    for _ in 0..n_runs {
        let len = r.u32()? as usize;
        let code = r.take(1)?[0];
        let state = CellState::from_code(code)
            .ok_or_else(|| Error::Corruption(format!("unknown state code {code}")))?;
        if len == 0 {
            return Err(Error::Corruption("zero-length run".into()));
        }
        if states.len() + len > total {
            return Err(Error::Corruption(format!(
                "runs exceed the {total} voxels of the grid"
            )));
        }
        states.extend(std::iter::repeat(state).take(len));
    }
    if states.len() != total {
        return Err(Error::Corruption(format!(
            "runs cover {} of {total} voxels",
            states.len()
        )));
    }
    OccupancyGrid::from_states(*spec, states)
}

/// Decodes sample bytes; identity fields are left for the caller to fill in.
pub fn decode_sample(bytes: &[u8]) -> Result<Sample> {
    let mut r = Reader { bytes, pos: 0 };
    let h = read_header(&mut r)?;
    if h.version != SAMPLE_VERSION {
        return Err(Error::Format(format!("unsupported sample version {}", h.version)));
    }
    let inputs = (0..=h.t_in)
        .map(|_| read_grid(&mut r, &h.spec))
        .collect::<Result<Vec<_>>>()?;
    if inputs.iter().any(OccupancyGrid::has_unknown) {
        return Err(Error::Corruption("input grid contains UNKNOWN".into()));
    }
    let targets = (0..=h.t_out)
        .map(|_| read_grid(&mut r, &h.spec))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(Sample {
        sequence_id: String::new(),
        t0_frame: 0,
        inputs,
        targets,
    })
}

/// Relative location of a sample inside a dataset: `samples/<sequence>/<t0>.ocf`.
pub fn sample_rel_path(sequence_id: &str, t0: usize) -> PathBuf {
    Path::new("samples")
        .join(sequence_id)
        .join(format!("{t0:06}.{SAMPLE_EXTENSION}"))
}

// Recovers (sequence_id, t0) from `<sequence>/<t0>.ocf`.
fn identity_from_path(path: &Path) -> Option<(String, usize)> {
    let t0 = path.file_stem()?.to_str()?.parse().ok()?;
    let seq = path.parent()?.file_name()?.to_str()?.to_owned();
    Some((seq, t0))
}

pub fn write_sample(sample: &Sample, path: &Path) -> Result<()> {
    let bytes = encode_sample(sample)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Reads an OCF1 sample. Sequence id and anchor frame come from the
/// `<sequence>/<t0>.ocf` path when it follows that layout.
pub fn read_sample(path: &Path) -> Result<Sample> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut sample = decode_sample(&bytes).map_err(|e| e.context(path.display().to_string()))?;
    if let Some((seq, t0)) = identity_from_path(path) {
        sample.sequence_id = seq;
        sample.t0_frame = t0;
    }
    Ok(sample)
}

pub fn encode_prediction(preds: &[ProbabilityGrid], t_in: usize) -> Result<Vec<u8>> {
    let first = preds
        .first()
        .ok_or_else(|| Error::Config("no prediction frames".into()))?;
    if preds.iter().any(|p| p.spec() != first.spec()) {
        return Err(Error::Shape("prediction frames disagree on grid spec".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + preds.len() * first.probs().len() * 4);
    put_header(&mut out, PREDICTION_VERSION, first.spec(), t_in, preds.len() - 1)?;
    for p in preds {
        for v in p.probs() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_prediction(bytes: &[u8]) -> Result<(Header, Vec<ProbabilityGrid>)> {
    let mut r = Reader { bytes, pos: 0 };
    let h = read_header(&mut r)?;
    if h.version != PREDICTION_VERSION {
        return Err(Error::Format(format!("unsupported prediction version {}", h.version)));
    }
    let n = h.spec.num_voxels();
    let mut frames = Vec::with_capacity(h.t_out + 1);
    for _ in 0..=h.t_out {
        let raw = r.take(n * 4)?;
        let probs = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        frames.push(ProbabilityGrid::new(h.spec, probs).map_err(|e| Error::Corruption(e.to_string()))?);
    }
    r.finish()?;
    Ok((h, frames))
}

pub fn write_prediction(path: &Path, preds: &[ProbabilityGrid], t_in: usize) -> Result<()> {
    let bytes = encode_prediction(preds, t_in)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_prediction(path: &Path) -> Result<Vec<ProbabilityGrid>> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(decode_prediction(&bytes)
        .map_err(|e| e.context(path.display().to_string()))?
        .1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

/// Scene-level partition of sequence ids.
pub type SplitAssignment = BTreeMap<Split, Vec<String>>;

/// Deterministically partitions sequences into train/val/test.
///
/// Counts follow the largest-remainder rule, so each split is within one
/// scene of `ratio * n`; every split with a non-zero ratio receives at least
/// one scene. Ids are sorted before a ChaCha8 shuffle seeded with `seed`.
pub fn split_sequences(sequence_ids: &[String], ratios: [f64; 3], seed: u64) -> Result<SplitAssignment> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::Config(format!("split ratios {ratios:?} must be non-negative")));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios sum to {sum}, not 1")));
    }
    let mut ids: Vec<String> = sequence_ids.to_vec();
    ids.sort();
    ids.dedup();
    let n = ids.len();
    let nonzero = ratios.iter().filter(|r| **r > 0.0).count();
    if n < nonzero {
        return Err(Error::Config(format!(
            "{n} sequences cannot fill {nonzero} non-empty splits"
        )));
    }

    let raw: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    // The epsilon absorbs rounding in ratios such as 120/180.
    let mut counts: Vec<usize> = raw.iter().map(|v| (v + 1e-9).floor() as usize).collect();
    let mut remaining = n - counts.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..3).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = raw[a] - counts[a] as f64;
        let rb = raw[b] - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in by_remainder.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if ratios[i] > 0.0 {
            counts[i] += 1;
            remaining -= 1;
        }
    }
    for i in 0..3 {
        if ratios[i] > 0.0 && counts[i] == 0 {
            let donor = (0..3).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
            counts[donor] -= 1;
            counts[i] += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let mut out = SplitAssignment::new();
    let mut rest = ids.into_iter();
    for (split, count) in Split::ALL.iter().zip(counts) {
        let mut chosen: Vec<String> = rest.by_ref().take(count).collect();
        chosen.sort();
        out.insert(*split, chosen);
    }
    Ok(out)
}

/// One curated sample as listed in a manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    /// Relative to the dataset root.
    pub path: String,
    pub sequence_id: String,
    pub t0_frame: usize,
    pub dynamic_instances: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub spec: GridSpec,
    pub t_in: usize,
    pub t_out: usize,
    pub splits: BTreeMap<Split, Vec<SampleEntry>>,
    /// Samples (anchor frames) per split.
    pub frame_counts: BTreeMap<Split, usize>,
    /// Sequences per split.
    pub scene_counts: BTreeMap<Split, usize>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl DatasetManifest {
    pub fn entries(&self) -> impl Iterator<Item = (Split, &SampleEntry)> {
        self.splits.iter().flat_map(|(s, es)| es.iter().map(move |e| (*s, e)))
    }

    pub fn validate(&self, root: &Path) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (split, e) in self.entries() {
            if !seen.insert(e.path.as_str()) {
                return Err(Error::Consistency(format!("{} listed twice ({})", e.path, split.name())));
            }
            if !root.join(&e.path).is_file() {
                return Err(Error::Consistency(format!("listed sample {} does not exist", e.path)));
            }
        }
        let mut seq_split: BTreeMap<&str, Split> = BTreeMap::new();
        for (split, e) in self.entries() {
            if let Some(prev) = seq_split.insert(&e.sequence_id, split) {
                if prev != split {
                    return Err(Error::Consistency(format!(
                        "sequence {} appears in both {} and {}",
                        e.sequence_id,
                        prev.name(),
                        split.name()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        let path = root.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let m: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        m.validate(root)?;
        Ok(m)
    }
}

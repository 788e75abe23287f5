use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joints per frame in the DHG/SHREC hand skeleton.
pub const JOINTS: usize = 22;
/// Palm joint in the 22-joint ordering (wrist = 0, palm = 1).
pub const PALM_JOINT: usize = 1;
/// Reals per skeleton-file line: 22 joints x (x, y, z).
const FIELDS_PER_FRAME: usize = JOINTS * 3;

/// Accepted skeleton file names. Dataset releases differ in pluralization,
/// and some repackaged trees change the casing; matching is case-insensitive
/// against this table.
pub const SKELETON_FILE_ALIASES: [&str; 2] = ["skeleton_world.txt", "skeletons_world.txt"];

pub type Frame = Vec<[f64; 3]>;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One gesture recording: per-frame joint coordinates in meters plus labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonSequence {
    pub frames: Vec<Frame>,
    /// Class id, 0-based within the dataset's class count.
    pub label: usize,
    pub subject: u32,
    /// Finger configuration: 1 (one finger) or 2 (whole hand).
    pub finger: u8,
    /// Fixed-protocol membership when the dataset distribution defines one.
    pub split: Option<Split>,
}

impl SkeletonSequence {
    pub fn validate(&self, classes: usize) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::Dataset("sequence has no frames".into()));
        }
        for (t, frame) in self.frames.iter().enumerate() {
            if frame.len() != JOINTS {
                return Err(Error::Dataset(format!(
                    "frame {t} has {} joints, expected {JOINTS}",
                    frame.len()
                )));
            }
            for joint in frame {
                if joint.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Dataset(format!("non-finite coordinate in frame {t}")));
                }
            }
        }
        if self.label >= classes {
            return Err(Error::Dataset(format!(
                "label {} out of range for {classes} classes",
                self.label
            )));
        }
        if !(self.finger == 1 || self.finger == 2) {
            return Err(Error::Dataset(format!("finger config must be 1 or 2, got {}", self.finger)));
        }
        Ok(())
    }
}

/// One recording's location and identity within a dataset tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexEntry {
    pub path: PathBuf,
    /// Gesture id, 1-based as in the distributions (1..=14).
    pub gesture: u8,
    pub finger: u8,
    pub subject: u32,
    pub trial: u32,
    pub split: Option<Split>,
}

impl IndexEntry {
    fn key(&self) -> (u8, u8, u32, u32) {
        (self.gesture, self.finger, self.subject, self.trial)
    }
}

#[derive(Clone, Debug, Default)]
pub struct DatasetIndex {
    pub entries: Vec<IndexEntry>,
}

impl DatasetIndex {
    pub fn subjects(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.entries.iter().map(|e| e.subject).collect();
        set.into_iter().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// 14-class label is the gesture id; the 28-class scheme interleaves the two
/// finger configurations: (gesture-1)*2 + (finger-1).
pub fn class_label(gesture: u8, finger: u8, classes: usize) -> Result<usize> {
    if !(1..=14).contains(&gesture) {
        return Err(Error::Dataset(format!("gesture id {gesture} outside 1..=14")));
    }
    if !(finger == 1 || finger == 2) {
        return Err(Error::Dataset(format!("finger config {finger} outside {{1,2}}")));
    }
    match classes {
        14 => Ok(gesture as usize - 1),
        28 => Ok((gesture as usize - 1) * 2 + (finger as usize - 1)),
        _ => Err(Error::Dataset(format!("class count must be 14 or 28, got {classes}"))),
    }
}

fn data_err(path: &Path, line: usize, msg: impl fmt::Display) -> Error {
    Error::Data { path: path.display().to_string(), line, msg: msg.to_string() }
}

/// Parses one frame per line: 66 whitespace-separated finite reals.
/// Tolerates CRLF endings and a trailing blank line.
pub fn load_skeleton_file(path: &Path) -> Result<Vec<Frame>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut frames = Vec::new();
    let total_lines = text.lines().count();
    for (i, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() {
            if i + 1 == total_lines {
                continue;
            }
            return Err(data_err(path, i + 1, "blank line inside skeleton data"));
        }
        let mut values = [0.0f64; FIELDS_PER_FRAME];
        let mut count = 0;
        for token in line.split_whitespace() {
            if count == FIELDS_PER_FRAME {
                count += 1;
                break;
            }
            values[count] = token
                .parse::<f64>()
                .map_err(|_| data_err(path, i + 1, format!("unparseable value {token:?}")))?;
            if !values[count].is_finite() {
                return Err(data_err(path, i + 1, format!("non-finite value {token}")));
            }
            count += 1;
        }
        if count != FIELDS_PER_FRAME {
            return Err(data_err(
                path,
                i + 1,
                format!("expected {FIELDS_PER_FRAME} values, found {count}"),
            ));
        }
        let frame: Frame = values.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(data_err(path, 0, "no frames in file"));
    }
    Ok(frames)
}

fn component_number(component: &str, prefix: &str) -> Option<u32> {
    let lower = component.to_ascii_lowercase();
    lower.strip_prefix(prefix)?.parse().ok()
}

fn is_skeleton_file(name: &str) -> bool {
    SKELETON_FILE_ALIASES.iter().any(|a| name.eq_ignore_ascii_case(a))
}

/// Reads gesture/finger/subject/essai ids out of a skeleton file's ancestor
/// directories, accepting any nesting above them.
fn parse_tree_path(path: &Path) -> Option<(u8, u8, u32, u32)> {
    let mut gesture = None;
    let mut finger = None;
    let mut subject = None;
    let mut trial = None;
    for comp in path.components() {
        let part = comp.as_os_str().to_string_lossy();
        if let Some(v) = component_number(&part, "gesture_") {
            gesture = Some(v as u8);
        } else if let Some(v) = component_number(&part, "finger_") {
            finger = Some(v as u8);
        } else if let Some(v) = component_number(&part, "subject_") {
            subject = Some(v);
        } else if let Some(v) = component_number(&part, "essai_") {
            trial = Some(v);
        }
    }
    Some((gesture?, finger?, subject?, trial?))
}

fn check_duplicates(entries: &[IndexEntry]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for e in entries {
        if !seen.insert(e.key()) {
            return Err(Error::Data {
                path: e.path.display().to_string(),
                line: 0,
                msg: format!(
                    "duplicate entry gesture_{} finger_{} subject_{} essai_{}",
                    e.gesture, e.finger, e.subject, e.trial
                ),
            });
        }
    }
    Ok(())
}

/// Walks a DHG-14/28 tree (gesture_G/finger_F/subject_S/essai_E/skeleton
/// file) and indexes every recording found.
pub fn index_dhg(root: &Path) -> Result<DatasetIndex> {
    let mut entries = Vec::new();
    for item in walkdir::WalkDir::new(root).sort_by_file_name() {
        let item = item.map_err(|e| Error::Data {
            path: root.display().to_string(),
            line: 0,
            msg: format!("walk failed: {e}"),
        })?;
        if !item.file_type().is_file() {
            continue;
        }
        let name = item.file_name().to_string_lossy();
        if !is_skeleton_file(&name) {
            continue;
        }
        let Some((gesture, finger, subject, trial)) = parse_tree_path(item.path()) else {
            return Err(Error::Data {
                path: item.path().display().to_string(),
                line: 0,
                msg: "skeleton file outside gesture_/finger_/subject_/essai_ tree".into(),
            });
        };
        entries.push(IndexEntry {
            path: item.path().to_path_buf(),
            gesture,
            finger,
            subject,
            trial,
            split: None,
        });
    }
    if entries.is_empty() {
        return Err(Error::Data {
            path: root.display().to_string(),
            line: 0,
            msg: "no skeleton files found".into(),
        });
    }
    entries.sort_by_key(|e| e.key());
    check_duplicates(&entries)?;
    Ok(DatasetIndex { entries })
}

fn read_split_file(root: &Path, name: &str, split: Split) -> Result<Vec<IndexEntry>> {
    let path = root.join(name);
    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut entries = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<u32> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| data_err(&path, i + 1, format!("unparseable id {t:?}")))
            })
            .collect::<Result<_>>()?;
        // id_gesture id_finger id_subject id_essai [label_14 label_28 length]
        if fields.len() < 4 {
            return Err(data_err(&path, i + 1, "expected at least 4 id fields"));
        }
        let (gesture, finger, subject, trial) = (fields[0], fields[1], fields[2], fields[3]);
        if !(1..=14).contains(&gesture) || !(1..=2).contains(&finger) {
            return Err(data_err(&path, i + 1, format!("ids out of range: {line}")));
        }
        let dir = root
            .join(format!("gesture_{gesture}"))
            .join(format!("finger_{finger}"))
            .join(format!("subject_{subject}"))
            .join(format!("essai_{trial}"));
        let file = SKELETON_FILE_ALIASES
            .iter()
            .map(|a| dir.join(a))
            .find(|p| p.exists())
            .unwrap_or_else(|| dir.join(SKELETON_FILE_ALIASES[1]));
        entries.push(IndexEntry {
            path: file,
            gesture: gesture as u8,
            finger: finger as u8,
            subject,
            trial,
            split: Some(split),
        });
    }
    Ok(entries)
}

/// Indexes a SHREC'17 tree from its distributed train/test list files.
pub fn index_shrec(root: &Path) -> Result<DatasetIndex> {
    let mut entries = read_split_file(root, "train_gestures.txt", Split::Train)?;
    entries.extend(read_split_file(root, "test_gestures.txt", Split::Test)?);
    if entries.is_empty() {
        return Err(Error::Data {
            path: root.display().to_string(),
            line: 0,
            msg: "split files contain no entries".into(),
        });
    }
    entries.sort_by_key(|e| e.key());
    check_duplicates(&entries)?;
    Ok(DatasetIndex { entries })
}

/// A fully-loaded dataset ready for the training pipeline.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub sequences: Vec<SkeletonSequence>,
    pub classes: usize,
    pub name: String,
}

impl Dataset {
    pub fn subjects(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.sequences.iter().map(|s| s.subject).collect();
        set.into_iter().collect()
    }
}

/// Loads every indexed file, attaching 14- or 28-class labels.
pub fn load_dataset(index: &DatasetIndex, classes: usize, name: &str) -> Result<Dataset> {
    let mut sequences = Vec::with_capacity(index.entries.len());
    for entry in &index.entries {
        let frames = load_skeleton_file(&entry.path)?;
        let seq = SkeletonSequence {
            frames,
            label: class_label(entry.gesture, entry.finger, classes)?,
            subject: entry.subject,
            finger: entry.finger,
            split: entry.split,
        };
        seq.validate(classes)?;
        sequences.push(seq);
    }
    Ok(Dataset { sequences, classes, name: name.to_string() })
}

/// `classes=K,per_class=M,seed=S` as accepted by `--synthetic`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub seed: u64,
    pub frames: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { classes: 3, per_class: 20, seed: 7, frames: 32 }
    }
}

impl std::str::FromStr for SynthSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut spec = SynthSpec::default();
        for part in s.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            let parse = |v: &str| v.parse::<u64>().map_err(|_| format!("bad number {v:?} for {key}"));
            match key {
                "classes" => spec.classes = parse(value)? as usize,
                "per_class" => spec.per_class = parse(value)? as usize,
                "seed" => spec.seed = parse(value)?,
                "frames" => spec.frames = parse(value)? as usize,
                _ => return Err(format!("unknown synthetic key {key:?}")),
            }
        }
        if spec.classes < 2 {
            return Err("synthetic data needs classes >= 2".into());
        }
        if spec.per_class == 0 {
            return Err("synthetic data needs per_class >= 1".into());
        }
        if spec.frames < 2 {
            return Err("synthetic data needs frames >= 2".into());
        }
        Ok(spec)
    }
}

/// Canonical resting hand: wrist below palm at the origin, five four-joint
/// finger chains fanned upward. Indices follow the bone table in `graph`.
fn base_hand() -> Frame {
    let mut joints = vec![[0.0f64; 3]; JOINTS];
    joints[0] = [0.0, -0.08, 0.0];
    joints[1] = [0.0, 0.0, 0.0];
    // (base joint index, fan angle from vertical, segment length)
    let fingers: [(usize, f64, f64); 5] = [
        (2, 0.9, 0.030),   // thumb
        (6, 0.35, 0.034),  // index
        (10, 0.0, 0.036),  // middle
        (14, -0.35, 0.034), // ring
        (18, -0.7, 0.030), // little
    ];
    for (base, angle, seg) in fingers {
        let dir = [angle.sin(), angle.cos(), 0.0];
        let root = [dir[0] * 0.045, 0.04 + dir[1] * 0.02, 0.0];
        for k in 0..4 {
            let reach = seg * (k as f64 + 1.0);
            joints[base + k] = [root[0] + dir[0] * reach, root[1] + dir[1] * reach, 0.0];
        }
    }
    joints
}

fn rotate_z(p: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    [p[0] * c - p[1] * s, p[0] * s + p[1] * c, p[2]]
}

/// Per-class motion programs sharing one spatial pose AND one global motion:
/// every class drifts and spins the same way, and what separates them is
/// which fingers articulate. The discriminating signal therefore lives in
/// joint-level configuration, like the finger articulation that distinguishes
/// real gestures, not in gross translation.
fn synth_sequence(
    class: usize,
    classes: usize,
    frames: usize,
    noise_sigma: f64,
    rng: &mut impl Rng,
) -> Vec<Frame> {
    let hand = base_hand();
    let travel = [0.06, 0.02, 0.04];
    let spin = 0.3;
    // Class c curls finger f iff (c·(f+1) mod K) falls in the lower half of
    // 0..K: each class is a distinct subset of articulating fingers.
    let active = |finger: usize| 2 * ((class * (finger + 1)) % classes) < classes;

    let start = [
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.05..0.05),
    ];
    let scale = rng.gen_range(0.95..1.05);
    let speed = rng.gen_range(0.9..1.1);
    let noise = Normal::new(0.0, noise_sigma).expect("sigma >= 0");

    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let prog = speed * t as f64 / (frames - 1) as f64;
        let mut frame = Vec::with_capacity(JOINTS);
        for (j, &joint) in hand.iter().enumerate() {
            let mut p = joint;
            // Active fingers fold monotonically toward their root and stay
            // folded, so the subset reads off the late-sequence posture.
            if j >= 2 {
                let finger = (j - 2) / 4;
                if active(finger) {
                    let depth = ((j - 2) % 4) as f64 / 3.0;
                    let curl = (1.5 * prog).min(1.0);
                    let toward = 0.85 * curl * depth;
                    let root = hand[j - (j - 2) % 4];
                    for a in 0..3 {
                        p[a] += (root[a] - p[a]) * toward;
                    }
                }
            }
            p = rotate_z(p, spin * prog);
            for a in 0..3 {
                p[a] = scale * p[a] + start[a] + travel[a] * prog + noise.sample(rng);
            }
            frame.push(p);
        }
        out.push(frame);
    }
    out
}

pub const SYNTH_NOISE_SIGMA: f64 = 0.005;

/// Deterministic synthetic dataset: `per_class` recordings of each class,
/// subjects assigned round-robin and every fifth recording tagged as the
/// fixed-protocol test split.
pub fn synth_gestures(spec: &SynthSpec, rng: &mut impl Rng) -> Result<Dataset> {
    if spec.classes < 2 {
        return Err(Error::Param(format!("synthetic classes must be >= 2, got {}", spec.classes)));
    }
    let mut sequences = Vec::with_capacity(spec.classes * spec.per_class);
    for class in 0..spec.classes {
        for m in 0..spec.per_class {
            let frames = synth_sequence(class, spec.classes, spec.frames, SYNTH_NOISE_SIGMA, rng);
            let seq = SkeletonSequence {
                frames,
                label: class,
                subject: (m % 4) as u32 + 1,
                finger: 1,
                split: Some(if m % 5 == 4 { Split::Test } else { Split::Train }),
            };
            seq.validate(spec.classes)?;
            sequences.push(seq);
        }
    }
    Ok(Dataset { sequences, classes: spec.classes, name: "synthetic".to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn write_frames(path: &Path, frames: &[Vec<f64>]) {
        let text: String = frames
            .iter()
            .map(|f| f.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n");
        std::fs::write(path, text).unwrap();
    }

    #[test]
    fn loads_frames_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        let mut rows = Vec::new();
        for t in 0..40 {
            rows.push((0..66).map(|i| (t * 66 + i) as f64 * 0.001).collect());
        }
        write_frames(&path, &rows);
        let frames = load_skeleton_file(&path).unwrap();
        assert_eq!(frames.len(), 40);
        assert_eq!(frames[0][0], [0.0, 0.001, 0.002]);
        assert_eq!(frames[1][0][0], 0.066);
    }

    #[test]
    fn zero_line_gives_origin_joints() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        write_frames(&path, &[vec![0.0; 66]]);
        let frames = load_skeleton_file(&path).unwrap();
        assert_eq!(frames.len(), 1);
        assert!(frames[0].iter().all(|j| *j == [0.0, 0.0, 0.0]));
    }

    #[test]
    fn crlf_and_trailing_newline_tolerated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        let line: Vec<String> = (0..66).map(|i| format!("{}", i as f64 * 0.5)).collect();
        std::fs::write(&path, format!("{}\r\n{}\r\n", line.join(" "), line.join(" "))).unwrap();
        let frames = load_skeleton_file(&path).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1][21][2], 65.0 * 0.5);
    }

    #[test]
    fn bad_field_count_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        std::fs::write(&path, format!("{}\n{}\n", vec!["0.0"; 66].join(" "), vec!["0.0"; 65].join(" ")))
            .unwrap();
        let err = load_skeleton_file(&path).unwrap_err().to_string();
        assert!(err.contains("seq.txt:2"), "{err}");
    }

    #[test]
    fn unparseable_token_and_empty_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.txt");
        let mut row = vec!["0.5".to_string(); 66];
        row[10] = "abc".into();
        std::fs::write(&bad, row.join(" ")).unwrap();
        assert!(load_skeleton_file(&bad).is_err());

        let empty = dir.path().join("empty.txt");
        std::fs::write(&empty, "").unwrap();
        assert!(load_skeleton_file(&empty).is_err());
    }

    #[test]
    fn round_trip_preserves_printed_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..66).map(|_| rng.gen_range(-1.0..1.0)).collect();
        write_frames(&path, &[values.clone()]);
        let frames = load_skeleton_file(&path).unwrap();
        let loaded: Vec<f64> = frames[0].iter().flatten().copied().collect();
        assert_eq!(loaded, values);
    }

    fn fake_dhg_tree(root: &Path, subjects: u32, trials: u32) {
        for g in 1..=14 {
            for f in 1..=2 {
                for s in 1..=subjects {
                    for e in 1..=trials {
                        let dir = root
                            .join(format!("gesture_{g}"))
                            .join(format!("finger_{f}"))
                            .join(format!("subject_{s}"))
                            .join(format!("essai_{e}"));
                        std::fs::create_dir_all(&dir).unwrap();
                        std::fs::write(dir.join("skeleton_world.txt"), vec!["0.1"; 66].join(" "))
                            .unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn dhg_index_counts_and_subjects() {
        let dir = tempfile::tempdir().unwrap();
        fake_dhg_tree(dir.path(), 2, 3);
        let index = index_dhg(dir.path()).unwrap();
        assert_eq!(index.len(), 14 * 2 * 2 * 3);
        assert_eq!(index.subjects(), vec![1, 2]);
    }

    #[test]
    fn dhg_duplicate_alias_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fake_dhg_tree(dir.path(), 1, 1);
        let extra = dir
            .path()
            .join("gesture_1/finger_1/subject_1/essai_1/skeletons_world.txt");
        std::fs::write(extra, vec!["0.1"; 66].join(" ")).unwrap();
        assert!(index_dhg(dir.path()).is_err());
    }

    #[test]
    fn dhg_empty_tree_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(index_dhg(dir.path()).is_err());
    }

    #[test]
    fn class_label_bijection_for_28() {
        let mut seen = std::collections::BTreeSet::new();
        for g in 1..=14u8 {
            for f in 1..=2u8 {
                let label = class_label(g, f, 28).unwrap();
                assert!(label < 28);
                assert!(seen.insert(label));
            }
        }
        assert_eq!(seen.len(), 28);
        assert_eq!(class_label(3, 2, 14).unwrap(), 2);
        assert!(class_label(15, 1, 14).is_err());
        assert!(class_label(1, 3, 28).is_err());
    }

    fn fake_shrec_tree(root: &Path) {
        let mut train_lines = Vec::new();
        let mut test_lines = Vec::new();
        for g in 1..=2u32 {
            for e in 1..=3u32 {
                let dir = root
                    .join(format!("gesture_{g}"))
                    .join("finger_1")
                    .join(format!("subject_{e}"))
                    .join(format!("essai_{e}"));
                std::fs::create_dir_all(&dir).unwrap();
                std::fs::write(dir.join("skeletons_world.txt"), vec!["0.2"; 66].join(" ")).unwrap();
                let line = format!("{g} 1 {e} {e} {g} {} 10", (g - 1) * 2 + 1);
                if e == 3 {
                    test_lines.push(line);
                } else {
                    train_lines.push(line);
                }
            }
        }
        std::fs::write(root.join("train_gestures.txt"), train_lines.join("\n")).unwrap();
        std::fs::write(root.join("test_gestures.txt"), test_lines.join("\n")).unwrap();
    }

    #[test]
    fn shrec_split_partitions_index() {
        let dir = tempfile::tempdir().unwrap();
        fake_shrec_tree(dir.path());
        let index = index_shrec(dir.path()).unwrap();
        assert_eq!(index.len(), 6);
        let train = index.entries.iter().filter(|e| e.split == Some(Split::Train)).count();
        let test = index.entries.iter().filter(|e| e.split == Some(Split::Test)).count();
        assert_eq!(train + test, index.len());
        assert_eq!(test, 2);
    }

    #[test]
    fn shrec_missing_split_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("train_gestures.txt"), "1 1 1 1 1 1 5").unwrap();
        assert!(index_shrec(dir.path()).is_err());
    }

    #[test]
    fn shrec_duplicate_across_splits_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("train_gestures.txt"), "1 1 1 1 1 1 5").unwrap();
        std::fs::write(dir.path().join("test_gestures.txt"), "1 1 1 1 1 1 5").unwrap();
        assert!(index_shrec(dir.path()).is_err());
    }

    #[test]
    fn loaded_dataset_carries_labels_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        fake_dhg_tree(dir.path(), 2, 1);
        let index = index_dhg(dir.path()).unwrap();
        let ds14 = load_dataset(&index, 14, "dhg").unwrap();
        assert_eq!(ds14.sequences.len(), index.len());
        assert!(ds14.sequences.iter().all(|s| s.label < 14));
        let ds28 = load_dataset(&index, 28, "dhg").unwrap();
        assert!(ds28.sequences.iter().any(|s| s.label >= 14));
    }

    #[test]
    fn synth_spec_parses_and_rejects() {
        let spec: SynthSpec = "classes=3,per_class=20,seed=7".parse().unwrap();
        assert_eq!(spec, SynthSpec { classes: 3, per_class: 20, seed: 7, frames: 32 });
        assert!("classes=1,per_class=5,seed=0".parse::<SynthSpec>().is_err());
        assert!("classes=3,bogus=1".parse::<SynthSpec>().is_err());
        assert!("classes".parse::<SynthSpec>().is_err());
    }

    #[test]
    fn synth_same_seed_bit_identical() {
        let spec = SynthSpec { classes: 3, per_class: 4, seed: 9, frames: 16 };
        let a = synth_gestures(&spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)).unwrap();
        let b = synth_gestures(&spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)).unwrap();
        assert_eq!(a.sequences, b.sequences);
    }

    #[test]
    fn synth_sequences_pass_invariants() {
        let spec = SynthSpec { classes: 5, per_class: 6, seed: 3, frames: 20 };
        let ds = synth_gestures(&spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)).unwrap();
        assert_eq!(ds.sequences.len(), 30);
        for seq in &ds.sequences {
            seq.validate(ds.classes).unwrap();
            assert_eq!(seq.frames.len(), 20);
        }
        let train = ds.sequences.iter().filter(|s| s.split == Some(Split::Train)).count();
        let test = ds.sequences.iter().filter(|s| s.split == Some(Split::Test)).count();
        assert_eq!(train + test, 30);
        assert!(test > 0 && train > 0);
    }

    #[test]
    fn synth_class_means_separated_beyond_noise() {
        let spec = SynthSpec { classes: 3, per_class: 20, seed: 7, frames: 32 };
        let ds = synth_gestures(&spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)).unwrap();
        let mean_traj = |class: usize| -> Vec<f64> {
            let members: Vec<_> = ds.sequences.iter().filter(|s| s.label == class).collect();
            let dim = spec.frames * JOINTS * 3;
            let mut mean = vec![0.0; dim];
            for seq in &members {
                for (i, v) in seq.frames.iter().flatten().flatten().enumerate() {
                    mean[i] += *v;
                }
            }
            for m in &mut mean {
                *m /= members.len() as f64;
            }
            mean
        };
        let a = mean_traj(0);
        let b = mean_traj(1);
        let l2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        assert!(
            l2 >= 10.0 * SYNTH_NOISE_SIGMA,
            "class mean separation {l2} below 10x sigma"
        );
    }
}

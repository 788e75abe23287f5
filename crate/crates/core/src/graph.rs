use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Dense2D;

/// The skeleton graph's extent: T frames of N joints, one node per (frame, joint).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct GraphShape {
    pub t: usize,
    pub n: usize,
}

impl GraphShape {
    pub fn new(t: usize, n: usize) -> Result<GraphShape> {
        if t == 0 || n == 0 {
            return Err(Error::Param(format!("graph shape needs T >= 1 and N >= 1, got T={t} N={n}")));
        }
        Ok(GraphShape { t, n })
    }

    pub fn nodes(&self) -> usize {
        self.t * self.n
    }
}

/// Canonical frame-major node ordering: node (t, i) sits at t·N + i, which
/// makes the spatial mask block-diagonal.
pub fn flatten_index(t: usize, i: usize, shape: GraphShape) -> Result<usize> {
    if t >= shape.t || i >= shape.n {
        return Err(Error::Index(format!(
            "node (t={t}, i={i}) outside shape T={} N={}",
            shape.t, shape.n
        )));
    }
    Ok(t * shape.n + i)
}

pub fn unflatten_index(node: usize, shape: GraphShape) -> Result<(usize, usize)> {
    if node >= shape.nodes() {
        return Err(Error::Index(format!(
            "node {node} outside shape T={} N={}",
            shape.t, shape.n
        )));
    }
    Ok((node / shape.n, node % shape.n))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MaskKind {
    Spatial,
    Temporal,
    Ssg,
    Full,
}

impl MaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            MaskKind::Spatial => "spatial",
            MaskKind::Temporal => "temporal",
            MaskKind::Ssg => "ssg",
            MaskKind::Full => "full",
        }
    }
}

/// Binary (T·N)x(T·N) edge-selection matrix. Entries are exactly 0.0 or 1.0;
/// the diagonal is always 1 (self-connected edges are never masked).
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMask {
    pub size: usize,
    pub kind: MaskKind,
    pub bits: Dense2D,
}

impl AttentionMask {
    #[inline]
    pub fn permitted(&self, a: usize, b: usize) -> bool {
        self.bits.get(a, b) == 1.0
    }

    pub fn ascii(&self) -> String {
        let mut s = String::with_capacity(self.size * (self.size + 1));
        for a in 0..self.size {
            for b in 0..self.size {
                s.push(if self.permitted(a, b) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    /// Plain (P2) PGM image, 1 = white, 0 = black.
    pub fn pgm(&self) -> String {
        let mut s = format!("P2\n{} {}\n1\n", self.size, self.size);
        for a in 0..self.size {
            let line: Vec<&str> = (0..self.size)
                .map(|b| if self.permitted(a, b) { "1" } else { "0" })
                .collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

fn build_mask(shape: GraphShape, kind: MaskKind, mut rule: impl FnMut(usize, usize, usize, usize) -> bool) -> AttentionMask {
    let size = shape.nodes();
    let bits = Dense2D::from_fn(size, size, |a, b| {
        let (ta, ia) = (a / shape.n, a % shape.n);
        let (tb, ib) = (b / shape.n, b % shape.n);
        if a == b || rule(ta, ia, tb, ib) {
            1.0
        } else {
            0.0
        }
    });
    AttentionMask { size, kind, bits }
}

/// Spatial-or-self edges: same frame, any joint pair.
pub fn build_spatial_mask(shape: GraphShape) -> AttentionMask {
    build_mask(shape, MaskKind::Spatial, |ta, _, tb, _| ta == tb)
}

/// Temporal-or-self edges: nodes in different frames. With
/// `same_joint_only`, cross-frame edges are restricted to the same joint.
pub fn build_temporal_mask(shape: GraphShape, same_joint_only: bool) -> AttentionMask {
    build_mask(shape, MaskKind::Temporal, |ta, ia, tb, ib| {
        ta != tb && (!same_joint_only || ia == ib)
    })
}

/// Sparse skeleton graph: bone edges within a frame, same-joint edges between
/// consecutive frames, plus self edges.
pub fn build_ssg_mask(shape: GraphShape, bone_list: &[(usize, usize)]) -> Result<AttentionMask> {
    for &(i, j) in bone_list {
        if i >= shape.n || j >= shape.n {
            return Err(Error::Param(format!(
                "bone ({i}, {j}) references a joint outside N={}",
                shape.n
            )));
        }
    }
    let mut adj = vec![false; shape.n * shape.n];
    for &(i, j) in bone_list {
        adj[i * shape.n + j] = true;
        adj[j * shape.n + i] = true;
    }
    Ok(build_mask(shape, MaskKind::Ssg, |ta, ia, tb, ib| {
        if ta == tb {
            adj[ia * shape.n + ib]
        } else {
            ta.abs_diff(tb) == 1 && ia == ib
        }
    }))
}

/// All-ones mask: every node attends every node (the single-attention variant).
pub fn build_full_mask(shape: GraphShape) -> AttentionMask {
    build_mask(shape, MaskKind::Full, |_, _, _, _| true)
}

pub fn build_mask_of_kind(
    shape: GraphShape,
    kind: MaskKind,
    bone_list: &[(usize, usize)],
    temporal_same_joint_only: bool,
) -> Result<AttentionMask> {
    Ok(match kind {
        MaskKind::Spatial => build_spatial_mask(shape),
        MaskKind::Temporal => build_temporal_mask(shape, temporal_same_joint_only),
        MaskKind::Ssg => build_ssg_mask(shape, bone_list)?,
        MaskKind::Full => build_full_mask(shape),
    })
}

/// The DHG/SHREC 22-joint hand skeleton: wrist (0) to palm (1), palm to the
/// base of each finger, and four-joint chains per finger
/// (thumb 2-5, index 6-9, middle 10-13, ring 14-17, little 18-21).
pub const DEFAULT_HAND_BONES: [(usize, usize); 21] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (4, 5),
    (1, 6),
    (6, 7),
    (7, 8),
    (8, 9),
    (1, 10),
    (10, 11),
    (11, 12),
    (12, 13),
    (1, 14),
    (14, 15),
    (15, 16),
    (16, 17),
    (1, 18),
    (18, 19),
    (19, 20),
    (20, 21),
];

/// Parses a bone list: one `i j` pair per line, `#` starts a comment, blank
/// lines ignored.
pub fn parse_bone_list(text: &str, origin: &str) -> Result<Vec<(usize, usize)>> {
    let mut bones = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse_one = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| Error::Data {
                path: origin.to_string(),
                line: lineno + 1,
                msg: "expected two joint indices".into(),
            })?
            .parse::<usize>()
            .map_err(|_| Error::Data {
                path: origin.to_string(),
                line: lineno + 1,
                msg: format!("unparseable joint index in {line:?}"),
            })
        };
        let i = parse_one(fields.next())?;
        let j = parse_one(fields.next())?;
        if fields.next().is_some() {
            return Err(Error::Data {
                path: origin.to_string(),
                line: lineno + 1,
                msg: format!("expected exactly two fields in {line:?}"),
            });
        }
        bones.push((i, j));
    }
    Ok(bones)
}

pub fn load_bone_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_bone_list(&text, &path.display().to_string())
}

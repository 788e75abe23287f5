use crate::error::{Error, Result};
use crate::graph::GraphShape;
use crate::tensor::Dense2D;

/// Fixed sinusoidal table: `count` positions by `dim` values, every entry in [-1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct PositionTable {
    pub count: usize,
    pub dim: usize,
    pub values: Dense2D,
}

/// e[2k] = sin(pos / 10000^(2k/dim)), e[2k+1] = cos(pos / 10000^(2k/dim)).
pub fn sinusoid(pos: usize, dim: usize) -> Result<Vec<f64>> {
    if dim < 2 || dim % 2 != 0 {
        return Err(Error::Param(format!("embedding dim must be even and >= 2, got {dim}")));
    }
    let mut e = vec![0.0; dim];
    for k in 0..dim / 2 {
        let freq = 10000f64.powf(2.0 * k as f64 / dim as f64);
        let arg = pos as f64 / freq;
        e[2 * k] = arg.sin();
        e[2 * k + 1] = arg.cos();
    }
    Ok(e)
}

fn build_table(count: usize, dim: usize) -> Result<PositionTable> {
    let mut values = Dense2D::zeros(count, dim);
    for pos in 0..count {
        let row = sinusoid(pos, dim)?;
        values.row_mut(pos).copy_from_slice(&row);
    }
    Ok(PositionTable { count, dim, values })
}

/// Spatial position embedding: one row per joint identity.
pub fn build_spe(n: usize, dim: usize) -> Result<PositionTable> {
    build_table(n, dim)
}

/// Temporal position embedding: one row per graph node, indexed by the
/// flattened node position t·N + i so all T·N rows are distinct.
pub fn build_tpe(shape: GraphShape, dim: usize) -> Result<PositionTable> {
    build_table(shape.nodes(), dim)
}

/// S-PE expanded to one row per node (the joint's row repeated across frames),
/// so it can be added directly to a (T·N x dim) feature matrix.
pub fn spe_node_rows(spe: &PositionTable, shape: GraphShape) -> Dense2D {
    assert_eq!(spe.count, shape.n, "S-PE row count must equal N");
    Dense2D::from_fn(shape.nodes(), spe.dim, |node, c| {
        spe.values.get(node % shape.n, c)
    })
}

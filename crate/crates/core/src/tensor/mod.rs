pub mod dense;
pub mod fdcheck;
pub mod tape;

pub use dense::{
    add, add_rows, concat_cols, cross_entropy, dropout, layer_norm, linear, mask_fill,
    masked_softmax_inplace, matmul, matmul_nt, max_abs_diff, mean_pool_rows, scale_div,
    softmax_rows, Dense2D, LayerNormCache,
};
pub use tape::{Gradients, Tape, VarId};

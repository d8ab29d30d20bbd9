//! Byte-token embedding lookup: gather forward, scatter-add backward.

use super::{shape_err, OpError};
use crate::corpus::VOCAB_SIZE;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Gathers `table` rows by token id: output row `i` = `table[tokens[i]]`.
///
/// `table` is `[257 × d]` — one row per byte value plus the pad row.
pub fn embedding_forward<T: Scalar>(
    tokens: &[u16],
    table: &Tensor<T>,
) -> Result<Tensor<T>, OpError> {
    if table.shape().len() != 2 || table.rows() != VOCAB_SIZE {
        return Err(shape_err(
            "embedding_forward",
            format!("table must be [{VOCAB_SIZE} x d], got {:?}", table.shape()),
        ));
    }
    let d = table.cols();
    for (index, &token) in tokens.iter().enumerate() {
        if (token as usize) >= VOCAB_SIZE {
            return Err(OpError::TokenOutOfRange { index, token });
        }
    }
    let mut out = Tensor::zeros(vec![tokens.len(), d]);
    for (i, &token) in tokens.iter().enumerate() {
        out.row_mut(i).copy_from_slice(table.row(token as usize));
    }
    Ok(out)
}

/// Scatters `upstream` rows back into `table_grad` rows by token id.
/// Repeated tokens accumulate.
pub fn embedding_backward<T: Scalar>(
    tokens: &[u16],
    upstream: &Tensor<T>,
    table_grad: &mut Tensor<T>,
) -> Result<(), OpError> {
    if upstream.rows() != tokens.len() || upstream.cols() != table_grad.cols() {
        return Err(shape_err(
            "embedding_backward",
            format!(
                "upstream {:?} incompatible with {} tokens and table {:?}",
                upstream.shape(),
                tokens.len(),
                table_grad.shape()
            ),
        ));
    }
    for (i, &token) in tokens.iter().enumerate() {
        let up = upstream.row(i);
        let row = table_grad.row_mut(token as usize);
        for (g, &u) in row.iter_mut().zip(up.iter()) {
            *g += u;
        }
    }
    Ok(())
}

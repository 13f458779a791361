use crate::error::{dim_err, Result};
use crate::numcore::{sigmoid, Scalar, Tensor};

/// Normalised output distribution over `K >= 2` neurons with exponential
/// activations: `π_k = exp(w_k·r + b_k)`, returned as `π_k / Σ_j π_j`.
///
/// `weight` is `[d_T, K]` (column `k` holds `w_k`), `bias` is `[K]`.
pub fn predict_k<T: Scalar>(r: &[T], weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Vec<T>> {
    let (rows, k) = weight.dims2();
    if rows != r.len() || bias.len() != k {
        return Err(dim_err!(
            "head {:?} with bias {:?} cannot read a representation of width {}",
            weight.shape(),
            bias.shape(),
            r.len()
        ));
    }
    if k < 2 {
        return Err(dim_err!("predict_k needs at least two outputs"));
    }
    let scores: Vec<T> = (0..k)
        .map(|j| r.iter().enumerate().map(|(i, ri)| *ri * weight.row(i)[j]).sum::<T>() + bias.data()[j])
        .collect();
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|s| (*s - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Probability of the positive class from a single sigmoid neuron.
pub fn predict_binary<T: Scalar>(r: &[T], weight: &Tensor<T>, bias: &Tensor<T>) -> Result<T> {
    if weight.len() != r.len() || bias.len() != 1 {
        return Err(dim_err!(
            "binary head {:?} cannot read a representation of width {}",
            weight.shape(),
            r.len()
        ));
    }
    let logit = r.iter().zip(weight.data()).map(|(a, b)| *a * *b).sum::<T>() + bias.item();
    Ok(sigmoid(logit))
}

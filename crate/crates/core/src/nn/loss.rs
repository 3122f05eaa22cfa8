use ndarray::Array2;

use crate::{Error, Result, Scalar};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before `ln`.
pub const PROB_CLAMP: f64 = 1e-7;

fn clamp_prob<F: Scalar>(p: F) -> F {
    let lo = F::lit(PROB_CLAMP);
    let hi = F::one() - lo;
    p.max(lo).min(hi)
}

/// Binary cross-entropy `-(t ln p + (1 - t) ln(1 - p))` with soft target
/// `t`, and its derivative w.r.t. `p` (evaluated at the clamped `p`).
pub fn bce_loss<F: Scalar>(predicted: F, target: F) -> (F, F) {
    let p = clamp_prob(predicted);
    let one = F::one();
    let loss = -(target * p.ln() + (one - target) * (one - p).ln());
    let grad = -(target / p) + (one - target) / (one - p);
    (loss, grad)
}

/// Categorical cross-entropy `-ln p[target]` and its gradient w.r.t. the
/// softmax logits, `p - onehot(target)`.
pub fn cce_loss<F: Scalar>(predicted: &[F], target: usize) -> Result<(F, Vec<F>)> {
    if target >= predicted.len() {
        return Err(Error::InvalidInput(format!(
            "target class {target} out of range for {} outputs",
            predicted.len()
        )));
    }
    let loss = -clamp_prob(predicted[target]).ln();
    let mut grad = predicted.to_vec();
    grad[target] -= F::one();
    Ok((loss, grad))
}

/// Mean BCE over a batch of single-output predictions; returns the
/// gradient w.r.t. the outputs, already divided by the batch size.
pub fn bce_batch<F: Scalar>(predicted: &Array2<F>, targets: &[F]) -> Result<(F, Array2<F>)> {
    if predicted.ncols() != 1 || predicted.nrows() != targets.len() {
        return Err(Error::dim("BCE batch", targets.len(), predicted.nrows()));
    }
    let n = F::from_usize(targets.len()).expect("batch size");
    let mut total = F::zero();
    let mut grad = Array2::zeros(predicted.raw_dim());
    for (i, &t) in targets.iter().enumerate() {
        let (l, g) = bce_loss(predicted[[i, 0]], t);
        total += l;
        grad[[i, 0]] = g / n;
    }
    Ok((total / n, grad))
}

/// Mean CCE over a batch of probability rows; returns the gradient w.r.t.
/// the logits, already divided by the batch size.
pub fn cce_batch<F: Scalar>(predicted: &Array2<F>, targets: &[usize]) -> Result<(F, Array2<F>)> {
    if predicted.nrows() != targets.len() {
        return Err(Error::dim("CCE batch", targets.len(), predicted.nrows()));
    }
    let n = F::from_usize(targets.len()).expect("batch size");
    let mut total = F::zero();
    let mut grad = predicted.mapv(|p| p / n);
    for (i, &t) in targets.iter().enumerate() {
        if t >= predicted.ncols() {
            return Err(Error::InvalidInput(format!(
                "target class {t} out of range for {} outputs",
                predicted.ncols()
            )));
        }
        total += -clamp_prob(predicted[[i, t]]).ln();
        grad[[i, t]] -= F::one() / n;
    }
    Ok((total / n, grad))
}

//! Central finite-difference gradients for verifying backpropagation.

use ndarray::{Array2, ArrayView2};

use super::Network;
use crate::Result;

/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Smallest denominator used by [`relative_error`]; components where both
/// gradients are below this magnitude are compared on an absolute scale.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)` for each coordinate `i`.
pub fn central_differences(
    x: &[f64],
    coords: &[usize],
    eps: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Vec<f64> {
    let mut probe = x.to_vec();
    coords
        .iter()
        .map(|&i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let plus = f(&probe);
            probe[i] = orig - eps;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, RELATIVE_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| relative_error(x, y))
        .fold(0.0, f64::max)
}

/// Outcome of comparing analytic and numerical gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub checked: usize,
    pub max_param_error: f64,
    pub max_input_error: f64,
}

impl GradCheck {
    pub fn max_error(&self) -> f64 {
        self.max_param_error.max(self.max_input_error)
    }
}

/// Checks `net.backward` against central differences of a scalar loss of
/// the network output. `loss` returns the loss value and its gradient
/// w.r.t. the output. `param_coords` and `input_coords` select which flat
/// parameters and row-major input entries to probe (all when `None`).
pub fn check_network<L>(
    net: &Network<f64>,
    input: ArrayView2<'_, f64>,
    loss: L,
    param_coords: Option<&[usize]>,
    input_coords: Option<&[usize]>,
    eps: f64,
) -> Result<GradCheck>
where
    L: Fn(&Array2<f64>) -> (f64, Array2<f64>),
{
    let cache = net.forward_batch(input)?;
    let (_, d_out) = loss(cache.output());
    let grads = net.backward(&cache, &d_out)?;
    let analytic = grads.flatten();

    let all: Vec<usize>;
    let coords = match param_coords {
        Some(c) => c,
        None => {
            all = (0..analytic.len()).collect();
            &all
        }
    };
    let params = net.flat_params();
    let mut probe = net.clone();
    let numeric = central_differences(&params, coords, eps, |p| {
        probe.set_flat_params(p).expect("same shape");
        loss(&probe.predict(input).expect("valid input")).0
    });
    let picked: Vec<f64> = coords.iter().map(|&i| analytic[i]).collect();
    let max_param_error = max_relative_error(&picked, &numeric);

    let x: Vec<f64> = input.iter().copied().collect();
    let all_inputs: Vec<usize>;
    let input_coords = match input_coords {
        Some(c) => c,
        None => {
            all_inputs = (0..x.len()).collect();
            &all_inputs
        }
    };
    let shape = input.raw_dim();
    let numeric_input = central_differences(&x, input_coords, eps, |v| {
        let rows = ArrayView2::from_shape(shape, v).expect("same shape");
        loss(&net.predict(rows).expect("valid input")).0
    });
    let flat_input: Vec<f64> = grads.input.iter().copied().collect();
    let analytic_input: Vec<f64> = input_coords.iter().map(|&i| flat_input[i]).collect();
    let max_input_error = max_relative_error(&analytic_input, &numeric_input);

    Ok(GradCheck {
        checked: coords.len() + input_coords.len(),
        max_param_error,
        max_input_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differences_of_a_quadratic() {
        let g = central_differences(&[1.0, -2.0], &[0, 1], 1e-5, |x| x[0] * x[0] + 3.0 * x[1]);
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
        assert!(relative_error(1e-12, 2e-12) < 1e-5);
    }
}

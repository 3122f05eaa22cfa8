use super::{Gradients, Network};
use crate::{Error, Result, Scalar};

/// Adam moment estimates and hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F> {
    pub learning_rate: F,
    pub beta1: F,
    pub beta2: F,
    pub epsilon: F,
    step: i32,
    first_moment: Vec<Vec<F>>,
    second_moment: Vec<Vec<F>>,
}

impl<F: Scalar> AdamState<F> {
    pub fn step_count(&self) -> i32 {
        self.step
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Optimizer<F> {
    /// Plain gradient descent, no momentum.
    Sgd { learning_rate: F },
    Adam(AdamState<F>),
}

impl<F: Scalar> Optimizer<F> {
    pub fn sgd(learning_rate: f64) -> Self {
        Optimizer::Sgd {
            learning_rate: F::lit(learning_rate),
        }
    }

    /// Adam with `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-8`.
    pub fn adam(learning_rate: f64) -> Self {
        Optimizer::Adam(AdamState {
            learning_rate: F::lit(learning_rate),
            beta1: F::lit(0.9),
            beta2: F::lit(0.999),
            epsilon: F::lit(1e-8),
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        })
    }

    /// Applies one update. Non-finite gradients are rejected before any
    /// parameter is touched.
    pub fn step(&mut self, net: &mut Network<F>, grads: &Gradients<F>) -> Result<()> {
        let shapes: Vec<usize> = grads.tensors().map(<[F]>::len).collect();
        let params = net.params_mut();
        if params.len() != shapes.len() || params.iter().zip(&shapes).any(|(p, &n)| p.len() != n) {
            return Err(Error::dim(
                "gradient tensors",
                params.iter().map(|p| p.len()).sum(),
                shapes.iter().sum(),
            ));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradients".into()));
        }

        match self {
            Optimizer::Sgd { learning_rate } => {
                let lr = *learning_rate;
                for (p, g) in params.into_iter().zip(grads.tensors()) {
                    p.iter_mut().zip(g).for_each(|(p, &g)| *p -= lr * g);
                }
            }
            Optimizer::Adam(state) => {
                if state.first_moment.is_empty() {
                    state.first_moment = shapes.iter().map(|&n| vec![F::zero(); n]).collect();
                    state.second_moment = state.first_moment.clone();
                } else if state.first_moment.iter().map(Vec::len).ne(shapes.iter().copied()) {
                    return Err(Error::Config("Adam moments do not match network shape".into()));
                }
                state.step += 1;
                let one = F::one();
                let (b1, b2) = (state.beta1, state.beta2);
                let correction1 = one - b1.powi(state.step);
                let correction2 = one - b2.powi(state.step);
                for (((p, g), m), v) in params
                    .into_iter()
                    .zip(grads.tensors())
                    .zip(&mut state.first_moment)
                    .zip(&mut state.second_moment)
                {
                    for i in 0..p.len() {
                        m[i] = b1 * m[i] + (one - b1) * g[i];
                        v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                        let m_hat = m[i] / correction1;
                        let v_hat = v[i] / correction2;
                        p[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use crate::controller::ParamSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_DECAY: f64 = 0.95;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Limits every component to `[-threshold, threshold]`.
pub fn clip_gradients<T: Scalar>(grads: &mut ParamSet<T>, threshold: T) {
    let lo = -threshold;
    for g in grads.iter_mut() {
        if *g > threshold {
            *g = threshold;
        } else if *g < lo {
            *g = lo;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            decay: DEFAULT_DECAY,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Running mean of squared gradients, one entry per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub mean_square: ParamSet<T>,
    pub steps: u64,
    pub config: RmsPropConfig,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &ParamSet<T>, config: RmsPropConfig) -> Self {
        Self {
            mean_square: ParamSet::zeros_like(params),
            steps: 0,
            config,
        }
    }
}

/// `a <- decay a + (1 - decay) g^2`, `p <- p - lr g / sqrt(a + eps)`.
pub fn rmsprop_update<T: Scalar>(
    params: &mut ParamSet<T>,
    grads: &ParamSet<T>,
    state: &mut OptimizerState<T>,
    lr: T,
) -> Result<()> {
    if !params.same_layout(grads) || !params.same_layout(&state.mean_square) {
        return Err(Error::Config("optimizer shapes do not match the parameters".into()));
    }
    let decay = T::lit(state.config.decay);
    let keep = T::one() - decay;
    let eps = T::lit(state.config.epsilon);
    for ((p, g), a) in params
        .groups
        .iter_mut()
        .zip(&grads.groups)
        .zip(&mut state.mean_square.groups)
    {
        for ((p, &g), a) in p.data.iter_mut().zip(&g.data).zip(a.data.iter_mut()) {
            *a = decay * *a + keep * g * g;
            *p -= lr * g / (*a + eps).sqrt();
        }
    }
    state.steps += 1;
    Ok(())
}

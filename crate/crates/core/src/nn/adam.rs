use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment accumulators for one parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[Tensor]) -> Self {
        let zeros = |p: &Tensor| Tensor::zeros(p.shape());
        Self {
            config,
            step: 0,
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
        }
    }
}

/// One bias-corrected Adam update.
///
/// Every gradient is checked before any parameter moves, so a rejected step
/// leaves both `params` and `state` untouched.
pub fn adam_step(
    params: &mut [Tensor],
    grads: &[Tensor],
    names: &[String],
    state: &mut AdamState,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(
            "adam_step",
            &[params.len(), state.m.len()],
            &[grads.len()],
        ));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || state.m[i].len() != p.len() {
            return Err(Error::shape("adam_step", p.shape(), g.shape()));
        }
        if !g.is_finite() {
            let name = names.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
            return Err(Error::NonFiniteGradient(name));
        }
    }

    state.step += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    let t = state.step as f64;
    let c1 = 1.0 - beta1.powf(t);
    let c2 = 1.0 - beta2.powf(t);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for (((p, &g), m), v) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> Vec<Tensor> {
        vec![Tensor::scalar(v)]
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = one(0.5);
        let mut st = AdamState::new(AdamConfig::default(), &p);
        adam_step(&mut p, &one(1.0), &["w".into()], &mut st).unwrap();
        let delta = p[0].data()[0] - 0.5;
        assert!((delta + 1e-4).abs() < 1e-11, "delta = {delta}");
        assert_eq!(st.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![Tensor::new(vec![3], vec![1.0, -2.0, 3.0]).unwrap()];
        let before = p.clone();
        let mut st = AdamState::new(AdamConfig::default(), &p);
        for _ in 0..5 {
            adam_step(&mut p, &[Tensor::zeros(&[3])], &["w".into()], &mut st).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn minimizes_shifted_quadratic() {
        // scalar recurrence on (x - 3)^2
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut p = one(0.0);
        let mut st = AdamState::new(cfg, &p);
        for _ in 0..100 {
            let x = p[0].data()[0];
            adam_step(&mut p, &one(2.0 * (x - 3.0)), &["x".into()], &mut st).unwrap();
        }
        assert!((p[0].data()[0] - 3.0).abs() < 0.5);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut p = one(1.0);
        let mut st = AdamState::new(AdamConfig::default(), &p);
        let err = adam_step(&mut p, &one(f64::NAN), &["dec.0.weight".into()], &mut st).unwrap_err();
        assert!(err.to_string().contains("dec.0.weight"));
        assert_eq!(st.step, 0);
        assert_eq!(p[0].data()[0], 1.0);
    }
}

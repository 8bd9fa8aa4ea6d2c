use super::{Params, Tensor};
use crate::error::{Error, Result};

/// Adam with bias correction and decoupled weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(params: &Params, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            step: 0,
            m: params.tensors().iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect(),
            v: params.tensors().iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect(),
        }
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Self {
        self.weight_decay = weight_decay;
        self
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update. `grads` is aligned with `params`; a non-finite
    /// gradient aborts the step before anything is modified.
    pub fn step(&mut self, params: &mut Params, grads: &[Tensor]) -> Result<()> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(Error::shape(
                "adam",
                format!("{} grads for {} params", grads.len(), params.len()),
            ));
        }
        for (i, (g, p)) in grads.iter().zip(params.tensors()).enumerate() {
            if g.shape() != p.shape() {
                return Err(Error::shape(
                    "adam",
                    format!("grad {i} has shape {:?}, param {:?}", g.shape(), p.shape()),
                ));
            }
            if !g.is_finite() {
                return Err(Error::Diverged(format!("non-finite gradient for parameter {i}")));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .tensors_mut()
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (((pv, gv), mv), vv) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= self.lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * *pv);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(value: f64) -> Params {
        let mut p = Params::new();
        p.add("w", Tensor::scalar(value));
        p
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = single(0.7);
        let mut adam = Adam::new(&p, 1e-3);
        adam.step(&mut p, &[Tensor::scalar(0.0)]).unwrap();
        assert_eq!(p.tensors()[0].item(), 0.7);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = 1, v_hat = 1 after bias correction, so the step is lr / (1 + eps)
        let mut p = single(0.0);
        let mut adam = Adam::new(&p, 1e-3);
        adam.step(&mut p, &[Tensor::scalar(1.0)]).unwrap();
        let want = -1e-3 / (1.0 + 1e-8);
        assert!((p.tensors()[0].item() - want).abs() < 1e-15);
    }

    #[test]
    fn identical_params_get_identical_updates() {
        let mut p = Params::new();
        p.add("a", Tensor::scalar(0.3));
        p.add("b", Tensor::scalar(0.3));
        let mut adam = Adam::new(&p, 1e-2);
        for _ in 0..5 {
            adam.step(&mut p, &[Tensor::scalar(0.4), Tensor::scalar(0.4)]).unwrap();
        }
        assert_eq!(p.tensors()[0], p.tensors()[1]);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = single(1.0);
        let mut adam = Adam::new(&p, 1e-3);
        let err = adam.step(&mut p, &[Tensor::scalar(f64::NAN)]).unwrap_err();
        assert!(matches!(err, Error::Diverged(_)));
        assert_eq!(p.tensors()[0].item(), 1.0);
        assert_eq!(adam.steps_taken(), 0);
    }
}

use super::{Dense, Gradient, NeuralSdf};
use crate::error::{Error, Result};

/// AdamW hyper-parameters. Weight decay is decoupled from the gradient:
/// `theta <- theta - lr * (weight_decay * theta + m_hat / (sqrt(v_hat) + eps))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            weight_decay: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates, shaped like the field's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub hyper: AdamW,
    first: Vec<Dense>,
    second: Vec<Dense>,
    step: u64,
}

impl OptimizerState {
    pub fn new(field: &NeuralSdf, hyper: AdamW) -> Self {
        let zeros: Vec<Dense> = field.layers().iter().map(Dense::zeros_like).collect();
        Self {
            hyper,
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update in place.
    pub fn step(&mut self, field: &mut NeuralSdf, grad: &Gradient) -> Result<()> {
        let layers = field.layers_mut();
        if layers.len() != grad.layers.len()
            || layers
                .iter()
                .zip(&grad.layers)
                .any(|(p, g)| p.weight.dim() != g.weight.dim() || p.bias.len() != g.bias.len())
        {
            return Err(Error::ShapeMismatch("gradient does not match field layers".into()));
        }
        self.step += 1;
        let AdamW {
            lr,
            weight_decay,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in layers
            .iter_mut()
            .zip(&grad.layers)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for (((theta, &g), m), v) in p
                .values_mut()
                .zip(g.values())
                .zip(m.values_mut())
                .zip(v.values_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *theta -= lr * (weight_decay * *theta + m_hat / (v_hat.sqrt() + eps));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Activation, Architecture};
    use ndarray::{arr1, arr2};

    fn scalar_field(theta: f64) -> NeuralSdf {
        // a single 1x3 head over the raw coordinates; only the bias is used
        NeuralSdf::from_layers(
            0,
            Activation::Tanh,
            vec![Dense {
                weight: arr2(&[[0.0, 0.0, 0.0]]),
                bias: arr1(&[theta]),
            }],
        )
        .unwrap()
    }

    fn bias_gradient(field: &NeuralSdf, g: f64) -> Gradient {
        let mut grad = Gradient {
            layers: field.layers().iter().map(Dense::zeros_like).collect(),
        };
        grad.layers[0].bias[0] = g;
        grad
    }

    #[test]
    fn zero_gradient_without_decay_is_noop() {
        let mut f = NeuralSdf::new(&Architecture::default(), 1);
        let before = f.clone();
        let hyper = AdamW {
            weight_decay: 0.0,
            ..AdamW::default()
        };
        let mut st = OptimizerState::new(&f, hyper);
        let zero = Gradient {
            layers: f.layers().iter().map(Dense::zeros_like).collect(),
        };
        for _ in 0..3 {
            st.step(&mut f, &zero).unwrap();
        }
        assert_eq!(f, before);
        assert_eq!(st.step_count(), 3);
    }

    #[test]
    fn decay_shrinks_parameters() {
        let mut f = scalar_field(2.0);
        let hyper = AdamW {
            lr: 0.01,
            weight_decay: 0.1,
            ..AdamW::default()
        };
        let mut st = OptimizerState::new(&f, hyper);
        let mut last: f64 = 2.0;
        for _ in 0..10 {
            let g = bias_gradient(&f, 0.0);
            st.step(&mut f, &g).unwrap();
            let now = f.param(3);
            assert!(now.abs() < last.abs());
            last = now;
        }
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        // loss (theta - 3)^2, gradient 2 (theta - 3)
        let mut f = scalar_field(0.0);
        let hyper = AdamW {
            lr: 0.1,
            weight_decay: 0.0,
            ..AdamW::default()
        };
        let mut st = OptimizerState::new(&f, hyper);
        for _ in 0..500 {
            let theta = f.param(3);
            let g = bias_gradient(&f, 2.0 * (theta - 3.0));
            st.step(&mut f, &g).unwrap();
        }
        assert!((f.param(3) - 3.0).abs() < 1e-3, "theta = {}", f.param(3));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut f = scalar_field(0.0);
        let other = NeuralSdf::new(&Architecture::default(), 0);
        let mut st = OptimizerState::new(&f, AdamW::default());
        let g = Gradient {
            layers: other.layers().iter().map(Dense::zeros_like).collect(),
        };
        assert!(st.step(&mut f, &g).is_err());
        assert_eq!(st.step_count(), 0);
    }
}

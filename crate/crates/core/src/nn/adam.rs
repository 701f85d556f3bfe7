use ndarray::Zip;

use super::{Dense, Gradients, Mlp, NnError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 3e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam with moment buffers shaped like the network.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Dense>,
    v: Vec<Dense>,
}

impl Adam {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        let zeros = || net.layers().iter().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect();
        Self { config, step: 0, m: zeros(), v: zeros() }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Apply one descent step along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<(), NnError> {
        net.check_grads(grads)?;
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, g), m), v) in net.layers_mut().iter_mut().zip(&grads.layers).zip(&mut self.m).zip(&mut self.v) {
            Zip::from(&mut layer.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        Ok(())
    }
}

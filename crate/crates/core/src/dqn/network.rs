//! Fully connected ReLU network with a linear head, trained by Adam.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Parameters of all layers in one flat vector: for each layer, the
/// row-major weight matrix (outputs × inputs) followed by the biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl Mlp {
    /// He-uniform weights, zero biases.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&n| n > 0));
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let bound = (6.0 / w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Mlp {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn outputs(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.sizes.windows(2).map(move |w| {
            let at = offset;
            offset += w[1] * w[0] + w[1];
            (at, w[0], w[1])
        })
    }

    /// Activations of every layer, input first; hidden layers after ReLU.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        debug_assert_eq!(x.len(), self.inputs());
        let last = self.sizes.len() - 2;
        let mut acts = vec![x.to_vec()];
        for (l, (at, n_in, n_out)) in self.layers().enumerate() {
            let input = &acts[l];
            let w = &self.params[at..at + n_in * n_out];
            let b = &self.params[at + n_in * n_out..at + n_in * n_out + n_out];
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let z = b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if l < last {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.trace(x).pop().unwrap()
    }

    /// Mean squared TD error over `(state, action, target)` triples, and its
    /// gradient with respect to the flat parameters.
    pub fn loss_and_grad(&self, batch: &[(&[f64], usize, f64)]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let n = batch.len() as f64;
        let layers: Vec<_> = self.layers().collect();
        for &(x, a, y) in batch {
            let acts = self.trace(x);
            let q = acts.last().unwrap()[a];
            loss += (y - q).powi(2) / n;
            let mut delta = vec![0.0; self.outputs()];
            delta[a] = 2.0 * (q - y) / n;
            for (l, &(at, n_in, n_out)) in layers.iter().enumerate().rev() {
                let input = &acts[l];
                for o in 0..n_out {
                    if delta[o] == 0.0 {
                        continue;
                    }
                    let row = at + o * n_in;
                    for (g, xi) in grad[row..row + n_in].iter_mut().zip(input) {
                        *g += delta[o] * xi;
                    }
                    grad[at + n_in * n_out + o] += delta[o];
                }
                if l == 0 {
                    break;
                }
                let w = &self.params[at..at + n_in * n_out];
                delta = (0..n_in)
                    .map(|i| {
                        if input[i] <= 0.0 {
                            return 0.0;
                        }
                        (0..n_out).map(|o| delta[o] * w[o * n_in + i]).sum()
                    })
                    .collect();
            }
        }
        (loss, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powf(self.t as f64);
        let c2 = 1.0 - self.beta2.powf(self.t as f64);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

/// The online Q-network together with its optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub mlp: Mlp,
    pub adam: Adam,
}

impl QNetwork {
    pub fn new(sizes: &[usize], lr: f64, rng: &mut impl Rng) -> Self {
        let mlp = Mlp::new(sizes, rng);
        let adam = Adam::new(mlp.params.len(), lr);
        QNetwork { mlp, adam }
    }

    pub fn q_values(&self, s: &[f64]) -> Vec<f64> {
        self.mlp.forward(s)
    }

    /// One Adam update on the squared TD error; returns the loss before the update.
    pub fn train_step(&mut self, batch: &[(&[f64], usize, f64)]) -> Result<f64> {
        let (loss, grad) = self.mlp.loss_and_grad(batch);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training(format!(
                "nonfinite loss {loss} at optimizer step {}",
                self.adam.t
            )));
        }
        self.adam.update(&mut self.mlp.params, &grad);
        if self.mlp.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Training(format!("nonfinite parameters after step {}", self.adam.t)));
        }
        Ok(loss)
    }
}

/// Largest relative error between backprop and central differences.
pub fn gradient_check(net: &Mlp, batch: &[(&[f64], usize, f64)], h: f64) -> f64 {
    let (_, grad) = net.loss_and_grad(batch);
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in 0..net.params.len() {
        let p = net.params[i];
        probe.params[i] = p + h;
        let up = probe.loss_and_grad(batch).0;
        probe.params[i] = p - h;
        let down = probe.loss_and_grad(batch).0;
        probe.params[i] = p;
        let numeric = (up - down) / (2.0 * h);
        let scale = grad[i].abs().max(numeric.abs()).max(1e-7);
        worst = worst.max((grad[i] - numeric).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[32, 64, 64, 62], &mut rng);
        assert_eq!(net.params.len(), 32 * 64 + 64 + 64 * 64 + 64 + 64 * 62 + 62);
        assert_eq!(net.forward(&[0.1; 32]).len(), 62);
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let net = Mlp::new(&[4, 6, 5, 3], &mut rng);
            let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let batch: Vec<(&[f64], usize, f64)> = xs
                .iter()
                .map(|x| (x.as_slice(), rng.random_range(0..3), rng.random_range(-2.0..2.0)))
                .collect();
            assert!(gradient_check(&net, &batch, 1e-6) < 1e-4);
        }
    }

    #[test]
    fn exact_targets_give_zero_loss_and_tiny_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut q = QNetwork::new(&[3, 4, 2], 1e-3, &mut rng);
        let x = [0.5, -0.2, 0.9];
        let y = q.q_values(&x)[1];
        let before = q.mlp.params.clone();
        assert_eq!(q.train_step(&[(&x, 1, y)]).unwrap(), 0.0);
        assert_eq!(q.mlp.params, before);
    }

    #[test]
    fn identical_updates_are_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = QNetwork::new(&[3, 4, 2], 1e-3, &mut rng);
        let x = [0.5, -0.2, 0.9];
        let (mut a, mut b) = (q.clone(), q);
        a.train_step(&[(&x, 0, 1.0)]).unwrap();
        b.train_step(&[(&x, 0, 1.0)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nonfinite_target_aborts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut q = QNetwork::new(&[3, 4, 2], 1e-3, &mut rng);
        assert!(matches!(
            q.train_step(&[(&[0.0, 0.0, 0.0], 0, f64::NAN)]),
            Err(Error::Training(_))
        ));
    }
}

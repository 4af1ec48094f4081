//! Two-layer perceptron `d → hidden → T` with ReLU, trained by mini-batch Adam on cross-entropy.

use super::data::{argmax, softmax_in_place, Dataset};
use super::{FitStats, MlpSettings};
use crate::rng::SplitMix64;

#[derive(Debug, Clone)]
pub(crate) struct MlpModel {
    dim: usize,
    hidden: usize,
    n_classes: usize,
    /// Layout: w1 (hidden × dim), b1 (hidden), w2 (n_classes × hidden), b2 (n_classes).
    params: Vec<f64>,
}

struct Offsets {
    b1: usize,
    w2: usize,
    b2: usize,
}

impl MlpModel {
    fn init(dim: usize, hidden: usize, n_classes: usize, rng: &mut SplitMix64) -> Self {
        let offsets_len = hidden * dim + hidden + n_classes * hidden + n_classes;
        let mut params = vec![0.0; offsets_len];
        let std1 = (2.0 / dim as f64).sqrt();
        let std2 = (1.0 / hidden as f64).sqrt();
        for w in &mut params[..hidden * dim] {
            *w = std1 * rng.normal();
        }
        let w2_start = hidden * dim + hidden;
        for w in &mut params[w2_start..w2_start + n_classes * hidden] {
            *w = std2 * rng.normal();
        }
        MlpModel {
            dim,
            hidden,
            n_classes,
            params,
        }
    }

    fn offsets(&self) -> Offsets {
        let b1 = self.hidden * self.dim;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.n_classes * self.hidden;
        Offsets { b1, w2, b2 }
    }

    fn forward(&self, x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        let o = self.offsets();
        for (h, hv) in hidden.iter_mut().enumerate() {
            let w = &self.params[h * self.dim..(h + 1) * self.dim];
            let pre = self.params[o.b1 + h] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            *hv = pre.max(0.0);
        }
        for (c, ov) in out.iter_mut().enumerate() {
            let w = &self.params[o.w2 + c * self.hidden..o.w2 + (c + 1) * self.hidden];
            *ov = self.params[o.b2 + c] + w.iter().zip(hidden.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut h = vec![0.0; self.hidden];
        let mut z = vec![0.0; self.n_classes];
        self.forward(x, &mut h, &mut z);
        argmax(&z)
    }

    /// Accumulate the summed cross-entropy gradient over `batch` into `grad`; returns summed loss.
    fn accumulate(&self, data: &Dataset, batch: &[usize], grad: &mut [f64]) -> f64 {
        let o = self.offsets();
        let mut h = vec![0.0; self.hidden];
        let mut z = vec![0.0; self.n_classes];
        let mut dh = vec![0.0; self.hidden];
        let mut loss = 0.0;
        for &i in batch {
            let x = data.row(i);
            let y = data.y[i];
            self.forward(x, &mut h, &mut z);
            let correct = z[y];
            loss += softmax_in_place(&mut z) - correct;
            z[y] -= 1.0;
            dh.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..self.n_classes {
                let w2 = o.w2 + c * self.hidden;
                grad[o.b2 + c] += z[c];
                for k in 0..self.hidden {
                    grad[w2 + k] += z[c] * h[k];
                    dh[k] += z[c] * self.params[w2 + k];
                }
            }
            for k in 0..self.hidden {
                if h[k] <= 0.0 {
                    continue;
                }
                grad[o.b1 + k] += dh[k];
                let row = &mut grad[k * self.dim..(k + 1) * self.dim];
                row.iter_mut().zip(x).for_each(|(g, xv)| *g += dh[k] * xv);
            }
        }
        loss
    }

    /// Mean loss and gradient over `batch`, with L2 on the weight matrices.
    fn loss_and_grad(&self, data: &Dataset, batch: &[usize], l2: f64, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = batch.len() as f64;
        let mut loss = self.accumulate(data, batch, grad) / n;
        grad.iter_mut().for_each(|g| *g /= n);
        let o = self.offsets();
        for range in [0..o.b1, o.w2..o.b2] {
            for i in range {
                loss += 0.5 * l2 * self.params[i] * self.params[i];
                grad[i] += l2 * self.params[i];
            }
        }
        loss
    }
}

pub(crate) fn fit(data: &Dataset, settings: &MlpSettings, rng: &mut SplitMix64) -> (MlpModel, FitStats) {
    let mut model = MlpModel::init(data.dim, settings.hidden, data.n_classes, rng);
    let p = model.params.len();
    let mut grad = vec![0.0; p];
    let mut m = vec![0.0; p];
    let mut v = vec![0.0; p];
    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut t = 0i32;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = settings.batch_size.max(1);
    for _ in 0..settings.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(batch) {
            model.loss_and_grad(data, chunk, settings.l2, &mut grad);
            t += 1;
            let lr_t = settings.learning_rate * (1.0 - beta2.powi(t)).sqrt() / (1.0 - beta1.powi(t));
            for i in 0..p {
                m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                model.params[i] -= lr_t * m[i] / (v[i].sqrt() + eps);
            }
        }
    }
    let all: Vec<usize> = (0..data.len()).collect();
    let final_loss = model.loss_and_grad(data, &all, settings.l2, &mut grad);
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    (
        model,
        FitStats {
            final_loss,
            grad_norm,
            iterations: settings.epochs,
            converged: true,
            degenerate: false,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let data = Dataset {
            x: vec![0.3, -1.2, 1.5, 0.4, -0.7, 0.9],
            y: vec![0, 2, 1],
            dim: 2,
            n_classes: 3,
        };
        let mut rng = SplitMix64::new(4);
        let mut model = MlpModel::init(2, 5, 3, &mut rng);
        // keep every hidden unit away from the ReLU kink
        for b in 10..15 {
            model.params[b] = 0.5;
        }
        let batch = [0, 1, 2];
        let p = model.params.len();
        let mut grad = vec![0.0; p];
        model.loss_and_grad(&data, &batch, 0.01, &mut grad);
        let mut scratch = vec![0.0; p];
        let h = 1e-6;
        for i in 0..p {
            let orig = model.params[i];
            model.params[i] = orig + h;
            let up = model.loss_and_grad(&data, &batch, 0.01, &mut scratch);
            model.params[i] = orig - h;
            let down = model.loss_and_grad(&data, &batch, 0.01, &mut scratch);
            model.params[i] = orig;
            assert!(((up - down) / (2.0 * h) - grad[i]).abs() < 1e-6, "param {i}");
        }
    }
}

//! Multinomial logistic regression fitted by L-BFGS with Armijo backtracking.

use super::data::{argmax, softmax_in_place, Dataset};
use super::{FitStats, LinearSettings};

const HISTORY: usize = 10;

#[derive(Debug, Clone)]
pub(crate) struct LinearModel {
    /// `dim × n_classes`, row-major, followed by `n_classes` biases.
    params: Vec<f64>,
    dim: usize,
    n_classes: usize,
}

impl LinearModel {
    pub fn logits(&self, x: &[f64], out: &mut [f64]) {
        let (w, b) = self.params.split_at(self.dim * self.n_classes);
        out.copy_from_slice(b);
        for (j, &xj) in x.iter().enumerate() {
            let wj = &w[j * self.n_classes..(j + 1) * self.n_classes];
            out.iter_mut().zip(wj).for_each(|(o, w)| *o += xj * w);
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut z = vec![0.0; self.n_classes];
        self.logits(x, &mut z);
        argmax(&z)
    }
}

/// Mean cross-entropy plus `l2/2·‖W‖²` (biases unpenalized) and its gradient.
fn loss_and_grad(model: &LinearModel, data: &Dataset, l2: f64, grad: &mut [f64]) -> f64 {
    let k = model.n_classes;
    let d = model.dim;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let n = data.len() as f64;
    let mut loss = 0.0;
    let mut z = vec![0.0; k];
    for i in 0..data.len() {
        let x = data.row(i);
        model.logits(x, &mut z);
        let y = data.y[i];
        let correct = z[y];
        let lse = softmax_in_place(&mut z);
        loss += lse - correct;
        z[y] -= 1.0;
        let (gw, gb) = grad.split_at_mut(d * k);
        for (j, &xj) in x.iter().enumerate() {
            let row = &mut gw[j * k..(j + 1) * k];
            row.iter_mut().zip(&z).for_each(|(g, p)| *g += xj * p);
        }
        gb.iter_mut().zip(&z).for_each(|(g, p)| *g += p);
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    let w = &model.params[..d * k];
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    grad[..d * k].iter_mut().zip(w).for_each(|(g, v)| *g += l2 * v);
    loss
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn fit(data: &Dataset, settings: &LinearSettings) -> (LinearModel, FitStats) {
    let k = data.n_classes;
    let d = data.dim;
    let mut model = LinearModel {
        params: vec![0.0; d * k + k],
        dim: d,
        n_classes: k,
    };
    let p = model.params.len();
    let mut grad = vec![0.0; p];
    let mut loss = loss_and_grad(&model, data, settings.l2, &mut grad);
    let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(HISTORY);
    let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(HISTORY);
    let mut iterations = 0;
    let mut new_grad = vec![0.0; p];

    while iterations < settings.max_iterations && norm(&grad) > settings.tolerance {
        iterations += 1;
        let mut dir = two_loop(&grad, &s_hist, &y_hist);
        let mut slope = dot(&dir, &grad);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }
        let mut step = if s_hist.is_empty() {
            (1.0 / norm(&grad)).min(1.0)
        } else {
            1.0
        };
        let start = model.params.clone();
        let mut accepted = false;
        for _ in 0..50 {
            model
                .params
                .iter_mut()
                .zip(&start)
                .zip(&dir)
                .for_each(|((m, s), d)| *m = s + step * d);
            let trial = loss_and_grad(&model, data, settings.l2, &mut new_grad);
            if trial <= loss + 1e-4 * step * slope {
                loss = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            model.params = start;
            break;
        }
        let s: Vec<f64> = model.params.iter().zip(&start).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            if s_hist.len() == HISTORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        std::mem::swap(&mut grad, &mut new_grad);
    }

    let grad_norm = norm(&grad);
    (
        model,
        FitStats {
            final_loss: loss,
            grad_norm,
            iterations,
            converged: grad_norm <= settings.tolerance,
            degenerate: false,
        },
    )
}

fn two_loop(grad: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let m = s_hist.len();
    let mut alpha = vec![0.0; m];
    for i in (0..m).rev() {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        alpha[i] = rho * dot(&s_hist[i], &q);
        q.iter_mut().zip(&y_hist[i]).for_each(|(qv, yv)| *qv -= alpha[i] * yv);
    }
    if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for i in 0..m {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        let beta = rho * dot(&y_hist[i], &q);
        q.iter_mut().zip(&s_hist[i]).for_each(|(qv, sv)| *qv += (alpha[i] - beta) * sv);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

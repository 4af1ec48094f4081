//! Rank-2 angular probe: a learned map `W: R^d → R²`, classified by cosine similarity
//! of the normalized projection to `m` anchors at angles `2πk/m`.

use serde::{Deserialize, Serialize};

use super::data::{argmax, softmax_in_place, Dataset};
use super::{CircularSettings, FitStats};
use crate::rng::SplitMix64;

/// Projections with norm below this are flagged as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-8;

/// A trained circular probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularProbe {
    /// `d × 2`, row-major: column 0 maps to the x-coordinate, column 1 to y.
    pub projection: Vec<f64>,
    pub dim: usize,
    /// Anchor angles `θ_k = 2πk/m`.
    pub anchors: Vec<f64>,
    pub temperature: f64,
}

impl CircularProbe {
    pub fn project(&self, x: &[f64]) -> [f64; 2] {
        let mut u = [0.0; 2];
        for (j, &xj) in x.iter().enumerate() {
            u[0] += self.projection[2 * j] * xj;
            u[1] += self.projection[2 * j + 1] * xj;
        }
        u
    }

    /// Unit-circle coordinates of the projection, `None` when degenerate.
    pub fn normalized(&self, x: &[f64]) -> Option<[f64; 2]> {
        let u = self.project(x);
        let r = u[0].hypot(u[1]);
        (r >= DEGENERATE_NORM).then(|| [u[0] / r, u[1] / r])
    }

    fn logits(&self, x: &[f64], out: &mut [f64]) -> Option<[f64; 2]> {
        match self.normalized(x) {
            Some(h) => {
                for (o, &theta) in out.iter_mut().zip(&self.anchors) {
                    *o = (h[0] * theta.cos() + h[1] * theta.sin()) / self.temperature;
                }
                Some(h)
            }
            None => {
                out.iter_mut().for_each(|o| *o = 0.0);
                None
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut z = vec![0.0; self.anchors.len()];
        self.logits(x, &mut z);
        argmax(&z)
    }
}

fn loss_and_grad(probe: &CircularProbe, data: &Dataset, grad: &mut [f64]) -> (f64, bool) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let m = probe.anchors.len();
    let mut z = vec![0.0; m];
    let mut loss = 0.0;
    let mut degenerate = false;
    let n = data.len() as f64;
    for i in 0..data.len() {
        let x = data.row(i);
        let y = data.y[i];
        let Some(h) = probe.logits(x, &mut z) else {
            degenerate = true;
            loss += (m as f64).ln();
            continue;
        };
        let correct = z[y];
        loss += softmax_in_place(&mut z) - correct;
        z[y] -= 1.0;
        // dL/dĥ = Σ_k (p_k − y_k) a_k / τ, then project out the radial part and divide by ‖u‖.
        let mut g = [0.0; 2];
        for (k, &theta) in probe.anchors.iter().enumerate() {
            g[0] += z[k] * theta.cos();
            g[1] += z[k] * theta.sin();
        }
        g[0] /= probe.temperature;
        g[1] /= probe.temperature;
        let u = probe.project(x);
        let r = u[0].hypot(u[1]);
        let radial = g[0] * h[0] + g[1] * h[1];
        let du = [(g[0] - radial * h[0]) / r, (g[1] - radial * h[1]) / r];
        for (j, &xj) in x.iter().enumerate() {
            grad[2 * j] += du[0] * xj / n;
            grad[2 * j + 1] += du[1] * xj / n;
        }
    }
    (loss / n, degenerate)
}

fn train(mut probe: CircularProbe, data: &Dataset, settings: &CircularSettings) -> (CircularProbe, FitStats) {
    let mut grad = vec![0.0; probe.projection.len()];
    let mut degenerate = false;
    for _ in 0..settings.epochs {
        let (_, deg) = loss_and_grad(&probe, data, &mut grad);
        degenerate |= deg;
        probe
            .projection
            .iter_mut()
            .zip(&grad)
            .for_each(|(w, g)| *w -= settings.learning_rate * g);
    }
    let (loss, deg) = loss_and_grad(&probe, data, &mut grad);
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    (
        probe,
        FitStats {
            final_loss: loss,
            grad_norm,
            iterations: settings.epochs,
            converged: true,
            degenerate: degenerate || deg,
        },
    )
}

/// Train from a Gaussian initialization with variance `1/d` and from its mirror image
/// (second output row negated), keeping whichever ends with the lower training loss.
/// Gradient descent cannot move a projection between orientations without passing
/// through a rank-deficient map, so both are tried.
pub(crate) fn fit(
    data: &Dataset,
    n_anchors: usize,
    settings: &CircularSettings,
    rng: &mut SplitMix64,
) -> (CircularProbe, FitStats) {
    let d = data.dim;
    let std = (1.0 / d as f64).sqrt();
    let init: Vec<f64> = (0..2 * d).map(|_| std * rng.normal()).collect();
    let anchors: Vec<f64> = (0..n_anchors)
        .map(|k| std::f64::consts::TAU * k as f64 / n_anchors as f64)
        .collect();
    let mirrored: Vec<f64> = init
        .iter()
        .enumerate()
        .map(|(i, &w)| if i % 2 == 1 { -w } else { w })
        .collect();
    let make = |projection: Vec<f64>| CircularProbe {
        projection,
        dim: d,
        anchors: anchors.clone(),
        temperature: settings.temperature,
    };
    let a = train(make(init), data, settings);
    let b = train(make(mirrored), data, settings);
    if b.1.final_loss < a.1.final_loss {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let data = Dataset {
            x: vec![0.3, -1.2, 0.5, 1.5, 0.4, -0.1, -0.7, 0.9, 0.8],
            y: vec![0, 2, 1],
            dim: 3,
            n_classes: 3,
        };
        let mut probe = CircularProbe {
            projection: vec![0.4, -0.3, 0.2, 0.9, -0.5, 0.1],
            dim: 3,
            anchors: (0..3).map(|k| std::f64::consts::TAU * k as f64 / 3.0).collect(),
            temperature: 0.1,
        };
        let mut grad = vec![0.0; 6];
        loss_and_grad(&probe, &data, &mut grad);
        let mut scratch = vec![0.0; 6];
        let h = 1e-7;
        for i in 0..6 {
            let orig = probe.projection[i];
            probe.projection[i] = orig + h;
            let up = loss_and_grad(&probe, &data, &mut scratch).0;
            probe.projection[i] = orig - h;
            let down = loss_and_grad(&probe, &data, &mut scratch).0;
            probe.projection[i] = orig;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-5 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn identity_projection_classifies_clock() {
        let probe = CircularProbe {
            projection: vec![1.0, 0.0, 0.0, 1.0],
            dim: 2,
            anchors: (0..10).map(|k| std::f64::consts::TAU * k as f64 / 10.0).collect(),
            temperature: 0.1,
        };
        for n in 0..50 {
            let a = std::f64::consts::TAU * n as f64 / 10.0;
            assert_eq!(probe.predict(&[a.cos(), a.sin()]), n % 10);
        }
        assert!(probe.normalized(&[0.0, 0.0]).is_none());
    }
}

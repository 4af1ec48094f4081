//! Residue-class scatter matrices, the Fourier trace identities they satisfy, and the
//! Fisher discriminant with its spectral sandwich bounds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::embedding_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::linalg::{max_generalized_eigenvalue, sym_eigenvalues, symmetrize};
use crate::spectral::{self, Spectrum};

/// `S_W` is treated as invertible when it factors and `λ_min > INVERTIBLE_RTOL · λ_max`
/// (inside [`scatter`], `λ_max` is floored at the total variance so rounding noise in an
/// otherwise zero `S_W` does not count as invertible).
pub const INVERTIBLE_RTOL: f64 = 1e-12;
/// Regularization added to a singular `S_W`, as a fraction of `Tr(S_W)/d`.
pub const REGULARIZATION_SCALE: f64 = 1e-10;
/// Relative tolerance for the trace identities.
pub const IDENTITY_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueLabeling {
    pub period: usize,
    pub labels: Vec<usize>,
    pub class_sizes: Vec<usize>,
}

impl ResidueLabeling {
    pub fn new(n_tokens: usize, period: usize) -> Result<Self> {
        if period < 2 {
            return Err(Error::InvalidPeriod(period));
        }
        if period > n_tokens {
            return Err(Error::InvalidArgument(format!(
                "period {period} exceeds n_tokens {n_tokens}"
            )));
        }
        let labels: Vec<usize> = (0..n_tokens).map(|n| n % period).collect();
        let mut class_sizes = vec![0; period];
        for &l in &labels {
            class_sizes[l] += 1;
        }
        Ok(ResidueLabeling {
            period,
            labels,
            class_sizes,
        })
    }

    pub fn is_balanced(&self) -> bool {
        self.labels.len().is_multiple_of(self.period)
    }
}

/// Outcome of the two trace identities `N·Tr(S_B) = Φ_T` and `N·Tr(S_W) = Σ_{ν∉H_T} ‖F_ν‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceIdentityCheck {
    pub between_residual: f64,
    pub within_residual: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSummary {
    pub period: usize,
    pub n_tokens: usize,
    pub dim: usize,
    pub balanced: bool,
    /// `T × d`, row-major.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_means: Option<Vec<Vec<f64>>>,
    pub grand_mean: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_between: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_within: Option<Vec<Vec<f64>>>,
    pub trace_between: f64,
    pub trace_within: f64,
    /// `Φ_T` from the spectrum when `T | N`; otherwise `N·Tr(S_B)`.
    pub phi: f64,
    /// Off-harmonic power, only defined when `T | N`.
    pub off_harmonic_power: Option<f64>,
    pub lambda_min_within: f64,
    pub lambda_max_within: f64,
    pub cond_within: f64,
    /// `λ_max(S_W⁻¹ S_B)`, computed on `S_W + εI` when `S_W` is singular.
    pub fisher: f64,
    /// The `ε` that was added to `S_W`; zero when no regularization was needed.
    pub regularization: f64,
    pub bound_low: Option<f64>,
    pub bound_high: Option<f64>,
    /// Skipped (None) when `T ∤ N`.
    pub identity_check: Option<TraceIdentityCheck>,
}

impl ScatterSummary {
    /// Drop the matrices, keeping scalar diagnostics only.
    pub fn elide_matrices(mut self) -> Self {
        self.class_means = None;
        self.s_between = None;
        self.s_within = None;
        self
    }

    pub fn s_between_matrix(&self) -> Option<DMatrix<f64>> {
        self.s_between.as_ref().map(|m| rows_to_matrix(m))
    }

    pub fn s_within_matrix(&self) -> Option<DMatrix<f64>> {
        self.s_within.as_ref().map(|m| rows_to_matrix(m))
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

struct RawScatter {
    labels: ResidueLabeling,
    class_means: DMatrix<f64>,
    grand_mean: Vec<f64>,
    s_between: DMatrix<f64>,
    s_within: DMatrix<f64>,
}

fn raw_scatter(table: &EmbeddingTable, period: usize) -> Result<RawScatter> {
    let n = table.n_tokens();
    let d = table.dim();
    let labels = ResidueLabeling::new(n, period)?;

    let mut class_means = DMatrix::<f64>::zeros(period, d);
    let mut grand_mean = vec![0.0; d];
    for (idx, row) in table.rows().enumerate() {
        let r = labels.labels[idx];
        for (j, &x) in row.iter().enumerate() {
            class_means[(r, j)] += x;
            grand_mean[j] += x;
        }
    }
    for r in 0..period {
        let size = labels.class_sizes[r] as f64;
        for j in 0..d {
            class_means[(r, j)] /= size;
        }
    }
    grand_mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut s_between = DMatrix::<f64>::zeros(d, d);
    let mut diff = vec![0.0; d];
    for r in 0..period {
        for j in 0..d {
            diff[j] = class_means[(r, j)] - grand_mean[j];
        }
        add_outer(&mut s_between, &diff, 1.0 / period as f64);
    }

    let mut s_within = DMatrix::<f64>::zeros(d, d);
    for (idx, row) in table.rows().enumerate() {
        let r = labels.labels[idx];
        for j in 0..d {
            diff[j] = row[j] - class_means[(r, j)];
        }
        add_outer(&mut s_within, &diff, 1.0 / n as f64);
    }

    Ok(RawScatter {
        labels,
        class_means,
        grand_mean,
        s_between,
        s_within,
    })
}

fn add_outer(m: &mut DMatrix<f64>, v: &[f64], weight: f64) {
    let d = v.len();
    for i in 0..d {
        let wi = weight * v[i];
        for j in i..d {
            let x = wi * v[j];
            m[(i, j)] += x;
            if i != j {
                m[(j, i)] += x;
            }
        }
    }
}

/// Compute the full scatter summary for period `T`.
pub fn scatter(table: &EmbeddingTable, period: usize) -> Result<ScatterSummary> {
    let spec = if table.n_tokens().is_multiple_of(period) && period >= 2 {
        Some(spectral::dft(table))
    } else {
        None
    };
    scatter_inner(table, spec.as_ref(), period)
}

/// As [`scatter`], reusing a spectrum already computed for `table`.
pub fn scatter_with_spectrum(
    table: &EmbeddingTable,
    spec: &Spectrum,
    period: usize,
) -> Result<ScatterSummary> {
    if spec.n_tokens() != table.n_tokens() || spec.dim() != table.dim() {
        return Err(Error::InvalidArgument("spectrum does not match table shape".into()));
    }
    scatter_inner(table, Some(spec), period)
}

fn scatter_inner(table: &EmbeddingTable, spec: Option<&Spectrum>, period: usize) -> Result<ScatterSummary> {
    let raw = raw_scatter(table, period)?;
    let n = table.n_tokens();
    let d = table.dim();
    let balanced = raw.labels.is_balanced();
    let trace_between = raw.s_between.trace();
    let trace_within = raw.s_within.trace();

    let (phi, off_harmonic, identity_check) = match (balanced, spec) {
        (true, Some(spec)) => {
            let phi = spectral::harmonic_power(spec, period)?;
            let off = spectral::off_harmonic_power(spec, period)?;
            let between_residual = (n as f64 * trace_between - phi).abs();
            let within_residual = (n as f64 * trace_within - off).abs();
            let holds = between_residual <= IDENTITY_RTOL * phi.max(1.0)
                && within_residual <= IDENTITY_RTOL * off.max(1.0);
            (
                phi,
                Some(off),
                Some(TraceIdentityCheck {
                    between_residual,
                    within_residual,
                    holds,
                }),
            )
        }
        _ => (n as f64 * trace_between, None, None),
    };

    let eig_w = sym_eigenvalues(&raw.s_within);
    let lambda_min = eig_w[0];
    let lambda_max = eig_w[d - 1];
    let cond = if lambda_min > 0.0 {
        lambda_max / lambda_min
    } else {
        f64::INFINITY
    };

    let invertible = is_invertible(&raw.s_within, lambda_min, lambda_max.max(trace_between + trace_within));
    let (fisher, regularization) = if invertible {
        (fisher_score(&raw.s_between, &raw.s_within)?, 0.0)
    } else {
        regularized_fisher(&raw.s_between, &raw.s_within, trace_between, trace_within, d)?
    };

    let (bound_low, bound_high) = if invertible {
        let (lo, hi) = fisher_bounds(phi, &raw.s_within, period, n)?;
        (Some(lo), Some(hi))
    } else {
        (None, None)
    };

    Ok(ScatterSummary {
        period,
        n_tokens: n,
        dim: d,
        balanced,
        class_means: Some(matrix_to_rows(&raw.class_means)),
        grand_mean: raw.grand_mean,
        s_between: Some(matrix_to_rows(&raw.s_between)),
        s_within: Some(matrix_to_rows(&raw.s_within)),
        trace_between,
        trace_within,
        phi,
        off_harmonic_power: off_harmonic,
        lambda_min_within: lambda_min,
        lambda_max_within: lambda_max,
        cond_within: cond,
        fisher,
        regularization,
        bound_low,
        bound_high,
        identity_check,
    })
}

fn is_invertible(s_within: &DMatrix<f64>, lambda_min: f64, scale: f64) -> bool {
    scale > 0.0
        && lambda_min > INVERTIBLE_RTOL * scale
        && symmetrize(s_within).cholesky().is_some()
}

fn regularized_fisher(
    s_between: &DMatrix<f64>,
    s_within: &DMatrix<f64>,
    trace_between: f64,
    trace_within: f64,
    d: usize,
) -> Result<(f64, f64)> {
    let eps = REGULARIZATION_SCALE * trace_within / d as f64;
    if eps <= 0.0 {
        // No within-class variation at all: classes are points.
        let fisher = if trace_between > 0.0 { f64::INFINITY } else { 0.0 };
        return Ok((fisher, 0.0));
    }
    let reg = s_within + DMatrix::<f64>::identity(d, d) * eps;
    Ok((fisher_score(s_between, &reg)?, eps))
}

fn check_psd(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let ev = sym_eigenvalues(m);
    let trace = m.trace();
    let min = ev.first().copied().unwrap_or(0.0);
    if min < -1e-9 * trace.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            trace,
        });
    }
    Ok(ev)
}

/// `max_{v≠0} vᵀS_B v / vᵀS_W v`, by Cholesky whitening of `S_W` and a symmetric eigensolve.
pub fn fisher_score(s_between: &DMatrix<f64>, s_within: &DMatrix<f64>) -> Result<f64> {
    if s_between.shape() != s_within.shape() || !s_between.is_square() {
        return Err(Error::InvalidShape("scatter matrices must be square and equal in size".into()));
    }
    check_psd(s_between)?;
    let ev_w = check_psd(s_within)?;
    let lambda = max_generalized_eigenvalue(s_between, s_within)
        .ok_or_else(|| Error::SingularWithin(ev_w.first().copied().unwrap_or(0.0)))?;
    Ok(lambda.max(0.0))
}

/// Sandwich bounds on the Fisher score from `Φ_T` and the spectrum of `S_W`:
/// `Φ_T/(N(T−1)λ_max(S_W)) ≤ λ_max(S_W⁻¹S_B) ≤ Φ_T/(N λ_min(S_W))`.
pub fn fisher_bounds(phi: f64, s_within: &DMatrix<f64>, period: usize, n_tokens: usize) -> Result<(f64, f64)> {
    if period < 2 {
        return Err(Error::InvalidPeriod(period));
    }
    let ev = sym_eigenvalues(s_within);
    let lambda_min = ev[0];
    let lambda_max = ev[ev.len() - 1];
    if lambda_min <= INVERTIBLE_RTOL * lambda_max.abs() || lambda_min <= 0.0 {
        return Err(Error::SingularWithin(lambda_min));
    }
    let n = n_tokens as f64;
    let low = phi / (n * (period - 1) as f64 * lambda_max);
    let high = phi / (n * lambda_min);
    Ok((low, high))
}

/// Compare the `T`-point DFT of the class means with `√(T/N)·F_{ℓ/T}`.
///
/// Returns the largest componentwise deviation divided by `max(1, ‖M‖_F)`,
/// where `M` is the matrix of class means.
pub fn class_mean_dft_check(table: &EmbeddingTable, period: usize) -> Result<f64> {
    let spec = spectral::dft(table);
    class_mean_dft_check_with(table, &spec, period)
}

pub fn class_mean_dft_check_with(table: &EmbeddingTable, spec: &Spectrum, period: usize) -> Result<f64> {
    let n = table.n_tokens();
    let set = spectral::HarmonicSet::new(period, n)?;
    let raw = raw_scatter(table, period)?;
    let d = table.dim();
    let t = period as f64;
    let scale = (t / n as f64).sqrt();
    let mut worst = 0.0f64;
    for (l, &k) in set.indices().iter().enumerate() {
        let f = spec.coeff(k);
        for j in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..period {
                let angle = -std::f64::consts::TAU * ((l * r) % period) as f64 / t;
                acc += Complex64::from_polar(raw.class_means[(r, j)], angle);
            }
            acc /= t.sqrt();
            worst = worst.max((acc - f[j] * scale).norm());
        }
    }
    Ok(worst / raw.class_means.norm().max(1.0))
}

/// One row of the noise-anatomy diagnostic for a single period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAnatomy {
    pub period: usize,
    pub phi: f64,
    pub trace_between: f64,
    pub trace_within: f64,
    pub lambda_min_within: f64,
    pub lambda_max_within: f64,
    pub cond_within: f64,
    pub fisher: f64,
    pub bound_low: Option<f64>,
    pub bound_high: Option<f64>,
    pub regularization: f64,
}

impl From<&ScatterSummary> for NoiseAnatomy {
    fn from(s: &ScatterSummary) -> Self {
        NoiseAnatomy {
            period: s.period,
            phi: s.phi,
            trace_between: s.trace_between,
            trace_within: s.trace_within,
            lambda_min_within: s.lambda_min_within,
            lambda_max_within: s.lambda_max_within,
            cond_within: s.cond_within,
            fisher: s.fisher,
            bound_low: s.bound_low,
            bound_high: s.bound_high,
            regularization: s.regularization,
        }
    }
}

pub fn noise_anatomy(table: &EmbeddingTable, period: usize) -> Result<NoiseAnatomy> {
    Ok(NoiseAnatomy::from(&scatter(table, period)?))
}

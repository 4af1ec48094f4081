//! Discrete Fourier transform along the token index and the spike statistics built on it.
//!
//! Coefficients use the unitary normalization `F_k = N^{-1/2} Σ_n e(n) exp(-2πi kn/N)`,
//! so total power equals the table's total energy.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding_io::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DftMethod {
    /// O(N²·d) summation with exact index reduction; the reference path.
    #[default]
    Direct,
    /// Mixed-radix FFT per embedding dimension.
    Fft,
}

/// Which quantity is divided by its median to form `norm_mag`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpikeScale {
    #[default]
    Power,
    Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SpectrumOptions {
    pub method: DftMethod,
    /// Include the DC bin when taking the median. Off by default: DC carries the mean embedding.
    pub median_includes_dc: bool,
    pub scale: SpikeScale,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    n_tokens: usize,
    dim: usize,
    /// Row `k` holds the `dim` components of `F_{k/N}`.
    coeffs: Vec<Complex64>,
    power: Vec<f64>,
    norm_mag: Vec<f64>,
    median: f64,
    options: SpectrumOptions,
}

impl Spectrum {
    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, k: usize) -> &[Complex64] {
        &self.coeffs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `‖F_{k/N}‖²` for `k = 0..N`.
    pub fn power(&self) -> &[f64] {
        &self.power
    }

    /// Power (or magnitude) divided by its median over frequencies.
    /// If that median is exactly zero the values are left unscaled.
    pub fn norm_mag(&self) -> &[f64] {
        &self.norm_mag
    }

    pub fn median(&self) -> f64 {
        self.median
    }

    pub fn options(&self) -> SpectrumOptions {
        self.options
    }

    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 / self.n_tokens as f64
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Reference transform with default options.
pub fn dft(table: &EmbeddingTable) -> Spectrum {
    dft_with(table, SpectrumOptions::default())
}

pub fn dft_with(table: &EmbeddingTable, options: SpectrumOptions) -> Spectrum {
    let n = table.n_tokens();
    let d = table.dim();
    let coeffs = match options.method {
        DftMethod::Direct => direct_dft(table),
        DftMethod::Fft => fft_dft(table),
    };
    let power: Vec<f64> = coeffs
        .chunks(d)
        .map(|row| row.iter().map(Complex64::norm_sqr).sum())
        .collect();
    let scaled: Vec<f64> = match options.scale {
        SpikeScale::Power => power.clone(),
        SpikeScale::Magnitude => power.iter().map(|p| p.sqrt()).collect(),
    };
    let skip = if options.median_includes_dc { 0 } else { 1 };
    let median = median(&scaled[skip.min(n - 1)..]);
    let divisor = if median > 0.0 { median } else { 1.0 };
    let norm_mag = scaled.iter().map(|p| p / divisor).collect();
    Spectrum {
        n_tokens: n,
        dim: d,
        coeffs,
        power,
        norm_mag,
        median,
        options,
    }
}

fn direct_dft(table: &EmbeddingTable) -> Vec<Complex64> {
    let n = table.n_tokens();
    let d = table.dim();
    let twiddles: Vec<Complex64> = (0..n)
        .map(|j| {
            let angle = -std::f64::consts::TAU * j as f64 / n as f64;
            Complex64::new(angle.cos(), angle.sin())
        })
        .collect();
    let scale = 1.0 / (n as f64).sqrt();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n * d];
    coeffs.par_chunks_mut(d).enumerate().for_each(|(k, out)| {
        for (idx, row) in table.rows().enumerate() {
            let w = twiddles[(k * idx) % n];
            for (o, &x) in out.iter_mut().zip(row) {
                *o += w * x;
            }
        }
        for o in out.iter_mut() {
            *o *= scale;
        }
    });
    coeffs
}

fn fft_dft(table: &EmbeddingTable) -> Vec<Complex64> {
    let n = table.n_tokens();
    let d = table.dim();
    let fft = rustfft::FftPlanner::<f64>::new().plan_fft_forward(n);
    let scale = 1.0 / (n as f64).sqrt();
    let columns: Vec<Vec<Complex64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut col: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(table.row(i)[j], 0.0))
                .collect();
            fft.process(&mut col);
            col
        })
        .collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n * d];
    for (j, col) in columns.iter().enumerate() {
        for (k, c) in col.iter().enumerate() {
            coeffs[k * d + j] = c * scale;
        }
    }
    coeffs
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Frequencies `{0, 1/T, …, (T−1)/T}` expressed as DFT indices `{0, N/T, …}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarmonicSet {
    period: usize,
    indices: Vec<usize>,
}

impl HarmonicSet {
    pub fn new(period: usize, n_tokens: usize) -> Result<Self> {
        if period < 2 {
            return Err(Error::InvalidPeriod(period));
        }
        if !n_tokens.is_multiple_of(period) {
            return Err(Error::PeriodNotDivisor { period, n_tokens });
        }
        let stride = n_tokens / period;
        Ok(HarmonicSet {
            period,
            indices: (0..period).map(|l| l * stride).collect(),
        })
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, k: usize) -> bool {
        let stride = self.indices.get(1).copied().unwrap_or(usize::MAX);
        k.is_multiple_of(stride)
    }
}

/// `Φ_T`: power summed over the non-DC harmonics `ℓ/T`, `ℓ = 1..T`.
pub fn harmonic_power(spec: &Spectrum, period: usize) -> Result<f64> {
    let set = HarmonicSet::new(period, spec.n_tokens)?;
    Ok(set.indices[1..].iter().map(|&k| spec.power[k]).sum())
}

/// Power over every frequency outside the harmonic set (DC included in the set).
pub fn off_harmonic_power(spec: &Spectrum, period: usize) -> Result<f64> {
    let set = HarmonicSet::new(period, spec.n_tokens)?;
    Ok(spec
        .power
        .iter()
        .enumerate()
        .filter(|(k, _)| !set.contains(*k))
        .map(|(_, p)| p)
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeRow {
    pub period: usize,
    pub phi: f64,
    /// `norm_mag` at `ν = 1/T`.
    pub peak_norm_mag: f64,
    /// Peak divided by the larger of its two neighbouring bins. Infinite when both neighbours are 0
    /// and the peak is not; zero when the peak itself is 0.
    pub prominence: f64,
}

pub fn spike_report(spec: &Spectrum, periods: &[usize]) -> Result<Vec<SpikeRow>> {
    if periods.is_empty() {
        return Err(Error::InvalidArgument("spike report needs at least one period".into()));
    }
    let mut periods = periods.to_vec();
    periods.sort_unstable();
    periods.dedup();
    let n = spec.n_tokens;
    periods
        .into_iter()
        .map(|t| {
            let phi = harmonic_power(spec, t)?;
            let k = n / t;
            let peak = spec.norm_mag[k];
            let neighbour = spec.norm_mag[(k + n - 1) % n].max(spec.norm_mag[(k + 1) % n]);
            let prominence = if peak == 0.0 {
                0.0
            } else if neighbour == 0.0 {
                f64::INFINITY
            } else {
                peak / neighbour
            };
            Ok(SpikeRow {
                period: t,
                phi,
                peak_norm_mag: peak,
                prominence,
            })
        })
        .collect()
}

//! Analytic constructions: the interleaved scalar embedding `e(n) = A·(n mod T) + B·⌊n/T⌋`
//! whose Fourier power at period `T` is fixed by `A` alone while `B` decides linear
//! separability, plus oracle fixture tables for the probes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Named choices of the block scale `B` relative to `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockPreset {
    /// `B = 4.2·A`: residue classes interleave along the line, so linear probes sit
    /// near chance while the spike at `1/T` stays prominent.
    Interleaved,
    /// `B = 0.006·A`: each class drifts by `0.006·A·(K−1)`, which stays below the class
    /// spacing `A` for `K < 167`, so classes form clean bands.
    Separable,
}

impl BlockPreset {
    pub fn block_scale(self, amplitude: f64) -> f64 {
        match self {
            BlockPreset::Interleaved => 4.2 * amplitude,
            BlockPreset::Separable => 0.006 * amplitude,
        }
    }
}

impl std::str::FromStr for BlockPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interleaved" => Ok(BlockPreset::Interleaved),
            "separable" => Ok(BlockPreset::Separable),
            other => Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
        }
    }
}

/// Parameters of the construction and the quantities derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub period: usize,
    pub epsilon: f64,
    /// Target harmonic power `C`.
    pub power_target: f64,
    /// `B`.
    pub block_scale: f64,
    /// `K = ⌈(T−1)/(Tε)⌉`.
    pub k_blocks: usize,
    /// `N = K·T`.
    pub n_tokens: usize,
    /// `A = √(12C / (K·T·(T²−1)))`.
    pub amplitude: f64,
}

/// Closed-form predictions for a [`SynthSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthPrediction {
    pub phi: f64,
    pub trace_between: f64,
    pub trace_within: f64,
    /// `1/T + (T−1)/(K·T)`; a ceiling on linear accuracy when `interleaving` holds.
    pub accuracy_ceiling: f64,
    /// `B > (T−1)·A`.
    pub interleaving: bool,
}

/// `⌈x⌉`, treating values within 1e-9 (relative) of an integer as that integer.
fn robust_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn blocks_for(period: usize, epsilon: f64) -> Result<usize> {
    if period < 2 {
        return Err(Error::InvalidPeriod(period));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let t = period as f64;
    Ok(robust_ceil((t - 1.0) / (t * epsilon)).max(1.0) as usize)
}

impl SynthSpec {
    /// Build from the target power `C`.
    pub fn new(period: usize, epsilon: f64, power_target: f64, block_scale: f64) -> Result<Self> {
        let k = blocks_for(period, epsilon)?;
        if !(power_target > 0.0 && power_target.is_finite()) {
            return Err(Error::InvalidArgument(format!("power target must be positive, got {power_target}")));
        }
        if !(block_scale >= 0.0 && block_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("block scale must be non-negative, got {block_scale}")));
        }
        let t = period as f64;
        let amplitude = (12.0 * power_target / (k as f64 * t * (t * t - 1.0))).sqrt();
        Ok(SynthSpec {
            period,
            epsilon,
            power_target,
            block_scale,
            k_blocks: k,
            n_tokens: k * period,
            amplitude,
        })
    }

    /// Build from the residue amplitude `A` directly; `C` becomes `A²KT(T²−1)/12`.
    /// `A = 0` is allowed and yields a table with no harmonic power.
    pub fn from_amplitude(period: usize, epsilon: f64, amplitude: f64, block_scale: f64) -> Result<Self> {
        let k = blocks_for(period, epsilon)?;
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidArgument(format!("amplitude must be non-negative, got {amplitude}")));
        }
        if !(block_scale >= 0.0 && block_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("block scale must be non-negative, got {block_scale}")));
        }
        let t = period as f64;
        Ok(SynthSpec {
            period,
            epsilon,
            power_target: amplitude * amplitude * k as f64 * t * (t * t - 1.0) / 12.0,
            block_scale,
            k_blocks: k,
            n_tokens: k * period,
            amplitude,
        })
    }

    pub fn with_preset(mut self, preset: BlockPreset) -> Self {
        self.block_scale = preset.block_scale(self.amplitude);
        self
    }

    pub fn value(&self, n: usize) -> f64 {
        self.amplitude * (n % self.period) as f64 + self.block_scale * (n / self.period) as f64
    }
}

/// The `N × 1` table `e(n) = A·(n mod T) + B·⌊n/T⌋`.
pub fn construct(spec: &SynthSpec) -> EmbeddingTable {
    let label = format!(
        "synth T={} K={} A={} B={}",
        spec.period, spec.k_blocks, spec.amplitude, spec.block_scale
    );
    EmbeddingTable::from_fn(spec.n_tokens, 1, label, |n, row| row[0] = spec.value(n))
        .expect("construction always has N ≥ 2 finite rows")
}

pub fn predict(spec: &SynthSpec) -> SynthPrediction {
    let t = spec.period as f64;
    let k = spec.k_blocks as f64;
    let a2 = spec.amplitude * spec.amplitude;
    let b2 = spec.block_scale * spec.block_scale;
    SynthPrediction {
        phi: a2 * k * t * (t * t - 1.0) / 12.0,
        trace_between: a2 * (t * t - 1.0) / 12.0,
        trace_within: b2 * (k * k - 1.0) / 12.0,
        accuracy_ceiling: 1.0 / t + (t - 1.0) / (k * t),
        interleaving: spec.block_scale > (t - 1.0) * spec.amplitude,
    }
}

/// Rows `(cos 2πn/T, sin 2πn/T, 0, …, 0)`, optionally rotated by a seeded random orthogonal map.
pub fn ideal_circle(period: usize, n_tokens: usize, dim: usize, lift_seed: Option<u64>) -> Result<EmbeddingTable> {
    if dim < 2 {
        return Err(Error::InvalidArgument("ideal circle needs dim ≥ 2".into()));
    }
    if period < 2 {
        return Err(Error::InvalidPeriod(period));
    }
    let rotation = lift_seed.map(|seed| random_orthogonal(dim, seed));
    EmbeddingTable::from_fn(n_tokens, dim, format!("ideal-circle T={period}"), |n, row| {
        let angle = std::f64::consts::TAU * (n % period) as f64 / period as f64;
        let (s, c) = angle.sin_cos();
        match &rotation {
            None => {
                row.iter_mut().for_each(|v| *v = 0.0);
                row[0] = c;
                row[1] = s;
            }
            Some(q) => {
                for (i, v) in row.iter_mut().enumerate() {
                    *v = q[(i, 0)] * c + q[(i, 1)] * s;
                }
            }
        }
    })
}

/// Haar-ish orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = SplitMix64::new(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.normal());
    g.qr().q()
}

/// Subtract each residue class's mean and add back the grand mean, which removes every
/// component at the non-DC harmonics of `T`. Idempotent.
pub fn project_out_harmonics(table: &EmbeddingTable, period: usize) -> Result<EmbeddingTable> {
    let n = table.n_tokens();
    if period < 2 {
        return Err(Error::InvalidPeriod(period));
    }
    if !n.is_multiple_of(period) {
        return Err(Error::PeriodNotDivisor { period, n_tokens: n });
    }
    let d = table.dim();
    let mut class_sum = vec![0.0; period * d];
    let mut grand = vec![0.0; d];
    for (i, row) in table.rows().enumerate() {
        let r = i % period;
        for j in 0..d {
            class_sum[r * d + j] += row[j];
            grand[j] += row[j];
        }
    }
    let per_class = (n / period) as f64;
    EmbeddingTable::from_fn(n, d, table.label().to_string(), |i, out| {
        let r = i % period;
        let row = table.row(i);
        for j in 0..d {
            out[j] = row[j] - class_sum[r * d + j] / per_class + grand[j] / n as f64;
        }
    })
}

/// A seeded Gaussian table with all power at the non-DC harmonics of `T` projected out.
pub fn zero_harmonic_table(period: usize, n_tokens: usize, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    let mut rng = SplitMix64::new(seed);
    let raw = EmbeddingTable::from_fn(n_tokens, dim, format!("zero-harmonic T={period}"), |_, row| {
        row.iter_mut().for_each(|v| *v = rng.normal())
    })?;
    project_out_harmonics(&raw, period)
}

/// Exhaustive search over every way to cut the value-sorted tokens into at most
/// `max_intervals` contiguous intervals, each labelled by its majority class.
///
/// Returns the largest number of correctly labelled tokens. Tokens with equal values
/// are never separated. Because each class of a 1-D multiclass linear classifier owns
/// one interval, this is an upper bound on what any such classifier can achieve.
pub fn best_interval_partition(values: &[f64], labels: &[usize], n_classes: usize, max_intervals: usize) -> usize {
    assert_eq!(values.len(), labels.len());
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    // Collapse runs of equal values into groups; cuts are only allowed between groups.
    let mut group_counts: Vec<Vec<usize>> = Vec::new();
    let mut last: Option<f64> = None;
    for &i in &order {
        if last != Some(values[i]) {
            group_counts.push(vec![0; n_classes]);
            last = Some(values[i]);
        }
        group_counts.last_mut().expect("group exists")[labels[i]] += 1;
    }
    let g = group_counts.len();
    // prefix[k][c] = number of class-c tokens in groups 0..k
    let mut prefix = vec![vec![0usize; n_classes]; g + 1];
    for k in 0..g {
        for c in 0..n_classes {
            prefix[k + 1][c] = prefix[k][c] + group_counts[k][c];
        }
    }
    let majority = |from: usize, to: usize| -> usize {
        (0..n_classes)
            .map(|c| prefix[to][c] - prefix[from][c])
            .max()
            .unwrap_or(0)
    };

    fn search(start: usize, remaining: usize, g: usize, majority: &dyn Fn(usize, usize) -> usize) -> usize {
        if remaining == 1 || start == g {
            return majority(start, g);
        }
        let mut best = majority(start, g);
        for end in start + 1..g {
            let score = majority(start, end) + search(end, remaining - 1, g, majority);
            best = best.max(score);
        }
        best
    }
    if g == 0 {
        return 0;
    }
    search(0, max_intervals.max(1), g, &majority)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{geometry, spectral};

    #[test]
    fn block_counts_from_epsilon() {
        let s = SynthSpec::new(5, 0.16, 1.0, 0.0).unwrap();
        assert_eq!((s.k_blocks, s.n_tokens), (5, 25));
        let s = SynthSpec::new(10, 0.009, 1.0, 0.0).unwrap();
        assert_eq!((s.k_blocks, s.n_tokens), (100, 1000));
        assert!((s.period - 1) as f64 / (s.k_blocks * s.period) as f64 <= s.epsilon);
    }

    #[test]
    fn amplitude_round_trip() {
        let s = SynthSpec::from_amplitude(10, 0.009, 5.0, 21.0).unwrap();
        assert!((s.power_target - 206_250.0).abs() < 1e-6);
        let back = SynthSpec::new(10, 0.009, s.power_target, 21.0).unwrap();
        assert!((back.amplitude - 5.0).abs() < 1e-12);
    }

    #[test]
    fn predictions_at_paper_scale() {
        let s = SynthSpec::from_amplitude(10, 0.009, 5.0, 21.0).unwrap();
        let p = predict(&s);
        assert!((p.phi - 206_250.0).abs() < 1e-6);
        assert!((p.accuracy_ceiling - 0.109).abs() < 1e-12);
        assert!(!p.interleaving, "B = 21 < (T−1)A = 45");
        let zero_b = predict(&SynthSpec::from_amplitude(10, 0.009, 5.0, 0.0).unwrap());
        assert_eq!(zero_b.trace_within, 0.0);
    }

    #[test]
    fn zero_amplitude_has_no_harmonic_power() {
        let s = SynthSpec::from_amplitude(10, 0.009, 0.0, 3.0).unwrap();
        let spec = spectral::dft(&construct(&s));
        assert!(spectral::harmonic_power(&spec, 10).unwrap() < 1e-9 * spec.total_power());
        assert_eq!(predict(&s).phi, 0.0);
    }

    #[test]
    fn harmonic_power_matches_brute_force_for_any_block_scale() {
        for b in [0.0, 0.03, 1.0, 21.0, 189.0] {
            let s = SynthSpec::from_amplitude(10, 0.009, 5.0, b).unwrap();
            let t = construct(&s);
            // brute-force DFT at the harmonics only
            let n = t.n_tokens();
            let brute: f64 = (1..10)
                .map(|l| {
                    let k = l * n / 10;
                    let (mut re, mut im) = (0.0, 0.0);
                    for (i, v) in t.values().iter().enumerate() {
                        let a = -std::f64::consts::TAU * ((k * i) % n) as f64 / n as f64;
                        re += v * a.cos();
                        im += v * a.sin();
                    }
                    (re * re + im * im) / n as f64
                })
                .sum();
            let phi = spectral::harmonic_power(&spectral::dft(&t), 10).unwrap();
            assert!((phi / 206_250.0 - 1.0).abs() < 1e-6, "B={b}: {phi}");
            assert!((brute / 206_250.0 - 1.0).abs() < 1e-6, "B={b}: brute {brute}");
        }
    }

    #[test]
    fn zero_block_scale_has_no_off_harmonic_power() {
        let s = SynthSpec::from_amplitude(10, 0.009, 5.0, 0.0).unwrap();
        let spec = spectral::dft(&construct(&s));
        assert!(spectral::off_harmonic_power(&spec, 10).unwrap() < 1e-9);
    }

    #[test]
    fn scatter_traces_match_closed_form() {
        let s = SynthSpec::from_amplitude(5, 0.05, 1.0, 0.7).unwrap();
        let sc = geometry::scatter(&construct(&s), 5).unwrap();
        let p = predict(&s);
        assert!((sc.trace_between - 2.0).abs() < 1e-8);
        assert!((sc.trace_between - p.trace_between).abs() < 1e-8);
        assert!((sc.trace_within - p.trace_within).abs() < 1e-8 * p.trace_within);
    }

    #[test]
    fn presets_match_paper_values_at_paper_scale() {
        let s = SynthSpec::from_amplitude(10, 0.009, 5.0, 0.0).unwrap();
        let sep = s.clone().with_preset(BlockPreset::Separable);
        assert!((sep.block_scale - 0.03).abs() < 1e-15);
        let int = s.with_preset(BlockPreset::Interleaved);
        assert!((int.block_scale - 21.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_circle_points() {
        let t = ideal_circle(10, 1000, 2, None).unwrap();
        let mut distinct: Vec<(i64, i64)> = t
            .rows()
            .map(|r| ((r[0] * 1e9).round() as i64, (r[1] * 1e9).round() as i64))
            .collect();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 10);
        let spec = spectral::dft(&t);
        let non_dc: f64 = spec.power()[1..].iter().sum();
        let phi = spectral::harmonic_power(&spec, 10).unwrap();
        assert!((phi - non_dc).abs() < 1e-9 * non_dc);
        // all non-DC power sits at ν = ±1/10
        let pair = spec.power()[100] + spec.power()[900];
        assert!((pair - non_dc).abs() < 1e-9 * non_dc);
    }

    #[test]
    fn orthogonal_lift_preserves_harmonic_power() {
        let flat = ideal_circle(10, 200, 8, None).unwrap();
        let lifted = ideal_circle(10, 200, 8, Some(3)).unwrap();
        let a = spectral::harmonic_power(&spectral::dft(&flat), 10).unwrap();
        let b = spectral::harmonic_power(&spectral::dft(&lifted), 10).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
        assert!(ideal_circle(10, 20, 1, None).is_err());
    }

    #[test]
    fn zero_harmonic_is_idempotent_and_flat() {
        let t = zero_harmonic_table(10, 1000, 8, 1).unwrap();
        let spec = spectral::dft(&t);
        assert!(spectral::harmonic_power(&spec, 10).unwrap() <= 1e-10 * spec.total_power());
        let again = project_out_harmonics(&t, 10).unwrap();
        for (a, b) in t.values().iter().zip(again.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let sc = geometry::scatter(&t, 10).unwrap();
        let variance = sc.trace_between + sc.trace_within;
        assert!(sc.trace_between <= 1e-10 * variance);
    }

    #[test]
    fn interval_search_small_cases() {
        // labels 0,1,0,1 on a line: two intervals can get 3 right
        assert_eq!(best_interval_partition(&[0.0, 1.0, 2.0, 3.0], &[0, 1, 0, 1], 2, 2), 3);
        // perfectly separable
        assert_eq!(best_interval_partition(&[0.0, 1.0, 5.0, 6.0], &[0, 0, 1, 1], 2, 2), 4);
        // tied values cannot be split
        assert_eq!(best_interval_partition(&[1.0, 1.0], &[0, 1], 2, 2), 1);
    }
}

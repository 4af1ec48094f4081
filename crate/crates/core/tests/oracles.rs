use std::collections::BTreeMap;

use twotier::probes::ProbeKind;
use twotier::report::{freq_baseline, ReportOptions};
use twotier::rng::SplitMix64;
use twotier::spectral;
use twotier::synth::{self, SynthSpec};
use twotier::{EmbeddingTable, TokenCorpus};

/// Best labelled interval partition by dynamic programming over cut points.
fn interval_dp(values: &[f64], labels: &[usize], n_classes: usize, max_intervals: usize) -> usize {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    // cut positions allowed only between distinct values
    let sorted: Vec<(f64, usize)> = order.iter().map(|&i| (values[i], labels[i])).collect();
    let n = sorted.len();
    let cuttable = |i: usize| i == 0 || i == n || sorted[i - 1].0 != sorted[i].0;
    let best_in = |a: usize, b: usize| {
        let mut c = vec![0usize; n_classes];
        for &(_, l) in &sorted[a..b] {
            c[l] += 1;
        }
        c.into_iter().max().unwrap_or(0)
    };
    // f[j][i] = best for prefix of length i using at most j intervals
    let mut f = vec![vec![0usize; n + 1]; max_intervals + 1];
    for j in 1..=max_intervals {
        for i in 1..=n {
            if !cuttable(i) {
                continue;
            }
            let mut best = 0;
            for s in 0..i {
                if cuttable(s) {
                    best = best.max(f[j - 1][s] + best_in(s, i));
                }
            }
            f[j][i] = best;
        }
    }
    f[max_intervals][n]
}

#[test]
fn exhaustive_interval_search_matches_dynamic_programming() {
    let mut rng = SplitMix64::new(17);
    for _ in 0..200 {
        let n = 2 + rng.below(14) as usize;
        let t = 2 + rng.below(3) as usize;
        // coarse values so ties occur
        let values: Vec<f64> = (0..n).map(|_| rng.below(8) as f64).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.below(t as u64) as usize).collect();
        let m = 1 + rng.below(t as u64) as usize;
        assert_eq!(
            synth::best_interval_partition(&values, &labels, t, m),
            interval_dp(&values, &labels, t, m),
            "values {values:?} labels {labels:?} intervals {m}"
        );
    }
}

#[test]
fn interleaved_ceiling_is_attained_exactly() {
    for (t, eps) in [(2, 0.05), (3, 0.1), (4, 0.1)] {
        let spec = SynthSpec::from_amplitude(t, eps, 1.0, 3.0 * t as f64).unwrap();
        let table = synth::construct(&spec);
        let labels: Vec<usize> = (0..table.n_tokens()).map(|i| i % t).collect();
        let best = synth::best_interval_partition(table.values(), &labels, t, t);
        let ceiling = synth::predict(&spec).accuracy_ceiling * table.n_tokens() as f64;
        assert_eq!(best as f64, ceiling.round());
        assert_eq!(best, interval_dp(table.values(), &labels, t, t));
    }
}

#[test]
fn separable_construction_spikes_sharply() {
    let spec = SynthSpec::from_amplitude(10, 0.009, 5.0, 0.03).unwrap();
    let row = &spectral::spike_report(&spectral::dft(&synth::construct(&spec)), &[10]).unwrap()[0];
    assert!(row.prominence > 1e6, "{}", row.prominence);
    assert!((row.phi / 206_250.0 - 1.0).abs() < 1e-9);
}

#[test]
fn gaussian_prominence_is_mostly_moderate() {
    let mut inside = 0;
    let mut total = 0;
    for seed in 0..100 {
        let mut rng = SplitMix64::new(seed);
        let t = EmbeddingTable::from_fn(1000, 8, "g", |_, r| r.iter_mut().for_each(|v| *v = rng.normal())).unwrap();
        for row in spectral::spike_report(&spectral::dft(&t), &[2, 5, 10]).unwrap() {
            total += 1;
            if (0.2..=5.0).contains(&row.prominence) {
                inside += 1;
            }
        }
    }
    let frac = inside as f64 / total as f64;
    assert!(frac >= 0.99, "{inside}/{total}");
}

/// Number-token counts with a 30% bump on multiples of 10 over uniform noise.
fn ten_periodic_corpus(n_values: u32, seed: u64) -> TokenCorpus {
    let mut rng = SplitMix64::new(seed);
    let mut stream = Vec::new();
    for v in 0..n_values {
        let bump = if v % 10 == 0 { 1.3 } else { 1.0 };
        let count = (1000.0 * (0.5 + rng.next_f64()) * bump).round() as usize;
        // token id = value + 10; ids 0..10 are text
        stream.extend(std::iter::repeat_n(v + 10, count));
    }
    rng.shuffle(&mut stream);
    let sequences: Vec<Vec<u32>> = stream
        .chunks(50)
        .map(|c| {
            let mut s = Vec::with_capacity(c.len() * 2);
            for &t in c {
                s.push(rng.below(10) as u32);
                s.push(t);
            }
            s
        })
        .collect();
    let vocab: BTreeMap<u32, u32> = (0..n_values).map(|v| (v + 10, v)).collect();
    TokenCorpus::new(sequences, n_values as usize + 10, vocab).unwrap()
}

#[test]
fn frequency_baseline_spikes_without_decodability() {
    let corpus = ten_periodic_corpus(1000, 3);
    let options = ReportOptions {
        periods: vec![10],
        kinds: vec![ProbeKind::Linear],
        ..ReportOptions::default()
    };
    let b = freq_baseline(&corpus, None, &options).unwrap();
    let v = &b.summary[0];
    assert!(v.spike, "peak norm_mag {:?}", v.peak_norm_mag);
    assert!(!v.decodable);
    assert!(v.best_kappa.unwrap().abs() <= 5.0, "{v:?}");
}

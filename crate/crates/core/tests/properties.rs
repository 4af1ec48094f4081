use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use twotier::geometry::{self, fisher_score};
use twotier::perturb::{self, SwapOptions};
use twotier::probes::stratified_folds;
use twotier::rng::SplitMix64;
use twotier::spectral;
use twotier::{EmbeddingTable, TokenCorpus};

fn table_from(n: usize, d: usize, seed: u64) -> EmbeddingTable {
    let mut rng = SplitMix64::new(seed);
    let offsets: Vec<f64> = (0..5 * d).map(|_| rng.normal()).collect();
    EmbeddingTable::from_fn(n, d, "p", |i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = offsets[(i % 5) * d + j] + rng.normal();
        }
    })
    .unwrap()
}

fn corpus_from(seed: u64, n_seqs: usize) -> TokenCorpus {
    let mut rng = SplitMix64::new(seed);
    let vocab = (50..70).map(|t| (t, t - 50)).collect();
    let seqs = (0..n_seqs)
        .map(|_| {
            let len = rng.below(30) as usize;
            (0..len)
                .map(|_| if rng.next_f64() < 0.3 { 50 + rng.below(20) as u32 } else { rng.below(50) as u32 })
                .collect()
        })
        .collect();
    TokenCorpus::new(seqs, 70, vocab).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn dft_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let x = table_from(40, 3, seed);
        let y = table_from(40, 3, seed ^ 0x5555);
        let z = EmbeddingTable::new(
            40, 3,
            x.values().iter().zip(y.values()).map(|(p, q)| a * p + b * q).collect(),
            "z",
        ).unwrap();
        let (fx, fy, fz) = (spectral::dft(&x), spectral::dft(&y), spectral::dft(&z));
        for ((cx, cy), cz) in fx.coeffs().iter().zip(fy.coeffs()).zip(fz.coeffs()) {
            let expect = cx * a + cy * b;
            prop_assert!((cz - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn real_input_has_conjugate_symmetric_spectrum(seed in any::<u64>(), n in 2usize..60) {
        let x = table_from(n, 2, seed);
        let f = spectral::dft(&x);
        for k in 1..n {
            for j in 0..2 {
                let diff = f.coeff(k)[j] - f.coeff(n - k)[j].conj();
                prop_assert!(diff.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn fisher_is_invariant_under_invertible_maps(seed in any::<u64>()) {
        let x = table_from(100, 3, seed);
        let mut rng = SplitMix64::new(seed.wrapping_add(1));
        // diagonally dominant, hence invertible
        let mut map: Vec<f64> = (0..9).map(|_| rng.normal() * 0.3).collect();
        for i in 0..3 { map[i * 3 + i] += 2.0; }
        let y = x.map_rows(&map, 3).unwrap();
        let fx = geometry::scatter(&x, 5).unwrap().fisher;
        let fy = geometry::scatter(&y, 5).unwrap().fisher;
        assert_relative_eq!(fx, fy, max_relative = 1e-8);
    }

    #[test]
    fn between_scatter_rank_is_at_most_t_minus_one(seed in any::<u64>(), t in 2usize..5) {
        let x = table_from(8 * t, 6, seed);
        let s = geometry::scatter(&x, t).unwrap();
        let sb = s.s_between_matrix().unwrap();
        let eig = sb.symmetric_eigen().eigenvalues;
        let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let rank = eig.iter().filter(|v| v.abs() > 1e-10 * scale).count();
        prop_assert!(rank < t);
    }

    #[test]
    fn relabelling_residues_keeps_scatter(seed in any::<u64>(), shift in 1usize..5) {
        // rotating rows by `shift` maps class r to class r + shift
        let x = table_from(50, 2, seed);
        let rotated = EmbeddingTable::from_fn(50, 2, "r", |i, row| {
            row.copy_from_slice(x.row((i + 50 - shift) % 50))
        }).unwrap();
        let a = geometry::scatter(&x, 5).unwrap();
        let b = geometry::scatter(&rotated, 5).unwrap();
        assert_relative_eq!(a.trace_between, b.trace_between, max_relative = 1e-10);
        assert_relative_eq!(a.fisher, b.fisher, max_relative = 1e-8);
        let pa = spectral::harmonic_power(&spectral::dft(&x), 5).unwrap();
        let pb = spectral::harmonic_power(&spectral::dft(&rotated), 5).unwrap();
        assert_relative_eq!(pa, pb, max_relative = 1e-10);
    }

    #[test]
    fn folds_partition_and_stratify(seed in any::<u64>(), t in 2usize..6, per in 2usize..15, k in 2usize..6) {
        let labels: Vec<usize> = (0..t * per).map(|i| i % t).collect();
        let folds = stratified_folds(&labels, t, k, seed).unwrap();
        prop_assert_eq!(folds.len(), labels.len());
        prop_assert!(folds.iter().all(|&f| f < k));
        for c in 0..t {
            let mut counts = vec![0usize; k];
            for (i, &f) in folds.iter().enumerate() {
                if labels[i] == c { counts[f] += 1; }
            }
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {} counts {:?}", c, counts);
        }
        prop_assert_eq!(stratified_folds(&labels, t, k, seed).unwrap(), folds);
    }

    #[test]
    fn isolate_caps_numbers_per_segment(seed in any::<u64>(), k in 1usize..5) {
        let c = corpus_from(seed, 8);
        let out = perturb::isolate_k(&c, k).unwrap();
        let plan = out.plan.unwrap();
        for (seq, p) in c.sequences().iter().zip(&plan.sequences) {
            for r in p.segments() {
                prop_assert!(seq[r].iter().filter(|&&t| c.is_number(t)).count() <= k);
            }
            for (i, &pos) in p.position_ids.iter().enumerate() {
                prop_assert_eq!(pos == 0, p.boundaries.contains(&i));
                prop_assert_eq!(p.loss_mask[i] == 0, pos == 0);
            }
            prop_assert!(p.segment_ids.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn randomized_perturbations_are_deterministic_and_keep_positions(seed in any::<u64>()) {
        let c = corpus_from(seed, 12);
        prop_assume!(c.sequences().iter().flatten().any(|&t| c.is_number(t)));
        let mut outs = vec![perturb::unigram_replace(&c, seed).unwrap()];
        // swap may legitimately fail when one sequence holds every number
        outs.extend(perturb::swap_numbers(&c, seed, SwapOptions { wrap: true }).ok());
        for out in outs {
            for (a, b) in c.sequences().iter().zip(out.sequences()) {
                prop_assert_eq!(c.number_positions(a), c.number_positions(b));
                for (x, y) in a.iter().zip(b) {
                    if !c.is_number(*x) { prop_assert_eq!(x, y); }
                }
            }
        }
        prop_assert_eq!(perturb::unigram_replace(&c, seed).unwrap(), perturb::unigram_replace(&c, seed).unwrap());
    }
}

#[test]
fn fisher_of_explicit_matrices() {
    let sb = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 0.0]));
    let sw = DMatrix::identity(3, 3);
    assert_relative_eq!(fisher_score(&sb, &sw).unwrap(), 3.0, max_relative = 1e-12);
}

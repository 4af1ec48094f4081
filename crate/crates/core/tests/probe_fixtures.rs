use twotier::probes::{self, ProbeConfig, ProbeKind};
use twotier::rng::SplitMix64;
use twotier::synth::{self, SynthSpec};
use twotier::EmbeddingTable;

fn gaussian(n: usize, d: usize, seed: u64) -> EmbeddingTable {
    let mut rng = SplitMix64::new(seed);
    EmbeddingTable::from_fn(n, d, "gaussian", |_, row| row.iter_mut().for_each(|v| *v = rng.normal())).unwrap()
}

#[test]
fn separable_construction_is_linearly_decodable() {
    let spec = SynthSpec::from_amplitude(10, 0.009, 5.0, 0.03).unwrap();
    let r = probes::linear_probe(&synth::construct(&spec), &ProbeConfig::new(ProbeKind::Linear, 10)).unwrap();
    assert!(r.accuracy >= 0.99);
}

#[test]
fn interleaved_construction_stays_near_chance() {
    let spec = SynthSpec::from_amplitude(10, 0.009, 5.0, 21.0).unwrap();
    let r = probes::linear_probe(&synth::construct(&spec), &ProbeConfig::new(ProbeKind::Linear, 10)).unwrap();
    assert!(r.accuracy <= 0.129);
}

#[test]
fn circular_projection_recovers_residue_angles() {
    let t = synth::ideal_circle(5, 200, 2, None).unwrap();
    let mut config = ProbeConfig::new(ProbeKind::Circular, 5);
    config.n_seeds = 1;
    let out = probes::circular_probe(&t, &config).unwrap();
    assert_eq!(out.projections.len(), 200);
    assert!(out.result.accuracy >= 0.99);
    // tokens of one residue land on one point
    let first = out.projections[0].unwrap();
    let again = out.projections[5].unwrap();
    assert!((first[0] - again[0]).abs() < 1e-9 && (first[1] - again[1]).abs() < 1e-9);
}

#[test]
fn gaussian_noise_is_near_chance_for_a_linear_probe() {
    let r = probes::linear_probe(&gaussian(1000, 4, 11), &ProbeConfig::new(ProbeKind::Linear, 10)).unwrap();
    assert!(r.kappa.abs() <= 5.0, "{}", r.kappa);
}

#[test]
fn mlp_fits_parity_of_a_circle() {
    let t = synth::ideal_circle(4, 400, 2, None).unwrap();
    let r = probes::mlp_probe(&t, &ProbeConfig::new(ProbeKind::Mlp, 2)).unwrap();
    assert!(r.accuracy >= 0.99);
}

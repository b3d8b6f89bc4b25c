use std::collections::HashSet;

use dchaos::construction::{chaotic_set_to_sequence, extract_witnesses, DeltaPolicy, WitnessSequences};
use dchaos::distribution::{default_t_grid, DistributionConfig};
use dchaos::index_seq::MergeConfig;
use dchaos::oracle::{predict_block_profile, FamilyParams};
use dchaos::systems::BlockFamily;
use dchaos::Frac;

fn params(base: u64, count: u32, eps_one: Frac) -> FamilyParams {
    FamilyParams {
        alphabet_size: 3,
        members: 3,
        block_lengths: (1..=count).map(|k| base.pow(k)).collect(),
        delta: 0.5,
        t_grid: default_t_grid(),
        eps_one,
        tail_fraction: Frac::new(1, 1000),
    }
}

/// Verdict at horizon `E_b`, using only boundaries inside its tail window.
fn verdict_at_boundary(p: &dchaos::oracle::BlockPrediction, b: usize, tail: Frac) -> bool {
    let e = p.boundaries[b];
    let start = (tail * Frac::from_integer(e)).ceil().to_integer();
    let window: Vec<usize> = (0..=b).filter(|&c| p.boundaries[c] >= start).collect();
    let one_minus = Frac::from_integer(1) - p.eps_one;
    let upper_ok = (0..p.t_grid.len()).all(|j| window.iter().map(|&c| p.phi[c][j]).max().unwrap() >= one_minus);
    let lower_ok = window.iter().map(|&c| p.phi_delta[c]).min().unwrap() <= p.eps_one;
    upper_ok && lower_ok
}

#[test]
fn growing_horizon_along_block_boundaries_keeps_a_true_verdict() {
    for base in [4u64, 5, 6] {
        for eps_one in [Frac::new(1, 50), Frac::new(1, 4), Frac::new(1, 3)] {
            let tail = Frac::new(1, 1000);
            let p = predict_block_profile(&params(base, 10, eps_one)).unwrap();
            let verdicts: Vec<bool> = (0..p.boundaries.len()).map(|b| verdict_at_boundary(&p, b, tail)).collect();
            if let Some(first) = verdicts.iter().position(|&v| v) {
                assert!(verdicts[first..].iter().all(|&v| v), "B={base} eps_one={eps_one}: {verdicts:?}");
            }
            assert_eq!(*verdicts.last().unwrap(), p.distributional_delta);
        }
    }
}

#[test]
fn completed_merge_stages_keep_a_true_verdict() {
    let fam = BlockFamily::geometric(3, 3, 4, 11).unwrap();
    let pairs = fam.pairs();
    let w = extract_witnesses(&pairs, DeltaPolicy::Fixed(0.5), fam.total_length(), 10, 2_000_000).unwrap();
    let mut seen_true = vec![false; pairs.len()];
    // |Q| at the ends of stages 2, 3 and 4 of the default schedule.
    for h in [100usize, 9_900, 980_100] {
        let r = chaotic_set_to_sequence(&w, &pairs, h, &MergeConfig::default(), &DistributionConfig::for_shift(h)).unwrap();
        for (k, p) in r.pairs.iter().enumerate() {
            assert!(!seen_true[k] || p.verdict.distributional_delta, "pair {}-{} flipped at {h}", p.i, p.j);
            seen_true[k] |= p.verdict.distributional_delta;
        }
    }
    assert!(seen_true.iter().all(|&v| v));
}

#[test]
fn q_draws_only_from_witness_times_and_witnesses_recheck() {
    let fam = BlockFamily::geometric(4, 4, 5, 8).unwrap();
    let pairs = fam.pairs();
    let w = extract_witnesses(&pairs, DeltaPolicy::Fixed(0.5), fam.total_length(), 10, 100_000).unwrap();
    assert!(w.verify(&pairs).unwrap().is_empty());

    let mut text = Vec::new();
    w.write_to(&mut text, &["round trip".into()]).unwrap();
    let back = WitnessSequences::read_from(text.as_slice()).unwrap();
    assert_eq!(back, w);

    let h = 30_000;
    let r = chaotic_set_to_sequence(&back, &pairs, h, &MergeConfig::default(), &DistributionConfig::for_shift(h)).unwrap();
    let drawn: HashSet<u64> = w.pairs.iter().flat_map(|p| p.proximal.iter().chain(&p.distal)).copied().collect();
    assert!(r.q.prefix().iter().all(|t| drawn.contains(t)));
    assert_eq!(r.pairs.len(), 6);
    assert!(r.failures().is_empty());
    for p in &r.pairs {
        assert!(p.verdict.recheck(&fam.pair(p.i, p.j).unwrap()).unwrap());
    }
}

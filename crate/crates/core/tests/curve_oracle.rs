mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tasksets_core::curves::*;

const IDS: [&str; 4] = ["A", "B", "C", "D"];

fn random_group(rng: &mut ChaCha8Rng) -> Vec<&'static str> {
    let size = rng.random_range(1..=IDS.len());
    let mut group: Vec<&str> = IDS.to_vec();
    while group.len() > size {
        group.remove(rng.random_range(0..group.len()));
    }
    group
}

#[test]
fn counts_match_direct_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..1000 {
        let len = rng.random_range(1..=120);
        let m = support::random_masks(&mut rng, &IDS, len);
        let group = random_group(&mut rng);
        let horizon = rng.random_range(1..=25);
        let (n, expected) = support::brute_force_counts(&m, &group, horizon);
        let got = curve_counts(&m, &group, horizon).unwrap();
        for (g, counts) in got.iter().enumerate() {
            assert_eq!(counts.denominator, n, "case {case}");
            assert_eq!(counts.completions, expected[g], "case {case} {}", group[g]);
        }
        match completion_curve([&m], &group, horizon) {
            Ok(curves) => {
                for (g, c) in curves.iter().enumerate() {
                    assert_eq!(c.completions, expected[g]);
                    for x in 0..=horizon {
                        assert_eq!(c.probabilities[x], expected[g][x] as f64 / n as f64);
                    }
                }
            }
            Err(CurveError::NoAffordances(_)) => assert_eq!(n, 0),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn pooled_curves_sum_raw_counts_in_any_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let games: Vec<_> = (0..rng.random_range(1..=4))
            .map(|_| {
                let len = rng.random_range(1..=80);
                support::random_masks(&mut rng, &IDS, len)
            })
            .collect();
        let group = random_group(&mut rng);
        let horizon = rng.random_range(1..=20);
        let mut n = 0;
        let mut sum = vec![vec![0u64; horizon + 1]; group.len()];
        for g in &games {
            let (gn, counts) = support::brute_force_counts(g, &group, horizon);
            n += gn;
            for (s, c) in sum.iter_mut().zip(&counts) {
                for (a, b) in s.iter_mut().zip(c) {
                    *a += b;
                }
            }
        }
        let forward = completion_curve(games.iter(), &group, horizon);
        let backward = completion_curve(games.iter().rev(), &group, horizon);
        if n == 0 {
            assert!(matches!(forward, Err(CurveError::NoAffordances(_))));
            continue;
        }
        let forward = forward.unwrap();
        assert_eq!(forward, backward.unwrap());
        for (c, expected) in forward.iter().zip(&sum) {
            assert_eq!(c.denominator, n);
            assert_eq!(&c.completions, expected);
        }
    }
}

#[test]
fn game_mean_pooling_averages_games_with_affordances() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let games: Vec<_> = (0..3)
            .map(|_| {
                let len = rng.random_range(1..=60);
                support::random_masks(&mut rng, &IDS, len)
            })
            .collect();
        let group = ["A", "B"];
        let per_game: Vec<_> = games.iter().map(|g| support::brute_force_counts(g, &group, 10)).collect();
        let used: Vec<_> = per_game.iter().filter(|(n, _)| *n > 0).collect();
        let got = completion_curve_with(games.iter(), &group, 10, Pooling::GameMean);
        if used.is_empty() {
            assert!(got.is_err());
            continue;
        }
        for (g, curve) in got.unwrap().iter().enumerate() {
            for x in 0..=10 {
                let mean = used.iter().map(|(n, c)| c[g][x] as f64 / *n as f64).sum::<f64>() / used.len() as f64;
                assert!((curve.probabilities[x] - mean).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn longer_horizon_keeps_existing_offsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let m = support::random_masks(&mut rng, &IDS, 100);
        let Ok(short) = completion_curve([&m], &["A", "C"], 8) else { continue };
        let long = completion_curve([&m], &["A", "C"], 30).unwrap();
        for (s, l) in short.iter().zip(&long) {
            assert_eq!(s.probabilities[..], l.probabilities[..=8]);
        }
    }
}

#[test]
fn completion_equal_to_affordance_completes_at_offset_zero_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let mut m = support::random_masks(&mut rng, &IDS, 90);
        m.completed = m.afforded.clone();
        let Ok(curves) = completion_curve([&m], &["B"], 15) else { continue };
        assert_eq!(curves[0].probabilities[0], 1.0);
        assert!(curves[0].probabilities[1..].iter().all(|&p| p == 0.0));
    }
}

mod common;

use clinperturb::corpus::BioTag;
use clinperturb::metrics::*;
use clinperturb::perturb::rng::SplitMix64;
use common::{fleiss_by_pairs, random_matrix, t_pvalue_simpson};

#[test]
fn micro_f1_equals_accuracy_on_single_label_data() {
    let mut rng = SplitMix64::new(11);
    let classes: Vec<String> = ["TrAP", "TeRP", "TrCP", "TeCP", "PIP"].iter().map(|s| s.to_string()).collect();
    for _ in 0..100 {
        let n = 1 + rng.uniform(60);
        let k = 2 + rng.uniform(4);
        let draw = |rng: &mut SplitMix64| classes[rng.uniform(k)].clone();
        let gold: Vec<String> = (0..n).map(|_| draw(&mut rng)).collect();
        let pred: Vec<String> = (0..n).map(|_| draw(&mut rng)).collect();
        assert_eq!(micro_f1(&pred, &gold, &classes[..k]).unwrap(), accuracy(&pred, &gold).unwrap());
    }
}

#[test]
fn pearson_reference_and_invariances() {
    let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((r - 0.8).abs() < 1e-12, "{r}");
    let mut rng = SplitMix64::new(3);
    for _ in 0..50 {
        let x: Vec<f64> = (0..20).map(|_| rng.uniform(1000) as f64 / 7.0).collect();
        let y: Vec<f64> = (0..20).map(|_| rng.uniform(1000) as f64 / 3.0).collect();
        let base = pearson(&x, &y).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| 2.5 * v - 40.0).collect();
        assert!((pearson(&x, &shifted).unwrap() - base).abs() < 1e-12);
        let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
        assert!((pearson(&x, &flipped).unwrap() + base).abs() < 1e-12);
        assert!((pearson(&y, &x).unwrap() - base).abs() < 1e-12);
    }
    assert!(matches!(pearson(&[1.0, 2.0], &[3.0, 3.0]), Err(MetricError::ConstantInput)));
}

#[test]
fn t_distribution_against_numerical_integration() {
    let p = student_t_two_tailed(2.262, 9.0);
    assert!((p - 0.050).abs() <= 0.001, "{p}");
    for df in [1u32, 2, 3, 5, 9, 15, 30] {
        for t in [0.1, 0.7, 1.3, 2.262, 3.5, 6.0] {
            let oracle = t_pvalue_simpson(t, df);
            let got = student_t_two_tailed(t, df as f64);
            assert!((got - oracle).abs() < 1e-7, "df={df} t={t}: {got} vs {oracle}");
            assert_eq!(student_t_two_tailed(-t, df as f64), got);
        }
    }
}

#[test]
fn paired_ttest_against_hand_computation() {
    let a = [0.81, 0.77, 0.85, 0.79, 0.88, 0.74, 0.80, 0.83, 0.86, 0.78];
    let b = [0.79, 0.78, 0.82, 0.75, 0.86, 0.73, 0.76, 0.82, 0.85, 0.77];
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / 10.0;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
    let t = mean / (sd / 10f64.sqrt());
    let r = paired_ttest(&a, &b).unwrap();
    assert_eq!(r.df, 9);
    assert!((r.t - t).abs() < 1e-12);
    assert!((r.p_two_tailed - t_pvalue_simpson(t, 9)).abs() < 1e-7);
    assert!(matches!(paired_ttest(&a, &a), Err(MetricError::ExactTie)));
}

#[test]
fn fleiss_kappa_matches_pair_counting() {
    let mut rng = SplitMix64::new(2021);
    let mut checked = 0;
    while checked < 20 {
        let subjects = 5 + rng.uniform(30);
        let raters = 2 + rng.uniform(9);
        let cats = 2 + rng.uniform(3);
        let counts = random_matrix(&mut rng, subjects, raters, cats);
        let m = RatingMatrix::new(counts.clone()).unwrap();
        let Ok(k) = fleiss_kappa(&m) else { continue };
        let oracle = fleiss_by_pairs(&counts);
        assert!((k - oracle).abs() < 1e-12, "{k} vs {oracle} on {counts:?}");
        checked += 1;
    }
}

#[test]
fn fleiss_edge_cases() {
    let perfect = RatingMatrix::new(vec![vec![3, 0], vec![0, 3], vec![3, 0]]).unwrap();
    assert!((fleiss_kappa(&perfect).unwrap() - 1.0).abs() < 1e-12);
    let single = RatingMatrix::new(vec![vec![4, 0, 0], vec![4, 0, 0]]).unwrap();
    assert!(matches!(fleiss_kappa(&single), Err(MetricError::SingleCategory)));
    assert!(RatingMatrix::new(vec![vec![3, 0], vec![1, 1]]).is_err());
}

#[test]
fn landis_koch_bands() {
    assert_eq!(landis_koch_band(0.5054).unwrap(), "moderate");
    let cases = [(-0.1, "poor"), (0.0, "slight"), (0.2, "slight"), (0.21, "fair"), (0.61, "substantial"), (0.95, "almost perfect")];
    for (k, band) in cases {
        assert_eq!(landis_koch_band(k).unwrap(), band, "{k}");
    }
}

#[test]
fn entity_f1_macro_over_types() {
    let t = |s: &str| s.split(' ').map(|x| x.parse::<BioTag>().unwrap()).collect::<Vec<_>>();
    // problem: 1 of 1 found; test: 1 of 2 found, no false positives -> P=1, R=0.5, F1=2/3
    let gold = vec![t("B-problem I-problem O B-test O B-test")];
    let pred = vec![t("B-problem I-problem O B-test O O")];
    let f = entity_f1(&pred, &gold).unwrap();
    assert!((f - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12, "{f}");
    let gold = vec![t("B-problem O B-test O")];
    assert_eq!(entity_f1(&gold, &gold).unwrap(), 1.0);
    // boundary mismatch counts as a miss: problem 1.0, test 0.0
    let gold = vec![t("B-problem O B-test I-test O O")];
    let pred = vec![t("B-problem O B-test O O B-test")];
    let f = entity_f1(&pred, &gold).unwrap();
    assert!((f - 0.5).abs() < 1e-12, "{f}");
    let gold = vec![t("B-problem O B-test O B-test O B-test O")];
    let pred = vec![t("B-problem O B-test O O O B-test O")];
    // problem 1.0; test P=1, R=2/3 -> 0.8; mean 0.9
    assert!((entity_f1(&pred, &gold).unwrap() - 0.9).abs() < 1e-12);
    // per-type F1 1.0 and 0.5 -> 0.75
    let gold = vec![t("B-problem O B-test O B-test O")];
    let pred = vec![t("B-problem O O O B-test B-test")];
    assert!((entity_f1(&pred, &gold).unwrap() - 0.75).abs() < 1e-12);
}

#[test]
fn majority_vote_and_rounding() {
    let v = majority_vote(&[("same", 6), ("changed", 3), ("not", 1)]);
    assert_eq!(v.verdict, Some("same"));
    let tie = majority_vote(&[("same", 4), ("changed", 4), ("not", 2)]);
    assert!(tie.tie && tie.verdict.is_none());
    assert_eq!(format2(-6.1143), "-6.11");
    assert_eq!(format2(-6.105), "-6.11");
    assert_eq!(format2(2.675), "2.68");
    assert_eq!(format2(-0.001), "0.00");
    assert_eq!(round2(0.125), 0.13);
}

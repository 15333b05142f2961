use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use xgeoml::explain::{
    lime_explain, partial_dependence, shapley_exact, tree_importance, Binning, LimeConfig,
};
use xgeoml::{pearson_correlation, LearnerConfig, Matrix, WeightedLearner};

fn normal_rows(rng: &mut ChaCha8Rng, m: usize, d: usize) -> Matrix {
    Matrix::from_vec(m, d, (0..m * d).map(|_| rng.sample(StandardNormal)).collect())
}

fn sd(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn lime_spread_shrinks_with_sample_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let local = normal_rows(&mut rng, 60, 3);
    let x = [0.3, -0.4, 0.8];
    let f = |z: &[f64]| z[0].sin() + z[1] * z[1] - 0.5 * z[0] * z[2] + z[2].powi(3) / 3.0;
    let slopes_at = |n: usize| -> Vec<Vec<f64>> {
        let cfg = LimeConfig {
            n_samples: n,
            ..LimeConfig::default()
        };
        (0..40)
            .map(|s| lime_explain(&f, &x, &local, s, &cfg).unwrap().slopes)
            .collect()
    };
    let (small, large) = (slopes_at(250), slopes_at(4000));
    for j in 0..3 {
        let a: Vec<f64> = small.iter().map(|s| s[j]).collect();
        let b: Vec<f64> = large.iter().map(|s| s[j]).collect();
        // sixteen times the samples should cut the spread about fourfold
        let ratio = sd(&a) / sd(&b);
        assert!(ratio > 2.0 && ratio < 8.0, "feature {j}: ratio {ratio}");
    }
}

#[test]
fn partial_dependence_recovers_additive_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let local = normal_rows(&mut rng, 150, 4);
    let parts: [fn(f64) -> f64; 4] = [|t| t * t, |t| t.sin(), |t| 0.5 * t.powi(3), |t| -2.0 * t];
    let f = |z: &[f64]| z.iter().zip(&parts).map(|(v, g)| g(*v)).sum::<f64>();
    for binning in [Binning::Percentile, Binning::EqualWidth] {
        for (j, g) in parts.iter().enumerate() {
            let c = partial_dependence(&f, &local, j, 12, binning).unwrap();
            let shape: Vec<f64> = c.grid.iter().map(|t| g(*t)).collect();
            assert!(pearson_correlation(&c.means, &shape).unwrap() >= 0.95);
            // additive models give the component up to a constant
            let offset = c.means[0] - shape[0];
            for (m, s) in c.means.iter().zip(&shape) {
                assert!((m - s - offset).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn shapley_of_a_plane() {
    let f = |z: &[f64]| 2.0 * z[0] + 3.0 * z[1];
    let bg = Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]);
    let s = shapley_exact(&f, &[1.0, 1.0], &bg, &[1.0, 1.0]).unwrap();
    assert_eq!(s.base_value, 0.0);
    assert!((s.values[0] - 2.0).abs() < 1e-12 && (s.values[1] - 3.0).abs() < 1e-12);
}

#[test]
fn boosted_importance_follows_signal_strength() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = normal_rows(&mut rng, 300, 2);
    let y: Vec<f64> = x.rows_iter().map(|r| 5.0 * r[0] + 0.1 * r[1]).collect();
    let model = LearnerConfig::gbt().fit(&x, &y, &vec![1.0; 300], 0).unwrap();
    let imp = tree_importance(&model).unwrap();
    assert!(imp[0] > imp[1], "{imp:?}");
    assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    // oracle: sum the weighted SSE reduction of every split by hand
    let raw = model.raw_importance().unwrap();
    let splits = model.splits().unwrap();
    let mut by_feature = [0.0; 2];
    for s in &splits {
        by_feature[s.feature] += s.gain;
    }
    for j in 0..2 {
        assert!((by_feature[j] - raw[j]).abs() <= 1e-9 * raw[j].abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shap_is_efficient_for_boosted_trees(seed in 0u64..10_000, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normal_rows(&mut rng, 40, d);
        let y: Vec<f64> = x.rows_iter().map(|r| r.iter().enumerate().map(|(j, v)| (j as f64 + 1.0) * v * v).sum()).collect();
        let w: Vec<f64> = (0..40).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut l = LearnerConfig::gbt();
        if let xgeoml::LearnerKind::Gbt(p) = &mut l.kind {
            p.n_rounds = 20;
        }
        let model = l.fit(&x, &y, &w, seed).unwrap();
        let point = x.row(0).to_vec();
        let s = shapley_exact(&model, &point, &x, &w).unwrap();
        let total: f64 = s.values.iter().sum();
        prop_assert!((total - (s.prediction - s.base_value)).abs() < 1e-9);
        prop_assert!((s.prediction - xgeoml::Predictor::predict_one(&model, &point)).abs() < 1e-12);
    }
}

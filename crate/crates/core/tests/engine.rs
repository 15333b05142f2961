use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use xgeoml::engine::ExplainConfig;
use xgeoml::explain::LimeConfig;
use xgeoml::synth::{generate, ResponseForm, SynthSpec};
use xgeoml::{
    pearson_correlation, weights_for, Bandwidth, BandwidthMode, DistanceIndex, Engine, KernelKind,
    KernelSpec, LearnerConfig, LearnerKind, Matrix, SpatialDataset,
};

fn synth(side: usize, form: ResponseForm, noise: f64, seed: u64) -> SpatialDataset {
    let spec = SynthSpec {
        grid_side: side,
        seed,
        noise_sd: noise,
        response_form: form,
        ..SynthSpec::default()
    };
    generate(&spec).unwrap().0
}

fn adaptive(kind: KernelKind, k: usize) -> KernelSpec {
    KernelSpec::new(kind, Bandwidth::Adaptive(k))
}

fn small_gbt() -> LearnerConfig {
    let mut l = LearnerConfig::gbt();
    if let LearnerKind::Gbt(p) = &mut l.kind {
        p.n_rounds = 30;
    }
    l
}

/// Weighted least squares with intercept via normal equations.
fn wls_oracle(x: &Matrix, y: &[f64], w: &[f64]) -> Vec<f64> {
    let (n, d) = (x.nrows(), x.ncols());
    let a = DMatrix::from_fn(n, d + 1, |i, j| if j < d { x.get(i, j) } else { 1.0 });
    let wd = DMatrix::from_diagonal(&DVector::from_column_slice(w));
    let xtwx = a.transpose() * &wd * &a;
    let xtwy = a.transpose() * &wd * DVector::from_column_slice(y);
    xtwx.lu().solve(&xtwy).unwrap().iter().copied().collect()
}

#[test]
fn linear_pipeline_is_classical_gwr() {
    let ds = synth(12, ResponseForm::Linear, 0.5, 3);
    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, 2, 1).unwrap();
    for kernel in [
        adaptive(KernelKind::Binary, 30),
        adaptive(KernelKind::Gaussian, 25),
        KernelSpec::new(KernelKind::GaussianBinary, Bandwidth::Fixed(4.0)),
    ] {
        let field = engine
            .explain_all(&kernel, &LearnerConfig::linear(), &ExplainConfig::none())
            .unwrap();
        let coef = field.coefficients.unwrap();
        let gwr = engine.gwr_coefficient_surface(&kernel).unwrap().values;
        for i in 0..ds.len() {
            let w = weights_for(&index, &kernel, i).unwrap().weights;
            let want = wls_oracle(ds.features(), ds.response(), &w);
            for (j, b) in want.iter().enumerate() {
                let tol = 1e-8 * b.abs().max(1.0);
                assert!((coef.get(i, j) - b).abs() <= tol, "{kernel} point {i} coef {j}");
                assert!((gwr.get(i, j) - b).abs() <= tol);
            }
        }
    }
}

#[test]
fn loo_prediction_ignores_own_response() {
    let ds = synth(8, ResponseForm::Nonlinear, 0.5, 5);
    let index = DistanceIndex::build(&ds);
    let kernel = adaptive(KernelKind::Binary, 20);
    for learner in [LearnerConfig::linear(), small_gbt()] {
        let base = Engine::new(&ds, &index, 1, 7).unwrap().loo_evaluate(&kernel, &learner).unwrap();
        for i in [0, 17, 40, 63] {
            let mut y = ds.response().to_vec();
            y[i] += 100.0;
            let moved = ds.with_response(y).unwrap();
            let r = Engine::new(&moved, &index, 1, 7).unwrap().loo_evaluate(&kernel, &learner).unwrap();
            assert_eq!(r.predictions[i].to_bits(), base.predictions[i].to_bits());
            // other points do see the change
            assert!((0..ds.len()).any(|k| k != i && r.predictions[k] != base.predictions[k]));
        }
    }
}

#[test]
fn noise_free_constant_coefficients_predict_perfectly() {
    let n = 100;
    let coords: Vec<[f64; 2]> = (0..n).map(|i| [(i % 10) as f64, (i / 10) as f64]).collect();
    let x: Vec<f64> = (0..n * 2).map(|k| ((k * 37 % 101) as f64 / 50.0) - 1.0 + (k as f64).sin()).collect();
    let x = Matrix::from_vec(n, 2, x);
    let y: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * x.get(i, 0) - x.get(i, 1)).collect();
    let ids = (0..n).map(|i| i.to_string()).collect();
    let ds = SpatialDataset::new(ids, coords, x, vec!["a".into(), "b".into()], y).unwrap();
    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, 1, 0).unwrap();
    for kernel in [
        KernelSpec::new(KernelKind::Gaussian, Bandwidth::Fixed(3.0)),
        adaptive(KernelKind::Binary, 12),
        adaptive(KernelKind::GaussianBinary, 15),
    ] {
        let r = engine.loo_evaluate(&kernel, &LearnerConfig::linear()).unwrap();
        assert!(r.r2 >= 0.999, "{kernel}: {}", r.r2);
    }
}

#[test]
fn mean_predictor_scores_below_zero() {
    let ds = synth(7, ResponseForm::Linear, 0.5, 9);
    let n = ds.len();
    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, 1, 0).unwrap();
    let learner = LearnerConfig::new(LearnerKind::Knn { k_model: n - 1 });
    let r = engine.loo_evaluate(&adaptive(KernelKind::Binary, n), &learner).unwrap();
    assert!(r.r2 <= 0.0, "{}", r.r2);
    // oracle: mean of the other n - 1 responses
    let y = ds.response();
    let total: f64 = y.iter().sum();
    for i in 0..n {
        assert!((r.predictions[i] - (total - y[i]) / (n - 1) as f64).abs() < 1e-9);
    }
}

#[test]
fn degenerate_neighborhoods_abort() {
    let ds = synth(6, ResponseForm::Linear, 0.5, 1);
    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, 1, 0).unwrap();
    // three neighbors after dropping the target cannot fit four slopes and an intercept
    assert!(engine
        .loo_evaluate(&adaptive(KernelKind::Binary, 4), &LearnerConfig::linear())
        .is_err());
}

#[test]
fn explanation_fields_hold_their_invariants() {
    let ds = synth(10, ResponseForm::Nonlinear, 0.5, 2);
    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, 2, 4).unwrap();
    let cfg = ExplainConfig {
        lime: Some(LimeConfig {
            n_samples: 200,
            ..LimeConfig::default()
        }),
        ..ExplainConfig::default()
    };
    let f = engine.explain_all(&adaptive(KernelKind::Binary, 40), &small_gbt(), &cfg).unwrap();
    assert!(f.failed.is_empty());
    let (shap, base, imp) = (f.shap.unwrap(), f.shap_base.unwrap(), f.importance.unwrap());
    for i in 0..ds.len() {
        let s: f64 = shap.row(i).iter().sum();
        assert!((s - (f.fitted[i] - base[i])).abs() < 1e-9);
        let t: f64 = imp.row(i).iter().sum();
        assert!((t - 1.0).abs() < 1e-9 || t == 0.0);
        assert!(imp.row(i).iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn lime_of_local_linear_models_matches_coefficients() {
    let ds = synth(12, ResponseForm::Linear, 0.0, 8);
    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, 1, 0).unwrap();
    let cfg = ExplainConfig {
        shap: false,
        ..ExplainConfig::default()
    };
    let f = engine
        .explain_all(&adaptive(KernelKind::Binary, 40), &LearnerConfig::linear(), &cfg)
        .unwrap();
    let (lime, coef) = (f.lime.unwrap(), f.coefficients.unwrap());
    for j in 0..ds.n_features() {
        let r = pearson_correlation(&lime.column(j), &coef.column(j)).unwrap();
        assert!(r >= 0.99, "feature {j}: {r}");
    }
}

#[test]
fn smoothing_recovers_varying_slopes() {
    let spec = SynthSpec {
        grid_side: 30,
        noise_sd: 0.0,
        ..SynthSpec::default()
    };
    let (ds, truth) = generate(&spec).unwrap();
    let (n, d) = (ds.len(), ds.n_features());
    let phi = Matrix::from_vec(
        n,
        d,
        (0..n * d)
            .map(|k| truth.values.get(k / d, k % d) * ds.features().get(k / d, k % d))
            .collect(),
    );
    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, 2, 0).unwrap();
    let kernel = adaptive(KernelKind::GaussianBinary, 30);
    let s = engine.gwr_smooth_attributions(&kernel, &phi).unwrap();
    assert!(s.failed.is_empty());
    for j in 0..d {
        let r = pearson_correlation(&s.values.column(j), &truth.values.column(j)).unwrap();
        assert!(r >= 0.99, "surface {j}: {r}");
    }
    let zero = engine.gwr_smooth_attributions(&kernel, &Matrix::zeros(n, d)).unwrap();
    assert!(zero.values.as_slice().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn scan_picks_the_best_of_its_own_curve() {
    let ds = synth(9, ResponseForm::Nonlinear, 0.5, 6);
    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, 1, 0).unwrap();
    let l = LearnerConfig::linear();
    let one = engine
        .scan_bandwidth(KernelKind::Gaussian, BandwidthMode::Fixed, 1.0, &l, &[3.0], None)
        .unwrap();
    assert_eq!(one.chosen, 3.0);
    assert_eq!(one.points.len(), 1);
    let s = engine
        .scan_bandwidth(KernelKind::Binary, BandwidthMode::Adaptive, 1.0, &l, &[15.0, 30.0, 45.0, 60.0, 81.0], None)
        .unwrap();
    let best = s
        .points
        .iter()
        .filter_map(|p| p.loo_r2.map(|r| (p.bandwidth, r)))
        .fold((f64::NAN, f64::NEG_INFINITY), |b, p| if p.1 > b.1 { p } else { b });
    assert_eq!(s.chosen, best.0);
    assert_eq!(s.chosen_r2(), Some(best.1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fields_do_not_depend_on_thread_count(seed in 0u64..1000, k in 15usize..40) {
        let ds = synth(8, ResponseForm::Nonlinear, 0.5, seed);
        let index = DistanceIndex::build(&ds);
        let kernel = adaptive(KernelKind::GaussianBinary, k);
        let cfg = ExplainConfig {
            lime: Some(LimeConfig { n_samples: 100, ..LimeConfig::default() }),
            ..ExplainConfig::default()
        };
        let mut learner = small_gbt();
        if let LearnerKind::Gbt(p) = &mut learner.kind {
            p.n_rounds = 10;
            p.subsample = 0.8;
        }
        let one = Engine::new(&ds, &index, 1, seed).unwrap();
        let many = Engine::new(&ds, &index, 4, seed).unwrap();
        prop_assert_eq!(
            one.explain_all(&kernel, &learner, &cfg).unwrap(),
            many.explain_all(&kernel, &learner, &cfg).unwrap()
        );
        prop_assert_eq!(
            one.loo_evaluate(&kernel, &learner).unwrap(),
            many.loo_evaluate(&kernel, &learner).unwrap()
        );
    }
}

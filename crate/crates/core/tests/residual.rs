use proptest::prelude::*;
use tensorreg::residual::{
    correlation_pca, flip_flop, residuals_from_fit, to_correlation, FlipFlopOptions, SampleModePolicy,
};
use tensorreg::simulation::{rng_for, standard_normal_tensor};
use tensorreg::{fit, DenseTensor, Matrix, RegressionSpec, TuckerRank};

fn independent() -> FlipFlopOptions {
    FlipFlopOptions { sample_mode: SampleModePolicy::Independent, ..FlipFlopOptions::default() }
}

#[test]
fn white_noise_has_no_mode_correlation() {
    let e = standard_normal_tensor(vec![20000, 4, 3], &mut rng_for(1, 0)).unwrap();
    let set = flip_flop(&e, &independent()).unwrap();
    assert!(set.converged);
    for c in &set.correlations {
        let m = &c.matrix;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    assert!(m[(i, j)].abs() < 0.05, "mode {} ({},{}) = {}", c.mode, i, j, m[(i, j)]);
                }
            }
        }
    }
}

#[test]
fn change_metric_decreases_to_tolerance() {
    let spec = tensorreg::simulation::ArrayNormalSpec { shape: vec![3000, 5, 4], rhos: vec![0.0, 0.7, 0.3], seed: 2 };
    let e = tensorreg::simulation::generate_array_normal(&spec).unwrap();
    let set = flip_flop(&e, &independent()).unwrap();
    assert!(set.converged);
    let trace = &set.change_trace;
    assert!(*trace.last().unwrap() < 1e-8);
    // after the first sweep the iteration contracts
    for w in trace[1..].windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-6), "{:?}", trace);
    }
}

#[test]
fn every_output_is_a_correlation_matrix() {
    let e = standard_normal_tensor(vec![40, 3, 5], &mut rng_for(3, 0)).unwrap();
    let skew = e.zip_with(&e.map(|v| v * v), |a, b| a + 0.3 * b).unwrap();
    let set = flip_flop(&skew, &FlipFlopOptions::default()).unwrap();
    assert_eq!(set.correlations.len(), 3);
    for c in &set.correlations {
        let m = &c.matrix;
        for i in 0..m.nrows() {
            assert_eq!(m[(i, i)], 1.0);
            for j in 0..m.ncols() {
                assert_eq!(m[(i, j)], m[(j, i)]);
                assert!(m[(i, j)].abs() <= 1.0);
            }
        }
        let min = m.clone().symmetric_eigen().eigenvalues.min();
        assert!(min > -1e-10, "mode {} eigenvalue {}", c.mode, min);
    }
}

#[test]
fn residuals_match_elementwise_subtraction() {
    let mut rng = rng_for(4, 0);
    let x = standard_normal_tensor(vec![25, 3, 2], &mut rng).unwrap();
    let y = standard_normal_tensor(vec![25, 4], &mut rng).unwrap();
    let f = fit(&x, &y, &RegressionSpec::new(TuckerRank::new(vec![2, 1], vec![2]))).unwrap();
    let e = residuals_from_fit(&f, &x, &y).unwrap();
    let yhat = f.predict(&x).unwrap();
    for (k, v) in e.data().iter().enumerate() {
        assert_eq!(*v, y.data()[k] - yhat.data()[k]);
    }
    assert!(residuals_from_fit(&f, &x, &y.select_samples(0..10).unwrap()).is_err());
}

#[test]
fn perfect_and_intercept_only_fits() {
    let mut rng = rng_for(5, 0);
    let x = standard_normal_tensor(vec![30, 3], &mut rng).unwrap();
    let b = standard_normal_tensor(vec![3, 2], &mut rng).unwrap();
    let y = tensorreg::simulation::contract_regressor(&x, &b).unwrap();
    let spec = RegressionSpec::new(TuckerRank::new(vec![3], vec![2])).with_center(false);
    let f = fit(&x, &y, &spec).unwrap();
    assert!(residuals_from_fit(&f, &x, &y).unwrap().squared_norm().sqrt() < 1e-10);

    let centred = y.sub_broadcast(&y.sample_mean()).unwrap();
    let mut g = fit(&x, &centred, &spec.clone().with_center(true)).unwrap();
    g.coefficient.core = g.coefficient.core.scale(0.0);
    g.intercept = centred.sample_mean();
    let e = residuals_from_fit(&g, &x, &centred).unwrap();
    assert!(e.sub(&centred).unwrap().squared_norm().sqrt() < 1e-10);
}

#[test]
fn biplot_separates_two_correlated_blocks() {
    let mut corr = Matrix::identity(4, 4);
    for (i, j) in [(0, 1), (2, 3)] {
        corr[(i, j)] = 0.9;
        corr[(j, i)] = 0.9;
    }
    let pca = correlation_pca(&corr).unwrap();
    let row = |i: usize| pca.loadings.row(i).into_owned();
    let dist = |i: usize, j: usize| (row(i) - row(j)).norm();
    let within = dist(0, 1).max(dist(2, 3));
    let between = [(0, 2), (0, 3), (1, 2), (1, 3)].iter().map(|&(i, j)| dist(i, j)).fold(f64::INFINITY, f64::min);
    assert!(within < between, "within {} between {}", within, between);
}

#[test]
fn two_component_reconstruction_error_is_the_tail() {
    let a = tensorreg::simulation::standard_normal_matrix(6, 6, &mut rng_for(6, 0));
    let corr = to_correlation(&(&a * a.transpose() + Matrix::identity(6, 6)));
    let pca = correlation_pca(&corr).unwrap();
    let approx = &pca.loadings * pca.loadings.transpose();
    let err = (&corr - approx).norm();
    let tail = pca.eigenvalues[2..].iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((err - tail).abs() < 1e-10, "err {} tail {}", err, tail);
    assert!(pca.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    for c in 0..2 {
        let col = pca.loadings.column(c);
        let pivot = col.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
        assert!(pivot > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flip_flop_ignores_overall_scale(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let e = standard_normal_tensor(vec![60, 3, 4], &mut rng_for(seed, 0)).unwrap();
        let e = e.zip_with(&DenseTensor::from_fn(vec![60, 3, 4], |i| (i[1] + i[2]) as f64 * 0.2).unwrap(), |a, b| a * (1.0 + b)).unwrap();
        let a = flip_flop(&e, &independent()).unwrap();
        let b = flip_flop(&e.scale(scale), &independent()).unwrap();
        for (ca, cb) in a.correlations.iter().zip(&b.correlations) {
            prop_assert!((&ca.matrix - &cb.matrix).norm() < 1e-8);
        }
    }
}

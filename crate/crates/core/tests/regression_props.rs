use tensorreg::regression::AlsState;
use tensorreg::simulation::{random_tucker, rng_for, standard_normal_matrix, standard_normal_tensor};
use tensorreg::{fit, DenseTensor, Matrix, RegressionSpec, TuckerCoefficient, TuckerRank};

fn spec(rank: TuckerRank) -> RegressionSpec {
    RegressionSpec::new(rank).with_tol(1e-14).with_max_iters(2000)
}

fn rel(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.sub(b).unwrap().squared_norm().sqrt() / b.squared_norm().sqrt()
}

fn linear_data(n: usize, in_shape: &[usize], b: &DenseTensor, noise: f64, seed: u64) -> (DenseTensor, DenseTensor) {
    let mut xs = vec![n];
    xs.extend_from_slice(in_shape);
    let x = standard_normal_tensor(xs, &mut rng_for(seed, 1)).unwrap();
    let signal = tensorreg::simulation::contract_regressor(&x, b).unwrap();
    let e = standard_normal_tensor(signal.shape().to_vec(), &mut rng_for(seed, 2)).unwrap();
    (x, signal.add(&e.scale(noise)).unwrap())
}

#[test]
fn noise_free_tucker_coefficient_is_recovered() {
    let rank = TuckerRank::new(vec![2, 2], vec![2]);
    let b = random_tucker(&[4, 3], &[5], &rank, &mut rng_for(11, 0)).unwrap().reconstruct().unwrap();
    let (x, y) = linear_data(80, &[4, 3], &b, 0.0, 11);
    let f = fit(&x, &y, &spec(rank).with_center(false)).unwrap();
    assert!(rel(&f.slope().unwrap(), &b) < 1e-6);
}

#[test]
fn identity_factors_make_the_core_step_ols() {
    let mut rng = rng_for(12, 0);
    let x = standard_normal_tensor(vec![40, 4], &mut rng).unwrap();
    let y = standard_normal_tensor(vec![40, 3], &mut rng).unwrap();
    let start = TuckerCoefficient::new(
        standard_normal_tensor(vec![4, 3], &mut rng).unwrap(),
        vec![Matrix::identity(4, 4)],
        vec![Matrix::identity(3, 3)],
    )
    .unwrap();
    let mut state = AlsState::new(x.clone(), y.clone(), start, 0.0, false).unwrap();
    state.update_core().unwrap();
    let (xm, ym) = (x.to_matrix().unwrap(), y.to_matrix().unwrap());
    let ols = (xm.transpose() * &xm).lu().solve(&(xm.transpose() * &ym)).unwrap();
    let g = state.coefficient.core.to_matrix().unwrap();
    assert!((g - &ols).norm() < 1e-10 * ols.norm());
}

#[test]
fn converged_fit_is_a_fixed_point_of_every_block_update() {
    let rank = TuckerRank::new(vec![2], vec![2]);
    let b = random_tucker(&[5], &[4], &rank, &mut rng_for(13, 0)).unwrap().reconstruct().unwrap();
    let (x, y) = linear_data(60, &[5], &b, 0.3, 13);
    let f = fit(&x, &y, &spec(rank).with_center(false).with_tol(1e-15).with_max_iters(3000)).unwrap();
    let before = f.slope().unwrap();
    for block in 0..3 {
        let mut state = AlsState::new(x.clone(), y.clone(), f.coefficient.clone(), 0.0, false).unwrap();
        match block {
            0 => state.update_input_factor(0).unwrap(),
            1 => state.update_output_factor(0).unwrap(),
            _ => state.update_core().unwrap(),
        }
        let after = state.coefficient.reconstruct().unwrap();
        assert!(rel(&after, &before) < 1e-10, "block {} moved by {}", block, rel(&after, &before));
    }
}

#[test]
fn heavy_penalty_shrinks_the_first_update() {
    let rank = TuckerRank::new(vec![2, 2], vec![2]);
    let mut rng = rng_for(14, 0);
    let x = standard_normal_tensor(vec![30, 3, 4], &mut rng).unwrap();
    let y = standard_normal_tensor(vec![30, 3], &mut rng).unwrap();
    let start = random_tucker(&[3, 4], &[3], &rank, &mut rng).unwrap();
    let norm_after = |lambda: f64| {
        let mut s = AlsState::new(x.clone(), y.clone(), start.clone(), lambda, false).unwrap();
        s.update_input_factor(0).unwrap();
        s.coefficient.input_factors[0].norm()
    };
    let norms: Vec<f64> = [0.0, 1.0, 100.0, 1e8].iter().map(|&l| norm_after(l)).collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0]), "{:?}", norms);
    assert!(norms[3] < 1e-6 * norms[0]);
}

#[test]
fn one_sweep_norm_decreases_with_lambda() {
    let rank = TuckerRank::new(vec![2, 2], vec![2]);
    let b = random_tucker(&[3, 4], &[3], &rank, &mut rng_for(15, 0)).unwrap().reconstruct().unwrap();
    let (x, y) = linear_data(40, &[3, 4], &b, 1.0, 15);
    let norms: Vec<f64> = [0.0, 0.5, 2.0, 10.0, 100.0]
        .iter()
        .map(|&l| {
            let s = spec(rank.clone()).with_lambda(l).with_max_iters(1).with_seed(3);
            fit(&x, &y, &s).unwrap().slope().unwrap().squared_norm()
        })
        .collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{:?}", norms);
}

#[test]
fn intercept_properties() {
    let rank = TuckerRank::new(vec![3], vec![2]);
    let b = random_tucker(&[3], &[2], &rank, &mut rng_for(16, 0)).unwrap().reconstruct().unwrap();
    let (x, y) = linear_data(50, &[3], &b, 0.5, 16);
    // exactly centred inputs give a zero intercept
    let (xc, yc) = (x.sub_broadcast(&x.sample_mean()).unwrap(), y.sub_broadcast(&y.sample_mean()).unwrap());
    let f0 = fit(&xc, &yc, &spec(rank.clone())).unwrap();
    assert!(f0.intercept.squared_norm().sqrt() < 1e-10);
    let f1 = fit(&x, &y, &spec(rank.clone())).unwrap();
    let shifted = y.map(|v| v + 3.25);
    let f2 = fit(&x, &shifted, &spec(rank)).unwrap();
    for (a, b) in f1.intercept.data().iter().zip(f2.intercept.data()) {
        assert!((b - a - 3.25).abs() < 1e-8);
    }
    // closed form in the matrix case
    let (xm, ym) = (x.to_matrix().unwrap(), y.to_matrix().unwrap());
    let want = ym.row_mean() - xm.row_mean() * f1.slope().unwrap().to_matrix().unwrap();
    for (a, b) in want.iter().zip(f1.intercept.data()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn prediction_consistency() {
    let rank = TuckerRank::new(vec![2, 2], vec![2, 1]);
    let b = random_tucker(&[3, 4], &[3, 2], &rank, &mut rng_for(17, 0)).unwrap().reconstruct().unwrap();
    let (x, y) = linear_data(40, &[3, 4], &b, 0.5, 17);
    let f = fit(&x, &y, &spec(rank)).unwrap();
    let yhat = f.predict(&x).unwrap();
    let ssr = yhat.sub(&y).unwrap().squared_norm();
    assert!((ssr - f.ssr).abs() <= 1e-9 * f.ssr);
    for i in [0, 17, 39] {
        let one = f.predict(&x.sample(i).unwrap()).unwrap();
        let from_batch = yhat.sample(i).unwrap();
        assert!(rel(&one, &from_batch) < 1e-12);
    }
    let zeros = f.predict(&DenseTensor::zeros(vec![2, 3, 4]).unwrap()).unwrap();
    for i in 0..2 {
        assert_eq!(zeros.observation(i).unwrap(), f.intercept.observation(0).unwrap());
    }
}

#[test]
fn joint_sample_permutation_leaves_the_fit_unchanged() {
    let rank = TuckerRank::new(vec![2, 2], vec![2]);
    let b = random_tucker(&[3, 4], &[3], &rank, &mut rng_for(18, 0)).unwrap().reconstruct().unwrap();
    let (x, y) = linear_data(45, &[3, 4], &b, 0.5, 18);
    let perm: Vec<usize> = (0..45).map(|i| (i * 7 + 3) % 45).collect();
    let s = spec(rank).with_max_iters(300);
    let a = fit(&x, &y, &s).unwrap().slope().unwrap();
    let c = fit(&x.gather_samples(&perm).unwrap(), &y.gather_samples(&perm).unwrap(), &s).unwrap().slope().unwrap();
    assert!(rel(&c, &a) < 1e-10);
}

#[test]
fn single_updates_never_raise_the_objective() {
    for seed in 0..50u64 {
        let mut rng = rng_for(seed, 5);
        let x = standard_normal_tensor(vec![20, 3, 2], &mut rng).unwrap();
        let y = standard_normal_tensor(vec![20, 2], &mut rng).unwrap();
        let rank = TuckerRank::new(vec![2, 2], vec![1]);
        let lambda = if seed % 2 == 0 { 0.0 } else { 0.7 };
        let start = random_tucker(&[3, 2], &[2], &rank, &mut rng).unwrap();
        let mut s = AlsState::new(x, y, start, lambda, false).unwrap();
        for k in 0..2 {
            let before = s.objective();
            s.update_input_factor(k).unwrap();
            assert!(s.objective() <= before + 1e-10 * before.max(1.0), "seed {} mode {}", seed, k);
        }
        let before = s.objective();
        s.update_output_factor(0).unwrap();
        assert!(s.objective() <= before + 1e-10 * before.max(1.0));
    }
}

#[test]
fn perturbing_the_update_never_helps() {
    // numeric oracle: the U update is the exact minimiser, so random
    // perturbations of it can only increase the objective
    let mut rng = rng_for(19, 0);
    let x = standard_normal_tensor(vec![20, 3, 2], &mut rng).unwrap();
    let y = standard_normal_tensor(vec![20, 2], &mut rng).unwrap();
    let rank = TuckerRank::new(vec![2, 2], vec![1]);
    let start = random_tucker(&[3, 2], &[2], &rank, &mut rng).unwrap();
    let mut s = AlsState::new(x.clone(), y.clone(), start, 0.4, false).unwrap();
    s.update_input_factor(0).unwrap();
    let best = s.objective();
    for k in 0..40 {
        let mut c = s.coefficient.clone();
        c.input_factors[0] += standard_normal_matrix(3, 2, &mut rng_for(k, 9)) * 1e-3;
        let trial = AlsState::new(x.clone(), y.clone(), c, 0.4, false).unwrap();
        assert!(trial.objective() >= best - 1e-12);
    }
}

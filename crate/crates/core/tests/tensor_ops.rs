use proptest::prelude::*;
use tensorreg::simulation::{rng_for, standard_normal_matrix, standard_normal_tensor};
use tensorreg::tensor::{
    contracted_product, fold, frobenius_norm, matricize, n_mode_product, tucker_reconstruct, unfold, vectorize,
    DenseTensor, Matrix, ModePartition,
};

fn rel_diff(a: &DenseTensor, b: &DenseTensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.sub(b).unwrap().squared_norm().sqrt() / b.squared_norm().sqrt().max(1e-300)
}

/// Row index over `rows` modes and column index over `cols` modes, first listed mode fastest.
fn brute_matricize(t: &DenseTensor, rows: &[usize], cols: &[usize]) -> Matrix {
    let s = t.shape();
    let nr: usize = rows.iter().map(|&m| s[m]).product();
    let nc: usize = cols.iter().map(|&m| s[m]).product();
    let mut out = Matrix::zeros(nr, nc);
    for lin in 0..t.len() {
        let idx = t.multi_index(lin);
        let (mut r, mut stride) = (0, 1);
        for &m in rows {
            r += idx[m] * stride;
            stride *= s[m];
        }
        let (mut c, mut stride) = (0, 1);
        for &m in cols {
            c += idx[m] * stride;
            stride *= s[m];
        }
        out[(r, c)] = t.get(&idx);
    }
    out
}

#[test]
fn matricize_matches_enumeration_oracle() {
    let t = DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
    let p = ModePartition::new(vec![1], vec![0, 2], 3).unwrap();
    let m = matricize(&t, &p).unwrap();
    assert_eq!(m, brute_matricize(&t, &[1], &[0, 2]));
    assert_eq!(m, Matrix::from_row_slice(2, 4, &[1.0, 2.0, 5.0, 6.0, 3.0, 4.0, 7.0, 8.0]));
}

#[test]
fn vectorize_equals_full_row_matricization() {
    let t = standard_normal_tensor(vec![3, 2, 2], &mut rng_for(1, 0)).unwrap();
    let full = matricize(&t, &ModePartition::new(vec![0, 1, 2], vec![], 3).unwrap()).unwrap();
    assert_eq!(full.as_slice(), vectorize(&t).as_slice());
}

#[test]
fn n_mode_product_matches_unfolded_identity() {
    let mut rng = rng_for(2, 0);
    let t = standard_normal_tensor(vec![3, 4, 2], &mut rng).unwrap();
    let v = standard_normal_matrix(5, 4, &mut rng);
    let got = n_mode_product(&t, &v, 1).unwrap();
    let p = ModePartition::mode_n(1, 3).unwrap();
    let want = fold(&(&v * unfold(&t, 1).unwrap()), &p, &[3, 5, 2]).unwrap();
    assert!(rel_diff(&got, &want) < 1e-14);
}

#[test]
fn contraction_matches_triple_loop() {
    let mut rng = rng_for(3, 0);
    let a = standard_normal_tensor(vec![2, 3, 4], &mut rng).unwrap();
    let b = standard_normal_tensor(vec![3, 5], &mut rng).unwrap();
    let got = contracted_product(&a, &b, &[1], &[0]).unwrap();
    assert_eq!(got.shape(), &[2, 4, 5]);
    let want = DenseTensor::from_fn(vec![2, 4, 5], |i| (0..3).map(|k| a.get(&[i[0], k, i[1]]) * b.get(&[k, i[2]])).sum())
        .unwrap();
    assert!(rel_diff(&got, &want) < 1e-14);
}

#[test]
fn full_self_contraction_is_squared_norm() {
    let t = standard_normal_tensor(vec![2, 3, 2], &mut rng_for(4, 0)).unwrap();
    let c = contracted_product(&t, &t, &[0, 1, 2], &[0, 1, 2]).unwrap();
    assert_eq!(c.shape(), &[1]);
    assert!((c.data()[0] - t.squared_norm()).abs() < 1e-12 * t.squared_norm());
}

#[test]
fn tucker_matrix_case_is_ugvt() {
    let mut rng = rng_for(5, 0);
    let g = standard_normal_tensor(vec![2, 3], &mut rng).unwrap();
    let u = standard_normal_matrix(4, 2, &mut rng);
    let v = standard_normal_matrix(5, 3, &mut rng);
    let got = tucker_reconstruct(&g, &[u.clone(), v.clone()]).unwrap().to_matrix().unwrap();
    let want = &u * g.to_matrix().unwrap() * v.transpose();
    assert!((got - &want).norm() < 1e-13 * want.norm());
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=5, 2..=4)
}

fn tensor_strategy() -> impl Strategy<Value = DenseTensor> {
    (shape_strategy(), any::<u64>()).prop_map(|(s, seed)| standard_normal_tensor(s, &mut rng_for(seed, 0)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fold_inverts_any_partition(t in tensor_strategy(), perm_seed in any::<u64>(), split in 0usize..=4) {
        let n = t.order();
        let mut modes: Vec<usize> = (0..n).collect();
        // Fisher-Yates from the seed, so the partition is reproducible
        let mut s = perm_seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            modes.swap(i, (s >> 33) as usize % (i + 1));
        }
        let split = split.min(n);
        let p = ModePartition::new(modes[..split].to_vec(), modes[split..].to_vec(), n).unwrap();
        let m = matricize(&t, &p).unwrap();
        prop_assert_eq!(&m, &brute_matricize(&t, p.rows(), p.cols()));
        prop_assert_eq!(fold(&m, &p, t.shape()).unwrap(), t);
    }

    #[test]
    fn every_unfolding_keeps_the_norm(t in tensor_strategy()) {
        let norm = frobenius_norm(&t);
        for n in 0..t.order() {
            prop_assert!((unfold(&t, n).unwrap().norm() - norm).abs() <= 1e-12 * norm);
        }
    }

    #[test]
    fn n_mode_products_on_distinct_modes_commute(t in tensor_strategy(), seed in any::<u64>()) {
        let mut rng = rng_for(seed, 1);
        let (a, b) = (0, t.order() - 1);
        let ma = standard_normal_matrix(3, t.shape()[a], &mut rng);
        let mb = standard_normal_matrix(2, t.shape()[b], &mut rng);
        let ab = n_mode_product(&n_mode_product(&t, &ma, a).unwrap(), &mb, b).unwrap();
        let ba = n_mode_product(&n_mode_product(&t, &mb, b).unwrap(), &ma, a).unwrap();
        prop_assert!(rel_diff(&ab, &ba) < 1e-12);
    }

    #[test]
    fn identity_factors_reconstruct_the_core(t in tensor_strategy()) {
        let eyes: Vec<Matrix> = t.shape().iter().map(|&s| Matrix::identity(s, s)).collect();
        prop_assert_eq!(tucker_reconstruct(&t, &eyes).unwrap(), t);
    }

    #[test]
    fn two_matrix_contraction_is_matmul(r in 1usize..5, k in 1usize..5, c in 1usize..5, seed in any::<u64>()) {
        let mut rng = rng_for(seed, 2);
        let a = standard_normal_matrix(r, k, &mut rng);
        let b = standard_normal_matrix(k, c, &mut rng);
        let got = contracted_product(&DenseTensor::from_matrix(&a), &DenseTensor::from_matrix(&b), &[1], &[0]).unwrap();
        let want = &a * &b;
        prop_assert!((got.to_matrix().unwrap() - &want).norm() <= 1e-12 * want.norm().max(1e-300));
    }
}

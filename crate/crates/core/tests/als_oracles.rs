//! Each ALS block update must equal the ridge least-squares solution obtained
//! from an explicitly assembled design matrix.

use tensorreg::regression::AlsState;
use tensorreg::simulation::{random_tucker, rng_for, standard_normal_tensor};
use tensorreg::tensor::{DenseTensor, Matrix};
use tensorreg::{TuckerCoefficient, TuckerRank};

#[derive(Clone, Copy)]
enum Block {
    Input(usize),
    Output(usize),
    Core,
}

fn block_len(c: &TuckerCoefficient, b: Block) -> usize {
    match b {
        Block::Input(k) => c.input_factors[k].len(),
        Block::Output(m) => c.output_factors[m].len(),
        Block::Core => c.core.len(),
    }
}

fn with_block(c: &TuckerCoefficient, b: Block, v: &[f64]) -> TuckerCoefficient {
    let mut c = c.clone();
    match b {
        Block::Input(k) => {
            let (r, q) = c.input_factors[k].shape();
            c.input_factors[k] = Matrix::from_column_slice(r, q, v);
        }
        Block::Output(m) => {
            let (r, q) = c.output_factors[m].shape();
            c.output_factors[m] = Matrix::from_column_slice(r, q, v);
        }
        Block::Core => c.core = DenseTensor::new(c.core.shape().to_vec(), v.to_vec()).unwrap(),
    }
    c
}

fn block_values(c: &TuckerCoefficient, b: Block) -> Vec<f64> {
    match b {
        Block::Input(k) => c.input_factors[k].as_slice().to_vec(),
        Block::Output(m) => c.output_factors[m].as_slice().to_vec(),
        Block::Core => c.core.data().to_vec(),
    }
}

/// Fitted values and ||B||^2 are linear and quadratic in a single block, so
/// the penalised problem is solved exactly from basis evaluations.
fn oracle(c: &TuckerCoefficient, b: Block, x: &DenseTensor, y: &DenseTensor, lambda: f64, penalize: bool) -> Vec<f64> {
    let d = block_len(c, b);
    let basis = |i: usize| {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        with_block(c, b, &v)
    };
    let cols: Vec<Vec<f64>> = (0..d).map(|i| basis(i).apply(x).unwrap().into_data()).collect();
    let design = Matrix::from_fn(y.len(), d, |r, i| cols[i][r]);
    let mut a = design.transpose() * &design;
    if penalize && lambda > 0.0 {
        let sq: Vec<f64> = (0..d).map(|i| basis(i).squared_norm()).collect();
        for i in 0..d {
            for j in 0..d {
                let mut v = vec![0.0; d];
                v[i] += 1.0;
                v[j] += 1.0;
                let both = with_block(c, b, &v).squared_norm();
                let h = if i == j { sq[i] } else { (both - sq[i] - sq[j]) / 2.0 };
                a[(i, j)] += lambda * h;
            }
        }
    }
    let rhs = design.transpose() * Matrix::from_column_slice(y.len(), 1, y.data());
    // minimum-norm solution, which is what ALS returns when a block is not
    // identified (e.g. a core unfolding with fewer columns than rows)
    let svd = a.svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    svd.solve(&rhs, tol).unwrap().as_slice().to_vec()
}

fn check(in_shape: &[usize], out_shape: &[usize], rank: TuckerRank, lambda: f64, seed: u64) {
    let n = 40;
    let mut xs = vec![n];
    xs.extend_from_slice(in_shape);
    let x = standard_normal_tensor(xs, &mut rng_for(seed, 1)).unwrap();
    let mut ys = vec![n];
    ys.extend_from_slice(out_shape);
    let y = standard_normal_tensor(ys, &mut rng_for(seed, 2)).unwrap();
    let start = random_tucker(in_shape, out_shape, &rank, &mut rng_for(seed, 3)).unwrap();
    let mut blocks: Vec<Block> = (0..in_shape.len()).map(Block::Input).collect();
    blocks.extend((0..out_shape.len()).map(Block::Output));
    blocks.push(Block::Core);
    for b in blocks {
        let mut state = AlsState::new(x.clone(), y.clone(), start.clone(), lambda, false).unwrap();
        match b {
            Block::Input(k) => state.update_input_factor(k).unwrap(),
            Block::Output(m) => state.update_output_factor(m).unwrap(),
            Block::Core => state.update_core().unwrap(),
        }
        let got = block_values(&state.coefficient, b);
        let want = oracle(&start, b, &x, &y, lambda, !matches!(b, Block::Core));
        let scale = want.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / scale;
        match b {
            // the core step is least squares on the pseudo-inverse projected
            // response, which matches the exact block optimum when every V has
            // full column rank
            Block::Core => assert!(err < 1e-7, "core update off by {}", err),
            _ => assert!(err < 1e-8, "block {:?} update off by {} (lambda {})", block_name(b), err, lambda),
        }
    }
}

#[test]
fn updates_match_explicit_least_squares() {
    check(&[4, 3], &[3, 2], TuckerRank::new(vec![2, 2], vec![2, 1]), 0.0, 1);
}

#[test]
fn ridge_updates_match_explicit_least_squares() {
    check(&[4, 3], &[3, 2], TuckerRank::new(vec![2, 2], vec![2, 1]), 2.5, 2);
}

#[test]
fn single_input_mode_updates() {
    check(&[6], &[4, 3], TuckerRank::new(vec![3], vec![2, 2]), 0.0, 3);
    check(&[6], &[4, 3], TuckerRank::new(vec![3], vec![2, 2]), 1.5, 4);
}

#[test]
fn rank_one_neighbours_use_decoupled_solve() {
    check(&[5, 3], &[4], TuckerRank::new(vec![3, 1], vec![3]), 0.7, 5);
    check(&[5, 3], &[4], TuckerRank::new(vec![3, 1], vec![3]), 0.0, 7);
}

#[test]
fn unidentified_blocks_get_minimum_norm() {
    check(&[5, 3], &[4], TuckerRank::new(vec![3, 1], vec![2]), 0.7, 5);
    check(&[5, 3], &[4], TuckerRank::new(vec![1, 1], vec![2]), 0.0, 8);
}

#[test]
fn three_input_modes() {
    check(&[3, 3, 2], &[3], TuckerRank::new(vec![2, 2, 2], vec![2]), 0.3, 6);
}

fn block_name(b: Block) -> String {
    match b {
        Block::Input(k) => format!("input {}", k),
        Block::Output(m) => format!("output {}", m),
        Block::Core => "core".into(),
    }
}

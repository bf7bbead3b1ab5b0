//! Tensor-on-tensor regression `Y = A + <X, B> + E` with a Tucker-structured
//! slope `B = G x U^(1) .. x U^(N) x V^(1) .. x V^(M)`, estimated by
//! alternating least squares with an optional ridge penalty `lambda ||B||^2`.
//!
//! `X` has shape `n x I_1 x .. x I_N` and `Y` has shape `n x J_1 x .. x J_M`;
//! mode 0 indexes samples in both. Each ALS step solves one component exactly
//! while the others are held fixed. The penalty enters the factor updates;
//! the core update ignores it unless [`RegressionSpec::regularize_core`] is set.

use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, pinv, solve_psd, top_eigen, SolveMethod, PINV_RTOL};
use crate::tensor::{n_mode_product, tucker_reconstruct, unfold, DenseTensor, Matrix};

/// Core sizes `(F_1..F_N; P_1..P_M)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TuckerRank {
    pub input: Vec<usize>,
    pub output: Vec<usize>,
}

impl TuckerRank {
    pub fn new(input: Vec<usize>, output: Vec<usize>) -> Self {
        TuckerRank { input, output }
    }

    /// Splits a flat rank tuple after `input_order` entries.
    pub fn from_flat(flat: &[usize], input_order: usize) -> Result<Self> {
        if input_order > flat.len() {
            return Err(Error::InvalidRank(format!(
                "rank tuple {:?} shorter than input order {}",
                flat, input_order
            )));
        }
        Ok(TuckerRank { input: flat[..input_order].to_vec(), output: flat[input_order..].to_vec() })
    }

    pub fn flat(&self) -> Vec<usize> {
        self.input.iter().chain(&self.output).copied().collect()
    }

    pub fn core_shape(&self) -> Vec<usize> {
        self.flat()
    }
}

impl fmt::Display for TuckerRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.flat().iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Parses `"2,3;2,3"` (input;output) or `"[2,3;2,3]"`.
impl FromStr for TuckerRank {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('[').trim_end_matches(']');
        let (a, b) = s
            .split_once(';')
            .ok_or_else(|| Error::InvalidRank(format!("rank '{}' must look like 'F1,..;P1,..'", s)))?;
        let parse = |part: &str| -> Result<Vec<usize>> {
            part.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidRank(format!("bad rank entry '{}'", v)))
                })
                .collect()
        };
        Ok(TuckerRank { input: parse(a)?, output: parse(b)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Standard-normal factors from the seed, then one core update.
    SeededRandom,
    /// Leading singular subspaces of the full OLS/ridge coefficient.
    Hosvd,
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seeded-random" | "random" => Ok(Init::SeededRandom),
            "hosvd" => Ok(Init::Hosvd),
            other => Err(Error::InvalidArgument(format!("unknown init '{}'", other))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub lambda: f64,
    pub rank: TuckerRank,
    pub max_iters: usize,
    pub tol: f64,
    pub center: bool,
    pub init: Init,
    pub seed: u64,
    pub regularize_core: bool,
}

impl RegressionSpec {
    pub fn new(rank: TuckerRank) -> Self {
        RegressionSpec {
            lambda: 0.0,
            rank,
            max_iters: 500,
            tol: 1e-6,
            center: true,
            init: Init::SeededRandom,
            seed: 0,
            regularize_core: false,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_center(mut self, center: bool) -> Self {
        self.center = center;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuckerCoefficient {
    pub core: DenseTensor,
    pub input_factors: Vec<Matrix>,
    pub output_factors: Vec<Matrix>,
}

impl TuckerCoefficient {
    pub fn new(core: DenseTensor, input_factors: Vec<Matrix>, output_factors: Vec<Matrix>) -> Result<Self> {
        let c = TuckerCoefficient { core, input_factors, output_factors };
        let rank = c.rank();
        if c.core.shape() != rank.flat().as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "core shape {:?} does not match factor ranks {}",
                c.core.shape(),
                rank
            )));
        }
        for f in c.input_factors.iter().chain(&c.output_factors) {
            if f.ncols() > f.nrows() {
                return Err(Error::InvalidRank(format!(
                    "factor has {} columns but only {} rows",
                    f.ncols(),
                    f.nrows()
                )));
            }
        }
        Ok(c)
    }

    pub fn rank(&self) -> TuckerRank {
        TuckerRank {
            input: self.input_factors.iter().map(|u| u.ncols()).collect(),
            output: self.output_factors.iter().map(|v| v.ncols()).collect(),
        }
    }

    pub fn input_shape(&self) -> Vec<usize> {
        self.input_factors.iter().map(|u| u.nrows()).collect()
    }

    pub fn output_shape(&self) -> Vec<usize> {
        self.output_factors.iter().map(|v| v.nrows()).collect()
    }

    /// `w = |G| + sum I_n F_n + sum J_m P_m`.
    pub fn parameter_count(&self) -> usize {
        self.core.len()
            + self.input_factors.iter().chain(&self.output_factors).map(|f| f.len()).sum::<usize>()
    }

    /// Full slope tensor `I_1 x .. x I_N x J_1 x .. x J_M`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let factors: Vec<Matrix> = self.input_factors.iter().chain(&self.output_factors).cloned().collect();
        tucker_reconstruct(&self.core, &factors)
    }

    /// `||B||_F^2` computed through factor Gram matrices.
    pub fn squared_norm(&self) -> f64 {
        let grams: Vec<Matrix> = self.all_factors().map(|f| f.transpose() * f).collect();
        let mut t = self.core.clone();
        for (k, g) in grams.iter().enumerate() {
            t = n_mode_product(&t, g, k).expect("core and factors are consistent");
        }
        t.inner(&self.core).expect("same shape")
    }

    fn all_factors(&self) -> impl Iterator<Item = &Matrix> {
        self.input_factors.iter().chain(&self.output_factors)
    }

    fn input_order(&self) -> usize {
        self.input_factors.len()
    }

    /// `X*` unfolded as `n x prod(F)`: the regressor with input modes projected
    /// by `U^T`, optionally leaving mode `skip` uncompressed.
    fn project_inputs(&self, x: &DenseTensor, skip: Option<usize>) -> Result<DenseTensor> {
        let mut t = x.clone();
        for (k, u) in self.input_factors.iter().enumerate() {
            if Some(k) != skip {
                t = n_mode_product(&t, &u.transpose(), k + 1)?;
            }
        }
        Ok(t)
    }

    /// Core with the output factors applied: `F_1 x .. x F_N x J_1 x .. x J_M`.
    fn expand_outputs(&self) -> Result<DenseTensor> {
        let n = self.input_order();
        let mut t = self.core.clone();
        for (m, v) in self.output_factors.iter().enumerate() {
            t = n_mode_product(&t, v, n + m)?;
        }
        Ok(t)
    }

    /// `<X, B>` as an `n x prod(J)` matrix.
    fn apply_matrix(&self, x: &DenseTensor) -> Result<Matrix> {
        let expected = self.input_shape();
        if x.order() != expected.len() + 1 || x.shape()[1..] != expected[..] {
            return Err(Error::DimensionMismatch(format!(
                "regressor shape {:?} does not match coefficient input modes {:?}",
                x.shape(),
                expected
            )));
        }
        let n = x.shape()[0];
        let xs = self.project_inputs(x, None)?;
        let ftot: usize = self.rank().input.iter().product();
        let xs = Matrix::from_vec(n, ftot, xs.into_data());
        let c = self.expand_outputs()?;
        let jtot: usize = self.output_shape().iter().product();
        let c = Matrix::from_vec(ftot, jtot, c.into_data());
        Ok(xs * c)
    }

    /// `<X, B>` with shape `n x J_1 x .. x J_M`.
    pub fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        let m = self.apply_matrix(x)?;
        let mut shape = vec![x.shape()[0]];
        shape.extend(self.output_shape());
        DenseTensor::new(shape, m.as_slice().to_vec())
    }

    /// Gram matrix `<B_-k, B_-k>` over every mode except core mode `k`.
    fn partial_gram(&self, k: usize) -> Matrix {
        let mut t = self.core.clone();
        for (j, f) in self.all_factors().enumerate() {
            if j != k {
                t = n_mode_product(&t, &(f.transpose() * f), j).expect("consistent");
            }
        }
        unfold(&t, k).expect("valid mode") * unfold(&self.core, k).expect("valid mode").transpose()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub warnings: Vec<String>,
    /// Number of subproblem solves that fell back to the pseudo-inverse.
    pub pseudo_inverse_solves: usize,
    /// Largest condition number of an output factor seen in a core update.
    pub max_output_factor_condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub spec: RegressionSpec,
    pub coefficient: TuckerCoefficient,
    /// Shape `1 x J_1 x .. x J_M`; zero when centering is off.
    pub intercept: DenseTensor,
    /// Penalized objective after initialization and after every sweep.
    pub objective_trace: Vec<f64>,
    pub ssr: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: FitDiagnostics,
}

impl RegressionFit {
    pub fn predict(&self, x_new: &DenseTensor) -> Result<DenseTensor> {
        predict(self, x_new)
    }

    pub fn slope(&self) -> Result<DenseTensor> {
        self.coefficient.reconstruct()
    }

    pub fn lambda(&self) -> f64 {
        self.spec.lambda
    }
}

/// `Y_hat = A + <X_new, B>`.
pub fn predict(fit: &RegressionFit, x_new: &DenseTensor) -> Result<DenseTensor> {
    fit.coefficient.apply(x_new)?.add_broadcast(&fit.intercept)
}

/// `A = E[Y] - <E[X], B>`.
pub fn estimate_intercept(x: &DenseTensor, y: &DenseTensor, coefficient: &TuckerCoefficient) -> Result<DenseTensor> {
    let xm = x.sample_mean();
    let ym = y.sample_mean();
    ym.sub(&coefficient.apply(&xm)?)
}

/// Working state of the alternating least squares solver on centered data.
pub struct AlsState {
    x: DenseTensor,
    y: DenseTensor,
    ymat: Matrix,
    lambda: f64,
    regularize_core: bool,
    pub coefficient: TuckerCoefficient,
    pub diagnostics: FitDiagnostics,
}

impl AlsState {
    pub fn new(
        x: DenseTensor,
        y: DenseTensor,
        coefficient: TuckerCoefficient,
        lambda: f64,
        regularize_core: bool,
    ) -> Result<Self> {
        check_shapes(&x, &y, &coefficient.rank())?;
        if coefficient.input_shape() != x.shape()[1..] || coefficient.output_shape() != y.shape()[1..] {
            return Err(Error::DimensionMismatch("coefficient does not match data shapes".into()));
        }
        let n = y.shape()[0];
        let jtot = y.len() / n;
        let ymat = Matrix::from_column_slice(n, jtot, y.data());
        Ok(AlsState {
            x,
            y,
            ymat,
            lambda,
            regularize_core,
            coefficient,
            diagnostics: FitDiagnostics::default(),
        })
    }

    pub fn ssr(&self) -> f64 {
        let fitted = self.coefficient.apply_matrix(&self.x).expect("shapes checked at construction");
        (&self.ymat - fitted).norm_squared()
    }

    /// `||Y - <X,B>||^2 + lambda ||B||^2`.
    pub fn objective(&self) -> f64 {
        let penalty = if self.lambda > 0.0 { self.lambda * self.coefficient.squared_norm() } else { 0.0 };
        self.ssr() + penalty
    }

    fn record(&mut self, method: SolveMethod, what: &str) {
        if method == SolveMethod::PseudoInverse {
            self.diagnostics.pseudo_inverse_solves += 1;
            if self.diagnostics.warnings.len() < 16 {
                self.diagnostics
                    .warnings
                    .push(format!("{}: singular normal equations, used pseudo-inverse", what));
            }
        }
    }

    /// Exact (penalized) least-squares update of `U^(k)`.
    pub fn update_input_factor(&mut self, k: usize) -> Result<()> {
        let coef = &self.coefficient;
        let nin = coef.input_order();
        if k >= nin {
            return Err(Error::InvalidArgument(format!("input mode {} out of range", k)));
        }
        let n = self.x.shape()[0];
        let rank = coef.rank();
        let size = self.x.shape()[k + 1];
        let fk = rank.input[k];
        let others: Vec<usize> = (0..nin).filter(|&j| j != k).collect();
        let o: usize = others.iter().map(|&j| rank.input[j]).product();
        let nout = coef.output_factors.len();
        let jtot = self.ymat.ncols();

        // W[i, o, s]: regressor compressed on every input mode but k.
        let w = coef.project_inputs(&self.x, Some(k))?;
        let mut perm = vec![k + 1];
        perm.extend(others.iter().map(|&j| j + 1));
        perm.push(0);
        let w = w.permute(&perm)?;
        let wstack = Matrix::from_column_slice(size, o * n, w.data());

        // C[(o, f), j]: output-expanded core with mode k moved behind the others.
        let c = coef.expand_outputs()?;
        let mut perm = others.clone();
        perm.push(k);
        perm.extend(nin..nin + nout);
        let c = c.permute(&perm)?;
        let cmat = Matrix::from_vec(o * fk, jtot, c.into_data());
        let q = &cmat * cmat.transpose();
        let r = (&self.ymat * cmat.transpose()).transpose();

        if o == 1 {
            return self.update_single_block_factor(k, &wstack, &q, &r);
        }

        let dim = size * fk;
        let mut a = Matrix::zeros(dim, dim);
        let mut b = Matrix::zeros(dim, 1);
        for f in 0..fk {
            let rf = r.rows(f * o, o).into_owned();
            let rhs = &wstack * Matrix::from_column_slice(o * n, 1, rf.as_slice());
            b.view_mut((f * size, 0), (size, 1)).copy_from(&rhs);
        }
        // A[(f,i),(g,i')] = sum_{a,b} P[(i,a),(i',b)] Q[(a,f),(b,g)], P = W W' over samples
        let wp = Matrix::from_column_slice(size * o, n, w.data());
        let p = &wp * wp.transpose();
        for f in 0..fk {
            for g in f..fk {
                let mut block = Matrix::zeros(size, size);
                for ob in 0..o {
                    for oa in 0..o {
                        let qv = q[(oa + o * f, ob + o * g)];
                        if qv != 0.0 {
                            block += p.view((oa * size, ob * size), (size, size)) * qv;
                        }
                    }
                }
                a.view_mut((f * size, g * size), (size, size)).copy_from(&block);
                if g != f {
                    a.view_mut((g * size, f * size), (size, size)).copy_from(&block.transpose());
                }
            }
        }
        if self.lambda > 0.0 {
            let gram = coef.partial_gram(k);
            for f in 0..fk {
                for g in 0..fk {
                    for i in 0..size {
                        a[(f * size + i, g * size + i)] += self.lambda * gram[(f, g)];
                    }
                }
            }
        }
        let (sol, method) = solve_psd(&a, &b);
        self.coefficient.input_factors[k] = Matrix::from_column_slice(size, fk, sol.as_slice());
        self.record(method, &format!("input factor {}", k));
        Ok(())
    }

    /// `U^(k)` when every other input mode has rank one: the normal equations
    /// `S U Q + lambda U Gamma = W R'` with `S = W W'` decouple into one
    /// `F x F` system per eigenvector of `S`.
    fn update_single_block_factor(&mut self, k: usize, w: &Matrix, q: &Matrix, r: &Matrix) -> Result<()> {
        let fk = q.nrows();
        let eig = SymmetricEigen::new(w * w.transpose());
        let e = eig.eigenvectors;
        let b = e.transpose() * (w * r.transpose());
        let dmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gram = if self.lambda > 0.0 {
            self.coefficient.partial_gram(k) * self.lambda
        } else {
            Matrix::zeros(fk, fk)
        };
        let mut rotated = Matrix::zeros(w.nrows(), fk);
        let mut fallback = false;
        for (i, &d) in eig.eigenvalues.iter().enumerate() {
            let d = if d > PINV_RTOL * dmax { d } else { 0.0 };
            let block = q * d + &gram;
            if block.iter().all(|v| *v == 0.0) {
                continue;
            }
            let (sol, method) = solve_psd(&block, &b.rows(i, 1).transpose());
            fallback |= method == SolveMethod::PseudoInverse;
            rotated.row_mut(i).copy_from(&sol.transpose());
        }
        self.coefficient.input_factors[k] = e * rotated;
        let method = if fallback { SolveMethod::PseudoInverse } else { SolveMethod::Cholesky };
        self.record(method, &format!("input factor {}", k));
        Ok(())
    }

    /// Exact (penalized) least-squares update of `V^(m)`.
    pub fn update_output_factor(&mut self, m: usize) -> Result<()> {
        let coef = &self.coefficient;
        let nout = coef.output_factors.len();
        if m >= nout {
            return Err(Error::InvalidArgument(format!("output mode {} out of range", m)));
        }
        let n = self.x.shape()[0];
        let rank = coef.rank();
        let ftot: usize = rank.input.iter().product();
        let ptot: usize = rank.output.iter().product();
        let xs = coef.project_inputs(&self.x, None)?;
        let xs = Matrix::from_vec(n, ftot, xs.into_data());
        let gmat = Matrix::from_column_slice(ftot, ptot, coef.core.data());
        let z = xs * gmat;
        let mut shape = vec![n];
        shape.extend(&rank.output);
        let mut z = DenseTensor::new(shape, z.as_slice().to_vec())?;
        for (j, v) in coef.output_factors.iter().enumerate() {
            if j != m {
                z = n_mode_product(&z, v, j + 1)?;
            }
        }
        let design = unfold(&z, m + 1)?;
        let target = unfold(&self.y, m + 1)?;
        let mut a = &design * design.transpose();
        if self.lambda > 0.0 {
            a += coef.partial_gram(coef.input_order() + m) * self.lambda;
        }
        let rhs = &design * target.transpose();
        let (sol, method) = solve_psd(&a, &rhs);
        self.coefficient.output_factors[m] = sol.transpose();
        self.record(method, &format!("output factor {}", m));
        Ok(())
    }

    /// Least-squares core update `G = (X*^T X*)^-1 X*^T Y*` with `Y*` the
    /// response projected by the output-factor pseudo-inverses.
    pub fn update_core(&mut self) -> Result<()> {
        let coef = &self.coefficient;
        let n = self.x.shape()[0];
        let rank = coef.rank();
        let ftot: usize = rank.input.iter().product();
        let ptot: usize = rank.output.iter().product();
        let xs = coef.project_inputs(&self.x, None)?;
        let xs = Matrix::from_vec(n, ftot, xs.into_data());
        let mut ys = self.y.clone();
        let mut max_cond = self.diagnostics.max_output_factor_condition;
        for (m, v) in coef.output_factors.iter().enumerate() {
            max_cond = max_cond.max(condition_number(v));
            ys = n_mode_product(&ys, &pinv(v), m + 1)?;
        }
        let ys = Matrix::from_vec(n, ptot, ys.into_data());
        let mut a = xs.transpose() * &xs;
        if self.regularize_core && self.lambda > 0.0 {
            for i in 0..ftot {
                a[(i, i)] += self.lambda;
            }
        }
        let rhs = xs.transpose() * ys;
        let (sol, method) = solve_psd(&a, &rhs);
        self.coefficient.core = DenseTensor::new(rank.core_shape(), sol.as_slice().to_vec())?;
        self.diagnostics.max_output_factor_condition = max_cond;
        self.record(method, "core");
        Ok(())
    }

    /// One pass `U^(1..N)`, `V^(1..M)`, `G`.
    pub fn sweep(&mut self) -> Result<()> {
        for k in 0..self.coefficient.input_factors.len() {
            self.update_input_factor(k)?;
        }
        for m in 0..self.coefficient.output_factors.len() {
            self.update_output_factor(m)?;
        }
        self.update_core()
    }
}

fn check_shapes(x: &DenseTensor, y: &DenseTensor, rank: &TuckerRank) -> Result<()> {
    if x.order() < 2 || y.order() < 2 {
        return Err(Error::InvalidShape(format!(
            "regressor {:?} and response {:?} need a sample mode plus at least one mode",
            x.shape(),
            y.shape()
        )));
    }
    if x.shape()[0] != y.shape()[0] {
        return Err(Error::DimensionMismatch(format!(
            "regressor has {} samples, response has {}",
            x.shape()[0],
            y.shape()[0]
        )));
    }
    if rank.input.len() != x.order() - 1 || rank.output.len() != y.order() - 1 {
        return Err(Error::InvalidRank(format!(
            "rank {} does not match {} input and {} output modes",
            rank,
            x.order() - 1,
            y.order() - 1
        )));
    }
    let sizes = x.shape()[1..].iter().chain(&y.shape()[1..]);
    for (&r, &s) in rank.flat().iter().zip(sizes) {
        if r == 0 || r > s {
            return Err(Error::InvalidRank(format!(
                "rank {} must satisfy 1 <= rank <= mode size for data {:?} -> {:?}",
                rank,
                x.shape(),
                y.shape()
            )));
        }
    }
    Ok(())
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn leading_subspace(t: &DenseTensor, mode: usize, k: usize) -> Result<Matrix> {
    let m = unfold(t, mode)?;
    let (_, vectors) = top_eigen(&(&m * m.transpose()), k);
    Ok(vectors)
}

fn initial_coefficient(x: &DenseTensor, y: &DenseTensor, spec: &RegressionSpec) -> Result<TuckerCoefficient> {
    let rank = &spec.rank;
    let in_shape = &x.shape()[1..];
    let out_shape = &y.shape()[1..];
    let core = DenseTensor::zeros(rank.core_shape())?;
    match spec.init {
        Init::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let input = in_shape.iter().zip(&rank.input).map(|(&i, &f)| random_matrix(i, f, &mut rng)).collect();
            let output = out_shape.iter().zip(&rank.output).map(|(&j, &p)| random_matrix(j, p, &mut rng)).collect();
            TuckerCoefficient::new(core, input, output)
        }
        Init::Hosvd => {
            let n = x.shape()[0];
            let itot: usize = in_shape.iter().product();
            if itot > 4096 {
                return Err(Error::InvalidArgument(format!(
                    "hosvd init needs a dense {}x{} normal matrix; use seeded-random",
                    itot, itot
                )));
            }
            let jtot: usize = out_shape.iter().product();
            let xm = Matrix::from_column_slice(n, itot, x.data());
            let ym = Matrix::from_column_slice(n, jtot, y.data());
            let mut a = xm.transpose() * &xm;
            for i in 0..itot {
                a[(i, i)] += spec.lambda;
            }
            let (full, _) = solve_psd(&a, &(xm.transpose() * ym));
            let mut shape = in_shape.to_vec();
            shape.extend_from_slice(out_shape);
            let full = DenseTensor::new(shape, full.as_slice().to_vec())?;
            let nin = in_shape.len();
            let input = (0..nin).map(|k| leading_subspace(&full, k, rank.input[k])).collect::<Result<_>>()?;
            let output = (0..out_shape.len())
                .map(|m| leading_subspace(&full, nin + m, rank.output[m]))
                .collect::<Result<_>>()?;
            TuckerCoefficient::new(core, input, output)
        }
    }
}

/// Relative objective change used as the stopping rule.
pub fn relative_change(previous: f64, current: f64) -> f64 {
    (current - previous).abs() / previous.max(1e-12)
}

/// Fits the Tucker-structured regression by alternating least squares.
pub fn fit(x: &DenseTensor, y: &DenseTensor, spec: &RegressionSpec) -> Result<RegressionFit> {
    spec.validate()?;
    check_shapes(x, y, &spec.rank)?;
    if !x.all_finite() || !y.all_finite() {
        return Err(Error::InvalidData("non-finite entries in regressor or response".into()));
    }
    let (xc, yc, means) = if spec.center {
        let xm = x.sample_mean();
        let ym = y.sample_mean();
        (x.sub_broadcast(&xm)?, y.sub_broadcast(&ym)?, Some((xm, ym)))
    } else {
        (x.clone(), y.clone(), None)
    };
    let init = initial_coefficient(&xc, &yc, spec)?;
    let mut state = AlsState::new(xc, yc, init, spec.lambda, spec.regularize_core)?;
    state.update_core()?;
    let mut trace = vec![state.objective()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < spec.max_iters {
        state.sweep()?;
        iterations += 1;
        let current = state.objective();
        let previous = *trace.last().expect("trace starts non-empty");
        trace.push(current);
        if !current.is_finite() {
            return Err(Error::Numerical(format!("objective became {} at iteration {}", current, iterations)));
        }
        if relative_change(previous, current) < spec.tol {
            converged = true;
            break;
        }
    }
    let ssr = state.ssr();
    let coefficient = state.coefficient;
    let intercept = match means {
        Some((xm, ym)) => ym.sub(&coefficient.apply(&xm)?)?,
        None => {
            let mut shape = vec![1];
            shape.extend_from_slice(&y.shape()[1..]);
            DenseTensor::zeros(shape)?
        }
    };
    Ok(RegressionFit {
        spec: spec.clone(),
        coefficient,
        intercept,
        objective_trace: trace,
        ssr,
        iterations,
        converged,
        diagnostics: state.diagnostics,
    })
}

//! Dense tensors and the multilinear primitives used by every estimator.
//!
//! Storage is first-index-fastest: the entry at multi-index `(i_0, .., i_{N-1})`
//! lives at `i_0 + I_0 * (i_1 + I_1 * (i_2 + ..))`. Mode-0 fibers are
//! contiguous, so the mode-0 unfolding is a plain reshape and a tensor of
//! shape `[I, J]` has the same layout as a column-major `I x J` matrix.
//!
//! Modes are indexed from zero throughout the crate.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::InvalidShape(format!(
                "shape {:?} holds {} entries but {} were supplied",
                shape,
                len,
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        validate_shape(&shape)?;
        let len = shape.iter().product();
        Ok(DenseTensor { shape, data: vec![0.0; len] })
    }

    pub fn scalar(value: f64) -> Self {
        DenseTensor { shape: vec![1], data: vec![value] }
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        validate_shape(&shape)?;
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Ok(DenseTensor { shape, data })
    }

    /// Interprets a column-major matrix as an order-2 tensor.
    pub fn from_matrix(m: &Matrix) -> Self {
        DenseTensor {
            shape: vec![m.nrows().max(1), m.ncols().max(1)],
            data: if m.is_empty() { vec![0.0] } else { m.as_slice().to_vec() },
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut lin = 0;
        for k in (0..idx.len()).rev() {
            debug_assert!(idx[k] < self.shape[k]);
            lin = lin * self.shape[k] + idx[k];
        }
        lin
    }

    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&s| {
                let i = lin % s;
                lin /= s;
                i
            })
            .collect()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        DenseTensor::new(shape, self.data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseTensor { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "elementwise operation on shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &DenseTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Full inner product `<self, other>` of equally shaped tensors.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "inner product of shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Reorders modes: mode `k` of the result is mode `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.order();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidPartition(format!(
                "{:?} is not a permutation of {} modes",
                perm, n
            )));
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let strides = self.strides();
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let in_strides: Vec<usize> = perm.iter().map(|&p| strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; n];
        let mut offset = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[offset]);
            for k in 0..n {
                idx[k] += 1;
                offset += in_strides[k];
                if idx[k] < out_shape[k] {
                    break;
                }
                offset -= in_strides[k] * out_shape[k];
                idx[k] = 0;
            }
        }
        Ok(DenseTensor { shape: out_shape, data })
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = Vec::with_capacity(self.shape.len());
        let mut acc = 1;
        for &s in &self.shape {
            strides.push(acc);
            acc *= s;
        }
        strides
    }

    /// Copies the samples `range` along mode 0.
    pub fn select_samples(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let n = self.shape[0];
        if range.start >= range.end || range.end > n {
            return Err(Error::InvalidArgument(format!(
                "sample range {:?} outside 0..{}",
                range, n
            )));
        }
        let rest = self.data.len() / n;
        let count = range.len();
        let mut data = Vec::with_capacity(count * rest);
        for r in 0..rest {
            let base = r * n;
            data.extend_from_slice(&self.data[base + range.start..base + range.end]);
        }
        let mut shape = self.shape.clone();
        shape[0] = count;
        Ok(DenseTensor { shape, data })
    }

    /// Copies samples in the given order along mode 0.
    pub fn gather_samples(&self, indices: &[usize]) -> Result<Self> {
        let n = self.shape[0];
        if indices.is_empty() || indices.iter().any(|&i| i >= n) {
            return Err(Error::InvalidArgument("sample indices out of range".into()));
        }
        let rest = self.data.len() / n;
        let mut data = Vec::with_capacity(indices.len() * rest);
        for r in 0..rest {
            let base = r * n;
            data.extend(indices.iter().map(|&i| self.data[base + i]));
        }
        let mut shape = self.shape.clone();
        shape[0] = indices.len();
        Ok(DenseTensor { shape, data })
    }

    /// Mean over mode 0, keeping it as a singleton mode.
    pub fn sample_mean(&self) -> Self {
        let n = self.shape[0];
        let rest = self.data.len() / n;
        let data = (0..rest)
            .map(|r| self.data[r * n..(r + 1) * n].iter().sum::<f64>() / n as f64)
            .collect();
        let mut shape = self.shape.clone();
        shape[0] = 1;
        DenseTensor { shape, data }
    }

    /// Subtracts a singleton-mode-0 tensor from every sample.
    pub fn sub_broadcast(&self, row: &DenseTensor) -> Result<Self> {
        self.broadcast(row, -1.0)
    }

    /// Adds a singleton-mode-0 tensor to every sample.
    pub fn add_broadcast(&self, row: &DenseTensor) -> Result<Self> {
        self.broadcast(row, 1.0)
    }

    fn broadcast(&self, row: &DenseTensor, sign: f64) -> Result<Self> {
        if row.shape[0] != 1 || row.shape[1..] != self.shape[1..] {
            return Err(Error::DimensionMismatch(format!(
                "cannot broadcast {:?} over {:?}",
                row.shape, self.shape
            )));
        }
        let n = self.shape[0];
        let mut out = self.clone();
        for (r, &v) in row.data.iter().enumerate() {
            for e in &mut out.data[r * n..(r + 1) * n] {
                *e += sign * v;
            }
        }
        Ok(out)
    }

    /// Stacks equally shaped tensors along a new leading mode.
    pub fn stack(items: &[DenseTensor]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot stack an empty list".into()))?;
        if items.iter().any(|t| t.shape != first.shape) {
            return Err(Error::DimensionMismatch("stacked tensors differ in shape".into()));
        }
        let n = items.len();
        let rest = first.len();
        let mut data = vec![0.0; n * rest];
        for (s, t) in items.iter().enumerate() {
            for (r, &v) in t.data.iter().enumerate() {
                data[r * n + s] = v;
            }
        }
        let mut shape = vec![n];
        shape.extend_from_slice(&first.shape);
        Ok(DenseTensor { shape, data })
    }

    /// Sample `i` along mode 0 with that mode kept as a singleton.
    pub fn sample(&self, i: usize) -> Result<Self> {
        self.select_samples(i..i + 1)
    }

    /// Sample `i` along mode 0 with that mode dropped.
    pub fn observation(&self, i: usize) -> Result<Self> {
        let t = self.select_samples(i..i + 1)?;
        let shape = if self.order() > 1 { self.shape[1..].to_vec() } else { vec![1] };
        t.reshape(shape)
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        if self.order() != 2 {
            return Err(Error::InvalidShape(format!(
                "expected an order-2 tensor, found shape {:?}",
                self.shape
            )));
        }
        Ok(Matrix::from_column_slice(self.shape[0], self.shape[1], &self.data))
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::InvalidShape("tensor order must be at least 1".into()));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape(format!("mode sizes must be positive, got {:?}", shape)));
    }
    Ok(())
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in 0..idx.len() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Row and column mode groups of a general matricization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModePartition {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl ModePartition {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>, order: usize) -> Result<Self> {
        let mut seen = vec![false; order];
        for &m in rows.iter().chain(&cols) {
            if m >= order {
                return Err(Error::InvalidPartition(format!(
                    "mode {} out of range for order {}",
                    m, order
                )));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidPartition(format!("mode {} appears twice", m)));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "rows {:?} and cols {:?} do not cover all {} modes",
                rows, cols, order
            )));
        }
        Ok(ModePartition { rows, cols })
    }

    /// The mode-`n` partition: `rows = {n}`, `cols` = remaining modes in order.
    pub fn mode_n(n: usize, order: usize) -> Result<Self> {
        ModePartition::new(vec![n], (0..order).filter(|&k| k != n).collect(), order)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    fn order(&self) -> usize {
        self.rows.len() + self.cols.len()
    }

    fn permutation(&self) -> Vec<usize> {
        self.rows.iter().chain(&self.cols).copied().collect()
    }
}

/// Unfolds `t` into a `prod(rows) x prod(cols)` matrix. Within each group the
/// first listed mode varies fastest.
pub fn matricize(t: &DenseTensor, p: &ModePartition) -> Result<Matrix> {
    if p.order() != t.order() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} modes, tensor has {}",
            p.order(),
            t.order()
        )));
    }
    let j: usize = p.rows.iter().map(|&m| t.shape[m]).product();
    let k: usize = p.cols.iter().map(|&m| t.shape[m]).product();
    let permuted = t.permute(&p.permutation())?;
    Ok(Matrix::from_vec(j, k, permuted.data))
}

/// Mode-`n` unfolding, `I_n x prod(other modes)`.
pub fn unfold(t: &DenseTensor, n: usize) -> Result<Matrix> {
    matricize(t, &ModePartition::mode_n(n, t.order())?)
}

pub fn vectorize(t: &DenseTensor) -> DVector<f64> {
    DVector::from_column_slice(&t.data)
}

/// Inverse of [`matricize`].
pub fn fold(m: &Matrix, p: &ModePartition, shape: &[usize]) -> Result<DenseTensor> {
    if p.order() != shape.len() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} modes, target shape has {}",
            p.order(),
            shape.len()
        )));
    }
    let j: usize = p.rows.iter().map(|&m| shape[m]).product();
    let k: usize = p.cols.iter().map(|&m| shape[m]).product();
    if m.nrows() != j || m.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but partition of {:?} needs {}x{}",
            m.nrows(),
            m.ncols(),
            shape,
            j,
            k
        )));
    }
    let perm = p.permutation();
    let permuted_shape: Vec<usize> = perm.iter().map(|&q| shape[q]).collect();
    let permuted = DenseTensor::new(permuted_shape, m.as_slice().to_vec())?;
    let mut inverse = vec![0; perm.len()];
    for (k, &q) in perm.iter().enumerate() {
        inverse[q] = k;
    }
    permuted.permute(&inverse)
}

/// `t x_n v`: multiplies every mode-`n` fiber by `v` (`J x I_n`).
pub fn n_mode_product(t: &DenseTensor, v: &Matrix, n: usize) -> Result<DenseTensor> {
    if n >= t.order() {
        return Err(Error::InvalidArgument(format!(
            "mode {} out of range for order {}",
            n,
            t.order()
        )));
    }
    let size = t.shape[n];
    if v.ncols() != size {
        return Err(Error::DimensionMismatch(format!(
            "mode {} has size {} but the matrix has {} columns",
            n,
            size,
            v.ncols()
        )));
    }
    let rows = v.nrows();
    let left: usize = t.shape[..n].iter().product();
    let right: usize = t.shape[n + 1..].iter().product();
    let mut shape = t.shape.clone();
    shape[n] = rows;
    let mut data = vec![0.0; left * rows * right];
    if left == 1 {
        let input = DMatrixView::from_slice(&t.data, size, right);
        let mut out = DMatrixViewMut::from_slice(&mut data, rows, right);
        out.gemm(1.0, v, &input, 0.0);
    } else {
        let vt = v.transpose();
        for r in 0..right {
            let input = DMatrixView::from_slice(&t.data[r * left * size..(r + 1) * left * size], left, size);
            let mut out =
                DMatrixViewMut::from_slice(&mut data[r * left * rows..(r + 1) * left * rows], left, rows);
            out.gemm(1.0, &input, &vt, 0.0);
        }
    }
    Ok(DenseTensor { shape, data })
}

/// Contracts `modes_a` of `a` against `modes_b` of `b` pairwise. The result
/// carries the free modes of `a` in order, then the free modes of `b`. A full
/// contraction yields a shape-`[1]` tensor.
pub fn contracted_product(
    a: &DenseTensor,
    b: &DenseTensor,
    modes_a: &[usize],
    modes_b: &[usize],
) -> Result<DenseTensor> {
    if modes_a.len() != modes_b.len() {
        return Err(Error::DimensionMismatch(format!(
            "contracting {} modes of a against {} modes of b",
            modes_a.len(),
            modes_b.len()
        )));
    }
    for (&ma, &mb) in modes_a.iter().zip(modes_b) {
        if ma >= a.order() || mb >= b.order() {
            return Err(Error::InvalidArgument("contraction mode out of range".into()));
        }
        if a.shape[ma] != b.shape[mb] {
            return Err(Error::DimensionMismatch(format!(
                "mode {} of a has size {} but mode {} of b has size {}",
                ma, a.shape[ma], mb, b.shape[mb]
            )));
        }
    }
    let free_a: Vec<usize> = (0..a.order()).filter(|m| !modes_a.contains(m)).collect();
    let free_b: Vec<usize> = (0..b.order()).filter(|m| !modes_b.contains(m)).collect();
    let am = matricize(a, &ModePartition::new(free_a.clone(), modes_a.to_vec(), a.order())?)?;
    let bm = matricize(b, &ModePartition::new(modes_b.to_vec(), free_b.clone(), b.order())?)?;
    let product = am * bm;
    let mut shape: Vec<usize> = free_a.iter().map(|&m| a.shape[m]).collect();
    shape.extend(free_b.iter().map(|&m| b.shape[m]));
    if shape.is_empty() {
        shape.push(1);
    }
    DenseTensor::new(shape, product.as_slice().to_vec())
}

pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    t.squared_norm().sqrt()
}

/// `g x_0 factors[0] x_1 factors[1] ...`
pub fn tucker_reconstruct(g: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    if factors.len() != g.order() {
        return Err(Error::DimensionMismatch(format!(
            "core of order {} needs {} factors, got {}",
            g.order(),
            g.order(),
            factors.len()
        )));
    }
    let mut out = g.clone();
    for (k, f) in factors.iter().enumerate() {
        out = n_mode_product(&out, f, k)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(shape: &[usize]) -> DenseTensor {
        let len = shape.iter().product::<usize>();
        DenseTensor::new(shape.to_vec(), (1..=len).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DenseTensor::new(vec![], vec![]).is_err());
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn multi_index_round_trip() {
        let t = seq(&[2, 3, 4]);
        for lin in 0..t.len() {
            assert_eq!(t.linear_index(&t.multi_index(lin)), lin);
        }
        assert_eq!(t.get(&[1, 0, 0]), 2.0);
        assert_eq!(t.get(&[0, 1, 0]), 3.0);
    }

    #[test]
    fn mode0_unfolding_columns_are_fibers() {
        let t = seq(&[2, 3, 2]);
        let m = unfold(&t, 0).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (2, 6));
        for c in 0..6 {
            let j = c % 3;
            let k = c / 3;
            assert_eq!(m[(0, c)], t.get(&[0, j, k]));
            assert_eq!(m[(1, c)], t.get(&[1, j, k]));
        }
    }

    #[test]
    fn matrix_unfolding_is_identity() {
        let t = seq(&[2, 3]);
        let m = unfold(&t, 0).unwrap();
        assert_eq!(m, Matrix::from_column_slice(2, 3, t.data()));
    }

    #[test]
    fn partition_errors() {
        assert!(matches!(ModePartition::new(vec![0, 1], vec![1], 2), Err(Error::InvalidPartition(_))));
        assert!(matches!(ModePartition::new(vec![0], vec![], 2), Err(Error::InvalidPartition(_))));
        let t = seq(&[2, 2, 2]);
        let p = ModePartition::new(vec![0], vec![1], 2).unwrap();
        assert!(matches!(matricize(&t, &p), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn vectorize_identity_matrix() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(vectorize(&t).as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(vectorize(&DenseTensor::scalar(7.0)).as_slice(), &[7.0]);
    }

    #[test]
    fn fold_scalar_and_mismatch() {
        let m = Matrix::from_element(1, 1, 3.5);
        let p = ModePartition::new(vec![0], vec![1], 2).unwrap();
        let t = fold(&m, &p, &[1, 1]).unwrap();
        assert_eq!(t.shape(), &[1, 1]);
        assert_eq!(t.data(), &[3.5]);
        assert!(matches!(fold(&m, &p, &[2, 1]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn fold_inverts_mode0_unfolding() {
        let t = seq(&[2, 3, 2]);
        let p = ModePartition::mode_n(0, 3).unwrap();
        assert_eq!(fold(&matricize(&t, &p).unwrap(), &p, t.shape()).unwrap(), t);
    }

    #[test]
    fn n_mode_identity_and_column_sums() {
        let t = seq(&[2, 3, 4]);
        for n in 0..3 {
            let eye = Matrix::identity(t.shape()[n], t.shape()[n]);
            assert_eq!(n_mode_product(&t, &eye, n).unwrap(), t);
        }
        let m = seq(&[2, 3]);
        let ones = Matrix::from_element(1, 2, 1.0);
        let sums = n_mode_product(&m, &ones, 0).unwrap();
        assert_eq!(sums.shape(), &[1, 3]);
        assert_eq!(sums.data(), &[3.0, 7.0, 11.0]);
        assert!(matches!(n_mode_product(&m, &ones, 1), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_norm(&DenseTensor::zeros(vec![3, 2]).unwrap()), 0.0);
        let t = DenseTensor::new(vec![2, 2], vec![3.0, 0.0, 0.0, 4.0]).unwrap();
        assert_eq!(frobenius_norm(&t), 5.0);
    }

    #[test]
    fn contraction_matrix_cases() {
        let a = seq(&[2, 3]);
        let b = seq(&[3, 4]);
        let c = contracted_product(&a, &b, &[1], &[0]).unwrap();
        let expected = a.to_matrix().unwrap() * b.to_matrix().unwrap();
        assert_eq!(c.to_matrix().unwrap(), expected);
        let full = contracted_product(&a, &a, &[0, 1], &[0, 1]).unwrap();
        assert_eq!(full.shape(), &[1]);
        assert_eq!(full.data()[0], a.squared_norm());
        assert!(contracted_product(&a, &b, &[0], &[0]).is_err());
    }

    #[test]
    fn tucker_rank_one_is_outer_product() {
        let g = DenseTensor::new(vec![1, 1], vec![1.0]).unwrap();
        let u = Matrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let v = Matrix::from_column_slice(2, 1, &[-1.0, 0.5]);
        let b = tucker_reconstruct(&g, &[u.clone(), v.clone()]).unwrap();
        assert_eq!(b.to_matrix().unwrap(), &u * v.transpose());
        let eye = [Matrix::identity(1, 1), Matrix::identity(1, 1)];
        assert_eq!(tucker_reconstruct(&g, &eye).unwrap(), g);
    }

    #[test]
    fn sample_helpers() {
        let t = seq(&[3, 2]);
        let s = t.select_samples(1..3).unwrap();
        assert_eq!(s.data(), &[2.0, 3.0, 5.0, 6.0]);
        let mean = t.sample_mean();
        assert_eq!(mean.data(), &[2.0, 5.0]);
        let centered = t.sub_broadcast(&mean).unwrap();
        assert_eq!(centered.sample_mean().data(), &[0.0, 0.0]);
        let stacked = DenseTensor::stack(&[DenseTensor::new(vec![2], vec![1.0, 4.0]).unwrap(),
            DenseTensor::new(vec![2], vec![2.0, 5.0]).unwrap()]).unwrap();
        assert_eq!(stacked.shape(), &[2, 2]);
        assert_eq!(stacked.data(), &[1.0, 2.0, 4.0, 5.0]);
        assert_eq!(t.gather_samples(&[2, 0]).unwrap().data(), &[3.0, 1.0, 6.0, 4.0]);
    }
}

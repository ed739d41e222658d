//! Polar transform kernels.
//!
//! Encoding is `x = u · T_N` over GF(2) with `T_N` the `n`-fold Kronecker power of
//! `T_2 = [[1, 0], [1, 1]]`, in natural (non bit-reversed) order. Matrices are stored
//! row-major and `row_flatten` juxtaposes rows head to tail, so a length-`N` vector and an
//! `N_c x N_r` matrix are interchangeable through [`row_flatten`] / [`row_reshape`].

use std::ops::{Deref, Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A vector of binary symbols stored one per byte.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitVector(Vec<u8>);

impl BitVector {
    /// Wraps `bits`, rejecting empty input and symbols other than 0 and 1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return invalid("bit vector must not be empty");
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return invalid(format!("non-binary symbol {} at position {pos}", bits[pos]));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub(crate) fn from_raw(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self(bits)
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.0
    }

    /// Number of ones.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "xor of vectors with different lengths");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }
}

impl Deref for BitVector {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Binary matrix (codeword and input matrices).
pub type BitMatrix = Matrix<u8>;
/// Matrix of counts, used for products over the naturals.
pub type NatMatrix = Matrix<u32>;
/// Matrix of log-likelihood ratios.
pub type LlrMatrix = Matrix<f64>;

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::default(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid("matrix dimensions must be positive");
        }
        if rows * cols != data.len() {
            return invalid(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }
}

impl BitMatrix {
    /// Builds a binary matrix from nested rows, validating shape and symbols.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("ragged rows");
        }
        let data: Vec<u8> = rows.concat();
        if data.iter().any(|&b| b > 1) {
            return invalid("non-binary matrix entry");
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a ^ b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b == 1).count()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Returns `log2(len)` when `len` is a positive power of two.
pub fn log2_exact(len: usize) -> Option<u32> {
    (len > 0 && len.is_power_of_two()).then(|| len.trailing_zeros())
}

/// In-place `x = u · T_N` butterfly. The length must be a power of two.
///
/// Since `T_N` is an involution the same routine maps a codeword back to its input vector.
pub fn polar_transform_in_place(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// Polar encoding `x = u · T_N`.
pub fn polar_encode(u: &[u8]) -> Result<BitVector> {
    if log2_exact(u.len()).is_none() {
        return invalid(format!("polar length {} is not a power of two", u.len()));
    }
    let mut x = BitVector::new(u.to_vec())?;
    polar_transform_in_place(x.as_mut_slice());
    Ok(x)
}

/// Product encoding `X = T_{N_c}^T · U · T_{N_r}`: every row and then every column of `U`
/// goes through the length-`N_r` / length-`N_c` polar transform.
pub fn product_encode(u: &BitMatrix) -> Result<BitMatrix> {
    if log2_exact(u.rows()).is_none() || log2_exact(u.cols()).is_none() {
        return invalid(format!(
            "product code dimensions {}x{} must be powers of two",
            u.rows(),
            u.cols()
        ));
    }
    let mut x = u.clone();
    encode_rows(&mut x);
    encode_columns(&mut x);
    Ok(x)
}

/// Applies the row transform `· T_{N_r}` to every row.
pub(crate) fn encode_rows(m: &mut BitMatrix) {
    for i in 0..m.rows() {
        polar_transform_in_place(m.row_mut(i));
    }
}

/// Applies `T_{N_c}^T ·` to the matrix, i.e. the column transform on every column.
pub(crate) fn encode_columns(m: &mut BitMatrix) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let rows = data.len() / cols;
    let mut half = 1;
    while half < rows {
        for block in (0..rows).step_by(2 * half) {
            for i in block..block + half {
                let (lo, hi) = data.split_at_mut((i + half) * cols);
                for (a, b) in lo[i * cols..(i + 1) * cols].iter_mut().zip(&hi[..cols]) {
                    *a ^= *b;
                }
            }
        }
        half *= 2;
    }
}

/// Juxtaposes the rows of `m` head to tail.
pub fn row_flatten<T: Copy + Default>(m: &Matrix<T>) -> Vec<T> {
    m.as_slice().to_vec()
}

/// Inverse of [`row_flatten`].
pub fn row_reshape<T: Copy + Default>(v: &[T], rows: usize, cols: usize) -> Result<Matrix<T>> {
    Matrix::from_vec(rows, cols, v.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_examples() {
        assert_eq!(&*polar_encode(&[1, 0]).unwrap(), &[1, 0]);
        assert_eq!(&*polar_encode(&[0, 1]).unwrap(), &[1, 1]);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(polar_encode(&[1, 0, 1]).is_err());
        assert!(polar_encode(&[]).is_err());
        assert!(polar_encode(&[2, 0]).is_err());
        let u = BitMatrix::zeros(3, 4);
        assert!(product_encode(&u).is_err());
    }

    #[test]
    fn reshape_examples() {
        let m = BitMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(row_flatten(&m), vec![1, 0, 0, 1]);
        assert_eq!(row_reshape(&[1u8, 0, 0, 1], 2, 2).unwrap(), m);
        assert!(row_reshape(&[1u8, 0, 0], 2, 2).is_err());
    }

    #[test]
    fn zero_input_encodes_to_zero() {
        let x = product_encode(&BitMatrix::zeros(4, 4)).unwrap();
        assert_eq!(x.count_ones(), 0);
    }

    fn bits(len: usize) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..=1, len)
    }

    proptest! {
        #[test]
        fn encoding_is_an_involution(u in (0u32..10).prop_flat_map(|n| bits(1 << n))) {
            let x = polar_encode(&u).unwrap();
            prop_assert_eq!(&*polar_encode(&x).unwrap(), &u[..]);
        }

        #[test]
        fn encoding_is_linear(u in bits(32), v in bits(32)) {
            let w: Vec<u8> = u.iter().zip(&v).map(|(a, b)| a ^ b).collect();
            let lhs = polar_encode(&w).unwrap();
            let rhs = polar_encode(&u).unwrap().xor(&polar_encode(&v).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn row_and_column_order_commute(u in bits(32)) {
            let m = BitMatrix::from_vec(8, 4, u).unwrap();
            let mut rows_first = m.clone();
            encode_rows(&mut rows_first);
            encode_columns(&mut rows_first);
            let mut cols_first = m;
            encode_columns(&mut cols_first);
            encode_rows(&mut cols_first);
            prop_assert_eq!(rows_first, cols_first);
        }

        #[test]
        fn reshape_round_trips(v in bits(32)) {
            let m = row_reshape(&v, 4, 8).unwrap();
            prop_assert_eq!(row_flatten(&m), v);
        }
    }
}

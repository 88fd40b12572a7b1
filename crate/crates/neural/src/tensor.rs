//! Dense row-major f64 matrices sized for small-network training.

use serde::{Deserialize, Serialize};

/// A rows x cols matrix of f64 in row-major order.
///
/// Batches are stored as one row per sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "tensor data length {} != {}x{}",
            data.len(),
            rows,
            cols
        );
        Tensor2 { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Tensor2 { rows, cols, data }
    }

    /// Single row vector [1, n].
    pub fn row_vector(values: &[f64]) -> Self {
        Tensor2 {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Extract a column as a [rows, 1] tensor.
    pub fn column(&self, c: usize) -> Tensor2 {
        let mut out = Tensor2::zeros(self.rows, 1);
        for r in 0..self.rows {
            out.data[r] = self.get(r, c);
        }
        out
    }

    /// Concatenate two batches along the feature axis.
    pub fn hcat(&self, other: &Tensor2) -> Tensor2 {
        assert_eq!(self.rows, other.rows, "hcat row mismatch");
        let cols = self.cols + other.cols;
        let mut out = Tensor2::zeros(self.rows, cols);
        for r in 0..self.rows {
            out.row_mut(r)[..self.cols].copy_from_slice(self.row(r));
            out.row_mut(r)[self.cols..].copy_from_slice(other.row(r));
        }
        out
    }

    /// Columns [lo, hi) as a new tensor.
    pub fn slice_cols(&self, lo: usize, hi: usize) -> Tensor2 {
        assert!(lo <= hi && hi <= self.cols);
        let mut out = Tensor2::zeros(self.rows, hi - lo);
        for r in 0..self.rows {
            out.row_mut(r).copy_from_slice(&self.row(r)[lo..hi]);
        }
        out
    }

    /// self [n, k] * other [m, k]^T -> [n, m]. The usual layer product x.W^T.
    pub fn matmul_nt(&self, other: &Tensor2) -> Tensor2 {
        assert_eq!(self.cols, other.cols, "matmul_nt inner dim mismatch");
        let (n, k, m) = (self.rows, self.cols, other.rows);
        let mut out = Tensor2::zeros(n, m);
        for i in 0..n {
            let xi = self.row(i);
            let oi = out.row_mut(i);
            for j in 0..m {
                let wj = other.row(j);
                let mut acc = 0.0;
                for t in 0..k {
                    acc += xi[t] * wj[t];
                }
                oi[j] = acc;
            }
        }
        out
    }

    /// self [n, k] * other [k, m] -> [n, m].
    pub fn matmul_nn(&self, other: &Tensor2) -> Tensor2 {
        assert_eq!(self.cols, other.rows, "matmul_nn inner dim mismatch");
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = Tensor2::zeros(n, m);
        for i in 0..n {
            let xi = self.row(i);
            let oi = &mut out.data[i * m..(i + 1) * m];
            for t in 0..k {
                let x = xi[t];
                if x == 0.0 {
                    continue;
                }
                let br = &other.data[t * m..(t + 1) * m];
                for j in 0..m {
                    oi[j] += x * br[j];
                }
            }
        }
        out
    }

    /// self [n, k]^T * other [n, m] -> [k, m]. Weight-gradient product dz^T.x.
    pub fn matmul_tn(&self, other: &Tensor2) -> Tensor2 {
        assert_eq!(self.rows, other.rows, "matmul_tn batch dim mismatch");
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = Tensor2::zeros(k, m);
        for i in 0..n {
            let xi = self.row(i);
            let yi = other.row(i);
            for t in 0..k {
                let x = xi[t];
                if x == 0.0 {
                    continue;
                }
                let or = &mut out.data[t * m..(t + 1) * m];
                for j in 0..m {
                    or[j] += x * yi[j];
                }
            }
        }
        out
    }

    /// Add a [1, cols] row vector to every row.
    pub fn add_row_broadcast(&mut self, bias: &Tensor2) {
        assert_eq!(bias.rows, 1);
        assert_eq!(bias.cols, self.cols, "broadcast width mismatch");
        for r in 0..self.rows {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (v, b) in row.iter_mut().zip(&bias.data) {
                *v += *b;
            }
        }
    }

    /// Column sums as a [1, cols] tensor.
    pub fn sum_rows(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(1, self.cols);
        for r in 0..self.rows {
            for (o, v) in out.data.iter_mut().zip(self.row(r)) {
                *o += *v;
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor2 {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor2, f: impl Fn(f64, f64) -> f64) -> Tensor2 {
        assert_eq!(self.shape(), other.shape(), "zip_map shape mismatch");
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Tensor2) -> Tensor2 {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn hadamard(&self, other: &Tensor2) -> Tensor2 {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Tensor2 {
        self.map(|v| v * s)
    }

    pub fn add_assign(&mut self, other: &Tensor2) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Hard guard: non-finite values are always a bug upstream.
    pub fn assert_finite(&self, who: &str) {
        assert!(self.is_finite(), "non-finite values escaped {who}");
    }
}

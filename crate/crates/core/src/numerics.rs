//! Dense row-major matrices, elementwise activations and the seedable RNG.
//!
//! Every product kernel adds the terms of an output element in a fixed order
//! (ascending `k` for `a × b` products, four interleaved partial sums for
//! dot products), so the blocked, portable and AVX2 paths agree bit for bit.

use rand::{Rng as _, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "buffer of {} values cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!("row {i} has {} columns, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn row_vector(values: &[f64]) -> Self {
        Self { rows: 1, cols: values.len(), data: values.to_vec() }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
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

    pub fn transpose(&self) -> Matrix {
        // 8×8 blocks keep both the reads and the strided writes in cache.
        const B: usize = 8;
        let (rows, cols) = (self.rows, self.cols);
        let mut out = vec![0.0; rows * cols];
        for r0 in (0..rows).step_by(B) {
            for c0 in (0..cols).step_by(B) {
                for r in r0..(r0 + B).min(rows) {
                    let src = &self.data[r * cols..(r + 1) * cols];
                    for c in c0..(c0 + B).min(cols) {
                        out[c * rows + r] = src[c];
                    }
                }
            }
        }
        Matrix { rows: cols, cols: rows, data: out }
    }

    /// Rows in reverse order.
    pub fn reverse_rows(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            out.row_mut(self.rows - 1 - r).copy_from_slice(self.row(r));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &Matrix, alpha: f64) -> Result<()> {
        ensure_same_shape("add_scaled", self, other)?;
        axpy(alpha, &other.data, &mut self.data);
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Adds `bias` (length `cols`) to every row.
    pub fn add_row_broadcast(&mut self, bias: &[f64]) {
        debug_assert_eq!(bias.len(), self.cols);
        for r in 0..self.rows {
            for (v, b) in self.row_mut(r).iter_mut().zip(bias) {
                *v += b;
            }
        }
    }

    /// Column sums as a vector of length `cols`.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn ensure_same_shape(op: &str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "{op}: {}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

// Inner kernels. Each is compiled twice, once with AVX2 enabled and picked
// at run time. Neither build fuses multiplies into adds and every element is
// accumulated in the same order, so both produce bit-identical results.
mod kernel {
    #[inline(always)]
    pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    /// Four-lane partial sums, combined as `(l0 + l1) + (l2 + l3)`, then the tail.
    #[inline(always)]
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let b = &b[..n];
        let mut acc = [0.0f64; 4];
        for (ca, cb) in a.chunks_exact(4).zip(b.chunks_exact(4)) {
            for l in 0..4 {
                acc[l] += ca[l] * cb[l];
            }
        }
        let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        let tail = n - n % 4;
        for j in tail..n {
            s += a[j] * b[j];
        }
        s
    }

    /// `[dot(w, x0), .., dot(w, x3)]`, each bit-identical to [`dot`].
    #[inline(always)]
    pub fn dot4(w: &[f64], x: [&[f64]; 4]) -> [f64; 4] {
        let n = w.len();
        let (x0, x1, x2, x3) = (&x[0][..n], &x[1][..n], &x[2][..n], &x[3][..n]);
        let mut acc = [[0.0f64; 4]; 4];
        let chunks = w
            .chunks_exact(4)
            .zip(x0.chunks_exact(4))
            .zip(x1.chunks_exact(4))
            .zip(x2.chunks_exact(4))
            .zip(x3.chunks_exact(4));
        for ((((cw, c0), c1), c2), c3) in chunks {
            for l in 0..4 {
                acc[0][l] += cw[l] * c0[l];
                acc[1][l] += cw[l] * c1[l];
                acc[2][l] += cw[l] * c2[l];
                acc[3][l] += cw[l] * c3[l];
            }
        }
        let tail = n - n % 4;
        let rows = [x0, x1, x2, x3];
        let mut out = [0.0; 4];
        for r in 0..4 {
            let mut s = (acc[r][0] + acc[r][1]) + (acc[r][2] + acc[r][3]);
            for j in tail..n {
                s += w[j] * rows[r][j];
            }
            out[r] = s;
        }
        out
    }

    /// `c[i][j] += Σ_k a(i, k) · b[k][j]` with `k` ascending for every element,
    /// where `a(i, k) = a[i·ars + k·aks]` and rows of `b`/`c` are `ldb`/`ldc` apart.
    #[allow(clippy::too_many_arguments)]
    #[inline(always)]
    pub fn gemm_acc(m: usize, n: usize, kk: usize, a: &[f64], ars: usize, aks: usize, b: &[f64], ldb: usize, c: &mut [f64], ldc: usize) {
        for i in 0..m {
            let ci = &mut c[i * ldc..i * ldc + n];
            for k in 0..kk {
                axpy(a[i * ars + k * aks], &b[k * ldb..k * ldb + n], ci);
            }
        }
    }

    /// Explicit 256-bit versions. Each lane performs the same multiply and
    /// add sequence as the portable code, so results are identical.
    #[cfg(target_arch = "x86_64")]
    pub mod avx2 {
        use std::arch::x86_64::*;

        #[target_feature(enable = "avx2")]
        unsafe fn hsum_pairs(v: __m256d) -> f64 {
            let mut l = [0.0f64; 4];
            _mm256_storeu_pd(l.as_mut_ptr(), v);
            (l[0] + l[1]) + (l[2] + l[3])
        }

        #[target_feature(enable = "avx2")]
        pub unsafe fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
            let n = y.len().min(x.len());
            let tail = n - n % 4;
            let va = _mm256_set1_pd(alpha);
            let (px, py) = (x.as_ptr(), y.as_mut_ptr());
            let mut j = 0;
            while j < tail {
                let v = _mm256_add_pd(_mm256_loadu_pd(py.add(j)), _mm256_mul_pd(va, _mm256_loadu_pd(px.add(j))));
                _mm256_storeu_pd(py.add(j), v);
                j += 4;
            }
            super::axpy(alpha, &x[tail..n], &mut y[tail..n]);
        }

        #[target_feature(enable = "avx2")]
        pub unsafe fn dot(a: &[f64], b: &[f64]) -> f64 {
            let n = a.len();
            let b = &b[..n];
            let tail = n - n % 4;
            let mut acc = _mm256_setzero_pd();
            let mut j = 0;
            while j < tail {
                acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a.as_ptr().add(j)), _mm256_loadu_pd(b.as_ptr().add(j))));
                j += 4;
            }
            let mut s = hsum_pairs(acc);
            for j in tail..n {
                s += a[j] * b[j];
            }
            s
        }

        #[target_feature(enable = "avx2")]
        pub unsafe fn dot4(w: &[f64], x: [&[f64]; 4]) -> [f64; 4] {
            let n = w.len();
            let x = [&x[0][..n], &x[1][..n], &x[2][..n], &x[3][..n]];
            let tail = n - n % 4;
            let mut acc = [_mm256_setzero_pd(); 4];
            let mut j = 0;
            while j < tail {
                let vw = _mm256_loadu_pd(w.as_ptr().add(j));
                for r in 0..4 {
                    acc[r] = _mm256_add_pd(acc[r], _mm256_mul_pd(vw, _mm256_loadu_pd(x[r].as_ptr().add(j))));
                }
                j += 4;
            }
            let mut out = [0.0; 4];
            for r in 0..4 {
                let mut s = hsum_pairs(acc[r]);
                for j in tail..n {
                    s += w[j] * x[r][j];
                }
                out[r] = s;
            }
            out
        }

        /// Register-tiled [`super::gemm_acc`]: 4×8 output tiles held in
        /// registers while `k` runs, so each element still sums in `k` order.
        #[allow(clippy::too_many_arguments)]
        #[target_feature(enable = "avx2")]
        pub unsafe fn gemm_acc(m: usize, n: usize, kk: usize, a: &[f64], ars: usize, aks: usize, b: &[f64], ldb: usize, c: &mut [f64], ldc: usize) {
            if m == 0 || n == 0 {
                return;
            }
            assert!(kk == 0 || (m - 1) * ars + (kk - 1) * aks < a.len());
            assert!(kk == 0 || (kk - 1) * ldb + n <= b.len());
            assert!((m - 1) * ldc + n <= c.len());
            let (pa, pb, pc) = (a.as_ptr(), b.as_ptr(), c.as_mut_ptr());
            let rows4 = m - m % 4;
            let mut j = 0;
            while j + 8 <= n {
                let mut i = 0;
                while i < rows4 {
                    let mut acc = [_mm256_setzero_pd(); 8];
                    for r in 0..4 {
                        acc[2 * r] = _mm256_loadu_pd(pc.add((i + r) * ldc + j));
                        acc[2 * r + 1] = _mm256_loadu_pd(pc.add((i + r) * ldc + j + 4));
                    }
                    for k in 0..kk {
                        let b0 = _mm256_loadu_pd(pb.add(k * ldb + j));
                        let b1 = _mm256_loadu_pd(pb.add(k * ldb + j + 4));
                        for r in 0..4 {
                            let ar = _mm256_set1_pd(*pa.add((i + r) * ars + k * aks));
                            acc[2 * r] = _mm256_add_pd(acc[2 * r], _mm256_mul_pd(ar, b0));
                            acc[2 * r + 1] = _mm256_add_pd(acc[2 * r + 1], _mm256_mul_pd(ar, b1));
                        }
                    }
                    for r in 0..4 {
                        _mm256_storeu_pd(pc.add((i + r) * ldc + j), acc[2 * r]);
                        _mm256_storeu_pd(pc.add((i + r) * ldc + j + 4), acc[2 * r + 1]);
                    }
                    i += 4;
                }
                j += 8;
            }
            let j_tiled = j;
            // Leftover rows: single-row strips, 32 columns (eight independent
            // accumulators) at a time, then 4.
            for i in rows4..m {
                let mut j = 0;
                while j + 32 <= j_tiled {
                    let mut acc = [_mm256_setzero_pd(); 8];
                    for (q, v) in acc.iter_mut().enumerate() {
                        *v = _mm256_loadu_pd(pc.add(i * ldc + j + 4 * q));
                    }
                    for k in 0..kk {
                        let ar = _mm256_set1_pd(*pa.add(i * ars + k * aks));
                        for (q, v) in acc.iter_mut().enumerate() {
                            *v = _mm256_add_pd(*v, _mm256_mul_pd(ar, _mm256_loadu_pd(pb.add(k * ldb + j + 4 * q))));
                        }
                    }
                    for (q, v) in acc.iter().enumerate() {
                        _mm256_storeu_pd(pc.add(i * ldc + j + 4 * q), *v);
                    }
                    j += 32;
                }
                while j + 4 <= j_tiled {
                    let mut acc = _mm256_loadu_pd(pc.add(i * ldc + j));
                    for k in 0..kk {
                        let ar = _mm256_set1_pd(*pa.add(i * ars + k * aks));
                        acc = _mm256_add_pd(acc, _mm256_mul_pd(ar, _mm256_loadu_pd(pb.add(k * ldb + j))));
                    }
                    _mm256_storeu_pd(pc.add(i * ldc + j), acc);
                    j += 4;
                }
            }
            let mut j = j_tiled;
            while j + 4 <= n {
                for i in 0..m {
                    let mut acc = _mm256_loadu_pd(pc.add(i * ldc + j));
                    for k in 0..kk {
                        let ar = _mm256_set1_pd(*pa.add(i * ars + k * aks));
                        acc = _mm256_add_pd(acc, _mm256_mul_pd(ar, _mm256_loadu_pd(pb.add(k * ldb + j))));
                    }
                    _mm256_storeu_pd(pc.add(i * ldc + j), acc);
                }
                j += 4;
            }
            for jj in j..n {
                for i in 0..m {
                    let mut s = *pc.add(i * ldc + jj);
                    for k in 0..kk {
                        s += *pa.add(i * ars + k * aks) * *pb.add(k * ldb + jj);
                    }
                    *pc.add(i * ldc + jj) = s;
                }
            }
        }
    }
}

#[inline]
fn use_avx2() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

macro_rules! dispatch {
    ($name:ident($($arg:expr),*)) => {{
        #[cfg(target_arch = "x86_64")]
        {
            if use_avx2() {
                // SAFETY: the CPU supports AVX2, checked just above.
                unsafe { kernel::avx2::$name($($arg),*) }
            } else {
                kernel::$name($($arg),*)
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            kernel::$name($($arg),*)
        }
    }};
}

/// `y += alpha · x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    dispatch!(axpy(alpha, x, y))
}

/// `c[i][j] += Σ_k a(i, k) · b[k][j]`, `k` ascending, with `a(i, k) = a[i·ars + k·aks]`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn gemm_acc(m: usize, n: usize, kk: usize, a: &[f64], ars: usize, aks: usize, b: &[f64], ldb: usize, c: &mut [f64], ldc: usize) {
    dispatch!(gemm_acc(m, n, kk, a, ars, aks, b, ldb, c, ldc))
}

/// Inner product with a fixed summation order (four interleaved partial sums).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    dispatch!(dot(a, b))
}

/// `a × b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    gemm_acc(a.rows, b.cols, a.cols, &a.data, a.cols, 1, &b.data, b.cols, &mut out.data, b.cols);
    Ok(out)
}

/// `out += a × b`.
pub fn matmul_acc(a: &Matrix, b: &Matrix, out: &mut Matrix) -> Result<()> {
    if a.cols != b.rows || out.rows != a.rows || out.cols != b.cols {
        return Err(Error::Shape(format!(
            "matmul_acc: {}x{} times {}x{} into {}x{}",
            a.rows, a.cols, b.rows, b.cols, out.rows, out.cols
        )));
    }
    gemm_acc(a.rows, b.cols, a.cols, &a.data, a.cols, 1, &b.data, b.cols, &mut out.data, b.cols);
    Ok(())
}

/// `a × bᵀ`, i.e. each row of `a` dotted with each row of `b`.
pub fn matmul_bt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::Shape(format!(
            "matmul_bt: {}x{} times transpose of {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.rows);
    let blocks = a.rows / 4;
    // Tiles of `b` rows small enough to stay in cache across all row blocks.
    const TILE: usize = 16;
    for j0 in (0..b.rows).step_by(TILE) {
        for blk in 0..blocks {
            let i = 4 * blk;
            let rows = [a.row(i), a.row(i + 1), a.row(i + 2), a.row(i + 3)];
            for j in j0..(j0 + TILE).min(b.rows) {
                let v = dispatch!(dot4(b.row(j), rows));
                for (r, vr) in v.into_iter().enumerate() {
                    out.data[(i + r) * b.rows + j] = vr;
                }
            }
        }
    }
    for i in 4 * blocks..a.rows {
        for j in 0..b.rows {
            out.data[i * b.rows + j] = dot(a.row(i), b.row(j));
        }
    }
    Ok(out)
}

/// `aᵀ × b`, accumulated into `out` (shape `a.cols × b.cols`).
pub fn matmul_at_acc(a: &Matrix, b: &Matrix, out: &mut Matrix) -> Result<()> {
    if a.rows != b.rows || out.rows != a.cols || out.cols != b.cols {
        return Err(Error::Shape(format!(
            "matmul_at: transpose of {}x{} times {}x{} into {}x{}",
            a.rows, a.cols, b.rows, b.cols, out.rows, out.cols
        )));
    }
    gemm_acc(a.cols, b.cols, a.rows, &a.data, 1, a.cols, &b.data, b.cols, &mut out.data, b.cols);
    Ok(())
}

/// `out += m × v`, given `mt`, the transpose of `m` (shape `v.len() × out.len()`).
#[inline]
pub fn matvec_t_acc(mt: &Matrix, v: &[f64], out: &mut [f64]) {
    assert_eq!(mt.rows, v.len());
    assert_eq!(mt.cols, out.len());
    gemm_acc(1, mt.cols, mt.rows, v, 0, 1, &mt.data, mt.cols, out, mt.cols);
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn reject_nan(op: &str, x: &Matrix) -> Result<()> {
    if x.data.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite(format!("{op} received NaN input")));
    }
    Ok(())
}

pub fn sigmoid(x: &Matrix) -> Result<Matrix> {
    reject_nan("sigmoid", x)?;
    Ok(x.map(sigmoid_scalar))
}

pub fn relu(x: &Matrix) -> Result<Matrix> {
    reject_nan("relu", x)?;
    Ok(x.map(|v| v.max(0.0)))
}

pub fn tanh_(x: &Matrix) -> Result<Matrix> {
    reject_nan("tanh", x)?;
    Ok(x.map(f64::tanh))
}

/// Softmax of one slice in place, with the max subtracted first.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

pub fn softmax_rows(x: &Matrix) -> Result<Matrix> {
    reject_nan("softmax_rows", x)?;
    let mut out = x.clone();
    for r in 0..out.rows {
        softmax_in_place(out.row_mut(r));
    }
    Ok(out)
}

/// Deterministic generator: identical seeds give identical streams.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream derived from this generator's seed and a label.
    /// Does not advance `self`.
    pub fn derive(&self, label: &str) -> Rng {
        // FNV-1a over the label, mixed with the parent seed.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        Rng::new(self.seed ^ h.rotate_left(17))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn matrix_uniform(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        let data = (0..rows * cols).map(|_| self.uniform_range(lo, hi)).collect();
        Matrix { rows, cols, data }
    }

    pub fn matrix_normal(&mut self, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| self.normal()).collect();
        Matrix { rows, cols, data }
    }
}

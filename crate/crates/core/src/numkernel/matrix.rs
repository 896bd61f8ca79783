use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use super::KernelError;

pub type C64 = Complex64;

/// Below this size the plain loop, which skips zero entries, wins.
const GEMM_MIN_DIM: usize = 16;

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        CMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(dim: usize, data: Vec<C64>) -> Result<Self, KernelError> {
        if dim == 0 || data.len() != dim * dim {
            return Err(KernelError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(CMatrix { dim, data })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = C64::new(d, 0.0);
        }
        m
    }

    pub fn scalar(dim: usize, s: C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = s;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Trace divided by the dimension.
    pub fn normalized_trace(&self) -> C64 {
        self.trace() / self.dim as f64
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `m - m*`, an upper bound for the operator-norm defect.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[i * n + j] - self.data[j * n + i].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Frobenius norm of `u u* - I`.
    pub fn unitary_defect(&self) -> f64 {
        let p = self.matmul(&self.adjoint());
        (&p - &CMatrix::identity(self.dim)).frobenius()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Hermitian part `(m + m*)/2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5
        })
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        if n >= GEMM_MIN_DIM {
            let mut out = CMatrix::zeros(n);
            let rs = n as isize;
            // SAFETY: all three buffers hold `n * n` entries in row-major
            // order, and `out` aliases neither input.
            unsafe {
                gemm::gemm(
                    n,
                    n,
                    n,
                    out.data.as_mut_ptr(),
                    1,
                    rs,
                    false,
                    self.data.as_ptr(),
                    1,
                    rs,
                    rhs.data.as_ptr(),
                    1,
                    rs,
                    C64::new(0.0, 0.0),
                    C64::new(1.0, 0.0),
                    false,
                    false,
                    false,
                    gemm::Parallelism::None,
                );
            }
            return out;
        }
        // Split the right factor into real/imaginary planes so the inner loop
        // runs over contiguous f64 slices.
        let mut b_re = vec![0.0; n * n];
        let mut b_im = vec![0.0; n * n];
        for (k, z) in rhs.data.iter().enumerate() {
            b_re[k] = z.re;
            b_im[k] = z.im;
        }
        let mut out = CMatrix::zeros(n);
        let mut acc_re = vec![0.0; n];
        let mut acc_im = vec![0.0; n];
        for i in 0..n {
            acc_re.iter_mut().for_each(|x| *x = 0.0);
            acc_im.iter_mut().for_each(|x| *x = 0.0);
            let row = &self.data[i * n..(i + 1) * n];
            let live: Vec<usize> = (0..n)
                .filter(|&k| row[k].re != 0.0 || row[k].im != 0.0)
                .collect();
            // Four rows of the right factor per pass, so the accumulators are
            // loaded and stored a quarter as often.
            let mut quads = live.chunks_exact(4);
            for quad in &mut quads {
                let [a0, a1, a2, a3]: [C64; 4] = std::array::from_fn(|m| row[quad[m]]);
                fn plane(b: &[f64], k: usize, n: usize) -> &[f64] {
                    &b[k * n..(k + 1) * n]
                }
                let (r0, r1, r2, r3) = (
                    plane(&b_re, quad[0], n),
                    plane(&b_re, quad[1], n),
                    plane(&b_re, quad[2], n),
                    plane(&b_re, quad[3], n),
                );
                let (i0, i1, i2, i3) = (
                    plane(&b_im, quad[0], n),
                    plane(&b_im, quad[1], n),
                    plane(&b_im, quad[2], n),
                    plane(&b_im, quad[3], n),
                );
                let (acc_re, acc_im) = (&mut acc_re[..n], &mut acc_im[..n]);
                let (r0, r1, r2, r3) = (&r0[..n], &r1[..n], &r2[..n], &r3[..n]);
                let (i0, i1, i2, i3) = (&i0[..n], &i1[..n], &i2[..n], &i3[..n]);
                for j in 0..n {
                    acc_re[j] += a0.re * r0[j] - a0.im * i0[j] + a1.re * r1[j] - a1.im * i1[j]
                        + a2.re * r2[j]
                        - a2.im * i2[j]
                        + a3.re * r3[j]
                        - a3.im * i3[j];
                    acc_im[j] += a0.re * i0[j]
                        + a0.im * r0[j]
                        + a1.re * i1[j]
                        + a1.im * r1[j]
                        + a2.re * i2[j]
                        + a2.im * r2[j]
                        + a3.re * i3[j]
                        + a3.im * r3[j];
                }
            }
            for &k in quads.remainder() {
                let a = row[k];
                let br = &b_re[k * n..(k + 1) * n];
                let bi = &b_im[k * n..(k + 1) * n];
                for ((cr, ci), (&xr, &xi)) in acc_re
                    .iter_mut()
                    .zip(acc_im.iter_mut())
                    .zip(br.iter().zip(bi.iter()))
                {
                    *cr += a.re * xr - a.im * xi;
                    *ci += a.re * xi + a.im * xr;
                }
            }
            for j in 0..n {
                out.data[i * n + j] = C64::new(acc_re[j], acc_im[j]);
            }
        }
        out
    }

    /// `u · self · u*`.
    pub fn conjugate_by(&self, u: &CMatrix) -> CMatrix {
        u.matmul(self).matmul(&u.adjoint())
    }

    /// Kronecker product `self ⊗ rhs`; `rhs` indexes the fast coordinate.
    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let (p, q) = (self.dim, rhs.dim);
        let n = p * q;
        let mut out = CMatrix::zeros(n);
        for i in 0..p {
            for j in 0..p {
                let a = self.data[i * p + j];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for k in 0..q {
                    for l in 0..q {
                        out.data[(i * q + k) * n + j * q + l] = a * rhs.data[k * q + l];
                    }
                }
            }
        }
        out
    }

    /// Block-diagonal direct sum of the given matrices, in order.
    pub fn direct_sum<'a>(blocks: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
        let blocks: Vec<&CMatrix> = blocks.into_iter().collect();
        let n: usize = blocks.iter().map(|b| b.dim).sum();
        let mut out = CMatrix::zeros(n);
        let mut off = 0;
        for b in blocks {
            out.set_block(off, b);
            off += b.dim;
        }
        out
    }

    /// Writes `block` with its top-left corner at `(off, off)`.
    pub fn set_block(&mut self, off: usize, block: &CMatrix) {
        let (n, k) = (self.dim, block.dim);
        assert!(off + k <= n, "block does not fit");
        for i in 0..k {
            self.data[(off + i) * n + off..(off + i) * n + off + k]
                .copy_from_slice(&block.data[i * k..(i + 1) * k]);
        }
    }

    /// The `k×k` diagonal block starting at `(off, off)`.
    pub fn diagonal_block(&self, off: usize, k: usize) -> CMatrix {
        let n = self.dim;
        assert!(off + k <= n, "block out of range");
        let mut out = CMatrix::zeros(k);
        for i in 0..k {
            out.data[i * k..(i + 1) * k]
                .copy_from_slice(&self.data[(off + i) * n + off..(off + i) * n + off + k]);
        }
        out
    }

    /// Simultaneous row/column permutation: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> CMatrix {
        let n = self.dim;
        assert_eq!(perm.len(), n);
        let mut out = CMatrix::zeros(n);
        for (i, &pi) in perm.iter().enumerate() {
            for (j, &pj) in perm.iter().enumerate() {
                out.data[i * n + j] = self.data[pi * n + pj];
            }
        }
        out
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        if self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            return 0.0;
        }
        let scale = self.max_abs();
        if self.hermitian_defect() <= 1e-14 * scale * self.dim as f64 {
            let m = self.hermitian_part();
            let ev = super::eigen::jacobi_eigen(&m, false);
            return ev.values.iter().fold(0.0, |acc, v| f64::max(acc, v.abs()));
        }
        let gram = self.adjoint().matmul(self);
        let ev = super::eigen::jacobi_eigen(&gram.hermitian_part(), false);
        ev.values
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v))
            .max(0.0)
            .sqrt()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim.min(8) {
            write!(f, "  ")?;
            for j in 0..self.dim.min(8) {
                let z = self[(i, j)];
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        if self.dim > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn matmul_matches_naive() {
        let a = CMatrix::from_fn(5, |i, j| c(i as f64 - j as f64, (i * j) as f64 * 0.1));
        let b = CMatrix::from_fn(5, |i, j| c((i + 2 * j) as f64 * 0.3, -(i as f64)));
        let p = a.matmul(&b);
        for i in 0..5 {
            for j in 0..5 {
                let mut s = c(0.0, 0.0);
                for k in 0..5 {
                    s += a[(i, k)] * b[(k, j)];
                }
                assert!((p[(i, j)] - s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kron_and_direct_sum_shapes() {
        let a = CMatrix::from_real_diag(&[1.0, 2.0]);
        let b = CMatrix::from_real_diag(&[3.0, 5.0, 7.0]);
        let k = a.kron(&b);
        assert_eq!(k.dim(), 6);
        assert_eq!(k[(4, 4)], c(10.0, 0.0));
        let s = CMatrix::direct_sum([&a, &b]);
        assert_eq!(s.dim(), 5);
        assert_eq!(s[(2, 2)], c(3.0, 0.0));
        assert_eq!(s.diagonal_block(2, 3), b);
    }

    #[test]
    fn op_norm_of_nonnormal() {
        // [[0, 2], [0, 0]] has operator norm 2.
        let mut m = CMatrix::zeros(2);
        m[(0, 1)] = c(2.0, 0.0);
        assert!((m.op_norm() - 2.0).abs() < 1e-12);
        assert_eq!(CMatrix::zeros(3).op_norm(), 0.0);
    }

    #[test]
    fn permuted_is_conjugation() {
        let m = CMatrix::from_fn(3, |i, j| c((3 * i + j) as f64, 0.0));
        let perm = [2, 0, 1];
        let p = CMatrix::from_fn(3, |i, j| {
            if perm[i] == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        assert_eq!(m.permuted(&perm), m.conjugate_by(&p));
    }
}

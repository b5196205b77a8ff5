//! Small dense matrix kernels used by the Fourier-domain slice operations.
//!
//! Everything here is column-major. `CMat` plus the Householder QR is the
//! workhorse behind the tensor QR factorization; `Mat` is the plain real
//! matrix used by the block-circulant oracle and a few closed forms.

use num_complex::Complex64;

/// Dense real matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul shape");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b == 0.0 {
                    continue;
                }
                for i in 0..self.rows {
                    out[(i, j)] += self[(i, k)] * b;
                }
            }
        }
        out
    }

    pub fn col_norm(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self[(i, j)] * self[(i, j)]).sum::<f64>().sqrt()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.rows + i]
    }
}

/// Dense complex matrix, column-major.
#[derive(Debug, Clone)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn conj_transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matmul shape");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b == Complex64::ZERO {
                    continue;
                }
                let lhs_col = self.col(k);
                let out_col = out.col_mut(j);
                for i in 0..self.rows {
                    out_col[i] += lhs_col[i] * b;
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[j * self.rows + i]
    }
}

/// Economy Householder QR of an `m x n` complex matrix.
///
/// Returns `(q, r)` with `q: m x s`, `r: s x n`, `s = min(m, n)`, and the
/// diagonal of `r` real and nonnegative so the factorization is unique for
/// full-rank input.
pub fn qr_econ(a: &CMat) -> (CMat, CMat) {
    let (m, n) = (a.rows, a.cols);
    let s = m.min(n);
    let mut r_full = a.clone();
    // Householder vectors stored column-wise; v[k] has length m - k.
    let mut vs: Vec<Vec<Complex64>> = Vec::with_capacity(s);

    for k in 0..s {
        // Build the reflector for column k.
        let mut v: Vec<Complex64> = (k..m).map(|i| r_full[(i, k)]).collect();
        let norm_x = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x > 0.0 {
            let x0 = v[0];
            let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::ONE };
            v[0] += phase * norm_x;
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm > 0.0 {
                for z in v.iter_mut() {
                    *z /= vnorm;
                }
                // Apply I - 2 v v^* to the trailing block of r_full.
                for j in k..n {
                    let mut dot = Complex64::ZERO;
                    for (off, vi) in v.iter().enumerate() {
                        dot += vi.conj() * r_full[(k + off, j)];
                    }
                    let dot2 = dot * 2.0;
                    for (off, vi) in v.iter().enumerate() {
                        let val = r_full[(k + off, j)] - vi * dot2;
                        r_full[(k + off, j)] = val;
                    }
                }
            } else {
                v = vec![Complex64::ZERO; m - k];
            }
        } else {
            v = vec![Complex64::ZERO; m - k];
        }
        vs.push(v);
    }

    // Accumulate Q by applying the reflectors to the first s identity columns.
    let mut q = CMat::eye(m, s);
    for j in 0..s {
        for k in (0..s).rev() {
            let v = &vs[k];
            if v.iter().all(|z| *z == Complex64::ZERO) {
                continue;
            }
            let mut dot = Complex64::ZERO;
            for (off, vi) in v.iter().enumerate() {
                dot += vi.conj() * q[(k + off, j)];
            }
            let dot2 = dot * 2.0;
            for (off, vi) in v.iter().enumerate() {
                let val = q[(k + off, j)] - vi * dot2;
                q[(k + off, j)] = val;
            }
        }
    }

    let mut r = CMat::zeros(s, n);
    for j in 0..n {
        for i in 0..s.min(j + 1) {
            r[(i, j)] = r_full[(i, j)];
        }
    }

    // Fix phases: nonnegative real diagonal of R.
    for k in 0..s.min(n) {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let pc = phase.conj();
            for j in k..n {
                r[(k, j)] *= pc;
            }
            for i in 0..m {
                q[(i, k)] *= phase;
            }
        }
    }

    (q, r)
}

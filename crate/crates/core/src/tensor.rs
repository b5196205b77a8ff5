//! Third-order tensor container and the t-product algebra.
//!
//! All products are computed in the Fourier domain along mode 3: the DFT
//! block-diagonalizes the block-circulant matrix of a tensor, so a t-product
//! reduces to one matrix product per frontal slice of the transformed tensor.
//! The forward transform is unnormalized and the inverse carries the `1/n3`
//! factor, matching the usual `fft(..., [], 3)` convention.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{CMat, Mat};

/// Relative imaginary residue above which `ifft_mode3` reports an error
/// instead of silently discarding the imaginary part.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-6;

/// Real third-order tensor, slice-major storage with column-major frontal
/// slices: entry `(i, j, k)` lives at `k*n1*n2 + j*n1 + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    data: Vec<f64>,
}

/// Complex third-order tensor; the Fourier-domain counterpart of [`Tensor3`].
#[derive(Debug, Clone)]
pub struct CTensor3 {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    data: Vec<Complex64>,
}

impl Tensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        assert!(n1 > 0 && n2 > 0 && n3 > 0, "dimensions must be positive");
        Tensor3 { n1, n2, n3, data: vec![0.0; n1 * n2 * n3] }
    }

    /// Construct from raw slice-major data, rejecting non-finite entries.
    pub fn from_data(n1: usize, n2: usize, n3: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n1 * n2 * n3 {
            return Err(Error::DimensionMismatch(format!(
                "data length {} != {n1}x{n2}x{n3}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("tensor construction"));
        }
        Ok(Tensor3 { n1, n2, n3, data })
    }

    pub fn from_fn(n1: usize, n2: usize, n3: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(n1, n2, n3);
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    t[(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Identity tensor: identity matrix in the first frontal slice.
    pub fn identity(n: usize, n3: usize) -> Self {
        Tensor3::from_fn(n, n, n3, |i, j, k| if i == j && k == 0 { 1.0 } else { 0.0 })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Frontal slice `k` as a column-major matrix copy.
    pub fn slice(&self, k: usize) -> Mat {
        let n = self.n1 * self.n2;
        Mat { rows: self.n1, cols: self.n2, data: self.data[k * n..(k + 1) * n].to_vec() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3 { n1: self.n1, n2: self.n2, n3: self.n3, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, other: &Tensor3, f: impl Fn(f64, f64) -> f64) -> Tensor3 {
        assert_eq!(self.shape(), other.shape(), "zip shape");
        Tensor3 {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            data: self.data.iter().zip(other.data.iter()).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Tensor3) -> Tensor3 {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Tensor3 {
        self.map(|v| v * s)
    }

    pub fn dot(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.shape(), other.shape(), "dot shape");
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum()
    }
}

impl std::ops::Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[k * self.n1 * self.n2 + j * self.n1 + i]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for Tensor3 {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[k * self.n1 * self.n2 + j * self.n1 + i]
    }
}

impl CTensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        CTensor3 { n1, n2, n3, data: vec![Complex64::ZERO; n1 * n2 * n3] }
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Frontal slice `k` as a column-major complex matrix copy.
    pub fn slice(&self, k: usize) -> CMat {
        let n = self.n1 * self.n2;
        CMat { rows: self.n1, cols: self.n2, data: self.data[k * n..(k + 1) * n].to_vec() }
    }

    pub fn set_slice(&mut self, k: usize, m: &CMat) {
        assert_eq!((m.rows, m.cols), (self.n1, self.n2), "slice shape");
        let n = self.n1 * self.n2;
        self.data[k * n..(k + 1) * n].copy_from_slice(&m.data);
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize, usize)> for CTensor3 {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &Complex64 {
        &self.data[k * self.n1 * self.n2 + j * self.n1 + i]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for CTensor3 {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut Complex64 {
        &mut self.data[k * self.n1 * self.n2 + j * self.n1 + i]
    }
}

/// DFT of every tube fiber `a(i, j, :)`, unnormalized.
pub fn fft_mode3(a: &Tensor3) -> CTensor3 {
    let (n1, n2, n3) = a.shape();
    let mut out = CTensor3::zeros(n1, n2, n3);
    let fft = FftPlanner::new().plan_fft_forward(n3);
    let stride = n1 * n2;
    let mut tube = vec![Complex64::ZERO; n3];
    for j in 0..n2 {
        for i in 0..n1 {
            let base = j * n1 + i;
            for k in 0..n3 {
                tube[k] = Complex64::new(a.data[k * stride + base], 0.0);
            }
            fft.process(&mut tube);
            for k in 0..n3 {
                out.data[k * stride + base] = tube[k];
            }
        }
    }
    out
}

/// Inverse of [`fft_mode3`] (carries the `1/n3` factor). The input must be
/// conjugate-symmetric along mode 3; the imaginary residue is checked.
pub fn ifft_mode3(a: &CTensor3) -> Result<Tensor3> {
    let (n1, n2, n3) = (a.n1, a.n2, a.n3);
    let mut out = Tensor3::zeros(n1, n2, n3);
    let fft = FftPlanner::new().plan_fft_inverse(n3);
    let stride = n1 * n2;
    let mut tube = vec![Complex64::ZERO; n3];
    let scale = 1.0 / n3 as f64;
    let mut imag_sq = 0.0f64;
    let mut total_sq = 0.0f64;
    for j in 0..n2 {
        for i in 0..n1 {
            let base = j * n1 + i;
            for k in 0..n3 {
                tube[k] = a.data[k * stride + base];
            }
            fft.process(&mut tube);
            for k in 0..n3 {
                let v = tube[k] * scale;
                imag_sq += v.im * v.im;
                total_sq += v.norm_sqr();
                out.data[k * stride + base] = v.re;
            }
        }
    }
    let rel = if total_sq > 0.0 { (imag_sq / total_sq).sqrt() } else { 0.0 };
    if rel > IMAG_RESIDUE_LIMIT {
        return Err(Error::ImaginaryResidueTooLarge { got: rel, limit: IMAG_RESIDUE_LIMIT });
    }
    Ok(out)
}

/// t-product `a * b`, computed slice-wise in the Fourier domain.
pub fn t_product(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.n2 != b.n1 || a.n3 != b.n3 {
        return Err(Error::DimensionMismatch(format!(
            "t_product: {}x{}x{} * {}x{}x{}",
            a.n1, a.n2, a.n3, b.n1, b.n2, b.n3
        )));
    }
    let ah = fft_mode3(a);
    let bh = fft_mode3(b);
    let mut ch = CTensor3::zeros(a.n1, b.n2, a.n3);
    for k in 0..a.n3 {
        ch.set_slice(k, &ah.slice(k).matmul(&bh.slice(k)));
    }
    ifft_mode3(&ch)
}

/// Block-circulant matrix of `a`: block `(p, q)` is frontal slice
/// `(p - q) mod n3`. Reference implementation; quadratic in `n3`, intended
/// as a correctness oracle rather than a fast path.
pub fn bcirc_oracle(a: &Tensor3) -> Mat {
    let (n1, n2, n3) = a.shape();
    let mut m = Mat::zeros(n1 * n3, n2 * n3);
    for p in 0..n3 {
        for q in 0..n3 {
            let k = (p + n3 - q) % n3;
            for j in 0..n2 {
                for i in 0..n1 {
                    m[(p * n1 + i, q * n2 + j)] = a[(i, j, k)];
                }
            }
        }
    }
    m
}

/// Stack of frontal slices, `n1*n3 x n2`.
pub fn unfold(a: &Tensor3) -> Mat {
    let (n1, n2, n3) = a.shape();
    Mat::from_fn(n1 * n3, n2, |i, j| a[(i % n1, j, i / n1)])
}

/// Inverse of [`unfold`].
pub fn fold(m: &Mat, n1: usize, n3: usize) -> Tensor3 {
    assert_eq!(m.rows, n1 * n3, "fold shape");
    Tensor3::from_fn(n1, m.cols, n3, |i, j, k| m[(k * n1 + i, j)])
}

/// Tensor conjugate transpose: transposed slices with slices `2..n3`
/// reversed, so that `bcirc(a^*) = bcirc(a)^T`.
pub fn conj_transpose(a: &Tensor3) -> Tensor3 {
    let (n1, n2, n3) = a.shape();
    Tensor3::from_fn(n2, n1, n3, |i, j, k| {
        let src_k = if k == 0 { 0 } else { n3 - k };
        a[(j, i, src_k)]
    })
}

/// Norm kinds supported on [`Tensor3`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Frobenius,
    L1,
    /// Sum over lateral slices `a(:, j, :)` of their Frobenius norms.
    L21,
}

pub fn norm(a: &Tensor3, kind: NormKind) -> f64 {
    match kind {
        NormKind::Frobenius => a.data.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::L1 => a.data.iter().map(|v| v.abs()).sum(),
        NormKind::L21 => {
            let (n1, n2, n3) = a.shape();
            (0..n2)
                .map(|j| {
                    let mut s = 0.0;
                    for k in 0..n3 {
                        for i in 0..n1 {
                            let v = a[(i, j, k)];
                            s += v * v;
                        }
                    }
                    s.sqrt()
                })
                .sum()
        }
    }
}

/// Separable 3-D DFT over all three modes, unnormalized.
pub fn fft3(a: &Tensor3) -> CTensor3 {
    let (n1, n2, n3) = a.shape();
    let mut c = CTensor3 {
        n1,
        n2,
        n3,
        data: a.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    };
    fft3_axis(&mut c, 0, false);
    fft3_axis(&mut c, 1, false);
    fft3_axis(&mut c, 2, false);
    c
}

/// Inverse of [`fft3`] with the `1/(n1 n2 n3)` factor; imaginary part checked.
pub fn ifft3(a: &CTensor3) -> Result<Tensor3> {
    let mut c = a.clone();
    fft3_axis(&mut c, 0, true);
    fft3_axis(&mut c, 1, true);
    fft3_axis(&mut c, 2, true);
    let scale = 1.0 / (a.n1 * a.n2 * a.n3) as f64;
    let mut imag_sq = 0.0;
    let mut total_sq = 0.0;
    let data: Vec<f64> = c
        .data
        .iter()
        .map(|v| {
            let s = v * scale;
            imag_sq += s.im * s.im;
            total_sq += s.norm_sqr();
            s.re
        })
        .collect();
    let rel = if total_sq > 0.0 { (imag_sq / total_sq).sqrt() } else { 0.0 };
    if rel > IMAG_RESIDUE_LIMIT {
        return Err(Error::ImaginaryResidueTooLarge { got: rel, limit: IMAG_RESIDUE_LIMIT });
    }
    Ok(Tensor3 { n1: a.n1, n2: a.n2, n3: a.n3, data })
}

fn fft3_axis(c: &mut CTensor3, axis: usize, inverse: bool) {
    let (n1, n2, n3) = (c.n1, c.n2, c.n3);
    let n = [n1, n2, n3][axis];
    if n == 1 {
        return;
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut line = vec![Complex64::ZERO; n];
    let idx = |i: usize, j: usize, k: usize| k * n1 * n2 + j * n1 + i;
    match axis {
        0 => {
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        line[i] = c.data[idx(i, j, k)];
                    }
                    fft.process(&mut line);
                    for i in 0..n1 {
                        c.data[idx(i, j, k)] = line[i];
                    }
                }
            }
        }
        1 => {
            for k in 0..n3 {
                for i in 0..n1 {
                    for j in 0..n2 {
                        line[j] = c.data[idx(i, j, k)];
                    }
                    fft.process(&mut line);
                    for j in 0..n2 {
                        c.data[idx(i, j, k)] = line[j];
                    }
                }
            }
        }
        _ => {
            for j in 0..n2 {
                for i in 0..n1 {
                    for k in 0..n3 {
                        line[k] = c.data[idx(i, j, k)];
                    }
                    fft.process(&mut line);
                    for k in 0..n3 {
                        c.data[idx(i, j, k)] = line[k];
                    }
                }
            }
        }
    }
}

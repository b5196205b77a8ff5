//! L2,1-norm proximal operators: the matrix closed form, the tensor QR
//! tri-factorization `l * d * r_fac`, and the shrink-on-core minimizer built
//! from them.

use crate::error::{Error, Result};
use crate::linalg::{CMat, Mat};
use crate::qr::t_qr_fourier;
use crate::tensor::{fft_mode3, ifft_mode3, CTensor3, Tensor3};

/// Orthogonal tri-factorization `l * d * r_fac ~ z` at rank `rank`.
#[derive(Debug, Clone)]
pub struct TriFactor {
    /// `n1 x rank x n3`, column-orthogonal under the t-product.
    pub l: Tensor3,
    /// `rank x rank x n3` core.
    pub d: Tensor3,
    /// `rank x n2 x n3`, row-orthogonal under the t-product.
    pub r_fac: Tensor3,
    pub rank: usize,
}

/// Core tensor plus threshold for [`l21_shrink_core`].
#[derive(Debug, Clone)]
pub struct ShrinkInput {
    pub d_t: Tensor3,
    pub tau: f64,
}

/// Default fit tolerance for the tri-factorization iteration.
pub const TRIFACTOR_EPS: f64 = 1e-6;
/// Default cap on tri-factorization sweeps.
pub const TRIFACTOR_MAX_ITERS: usize = 20;

/// Group soft-threshold on matrix columns: column `j` scales by
/// `max((|y_j| - tau) / |y_j|, 0)`.
pub fn l21_prox_matrix(y: &Mat, tau: f64) -> Mat {
    assert!(tau > 0.0, "tau must be positive");
    let mut z = Mat::zeros(y.rows, y.cols);
    for j in 0..y.cols {
        let n = y.col_norm(j);
        if n > tau {
            let s = (n - tau) / n;
            for i in 0..y.rows {
                z[(i, j)] = s * y[(i, j)];
            }
        }
    }
    z
}

fn check_rank(r: usize, n1: usize, n2: usize) -> Result<()> {
    let max = n1.min(n2);
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { r, max });
    }
    Ok(())
}

/// Rectangular identity in every Fourier slice, the transform of a tensor
/// with ones on the main diagonal of the first frontal slice.
fn eye_hat(rows: usize, cols: usize, n3: usize) -> CTensor3 {
    let mut t = CTensor3::zeros(rows, cols, n3);
    for k in 0..n3 {
        t.set_slice(k, &CMat::eye(rows, cols));
    }
    t
}

fn slice_product3(a: &CTensor3, b: &CTensor3, c: &CTensor3) -> CTensor3 {
    let mut out = CTensor3::zeros(a.n1, c.n2, a.n3);
    for k in 0..a.n3 {
        out.set_slice(k, &a.slice(k).matmul(&b.slice(k)).matmul(&c.slice(k)));
    }
    out
}

fn ct_sub_norm(a: &CTensor3, b: &CTensor3) -> f64 {
    a.data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Alternating QR sweeps in the Fourier domain. Returns `(l_hat, d_hat,
/// r_hat, fit_sq)` where `fit_sq` is the spatial-domain squared fit error
/// (Parseval-scaled).
fn trifactor_fourier(
    zh: &CTensor3,
    rank: usize,
    max_iters: usize,
    eps: f64,
) -> (CTensor3, CTensor3, CTensor3, f64) {
    let (n1, n2, n3) = (zh.n1, zh.n2, zh.n3);
    let mut lh = eye_hat(n1, rank, n3);
    let mut rh = eye_hat(rank, n2, n3);
    let mut dh = eye_hat(rank, rank, n3);
    let mut fit_sq = f64::INFINITY;
    for _ in 0..max_iters {
        // l from the range of z * r^*.
        let mut zrt = CTensor3::zeros(n1, rank, n3);
        for k in 0..n3 {
            zrt.set_slice(k, &zh.slice(k).matmul(&rh.slice(k).conj_transpose()));
        }
        let (qh, _) = t_qr_fourier(&zrt);
        lh = qh;
        // r from the range of z^* * l, then d = l^* * z * r^*.
        let mut ztl = CTensor3::zeros(n2, rank, n3);
        for k in 0..n3 {
            ztl.set_slice(k, &zh.slice(k).conj_transpose().matmul(&lh.slice(k)));
        }
        let (qh2, _) = t_qr_fourier(&ztl);
        for k in 0..n3 {
            rh.set_slice(k, &qh2.slice(k).conj_transpose());
        }
        for k in 0..n3 {
            dh.set_slice(
                k,
                &lh.slice(k)
                    .conj_transpose()
                    .matmul(&zh.slice(k))
                    .matmul(&rh.slice(k).conj_transpose()),
            );
        }
        let recon = slice_product3(&lh, &dh, &rh);
        fit_sq = ct_sub_norm(zh, &recon).powi(2) / n3 as f64;
        if fit_sq <= eps {
            break;
        }
    }
    (lh, dh, rh, fit_sq)
}

/// Fit `z ~ l * d * r_fac` at the given rank by alternating tensor QR
/// updates, stopping when the squared Frobenius fit drops to `eps` or after
/// `max_iters` sweeps.
pub fn trifactor(z: &Tensor3, rank: usize, max_iters: usize, eps: f64) -> Result<TriFactor> {
    check_rank(rank, z.n1, z.n2)?;
    let zh = fft_mode3(z);
    let (lh, dh, rh, _) = trifactor_fourier(&zh, rank, max_iters, eps);
    Ok(TriFactor {
        l: ifft_mode3(&lh)?,
        d: ifft_mode3(&dh)?,
        r_fac: ifft_mode3(&rh)?,
        rank,
    })
}

/// Column-wise group soft-threshold on the core, applied per Fourier slice
/// exactly as the minimization prescribes: transform, scale every column of
/// every frontal slice by `max((|col| - tau) / |col|, 0)`, transform back.
pub fn l21_shrink_core(input: &ShrinkInput) -> Result<Tensor3> {
    assert!(input.tau > 0.0, "tau must be positive");
    let dh = fft_mode3(&input.d_t);
    let shrunk = shrink_core_hat(&dh, input.tau);
    ifft_mode3(&shrunk)
}

fn shrink_core_hat(dh: &CTensor3, tau: f64) -> CTensor3 {
    let (rows, cols, n3) = (dh.n1, dh.n2, dh.n3);
    let mut out = CTensor3::zeros(rows, cols, n3);
    for k in 0..n3 {
        let mut m = dh.slice(k);
        for j in 0..cols {
            let col = m.col_mut(j);
            let n = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let s = if n > tau { (n - tau) / n } else { 0.0 };
            for v in col.iter_mut() {
                *v *= s;
            }
        }
        out.set_slice(k, &m);
    }
    out
}

/// Tensor L2,1 proximal step via QR tri-factorization: each pass refits
/// `l, r_fac` to the current iterate, shrinks the core `l^* * x * r_fac^*`,
/// and recomposes. One pass is the default used by the solver.
pub fn tlnmtqr(x: &Tensor3, rank: usize, tau: f64, outer_iters: usize) -> Result<Tensor3> {
    check_rank(rank, x.n1, x.n2)?;
    assert!(tau > 0.0, "tau must be positive");
    assert!(outer_iters >= 1, "outer_iters must be positive");
    let xh = fft_mode3(x);
    let mut mh = xh.clone();
    for _ in 0..outer_iters {
        let (lh, _, rh, _) = trifactor_fourier(&mh, rank, TRIFACTOR_MAX_ITERS, TRIFACTOR_EPS);
        let mut dth = CTensor3::zeros(rank, rank, x.n3);
        for k in 0..x.n3 {
            dth.set_slice(
                k,
                &lh.slice(k)
                    .conj_transpose()
                    .matmul(&xh.slice(k))
                    .matmul(&rh.slice(k).conj_transpose()),
            );
        }
        let dsh = shrink_core_hat(&dth, tau);
        mh = slice_product3(&lh, &dsh, &rh);
    }
    ifft_mode3(&mh)
}

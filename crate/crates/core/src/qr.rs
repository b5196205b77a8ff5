//! Tensor QR factorization `a = q * r` under the t-product.
//!
//! Each Fourier-domain frontal slice gets an economy Householder QR; the
//! per-slice sign convention (nonnegative real diagonal of R) makes the
//! factorization deterministic and keeps the inverse transform real.

use crate::error::Result;
use crate::linalg::qr_econ;
use crate::tensor::{fft_mode3, ifft_mode3, CTensor3, Tensor3};

/// Result of [`t_qr`]: `q` is `n1 x s x n3` with `q^* * q = I`, `r` is
/// `s x n2 x n3`, `s = min(n1, n2)`.
#[derive(Debug, Clone)]
pub struct TQrResult {
    pub q: Tensor3,
    pub r: Tensor3,
}

pub fn t_qr(a: &Tensor3) -> Result<TQrResult> {
    let (qh, rh) = t_qr_fourier(&fft_mode3(a));
    Ok(TQrResult { q: ifft_mode3(&qh)?, r: ifft_mode3(&rh)? })
}

/// Fourier-domain slice-wise QR; shared with the tri-factorization loop so
/// it can stay in the transform domain across iterations.
pub(crate) fn t_qr_fourier(ah: &CTensor3) -> (CTensor3, CTensor3) {
    let (n1, n2, n3) = (ah.n1, ah.n2, ah.n3);
    let s = n1.min(n2);
    let mut qh = CTensor3::zeros(n1, s, n3);
    let mut rh = CTensor3::zeros(s, n2, n3);
    for k in 0..n3 {
        let (q, r) = qr_econ(&ah.slice(k));
        qh.set_slice(k, &q);
        rh.set_slice(k, &r);
    }
    (qh, rh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{bcirc_oracle, conj_transpose, norm, t_product, NormKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, n1: usize, n2: usize, n3: usize) -> Tensor3 {
        Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn check_factorization(a: &Tensor3) {
        let qr = t_qr(a).unwrap();
        let rec = t_product(&qr.q, &qr.r).unwrap();
        let err = norm(&rec.sub(a), NormKind::Frobenius);
        assert!(
            err <= 1e-10 * (1.0 + norm(a, NormKind::Frobenius)),
            "reconstruction error {err}"
        );
        let qtq = t_product(&conj_transpose(&qr.q), &qr.q).unwrap();
        let eye = Tensor3::identity(qtq.n1, qtq.n3);
        let orth = norm(&qtq.sub(&eye), NormKind::Frobenius);
        assert!(orth <= 1e-10, "orthogonality defect {orth}");
    }

    #[test]
    fn identity_factors_as_identity() {
        let eye = Tensor3::identity(4, 3);
        let qr = t_qr(&eye).unwrap();
        assert!(norm(&qr.q.sub(&eye), NormKind::Frobenius) < 1e-12);
        assert!(norm(&qr.r.sub(&eye), NormKind::Frobenius) < 1e-12);
    }

    #[test]
    fn n3_one_matches_matrix_qr() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_tensor(&mut rng, 5, 3, 1);
        let qr = t_qr(&a).unwrap();
        let (qm, rm) = crate::linalg::qr_econ(&crate::tensor::fft_mode3(&a).slice(0));
        for j in 0..3 {
            for i in 0..5 {
                assert!((qr.q[(i, j, 0)] - qm[(i, j)].re).abs() < 1e-12);
            }
            for i in 0..3 {
                assert!((qr.r[(i, j, 0)] - rm[(i, j)].re).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_6x4x3_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        check_factorization(&random_tensor(&mut rng, 6, 4, 3));
    }

    #[test]
    fn invariants_hold_across_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..25 {
            let n1 = rng.gen_range(1..=16);
            let n2 = rng.gen_range(1..=16);
            let n3 = rng.gen_range(1..=6);
            check_factorization(&random_tensor(&mut rng, n1, n2, n3));
        }
    }

    #[test]
    fn bcirc_of_q_has_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_tensor(&mut rng, 5, 3, 3);
        let qr = t_qr(&a).unwrap();
        let m = bcirc_oracle(&qr.q);
        let mt = m.transpose();
        let g = mt.matmul(&m);
        for j in 0..g.cols {
            for i in 0..g.rows {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-9);
            }
        }
    }
}

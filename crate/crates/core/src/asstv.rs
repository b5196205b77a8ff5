//! Circular difference operators along the three tensor axes, their
//! adjoints, Fourier symbols, and the asymmetric spatial-temporal TV norm.
//!
//! Periodic boundaries throughout: the background update divides by the
//! operators' Fourier symbols, which is exact only in the circular setting.

use num_complex::Complex64;

use crate::tensor::{CTensor3, Tensor3};

/// The three difference directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Along rows (first index).
    Horizontal,
    /// Along columns (second index).
    Vertical,
    /// Along frontal slices (third index).
    Temporal,
}

pub const AXES: [Axis; 3] = [Axis::Horizontal, Axis::Vertical, Axis::Temporal];

impl Axis {
    fn mode(self) -> usize {
        match self {
            Axis::Horizontal => 0,
            Axis::Vertical => 1,
            Axis::Temporal => 2,
        }
    }
}

/// Circular first difference along `axis`; the adjoint is the exact
/// transpose of the forward map (a negated backward difference).
pub fn diff(a: &Tensor3, axis: Axis, adjoint: bool) -> Tensor3 {
    let (n1, n2, n3) = a.shape();
    let n = [n1, n2, n3][axis.mode()];
    Tensor3::from_fn(n1, n2, n3, |i, j, k| {
        let cur = [i, j, k];
        let mut other = cur;
        other[axis.mode()] = if adjoint {
            (cur[axis.mode()] + n - 1) % n
        } else {
            (cur[axis.mode()] + 1) % n
        };
        let (oi, oj, ok) = (other[0], other[1], other[2]);
        a[(oi, oj, ok)] - a[(i, j, k)]
    })
}

/// `|D_h a|_1 + |D_v a|_1 + delta * |D_z a|_1`.
pub fn asstv_norm(a: &Tensor3, delta: f64) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    let l1 = |t: &Tensor3| t.data().iter().map(|v| v.abs()).sum::<f64>();
    l1(&diff(a, Axis::Horizontal, false))
        + l1(&diff(a, Axis::Vertical, false))
        + delta * l1(&diff(a, Axis::Temporal, false))
}

/// Per-axis 3-D Fourier multipliers of the circular difference operators.
#[derive(Debug, Clone)]
pub struct OperatorSpectrum {
    pub horizontal: CTensor3,
    pub vertical: CTensor3,
    pub temporal: CTensor3,
}

impl OperatorSpectrum {
    pub fn axis(&self, axis: Axis) -> &CTensor3 {
        match axis {
            Axis::Horizontal => &self.horizontal,
            Axis::Vertical => &self.vertical,
            Axis::Temporal => &self.temporal,
        }
    }

    /// `2 + sum_i |F(K_i)|^2`, the denominator grid of the background
    /// update; bounded below by 2.
    pub fn denominator(&self) -> Tensor3 {
        let (n1, n2, n3) = (self.horizontal.n1, self.horizontal.n2, self.horizontal.n3);
        Tensor3::from_fn(n1, n2, n3, |i, j, k| {
            2.0 + self.horizontal[(i, j, k)].norm_sqr()
                + self.vertical[(i, j, k)].norm_sqr()
                + self.temporal[(i, j, k)].norm_sqr()
        })
    }
}

/// Eigenvalue `exp(2 pi i k / n) - 1` of the forward circular difference on
/// each axis's frequency line, broadcast over the other two axes.
pub fn operator_spectrum(n1: usize, n2: usize, n3: usize) -> OperatorSpectrum {
    let eig = |n: usize, k: usize| -> Complex64 {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        Complex64::new(theta.cos() - 1.0, theta.sin())
    };
    let build = |axis: Axis| -> CTensor3 {
        let mut t = CTensor3::zeros(n1, n2, n3);
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    let freq = match axis {
                        Axis::Horizontal => eig(n1, i),
                        Axis::Vertical => eig(n2, j),
                        Axis::Temporal => eig(n3, k),
                    };
                    t[(i, j, k)] = freq;
                }
            }
        }
        t
    };
    OperatorSpectrum {
        horizontal: build(Axis::Horizontal),
        vertical: build(Axis::Vertical),
        temporal: build(Axis::Temporal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{fft3, norm, NormKind, Tensor3};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, n1: usize, n2: usize, n3: usize) -> Tensor3 {
        Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn diff_annihilates_constants() {
        let c = Tensor3::from_fn(3, 4, 2, |_, _, _| 1.7);
        for axis in AXES {
            assert_eq!(norm(&diff(&c, axis, false), NormKind::Frobenius), 0.0);
        }
    }

    #[test]
    fn diff_column_with_wrap() {
        let a = Tensor3::from_fn(3, 1, 1, |i, _, _| i as f64);
        let d = diff(&a, Axis::Horizontal, false);
        assert_eq!(d[(0, 0, 0)], 1.0);
        assert_eq!(d[(1, 0, 0)], 1.0);
        assert_eq!(d[(2, 0, 0)], -2.0);
    }

    #[test]
    fn adjoint_satisfies_inner_product_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for axis in AXES {
            let a = random_tensor(&mut rng, 5, 4, 3);
            let b = random_tensor(&mut rng, 5, 4, 3);
            let lhs = diff(&a, axis, false).dot(&b);
            let rhs = a.dot(&diff(&b, axis, true));
            assert!((lhs - rhs).abs() < 1e-12, "axis {axis:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn diff_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = random_tensor(&mut rng, 4, 4, 3);
        let b = random_tensor(&mut rng, 4, 4, 3);
        for axis in AXES {
            let lhs = diff(&a.add(&b), axis, false);
            let rhs = diff(&a, axis, false).add(&diff(&b, axis, false));
            assert_eq!(norm(&lhs.sub(&rhs), NormKind::Frobenius), 0.0);
        }
    }

    #[test]
    fn asstv_norm_closed_cases() {
        let c = Tensor3::from_fn(3, 3, 3, |_, _, _| 0.4);
        assert_eq!(asstv_norm(&c, 1.0), 0.0);
        let imp = Tensor3::from_fn(3, 3, 3, |i, j, k| {
            if (i, j, k) == (1, 1, 1) {
                1.0
            } else {
                0.0
            }
        });
        assert!((asstv_norm(&imp, 1.0) - 6.0).abs() < 1e-12);
        // delta -> 0 keeps only the spatial terms.
        let spatial = l1_of(&diff(&imp, Axis::Horizontal, false))
            + l1_of(&diff(&imp, Axis::Vertical, false));
        assert!((asstv_norm(&imp, 1e-300) - spatial).abs() < 1e-12);
    }

    fn l1_of(a: &Tensor3) -> f64 {
        norm(a, NormKind::L1)
    }

    #[test]
    fn asstv_norm_zero_only_for_constants() {
        let mut c = Tensor3::from_fn(3, 3, 2, |_, _, _| 0.4);
        assert_eq!(asstv_norm(&c, 0.7), 0.0);
        c[(1, 2, 0)] += 0.01;
        assert!(asstv_norm(&c, 0.7) > 0.0);
    }

    #[test]
    fn spectrum_matches_two_tap_kernel() {
        let spec = operator_spectrum(4, 3, 2);
        // n=4 along the horizontal axis: |lambda|^2 = (0, 2, 4, 2).
        let want = [0.0, 2.0, 4.0, 2.0];
        for i in 0..4 {
            let got = spec.horizontal[(i, 0, 0)].norm_sqr();
            assert!((got - want[i]).abs() < 1e-12);
        }
        // Zero frequency is annihilated on every axis.
        for axis in AXES {
            assert!(spec.axis(axis)[(0, 0, 0)].norm() < 1e-15);
        }
        // Parseval on the kernel: sum of |lambda|^2 along one line = 2n.
        let total: f64 = (0..4).map(|i| spec.horizontal[(i, 0, 0)].norm_sqr()).sum();
        assert!((total - 8.0).abs() < 1e-12);
    }

    #[test]
    fn unit_axis_has_zero_spectrum() {
        let spec = operator_spectrum(3, 3, 1);
        for j in 0..3 {
            for i in 0..3 {
                assert_eq!(spec.temporal[(i, j, 0)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn spectrum_diagonalizes_diff() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = random_tensor(&mut rng, 8, 7, 5);
        let ah = fft3(&a);
        let spec = operator_spectrum(8, 7, 5);
        for axis in AXES {
            let dh = fft3(&diff(&a, axis, false));
            let lam = spec.axis(axis);
            let mut err: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for k in 0..5 {
                for j in 0..7 {
                    for i in 0..8 {
                        let want = lam[(i, j, k)] * ah[(i, j, k)];
                        err = err.max((dh[(i, j, k)] - want).norm());
                        scale = scale.max(want.norm());
                    }
                }
            }
            assert!(err <= 1e-10 * scale.max(1.0), "axis {axis:?}: err {err}");
        }
    }

    #[test]
    fn denominator_is_at_least_two() {
        let den = operator_spectrum(4, 4, 3).denominator();
        for v in den.data() {
            assert!(*v >= 2.0 - 1e-15);
        }
    }
}

//! The full ADMM: alternating updates of the low-rank surrogate Z, the
//! background B, the sparse target T, the TV splits V1-V3, the noise N,
//! five multipliers, and the growing penalty mu.

use std::time::Instant;

use crate::asstv::{diff, operator_spectrum, Axis, OperatorSpectrum, AXES};
use crate::error::{Error, Result};
use crate::tensor::{fft3, ifft3, norm, NormKind, Tensor3};
use crate::tlnm::tlnmtqr;

/// All scalars of the solver.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Sparsity weight; derive from `h` via [`SolverParams::lambda_s_for`]
    /// when not set explicitly.
    pub lambda_s: Option<f64>,
    pub lambda_tv: f64,
    pub lambda3: f64,
    /// Temporal TV weight.
    pub delta: f64,
    pub mu0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub xi: f64,
    /// Tri-factorization rank for the Z update.
    pub r: usize,
    /// TLNMTQR outer passes per Z update.
    pub inner_iters: usize,
    pub max_outer_iters: usize,
    /// Sparsity tuning constant: lambda_s = h / sqrt(max(n1, n2) * l).
    pub h: f64,
    /// Frames per temporal window.
    pub l: usize,
    /// When false, the convergence residual drops the `+ y1/mu` term.
    pub residual_includes_multiplier: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            lambda_s: None,
            lambda_tv: 0.5,
            lambda3: 100.0,
            delta: 1.0,
            mu0: 0.005,
            rho: 1.5,
            mu_max: 1e7,
            xi: 1e-6,
            r: 180,
            inner_iters: 1,
            max_outer_iters: 500,
            h: 6.0,
            l: 3,
            residual_includes_multiplier: true,
        }
    }
}

impl SolverParams {
    /// Effective sparsity weight for an `n1 x n2` frame.
    pub fn lambda_s_for(&self, n1: usize, n2: usize) -> f64 {
        self.lambda_s
            .unwrap_or_else(|| self.h / ((n1.max(n2) * self.l) as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho <= 1.0 || self.mu0 >= self.mu_max {
            return Err(Error::InvalidConfig(
                "need rho > 1 and mu0 < mu_max".into(),
            ));
        }
        if self.mu0 <= 0.0 || self.xi <= 0.0 || self.lambda_tv <= 0.0 || self.lambda3 <= 0.0 {
            return Err(Error::InvalidConfig("scalar parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Mutable solver state; all tensors share the shape of the input K.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub b: Tensor3,
    pub t: Tensor3,
    pub n: Tensor3,
    pub z: Tensor3,
    pub v: [Tensor3; 3],
    pub y: [Tensor3; 5],
    pub mu: f64,
    pub k: usize,
    pub residual_history: Vec<f64>,
}

impl SolverState {
    pub fn new(shape: (usize, usize, usize), mu0: f64) -> Self {
        let (n1, n2, n3) = shape;
        let z = || Tensor3::zeros(n1, n2, n3);
        SolverState {
            b: z(),
            t: z(),
            n: z(),
            z: z(),
            v: [z(), z(), z()],
            y: [z(), z(), z(), z(), z()],
            mu: mu0,
            k: 0,
            residual_history: Vec::new(),
        }
    }
}

/// Final decomposition K ~ background + target + noise.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub background: Tensor3,
    pub target: Tensor3,
    pub noise: Tensor3,
    pub iterations: usize,
    pub final_residual: f64,
    pub wall_time_secs: f64,
}

fn soft_threshold(x: &Tensor3, level: f64) -> Tensor3 {
    x.map(|v| v.signum() * (v.abs() - level).max(0.0))
}

/// Z update: tensor L2,1 prox of `b - y2/mu` at threshold `1/mu`.
pub fn update_z(b: &Tensor3, y2: &Tensor3, mu: f64, p: &SolverParams) -> Result<Tensor3> {
    let target = b.zip(y2, |bv, yv| bv - yv / mu);
    tlnmtqr(&target, p.r, 1.0 / mu, p.inner_iters)
}

/// B update: one FFT-diagonalized linear solve of `(2I + Delta) B = RHS`.
pub fn update_b(
    state: &SolverState,
    k_tensor: &Tensor3,
    spectrum: &OperatorSpectrum,
) -> Result<Tensor3> {
    let mu = state.mu;
    // L^k = K - T - N + y1/mu + Z + y2/mu
    let mut rhs = Tensor3::from_fn(k_tensor.n1, k_tensor.n2, k_tensor.n3, |i, j, k| {
        k_tensor[(i, j, k)] - state.t[(i, j, k)] - state.n[(i, j, k)]
            + state.y[0][(i, j, k)] / mu
            + state.z[(i, j, k)]
            + state.y[1][(i, j, k)] / mu
    });
    for (idx, axis) in AXES.iter().enumerate() {
        let v_plus = state.v[idx].zip(&state.y[idx + 2], |v, y| v + y / mu);
        rhs = rhs.add(&diff(&v_plus, *axis, true));
    }
    let denom = spectrum.denominator();
    let mut rhs_hat = fft3(&rhs);
    for (val, d) in rhs_hat.data_mut().iter_mut().zip(denom.data().iter()) {
        *val /= *d;
    }
    ifft3(&rhs_hat)
}

/// T update: element-wise soft threshold of `K - B - N + y1/mu` at
/// `lambda_s / mu`.
pub fn update_t(
    k_tensor: &Tensor3,
    b: &Tensor3,
    n: &Tensor3,
    y1: &Tensor3,
    mu: f64,
    lambda_s: f64,
) -> Tensor3 {
    let arg = Tensor3::from_fn(k_tensor.n1, k_tensor.n2, k_tensor.n3, |i, j, k| {
        k_tensor[(i, j, k)] - b[(i, j, k)] - n[(i, j, k)] + y1[(i, j, k)] / mu
    });
    soft_threshold(&arg, lambda_s / mu)
}

/// V updates: soft threshold of `diff(b, axis) - y/mu`, with the temporal
/// threshold scaled by delta.
pub fn update_v(
    b: &Tensor3,
    y3: &Tensor3,
    y4: &Tensor3,
    y5: &Tensor3,
    mu: f64,
    lambda_tv: f64,
    delta: f64,
) -> [Tensor3; 3] {
    let mk = |axis: Axis, y: &Tensor3, level: f64| {
        let arg = diff(b, axis, false).zip(y, |d, yv| d - yv / mu);
        soft_threshold(&arg, level)
    };
    [
        mk(Axis::Horizontal, y3, lambda_tv / mu),
        mk(Axis::Vertical, y4, lambda_tv / mu),
        mk(Axis::Temporal, y5, delta * lambda_tv / mu),
    ]
}

/// N update: closed-form ridge step `(mu (K - B - T) + y1) / (mu + 2 lambda3)`.
pub fn update_n(
    k_tensor: &Tensor3,
    b: &Tensor3,
    t: &Tensor3,
    y1: &Tensor3,
    mu: f64,
    lambda3: f64,
) -> Tensor3 {
    Tensor3::from_fn(k_tensor.n1, k_tensor.n2, k_tensor.n3, |i, j, k| {
        (mu * (k_tensor[(i, j, k)] - b[(i, j, k)] - t[(i, j, k)]) + y1[(i, j, k)])
            / (mu + 2.0 * lambda3)
    })
}

/// Multiplier ascent for y1..y5 followed by the penalty growth
/// `mu <- min(rho mu, mu_max)`.
pub fn update_multipliers(state: &mut SolverState, k_tensor: &Tensor3, p: &SolverParams) {
    let mu = state.mu;
    let res1 = Tensor3::from_fn(k_tensor.n1, k_tensor.n2, k_tensor.n3, |i, j, k| {
        k_tensor[(i, j, k)] - state.b[(i, j, k)] - state.t[(i, j, k)] - state.n[(i, j, k)]
    });
    state.y[0] = state.y[0].zip(&res1, |y, r| y + mu * r);
    let res2 = state.z.sub(&state.b);
    state.y[1] = state.y[1].zip(&res2, |y, r| y + mu * r);
    for (idx, axis) in AXES.iter().enumerate() {
        let res = state.v[idx].sub(&diff(&state.b, *axis, false));
        state.y[idx + 2] = state.y[idx + 2].zip(&res, |y, r| y + mu * r);
    }
    state.mu = (p.rho * mu).min(p.mu_max);
}

fn convergence_residual(state: &SolverState, k_tensor: &Tensor3, k_norm_sq: f64, p: &SolverParams) -> f64 {
    let mu = state.mu;
    let r = Tensor3::from_fn(k_tensor.n1, k_tensor.n2, k_tensor.n3, |i, j, k| {
        let base =
            k_tensor[(i, j, k)] - state.b[(i, j, k)] - state.t[(i, j, k)] - state.n[(i, j, k)];
        if p.residual_includes_multiplier {
            base + state.y[0][(i, j, k)] / mu
        } else {
            base
        }
    });
    let num = norm(&r, NormKind::Frobenius).powi(2);
    if k_norm_sq > 0.0 {
        num / k_norm_sq
    } else {
        num
    }
}

/// Run the alternating scheme to convergence (relative residual `xi`) or
/// the iteration cap. Deterministic for fixed inputs and parameters.
pub fn solve(k_tensor: &Tensor3, p: &SolverParams) -> Result<Decomposition> {
    solve_with_state(k_tensor, p).map(|(dec, _)| dec)
}

/// Variant of [`solve`] that also returns the full state (for diagnostics
/// and tests that inspect the residual history).
pub fn solve_with_state(
    k_tensor: &Tensor3,
    p: &SolverParams,
) -> Result<(Decomposition, SolverState)> {
    p.validate()?;
    if !k_tensor.is_finite() {
        return Err(Error::NonFinite("input tensor"));
    }
    let start = Instant::now();
    let (n1, n2, n3) = k_tensor.shape();
    let lambda_s = p.lambda_s_for(n1, n2);
    let spectrum = operator_spectrum(n1, n2, n3);
    let k_norm_sq = norm(k_tensor, NormKind::Frobenius).powi(2);
    let mut state = SolverState::new((n1, n2, n3), p.mu0);
    let mut final_residual = f64::INFINITY;
    while state.k < p.max_outer_iters {
        state.z = update_z(&state.b, &state.y[1], state.mu, p)?;
        state.b = update_b(&state, k_tensor, &spectrum)?;
        state.t = update_t(k_tensor, &state.b, &state.n, &state.y[0], state.mu, lambda_s);
        state.v = update_v(
            &state.b,
            &state.y[2],
            &state.y[3],
            &state.y[4],
            state.mu,
            p.lambda_tv,
            p.delta,
        );
        state.n = update_n(k_tensor, &state.b, &state.t, &state.y[0], state.mu, p.lambda3);

        // Residual uses this sweep's y1 and mu, before the ascent step.
        let res = convergence_residual(&state, k_tensor, k_norm_sq, p);
        state.residual_history.push(res);
        final_residual = res;

        update_multipliers(&mut state, k_tensor, p);
        state.k += 1;

        if !(state.b.is_finite() && state.t.is_finite() && state.n.is_finite()) {
            return Err(Error::NonFinite("solver state"));
        }
        if res <= p.xi {
            break;
        }
    }
    let dec = Decomposition {
        background: state.b.clone(),
        target: state.t.clone(),
        noise: state.n.clone(),
        iterations: state.k,
        final_residual,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((dec, state))
}

//! Small-target detection in infrared image sequences by tensor
//! decomposition: each temporal window of frames is split into a low-rank
//! background, a sparse target component, and noise with an ADMM solver
//! that couples a tensor L2,1 penalty (minimized through a tensor-QR
//! tri-factorization) with an asymmetric spatial-temporal total-variation
//! regularizer.

pub mod admm;
pub mod asstv;
pub mod cli;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod qr;
pub mod sequence;
pub mod synth;
pub mod tensor;
pub mod tlnm;

pub use admm::{solve, Decomposition, SolverParams, SolverState};
pub use error::{Error, Result};
pub use tensor::{t_product, NormKind, Tensor3};

//! Low-rank tensor completion in the tensor-train (TT) format.
//!
//! The crate provides dense and TT tensor types, tangent-space geometry of the
//! fixed-rank TT manifold, a Riemannian conjugate-gradient completion solver
//! and a rank-adaptive outer loop that grows ranks along tangent-cone
//! directions and shrinks them by TT-rounding.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*F64` aliases
//! below name the usual choice.
//!
//! Mode, core and bond indices in the API are 0-based. Dense tensors are
//! stored column-major with the first index fastest, so every unfolding is a
//! reshape.

pub mod adaptive;
pub mod completion;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod sample;
mod scalar;
pub mod tangent;
pub mod tt;

pub use adaptive::{
    angle_lower_bound, baseline_random_increase, delta_rank_matrix, delta_rank_tt, estimate_tt_rank,
    estimated_rank, estimated_rank_scaled, increase_rank, overfit_ratio, rram, run_baseline, tt_round, OuterAction, OuterRecord,
    RramConfig, RramTrace,
};
pub use completion::{cg_solve, exact_step, objective, residual, riemannian_gradient, CgConfig, CgState, CgStop, CgTrace};
pub use dense::{contract, DenseTensor, Tensor3, DEFAULT_DENSE_CAP};
pub use error::{Result, TtError};
pub use linalg::{truncated_svd, SingularSpectrum, TruncatedSvd};
pub use sample::SampleSet;
pub use scalar::Scalar;
pub use tangent::{
    project_subcone, project_tangent, retract_fixed_rank, retract_increase, subcone_matrix, tangent_to_tt, Ambient,
    ConeDirection, TangentFrame, TangentVector,
};
pub use tt::{OrthoFactors, Ortho, TtTensor};

pub type DenseTensorF64 = DenseTensor<f64>;
pub type DenseTensorF32 = DenseTensor<f32>;
pub type TtTensorF64 = TtTensor<f64>;
pub type TtTensorF32 = TtTensor<f32>;
pub type SampleSetF64 = SampleSet<f64>;
pub type TangentVectorF64 = TangentVector<f64>;
pub type RramConfigF64 = RramConfig<f64>;
pub type CgConfigF64 = CgConfig<f64>;

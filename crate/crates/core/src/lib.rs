//! Softmax optimization workbench.
//!
//! The crate provides softmax kernels ordered along an optimization ladder
//! (a clipped reference, an inference-only reference, a batched-exp
//! decomposition and lane-vectorized variants), together with the tools used
//! to measure them:
//!
//! - [`tensor`]: 32-byte aligned row-major `f32` matrices and deterministic fills.
//! - [`kernels`]: scalar component operations and the [`KernelVariant`] ladder.
//! - [`simd_reduce`]: W-lane max/sum/subtract/exp kernels.
//! - [`profiler`]: timers, per-phase timing and profiling reports.
//! - [`bound_probe`]: comparison of a kernel against a same-size buffer copy.
//! - [`bench`]: the sweep/verify/profile/probe drivers behind the CLI.

pub mod bench;
pub mod bound_probe;
mod error;
pub mod kernels;
pub mod oracle;
pub mod profiler;
pub mod simd_reduce;
pub mod tensor;

pub use error::{Error, Result};
pub use kernels::KernelVariant;
pub use tensor::{FillSpec, Matrix2D};

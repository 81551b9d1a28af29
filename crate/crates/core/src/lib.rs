//! Robust kernel clustering with outlier detection.
//!
//! The pipeline denoises a Gaussian kernel matrix by either rounding it
//! against an offset (a closed-form box-constrained relaxation) or solving
//! the PSD-constrained relaxation with ADMM, recovers labels by spectral
//! rounding of the denoised matrix, and flags outliers by degree
//! thresholding. Generators for the synthetic benchmark families, accuracy
//! metrics under optimal label matching, and eigengap-based cluster-count
//! estimation round out the toolkit.
//!
//! All numerics are generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); the `*64` aliases below fix the common choice.
//!
//! ```
//! use robustkc::prelude::*;
//!
//! let ds = robustkc::synth::gen_preset::<f64>(Preset::Fig1, 7);
//! let cfg = PipelineConfig::new(ClusterCount::Fixed(2), DenoiseMethod::Lp).with_seed(7);
//! let out = robustkc::pipeline::run(&ds.data, &cfg).unwrap();
//! let report = robustkc::pipeline::evaluate_run(&out, &ds).unwrap();
//! assert!(report.inlier_accuracy > 0.95);
//! ```

pub mod denoise;
pub mod dimred;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod mat;
pub mod metrics;
pub mod modelselect;
pub mod outlier;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Common imports for library users.
pub mod prelude {
    pub use crate::denoise::{AdmmConfig, SolveDiagnostics};
    pub use crate::error::{Error, Result};
    pub use crate::kernel::ParamConfig;
    pub use crate::mat::Mat;
    pub use crate::metrics::EvalReport;
    pub use crate::outlier::{OutlierConfig, OutlierMode};
    pub use crate::pipeline::{ClusterCount, PipelineConfig, RunOutput};
    pub use crate::scalar::Scalar;
    pub use crate::spectral::KMeansConfig;
    pub use crate::synth::Preset;
    pub use crate::types::{
        ClusterResult, DataMatrix, DenoiseMethod, DenoisedMatrix, KernelMatrix, Label,
        MixtureSpec, OutlierModel,
    };
}

/// `f64` instantiations of the core types.
pub type DataMatrix64 = types::DataMatrix<f64>;
pub type KernelMatrix64 = types::KernelMatrix<f64>;
pub type DenoisedMatrix64 = types::DenoisedMatrix<f64>;
pub type ClusterResult64 = types::ClusterResult<f64>;
pub type MixtureSpec64 = types::MixtureSpec<f64>;
pub type PipelineConfig64 = pipeline::PipelineConfig<f64>;
pub type RunOutput64 = pipeline::RunOutput<f64>;
pub type Mat64 = mat::Mat<f64>;

/// `f32` instantiations, for memory-bound workloads.
pub type DataMatrix32 = types::DataMatrix<f32>;
pub type KernelMatrix32 = types::KernelMatrix<f32>;
pub type DenoisedMatrix32 = types::DenoisedMatrix<f32>;
pub type Mat32 = mat::Mat<f32>;

//! Weakly-supervised ordinal support vector machine (WSO-SVM) toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`features`] turns 8x8 windows of a multi-contrast image stack into the
//!   56-per-contrast statistical / GLCM / Gabor feature vector.
//! * [`kernels`] provides the linear and Gaussian kernels and Gram assembly.
//! * [`qp`] solves the box- and linearly-constrained dual quadratic program
//!   and certifies its answers with KKT residuals.
//! * [`wso`] assembles the dual from biopsy, unlabeled tumoral and normal
//!   samples, trains the model and applies the three-class ordinal rule.
//! * [`harness`] runs stratified repeated cross-validation, the two-stage
//!   `C1`/`C2` search, metrics and the one-sided rank-sum test.
//! * [`explain`] computes Shapley attributions per contrast and per feature.
//! * [`phantom`] synthesises multi-contrast stacks with planted gene fields
//!   and implements the sample-selection policy.
//! * [`maps`] produces stride-1 sliding-window prediction maps.
//! * [`io`] holds the on-disk formats shared by the command-line tool.

pub mod explain;
pub mod features;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod maps;
pub mod phantom;
pub mod qp;
pub mod rng;
pub mod wso;

pub use features::{FeatureLayout, FeatureVector, WINDOW_SIZE};
pub use kernels::{KernelChoice, KernelSpec, Standardizer};
pub use maps::{JointMap, PredictionMap, Proportions};
pub use phantom::{ContrastStack, PhantomConfig, Plane};
pub use qp::{DualSolution, KktReport, QpInstance, SolverOptions};
pub use rng::SeedTree;
pub use wso::{ClassLabel, TrainParams, TrainedModel, TrainingSet};

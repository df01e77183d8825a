//! Numerical verification toolkit for distributional geometry on 2D grids.
//!
//! The crate turns low-regularity geometric identities into executable
//! checks on synthetic surfaces: the very weak Hessian determinant and its
//! Monge-Ampère measure, distributional Gaussian curvature of C^1 metrics,
//! Brouwer degrees of gradient maps, mollification commutator rates, and
//! Gauss-map extrinsic curvature, all discretized on uniform square grids.
//!
//! Everything is pure and deterministic: fields are immutable after
//! construction, test functions are analytic objects, and hot kernels are
//! data-parallel over nodes.

pub mod curvature;
pub mod degree;
pub mod diffeo;
pub mod error;
pub mod fields;
pub mod generators;
pub mod mollifier;
pub mod monge_ampere;
pub mod weak_hessian;

pub use degree::{DegreeMap, DomainU, Shape};
pub use diffeo::Diffeo2D;
pub use error::{Error, Result};
pub use fields::{
    Grid2D, Rect, ScalarField2D, SymMatrixField2D, TestField, TestFunction, VectorField2D,
};
pub use generators::{generate, Generated, GeneratorKind, GeneratorSpec};
pub use mollifier::{dyadic_ladder, mollify, MollifierKernel, RateFit};
pub use weak_hessian::{det_hessian_pairing, DetHessianPairer, DistributionPairing};
